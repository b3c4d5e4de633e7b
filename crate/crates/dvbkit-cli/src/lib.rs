//! Suite dispatch, constructors and report assembly behind the `dvbkit`
//! binary. Everything here is deterministic in the instance and the flags.

use std::fmt::Write as _;

use dvbkit::bundles::check_lie_algebroid;
use dvbkit::examples::{basic_tworep, pontryagin_pairing_check, pontryagin_pairing_check_with, DorfmanConnection};
use dvbkit::functors::{geometrize, roundtrip_check, RoundtripInput};
use dvbkit::gen::{
    random_algebroid, random_chart_data, random_involutive_dvb, random_metric_dvb, random_connection, random_metric, random_metric_connection,
    random_skew_dull, random_tworep, random_twist, AlgebroidKind, GenParams,
};
use dvbkit::io::{emit_instance, parse_instance, DorfmanInstance, Instance, Kind};
use dvbkit::metric::{
    involutive_to_metric, lambda_of_splitting, metric_to_involutive, pullback_by_involution, d_layout, symmetrize_splitting,
    InvolutiveDVB, MetricDVB,
};
use dvbkit::poisson::{
    check_graded_axioms, is_symplectic, poisson_roundtrip, symplectic_from_metric_bundle, PoissonAxiom, PoissonStructure2,
    RoundtripInstance,
};
use dvbkit::poly::{seeded_rng, Poly};
use dvbkit::report::{Check, Report};
use dvbkit::tworep::{
    adjoint_rep, check_tworep, direct_sum_double, dualize_rep, realize_vb_algebroid, selfdual_report, twist, RepAxiom,
    TwoRep,
};
use serde::Serialize;

pub const REPORT_SCHEMA: &str = "dvbkit-report/1";

/// Errors that map to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input<E: std::fmt::Display>(e: E) -> InputError {
    InputError(e.to_string())
}

/// Flags shared by the checking commands.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub suite: Option<String>,
    pub seed: u64,
    pub samples: usize,
    pub degree_cap: u32,
    pub mutate: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { suite: None, seed: 42, samples: 25, degree_cap: 4, mutate: None }
    }
}

/// The structured report written by `--report`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub kind: String,
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    pub degree_cap: u32,
    pub mutation: Option<String>,
    pub verdict: &'static str,
    pub total: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl RunReport {
    fn new(command: &str, kind: Kind, suite: &str, opts: &RunOptions, mut report: Report) -> Self {
        report.locate_witnesses(opts.seed, opts.samples);
        let failed = report.failures().count();
        RunReport {
            schema: REPORT_SCHEMA,
            command: command.into(),
            kind: kind.name().into(),
            suite: suite.into(),
            seed: opts.seed,
            samples: opts.samples,
            degree_cap: opts.degree_cap,
            mutation: opts.mutate.clone(),
            verdict: if failed == 0 { "pass" } else { "fail" },
            total: report.checks.len(),
            failed,
            checks: report.checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Human-readable summary: failing checks in full, then the verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            if c.passed {
                continue;
            }
            let _ = write!(out, "FAIL {}", c.name);
            if let Some(r) = &c.residual {
                let _ = write!(out, "  residual: {r}");
            }
            if let Some(w) = &c.witness {
                let _ = write!(out, "  witness: ({})", w.join(", "));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{} {} [{}]: {} checks, {} failed -> {}",
            self.command,
            self.kind,
            self.suite,
            self.total,
            self.failed,
            self.verdict.to_uppercase()
        );
        out
    }
}

/// Suites available for a kind; the first is the default.
pub fn suites(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::LieAlgebroid => &["axioms"],
        Kind::Tworep => &["axioms", "selfdual", "realization", "poisson", "roundtrip"],
        Kind::MetricDvb => &["axioms", "symmetrize", "roundtrip"],
        Kind::InvolutiveDvb => &["axioms", "roundtrip"],
        Kind::TwoManAtlas => &["axioms", "roundtrip"],
        Kind::Dorfman => &["axioms", "pairing", "basic"],
        Kind::Poisson2 => &["axioms", "symplectic", "roundtrip"],
    }
}

/// Mutation names accepted by `--mutate` for a kind.
pub fn mutations(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Tworep => &["partial", "connection", "curvature"],
        Kind::TwoManAtlas => &["rho"],
        Kind::Dorfman => &["symmetric"],
        Kind::Poisson2 => &["partial-symmetry", "connection-duality", "curvature-skew"],
        _ => &[],
    }
}

/// A possibly mutated instance. Mutated Poisson structures and dull
/// brackets cannot be re-validated, so they travel separately.
enum Prepared {
    Plain(Instance),
    Poisson(PoissonStructure2),
    Dorfman { inst: DorfmanInstance, mutated: DorfmanConnection },
}

fn prepare(inst: Instance, opts: &RunOptions) -> Result<Prepared, InputError> {
    let kind = inst.kind();
    let inst = match inst {
        Instance::Poisson2(p) => Instance::Poisson2(p.with_cap(opts.degree_cap)),
        other => other,
    };
    let Some(m) = opts.mutate.as_deref() else {
        return Ok(Prepared::Plain(inst));
    };
    if !mutations(kind).contains(&m) {
        return Err(InputError(format!(
            "mutation `{m}` is not available for {kind} (choose from: {})",
            mutations(kind).join(", ")
        )));
    }
    let no_room = || InputError(format!("instance has no room for mutation `{m}`"));
    Ok(match inst {
        Instance::TwoRep(r) => {
            let axiom = match m {
                "partial" => RepAxiom::Partial,
                "connection" => RepAxiom::Connection,
                _ => RepAxiom::Curvature,
            };
            if r.rank() == 0 || r.e0() == 0 || r.e1() == 0 || (axiom == RepAxiom::Curvature && r.rank() < 2) {
                return Err(no_room());
            }
            Prepared::Plain(Instance::TwoRep(r.mutate(axiom)))
        }
        Instance::TwoManAtlas(t) => Prepared::Plain(Instance::TwoManAtlas(t.perturb_rho().ok_or_else(no_room)?)),
        Instance::Dorfman(d) => {
            let bad = d.delta.to_dull().with_symmetric_defect().ok_or_else(no_room)?.to_dorfman();
            Prepared::Dorfman { inst: d, mutated: bad }
        }
        Instance::Poisson2(p) => {
            let axiom = match m {
                "partial-symmetry" => PoissonAxiom::PartialSymmetry,
                "connection-duality" => PoissonAxiom::ConnectionDuality,
                _ => PoissonAxiom::CurvatureSkew,
            };
            Prepared::Poisson(p.mutate(axiom).ok_or_else(no_room)?)
        }
        _ => unreachable!("mutation lists cover the remaining kinds"),
    })
}

fn metric_axioms(m: &MetricDVB) -> Report {
    let mut out = Report::new("metric-dvb");
    out.flag("nondegenerate", m.is_nondegenerate(), None);
    for (j, l) in m.lambda.iter().enumerate() {
        out.flag(format!("lambda-symmetric[{j}]"), l.is_symmetric(), None);
    }
    out
}

fn metric_roundtrip(m: &MetricDVB) -> Result<Report, InputError> {
    let mut out = Report::new("duality-roundtrip");
    let back = involutive_to_metric(&metric_to_involutive(m).map_err(input)?).map_err(input)?;
    for (j, (a, b)) in m.lambda.iter().zip(&back.lambda).enumerate() {
        out.matrix_residual(format!("lambda[{j}]"), &(a - b));
    }
    Ok(out)
}

fn involutive_axioms(d: &InvolutiveDVB) -> Report {
    let mut out = Report::new("involutive-dvb");
    let lay = d_layout(d.n_vars(), d.q_rank(), d.b_rank());
    for z in 0..lay.total() {
        let v = Poly::var(lay.total(), z);
        out.residual(format!("involution-squared(z{z})"), &(pullback_by_involution(d, &pullback_by_involution(d, &v)) - &v));
    }
    for (j, k) in d.kappa.iter().enumerate() {
        out.flag(format!("kappa-symmetric[{j}]"), k.is_symmetric(), None);
    }
    out
}

fn involutive_roundtrip(d: &InvolutiveDVB) -> Result<Report, InputError> {
    let mut out = Report::new("duality-roundtrip");
    let back = metric_to_involutive(&involutive_to_metric(d).map_err(input)?).map_err(input)?;
    for (j, (a, b)) in d.kappa.iter().zip(&back.kappa).enumerate() {
        out.matrix_residual(format!("kappa[{j}]"), &(a - b));
    }
    Ok(out)
}

fn tworep_roundtrip(r: &TwoRep, seed: u64) -> Report {
    let mut out = Report::new("tworep-roundtrip");
    let dd = dualize_rep(&dualize_rep(r));
    out.flag("dual-dual", dd == *r, None);
    let mut rng = seeded_rng(seed);
    let phi = random_twist(&mut rng, r, GenParams { n: r.n_vars(), ..GenParams::default() });
    let back = twist(&twist(r, &phi), &phi.neg());
    out.flag("twist-untwist", back == *r, None);
    out
}

fn poisson_of(r: &TwoRep, cap: u32) -> Result<PoissonStructure2, InputError> {
    Ok(PoissonStructure2::new(r.clone()).map_err(input)?.with_cap(cap))
}

fn poisson_suite(p: &PoissonStructure2, suite: &str) -> Result<Report, InputError> {
    Ok(match suite {
        "axioms" => check_graded_axioms(p),
        "symplectic" => {
            let mut out = Report::new("symplectic");
            out.flag("symplectic", is_symplectic(p), None);
            out
        }
        _ => poisson_roundtrip(&RoundtripInstance::Algebraic(p.clone())).map_err(input)?,
    })
}

fn run_suite(prepared: &Prepared, suite: &str, opts: &RunOptions) -> Result<Report, InputError> {
    Ok(match prepared {
        Prepared::Poisson(p) => poisson_suite(p, suite)?,
        Prepared::Dorfman { inst, mutated } => match suite {
            "axioms" => mutated.axiom_report(),
            "pairing" => pontryagin_pairing_check_with(&inst.delta, &mutated.to_dull()),
            _ => basic_report(inst.algebroid.as_ref(), mutated)?,
        },
        Prepared::Plain(inst) => match (inst, suite) {
            (Instance::LieAlgebroid(a), _) => check_lie_algebroid(a),
            (Instance::TwoRep(r), "axioms") => check_tworep(r),
            (Instance::TwoRep(r), "selfdual") => selfdual_report(r).map_err(input)?,
            (Instance::TwoRep(r), "realization") => realize_vb_algebroid(r).jacobi_report(),
            (Instance::TwoRep(r), "poisson") => check_graded_axioms(&poisson_of(r, opts.degree_cap)?),
            (Instance::TwoRep(r), _) => tworep_roundtrip(r, opts.seed),
            (Instance::MetricDvb(m), "axioms") => metric_axioms(m),
            (Instance::MetricDvb(m), "symmetrize") => {
                let mut out = Report::new("symmetrize");
                for (j, l) in lambda_of_splitting(m, &symmetrize_splitting(m)).iter().enumerate() {
                    out.matrix_residual(format!("lambda'[{j}]"), l);
                }
                out
            }
            (Instance::MetricDvb(m), _) => metric_roundtrip(m)?,
            (Instance::InvolutiveDvb(d), "axioms") => involutive_axioms(d),
            (Instance::InvolutiveDvb(d), _) => involutive_roundtrip(d)?,
            (Instance::TwoManAtlas(t), "axioms") => {
                let mut out = t.cocycle_report().map_err(input)?;
                if out.passed() {
                    out.absorb("geometrize/", geometrize(t).map_err(input)?.report);
                }
                out
            }
            (Instance::TwoManAtlas(t), _) => roundtrip_check(&RoundtripInput::Chart(t.clone())).map_err(input)?,
            (Instance::Dorfman(d), "axioms") => d.delta.axiom_report(),
            (Instance::Dorfman(d), "pairing") => pontryagin_pairing_check(&d.delta),
            (Instance::Dorfman(d), _) => basic_report(d.algebroid.as_ref(), &d.delta)?,
            (Instance::Poisson2(p), s) => poisson_suite(p, s)?,
        },
    })
}

fn basic_report(alg: Option<&dvbkit::bundles::LieAlgebroidModel>, delta: &DorfmanConnection) -> Result<Report, InputError> {
    let alg = alg.ok_or_else(|| InputError("the basic suite needs an `algebroid` in the dorfman payload".into()))?;
    let rep = basic_tworep(alg, delta).map_err(input)?;
    let mut out = Report::new("basic");
    out.absorb("rep/", check_tworep(&rep));
    out.absorb("self-dual/", selfdual_report(&rep).map_err(input)?);
    Ok(out)
}

fn resolve_suite(kind: Kind, requested: Option<&str>) -> Result<&'static str, InputError> {
    let list = suites(kind);
    match requested {
        None => Ok(list[0]),
        Some(s) => list
            .iter()
            .copied()
            .find(|&x| x == s)
            .ok_or_else(|| InputError(format!("suite `{s}` does not apply to {kind} (choose from: {})", list.join(", ")))),
    }
}

/// `verify`: one suite on one instance.
pub fn verify(text: &str, opts: &RunOptions) -> Result<RunReport, InputError> {
    let inst = parse_instance(text).map_err(input)?;
    let kind = inst.kind();
    let suite = resolve_suite(kind, opts.suite.as_deref())?;
    let prepared = prepare(inst, opts)?;
    let report = run_suite(&prepared, suite, opts)?;
    Ok(RunReport::new("verify", kind, suite, opts, report))
}

/// `roundtrip`: the serializer identity plus the kind's round-trip suite
/// where it has one.
pub fn roundtrip(text: &str, opts: &RunOptions) -> Result<RunReport, InputError> {
    let inst = parse_instance(text).map_err(input)?;
    let kind = inst.kind();
    let mut report = Report::new("roundtrip");
    let emitted = emit_instance(&inst);
    match parse_instance(&emitted) {
        Ok(back) => {
            report.flag("serializer", back == inst, (back != inst).then(|| "re-parsed instance differs".to_string()));
            report.flag("serializer-stable", emit_instance(&back) == emitted, None);
        }
        Err(e) => report.flag("serializer", false, Some(e.to_string())),
    }
    let suite = if suites(kind).contains(&"roundtrip") { "roundtrip" } else { "serializer" };
    if suite == "roundtrip" {
        let prepared = prepare(inst, &RunOptions { mutate: None, ..opts.clone() })?;
        report.absorb("", run_suite(&prepared, "roundtrip", opts)?);
    }
    Ok(RunReport::new("roundtrip", kind, suite, &RunOptions { mutate: None, ..opts.clone() }, report))
}

/// Constructors offered by `build`.
pub const CONSTRUCTORS: [&str; 10] = [
    "random",
    "adjoint-rep",
    "double",
    "dualize",
    "poisson",
    "basic",
    "to-involutive",
    "to-metric",
    "symmetrize",
    "cotangent",
];

/// Options for `build`.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub constructor: String,
    pub input: Option<String>,
    pub kind: Option<String>,
    pub algebroid: String,
    pub seed: u64,
}

fn algebroid_kind(name: &str) -> Result<AlgebroidKind, InputError> {
    Ok(match name {
        "tangent" => AlgebroidKind::Tangent,
        "abelian" => AlgebroidKind::Abelian,
        "affine" => AlgebroidKind::Affine,
        "sl2" => AlgebroidKind::Sl2,
        other => return Err(InputError(format!("unknown algebroid `{other}` (tangent, abelian, affine, sl2)"))),
    })
}

fn kind_named(name: &str) -> Result<Kind, InputError> {
    dvbkit::io::KINDS
        .iter()
        .copied()
        .find(|k| k.name() == name)
        .ok_or_else(|| InputError(format!("unknown kind `{name}`")))
}

fn random_instance(kind: Kind, alg: AlgebroidKind, seed: u64) -> Result<Instance, InputError> {
    let mut rng = seeded_rng(seed);
    let p = GenParams::default();
    Ok(match kind {
        Kind::LieAlgebroid => Instance::LieAlgebroid(random_algebroid(&mut rng, alg, p)),
        Kind::Tworep => Instance::TwoRep(random_tworep(&mut rng, alg, p)),
        Kind::MetricDvb => {
            Instance::MetricDvb(random_metric_dvb(&mut rng, 2, 2, p))
        }
        Kind::InvolutiveDvb => {
            Instance::InvolutiveDvb(random_involutive_dvb(&mut rng, 2, 2, p))
        }
        Kind::TwoManAtlas => Instance::TwoManAtlas(random_chart_data(&mut rng, 3, 2, 2, p)),
        Kind::Dorfman => {
            let a = random_algebroid(&mut rng, alg, p);
            let delta = random_skew_dull(&mut rng, a.n_vars(), a.rank(), p).to_dorfman();
            Instance::Dorfman(DorfmanInstance { delta, algebroid: Some(a) })
        }
        Kind::Poisson2 => {
            let r = random_tworep(&mut rng, alg, p);
            Instance::Poisson2(PoissonStructure2::new(direct_sum_double(&r)).map_err(input)?)
        }
    })
}

/// `build`: runs a constructor and returns the resulting instance document.
pub fn build(opts: &BuildOptions) -> Result<String, InputError> {
    let alg = algebroid_kind(&opts.algebroid)?;
    let need_input = || -> Result<Instance, InputError> {
        let text = opts.input.as_deref().ok_or_else(|| InputError(format!("`{}` needs an input instance", opts.constructor)))?;
        parse_instance(text).map_err(input)
    };
    let wrong = |inst: &Instance, want: Kind| InputError(format!("`{}` expects a {want} instance, got {}", opts.constructor, inst.kind()));
    let out = match opts.constructor.as_str() {
        "random" => {
            let kind = kind_named(opts.kind.as_deref().ok_or_else(|| InputError("`random` needs --kind".into()))?)?;
            random_instance(kind, alg, opts.seed)?
        }
        "adjoint-rep" => {
            let mut rng = seeded_rng(opts.seed);
            let p = GenParams::default();
            let a = random_algebroid(&mut rng, alg, p);
            let conn = random_connection(&mut rng, a.rank(), a.n_vars(), p);
            Instance::TwoRep(adjoint_rep(&a, &conn).map_err(input)?)
        }
        "cotangent" => {
            let mut rng = seeded_rng(opts.seed);
            let p = GenParams::default();
            let g = random_metric(&mut rng, 2, p);
            let conn = random_metric_connection(&mut rng, &g, p);
            Instance::Poisson2(symplectic_from_metric_bundle(&g, &conn).map_err(input)?)
        }
        "double" | "dualize" | "poisson" => match need_input()? {
            Instance::TwoRep(r) => match opts.constructor.as_str() {
                "double" => Instance::TwoRep(direct_sum_double(&r)),
                "dualize" => Instance::TwoRep(dualize_rep(&r)),
                _ => Instance::Poisson2(PoissonStructure2::new(r).map_err(input)?),
            },
            other => return Err(wrong(&other, Kind::Tworep)),
        },
        "basic" => match need_input()? {
            Instance::Dorfman(d) => {
                let a = d.algebroid.as_ref().ok_or_else(|| InputError("the dorfman payload has no `algebroid`".into()))?;
                Instance::TwoRep(basic_tworep(a, &d.delta).map_err(input)?)
            }
            other => return Err(wrong(&other, Kind::Dorfman)),
        },
        "to-involutive" | "symmetrize" => match need_input()? {
            Instance::MetricDvb(m) if opts.constructor == "symmetrize" => Instance::MetricDvb(m.change_splitting(&symmetrize_splitting(&m))),
            Instance::MetricDvb(m) => Instance::InvolutiveDvb(metric_to_involutive(&m).map_err(input)?),
            other => return Err(wrong(&other, Kind::MetricDvb)),
        },
        "to-metric" => match need_input()? {
            Instance::InvolutiveDvb(d) => Instance::MetricDvb(involutive_to_metric(&d).map_err(input)?),
            other => return Err(wrong(&other, Kind::InvolutiveDvb)),
        },
        other => {
            return Err(InputError(format!("unknown constructor `{other}` (choose from: {})", CONSTRUCTORS.join(", "))));
        }
    };
    Ok(emit_instance(&out))
}
