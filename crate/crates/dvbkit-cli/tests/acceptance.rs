//! Acceptance run: ten criteria, one PASS/FAIL line each. Every check is an
//! exact symbolic comparison; a criterion that panics counts as failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dvbkit::bundles::{Chart, LieAlgebroidModel};
use dvbkit::examples::{
    basic_tworep, cotangent_involution_check, pontryagin_pairing_check, symmetrized_tangent_connection, tangent_double,
};
use dvbkit::functors::{geometrize, roundtrip_check, RoundtripInput};
use dvbkit::gen::{self, AlgebroidKind, GenParams, ALGEBROID_KINDS};
use dvbkit::io::{emit_instance, parse_instance, KINDS};
use dvbkit::metric::{involutive_to_metric, lambda_of_splitting, metric_to_involutive, symmetrize_splitting};
use dvbkit::poisson::{
    check_graded_axioms, is_symplectic, poisson_roundtrip, symplectic_from_metric_bundle, PoissonAxiom, PoissonStructure2,
    RoundtripInstance,
};
use dvbkit::poly::{seeded_rng, PolyMatrix};
use dvbkit::tworep::{
    adjoint_rep, adjoint_twist, check_tworep, direct_sum_double, is_selfdual, realize_vb_algebroid, selfdual_report, twist,
    RepAxiom, TwoRep,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const SMALL: GenParams = GenParams { n: 2, degree: 1, terms: 2 };

fn kind(i: usize) -> AlgebroidKind {
    ALGEBROID_KINDS[i % ALGEBROID_KINDS.len()]
}

/// Families with a nonzero anchor. Over the abelian family the adjoint rep is
/// the zero rep, where every `∂` satisfies the axioms, so a `∂` mutation
/// breaks nothing there.
const ANCHORED: [AlgebroidKind; 3] = [AlgebroidKind::Tangent, AlgebroidKind::Affine, AlgebroidKind::Sl2];

fn anchored(i: usize) -> AlgebroidKind {
    ANCHORED[i % ANCHORED.len()]
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("took {took:.1?}, limit {limit:?}"));
    }
    Ok(took)
}

fn duality_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(1001);
    for i in 0..50 {
        let q = rng.gen_range(1..=3);
        let b = rng.gen_range(1..=3);
        let p = GenParams { n: rng.gen_range(0..=2), degree: 2, terms: 3 };
        let m = gen::random_metric_dvb(&mut rng, q, b, p);
        let back = involutive_to_metric(&metric_to_involutive(&m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure!(back == m, "instance {i}: metric data changed");
        let d = gen::random_involutive_dvb(&mut rng, q, b, p);
        let back = metric_to_involutive(&involutive_to_metric(&d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure!(back == d, "instance {i}: involutive data changed");
    }
    let took = within(start, Duration::from_secs(30))?;
    Ok(format!("50 instances both ways in {took:.2?}"))
}

fn splitting_theorem() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(1002);
    let mut residual_checks = 0;
    for i in 0..25 {
        let rep = gen::random_tworep(&mut rng, anchored(i), SMALL);
        let report = realize_vb_algebroid(&rep).jacobi_report();
        ensure!(report.passed(), "instance {i}: {:?}", report.failed_names());
        residual_checks += report.checks.len();
        for axiom in [RepAxiom::Partial, RepAxiom::Connection, RepAxiom::Curvature] {
            let bad = realize_vb_algebroid(&rep.mutate(axiom)).jacobi_report();
            ensure!(!bad.failed_names().is_empty(), "instance {i}: {axiom:?} mutation went unnoticed");
        }
    }
    // degenerate family: both sides must still agree
    let zero = gen::random_tworep(&mut rng, AlgebroidKind::Abelian, SMALL);
    for axiom in [RepAxiom::Partial, RepAxiom::Connection, RepAxiom::Curvature] {
        let bad = zero.mutate(axiom);
        let (a, b) = (check_tworep(&bad).passed(), realize_vb_algebroid(&bad).jacobi_report().passed());
        ensure!(a == b, "abelian {axiom:?}: axioms say {a}, Jacobiator says {b}");
    }
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!("25 reps, {residual_checks} Jacobiator triples, 75 mutations caught in {took:.2?}"))
}

fn twist_group_law() -> Outcome {
    let mut rng = seeded_rng(1003);
    for i in 0..25 {
        let rep = gen::random_tworep(&mut rng, kind(i), SMALL);
        let phi = gen::random_twist(&mut rng, &rep, SMALL);
        ensure!(twist(&twist(&rep, &phi), &phi.neg()) == rep, "pair {i}: twist by φ then −φ is not the identity");
        let alg = gen::random_algebroid(&mut rng, kind(i), SMALL);
        let c1 = gen::random_connection(&mut rng, alg.rank(), SMALL.n, SMALL);
        let c2 = gen::random_connection(&mut rng, alg.rank(), SMALL.n, SMALL);
        let r1 = adjoint_rep(&alg, &c1).map_err(|e| e.to_string())?;
        let r2 = adjoint_rep(&alg, &c2).map_err(|e| e.to_string())?;
        ensure!(twist(&r1, &adjoint_twist(&c1, &c2)) == r2, "pair {i}: adjoint reps not twist-related");
    }
    Ok("25 (rep, φ) pairs and 25 adjoint pairs".into())
}

fn poisson_selfdual() -> Outcome {
    let mut rng = seeded_rng(1004);
    let mut named = 0;
    for i in 0..25 {
        let rep = gen::random_tworep(&mut rng, anchored(i), SMALL);
        let p = PoissonStructure2::new(direct_sum_double(&rep)).map_err(|e| format!("instance {i}: {e}"))?;
        let report = check_graded_axioms(&p);
        ensure!(report.passed(), "instance {i}: {:?}", report.failed_names());
        for axiom in [PoissonAxiom::PartialSymmetry, PoissonAxiom::ConnectionDuality, PoissonAxiom::CurvatureSkew] {
            let bad = p.mutate(axiom).ok_or_else(|| format!("instance {i}: {axiom:?} not applicable"))?;
            let names = check_graded_axioms(&bad).failed_names();
            ensure!(
                names.iter().any(|n| n.starts_with("jacobi{") || n.starts_with("skew{")),
                "instance {i}: {axiom:?} left Jacobi and skew intact ({names:?})"
            );
            named += 1;
        }
    }
    Ok(format!("25 self-dual reps clean, {named} mutations named"))
}

fn cocycles_and_metric() -> Outcome {
    let mut rng = seeded_rng(1005);
    for i in 0..10 {
        let t = gen::random_chart_data(&mut rng, 3, 2, 1 + i % 2, GenParams { n: 1 + i % 2, degree: 1, terms: 2 });
        ensure!(t.cocycle_report().map_err(|e| e.to_string())?.passed(), "instance {i}: cocycle failure");
        let g = geometrize(&t).map_err(|e| format!("instance {i}: {e}"))?;
        ensure!(g.report.passed(), "instance {i}: {:?}", g.report.failed_names());
        let names: Vec<String> = g.report.checks.iter().map(|c| c.name.clone()).collect();
        ensure!(names.iter().any(|n| n.starts_with("metric-independence")), "instance {i}: metric agreement not checked");
        let bad = t.perturb_rho().ok_or_else(|| format!("instance {i}: nothing to perturb"))?;
        let caught = !bad.cocycle_report().map_err(|e| e.to_string())?.passed() && geometrize(&bad).is_err();
        ensure!(caught, "instance {i}: ρ perturbation went unnoticed");
    }
    Ok("10 three-chart instances, 10 perturbations caught".into())
}

fn functor_round_trips() -> Outcome {
    let mut rng = seeded_rng(1006);
    for i in 0..25 {
        let t = gen::random_chart_data(&mut rng, 1 + i % 3, 2, 1 + i % 2, GenParams { n: 1, degree: 1, terms: 2 });
        let chart = roundtrip_check(&RoundtripInput::Chart(t.clone())).map_err(|e| e.to_string())?;
        ensure!(chart.passed(), "chart {i}: {:?}", chart.failed_names());
        let atlas = geometrize(&t).map_err(|e| e.to_string())?.involutive_atlas;
        let atlas = roundtrip_check(&RoundtripInput::Atlas(atlas)).map_err(|e| e.to_string())?;
        ensure!(atlas.passed(), "atlas {i}: {:?}", atlas.failed_names());
        let rep = gen::random_tworep(&mut rng, kind(i), SMALL);
        let p = PoissonStructure2::new(direct_sum_double(&rep)).map_err(|e| e.to_string())?;
        let lin = p.geometrize().map_err(|e| e.to_string())?;
        let alg = poisson_roundtrip(&RoundtripInstance::Algebraic(p)).map_err(|e| e.to_string())?;
        ensure!(alg.passed(), "algebraic {i}: {:?}", alg.failed_names());
        let geo = poisson_roundtrip(&RoundtripInstance::Geometric(lin)).map_err(|e| e.to_string())?;
        ensure!(geo.passed(), "geometric {i}: {:?}", geo.failed_names());
    }
    Ok("4 directions x 25 instances".into())
}

fn symplectic_criterion() -> Outcome {
    let mut rng = seeded_rng(1007);
    for i in 0..5 {
        let rank = 1 + i % 3;
        let g = gen::random_metric(&mut rng, rank, SMALL);
        let conn = gen::random_metric_connection(&mut rng, &g, SMALL);
        let p = symplectic_from_metric_bundle(&g, &conn).map_err(|e| e.to_string())?;
        ensure!(is_symplectic(&p), "metric bundle {i}: not symplectic");
        let table = cotangent_involution_check(&g, &conn).map_err(|e| e.to_string())?;
        ensure!(table.passed(), "metric bundle {i}: {:?}", table.failed_names());
    }
    // ∂ = 0 over the tangent algebroid
    let tangent = LieAlgebroidModel::tangent(Chart::new(2));
    let flat = PoissonStructure2::new(direct_sum_double(&TwoRep::zero(tangent, 2, 2))).map_err(|e| e.to_string())?;
    ensure!(!is_symplectic(&flat), "singular ∂ accepted");
    // invertible ∂, zero anchor
    let mut rep = TwoRep::zero(LieAlgebroidModel::abelian(Chart::new(2), 2), 2, 2);
    rep.partial = PolyMatrix::identity(2, 2);
    ensure!(check_tworep(&rep).passed(), "abelian rep with identity ∂ is invalid");
    let anchorless = PoissonStructure2::new(direct_sum_double(&rep)).map_err(|e| e.to_string())?;
    ensure!(!is_symplectic(&anchorless), "singular ρ accepted");
    // the affine anchor degenerates along a line
    let affine = gen::random_tworep(&mut rng, AlgebroidKind::Affine, SMALL);
    let affine = PoissonStructure2::new(direct_sum_double(&affine)).map_err(|e| e.to_string())?;
    ensure!(!is_symplectic(&affine), "non-constant anchor determinant accepted");
    Ok("5 metric bundles symplectic with matching tables, 3 singular cases rejected".into())
}

fn basic_representation() -> Outcome {
    let mut rng = seeded_rng(1008);
    let kinds = [AlgebroidKind::Tangent, AlgebroidKind::Affine, AlgebroidKind::Sl2, AlgebroidKind::Tangent, AlgebroidKind::Sl2];
    for (i, k) in kinds.into_iter().enumerate() {
        let alg = gen::random_algebroid(&mut rng, k, SMALL);
        let dull = gen::random_skew_dull(&mut rng, alg.n_vars(), alg.rank(), SMALL);
        let delta = dull.to_dorfman();
        let rep = basic_tworep(&alg, &delta).map_err(|e| e.to_string())?;
        let axioms = check_tworep(&rep);
        ensure!(axioms.passed(), "instance {i}: {:?}", axioms.failed_names());
        ensure!(is_selfdual(&rep).map_err(|e| e.to_string())?, "instance {i}: basic rep not self-dual");
        let pairing = pontryagin_pairing_check(&delta);
        ensure!(pairing.passed(), "instance {i}: {:?}", pairing.failed_names());
        for family in ["sigma-sigma(", "sigma-core(", "core-core("] {
            ensure!(pairing.checks.iter().any(|c| c.name.starts_with(family)), "instance {i}: no {family}..) checks");
        }
        let bad = dull.with_symmetric_defect().ok_or("no room for a symmetric defect")?.to_dorfman();
        let bad_rep = basic_tworep(&alg, &bad).map_err(|e| e.to_string())?;
        let dual = selfdual_report(&bad_rep).map_err(|e| e.to_string())?;
        ensure!(
            dual.failed_names().iter().any(|n| n.starts_with("connection-duality")),
            "instance {i}: non-skew bracket kept dual connections ({:?})",
            dual.failed_names()
        );
    }
    Ok("5 skew instances self-dual with pairing identities, 5 non-skew caught".into())
}

fn lagrangian_symmetrization() -> Outcome {
    let mut rng = seeded_rng(1009);
    for i in 0..25 {
        let q = rng.gen_range(1..=3);
        let b = rng.gen_range(1..=3);
        let m = gen::random_metric_dvb(&mut rng, q, b, GenParams { n: 2, degree: 2, terms: 3 });
        let change = symmetrize_splitting(&m);
        ensure!(lambda_of_splitting(&m, &change).iter().all(PolyMatrix::is_zero), "instance {i}: Λ′ ≠ 0");
    }
    let g = gen::random_metric(&mut rng, 2, SMALL);
    let conn = gen::random_connection(&mut rng, 2, 2, SMALL);
    let double = tangent_double(&g, &conn).map_err(|e| e.to_string())?;
    ensure!(!double.is_lagrangian(), "tangent double already Lagrangian; nothing tested");
    let (_, metric) = symmetrized_tangent_connection(&g, &conn).map_err(|e| e.to_string())?;
    ensure!(metric, "symmetrized connection is not metric");
    Ok("25 random Λ cleared, tangent double gives a metric connection".into())
}

fn dvbkit(args: &[&str], seed_env: Option<&str>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dvbkit"));
    cmd.args(args).env_remove("DVBKIT_SEED");
    if let Some(s) = seed_env {
        cmd.env("DVBKIT_SEED", s);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |p: &str| std::fs::read(p).map_err(|e| e.to_string());
    for k in KINDS {
        let file = path(&format!("{}.json", k.name()));
        let (code, _) = dvbkit(&["build", "random", "--kind", k.name(), "--seed", "7", "--out", &file], None);
        ensure!(code == 0, "build {} exited {code}", k.name());
        let text = String::from_utf8(read(&file)?).map_err(|e| e.to_string())?;
        let inst = parse_instance(&text).map_err(|e| e.to_string())?;
        ensure!(emit_instance(&inst) == text, "{}: re-emitted text differs", k.name());
        ensure!(parse_instance(&emit_instance(&inst)).map_err(|e| e.to_string())? == inst, "{}: parse∘emit", k.name());
        let (code, _) = dvbkit(&["roundtrip", &file], None);
        ensure!(code == 0, "roundtrip {} exited {code}", k.name());
        let (code, _) = dvbkit(&["verify", &file], None);
        ensure!(code == 0, "verify {} exited {code}", k.name());
    }
    let rep = path("tworep.json");
    let (r1, r2, r3) = (path("r1.json"), path("r2.json"), path("r3.json"));
    let (c1, o1) = dvbkit(&["verify", &rep, "--mutate", "curvature", "--report", &r1], None);
    let (c2, o2) = dvbkit(&["verify", &rep, "--mutate", "curvature", "--report", &r2], None);
    ensure!((c1, c2) == (1, 1), "mutated verify exit codes {c1}/{c2}");
    ensure!(o1 == o2 && read(&r1)? == read(&r2)?, "reports differ between identical runs");
    let (c3, _) = dvbkit(&["verify", &rep, "--mutate", "curvature", "--report", &r3], Some("42"));
    ensure!(c3 == 1 && read(&r3)? == read(&r1)?, "DVBKIT_SEED=42 changes the report");
    let garbage = path("garbage.json");
    std::fs::write(&garbage, "{\"format\": 1, \"kind\": \"tworep\"").map_err(|e| e.to_string())?;
    for (args, what) in [
        (vec!["verify", garbage.as_str()], "syntax error"),
        (vec!["verify", rep.as_str(), "--suite", "nope"], "unknown suite"),
        (vec!["verify", rep.as_str(), "--mutate", "nope"], "unknown mutation"),
        (vec!["verify", "/nonexistent/instance.json"], "missing file"),
        (vec!["frobnicate"], "unknown command"),
    ] {
        let (code, _) = dvbkit(&args, None);
        ensure!(code == 2, "{what} exited {code}");
    }
    ensure!(Path::new(&r1).exists(), "report file missing");
    Ok(format!("{} kinds round-trip; exit codes 0/1/2; reports byte-identical", KINDS.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("duality round trip", duality_round_trip),
        ("splitting theorem", splitting_theorem),
        ("twist group law", twist_group_law),
        ("Poisson iff self-dual", poisson_selfdual),
        ("cocycle and metric well-definedness", cocycles_and_metric),
        ("functor round trips", functor_round_trips),
        ("symplectic criterion", symplectic_criterion),
        ("basic 2-representation", basic_representation),
        ("Lagrangian symmetrization", lagrangian_symmetrization),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
