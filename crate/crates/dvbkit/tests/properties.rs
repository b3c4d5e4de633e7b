//! Randomized invariants. Each case draws a seed and builds its data from
//! the library generators, so a failing seed reproduces directly.

use dvbkit::bundles::{check_lie_algebroid, connection_curvature, pair, Chart, LieAlgebroidModel};
use dvbkit::dvb::{check_atlas, DecomposedDVB, DvbPoint, Side};
use dvbkit::examples::{dorfman_to_dull, dull_to_dorfman, splitting_flags};
use dvbkit::functors::{geometrize, roundtrip_check, RoundtripInput};
use dvbkit::gen::{self, AlgebroidKind, GenParams, ALGEBROID_KINDS};
use dvbkit::graded::{Generator, GradedFunction};
use dvbkit::io::{emit_instance, parse_instance, DorfmanInstance, Instance};
use dvbkit::metric::{involutive_to_metric, metric_to_involutive};
use dvbkit::poisson::PoissonStructure2;
use dvbkit::poly::{random_poly, random_ratio, seeded_rng, Poly, Ratio, SamplePlan};
use dvbkit::tworep::{
    adjoint_rep, adjoint_twist, check_tworep, direct_sum_double, dualize_rep, realize_vb_algebroid, twist, RepAxiom,
    TwistTensor,
};
use proptest::prelude::*;
use rand::Rng;

const SMALL: GenParams = GenParams { n: 2, degree: 1, terms: 2 };

fn kind_strategy() -> impl Strategy<Value = AlgebroidKind> {
    prop::sample::select(ALGEBROID_KINDS.to_vec())
}

fn ratios<R: Rng>(rng: &mut R, k: usize) -> Vec<Ratio> {
    (0..k).map(|_| random_ratio(rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let [p, q, r] = [0; 3].map(|_| random_poly(&mut rng, 3, 3, 4));
        prop_assert_eq!(&(&p + &q) + &r, &p + &(&q + &r));
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), i in 0usize..3) {
        let mut rng = seeded_rng(seed);
        let p = random_poly(&mut rng, 3, 3, 4);
        let q = random_poly(&mut rng, 3, 3, 4);
        let lhs = (&p * &q).diff(i).unwrap();
        let rhs = &(&p.diff(i).unwrap() * &q) + &(&p * &q.diff(i).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sample_plans_are_reproducible(seed in any::<u64>(), count in 1usize..30, vars in 0usize..4) {
        prop_assert_eq!(SamplePlan::new(seed, count, vars), SamplePlan::new(seed, count, vars));
    }

    #[test]
    fn dual_connection_identity(seed in any::<u64>(), rank in 1usize..4) {
        let mut rng = seeded_rng(seed);
        let conn = gen::random_connection(&mut rng, rank, 2, SMALL);
        let dual = conn.dual();
        let e: Vec<Poly> = (0..rank).map(|_| random_poly(&mut rng, 2, 2, 3)).collect();
        let eps: Vec<Poly> = (0..rank).map(|_| random_poly(&mut rng, 2, 2, 3)).collect();
        for i in 0..2 {
            let lhs = &pair(&dual.covariant(i, &eps), &e) + &pair(&eps, &conn.covariant(i, &e));
            prop_assert_eq!(lhs, pair(&eps, &e).diff(i).unwrap());
        }
        let r = connection_curvature(&conn);
        let rd = connection_curvature(&dual);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(&rd[i][j], &-r[i][j].transpose());
            }
        }
    }

    #[test]
    fn algebroid_checks_ignore_coordinate_order(seed in any::<u64>(), kind in kind_strategy(), broken in any::<bool>()) {
        let mut rng = seeded_rng(seed);
        let mut alg = gen::random_algebroid(&mut rng, kind, SMALL);
        if broken && alg.rank() >= 2 {
            let bump = Poly::var(2, 0);
            alg.structure[0][1][0] += &bump;
            alg.structure[1][0][0] -= &bump;
        }
        let swap = [Poly::var(2, 1), Poly::var(2, 0)];
        let anchor = alg.anchor.compose(&swap, 2);
        let anchor = dvbkit::poly::PolyMatrix::from_fn(anchor.rows(), 2, 2, |i, a| anchor.get(i, 1 - a).clone());
        let structure = alg
            .structure
            .iter()
            .map(|row| row.iter().map(|c| c.iter().map(|p| p.compose(&swap, 2)).collect()).collect())
            .collect();
        let swapped = LieAlgebroidModel::new(alg.bundle.clone(), anchor, structure).unwrap();
        let (a, b) = (check_lie_algebroid(&alg), check_lie_algebroid(&swapped));
        prop_assert_eq!(a.passed(), b.passed());
        prop_assert_eq!(a.failed_names(), b.failed_names());
    }

    #[test]
    fn interchange_law(seed in any::<u64>(), ra in 1usize..3, rb in 1usize..3, rc in 1usize..3) {
        let mut rng = seeded_rng(seed);
        let d = DecomposedDVB::new(Chart::new(1), ra, rb, rc);
        let m = ratios(&mut rng, 1);
        let (a1, a2) = (ratios(&mut rng, ra), ratios(&mut rng, ra));
        let (b1, b2) = (ratios(&mut rng, rb), ratios(&mut rng, rb));
        let mut pt = |a: &[Ratio], b: &[Ratio]| DvbPoint { m: m.clone(), a: a.to_vec(), b: b.to_vec(), c: ratios(&mut rng, rc) };
        let (p, q, r, s) = (pt(&a1, &b1), pt(&a1, &b2), pt(&a2, &b1), pt(&a2, &b2));
        let lhs = d.add_over_b(&d.add_over_a(&p, &q).unwrap(), &d.add_over_a(&r, &s).unwrap()).unwrap();
        let rhs = d.add_over_a(&d.add_over_b(&p, &r).unwrap(), &d.add_over_b(&q, &s).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dualizing_twice_is_identity(ra in 0usize..4, rb in 0usize..4, rc in 0usize..4, n in 0usize..3) {
        let d = DecomposedDVB::new(Chart::new(n), ra, rb, rc);
        for side in [Side::A, Side::B] {
            prop_assert_eq!(&d.dualize(side).dualize(side), &d);
        }
    }

    #[test]
    fn metric_pairing_is_symmetric(seed in any::<u64>(), q in 1usize..4, b in 1usize..3) {
        let mut rng = seeded_rng(seed);
        let e = gen::random_metric_dvb(&mut rng, q, b, SMALL);
        let m = ratios(&mut rng, 2);
        let bb = ratios(&mut rng, b);
        let mut pt = || DvbPoint { m: m.clone(), a: ratios(&mut rng, q), b: bb.clone(), c: ratios(&mut rng, q) };
        let (x, y) = (pt(), pt());
        prop_assert_eq!(e.pairing_eval(&x, &y).unwrap(), e.pairing_eval(&y, &x).unwrap());
    }

    #[test]
    fn involution_squares_to_identity(seed in any::<u64>(), q in 1usize..4, b in 1usize..3) {
        let mut rng = seeded_rng(seed);
        let d = gen::random_involutive_dvb(&mut rng, q, b, SMALL);
        let x = DvbPoint { m: ratios(&mut rng, 2), a: ratios(&mut rng, q), b: ratios(&mut rng, q), c: ratios(&mut rng, b) };
        prop_assert_eq!(d.involution(&d.involution(&x)), x);
    }

    #[test]
    fn metric_and_involutive_round_trip(seed in any::<u64>(), q in 1usize..4, b in 1usize..4) {
        let mut rng = seeded_rng(seed);
        let m = gen::random_metric_dvb(&mut rng, q, b, GenParams { n: 2, degree: 2, terms: 3 });
        prop_assert_eq!(&involutive_to_metric(&metric_to_involutive(&m).unwrap()).unwrap(), &m);
        let d = gen::random_involutive_dvb(&mut rng, q, b, GenParams { n: 2, degree: 2, terms: 3 });
        prop_assert_eq!(&metric_to_involutive(&involutive_to_metric(&d).unwrap()).unwrap(), &d);
    }

    #[test]
    fn dorfman_and_dull_round_trip(seed in any::<u64>(), n in 0usize..3, r in 1usize..3) {
        let mut rng = seeded_rng(seed);
        let delta = gen::random_dorfman(&mut rng, n, r, SMALL);
        prop_assert_eq!(&dull_to_dorfman(&dorfman_to_dull(&delta)), &delta);
        let dull = gen::random_skew_dull(&mut rng, n, r, SMALL);
        prop_assert!(dull.is_skew());
        prop_assert_eq!(&dorfman_to_dull(&dull_to_dorfman(&dull)), &dull);
    }

    #[test]
    fn serializer_round_trip(seed in any::<u64>(), kind in kind_strategy(), which in 0usize..7) {
        let mut rng = seeded_rng(seed);
        let inst = match which {
            0 => Instance::LieAlgebroid(gen::random_algebroid(&mut rng, kind, SMALL)),
            1 => Instance::TwoRep(gen::random_tworep(&mut rng, kind, SMALL)),
            2 => Instance::MetricDvb(gen::random_metric_dvb(&mut rng, 2, 2, SMALL)),
            3 => Instance::InvolutiveDvb(gen::random_involutive_dvb(&mut rng, 2, 1, SMALL)),
            4 => Instance::TwoManAtlas(gen::random_chart_data(&mut rng, 2, 2, 1, SMALL)),
            5 => {
                let alg = gen::random_algebroid(&mut rng, kind, SMALL);
                let delta = gen::random_dorfman(&mut rng, alg.n_vars(), alg.rank(), SMALL);
                Instance::Dorfman(DorfmanInstance { delta, algebroid: Some(alg) })
            }
            _ => {
                let rep = gen::random_tworep(&mut rng, kind, SMALL);
                Instance::Poisson2(PoissonStructure2::new(direct_sum_double(&rep)).unwrap())
            }
        };
        let text = emit_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(emit_instance(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn realization_agrees_with_rep_axioms(seed in any::<u64>(), kind in kind_strategy(), axiom in 0usize..4) {
        let mut rng = seeded_rng(seed);
        let rep = gen::random_tworep(&mut rng, kind, SMALL);
        let rep = match axiom {
            0 => rep,
            1 => rep.mutate(RepAxiom::Partial),
            2 => rep.mutate(RepAxiom::Connection),
            _ => rep.mutate(RepAxiom::Curvature),
        };
        let algebraic = check_tworep(&rep).passed();
        prop_assert_eq!(algebraic, realize_vb_algebroid(&rep).jacobi_report().passed());
        if axiom == 0 {
            prop_assert!(algebraic);
        }
    }

    #[test]
    fn twists_invert_and_commute_with_duals(seed in any::<u64>(), kind in kind_strategy()) {
        let mut rng = seeded_rng(seed);
        let rep = gen::random_tworep(&mut rng, kind, SMALL);
        let phi = gen::random_twist(&mut rng, &rep, SMALL);
        let t = twist(&rep, &phi);
        prop_assert!(check_tworep(&t).passed());
        prop_assert_eq!(&twist(&t, &phi.neg()), &rep);
        let dual_phi = TwistTensor { phi: phi.phi.iter().map(|m| -m.transpose()).collect() };
        prop_assert_eq!(dualize_rep(&t), twist(&dualize_rep(&rep), &dual_phi));
    }

    #[test]
    fn adjoint_reps_are_twist_related(seed in any::<u64>(), kind in kind_strategy()) {
        let mut rng = seeded_rng(seed);
        let alg = gen::random_algebroid(&mut rng, kind, SMALL);
        let c1 = gen::random_connection(&mut rng, alg.rank(), 2, SMALL);
        let c2 = gen::random_connection(&mut rng, alg.rank(), 2, SMALL);
        let (r1, r2) = (adjoint_rep(&alg, &c1).unwrap(), adjoint_rep(&alg, &c2).unwrap());
        prop_assert_eq!(twist(&r1, &adjoint_twist(&c1, &c2)), r2);
    }

    #[test]
    fn graded_bracket_laws(seed in any::<u64>(), kind in kind_strategy()) {
        let mut rng = seeded_rng(seed);
        let rep = gen::random_tworep(&mut rng, kind, SMALL);
        let p = PoissonStructure2::new(direct_sum_double(&rep)).unwrap();
        let sig = p.signature();
        let gens: Vec<Generator> = (0..sig.generator_count()).map(|g| sig.generator(g)).collect();
        // homogeneous of degree `deg` from random generator products
        let mut random_fn = |deg: u32| {
            let mut f = GradedFunction::zero(sig);
            for _ in 0..2 {
                let mut term = GradedFunction::from_base(sig, random_poly(&mut rng, sig.n, 1, 2));
                let mut left = deg;
                while left > 0 {
                    let fits: Vec<Generator> = gens.iter().copied().filter(|g| (1..=left).contains(&g.degree())).collect();
                    let g = fits[rng.gen_range(0..fits.len())];
                    term = term.mul(&GradedFunction::generator(sig, g));
                    left -= g.degree();
                }
                f = f + term;
            }
            f
        };
        for (df, dg) in [(0, 1), (1, 1), (1, 2), (2, 2), (0, 2), (1, 3)] {
            let f = random_fn(df);
            let g = random_fn(dg);
            let fg = p.bracket(&f, &g).unwrap();
            let gf = p.bracket(&g, &f).unwrap();
            let sign = if (df * dg) % 2 == 0 { gf } else { -gf };
            prop_assert!((fg.clone() + sign).is_zero(), "skew fails in degrees ({}, {})", df, dg);
            if !fg.is_zero() {
                prop_assert_eq!(fg.homogeneous_degree(), Some(df + dg - 2));
            }
        }
        // Jacobi beyond generators: {f,{g,h}} = {{f,g},h} + (−1)^{|f||g|} {g,{f,h}}
        for (df, dg, dh) in [(1, 1, 2), (0, 2, 2), (2, 1, 1), (2, 2, 2)] {
            let (f, g, h) = (random_fn(df), random_fn(dg), random_fn(dh));
            let br = |a: &GradedFunction, b: &GradedFunction| p.bracket(a, b).unwrap();
            let lhs = br(&f, &br(&g, &h));
            let t2 = br(&g, &br(&f, &h));
            let rhs = if (df * dg) % 2 == 0 { br(&br(&f, &g), &h) + t2 } else { br(&br(&f, &g), &h) - t2 };
            prop_assert!((lhs - rhs).is_zero(), "Jacobi fails in degrees ({}, {}, {})", df, dg, dh);
        }
        for k in 0..sig.odd {
            for l in 0..sig.odd {
                let a = p.generator_bracket(Generator::Odd(k), Generator::Odd(l));
                prop_assert_eq!(&a, &p.generator_bracket(Generator::Odd(l), Generator::Odd(k)));
            }
        }
    }

    #[test]
    fn splitting_flags_agree(seed in any::<u64>(), kind in prop::sample::select(vec![AlgebroidKind::Tangent, AlgebroidKind::Affine, AlgebroidKind::Sl2]), skew in any::<bool>()) {
        let mut rng = seeded_rng(seed);
        let alg = gen::random_algebroid(&mut rng, kind, SMALL);
        let delta = if skew {
            gen::random_skew_dull(&mut rng, alg.n_vars(), alg.rank(), SMALL).to_dorfman()
        } else {
            gen::random_dorfman(&mut rng, alg.n_vars(), alg.rank(), SMALL)
        };
        let f = splitting_flags(&alg, &delta).unwrap();
        prop_assert_eq!(f.skew, f.lagrangian);
        prop_assert_eq!(f.skew, f.dual_connections);
        if skew {
            prop_assert!(f.skew);
        }
    }

    #[test]
    fn geometrized_charts_pass_and_round_trip(seed in any::<u64>(), charts in 1usize..4) {
        let mut rng = seeded_rng(seed);
        let t = gen::random_chart_data(&mut rng, charts, 2, 1, GenParams { n: 1, degree: 1, terms: 2 });
        prop_assert!(t.cocycle_report().unwrap().passed());
        let g = geometrize(&t).unwrap();
        prop_assert!(g.report.passed(), "{:?}", g.report.failed_names());
        prop_assert!(check_atlas(&g.metric_atlas).unwrap().passed());
        prop_assert!(check_atlas(&g.involutive_atlas).unwrap().passed());
        prop_assert!(roundtrip_check(&RoundtripInput::Chart(t)).unwrap().passed());
    }
}
