use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stoprule::check::random_continuous_instance;
use stoprule::reduction::v_sequence_branches;
use stoprule::*;

/// `∫_{x0}^{hi} prod_{j>i} F_j(x) dF_i(x)` as a Riemann-Stieltjes midpoint sum.
fn stieltjes(inst: &ProblemInstance, i: usize, x0: f64, hi: f64, cells: usize) -> f64 {
    let d = inst.get(i - 1);
    let u = |x: f64| inst.distributions()[i..].iter().map(|g| g.cdf(x)).product::<f64>();
    let h = (hi - x0) / cells as f64;
    (0..cells)
        .map(|j| {
            let (a, b) = (x0 + j as f64 * h, x0 + (j + 1) as f64 * h);
            u(0.5 * (a + b)) * (d.cdf(b) - d.cdf(a))
        })
        .sum()
}

#[test]
fn extremal_c_constants_solve_the_defining_equation() {
    let inst = make_extremal_instance(4).unwrap();
    let report = verify_reduction(&inst, &EngineConfig::default()).unwrap();
    let x1 = report.x1_star;
    let (_, hi) = inst.support_hull();
    assert_eq!(report.c.len(), 2);
    for (j, &c) in report.c.iter().enumerate() {
        let i = j + 2;
        assert!(c > x1);
        let lhs = stieltjes(&inst, i, x1, hi, 400_000);
        let u_c: f64 = inst.distributions()[i..].iter().map(|g| g.cdf(c)).product();
        let rhs = u_c * inst.get(i - 1).sf(x1);
        assert!((lhs - rhs).abs() < 1e-6, "c_{i} = {c}: {lhs} vs {rhs}");
    }
}

#[test]
fn constants_match_closed_form_for_three_uniforms() {
    let inst = ProblemInstance::iid(Distribution::uniform(0.0, 1.0), 3).unwrap();
    let x1 = (1.0 + 6f64.sqrt()) / 5.0;
    let c = compute_c_constants(&inst, x1, &EngineConfig::default()).unwrap();
    assert!((c[0] - (1.0 + x1) / 2.0).abs() < 1e-6);
    let lhs = stieltjes(&inst, 2, x1, 1.0, 200_000);
    assert!((lhs - c[0] * (1.0 - x1)).abs() < 1e-6);
}

#[test]
fn constructed_sequences_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = EngineConfig::default();
    for _ in 0..20 {
        let inst = random_continuous_instance(&mut rng, 2, 6);
        let r = verify_reduction(&inst, &cfg).unwrap();
        let (a, b, c) = (&r.v_sequence.a, &r.v_sequence.b, &r.c);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(b[0] < a[0] && b.windows(2).all(|w| w[0] > w[1]));
        assert!(c.iter().all(|&ci| ci > r.x1_star));
        for j in 2..inst.len() {
            assert!(a[j - 1] <= c[j - 2]);
        }
        for (i, p) in r.v_sequence.p_high.iter().enumerate() {
            assert_eq!(*p, inst.get(i + 1).sf(r.x1_star));
        }
        assert!(r.inequality_holds, "{r:?}");
        assert!(r.oracle_agrees);
    }
}

#[test]
fn branches_tie_at_the_extremal_point() {
    for n in 2..=12 {
        let v = VSequence::from_probabilities(vec![1.0 / n as f64; n - 1]).unwrap();
        let (stop, cont) = v_sequence_branches(&v);
        assert!((stop - cont).abs() < 1e-12, "n = {n}");
        assert!((v_sequence_value(&v) - bound_b(n).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn reduction_needs_two_observations() {
    let one = ProblemInstance::iid(Distribution::uniform(0.0, 1.0), 1).unwrap();
    assert!(matches!(build_v_sequence(&one, &EngineConfig::default()), Err(Error::Domain(_))));
    let atomic = ProblemInstance::new(vec![Distribution::uniform(0.0, 1.0), Distribution::two_point(0.0, 1.0, 0.5)]).unwrap();
    assert!(matches!(build_v_sequence(&atomic, &EngineConfig::default()), Err(Error::Continuity { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn v_sequence_value_respects_the_bound(p in prop::collection::vec(0.0..=1.0f64, 1..12)) {
        let n = p.len() + 1;
        let v = VSequence::from_probabilities(p).unwrap();
        let value = v_sequence_value(&v);
        prop_assert!((0.0..=1.0).contains(&value));
        prop_assert!(value >= bound_b(n).unwrap() - 1e-12);
    }
}
