use proptest::prelude::*;
use stoprule::distributions::{evaluate_cdf, evaluate_quantile};
use stoprule::{Distribution, ProblemInstance, RandomStream};

fn uniform_law() -> impl Strategy<Value = Distribution> {
    (-5.0..5.0f64, 0.01..6.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w))
}

fn piecewise_law() -> impl Strategy<Value = Distribution> {
    (-5.0..5.0f64, prop::collection::vec((0.05..2.0f64, 0.0..1.0f64), 1..6)).prop_map(|(x0, steps)| {
        let total: f64 = steps.iter().map(|s| s.1).sum::<f64>().max(1e-9);
        let mut knots = vec![(x0, 0.0)];
        let (mut x, mut f) = (x0, 0.0);
        for (j, (dx, w)) in steps.iter().enumerate() {
            x += dx;
            f = if j + 1 == steps.len() { 1.0 } else { (f + w / total).min(1.0) };
            knots.push((x, f));
        }
        Distribution::piecewise(&knots)
    })
}

fn extremal_law() -> impl Strategy<Value = Distribution> {
    (1usize..10).prop_flat_map(|n| (1..=n).prop_map(move |i| Distribution::extremal(n, i)))
}

fn atomic_law() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-5.0..5.0f64).prop_map(Distribution::point_mass),
        (-5.0..0.0f64, 0.1..5.0f64, 0.0..=1.0f64).prop_map(|(b, a, p)| Distribution::two_point(b, a, p)),
    ]
}

fn continuous_law() -> impl Strategy<Value = Distribution> {
    prop_oneof![uniform_law(), piecewise_law(), extremal_law()]
}

fn sweep(d: &Distribution) -> Vec<f64> {
    let (lo, hi) = d.support();
    let pad = 0.1 * (hi - lo).max(1.0);
    (0..1000).map(|i| lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 999.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cdf_is_a_distribution_function(d in prop_oneof![continuous_law(), atomic_law()]) {
        prop_assert!(d.validate().is_ok());
        let xs = sweep(&d);
        let mut prev = 0.0;
        for &x in &xs {
            let f = d.cdf(x);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev, "{d:?} decreases at {x}");
            prop_assert!((d.sf(x) - (1.0 - f)).abs() < 1e-12);
            prev = f;
        }
        prop_assert_eq!(d.cdf(xs[0]), 0.0);
        prop_assert_eq!(d.cdf(xs[999]), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf_where_increasing(d in continuous_law()) {
        for x in sweep(&d) {
            let h = 1e-7;
            if d.cdf(x - h) < d.cdf(x) && d.cdf(x) < d.cdf(x + h) {
                let back = d.quantile(d.cdf(x));
                prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x.abs()), "{d:?}: {x} -> {back}");
            }
        }
    }

    #[test]
    fn cdf_of_quantile_is_identity(d in continuous_law(), u in 0.0..=1.0f64) {
        prop_assert!((d.cdf(d.quantile(u)) - u).abs() <= 1e-9);
    }

    #[test]
    fn generalized_inverse_is_smallest(d in atomic_law(), u in 0.001..=1.0f64) {
        let q = d.quantile(u);
        prop_assert!(d.cdf(q) >= u - 1e-12);
        prop_assert!(d.cdf(q - 1e-9) < u);
    }
}

/// `sup |F_emp - F|` including left limits at every sample point.
fn ks_statistic(d: &Distribution, draws: usize, seed: u64) -> f64 {
    let mut stream = RandomStream::new(seed, 0);
    let mut xs: Vec<f64> = (0..draws).map(|_| d.sample(&mut stream)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut stat: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let left = d.cdf(x - 1e-9 * (1.0 + x.abs()));
        stat = stat.max((i as f64 / n - left).abs()).max((j as f64 / n - d.cdf(x)).abs());
        i = j;
    }
    stat
}

#[test]
fn kolmogorov_smirnov_for_each_kind() {
    // asymptotic critical value at significance 0.001 is 1.9495 / sqrt(n)
    let draws = 100_000;
    let critical = 1.9495 / (draws as f64).sqrt();
    let laws = [
        Distribution::uniform(-1.0, 3.0),
        Distribution::two_point(-1.0, 2.0, 0.3),
        Distribution::piecewise(&[(0.0, 0.0), (1.0, 0.6), (2.0, 0.6), (2.5, 1.0)]),
        Distribution::extremal(5, 3),
        Distribution::extremal(4, 1),
        Distribution::point_mass(3.0),
        Distribution::discrete(&[(0.0, 0.2), (1.0, 0.5), (4.0, 0.3)]),
    ];
    for (k, d) in laws.iter().enumerate() {
        let stat = ks_statistic(d, draws, 100 + k as u64);
        assert!(stat < critical, "{} KS = {stat} >= {critical}", d.kind());
    }
}

#[test]
fn uniform_sample_mean() {
    let d = Distribution::uniform(0.0, 1.0);
    let mut stream = RandomStream::new(9, 0);
    let mean = (0..1_000_000).map(|_| d.sample(&mut stream)).sum::<f64>() / 1e6;
    assert!((mean - 0.5).abs() < 0.002, "{mean}");
}

#[test]
fn extremal_high_branch_frequency() {
    let d = Distribution::extremal(5, 3);
    let draws = 200_000;
    let above = (0..draws)
        .filter(|&t| d.sample(&mut RandomStream::new(4, t)) > 0.0)
        .count() as f64
        / draws as f64;
    let sigma = (0.2f64 * 0.8 / draws as f64).sqrt();
    assert!((above - 0.2).abs() < 3.0 * sigma, "{above}");
}

#[test]
fn sampling_is_reproducible() {
    let d = Distribution::piecewise(&[(0.0, 0.0), (1.0, 0.3), (3.0, 1.0)]);
    let a: Vec<f64> = (0..10).map(|t| d.sample(&mut RandomStream::new(1, t))).collect();
    let b: Vec<f64> = (0..10).map(|t| d.sample(&mut RandomStream::new(1, t))).collect();
    let c: Vec<f64> = (0..10).map(|t| d.sample(&mut RandomStream::new(2, t))).collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn checked_evaluation_rejects_bad_arguments() {
    let u = Distribution::uniform(0.0, 1.0);
    assert!(evaluate_cdf(&u, f64::NAN).is_err());
    assert!(evaluate_quantile(&u, 1.5).is_err());
    assert!(evaluate_cdf(&Distribution::uniform(1.0, 0.0), 0.5).is_err());
    assert_eq!(evaluate_quantile(&Distribution::uniform(2.0, 4.0), 0.25).unwrap(), 2.5);
}

#[test]
fn instance_file_with_every_kind() {
    let text = r#"{"distributions":[
        {"kind":"uniform","low":0.0,"high":1.0},
        {"kind":"two_point","low_value":-1.0,"high_value":2.0,"p_high":0.3333},
        {"kind":"piecewise_linear_cdf","knots":[[0.0,0.0],[1.0,1.0]]},
        {"kind":"extremal_component","n":5,"index":2},
        {"kind":"point_mass","value":3.0}]}"#;
    let inst = ProblemInstance::from_json(text).unwrap();
    assert_eq!(inst.len(), 5);
    assert!(!inst.all_continuous());
    let again = ProblemInstance::from_json(&inst.to_json()).unwrap();
    assert_eq!(again.distributions(), inst.distributions());

    let err = ProblemInstance::from_json(r#"{"distributions":[{"kind":"uniform","low":0,"high":1},{"kind":"normal"}]}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("distribution 1"), "{err}");
}
