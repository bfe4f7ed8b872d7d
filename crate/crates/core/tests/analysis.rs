use surfflow::analysis::*;

#[test]
fn power_law_fit_recovers_exponent() {
    let t: Vec<f64> = (1..200).map(|i| i as f64).collect();
    let y: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.7)).collect();
    let (e, s) = fit_power_law(&t, &y, (10.0, 150.0)).unwrap();
    assert!((e + 0.7).abs() < 1e-12);
    assert!(s < 1e-10);
    assert!(fit_power_law(&t, &y, (500.0, 600.0)).is_err());
    let z = vec![0.0; t.len()];
    assert!(matches!(fit_power_law(&t, &z, (10.0, 20.0)), Err(surfflow::Error::NonPositiveSample(_))));
}

#[test]
fn trapezoid_lp_norm() {
    let t: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let g: Vec<f64> = t.iter().map(|t| t * t).collect();
    // int_0^1 t^4 = 1/5
    assert!((lp_trapezoid(&t, &g, 2.0) - (0.2f64).sqrt()).abs() < 1e-6);
    assert_eq!(lp_trapezoid(&t, &g, f64::INFINITY), 1.0);
}

#[test]
fn japanese_bracket() {
    assert_eq!(japanese(0.0), 1.0);
    assert!((japanese(3.0) - 10f64.sqrt()).abs() < 1e-15);
}

#[test]
fn duhamel_of_constant_forcing() {
    let sg = DiagonalSemigroup::new(vec![0.5, 2.0], 0.5, 0.1).unwrap();
    let support = 4.0;
    let f_times = vec![0.0, support];
    let f_samples = vec![vec![1.0, -2.0], vec![1.0, -2.0]];
    let grid = vec![1.0, 2.5, 4.0, 7.0];
    // trapezoid substeps resolve the fastest rate to about 1e-4 relative
    let u = duhamel_convolve(&sg, &f_times, &f_samples, &grid);
    for (i, &t) in grid.iter().enumerate() {
        for (j, (&r, c)) in [0.5f64, 2.0].iter().zip([1.0, -2.0]).enumerate() {
            let inside = |s: f64| c * (1.0 - (-r * s).exp()) / r;
            let exact = if t <= support { inside(t) } else { inside(support) * (-r * (t - support)).exp() };
            assert!((u[i][j] - exact).abs() < 1e-3 * exact.abs(), "t {t} j {j}: {} vs {exact}", u[i][j]);
        }
    }
}

#[test]
fn diagonal_semigroup_decay_bound_holds() {
    let sg = DiagonalSemigroup::log_spaced(12, 1e-3, 10.0, 0.5, 0.2).unwrap();
    let states: Vec<Vec<f64>> = (0..12).map(|i| (0..12).map(|j| if i == j { 1.0 } else { 0.1 }).collect()).collect();
    let times: Vec<f64> = (0..40).map(|i| 1.2f64.powi(i)).collect();
    let worst = verify_decay_invariant(&sg, &times, &states);
    assert!(worst > 0.0 && worst <= 1.0, "{worst}");
    assert!(DiagonalSemigroup::new(vec![1.0], 1.5, 0.1).is_err());
    assert!(DiagonalSemigroup::new(vec![-1.0], 0.5, 0.1).is_err());
}

#[test]
fn predicted_exponents() {
    assert!((predicted_s1_exponent(3, 1.5, 6.0) + 0.5).abs() < 1e-15);
    assert!((predicted_s1_exponent(4, 1.5, 6.0) + 0.75).abs() < 1e-15);
    assert!((predicted_s2_exponent(3, 1.5, 6.0) + 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn decay_output_times_are_increasing() {
    let cfg = ContinuumDecayConfig::new(3, 1.5, 6.0);
    let t = cfg.times();
    assert_eq!(t[0], 0.0);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!((t.last().unwrap() - cfg.t_final).abs() < 1e-9);
}

#[test]
fn norm_series_columns() {
    let mut s = NormSeries::new(&["a", "b"]);
    s.push(0.0, vec![1.0, 2.0]);
    s.push(1.0, vec![3.0, 4.0]);
    assert_eq!(s.len(), 2);
    assert_eq!(s.column("b").unwrap(), vec![2.0, 4.0]);
    assert!(s.column("c").is_none());
}
