use droplet_core::lattice::measure_chi;
use droplet_core::rng::RngStream;

#[test]
fn chi_is_size_independent_deep_in_the_phase() {
    let a = measure_chi(0.6, 32, 2000, 20_000, &mut RngStream::new(3, u64::MAX)).unwrap();
    let b = measure_chi(0.6, 64, 2000, 20_000, &mut RngStream::new(4, u64::MAX)).unwrap();
    assert!(!a.flagged && !b.flagged);
    let tol = 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.chi - b.chi).abs() <= tol, "L=32: {} +- {}, L=64: {} +- {}", a.chi, a.std_error, b.chi, b.std_error);
}

#[test]
fn chi_rejects_short_runs_and_high_temperature() {
    let mut rng = RngStream::new(1, 0);
    assert!(measure_chi(0.6, 16, 0, 10, &mut rng).is_err());
    assert!(measure_chi(0.3, 16, 0, 5000, &mut rng).is_err());
}
