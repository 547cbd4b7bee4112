use kfdr::numerics::{equicorrelated_min_survivor, std_normal_cdf, std_normal_quantile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn quantile_cdf_round_trip_on_random_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let p: f64 = rng.random_range(1e-12..1.0 - 1e-12);
        let back = std_normal_cdf(std_normal_quantile(p).unwrap()).unwrap();
        worst = worst.max((back - p).abs());
    }
    assert!(worst <= 1e-12, "worst round-trip error {worst:e}");
}

#[test]
fn survivor_decreases_in_t() {
    for &rho in &[0.0, 0.1, 0.3, 0.5, 0.8] {
        for k in 1..=4 {
            let mut prev = 1.0;
            for j in -40..=40 {
                let t = j as f64 * 0.1;
                let s = equicorrelated_min_survivor(t, rho, k).unwrap();
                assert!(s <= prev + 1e-14, "rho={rho} k={k} t={t}: {s} > {prev}");
                prev = s;
            }
        }
    }
}

#[test]
fn survivor_increases_in_rho_for_positive_t() {
    // Positive dependence makes joint exceedances more likely (Slepian).
    for k in 2..=4 {
        for &t in &[0.5, 1.0, 2.0, 3.0] {
            let mut prev = 0.0;
            for j in 0..=18 {
                let rho = j as f64 * 0.05;
                let s = equicorrelated_min_survivor(t, rho, k).unwrap();
                assert!(s >= prev - 1e-14, "k={k} t={t} rho={rho}: {s} < {prev}");
                prev = s;
            }
        }
    }
}
