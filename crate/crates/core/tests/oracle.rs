use kfdr::oracle::{remark21_check, DiscreteJointDistribution};
use kfdr::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Random distribution made exchangeable by averaging over all coordinate
/// permutations.
fn exchangeable(rng: &mut ChaCha8Rng, n: usize, atoms: usize) -> DiscreteJointDistribution {
    let perms = permutations(n);
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for w in &raw {
        // Values on a coarse grid so ties with the criticals occur.
        let point: Vec<f64> = (0..n).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect();
        for p in &perms {
            support.push(p.iter().map(|&j| point[j]).collect());
            weights.push(w / total / perms.len() as f64);
        }
    }
    DiscreteJointDistribution::new(support, weights).unwrap()
}

#[test]
fn closed_form_matches_subset_sum_on_exchangeable_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.random_range(2..=5);
        let k = rng.random_range(1..=n);
        let atoms = rng.random_range(1..=4);
        let dist = exchangeable(&mut rng, n, atoms);
        let mut crit: Vec<f64> = (k..=n).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect();
        crit.sort_by(f64::total_cmp);
        let check = remark21_check(&dist, &crit, k).unwrap();
        assert!((check.rhs - check.rhs_subsets).abs() <= 1e-12, "{check:?}");
        assert!(check.lhs <= check.rhs + 1e-12, "{check:?}");
    }
}

#[test]
fn non_exchangeable_instance_is_rejected() {
    let dist = DiscreteJointDistribution::new(vec![vec![0.1, 0.9, 0.9], vec![0.9, 0.9, 0.9]], vec![0.5, 0.5])
        .unwrap();
    let err = remark21_check(&dist, &[0.2, 0.5, 1.0], 1).unwrap_err();
    assert!(matches!(err, Error::NotExchangeable(_)));
}
