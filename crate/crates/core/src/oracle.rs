//! Brute-force references.
//!
//! Literal implementations of the stepwise definitions and exhaustive checks
//! of the subset-sum inequalities on small discrete instances. Nothing here
//! shares code with [`crate::engine`].

use crate::engine::{DecisionOutcome, PValueSample, Truth};
use crate::error::{Error, Result};
use crate::schedules::{binomial, CriticalValueSchedule, Direction};

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `(value, index)` pairs in increasing order, via insertion sort.
fn ordered_pairs(values: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut pos = out.len();
        while pos > 0 && out[pos - 1].0 > v {
            pos -= 1;
        }
        out.insert(pos, (v, i));
    }
    out
}

fn brute_outcome(sample: &PValueSample, ordered: &[(f64, usize)], r: usize, k: usize) -> DecisionOutcome {
    let rejected: Vec<usize> = ordered[..r].iter().map(|&(_, i)| i).collect();
    let v = sample.truth().map(|truth| {
        let mut count = 0;
        for &i in &rejected {
            if truth[i] == Truth::TrueNull {
                count += 1;
            }
        }
        count
    });
    let k_fdp = v.map(|v| if v >= k { v as f64 / r as f64 } else { 0.0 });
    DecisionOutcome { rejected, r, v, k_fdp }
}

fn check_lengths(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<()> {
    if sample.len() != schedule.n() {
        return Err(Error::LengthMismatch {
            expected: sample.len(),
            found: schedule.n(),
        });
    }
    Ok(())
}

/// Stepup by scanning every index for `P_{i:n} ≤ α_i` and taking the max.
pub fn brute_force_stepup(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
    check_lengths(sample, schedule)?;
    if schedule.direction() != Direction::StepUp {
        return Err(Error::DirectionMismatch {
            expected: "stepup",
            found: schedule.direction().as_str(),
        });
    }
    let ordered = ordered_pairs(sample.values());
    let alphas = schedule.alphas();
    let mut j_su = 0;
    for i in 1..=ordered.len() {
        if ordered[i - 1].0 <= alphas[i - 1] {
            j_su = i;
        }
    }
    Ok(brute_outcome(sample, &ordered, j_su, schedule.k()))
}

/// Stepdown by collecting every index with `P_{i:n} ≥ α_i` and taking the min.
pub fn brute_force_stepdown(sample: &PValueSample, schedule: &CriticalValueSchedule) -> Result<DecisionOutcome> {
    check_lengths(sample, schedule)?;
    if schedule.direction() != Direction::StepDown {
        return Err(Error::DirectionMismatch {
            expected: "stepdown",
            found: schedule.direction().as_str(),
        });
    }
    let ordered = ordered_pairs(sample.values());
    let alphas = schedule.alphas();
    let hits: Vec<usize> = (1..=ordered.len())
        .filter(|&i| ordered[i - 1].0 >= alphas[i - 1])
        .collect();
    let r = match hits.iter().min() {
        Some(&j_sd) => j_sd - 1,
        None => ordered.len(),
    };
    Ok(brute_outcome(sample, &ordered, r, schedule.k()))
}

/// Finite joint distribution of an `n`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJointDistribution {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteJointDistribution {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::invalid("support and weights must be nonempty and equally long"));
        }
        let n = support[0].len();
        if n == 0 || support.iter().any(|x| x.len() != n) {
            return Err(Error::invalid("support vectors must share a positive length"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { support, weights })
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability of the event `pred`.
    pub fn prob(&self, pred: impl Fn(&[f64]) -> bool) -> f64 {
        compensated_sum(
            self.support
                .iter()
                .zip(&self.weights)
                .filter(|(x, _)| pred(x))
                .map(|(_, &w)| w),
        )
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn max_over(x: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&j| x[j]).fold(f64::NEG_INFINITY, f64::max)
}

fn check_criticals(n: usize, k: usize, criticals: &[f64]) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if n > 6 {
        return Err(Error::invalid(format!("exhaustive check limited to n <= 6, got {n}")));
    }
    if criticals.len() != n - k + 1 {
        return Err(Error::LengthMismatch {
            expected: n - k + 1,
            found: criticals.len(),
        });
    }
    if criticals.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("criticals c_k..c_n must be nondecreasing"));
    }
    Ok(())
}

/// `Pr{∪_{i=k}^n (X_{i:n} ≤ c_i)}`; `criticals[j]` is `c_{k+j}`.
fn union_probability(dist: &DiscreteJointDistribution, criticals: &[f64], k: usize) -> f64 {
    let n = dist.dim();
    dist.prob(|x| {
        let ordered = ordered_pairs(x);
        (k..=n).any(|i| ordered[i - 1].0 <= criticals[i - k])
    })
}

/// Exact left and right sides of the subset-sum inequality for
/// `Pr{∪_{i=k}^n (X_{i:n} ≤ c_i)}`, enumerating the support and every
/// `k`-subset. `criticals` holds `c_k..=c_n`.
pub fn lemma21_check(dist: &DiscreteJointDistribution, criticals: &[f64], k: usize) -> Result<(f64, f64)> {
    let n = dist.dim();
    check_criticals(n, k, criticals)?;
    let lhs = union_probability(dist, criticals, k);
    let c = |i: usize| criticals[i - k];
    let mut terms = Vec::new();
    for subset in subsets(n, k) {
        terms.push(dist.prob(|x| max_over(x, &subset) <= c(k)));
        for i in k + 1..=n {
            let a_i = binomial(i, k)? as f64;
            let p = dist.prob(|x| {
                let m = max_over(x, &subset);
                c(i - 1) < m && m <= c(i)
            });
            terms.push(p / a_i);
        }
    }
    Ok((lhs, compensated_sum(terms)))
}

/// Closed-form right side for identical k-th order distributions:
/// `C(n,k) [G_k(c_k) + Σ_{i=k+1}^n a_i⁻¹ {G_k(c_i) − G_k(c_{i−1})}]`.
pub fn remark21_rhs(g_k: impl Fn(f64) -> f64, criticals: &[f64], n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n || criticals.len() != n - k + 1 {
        return Err(Error::invalid("criticals must hold c_k..=c_n with 1 <= k <= n"));
    }
    let c = |i: usize| criticals[i - k];
    let mut terms = vec![g_k(c(k))];
    for i in k + 1..=n {
        terms.push((g_k(c(i)) - g_k(c(i - 1))) / binomial(i, k)? as f64);
    }
    Ok(binomial(n, k)? as f64 * compensated_sum(terms))
}

/// Result of [`remark21_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Remark21Check {
    pub lhs: f64,
    /// Right side from the closed form with the common `G_k`.
    pub rhs: f64,
    /// Right side from the per-subset sum of [`lemma21_check`].
    pub rhs_subsets: f64,
}

/// Checks that the closed form agrees with the per-subset bound when all
/// `k`-subsets share one distribution of their maximum.
pub fn remark21_check(dist: &DiscreteJointDistribution, criticals: &[f64], k: usize) -> Result<Remark21Check> {
    let n = dist.dim();
    check_criticals(n, k, criticals)?;
    let all = subsets(n, k);
    let g_of = |subset: &[usize], t: f64| dist.prob(|x| max_over(x, subset) <= t);

    let mut probe: Vec<f64> = criticals.to_vec();
    probe.extend(dist.support().iter().flatten().copied());
    for &t in &probe {
        let g0 = g_of(&all[0], t);
        for subset in &all[1..] {
            let g = g_of(subset, t);
            if (g - g0).abs() > 1e-12 {
                return Err(Error::NotExchangeable(format!(
                    "Pr(max <= {t}) is {g0} for {:?} but {g} for {subset:?}",
                    all[0]
                )));
            }
        }
    }
    let first = all[0].clone();
    let rhs = remark21_rhs(|t| g_of(&first, t), criticals, n, k)?;
    let (lhs, rhs_subsets) = lemma21_check(dist, criticals, k)?;
    Ok(Remark21Check { lhs, rhs, rhs_subsets })
}

/// Pointwise inequality `(n − r + k) v ≥ n0 k` over every feasible
/// `(r, v)` with `k ≤ v ≤ min(r, n0)` and `r − v ≤ n − n0`.
pub fn lemma31_check(n: usize, n0: usize, k: usize) -> Result<bool> {
    if k == 0 || k > n0 || n0 > n || n > 30 {
        return Err(Error::invalid(format!(
            "need 1 <= k <= n0 <= n <= 30, got k={k}, n0={n0}, n={n}"
        )));
    }
    for r in k..=n {
        for v in k..=r.min(n0) {
            if r - v > n - n0 {
                continue;
            }
            if (n - r + k) * v < n0 * k {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::Procedure;
    use approx::assert_abs_diff_eq;

    #[test]
    fn subsets_enumerate_binomially() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert!(subsets(2, 3).is_empty());
        for n in 1..=6 {
            for k in 1..=n {
                assert_eq!(subsets(n, k).len() as u128, binomial(n, k).unwrap());
            }
        }
    }

    #[test]
    fn stepup_examples() {
        let c = CriticalValueSchedule::from_alphas(
            Procedure::BhClassic,
            1,
            0.05,
            Direction::StepUp,
            vec![0.05, 0.10, 0.15],
        )
        .unwrap();
        let s = PValueSample::new(vec![0.01, 0.04, 0.30]).unwrap();
        assert_eq!(brute_force_stepup(&s, &c).unwrap().rejected, vec![0, 1]);
        let s = PValueSample::new(vec![0.5, 0.6, 0.7]).unwrap();
        assert_eq!(brute_force_stepup(&s, &c).unwrap().r, 0);
        let s = PValueSample::new(vec![0.01, 0.02, 0.03]).unwrap();
        assert_eq!(brute_force_stepup(&s, &c).unwrap().r, 3);

        let one = CriticalValueSchedule::from_alphas(Procedure::BhClassic, 1, 0.05, Direction::StepUp, vec![0.05])
            .unwrap();
        for (p, r) in [(0.05, 1), (0.049, 1), (0.051, 0)] {
            let s = PValueSample::new(vec![p]).unwrap();
            assert_eq!(brute_force_stepup(&s, &one).unwrap().r, r);
        }
    }

    #[test]
    fn lemma21_single_term_cases() {
        // k = n = 1: both sides are Pr{X <= c_1}.
        let d = DiscreteJointDistribution::new(vec![vec![0.1], vec![0.5], vec![0.9]], vec![0.2, 0.3, 0.5]).unwrap();
        let (lhs, rhs) = lemma21_check(&d, &[0.5], 1).unwrap();
        assert_abs_diff_eq!(lhs, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs, 0.5, epsilon = 1e-15);

        // k = n: one subset, both sides are Pr{max <= c_n}.
        let d = DiscreteJointDistribution::new(
            vec![vec![0.1, 0.4, 0.2], vec![0.5, 0.3, 0.9], vec![0.2, 0.2, 0.2]],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        let (lhs, rhs) = lemma21_check(&d, &[0.45], 3).unwrap();
        assert_abs_diff_eq!(lhs, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteJointDistribution::new(vec![vec![0.1]], vec![0.9]).is_err());
        assert!(DiscreteJointDistribution::new(vec![vec![0.1], vec![0.2, 0.3]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteJointDistribution::new(vec![vec![0.1], vec![0.2]], vec![1.5, -0.5]).is_err());
        let d = DiscreteJointDistribution::new(vec![vec![0.1, 0.2]], vec![1.0]).unwrap();
        assert!(lemma21_check(&d, &[0.1], 1).is_err());
        assert!(lemma21_check(&d, &[0.3, 0.1], 1).is_err());
    }

    #[test]
    fn remark21_k1_iid_grid() {
        // i.i.d. uniform on {0.2, 0.4, 0.6, 0.8, 1.0}, n = 3.
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let mut support = Vec::new();
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    support.push(vec![a, b, c]);
                }
            }
        }
        let w = vec![1.0 / 125.0; 125];
        let d = DiscreteJointDistribution::new(support, w).unwrap();
        let crit = [0.2, 0.4, 0.6];
        let r = remark21_check(&d, &crit, 1).unwrap();
        let g = |t: f64| (t / 0.2 + 1e-9).floor() * 0.2;
        // n [G(c_1) + (1/2)(G(c_2) − G(c_1)) + (1/3)(G(c_3) − G(c_2))]
        let lr = 3.0 * (g(0.2) + 0.5 * (g(0.4) - g(0.2)) + (g(0.6) - g(0.4)) / 3.0);
        assert_abs_diff_eq!(r.rhs, lr, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, r.rhs_subsets, epsilon = 1e-12);
        assert!(r.lhs <= r.rhs + 1e-12);
    }

    #[test]
    fn remark21_constant_criticals_telescope() {
        let rhs = remark21_rhs(|t| t * t, &[0.3, 0.3, 0.3], 4, 2).unwrap();
        assert_abs_diff_eq!(rhs, 6.0 * 0.09, epsilon = 1e-15);
    }

    #[test]
    fn remark21_rejects_non_exchangeable() {
        let d = DiscreteJointDistribution::new(vec![vec![0.1, 0.9], vec![0.2, 0.8]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(remark21_check(&d, &[0.5, 0.5], 1), Err(Error::NotExchangeable(_))));
    }

    #[test]
    fn lemma31_examples() {
        for k in 1..=5 {
            // n = n0 = r = v = k is the tight case.
            assert!(lemma31_check(k, k, k).unwrap());
        }
        for n in 1..=15 {
            for n0 in 1..=n {
                for k in 1..=n0 {
                    assert!(lemma31_check(n, n0, k).unwrap());
                }
            }
        }
        assert!(lemma31_check(5, 6, 1).is_err());
        assert!(lemma31_check(5, 2, 3).is_err());
        assert!(lemma31_check(31, 2, 1).is_err());
    }
}
