//! Scalar numerical primitives.
//!
//! Standard normal CDF and quantile, Gauss-Hermite quadrature for the
//! equicorrelated orthant probabilities behind `F_k`, and bisection
//! inversion of monotone functions on `[0, 1]`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Default number of Gauss-Hermite nodes for orthant integrals.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Default bracket width at which bisection stops.
pub const DEFAULT_INVERT_TOL: f64 = 1e-12;

/// Accuracy settings shared by the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Absolute error bound promised by [`std_normal_cdf`].
    pub abs_tol_cdf: f64,
    /// Bisection stopping width.
    pub abs_tol_invert: f64,
    pub quadrature_nodes: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol_cdf: 1e-12,
            abs_tol_invert: DEFAULT_INVERT_TOL,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.abs_tol_cdf) || !positive(self.abs_tol_invert) {
            return Err(Error::invalid("tolerances must be finite and strictly positive"));
        }
        if self.quadrature_nodes < 16 {
            return Err(Error::invalid(format!(
                "quadrature_nodes must be at least 16, got {}",
                self.quadrature_nodes
            )));
        }
        Ok(())
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x) without the finiteness check. Infinite inputs map to 0 or 1.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal CDF Φ(x).
///
/// Evaluated through the complementary error function, so both tails keep
/// full relative precision.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("std_normal_cdf: non-finite input {x}")));
    }
    Ok(phi(x))
}

/// Standard normal quantile Φ⁻¹(p) for `0 < p < 1`.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by two
/// Halley steps against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "std_normal_quantile: p must lie in (0, 1), got {p}"
        )));
    }
    Ok(quantile_unchecked(p))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    for _ in 0..2 {
        let e = phi(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        let step = u / (1.0 + 0.5 * x * u);
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Gauss-Hermite rule for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule by Newton iteration on the orthonormal
    /// Hermite recurrence.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Gauss-Hermite rule needs at least one node"));
        }
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 3e-14 {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(Z)]` for a standard normal `Z`.
    pub fn expect_std_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(SQRT_2 * x))
            .sum();
        sum / PI.sqrt()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Gauss-Legendre rule needs at least one node"));
        }
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    /// `∫_lo^hi f` split into `panels` equal pieces.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            let part: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(mid + 0.5 * h * x))
                .sum();
            total += 0.5 * h * part;
        }
        total
    }
}

/// Above this correlation the conditional survivor is too sharp in the
/// common factor for a fixed Gauss-Hermite rule.
const HERMITE_MAX_RHO: f64 = 0.5;
/// Common-factor range for the composite rule; φ(9) ≈ 1e-18.
const FACTOR_RANGE: f64 = 9.0;

fn check_correlation(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!(
            "correlation must lie in [0, 1) (exactly 1 allowed as a limit), got {rho}"
        )));
    }
    Ok(())
}

/// `Pr{min(X_1..X_k) ≥ t}` for equicorrelated standard normals with common
/// correlation `rho`, using the default 64-node rule.
pub fn equicorrelated_min_survivor(t: f64, rho: f64, k: usize) -> Result<f64> {
    let rule = GaussHermite::new(DEFAULT_QUADRATURE_NODES)?;
    equicorrelated_min_survivor_with(t, rho, k, &rule)
}

/// As [`equicorrelated_min_survivor`] with a caller-supplied quadrature rule.
///
/// Uses `X_i = √ρ·Z + √(1−ρ)·ε_i` and integrates
/// `∫ φ(z) [1 − Φ((t − √ρ z)/√(1−ρ))]^k dz` over the common factor. `rho = 0`
/// and `rho = 1` are evaluated in closed form. Infinite `t` is allowed.
pub fn equicorrelated_min_survivor_with(
    t: f64,
    rho: f64,
    k: usize,
    rule: &GaussHermite,
) -> Result<f64> {
    check_correlation(rho)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if t.is_nan() {
        return Err(Error::invalid("threshold is NaN"));
    }
    let k_exp = k as i32;
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    if t == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    if rho == 0.0 {
        return Ok(phi(-t).powi(k_exp));
    }
    if rho == 1.0 {
        return Ok(phi(-t));
    }
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    let integrand = |z: f64| phi(-(t - a * z) / b).powi(k_exp);
    let value = if rho <= HERMITE_MAX_RHO {
        rule.expect_std_normal(integrand)
    } else {
        composite_factor_integral(integrand, b / a)
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `E[f(Z)]` by 10-point Gauss-Legendre panels over `[-9, 9]`, with panels
/// no wider than half the integrand's transition `scale`.
fn composite_factor_integral(f: impl Fn(f64) -> f64, scale: f64) -> f64 {
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(10).expect("10 nodes");
    }
    let width = (0.5 * scale).min(0.5);
    let panels = ((2.0 * FACTOR_RANGE / width).ceil() as usize).max(1);
    RULE.with(|rule| {
        rule.integrate(|z| std_normal_pdf(z) * f(z), -FACTOR_RANGE, FACTOR_RANGE, panels)
    })
}

/// Absolute difference between the `n`-node and `2n`-node evaluations.
pub fn node_doubling_error(t: f64, rho: f64, k: usize, n: usize) -> Result<f64> {
    let coarse = equicorrelated_min_survivor_with(t, rho, k, &GaussHermite::new(n)?)?;
    let fine = equicorrelated_min_survivor_with(t, rho, k, &GaussHermite::new(2 * n)?)?;
    Ok((coarse - fine).abs())
}

/// Finds `x ∈ [0, 1]` with `f(x) = target` for nondecreasing `f`, by
/// bisection down to a bracket of width `tol`.
///
/// Targets equal to `f(0)` or `f(1)` return the endpoint exactly.
pub fn invert_monotone(f: impl Fn(f64) -> f64, target: f64, tol: f64) -> Result<f64> {
    bisect(f, target, 0.0, 1.0, tol)
}

/// Bisection on an arbitrary bracket `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    if !(lo <= hi) {
        return Err(Error::invalid(format!("empty bracket [{lo}, {hi}]")));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if target.is_nan() || target < f_lo || target > f_hi {
        return Err(Error::OutOfRange {
            target,
            lo: f_lo,
            hi: f_hi,
        });
    }
    if target == f_lo {
        return Ok(lo);
    }
    if target == f_hi {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(std_normal_cdf(40.0).unwrap(), 1.0, epsilon = 1e-12);
        // Φ(1.959963984540054) = 0.975 to double precision.
        assert_abs_diff_eq!(std_normal_cdf(1.959_963_984_540_054).unwrap(), 0.975, epsilon = 1e-15);
        assert_abs_diff_eq!(std_normal_cdf(1.959964).unwrap(), 0.975, epsilon = 1e-8);
        // Published table value Φ(-3) = 0.00134989803163009
        assert_abs_diff_eq!(std_normal_cdf(-3.0).unwrap(), 0.001_349_898_031_630_094_5, epsilon = 1e-17);
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(std_normal_quantile(0.975).unwrap(), 1.959964, epsilon = 1e-6);
        // 2^-30 keeps 1 - p exact in binary.
        for &p in &[9.313_225_746_154_785e-10, 1e-4, 0.01, 0.2, 0.4999] {
            let lo = std_normal_quantile(p).unwrap();
            let hi = std_normal_quantile(1.0 - p).unwrap();
            assert_abs_diff_eq!(lo + hi, 0.0, epsilon = 1e-9);
        }
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(bad).is_err());
        }
    }

    #[test]
    fn hermite_weights_integrate_polynomials() {
        let rule = GaussHermite::new(64).unwrap();
        assert_abs_diff_eq!(rule.expect_std_normal(|_| 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.expect_std_normal(|z| z * z), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rule.expect_std_normal(|z| z.powi(4)), 3.0, epsilon = 1e-11);
        assert!(GaussHermite::new(0).is_err());
    }

    #[test]
    fn survivor_examples() {
        assert_abs_diff_eq!(equicorrelated_min_survivor(0.0, 0.0, 2).unwrap(), 0.25, epsilon = 1e-15);
        for &t in &[-1.5, 0.0, 0.7, 2.3] {
            assert_abs_diff_eq!(
                equicorrelated_min_survivor(t, 1.0, 4).unwrap(),
                1.0 - phi(t),
                epsilon = 1e-15
            );
        }
        // Bivariate orthant: 1/4 + asin(rho)/(2π), which is 1/3 at rho = 1/2.
        assert_abs_diff_eq!(equicorrelated_min_survivor(0.0, 0.5, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-6);
        assert!(equicorrelated_min_survivor(0.0, -0.1, 2).is_err());
        assert!(equicorrelated_min_survivor(0.0, 1.01, 2).is_err());
        assert!(equicorrelated_min_survivor(0.0, 0.5, 0).is_err());
    }

    #[test]
    fn survivor_independent_matches_power() {
        let rule = GaussHermite::new(64).unwrap();
        for &t in &[-2.0, -0.3, 0.0, 1.1, 3.5] {
            for k in 1..=5 {
                // Go through the quadrature path with a tiny but nonzero rho.
                let q = equicorrelated_min_survivor_with(t, 1e-14, k, &rule).unwrap();
                assert_abs_diff_eq!(q, (1.0 - phi(t)).powi(k as i32), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = GaussLegendre::new(10).unwrap();
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(19) + 3.0 * x * x, -1.0, 1.0, 1), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(f64::exp, 0.0, 1.0, 4), std::f64::consts::E - 1.0, epsilon = 1e-14);
    }

    #[test]
    fn high_rho_matches_orthant_identity() {
        // k = 2, t = 0: 1/4 + asin(rho)/(2π)
        for &rho in &[0.6, 0.8, 0.9, 0.99, 0.999] {
            let exact = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert_abs_diff_eq!(equicorrelated_min_survivor(0.0, rho, 2).unwrap(), exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn node_doubling_is_small_for_moderate_rho() {
        for &rho in &[0.1, 0.3, 0.5] {
            for &t in &[-1.0, 0.0, 1.5, 3.0] {
                for k in [2, 5] {
                    assert!(node_doubling_error(t, rho, k, 64).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn invert_examples() {
        let tol = DEFAULT_INVERT_TOL;
        assert_abs_diff_eq!(invert_monotone(|x| x, 0.3, tol).unwrap(), 0.3, epsilon = tol);
        assert_abs_diff_eq!(invert_monotone(|x| x * x, 1e-4, tol).unwrap(), 1e-2, epsilon = tol);
        assert_abs_diff_eq!(invert_monotone(|x| x * x * x, 0.027, tol).unwrap(), 0.3, epsilon = tol);
        assert_eq!(invert_monotone(|x| x, 0.0, tol).unwrap(), 0.0);
        assert_eq!(invert_monotone(|x| x, 1.0, tol).unwrap(), 1.0);
        assert!(matches!(
            invert_monotone(|x| 0.5 * x, 0.7, tol),
            Err(Error::OutOfRange { .. })
        ));
        assert!(invert_monotone(|x| x, 0.5, 0.0).is_err());
    }

    #[test]
    fn tolerance_config_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        let bad = ToleranceConfig {
            quadrature_nodes: 8,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ToleranceConfig {
            abs_tol_invert: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
