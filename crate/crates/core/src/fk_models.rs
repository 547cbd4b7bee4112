//! k-th order joint null distributions.
//!
//! `F_k(x)` is the probability that the largest of any `k` null p-values is
//! at most `x`. All `k`-subsets are assumed to share the same `F_k`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::{
    equicorrelated_min_survivor_with, invert_monotone, quantile_unchecked, GaussHermite,
    ToleranceConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub enum FkKind {
    /// Independent U(0,1) nulls: `F_k(x) = x^k`.
    IndependentUniform,
    /// One-sided p-values `1 − Φ(X_i)` of equicorrelated standard normals.
    EquicorrelatedNormal { rho: f64, rule: GaussHermite },
    /// Piecewise-linear interpolation of an estimated grid.
    Empirical { grid: Vec<(f64, f64)> },
}

/// A k-th order joint null distribution with evaluation and inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct FkModel {
    k: usize,
    kind: FkKind,
    invert_tol: f64,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

impl FkModel {
    pub fn independent(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            k,
            kind: FkKind::IndependentUniform,
            invert_tol: ToleranceConfig::default().abs_tol_invert,
        })
    }

    pub fn equicorrelated(k: usize, rho: f64) -> Result<Self> {
        Self::equicorrelated_with(k, rho, ToleranceConfig::default())
    }

    /// Equicorrelated model; `rho` must lie in `[0, 1]` (1 is the
    /// perfectly dependent limit where `F_k(x) = x`).
    pub fn equicorrelated_with(k: usize, rho: f64, tol: ToleranceConfig) -> Result<Self> {
        check_k(k)?;
        tol.validate()?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!(
                "equicorrelated model needs 0 <= rho <= 1, got {rho}"
            )));
        }
        Ok(Self {
            k,
            kind: FkKind::EquicorrelatedNormal {
                rho,
                rule: GaussHermite::new(tol.quadrature_nodes)?,
            },
            invert_tol: tol.abs_tol_invert,
        })
    }

    /// Empirical model from a grid of `(x, F_k(x))` pairs.
    ///
    /// The grid must start at `(0, 0)`, end at `(1, 1)`, have strictly
    /// increasing `x` and nondecreasing `F_k`.
    pub fn empirical(k: usize, grid: Vec<(f64, f64)>) -> Result<Self> {
        check_k(k)?;
        validate_grid(&grid)?;
        Ok(Self {
            k,
            kind: FkKind::Empirical { grid },
            invert_tol: ToleranceConfig::default().abs_tol_invert,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> &FkKind {
        &self.kind
    }

    /// Short human-readable description, e.g. `equicorrelated(rho=0.1)`.
    pub fn describe(&self) -> String {
        match &self.kind {
            FkKind::IndependentUniform => "independent".to_string(),
            FkKind::EquicorrelatedNormal { rho, .. } => format!("equicorrelated(rho={rho})"),
            FkKind::Empirical { grid } => format!("empirical({} points)", grid.len()),
        }
    }

    /// `F_k(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_probability("x", x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match &self.kind {
            FkKind::IndependentUniform => x.powi(self.k as i32),
            FkKind::EquicorrelatedNormal { rho, rule } => {
                // P_i <= x  <=>  X_i >= Φ⁻¹(1 − x) = −Φ⁻¹(x)
                let t = -quantile_unchecked(x);
                equicorrelated_min_survivor_with(t, *rho, self.k, rule)
                    .expect("model parameters validated at construction")
            }
            FkKind::Empirical { grid } => interpolate(grid, x),
        }
    }

    /// Smallest-bracket solution of `F_k(x) = target`.
    pub fn invert(&self, target: f64) -> Result<f64> {
        check_probability("target", target)?;
        match &self.kind {
            FkKind::IndependentUniform => Ok(target.powf(1.0 / self.k as f64)),
            _ => invert_monotone(|x| self.eval_unchecked(x), target, self.invert_tol),
        }
    }

    /// Writes an empirical model as `x,fk` CSV. Other kinds are tabulated on
    /// `points + 1` equally spaced abscissae.
    pub fn write_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let rows: Vec<(f64, f64)> = match &self.kind {
            FkKind::Empirical { grid } => grid.clone(),
            _ => {
                let points = points.max(1);
                (0..=points)
                    .map(|j| {
                        let x = j as f64 / points as f64;
                        (x, self.eval_unchecked(x))
                    })
                    .collect()
            }
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "fk"])?;
        for (x, f) in rows {
            w.write_record([x.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an `x,fk` CSV into an empirical model of order `k`.
    pub fn read_csv<R: Read>(input: R, k: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "fk" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header \"x,fk\"".to_string(),
            });
        }
        let mut grid = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: "expected two columns".to_string(),
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse {
                        line,
                        message: e.to_string(),
                    })
            };
            grid.push((parse(0)?, parse(1)?));
        }
        Self::empirical(k, grid)
    }
}

fn validate_grid(grid: &[(f64, f64)]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::invalid("empirical grid needs at least two points"));
    }
    if grid[0] != (0.0, 0.0) || grid[grid.len() - 1] != (1.0, 1.0) {
        return Err(Error::invalid("empirical grid must start at (0,0) and end at (1,1)"));
    }
    for w in grid.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if !(x1 > x0) || !(f1 >= f0) || !(0.0..=1.0).contains(&f1) {
            return Err(Error::invalid(format!(
                "empirical grid not monotone between ({x0}, {f0}) and ({x1}, {f1})"
            )));
        }
    }
    Ok(())
}

fn interpolate(grid: &[(f64, f64)], x: f64) -> f64 {
    let idx = grid.partition_point(|&(gx, _)| gx <= x);
    if idx == 0 {
        return grid[0].1;
    }
    if idx == grid.len() {
        return grid[grid.len() - 1].1;
    }
    let (x0, f0) = grid[idx - 1];
    let (x1, f1) = grid[idx];
    let w = (x - x0) / (x1 - x0);
    (f0 + w * (f1 - f0)).clamp(f0, f1)
}

/// Estimates `F_k` from `draws` null k-tuples produced by `sampler`.
///
/// `sampler` fills a buffer of length `k` with one exchangeable tuple of null
/// p-values. The empirical CDF of the tuple maxima is tabulated on
/// `grid_size + 1` equally spaced points with endpoints pinned at `(0, 0)` and
/// `(1, 1)`.
pub fn fit_empirical_fk(
    k: usize,
    mut sampler: impl FnMut(&mut [f64]),
    draws: usize,
    grid_size: usize,
) -> Result<FkModel> {
    check_k(k)?;
    if draws == 0 || grid_size == 0 {
        return Err(Error::invalid("draws and grid_size must be positive"));
    }
    let mut buf = vec![0.0; k];
    let mut maxima = Vec::with_capacity(draws);
    for _ in 0..draws {
        sampler(&mut buf);
        let mut m = f64::NEG_INFINITY;
        for &p in &buf {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::DegenerateSampler(format!("sampler produced {p}")));
            }
            m = m.max(p);
        }
        maxima.push(m);
    }
    maxima.sort_by(f64::total_cmp);
    if maxima[0] == maxima[draws - 1] {
        return Err(Error::DegenerateSampler(format!(
            "all {draws} tuple maxima equal {}",
            maxima[0]
        )));
    }
    let n = draws as f64;
    let mut grid = Vec::with_capacity(grid_size + 1);
    grid.push((0.0, 0.0));
    for j in 1..grid_size {
        let x = j as f64 / grid_size as f64;
        let count = maxima.partition_point(|&m| m <= x);
        grid.push((x, count as f64 / n));
    }
    grid.push((1.0, 1.0));
    FkModel::empirical(k, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        let ind = FkModel::independent(2).unwrap();
        assert_abs_diff_eq!(ind.eval(0.1).unwrap(), 0.01, epsilon = 1e-15);
        let eq = FkModel::equicorrelated(2, 0.0).unwrap();
        assert_abs_diff_eq!(eq.eval(0.5).unwrap(), 0.25, epsilon = 1e-12);
        assert!(ind.eval(-0.1).is_err());
        assert!(ind.eval(1.1).is_err());
    }

    #[test]
    fn endpoints_are_pinned() {
        for m in [
            FkModel::independent(3).unwrap(),
            FkModel::equicorrelated(3, 0.4).unwrap(),
            FkModel::equicorrelated(3, 1.0).unwrap(),
        ] {
            assert_eq!(m.eval(0.0).unwrap(), 0.0);
            assert_eq!(m.eval(1.0).unwrap(), 1.0);
            assert_eq!(m.invert(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn perfect_dependence_is_identity() {
        let m = FkModel::equicorrelated(4, 1.0).unwrap();
        for &x in &[0.01, 0.3, 0.77] {
            assert_abs_diff_eq!(m.eval(x).unwrap(), x, epsilon = 1e-14);
        }
    }

    #[test]
    fn invert_examples() {
        let ind = FkModel::independent(2).unwrap();
        assert_abs_diff_eq!(ind.invert(1e-4).unwrap(), 1e-2, epsilon = 1e-15);
        let eq = FkModel::equicorrelated(2, 0.10).unwrap();
        let x = eq.invert(0.0005).unwrap();
        assert_abs_diff_eq!(eq.eval(x).unwrap(), 0.0005, epsilon = 1e-10);
        assert!(eq.invert(1.5).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FkModel::independent(0).is_err());
        assert!(FkModel::equicorrelated(2, -0.2).is_err());
        assert!(FkModel::equicorrelated(2, 1.2).is_err());
        assert!(FkModel::empirical(2, vec![(0.0, 0.0), (0.5, 0.6), (0.4, 0.7), (1.0, 1.0)]).is_err());
        assert!(FkModel::empirical(2, vec![(0.0, 0.0), (0.5, 0.6), (1.0, 0.9)]).is_err());
    }

    #[test]
    fn fit_independent_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = fit_empirical_fk(2, |buf| buf.iter_mut().for_each(|p| *p = rng.random()), 1_000_000, 100)
            .unwrap();
        let se = (0.01_f64 * 0.99 / 1e6).sqrt();
        assert_abs_diff_eq!(m.eval(0.1).unwrap(), 0.01, epsilon = 4.0 * se);
    }

    #[test]
    fn fit_identical_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = fit_empirical_fk(
            3,
            |buf| {
                let u: f64 = rng.random();
                buf.fill(u);
            },
            200_000,
            50,
        )
        .unwrap();
        for &x in &[0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(m.eval(x).unwrap(), x, epsilon = 0.005);
        }
    }

    #[test]
    fn fit_flags_degenerate_sampler() {
        let r = fit_empirical_fk(2, |buf| buf.fill(0.3), 1000, 10);
        assert!(matches!(r, Err(Error::DegenerateSampler(_))));
        let r = fit_empirical_fk(2, |buf| buf.fill(1.3), 1000, 10);
        assert!(matches!(r, Err(Error::DegenerateSampler(_))));
    }

    #[test]
    fn csv_round_trip() {
        let grid = vec![(0.0, 0.0), (0.25, 0.1), (0.5, 0.3), (1.0, 1.0)];
        let m = FkModel::empirical(2, grid.clone()).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, 0).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,fk\n"));
        let back = FkModel::read_csv(buf.as_slice(), 2).unwrap();
        assert_eq!(back, m);
        assert_abs_diff_eq!(back.eval(0.375).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let r = FkModel::read_csv("a,b\n0,0\n1,1\n".as_bytes(), 2);
        assert!(matches!(r, Err(Error::Parse { .. })));
        let r = FkModel::read_csv("x,fk\n0,0\n0.5,oops\n1,1\n".as_bytes(), 2);
        assert!(matches!(r, Err(Error::Parse { line: 3, .. })));
    }
}
