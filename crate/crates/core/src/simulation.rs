//! Monte Carlo estimation of k-FDR, k-FWER, FDR and power.
//!
//! Test statistics follow the one-factor equicorrelated model
//! `X_i = μ_i + √ρ·Z + √(1−ρ)·ε_i` with one-sided p-values `1 − Φ(X_i)`.
//! Hypotheses `0..n0` are true nulls (`μ_i = 0`), the rest have
//! `μ_i = mu_alt`.
//!
//! Every iteration draws from its own ChaCha stream keyed by
//! `(seed, iteration_index)`, and iterations are reduced in fixed-size
//! chunks in index order, so results are bit-identical whether or not the
//! `parallel` feature is enabled.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{OrderedSample, PValueSample, Truth};
use crate::error::{Error, Result};
use crate::fk_models::FkModel;
use crate::numerics::phi;
use crate::schedules::{CriticalValueSchedule, ProcedureSpec};

const CHUNK: usize = 256;

/// Description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub n0: usize,
    pub k: usize,
    pub alpha: f64,
    pub rho: f64,
    pub mu_alt: f64,
    pub iterations: usize,
    pub seed: u64,
    pub procedures: Vec<ProcedureSpec>,
    /// Set every false-null p-value to exactly 0.
    pub force_nonnull_zero: bool,
}

impl SimulationConfig {
    /// `ρ = 0`, `mu_alt = 2`, 5000 iterations, seed 0, and the
    /// gen_bh / gen_hochberg / bh panel.
    pub fn new(n: usize, n0: usize, k: usize, alpha: f64) -> Self {
        Self {
            n,
            n0,
            k,
            alpha,
            rho: 0.0,
            mu_alt: 2.0,
            iterations: 5000,
            seed: 0,
            procedures: vec![ProcedureSpec::GenBh, ProcedureSpec::GenHochberg, ProcedureSpec::Bh],
            force_nonnull_zero: false,
        }
    }

    pub fn n1(&self) -> usize {
        self.n - self.n0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::invalid(format!(
                "need 1 <= k <= n, got k={}, n={}",
                self.k, self.n
            )));
        }
        if self.n0 > self.n {
            return Err(Error::invalid(format!("n0={} exceeds n={}", self.n0, self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !self.mu_alt.is_finite() {
            return Err(Error::invalid("mu_alt must be finite"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.procedures.is_empty() {
            return Err(Error::invalid("no procedures given"));
        }
        Ok(())
    }

    /// The `F_k` model implied by the data-generating process.
    pub fn model(&self) -> Result<FkModel> {
        FkModel::equicorrelated(self.k, self.rho)
    }

    /// Builds every procedure's schedule, failing before any draws are made.
    pub fn schedules(&self) -> Result<Vec<CriticalValueSchedule>> {
        self.validate()?;
        let model = self.model()?;
        self.procedures
            .iter()
            .map(|p| p.build(self.n, self.k, self.alpha, &model))
            .collect()
    }
}

/// Draws the sample for `iteration_index`. Deterministic in
/// `(config.seed, iteration_index)`.
pub fn draw_sample(config: &SimulationConfig, iteration_index: u64) -> PValueSample {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(iteration_index);
    let common: f64 = StandardNormal.sample(&mut rng);
    let a = config.rho.sqrt();
    let b = (1.0 - config.rho).sqrt();
    let mut values = Vec::with_capacity(config.n);
    let mut truth = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let eps: f64 = StandardNormal.sample(&mut rng);
        let null = i < config.n0;
        let mu = if null { 0.0 } else { config.mu_alt };
        let p = if !null && config.force_nonnull_zero {
            0.0
        } else {
            phi(-(mu + a * common + b * eps))
        };
        values.push(p);
        truth.push(if null { Truth::TrueNull } else { Truth::FalseNull });
    }
    PValueSample::with_truth(values, truth).expect("p-values lie in [0, 1] by construction")
}

/// Mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Estimated error rates of one procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSummary {
    pub procedure: String,
    pub kfdr: Estimate,
    pub kfwer: Estimate,
    pub fdr: Estimate,
    /// Mean fraction of false nulls rejected.
    pub power: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub procedures: Vec<ProcedureSummary>,
}

impl SimulationSummary {
    pub fn get(&self, procedure: &ProcedureSpec) -> Option<&ProcedureSummary> {
        let name = procedure.to_string();
        self.procedures.iter().find(|p| p.procedure == name)
    }
}

const METRICS: usize = 4;

/// Per-procedure sums and sums of squares of the four metrics.
#[derive(Debug, Clone)]
struct Accumulator {
    sum: Vec<[f64; METRICS]>,
    sumsq: Vec<[f64; METRICS]>,
}

impl Accumulator {
    fn new(procedures: usize) -> Self {
        Self {
            sum: vec![[0.0; METRICS]; procedures],
            sumsq: vec![[0.0; METRICS]; procedures],
        }
    }

    fn add(&mut self, proc_idx: usize, metrics: [f64; METRICS]) {
        for (m, &x) in metrics.iter().enumerate() {
            self.sum[proc_idx][m] += x;
            self.sumsq[proc_idx][m] += x * x;
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for p in 0..self.sum.len() {
            for m in 0..METRICS {
                self.sum[p][m] += other.sum[p][m];
                self.sumsq[p][m] += other.sumsq[p][m];
            }
        }
    }

    fn estimate(&self, proc_idx: usize, metric: usize, n: usize) -> Estimate {
        let nf = n as f64;
        let mean = self.sum[proc_idx][metric] / nf;
        let se = if n > 1 {
            let var = ((self.sumsq[proc_idx][metric] - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Estimate { mean, se }
    }
}

/// k-FDP, `1{V ≥ k}`, FDP and power for one decision.
fn iteration_metrics(r: usize, v: usize, k: usize, n1: usize) -> [f64; METRICS] {
    let kfdp = if v >= k && r > 0 { v as f64 / r as f64 } else { 0.0 };
    let kfwe = if v >= k { 1.0 } else { 0.0 };
    let fdp = if r > 0 { v as f64 / r as f64 } else { 0.0 };
    let power = if n1 > 0 { (r - v) as f64 / n1 as f64 } else { 0.0 };
    [kfdp, kfwe, fdp, power]
}

fn run_chunk(
    config: &SimulationConfig,
    schedules: &[CriticalValueSchedule],
    start: usize,
    end: usize,
) -> Accumulator {
    let mut acc = Accumulator::new(schedules.len());
    for it in start..end {
        let sample = draw_sample(config, it as u64);
        let ordered = OrderedSample::new(&sample);
        let truth = sample.truth().expect("simulated samples carry labels");
        for (p, schedule) in schedules.iter().enumerate() {
            let r = ordered
                .rejection_count(schedule)
                .expect("schedule length checked against n");
            let v = ordered.order()[..r]
                .iter()
                .filter(|&&i| truth[i] == Truth::TrueNull)
                .count();
            acc.add(p, iteration_metrics(r, v, config.k, config.n1()));
        }
    }
    acc
}

fn run_chunks(config: &SimulationConfig, schedules: &[CriticalValueSchedule]) -> Vec<Accumulator> {
    let n_chunks = config.iterations.div_ceil(CHUNK);
    let chunk = |c: usize| {
        let start = c * CHUNK;
        run_chunk(config, schedules, start, (start + CHUNK).min(config.iterations))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(chunk).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(chunk).collect()
    }
}

/// Runs `config.iterations` draws through every procedure.
pub fn run_experiment(config: &SimulationConfig) -> Result<SimulationSummary> {
    let schedules = config.schedules()?;
    let mut total = Accumulator::new(schedules.len());
    for part in run_chunks(config, &schedules) {
        total.merge(&part);
    }
    let n = config.iterations;
    let procedures = config
        .procedures
        .iter()
        .enumerate()
        .map(|(p, spec)| ProcedureSummary {
            procedure: spec.to_string(),
            kfdr: total.estimate(p, 0, n),
            kfwer: total.estimate(p, 1, n),
            fdr: total.estimate(p, 2, n),
            power: total.estimate(p, 3, n),
        })
        .collect();
    Ok(SimulationSummary {
        config: config.clone(),
        procedures,
    })
}

/// One `(n0, procedure)` row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n0: usize,
    pub summary: ProcedureSummary,
    pub iterations: usize,
    pub seed: u64,
}

/// Runs `base` once per `n0` in the grid, all with the same seed.
pub fn figure_sweep(base: &SimulationConfig, n0_grid: &[usize]) -> Result<Vec<SweepRow>> {
    if n0_grid.is_empty() {
        return Err(Error::invalid("n0 grid is empty"));
    }
    if let Some(&bad) = n0_grid.iter().find(|&&n0| n0 < base.k || n0 > base.n) {
        return Err(Error::invalid(format!(
            "n0={bad} outside [k, n] = [{}, {}]",
            base.k, base.n
        )));
    }
    let mut rows = Vec::new();
    for &n0 in n0_grid {
        let config = SimulationConfig {
            n0,
            ..base.clone()
        };
        let summary = run_experiment(&config)?;
        rows.extend(summary.procedures.into_iter().map(|s| SweepRow {
            n0,
            summary: s,
            iterations: config.iterations,
            seed: config.seed,
        }));
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 12] = [
    "n0",
    "procedure",
    "kfdr_hat",
    "kfdr_se",
    "kfwer_hat",
    "kfwer_se",
    "fdr_hat",
    "fdr_se",
    "power_hat",
    "power_se",
    "iterations",
    "seed",
];

/// Writes sweep rows as CSV with a header row.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        let s = &row.summary;
        w.write_record([
            row.n0.to_string(),
            s.procedure.clone(),
            s.kfdr.mean.to_string(),
            s.kfdr.se.to_string(),
            s.kfwer.mean.to_string(),
            s.kfwer.se.to_string(),
            s.fdr.mean.to_string(),
            s.fdr.se.to_string(),
            s.power.mean.to_string(),
            s.power.se.to_string(),
            row.iterations.to_string(),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Difference in estimated k-FDR between two procedures at one `n0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfdrComparison {
    pub n0: usize,
    /// `first − second`.
    pub diff: f64,
    /// `√(se_first² + se_second²)`.
    pub combined_se: f64,
}

/// Pairs up `first` and `second` at each `n0` of a sweep.
pub fn compare_kfdr(rows: &[SweepRow], first: &str, second: &str) -> Vec<KfdrComparison> {
    let mut out = Vec::new();
    for a in rows.iter().filter(|r| r.summary.procedure == first) {
        if let Some(b) = rows
            .iter()
            .find(|r| r.n0 == a.n0 && r.summary.procedure == second)
        {
            out.push(KfdrComparison {
                n0: a.n0,
                diff: a.summary.kfdr.mean - b.summary.kfdr.mean,
                combined_se: a.summary.kfdr.se.hypot(b.summary.kfdr.se),
            });
        }
    }
    out
}

/// Critical value and k-FDR lower bound of the generalized Simes
/// counterexample (k = 2, i.i.d. uniform nulls).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleBound {
    /// `α_{n1+2} = √((n1+2)(n1+1)α / (n(n−1)))`.
    pub alpha_crit: f64,
    /// `2/(n1+2) · [1 − (1−c)^{n0} − n0 c (1−c)^{n0−1}]`.
    pub bound: f64,
}

/// Lower bound on the 2-FDR of the generalized Simes stepup when the `n1`
/// false nulls are always rejected first.
pub fn counterexample_bound(n0: usize, n1: usize, alpha: f64) -> Result<CounterexampleBound> {
    if n0 < 2 {
        return Err(Error::invalid(format!("need n0 >= 2 for k = 2, got {n0}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let n = (n0 + n1) as f64;
    let c = (((n1 + 2) * (n1 + 1)) as f64 * alpha / (n * (n - 1.0))).sqrt();
    let n0i = n0 as i32;
    let miss = (1.0 - c).powi(n0i) + n0 as f64 * c * (1.0 - c).powi(n0i - 1);
    let bound = (2.0 / (n1 + 2) as f64 * (1.0 - miss)).max(0.0);
    Ok(CounterexampleBound {
        alpha_crit: c,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            iterations: 300,
            seed: 42,
            ..SimulationConfig::new(20, 10, 2, 0.05)
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let c = small_config();
        assert_eq!(draw_sample(&c, 17), draw_sample(&c, 17));
        assert_ne!(draw_sample(&c, 17), draw_sample(&c, 18));
        let s = draw_sample(&c, 3);
        assert_eq!(s.n0(), Some(10));
    }

    #[test]
    fn forced_nonnulls_are_zero() {
        let c = SimulationConfig {
            force_nonnull_zero: true,
            ..small_config()
        };
        let s = draw_sample(&c, 0);
        assert!(s.values()[10..].iter().all(|&p| p == 0.0));
        assert!(s.values()[..10].iter().all(|&p| p > 0.0));
    }

    #[test]
    fn validation() {
        let mut c = small_config();
        c.rho = 1.0;
        assert!(run_experiment(&c).is_err());
        let mut c = small_config();
        c.n0 = 21;
        assert!(run_experiment(&c).is_err());
        let mut c = small_config();
        c.iterations = 0;
        assert!(run_experiment(&c).is_err());
        let mut c = small_config();
        c.k = 21;
        assert!(run_experiment(&c).is_err());
        assert!(figure_sweep(&small_config(), &[1]).is_err());
        assert!(figure_sweep(&small_config(), &[]).is_err());
    }

    #[test]
    fn fewer_nulls_than_k_gives_zero_kfdr() {
        let c = SimulationConfig {
            n0: 1,
            ..small_config()
        };
        let s = run_experiment(&c).unwrap();
        for p in &s.procedures {
            assert_eq!(p.kfdr.mean, 0.0);
            assert_eq!(p.kfwer.mean, 0.0);
        }
    }

    #[test]
    fn single_iteration_is_raw() {
        let c = SimulationConfig {
            iterations: 1,
            n0: 12,
            ..small_config()
        };
        let s = run_experiment(&c).unwrap();
        let sample = draw_sample(&c, 0);
        let schedules = c.schedules().unwrap();
        for (summary, schedule) in s.procedures.iter().zip(&schedules) {
            let out = crate::engine::apply(&sample, schedule).unwrap();
            let v = out.v.unwrap();
            let expect = iteration_metrics(out.r, v, 2, 8);
            assert_eq!(summary.kfdr.mean, expect[0]);
            assert_eq!(summary.kfwer.mean, expect[1]);
            assert_eq!(summary.fdr.mean, expect[2]);
            assert_eq!(summary.power.mean, expect[3]);
            assert_eq!(summary.kfdr.se, 0.0);
        }
    }

    #[test]
    fn all_null_power_is_zero() {
        let c = SimulationConfig {
            n0: 20,
            ..small_config()
        };
        let s = run_experiment(&c).unwrap();
        assert!(s.procedures.iter().all(|p| p.power.mean == 0.0));
    }

    #[test]
    fn reruns_are_identical() {
        let c = small_config();
        assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    }

    #[test]
    fn chunked_matches_sequential_sum() {
        let c = SimulationConfig {
            iterations: 700,
            ..small_config()
        };
        let schedules = c.schedules().unwrap();
        let serial = run_chunk(&c, &schedules, 0, 700);
        let s = run_experiment(&c).unwrap();
        for p in 0..schedules.len() {
            assert_abs_diff_eq!(s.procedures[p].kfdr.mean, serial.sum[p][0] / 700.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn counterexample_values() {
        let b = counterexample_bound(100, 1, 0.05).unwrap();
        assert_abs_diff_eq!(b.alpha_crit, 0.00545, epsilon = 1e-5);
        assert_abs_diff_eq!(b.bound, 0.0692, epsilon = 2e-4);
        let b = counterexample_bound(2, 0, 0.0).unwrap();
        assert_eq!(b.bound, 0.0);
        let b = counterexample_bound(2, 0, 1e-12).unwrap();
        assert!(b.bound < 1e-10);
        assert!(counterexample_bound(1, 1, 0.05).is_err());
        assert!(counterexample_bound(5, 1, 1.0).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        let rows = figure_sweep(&small_config(), &[2, 10, 20]).unwrap();
        assert_eq!(rows.len(), 9);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        assert_eq!(lines.count(), 9);
        assert_eq!(compare_kfdr(&rows, "gen_bh", "gen_hochberg").len(), 3);
    }
}
