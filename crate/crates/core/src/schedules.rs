//! Critical-value schedules for the generalized stepwise procedures.
//!
//! Every schedule is specified through `F_k`-targets: the procedure fixes
//! `F_k(α_i)` and the critical value `α_i` is obtained by inverting the
//! model. Targets are kept next to the inverted values so checks can work on
//! the exact targets.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fk_models::FkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    StepUp,
    StepDown,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::StepUp => "stepup",
            Direction::StepDown => "stepdown",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Procedure identity carried by a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Procedure {
    /// Classical Benjamini-Hochberg, `α_i = iα/n`.
    BhClassic,
    /// k-FDR stepup generalizing BH.
    GenBh,
    /// k-FDR stepup generalizing Benjamini-Yekutieli (arbitrary dependence).
    GenBy,
    /// k-FWER stepdown generalizing Holm.
    GenHolm,
    /// k-FWER stepup with the generalized Holm constants (positive dependence).
    GenHochberg,
    /// Marginal k-FWER stepdown `α_i = kα/(n + k − i∨k)`.
    LehmannRomano,
    /// Stepup with generalized Simes constants. Not k-FDR controlling.
    GenSimes,
    /// k-FWER stepup rescaling an arbitrary base sequence.
    RescaledStepup,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Procedure::BhClassic => "bh",
            Procedure::GenBh => "gen_bh",
            Procedure::GenBy => "gen_by",
            Procedure::GenHolm => "gen_holm",
            Procedure::GenHochberg => "gen_hochberg",
            Procedure::LehmannRomano => "lehmann_romano",
            Procedure::GenSimes => "gen_simes",
            Procedure::RescaledStepup => "rescaled_stepup",
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Warning attached to generalized Simes schedules.
pub const SIMES_WARNING: &str =
    "generalized Simes constants do not control the k-FDR in general";

/// Nondecreasing critical values `α_1 ≤ … ≤ α_n` for a stepwise procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueSchedule {
    procedure: Procedure,
    k: usize,
    alpha_level: f64,
    direction: Direction,
    f_targets: Vec<f64>,
    alphas: Vec<f64>,
    warning: Option<&'static str>,
}

impl CriticalValueSchedule {
    /// Builds a schedule by inverting `targets` through `model`.
    ///
    /// Bisection noise can leave neighbouring inverted values a few ulps out
    /// of order; a running maximum restores monotonicity.
    pub fn from_targets(
        procedure: Procedure,
        k: usize,
        alpha_level: f64,
        direction: Direction,
        targets: Vec<f64>,
        model: &FkModel,
    ) -> Result<Self> {
        check_targets(&targets)?;
        let mut alphas = Vec::with_capacity(targets.len());
        let mut prev_target = f64::NAN;
        let mut prev_alpha = 0.0_f64;
        for &t in &targets {
            let a = if t == prev_target {
                prev_alpha
            } else {
                model.invert(t)?.max(prev_alpha)
            };
            alphas.push(a);
            prev_target = t;
            prev_alpha = a;
        }
        Ok(Self {
            procedure,
            k,
            alpha_level,
            direction,
            f_targets: targets,
            alphas,
            warning: None,
        })
    }

    /// Builds a schedule whose critical values are given directly (marginal
    /// constructions). The targets are recorded equal to the critical values.
    pub fn from_alphas(
        procedure: Procedure,
        k: usize,
        alpha_level: f64,
        direction: Direction,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        check_targets(&alphas)?;
        Ok(Self {
            procedure,
            k,
            alpha_level,
            direction,
            f_targets: alphas.clone(),
            alphas,
            warning: None,
        })
    }

    pub fn procedure(&self) -> Procedure {
        self.procedure
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha_level(&self) -> f64 {
        self.alpha_level
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn f_targets(&self) -> &[f64] {
        &self.f_targets
    }

    pub fn warning(&self) -> Option<&'static str> {
        self.warning
    }

    /// Same constants, other direction.
    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    fn with_warning(mut self, warning: &'static str) -> Self {
        self.warning = Some(warning);
        self
    }
}

fn check_targets(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("schedule must have at least one entry"));
    }
    let mut prev = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("critical value {} = {v} outside [0, 1]", i + 1)));
        }
        if v < prev {
            return Err(Error::invalid(format!(
                "critical values decrease at index {}: {prev} > {v}",
                i + 1
            )));
        }
        prev = v;
    }
    Ok(())
}

/// Exact `C(n, k)` in 128-bit arithmetic.
pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc = C(n - k + j, j) before the step; the division is exact.
        let num = (n - k + j + 1) as u128;
        acc = acc
            .checked_mul(num)
            .ok_or(Error::Overflow { n, k })?
            / (j as u128 + 1);
    }
    Ok(acc)
}

/// Subset-counting weights `a_i = C(i, k)` for `i = k..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialWeights {
    n: usize,
    k: usize,
    values: Vec<u128>,
}

impl BinomialWeights {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_order(n, k)?;
        let mut values = Vec::with_capacity(n - k + 1);
        let mut a: u128 = 1;
        values.push(a);
        for i in k..n {
            // C(i+1, k) = C(i, k) (i+1) / (i+1-k)
            a = a
                .checked_mul(i as u128 + 1)
                .ok_or(Error::Overflow { n: i + 1, k })?
                / (i + 1 - k) as u128;
            values.push(a);
        }
        Ok(Self { n, k, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `a_i` for `k ≤ i ≤ n`.
    pub fn get(&self, i: usize) -> u128 {
        assert!(
            i >= self.k && i <= self.n,
            "a_{i} requested outside {}..={}",
            self.k,
            self.n
        );
        self.values[i - self.k]
    }

    fn get_f64(&self, i: usize) -> f64 {
        self.get(i) as f64
    }
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

fn check_common(n: usize, k: usize, alpha: f64, model: &FkModel) -> Result<BinomialWeights> {
    check_alpha(alpha)?;
    if model.k() != k {
        return Err(Error::invalid(format!(
            "model is of order {} but schedule needs k={k}",
            model.k()
        )));
    }
    BinomialWeights::new(n, k)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Generalized BH `F_k`-targets: `α/a_n` for `i ≤ k`, and
/// `i(n+k−i)α / (k n a_{n+k−i})` for `i ≥ k`.
pub fn gen_bh_targets(w: &BinomialWeights, alpha: f64) -> Vec<f64> {
    let (n, k) = (w.n(), w.k());
    (1..=n)
        .map(|i| {
            if i <= k {
                alpha / w.get_f64(n)
            } else {
                // Ratio first, so targets never fall below α/a_{n+k-i} by rounding.
                let ratio = (i * (n + k - i)) as f64 / (k * n) as f64;
                ratio * (alpha / w.get_f64(n + k - i))
            }
        })
        .collect()
}

/// k-FDR controlling stepup generalizing BH (positive dependence).
pub fn gen_bh(n: usize, k: usize, alpha: f64, model: &FkModel) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    CriticalValueSchedule::from_targets(
        Procedure::GenBh,
        k,
        alpha,
        Direction::StepUp,
        gen_bh_targets(&w, alpha),
        model,
    )
}

/// Generalized BY targets `(i∨k)α / (k C(n,k) Σ_{r=k}^n 1/r)`, capped at 1
/// (the raw value can reach `kα` when `n` is close to `k`).
pub fn gen_by_targets(w: &BinomialWeights, alpha: f64) -> Vec<f64> {
    let (n, k) = (w.n(), w.k());
    let harmonic: f64 = (k..=n).map(|r| 1.0 / r as f64).sum();
    let denom = k as f64 * w.get_f64(n) * harmonic;
    (1..=n).map(|i| (i.max(k) as f64 * alpha / denom).min(1.0)).collect()
}

/// k-FDR controlling stepup under arbitrary dependence, generalizing BY.
pub fn gen_by(n: usize, k: usize, alpha: f64, model: &FkModel) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    CriticalValueSchedule::from_targets(
        Procedure::GenBy,
        k,
        alpha,
        Direction::StepUp,
        gen_by_targets(&w, alpha),
        model,
    )
}

/// Generalized Holm targets `α / a_{n+k−i∨k}`.
pub fn gen_holm_targets(w: &BinomialWeights, alpha: f64) -> Vec<f64> {
    let (n, k) = (w.n(), w.k());
    (1..=n).map(|i| alpha / w.get_f64(n + k - i.max(k))).collect()
}

pub fn gen_holm_stepdown(
    n: usize,
    k: usize,
    alpha: f64,
    model: &FkModel,
) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    CriticalValueSchedule::from_targets(
        Procedure::GenHolm,
        k,
        alpha,
        Direction::StepDown,
        gen_holm_targets(&w, alpha),
        model,
    )
}

/// The generalized Holm constants used as a stepup (k-FWER under MTP₂).
pub fn gen_hochberg_stepup(
    n: usize,
    k: usize,
    alpha: f64,
    model: &FkModel,
) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    CriticalValueSchedule::from_targets(
        Procedure::GenHochberg,
        k,
        alpha,
        Direction::StepUp,
        gen_holm_targets(&w, alpha),
        model,
    )
}

/// `α_i = kα / (n + k − i∨k)`, built from marginal p-values only.
pub fn lehmann_romano_stepdown(n: usize, k: usize, alpha: f64) -> Result<CriticalValueSchedule> {
    check_order(n, k)?;
    check_alpha(alpha)?;
    let alphas = (1..=n)
        .map(|i| k as f64 * alpha / (n + k - i.max(k)) as f64)
        .collect();
    CriticalValueSchedule::from_alphas(Procedure::LehmannRomano, k, alpha, Direction::StepDown, alphas)
}

/// Generalized Simes targets `(a_{i∨k} / a_n) α`.
pub fn gen_simes_targets(w: &BinomialWeights, alpha: f64) -> Vec<f64> {
    let (n, k) = (w.n(), w.k());
    let a_n = w.get_f64(n);
    (1..=n).map(|i| w.get_f64(i.max(k)) / a_n * alpha).collect()
}

/// Stepup with generalized Simes constants. The result carries
/// [`SIMES_WARNING`].
pub fn gen_simes(n: usize, k: usize, alpha: f64, model: &FkModel) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    Ok(CriticalValueSchedule::from_targets(
        Procedure::GenSimes,
        k,
        alpha,
        Direction::StepUp,
        gen_simes_targets(&w, alpha),
        model,
    )?
    .with_warning(SIMES_WARNING))
}

/// Classical BH constants `iα/n`.
pub fn bh_classic(n: usize, alpha: f64) -> Result<CriticalValueSchedule> {
    check_order(n, 1)?;
    check_alpha(alpha)?;
    let alphas = (1..=n).map(|i| i as f64 * alpha / n as f64).collect();
    CriticalValueSchedule::from_alphas(Procedure::BhClassic, 1, alpha, Direction::StepUp, alphas)
}

fn check_base(n: usize, base: &[f64]) -> Result<()> {
    if base.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: base.len(),
        });
    }
    check_targets(base)
}

/// `S′_{k,n}(n0)` from precomputed `F_k(α′_j)`, `j = 1..=n` (0-based slice).
fn s_prime_from_values(w: &BinomialWeights, n0: usize, f_base: &[f64]) -> f64 {
    let (n, k) = (w.n(), w.k());
    let at = |j: usize| f_base[j - 1];
    let mut acc = at(n - n0 + k);
    for i in k + 1..=n0 {
        acc += (at(n - n0 + i) - at(n - n0 + i - 1)) / w.get_f64(i);
    }
    w.get_f64(n0) * acc
}

/// `S′_{k,n}(n0) = C(n0,k) [F_k(α′_{n−n0+k}) + Σ_{i=k+1}^{n0} a_i⁻¹ {F_k(α′_{n−n0+i}) − F_k(α′_{n−n0+i−1})}]`.
pub fn s_prime(n: usize, k: usize, n0: usize, base: &[f64], model: &FkModel) -> Result<f64> {
    check_order(n, k)?;
    if n0 < k || n0 > n {
        return Err(Error::invalid(format!("need k <= n0 <= n, got n0={n0}")));
    }
    check_base(n, base)?;
    let w = BinomialWeights::new(n, k)?;
    let f_base = base
        .iter()
        .map(|&b| model.eval(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(s_prime_from_values(&w, n0, &f_base))
}

/// k-FWER stepup from an arbitrary nondecreasing base sequence:
/// `F_k(α_i) = α F_k(α′_{i∨k}) / D′` with `D′ = max_{k≤n0≤n} S′(n0)`.
pub fn rescaled_stepup(
    n: usize,
    k: usize,
    alpha: f64,
    base: &[f64],
    model: &FkModel,
) -> Result<CriticalValueSchedule> {
    let w = check_common(n, k, alpha, model)?;
    check_base(n, base)?;
    let f_base = base
        .iter()
        .map(|&b| model.eval(b))
        .collect::<Result<Vec<_>>>()?;
    let d_prime = (k..=n)
        .map(|n0| s_prime_from_values(&w, n0, &f_base))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(d_prime > 0.0) {
        return Err(Error::invalid(
            "base sequence has F_k(α′_n) = 0; rescaling is undefined",
        ));
    }
    let targets = (1..=n)
        .map(|i| (alpha * f_base[i.max(k) - 1] / d_prime).min(alpha))
        .collect();
    CriticalValueSchedule::from_targets(
        Procedure::RescaledStepup,
        k,
        alpha,
        Direction::StepUp,
        targets,
        model,
    )
}

/// Base sequence for [`rescaled_stepup`] when named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpec {
    /// Generalized Hochberg critical values under the same model.
    Hochberg,
    /// `α′_i ≡ c`.
    Constant(f64),
}

/// Named procedure with everything needed to build its schedule from
/// `(n, k, α, model)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcedureSpec {
    Bh,
    GenBh,
    GenBy,
    GenHolm,
    GenHochberg,
    LehmannRomano,
    GenSimes,
    Rescaled(BaseSpec),
}

impl ProcedureSpec {
    pub fn build(&self, n: usize, k: usize, alpha: f64, model: &FkModel) -> Result<CriticalValueSchedule> {
        match self {
            ProcedureSpec::Bh => bh_classic(n, alpha),
            ProcedureSpec::GenBh => gen_bh(n, k, alpha, model),
            ProcedureSpec::GenBy => gen_by(n, k, alpha, model),
            ProcedureSpec::GenHolm => gen_holm_stepdown(n, k, alpha, model),
            ProcedureSpec::GenHochberg => gen_hochberg_stepup(n, k, alpha, model),
            ProcedureSpec::LehmannRomano => lehmann_romano_stepdown(n, k, alpha),
            ProcedureSpec::GenSimes => gen_simes(n, k, alpha, model),
            ProcedureSpec::Rescaled(base) => {
                let base = match base {
                    BaseSpec::Hochberg => gen_hochberg_stepup(n, k, alpha, model)?.alphas,
                    BaseSpec::Constant(c) => vec![*c; n],
                };
                rescaled_stepup(n, k, alpha, &base, model)
            }
        }
    }
}

impl fmt::Display for ProcedureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcedureSpec::Bh => f.write_str("bh"),
            ProcedureSpec::GenBh => f.write_str("gen_bh"),
            ProcedureSpec::GenBy => f.write_str("gen_by"),
            ProcedureSpec::GenHolm => f.write_str("gen_holm"),
            ProcedureSpec::GenHochberg => f.write_str("gen_hochberg"),
            ProcedureSpec::LehmannRomano => f.write_str("lehmann_romano"),
            ProcedureSpec::GenSimes => f.write_str("gen_simes"),
            ProcedureSpec::Rescaled(BaseSpec::Hochberg) => f.write_str("rescaled_hochberg"),
            ProcedureSpec::Rescaled(BaseSpec::Constant(c)) => write!(f, "rescaled_const:{c}"),
        }
    }
}

impl FromStr for ProcedureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim() {
            "bh" | "bh_classic" => ProcedureSpec::Bh,
            "gen_bh" => ProcedureSpec::GenBh,
            "gen_by" => ProcedureSpec::GenBy,
            "gen_holm" | "gen_holm_stepdown" => ProcedureSpec::GenHolm,
            "gen_hochberg" | "gen_hochberg_stepup" => ProcedureSpec::GenHochberg,
            "lehmann_romano" => ProcedureSpec::LehmannRomano,
            "gen_simes" => ProcedureSpec::GenSimes,
            "rescaled_hochberg" => ProcedureSpec::Rescaled(BaseSpec::Hochberg),
            other => match other.strip_prefix("rescaled_const:") {
                Some(c) => {
                    let c: f64 = c
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad constant in '{other}'")))?;
                    if !(c > 0.0 && c <= 1.0) {
                        return Err(Error::invalid(format!("rescaled constant must lie in (0, 1], got {c}")));
                    }
                    ProcedureSpec::Rescaled(BaseSpec::Constant(c))
                }
                None => return Err(Error::invalid(format!("unknown procedure '{other}'"))),
            },
        };
        Ok(spec)
    }
}
