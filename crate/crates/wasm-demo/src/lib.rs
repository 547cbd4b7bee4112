//! Browser demo: critical-value curves, one simulation point and the
//! generalized Simes counterexample. The `*_json` functions are plain Rust
//! so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use kfdr::{counterexample_bound, run_experiment, FkModel, ProcedureSpec, SimulationConfig};
use wasm_bindgen::prelude::*;

/// Procedures drawn by [`schedule_curves`].
pub const CURVE_PROCEDURES: [ProcedureSpec; 4] = [
    ProcedureSpec::GenBh,
    ProcedureSpec::GenHochberg,
    ProcedureSpec::Bh,
    ProcedureSpec::GenBy,
];

fn json_array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("[{}]", items.join(","))
}

fn err(e: kfdr::Error) -> String {
    e.to_string()
}

/// `{"gen_bh":[..],"gen_hochberg":[..],"bh":[..],"gen_by":[..],"fk":[..]}`
/// where `fk` samples `F_k` at `x = j/100`.
pub fn schedule_curves_json(n: usize, k: usize, alpha: f64, rho: f64) -> Result<String, String> {
    if n > 2000 {
        return Err(format!("n = {n} is too large for the demo (max 2000)"));
    }
    let model = FkModel::equicorrelated(k, rho).map_err(err)?;
    let mut fields = Vec::new();
    for spec in &CURVE_PROCEDURES {
        let s = spec.build(n, k, alpha, &model).map_err(err)?;
        fields.push(format!("\"{spec}\":{}", json_array(s.alphas())));
    }
    let fk = (0..=100)
        .map(|j| model.eval(j as f64 / 100.0))
        .collect::<kfdr::Result<Vec<_>>>()
        .map_err(err)?;
    fields.push(format!("\"fk\":{}", json_array(&fk)));
    Ok(format!("{{{}}}", fields.join(",")))
}

/// Estimated error rates of gen_bh, gen_hochberg and bh at one design point,
/// as a JSON array of `{procedure, kfdr, kfdr_se, kfwer, fdr, power}`.
pub fn simulate_point_json(
    n: usize,
    n0: usize,
    k: usize,
    alpha: f64,
    rho: f64,
    iterations: usize,
    seed: u64,
) -> Result<String, String> {
    if n.saturating_mul(iterations) > 5_000_000 {
        return Err("n × iterations is capped at 5,000,000 in the demo".into());
    }
    let config = SimulationConfig {
        rho,
        iterations,
        seed,
        ..SimulationConfig::new(n, n0, k, alpha)
    };
    let summary = run_experiment(&config).map_err(err)?;
    let rows: Vec<String> = summary
        .procedures
        .iter()
        .map(|p| {
            format!(
                "{{\"procedure\":\"{}\",\"kfdr\":{},\"kfdr_se\":{},\"kfwer\":{},\"fdr\":{},\"power\":{}}}",
                p.procedure, p.kfdr.mean, p.kfdr.se, p.kfwer.mean, p.fdr.mean, p.power.mean
            )
        })
        .collect();
    Ok(format!("[{}]", rows.join(",")))
}

/// `[alpha_crit, bound]`.
pub fn counterexample_values(n0: usize, n1: usize, alpha: f64) -> Result<Vec<f64>, String> {
    let b = counterexample_bound(n0, n1, alpha).map_err(err)?;
    Ok(vec![b.alpha_crit, b.bound])
}

#[wasm_bindgen]
pub fn schedule_curves(n: usize, k: usize, alpha: f64, rho: f64) -> Result<String, JsValue> {
    schedule_curves_json(n, k, alpha, rho).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_point(
    n: usize,
    n0: usize,
    k: usize,
    alpha: f64,
    rho: f64,
    iterations: usize,
    seed: u64,
) -> Result<String, JsValue> {
    simulate_point_json(n, n0, k, alpha, rho, iterations, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterexample(n0: usize, n1: usize, alpha: f64) -> Result<Vec<f64>, JsValue> {
    counterexample_values(n0, n1, alpha).map_err(|e| JsValue::from_str(&e))
}
