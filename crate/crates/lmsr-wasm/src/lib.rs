//! Browser bindings: minimal rotation with a query-cost readout, the
//! sensitivity distribution and canonical boundary-edges codes.
//!
//! Each export returns a JSON string; the `*_json` functions hold the logic so
//! they can be tested natively.

use lmsr_core::apps::{bec_canonical, BecString, Engine};
use lmsr_core::lmsr_quantum::{basic_lmsr, improved_lmsr};
use lmsr_core::oracle_model::Session;
use lmsr_core::q_subroutines::CostModelConfig;
use lmsr_core::sensitivity_lab::sensitivity_distribution;
use lmsr_core::strings_core::{lmsr_booth, CircularString};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest string accepted from the page; keeps a click responsive.
pub const MAX_SOLVE_N: usize = 1 << 14;
pub const MAX_SAMPLES: usize = 20_000;

fn cost_model(mode: &str) -> Result<CostModelConfig, String> {
    match mode {
        "emulated" => Ok(CostModelConfig::default()),
        "stress" => Ok(CostModelConfig::stress()),
        "reference" => Ok(CostModelConfig::reference()),
        _ => Err(format!("unknown mode {mode:?} (emulated|stress|reference)")),
    }
}

pub fn solve_json(input: &str, engine: &str, mode: &str, seed: u32) -> Result<String, String> {
    let s = CircularString::parse_line(input, None).map_err(|e| e.to_string())?;
    if s.len() > MAX_SOLVE_N {
        return Err(format!("length {} exceeds the demo limit {MAX_SOLVE_N}", s.len()));
    }
    let truth = lmsr_booth(&s.ranked());
    let mut sess = Session::seeded(seed as u64, cost_model(mode)?);
    let run = match engine {
        "basic" => basic_lmsr(&mut sess, &s),
        "improved" => improved_lmsr(&mut sess, &s),
        _ => return Err(format!("unknown engine {engine:?} (basic|improved)")),
    }
    .map_err(|e| e.to_string())?;
    let n = s.len() as f64;
    Ok(json!({
        "n": s.len(),
        "offset": run.offset,
        "rotation": s.rotation(run.offset).chars(),
        "correct": run.offset == truth,
        "path": run.path,
        "charged": run.charged,
        "classical_reads": s.len(),
        "sqrt_n_log_n": n.sqrt() * n.log2().max(1.0),
        "n_three_quarters": n.powf(0.75),
        "ledger": run.ledger,
    })
    .to_string())
}

pub fn sensitivity_json(n: usize, alpha: usize, samples: usize, seed: u32) -> Result<String, String> {
    if samples > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples in the demo"));
    }
    let b = (3.0 * (n.max(2) as f64).log2()).ceil() as usize;
    let r = sensitivity_distribution(n, alpha, b, samples, seed as u64).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

pub fn bec_json(code: &str, engine: &str, seed: u32) -> Result<String, String> {
    let b = BecString::parse(code).map_err(|e| e.to_string())?;
    let engine: Engine = engine.parse().map_err(|e: lmsr_core::Error| e.to_string())?;
    let mut sess = Session::seeded(seed as u64, CostModelConfig::default());
    let c = bec_canonical(&b, engine, &mut sess).map_err(|e| e.to_string())?;
    serde_json::to_string(&c).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn solve(input: &str, engine: &str, mode: &str, seed: u32) -> Result<String, JsError> {
    solve_json(input, engine, mode, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sensitivity(n: usize, alpha: usize, samples: usize, seed: u32) -> Result<String, JsError> {
    sensitivity_json(n, alpha, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bec(code: &str, engine: &str, seed: u32) -> Result<String, JsError> {
    bec_json(code, engine, seed).map_err(|e| JsError::new(&e))
}
