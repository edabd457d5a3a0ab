//! wasm-bindgen entry points for the static demo page.
//!
//! Every function returns a JSON (or CSV) string; failures come back as `{"error": ...}`.

use serde_json::{json, Value};
use sset_mbqc::lattice::LatticeSpec;
use sset_mbqc::lie::{boundary_generators, closure, is_full};
use sset_mbqc::localization::{kappa, logical_observables};
use sset_mbqc::models::{build_toric, build_xz_star, symmetry_catalog, SpinModel, DEFAULT_EPSILON};
use sset_mbqc::spectra::{default_requests, order_parameter_sweep, sweep_csv};
use sset_mbqc::{cli, Error, Result};
use wasm_bindgen::prelude::*;

const MAX_LY: usize = 7;
const MAX_LX: usize = 24;

fn open_model(family: &str, lx: usize, ly: usize) -> Result<SpinModel> {
    if lx == 0 || ly == 0 || lx > MAX_LX || ly > MAX_LY {
        return Err(Error::ResourceLimit(format!("demo lattices are limited to L_x <= {MAX_LX}, L_y <= {MAX_LY}")));
    }
    match family {
        "toric" => build_toric(LatticeSpec::toric_open(lx, ly), 0.0, 0.0, 0.0),
        "xz-star" => build_xz_star(LatticeSpec::star_open(lx, ly)),
        other => Err(Error::Config(format!("unknown model {other:?}"))),
    }
}

fn render(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

pub fn closure_report(family: &str, lx: usize, ly: usize) -> Result<Value> {
    let cat = symmetry_catalog(&open_model(family, lx, ly)?)?;
    let form = kappa(&cat)?;
    let ls = logical_observables(&cat)?;
    let (names, gens) = boundary_generators(&cat, &form, &ls)?;
    let r = closure(&gens)?;
    Ok(json!({
        "generators": names,
        "boundary_ops": gens.iter().map(|g| g.to_text()).collect::<Vec<_>>(),
        "boundary_qubits": r.n_qubits,
        "dim": r.dim,
        "labels": r.label,
        "full": is_full(&r),
    }))
}

pub fn logical_report(family: &str, lx: usize, ly: usize) -> Result<Value> {
    let cat = symmetry_catalog(&open_model(family, lx, ly)?)?;
    let form = kappa(&cat)?;
    let ls = logical_observables(&cat)?;
    let gens: Vec<String> = cat.generators().iter().map(|e| e.label.clone()).collect();
    let matrix: Vec<Vec<u8>> = (0..gens.len()).map(|i| (0..gens.len()).map(|j| u8::from(form.get(i, j))).collect()).collect();
    Ok(json!({
        "generators": gens,
        "kappa": matrix,
        "h_subgroup": ls.h_subgroup,
        "logical_qubits": ls.rank_h(),
        "logicals": ls.t.iter().map(|(k, v)| (k.clone(), Value::String(v.to_text()))).collect::<serde_json::Map<_, _>>(),
    }))
}

pub fn sweep_report(lx: usize, ly: usize, grid: &str) -> Result<String> {
    let alphas = cli::parse_grid("alpha grid", grid)?;
    if alphas.len() > 81 {
        return Err(Error::ResourceLimit("at most 81 grid points".into()));
    }
    open_model("toric", lx, ly)?;
    let template = build_toric(LatticeSpec::toric_open(lx, ly), 0.0, 0.0, DEFAULT_EPSILON)?;
    let results = order_parameter_sweep(&template, &alphas, &default_requests(lx, ly, false), false)?;
    Ok(sweep_csv(&results))
}

/// Lie closure of the boundary logicals.
#[wasm_bindgen]
pub fn closure_dimension(family: &str, lx: usize, ly: usize) -> String {
    render(closure_report(family, lx, ly))
}

/// κ matrix over the symmetry generators and the logical qubit count.
#[wasm_bindgen]
pub fn logical_table(family: &str, lx: usize, ly: usize) -> String {
    render(logical_report(family, lx, ly))
}

/// Chain-route order parameters as CSV; errors as JSON.
#[wasm_bindgen]
pub fn chain_sweep(lx: usize, ly: usize, grid: &str) -> String {
    match sweep_report(lx, ly, grid) {
        Ok(csv) => csv,
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[wasm_bindgen]
pub fn version() -> String {
    cli::VERSION.to_string()
}
