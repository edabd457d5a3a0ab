//! Real Lie algebras spanned by Pauli strings under commutators.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::localization::{localization_table, LogicalSet};
use crate::models::SymmetryCatalog;
use crate::pauli::{BinaryForm, Pattern, PauliOperator};

#[derive(Clone, Debug, Serialize)]
pub struct ClosureResult {
    pub n_qubits: usize,
    pub basis: Vec<PauliOperator>,
    pub dim: usize,
    pub label: String,
    pub elapsed_ms: f64,
}

fn anticommute(a: &Pattern, b: &Pattern) -> bool {
    let s: u32 = a
        .x
        .iter()
        .zip(&b.z)
        .zip(a.z.iter().zip(&b.x))
        .map(|((ax, bz), (az, bx))| ((ax & bz) ^ (az & bx)).count_ones())
        .sum();
    s & 1 == 1
}

fn mul(a: &Pattern, b: &Pattern) -> Pattern {
    Pattern {
        x: a.x.iter().zip(&b.x).map(|(p, q)| p ^ q).collect(),
        z: a.z.iter().zip(&b.z).map(|(p, q)| p ^ q).collect(),
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

// no monotonic clock on wasm32-unknown-unknown
#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Clock
    }
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

pub fn closure(gens: &[PauliOperator]) -> Result<ClosureResult> {
    let start = Clock::start();
    let n = gens.first().ok_or_else(|| Error::Domain("closure needs at least one generator".into()))?.n_qubits();
    let mut set: BTreeSet<Pattern> = BTreeSet::new();
    let mut order: Vec<Pattern> = Vec::new();
    for g in gens {
        if g.n_qubits() != n {
            return Err(Error::Dimension { expected: n, got: g.n_qubits() });
        }
        if !g.is_hermitian() {
            return Err(Error::NonHermitian(g.to_text()));
        }
        if g.is_identity_pattern() {
            continue;
        }
        if set.insert(g.pattern()) {
            order.push(g.pattern());
        }
    }
    let mut next = 0;
    while next < order.len() {
        let p = order[next].clone();
        for i in 0..next {
            if anticommute(&p, &order[i]) {
                let c = mul(&p, &order[i]);
                if set.insert(c.clone()) {
                    order.push(c);
                }
            }
        }
        next += 1;
    }
    let basis: Vec<PauliOperator> = set.iter().map(|p| PauliOperator::from_pattern(n, p)).collect();
    let dim = basis.len();
    let mut r = ClosureResult { n_qubits: n, basis, dim, label: String::new(), elapsed_ms: 0.0 };
    r.label = classify(&r, n).join(", ");
    r.elapsed_ms = start.elapsed_ms();
    Ok(r)
}

/// Dimension matches against su(2^m), so(2n) and 4·su(2^m); "full" marks su(2^n_qubits).
pub fn classify(result: &ClosureResult, n_qubits: usize) -> Vec<String> {
    let d = result.dim;
    let mut labels = Vec::new();
    for m in 1..=n_qubits.max(1) {
        if 4usize.pow(m as u32) - 1 == d {
            if m == n_qubits {
                labels.push(format!("su({})=full", 1usize << m));
            } else {
                labels.push(format!("su({})", 1usize << m));
            }
        }
    }
    for k in 1..=2 * n_qubits + 2 {
        if k * (2 * k - 1) == d && k >= 3 {
            labels.push(format!("so({})", 2 * k));
        }
    }
    for m in 1..n_qubits {
        if 4 * (4usize.pow(m as u32) - 1) == d {
            labels.push(format!("4·su({})", 1usize << m));
        }
    }
    if labels.is_empty() {
        labels.push("unclassified".into());
    }
    labels
}

pub fn is_full(result: &ClosureResult) -> bool {
    result.n_qubits < 32 && result.dim + 1 == 1usize << (2 * result.n_qubits)
}

/// Logicals of every label localizable somewhere, restricted to the right boundary column.
pub fn boundary_generators(cat: &SymmetryCatalog, form: &BinaryForm, ls: &LogicalSet) -> Result<(Vec<String>, Vec<PauliOperator>)> {
    let right: Vec<usize> = (0..cat.n_qubits).filter(|&q| cat.is_right(q)).collect();
    if right.is_empty() {
        return Err(Error::Unsupported("closure on the boundary needs an open lattice".into()));
    }
    let mut map = vec![usize::MAX; cat.n_qubits];
    for (i, &q) in right.iter().enumerate() {
        map[q] = i;
    }
    let mut labels: BTreeSet<String> = BTreeSet::new();
    for e in localization_table(cat, form)? {
        labels.extend(e.localizable.iter().map(|l| l.label.clone()));
    }
    let mut names = Vec::new();
    let mut ops = Vec::new();
    for e in &cat.entries {
        if !labels.contains(&e.label) {
            continue;
        }
        let t = &ls.t[&e.label];
        let v = t.restrict(|q| cat.is_right(q));
        let mut c = PauliOperator::identity(right.len());
        for (q, l) in v.letters() {
            c = &c * &PauliOperator::single(right.len(), map[q], l);
        }
        names.push(e.label.clone());
        ops.push(c);
    }
    Ok((names, ops))
}

pub fn report(names: &[String], r: &ClosureResult) -> serde_json::Value {
    json!({
        "generators": names,
        "n_qubits": r.n_qubits,
        "dim": r.dim,
        "labels": r.label,
        "full": is_full(r),
        "elapsed_ms": r.elapsed_ms,
    })
}
