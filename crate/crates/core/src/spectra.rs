//! State vectors, matrix-free Pauli Hamiltonians, Lanczos ground states and
//! the order-parameter sweep.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duality::{decompose_chains, loop_operator, map_for_model, string_operator, ChainSpec, MapKind, Sector, SubstitutionMap};
use crate::error::{Error, Result};
use crate::models::{build_toric, symmetry_catalog, Family, SpinModel};
use crate::pauli::PauliOperator;

pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<C>,
}

fn masks(op: &PauliOperator) -> (u64, u64, C) {
    let ph = [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0), C::new(0.0, -1.0)][op.phase_exp() as usize];
    (op.x_bits()[0], op.z_bits()[0], ph)
}

#[inline]
fn parity(v: u64) -> f64 {
    if v.count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// out = P v for P = i^p X^x Z^z; bit q of the basis index is qubit q.
pub fn apply_pauli(op: &PauliOperator, v: &[C]) -> Vec<C> {
    let (x, z, ph) = masks(op);
    let mut out = vec![C::new(0.0, 0.0); v.len()];
    for (b, a) in v.iter().enumerate() {
        let b = b as u64;
        out[(b ^ x) as usize] = ph * parity(z & b) * a;
    }
    out
}

impl StateVector {
    pub fn new(n_qubits: usize, amplitudes: Vec<C>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::Dimension { expected: 1 << n_qubits, got: amplitudes.len() });
        }
        let mut s = StateVector { n_qubits, amplitudes };
        s.normalize();
        Ok(s)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut a = vec![C::new(0.0, 0.0); 1 << n_qubits];
        a[index] = C::new(1.0, 0.0);
        StateVector { n_qubits, amplitudes: a }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in self.amplitudes.iter_mut() {
                *a /= n;
            }
        }
    }

    /// First amplitude above 1e-10 in modulus made real and positive.
    pub fn fix_phase(&mut self) {
        if let Some(a) = self.amplitudes.iter().find(|a| a.norm() > 1e-10).copied() {
            let r = a.conj() / a.norm();
            for x in self.amplitudes.iter_mut() {
                *x *= r;
            }
        }
    }

    pub fn expect_complex(&self, op: &PauliOperator) -> Result<C> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::Dimension { expected: self.n_qubits, got: op.n_qubits() });
        }
        let (x, z, ph) = masks(op);
        let mut s = C::new(0.0, 0.0);
        for (b, a) in self.amplitudes.iter().enumerate() {
            let b = b as u64;
            s += self.amplitudes[(b ^ x) as usize].conj() * ph * parity(z & b) * a;
        }
        Ok(s)
    }
}

pub fn expect(state: &StateVector, op: &PauliOperator) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NonHermitian(op.to_text()));
    }
    let v = state.expect_complex(op)?;
    if v.im.abs() > 1e-10 {
        return Err(Error::Invariance(format!("expectation of {} has imaginary part {}", op.to_text(), v.im)));
    }
    Ok(v.re)
}

/// Weighted Pauli sum grouped by X mask.
#[derive(Clone, Debug)]
pub struct PauliSum {
    pub n_qubits: usize,
    groups: Vec<(u64, Vec<(u64, C)>)>,
}

impl PauliSum {
    pub fn new(n_qubits: usize, terms: &[(f64, PauliOperator)]) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{n_qubits} qubits exceeds the exact-solver bound {MAX_QUBITS}")));
        }
        let mut map: BTreeMap<u64, Vec<(u64, C)>> = BTreeMap::new();
        for (w, op) in terms {
            if op.n_qubits() != n_qubits {
                return Err(Error::Dimension { expected: n_qubits, got: op.n_qubits() });
            }
            if !op.is_hermitian() {
                return Err(Error::NonHermitian(op.to_text()));
            }
            let (x, z, ph) = masks(op);
            map.entry(x).or_default().push((z, ph * *w));
        }
        Ok(PauliSum { n_qubits, groups: map.into_iter().collect() })
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); v.len()];
        for (x, zs) in &self.groups {
            for (b, a) in v.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let bb = b as u64;
                let mut c = C::new(0.0, 0.0);
                for (z, w) in zs {
                    c += w * parity(z & bb);
                }
                out[(bb ^ x) as usize] += c * a;
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub krylov: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, max_iter: 10_000, krylov: 120, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: StateVector,
    pub energy: f64,
    /// Distance to the next Ritz value in the final Krylov space.
    pub gap: f64,
    pub degenerate: bool,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn project(v: &mut Vec<C>, sectors: &[(PauliOperator, i8)]) {
    for (s, sign) in sectors {
        let sv = apply_pauli(s, v);
        for (a, b) in v.iter_mut().zip(sv) {
            *a = (*a + b * f64::from(*sign)) * 0.5;
        }
    }
}

/// Lowest eigenstate of `terms` inside the joint eigenspace {S = sign} of `sectors`.
pub fn ground_state_in_sector(
    terms: &[(f64, PauliOperator)],
    n_qubits: usize,
    sectors: &[(PauliOperator, i8)],
    opts: &LanczosOptions,
) -> Result<GroundState> {
    let h = PauliSum::new(n_qubits, terms)?;
    for (s, _) in sectors {
        if !s.is_hermitian() || terms.iter().any(|(_, t)| t.anticommutes_with(s)) {
            return Err(Error::Domain(format!("sector operator {} is not a symmetry", s.to_text())));
        }
    }
    let dim = 1usize << n_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<C> = (0..dim).map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    project(&mut v, sectors);
    let nv = norm(&v);
    if nv < 1e-12 {
        return Err(Error::Domain("symmetry sector is empty".into()));
    }
    v.iter_mut().for_each(|a| *a /= nv);
    let mut iterations = 0;
    loop {
        let m = opts.krylov.min(dim).max(1);
        let mut basis: Vec<Vec<C>> = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            let mut w = h.apply(&basis[j]);
            project(&mut w, sectors);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            iterations += 1;
            let bn = norm(&w);
            if j + 1 == m || bn < 1e-13 {
                break;
            }
            beta.push(bn);
            w.iter_mut().for_each(|x| *x /= bn);
            basis.push(w);
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let e0 = eig.eigenvalues[order[0]];
        let gap = if k > 1 { eig.eigenvalues[order[1]] - e0 } else { f64::INFINITY };
        let y = eig.eigenvectors.column(order[0]);
        let mut x = vec![C::new(0.0, 0.0); dim];
        for (i, b) in basis.iter().enumerate().take(k) {
            for (xa, ba) in x.iter_mut().zip(b) {
                *xa += ba * y[i];
            }
        }
        project(&mut x, sectors);
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let hx = h.apply(&x);
        let e = dot(&x, &hx).re;
        let r: f64 = hx.iter().zip(&x).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        if r <= opts.tol {
            let mut state = StateVector { n_qubits, amplitudes: x };
            state.fix_phase();
            return Ok(GroundState { state, energy: e, gap, degenerate: gap < 1e-8, residual: r, iterations });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence(format!("residual {r:.3e} after {iterations} Lanczos steps")));
        }
        v = x;
    }
}

pub fn ground_state(terms: &[(f64, PauliOperator)], n_qubits: usize) -> Result<GroundState> {
    ground_state_in_sector(terms, n_qubits, &[], &LanczosOptions::default())
}

/// Catalog symmetries of the model's current terms with their χ eigenvalues.
pub fn symmetric_sector(model: &SpinModel) -> Result<Vec<(PauliOperator, i8)>> {
    let cat = symmetry_catalog(model)?;
    Ok(cat
        .generators()
        .into_iter()
        .filter(|e| model.terms.iter().all(|t| t.op.commutes_with(&e.u)))
        .map(|e| (e.u.clone(), if e.chi == 0 { 1 } else { -1 }))
        .collect())
}

/// Ground state of a model in its symmetric sector.
pub fn model_ground_state(model: &SpinModel) -> Result<GroundState> {
    let sectors = symmetric_sector(model)?;
    ground_state_in_sector(&model.weighted_terms(), model.n_qubits(), &sectors, &LanczosOptions::default())
}

pub fn chain_ground_state(chain: &ChainSpec) -> Result<GroundState> {
    let terms = chain.terms();
    let sectors: Vec<(PauliOperator, i8)> = chain.constraints.clone();
    ground_state_in_sector(&terms, chain.n_sites, &sectors, &LanczosOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// σ_k(g_y): expectation of R_k(g_y); `k` is the column of the localization site.
    Sigma { sector: Sector, row: i32, k: i32 },
    /// Horizontal string from column `a` to the right boundary.
    StringOp { sector: Sector, row: i32, a: i32 },
    /// sqrt(|⟨W_open⟩| / sqrt(|⟨W_closed⟩|)), closed loop of perimeter twice the open length.
    FredenhagenMarcu { sector: Sector, row: i32, a: i32 },
    Energy,
}

fn sector_tag(s: Sector) -> char {
    match s {
        Sector::Electric => 'e',
        Sector::Magnetic => 'm',
    }
}

impl Observable {
    pub fn id(&self) -> String {
        match self {
            Observable::Sigma { sector, row, .. } => format!("sigma_{}_y{row}", sector_tag(*sector)),
            Observable::StringOp { sector, row, .. } => format!("W_{}_y{row}", sector_tag(*sector)),
            Observable::FredenhagenMarcu { sector, row, .. } => format!("FM_{}_y{row}", sector_tag(*sector)),
            Observable::Energy => "energy".into(),
        }
    }
}

/// Default request set: σ and W for every row, mid-lattice k and half-lattice strings.
pub fn default_requests(lx: usize, ly: usize, with_fm: bool) -> Vec<Observable> {
    let k = (lx as i32 + 1) / 2;
    let mut out = Vec::new();
    for y in 1..=ly as i32 {
        out.push(Observable::Sigma { sector: Sector::Electric, row: y, k });
    }
    for y in 1..ly as i32 {
        out.push(Observable::Sigma { sector: Sector::Magnetic, row: y, k: k.max(2) });
    }
    for y in 1..=ly as i32 {
        out.push(Observable::StringOp { sector: Sector::Electric, row: y, a: k });
    }
    for y in 1..ly as i32 {
        out.push(Observable::StringOp { sector: Sector::Magnetic, row: y, a: k });
    }
    if with_fm {
        for y in 1..=ly as i32 {
            out.push(Observable::FredenhagenMarcu { sector: Sector::Electric, row: y, a: k });
        }
    }
    out.push(Observable::Energy);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Chain,
    Oracle,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub alpha: f64,
    pub route: Route,
    pub entries: Vec<(String, f64)>,
}

/// Lattice operators behind an observable: (numerator, optional closed loop).
pub fn observable_operators(model: &SpinModel, obs: &Observable) -> Result<Vec<PauliOperator>> {
    let lx = model.spec().lx as i32;
    let ly = model.spec().ly as i32;
    match *obs {
        Observable::Sigma { sector: Sector::Electric, row, k } => {
            if k < 1 || k >= lx {
                return Err(Error::Domain(format!("no bulk horizontal edge in column {k}")));
            }
            Ok(vec![loop_operator(model, Sector::Electric, row, k + 1, lx)])
        }
        Observable::Sigma { sector: Sector::Magnetic, row, k } => {
            if k < 2 || k >= lx {
                return Err(Error::Domain(format!("no bulk vertical edge in column {k}")));
            }
            Ok(vec![loop_operator(model, Sector::Magnetic, row, k, lx - 1)])
        }
        Observable::StringOp { sector: Sector::Electric, row, a } => Ok(vec![string_operator(&model.lattice, Sector::Electric, row, a, lx - 1)?]),
        Observable::StringOp { sector: Sector::Magnetic, row, a } => Ok(vec![string_operator(&model.lattice, Sector::Magnetic, row, a, lx)?]),
        Observable::FredenhagenMarcu { sector, row, a } => {
            let (open, len) = match sector {
                Sector::Electric => (string_operator(&model.lattice, sector, row, a, lx - 1)?, lx - a),
                Sector::Magnetic => (string_operator(&model.lattice, sector, row, a, lx)?, lx - a + 1),
            };
            let w = (len - 1).max(1);
            let closed = match sector {
                // Z loop around plaquettes of one plaquette row, X loop around vertices of one row
                Sector::Electric => {
                    let py = if row < ly { row } else { row - 1 };
                    let x0 = (lx - 1 - w + 1).max(1);
                    loop_operator(model, Sector::Magnetic, py, x0, x0 + w - 1)
                }
                Sector::Magnetic => {
                    let x0 = (lx - w + 1).max(1);
                    loop_operator(model, Sector::Electric, row, x0, x0 + w - 1)
                }
            };
            Ok(vec![open, closed])
        }
        Observable::Energy => Ok(vec![]),
    }
}

fn combine(obs: &Observable, vals: &[f64]) -> f64 {
    match obs {
        Observable::FredenhagenMarcu { .. } => {
            let c = vals[1].abs().sqrt();
            if c < 1e-300 {
                0.0
            } else {
                (vals[0].abs() / c).sqrt()
            }
        }
        _ => vals[0],
    }
}

/// Ground states of every chain of a decomposition, with the map used.
pub struct ChainSolution {
    pub map: SubstitutionMap,
    pub chains: Vec<ChainSpec>,
    pub states: Vec<GroundState>,
}

impl ChainSolution {
    pub fn solve(model: &SpinModel, which: MapKind) -> Result<Self> {
        let map = map_for_model(model, which)?;
        let chains = decompose_chains(model, &map)?;
        let states = chains.iter().map(chain_ground_state).collect::<Result<Vec<_>>>()?;
        Ok(ChainSolution { map, chains, states })
    }

    pub fn energy(&self) -> f64 {
        self.states.iter().map(|s| s.energy).sum()
    }

    /// ⟨op⟩ in the product of chain ground states, through the image of `op`.
    pub fn expect(&self, op: &PauliOperator) -> Result<f64> {
        let img = self.map.apply(op)?;
        let sign = f64::from(img.sign().ok_or_else(|| Error::NonHermitian(img.to_text()))?);
        let mut v = sign;
        for (k, st) in self.states.iter().enumerate() {
            let local = self.map.target.chain_local(&img, k).normalized();
            if !local.is_identity_pattern() {
                v *= expect(&st.state, &local)?;
            }
        }
        Ok(v)
    }
}

fn rebuild(template: &SpinModel, alpha: f64) -> Result<SpinModel> {
    build_toric(template.spec(), alpha, alpha, template.epsilon)
}

/// Order parameters along α by the chain route, plus the 2D oracle when it fits.
pub fn order_parameter_sweep(template: &SpinModel, alphas: &[f64], requests: &[Observable], oracle: bool) -> Result<Vec<SweepResult>> {
    if template.family != Family::Toric || template.spec().is_periodic() {
        return Err(Error::Unsupported("the sweep needs the open toric model".into()));
    }
    let mut out = Vec::new();
    for &alpha in alphas {
        let model = rebuild(template, alpha)?;
        let sol = ChainSolution::solve(&model, MapKind::DualM)?;
        let mut entries = Vec::new();
        for obs in requests {
            let v = match obs {
                Observable::Energy => sol.energy(),
                _ => {
                    let ops = observable_operators(&model, obs)?;
                    let vals = ops.iter().map(|o| sol.expect(o)).collect::<Result<Vec<_>>>()?;
                    combine(obs, &vals)
                }
            };
            entries.push((obs.id(), v));
        }
        out.push(SweepResult { alpha, route: Route::Chain, entries });
        if oracle && model.n_qubits() <= MAX_QUBITS {
            let gs = model_ground_state(&model)?;
            let mut entries = Vec::new();
            for obs in requests {
                let v = match obs {
                    Observable::Energy => gs.energy,
                    _ => {
                        let ops = observable_operators(&model, obs)?;
                        let vals = ops.iter().map(|o| expect(&gs.state, o)).collect::<Result<Vec<_>>>()?;
                        combine(obs, &vals)
                    }
                };
                entries.push((obs.id(), v));
            }
            out.push(SweepResult { alpha, route: Route::Oracle, entries });
        }
    }
    Ok(out)
}

pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut s = String::from("alpha,observable_id,value,route\n");
    for r in results {
        let route = match r.route {
            Route::Chain => "chain",
            Route::Oracle => "oracle",
        };
        for (id, v) in &r.entries {
            s.push_str(&format!("{},{},{:.12},{}\n", r.alpha, id, v, route));
        }
    }
    s
}
