//! Adaptive single-qubit measurement protocol on small resource states, the
//! logical channel picture it reproduces, split-rotation error and
//! commutator composition.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::Coord;
use crate::localization::{kappa, localization_table, localize, logical_observables, LogicalSet};
use crate::models::{symmetry_catalog, SpinModel, SymmetryCatalog};
use crate::pauli::{stabilizer_sign, BinaryForm, Letter, Pattern, PauliOperator};
use crate::spectra::{apply_pauli, expect, model_ground_state, StateVector, MAX_QUBITS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub site: Coord,
    pub g: String,
    pub theta: f64,
}

impl Step {
    pub fn new(site: Coord, g: &str, theta: f64) -> Self {
        Step { site, g: g.to_string(), theta }
    }
}

/// (1+σ)/2 · [exp(-iθ/2 T)] + (1-σ)/2 · [exp(+iθ/2 T)].
#[derive(Clone, Debug, Serialize)]
pub struct ChannelMixture {
    pub plus_weight: f64,
    pub generator: PauliOperator,
    pub theta: f64,
}

impl ChannelMixture {
    pub fn new(sigma: f64, generator: PauliOperator, theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&sigma) {
            return Err(Error::Domain(format!("sigma {sigma} outside [-1, 1]")));
        }
        Ok(ChannelMixture { plus_weight: (1.0 + sigma) / 2.0, generator, theta })
    }

    pub fn sigma(&self) -> f64 {
        2.0 * self.plus_weight - 1.0
    }
}

/// Separation rule between consecutive steps, 2Δ + d in lattice units.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Separation {
    pub strict: bool,
    pub delta: f64,
    pub d: f64,
}

impl Default for Separation {
    fn default() -> Self {
        Separation { strict: true, delta: 0.0, d: 1.5 }
    }
}

impl Separation {
    pub fn off() -> Self {
        Separation { strict: false, ..Default::default() }
    }

    pub fn min_distance(&self) -> f64 {
        2.0 * self.delta + self.d
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaEntry {
    pub site: Coord,
    pub label: String,
    pub sigma: f64,
}

pub type SigmaTable = BTreeMap<(Coord, String), f64>;

#[derive(Clone, Debug)]
pub struct ResourceState {
    pub state: StateVector,
    pub model: SpinModel,
    pub catalog: SymmetryCatalog,
    pub form: BinaryForm,
    pub logical: LogicalSet,
    pub sigma_table: SigmaTable,
}

impl ResourceState {
    /// Ground state of `model` in its symmetric sector, with σ for every localizable (site, label).
    pub fn new(model: SpinModel) -> Result<Self> {
        let n = model.n_qubits();
        if n > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        let gs = model_ground_state(&model)?;
        let catalog = symmetry_catalog(&model)?;
        let form = kappa(&catalog)?;
        let logical = logical_observables(&catalog)?;
        let mut sigma_table = SigmaTable::new();
        for e in localization_table(&catalog, &form)? {
            for l in &e.localizable {
                sigma_table.insert((e.site, l.label.clone()), expect(&gs.state, &l.r)?);
            }
        }
        let res = ResourceState { state: gs.state, model, catalog, form, logical, sigma_table };
        let dev = res.symmetry_deviation()?;
        if dev > 1e-10 {
            return Err(Error::Domain(format!("resource is not symmetric: max |<U(g)> - (-1)^chi| = {dev:.3e}")));
        }
        Ok(res)
    }

    pub fn n_qubits(&self) -> usize {
        self.state.n_qubits
    }

    /// max over catalog entries of |⟨U(g)⟩ - (-1)^χ(g)|.
    pub fn symmetry_deviation(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for e in &self.catalog.entries {
            let want = if e.chi == 0 { 1.0 } else { -1.0 };
            worst = worst.max((expect(&self.state, &e.u)? - want).abs());
        }
        Ok(worst)
    }

    pub fn sigma(&self, site: Coord, label: &str) -> Option<f64> {
        self.sigma_table.get(&(site, label.to_string())).copied()
    }

    pub fn sigma_entries(&self) -> Vec<SigmaEntry> {
        self.sigma_table.iter().map(|((site, label), &sigma)| SigmaEntry { site: *site, label: label.clone(), sigma }).collect()
    }

    /// Labels of H whose logical can be read from the standard bases.
    pub fn default_readout(&self) -> Vec<String> {
        self.catalog
            .entries
            .iter()
            .filter(|e| self.logical.in_h(&self.catalog, &e.label).unwrap_or(false))
            .map(|e| e.label.clone())
            .collect()
    }

    pub fn logical(&self, label: &str) -> Result<&PauliOperator> {
        self.logical.t.get(label).ok_or_else(|| Error::Domain(format!("unknown label {label}")))
    }
}

/// Per-step data fixed before sampling: L_k = c · Q ⊗ P_k.
#[derive(Clone, Debug)]
struct PlannedStep {
    qubit: usize,
    theta: f64,
    c: f64,
    q: PauliOperator,
    p: Letter,
    alpha: Letter,
}

#[derive(Clone, Debug)]
struct Plan {
    bases: Vec<Letter>,
    steps: Vec<PlannedStep>,
    readout: Vec<(String, PauliOperator)>,
}

fn set_basis(bases: &mut [Option<Letter>], q: usize, l: Letter, what: &str) -> Result<()> {
    if l == Letter::I {
        return Ok(());
    }
    match bases[q] {
        Some(b) if b != l => Err(Error::Unsupported(format!("qubit {q}: {what} needs {} but {} is already fixed", l.to_char(), b.to_char()))),
        _ => {
            bases[q] = Some(l);
            Ok(())
        }
    }
}

fn readable(op: &PauliOperator, bases: &[Letter]) -> bool {
    op.letters().iter().all(|&(q, l)| bases[q] == l)
}

pub fn validate_steps(res: &ResourceState, steps: &[Step], sep: Separation) -> Result<()> {
    let mut prev: Option<Coord> = None;
    for s in steps {
        let entry = localize(&res.catalog, &res.form, s.site)?;
        if entry.get(&s.g).is_none() {
            return Err(Error::NotLocalizable { label: s.g.clone(), site: s.site.to_string() });
        }
        if let Some(p) = prev {
            if s.site.x2 <= p.x2 {
                return Err(Error::Domain(format!("step columns must strictly increase: {} then {}", p, s.site)));
            }
            let dx = f64::from(s.site.x2 - p.x2) / 2.0;
            if sep.strict && dx + 1e-12 < sep.min_distance() {
                return Err(Error::Domain(format!(
                    "steps at {} and {} are {dx} apart, below 2Δ+d = {}",
                    p,
                    s.site,
                    sep.min_distance()
                )));
            }
        }
        prev = Some(s.site);
    }
    Ok(())
}

fn plan(res: &ResourceState, steps: &[Step], readout: &[String], sep: Separation) -> Result<Plan> {
    validate_steps(res, steps, sep)?;
    let cat = &res.catalog;
    let n = cat.n_qubits;
    let mut bases: Vec<Option<Letter>> = vec![None; n];
    for e in &cat.entries {
        for (q, l) in e.u.letters() {
            if cat.is_bulk(q) {
                set_basis(&mut bases, q, l, &e.label)?;
            }
        }
        if res.logical.in_h(cat, &e.label)? {
            for (q, l) in e.v_l.letters() {
                set_basis(&mut bases, q, l, &e.label)?;
            }
        }
    }
    let mut read_ops = Vec::new();
    for label in readout {
        let t = res.logical(label)?.clone();
        for (q, l) in t.letters() {
            if cat.is_right(q) {
                set_basis(&mut bases, q, l, label)?;
            }
        }
        read_ops.push((label.clone(), t));
    }
    let bases: Vec<Letter> = bases.into_iter().map(|b| b.unwrap_or(Letter::Z)).collect();
    for (label, t) in &read_ops {
        if !readable(t, &bases) {
            return Err(Error::Unsupported(format!("T({label}) cannot be read in the fixed measurement bases")));
        }
    }
    let mut planned = Vec::new();
    for s in steps {
        let entry = localize(cat, &res.form, s.site)?;
        let loc = entry.get(&s.g).expect("validated");
        let k = entry.qubit;
        let l = res.logical(&s.g)? * &loc.r;
        let c = f64::from(l.sign().ok_or_else(|| Error::NonHermitian(l.to_text()))?);
        let p = l.letter(k);
        if p == Letter::I {
            return Err(Error::Unsupported(format!("L_k({}) is trivial at {}", s.g, s.site)));
        }
        let q = l.restrict(|j| j != k).normalized();
        if !readable(&q, &bases) {
            return Err(Error::Unsupported(format!("L_k({}) at {} is not a product of measured letters", s.g, s.site)));
        }
        planned.push(PlannedStep { qubit: k, theta: s.theta, c, q, p, alpha: bases[k] });
    }
    Ok(Plan { bases, steps: planned, readout: read_ops })
}

type M2 = [[C; 2]; 2];

fn letter_matrix(l: Letter) -> M2 {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match l {
        Letter::I => [[o, z], [z, o]],
        Letter::X => [[z, o], [o, z]],
        Letter::Y => [[z, -i], [i, z]],
        Letter::Z => [[o, z], [z, -o]],
    }
}

/// V with V ℓ V† = Z.
fn to_z_basis(l: Letter) -> M2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = [[C::new(s, 0.0), C::new(s, 0.0)], [C::new(s, 0.0), C::new(-s, 0.0)]];
    match l {
        Letter::X => h,
        Letter::Y => [[h[0][0], h[0][1] * C::new(0.0, -1.0)], [h[1][0], h[1][1] * C::new(0.0, -1.0)]],
        _ => letter_matrix(Letter::I),
    }
}

fn rotation(p: Letter, phi: f64) -> M2 {
    let m = letter_matrix(p);
    let mut r = [[C::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let id = if a == b { 1.0 } else { 0.0 };
            r[a][b] = C::new(phi.cos() * id, 0.0) - C::new(0.0, phi.sin()) * m[a][b];
        }
    }
    r
}

fn apply_1q(v: &mut [C], bit: usize, g: &M2) {
    let mask = 1usize << bit;
    for i in 0..v.len() {
        if i & mask == 0 {
            let (a, b) = (v[i], v[i | mask]);
            v[i] = g[0][0] * a + g[0][1] * b;
            v[i | mask] = g[1][0] * a + g[1][1] * b;
        }
    }
}

fn scatter(bits: usize, positions: &[usize]) -> usize {
    positions.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &p)| 1 << p).sum()
}

fn value(op: &PauliOperator, outcomes: &[i8]) -> i8 {
    let s = op.sign().unwrap_or(1);
    op.support().iter().fold(s, |acc, &q| acc * outcomes[q])
}

#[derive(Clone, Debug, Serialize)]
pub struct ShotRecord {
    /// Value of c·Q_k used to orient each step measurement.
    pub lambdas: Vec<i8>,
    /// Inferred values of the readout logicals, in readout order.
    pub values: Vec<i8>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRun {
    pub steps: Vec<Step>,
    pub shots: usize,
    pub seed: u64,
    pub readout: Vec<String>,
    pub bases: Vec<char>,
    pub estimates: BTreeMap<String, Estimate>,
    #[serde(skip)]
    pub records: Vec<ShotRecord>,
}

pub fn estimate(values: impl Iterator<Item = i8>) -> Estimate {
    let (mut n, mut s) = (0usize, 0i64);
    for v in values {
        n += 1;
        s += i64::from(v);
    }
    if n == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN };
    }
    let mean = s as f64 / n as f64;
    let var = if n > 1 { (1.0 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64 } else { 1.0 };
    Estimate { mean, stderr: (var / n as f64).sqrt() }
}

/// Samples the measurement protocol with readout labels `readout` (default: H).
/// Shot `i` draws from ChaCha8 stream `i` of `seed`.
pub fn run_protocol_with(
    res: &ResourceState,
    steps: &[Step],
    shots: usize,
    seed: u64,
    readout: Option<&[String]>,
    sep: Separation,
) -> Result<ProtocolRun> {
    if shots == 0 {
        return Err(Error::Domain("shots must be positive".into()));
    }
    let readout: Vec<String> = readout.map(|r| r.to_vec()).unwrap_or_else(|| res.default_readout());
    let plan = plan(res, steps, &readout, sep)?;
    let n = res.n_qubits();
    let step_q: Vec<usize> = plan.steps.iter().map(|s| s.qubit).collect();
    let other_q: Vec<usize> = (0..n).filter(|q| !step_q.contains(q)).collect();
    let mut psi = res.state.amplitudes.clone();
    for &q in &other_q {
        if plan.bases[q] != Letter::Z {
            apply_1q(&mut psi, q, &to_z_basis(plan.bases[q]));
        }
    }
    let m = step_q.len();
    let s_full: Vec<usize> = (0..1usize << m).map(|s| scatter(s, &step_q)).collect();
    let a_full: Vec<usize> = (0..1usize << other_q.len()).map(|a| scatter(a, &other_q)).collect();
    let mut cdf = Vec::with_capacity(a_full.len());
    let mut acc = 0.0;
    for &af in &a_full {
        acc += s_full.iter().map(|&sf| psi[af | sf].norm_sqr()).sum::<f64>();
        cdf.push(acc);
    }
    let total = acc;
    let mut records = Vec::with_capacity(shots);
    let mut outcomes = vec![1i8; n];
    for shot in 0..shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot as u64);
        let u = rng.gen::<f64>() * total;
        let a = cdf.partition_point(|&c| c <= u).min(a_full.len() - 1);
        for (i, &q) in other_q.iter().enumerate() {
            outcomes[q] = if a >> i & 1 == 0 { 1 } else { -1 };
        }
        let mut v: Vec<C> = s_full.iter().map(|&sf| psi[a_full[a] | sf]).collect();
        let mut lambdas = Vec::with_capacity(m);
        for (i, st) in plan.steps.iter().enumerate() {
            let lam = (st.c as i8) * value(&st.q, &outcomes);
            lambdas.push(lam);
            apply_1q(&mut v, i, &rotation(st.p, st.theta * f64::from(lam) / 2.0));
            apply_1q(&mut v, i, &to_z_basis(st.alpha));
            let mask = 1usize << i;
            let p0: f64 = v.iter().enumerate().filter(|(j, _)| j & mask == 0).map(|(_, x)| x.norm_sqr()).sum();
            let pt: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            let bit = usize::from(rng.gen::<f64>() * pt >= p0);
            for (j, x) in v.iter_mut().enumerate() {
                if (j & mask != 0) != (bit == 1) {
                    *x = C::new(0.0, 0.0);
                }
            }
            outcomes[st.qubit] = if bit == 0 { 1 } else { -1 };
        }
        let values = plan.readout.iter().map(|(_, t)| value(t, &outcomes)).collect();
        records.push(ShotRecord { lambdas, values });
    }
    let mut estimates = BTreeMap::new();
    for (i, (label, _)) in plan.readout.iter().enumerate() {
        estimates.insert(label.clone(), estimate(records.iter().map(|r| r.values[i])));
    }
    Ok(ProtocolRun {
        steps: steps.to_vec(),
        shots,
        seed,
        readout,
        bases: plan.bases.iter().map(|l| l.to_char()).collect(),
        estimates,
        records,
    })
}

pub fn run_protocol(res: &ResourceState, steps: &[Step], shots: usize, seed: u64, sep: Separation) -> Result<ProtocolRun> {
    run_protocol_with(res, steps, shots, seed, None, sep)
}

/// ⟨Φ| M_1† … M_f† T(g) M_f … M_1 |Φ⟩ with M_k = exp(-iθ_k/2 L_k(g_k)), evaluated on the state vector.
pub fn conjugated_expectation(res: &ResourceState, steps: &[Step], label: &str) -> Result<f64> {
    validate_steps(res, steps, Separation::off())?;
    let mut v = res.state.amplitudes.clone();
    for s in steps {
        let entry = localize(&res.catalog, &res.form, s.site)?;
        let loc = entry.get(&s.g).ok_or_else(|| Error::NotLocalizable { label: s.g.clone(), site: s.site.to_string() })?;
        let l = res.logical(&s.g)? * &loc.r;
        let lv = apply_pauli(&l, &v);
        let (c, sn) = ((s.theta / 2.0).cos(), (s.theta / 2.0).sin());
        for (a, b) in v.iter_mut().zip(lv) {
            *a = *a * c - C::new(0.0, sn) * b;
        }
    }
    let st = StateVector { n_qubits: res.n_qubits(), amplitudes: v };
    expect(&st, res.logical(label)?)
}

/// Logical operators represented on the right boundary column. T ↦ V_R keeps all products and phases.
fn right_image(cat: &SymmetryCatalog, op: &PauliOperator) -> PauliOperator {
    op.restrict(|q| cat.is_right(q))
}

fn i_pow(t: u8) -> C {
    [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0), C::new(0.0, -1.0)][(t % 4) as usize]
}

type LogicalSum = BTreeMap<Pattern, (PauliOperator, C)>;

fn add_term(sum: &mut LogicalSum, op: PauliOperator, coeff: C) {
    let c = coeff * i_pow(op.y_phase_exp());
    let op = op.normalized();
    let e = sum.entry(op.pattern()).or_insert((op, C::new(0.0, 0.0)));
    e.1 += c;
}

/// Tr[T(g) 𝓜_f … 𝓜_1(ρ_init)] for every logical label, with ρ_init fixed by ⟨T(h)⟩ = (-1)^χ(h), h ∈ H.
pub fn predict_logical(cat: &SymmetryCatalog, logical: &LogicalSet, steps: &[Step], sigma: &SigmaTable) -> Result<BTreeMap<String, f64>> {
    let mut channels = Vec::new();
    for s in steps {
        let sg = *sigma
            .get(&(s.site, s.g.clone()))
            .ok_or_else(|| Error::NotLocalizable { label: s.g.clone(), site: s.site.to_string() })?;
        let t = logical.t.get(&s.g).ok_or_else(|| Error::Domain(format!("unknown label {}", s.g)))?;
        channels.push(ChannelMixture::new(sg.clamp(-1.0, 1.0), right_image(cat, t), s.theta)?);
    }
    let mut stabs = Vec::new();
    for h in &logical.h_subgroup {
        let t = right_image(cat, &logical.t[h]);
        stabs.push(if logical.init_values[h] < 0 { t.neg() } else { t });
    }
    let mut out = BTreeMap::new();
    for (label, t) in &logical.t {
        let mut sum = LogicalSum::new();
        add_term(&mut sum, right_image(cat, t), C::new(1.0, 0.0));
        for ch in channels.iter().rev() {
            let mut next = LogicalSum::new();
            for (_, (op, c)) in sum {
                if op.anticommutes_with(&ch.generator) {
                    add_term(&mut next, op.clone(), c * ch.theta.cos());
                    add_term(&mut next, &op * &ch.generator, c * C::new(0.0, -ch.sigma() * ch.theta.sin()));
                } else {
                    add_term(&mut next, op, c);
                }
            }
            sum = next;
        }
        let mut val = C::new(0.0, 0.0);
        for (_, (op, c)) in sum {
            if let Some(s) = stabilizer_sign(&stabs, &op) {
                val += c * f64::from(s);
            }
        }
        out.insert(label.clone(), val.re);
    }
    Ok(out)
}

/// ε = θ²/N · (1-σ²)/σ².
pub fn error_bound(theta: f64, n: usize, sigma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    if sigma == 0.0 {
        return Err(Error::Domain("sigma = 0: the split rotation error is unbounded".into()));
    }
    if !(sigma.abs() <= 1.0) {
        return Err(Error::Domain(format!("sigma {sigma} outside [-1, 1]")));
    }
    let s2 = sigma * sigma;
    Ok(theta * theta / n as f64 * (1.0 - s2) / s2)
}

/// Normalized Choi matrix of Σ_j w_j [exp(-i a_j T)] in the orthonormal pair {I, T}/√d.
fn choi_2d(terms: &[(f64, f64)]) -> [[C; 2]; 2] {
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    for &(w, a) in terms {
        let v = [C::new(a.cos(), 0.0), C::new(0.0, -a.sin())];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += v[r] * v[c].conj() * w;
            }
        }
    }
    m
}

fn hermitian_trace_norm(m: &[[C; 2]; 2]) -> f64 {
    let (p, r, q) = (m[0][0].re, m[1][1].re, m[0][1]);
    let mid = (p + r) / 2.0;
    let rad = (((p - r) / 2.0).powi(2) + q.norm_sqr()).sqrt();
    (mid + rad).abs() + (mid - rad).abs()
}

/// N-fold composition of 𝓜(θ/(Nσ)) as weights over net half-angles.
pub fn split_rotation_terms(theta: f64, sigma: f64, n: usize) -> Vec<(f64, f64)> {
    let phi = theta / (n as f64 * sigma);
    let (p, q) = ((1.0 + sigma) / 2.0, (1.0 - sigma) / 2.0);
    let mut out = Vec::with_capacity(n + 1);
    let mut log_binom = 0.0f64;
    for j in 0..=n {
        if j > 0 {
            log_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        let w = if p == 0.0 || q == 0.0 {
            if (q == 0.0 && j == n) || (p == 0.0 && j == 0) {
                1.0
            } else {
                0.0
            }
        } else {
            (log_binom + j as f64 * p.ln() + (n - j) as f64 * q.ln()).exp()
        };
        out.push((w, (2.0 * j as f64 - n as f64) * phi / 2.0));
    }
    out
}

pub fn channel_distance(theta: f64, sigma: f64, n: usize) -> f64 {
    let mut d = choi_2d(&split_rotation_terms(theta, sigma, n));
    let t = choi_2d(&[(1.0, theta / 2.0)]);
    for r in 0..2 {
        for c in 0..2 {
            d[r][c] -= t[r][c];
        }
    }
    hermitian_trace_norm(&d)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub distance: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub theta: f64,
    pub sigma: f64,
    pub rows: Vec<ScalingRow>,
    /// distance·N at N = 10 and N = 100 agree within 20%, when both are present.
    pub converged: Option<bool>,
}

/// Choi trace-norm distance between N split rotations about `generator` and the target rotation.
pub fn verify_error_scaling(generator: &PauliOperator, theta: f64, sigma: f64, ns: &[usize]) -> Result<ScalingReport> {
    if generator.is_identity_pattern() || !generator.is_hermitian() {
        return Err(Error::Domain(format!("{} does not generate a logical qubit rotation", generator.to_text())));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let bound = error_bound(theta, n, sigma)?;
        let distance = channel_distance(theta, sigma, n);
        rows.push(ScalingRow { n, distance, bound, within_bound: distance <= bound + 1e-12 });
    }
    let at = |n| rows.iter().find(|r| r.n == n).map(|r| r.distance * n as f64);
    let converged = match (at(10), at(100)) {
        (Some(a), Some(b)) if b > 0.0 => Some(((a - b) / b).abs() <= 0.2),
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    };
    Ok(ScalingReport { theta, sigma, rows, converged })
}

fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn spectral_norm_2(m: &M2) -> f64 {
    // largest singular value from the eigenvalues of M†M
    let mut h = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
        }
    }
    let (p, r, q) = (h[0][0].re, h[1][1].re, h[0][1]);
    let lmax = (p + r) / 2.0 + (((p - r) / 2.0).powi(2) + q.norm_sqr()).sqrt();
    lmax.max(0.0).sqrt()
}

/// ‖e^{-iaA} e^{-iaB} e^{iaA} e^{iaB} − exp(−(dθ)²/4 [A,B])‖ with a = dθ/2.
/// Anticommuting Paulis generate a copy of 2×2 matrices (A ↦ X, B ↦ Z), so the norm is computed there.
pub fn compose_commutator(a: &PauliOperator, b: &PauliOperator, dtheta: f64) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Dimension { expected: a.n_qubits(), got: b.n_qubits() });
    }
    if !a.is_hermitian() || !b.is_hermitian() {
        return Err(Error::NonHermitian(format!("{} / {}", a.to_text(), b.to_text())));
    }
    if a.commutes_with(b) {
        return Err(Error::Domain(format!("{} and {} commute: the commutator is zero", a.to_text(), b.to_text())));
    }
    let h = dtheta / 2.0;
    let seq = [rotation(Letter::X, h), rotation(Letter::Z, h), rotation(Letter::X, -h), rotation(Letter::Z, -h)];
    let v = seq.iter().fold(letter_matrix(Letter::I), |acc, g| mat_mul(&acc, g));
    // [X, Z] = -2iY, so exp(-(dθ)²/4 [X,Z]) = exp(+i (dθ)²/2 Y)
    let target = rotation(Letter::Y, -dtheta * dtheta / 2.0);
    let mut d = v;
    for i in 0..2 {
        for j in 0..2 {
            d[i][j] -= target[i][j];
        }
    }
    Ok(spectral_norm_2(&d))
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorScaling {
    pub dtheta: f64,
    pub residual: f64,
    pub residual_half: f64,
    pub ratio: f64,
    pub cubic: bool,
}

/// Residual at dθ and dθ/2; third-order scaling gives a ratio near 8.
pub fn commutator_scaling(a: &PauliOperator, b: &PauliOperator, dtheta: f64) -> Result<CommutatorScaling> {
    let residual = compose_commutator(a, b, dtheta)?;
    let residual_half = compose_commutator(a, b, dtheta / 2.0)?;
    let ratio = residual / residual_half;
    Ok(CommutatorScaling { dtheta, residual, residual_half, ratio, cubic: (ratio - 8.0).abs() <= 2.0 })
}

/// A random admissible sequence of up to `max_steps` steps with angles in [-π, π).
pub fn random_steps(res: &ResourceState, max_steps: usize, sep: Separation, rng: &mut impl Rng) -> Vec<Step> {
    let mut options: Vec<(Coord, String)> = res.sigma_table.keys().cloned().collect();
    options.sort_by_key(|(c, l)| (c.x2, c.y2, l.clone()));
    let count = rng.gen_range(1..=max_steps.max(1));
    let mut steps: Vec<Step> = Vec::new();
    for _ in 0..count {
        let last = steps.last().map(|s| s.site.x2);
        let ok: Vec<&(Coord, String)> = options
            .iter()
            .filter(|(c, _)| match last {
                None => true,
                Some(x) => c.x2 > x && (!sep.strict || f64::from(c.x2 - x) / 2.0 + 1e-12 >= sep.min_distance()),
            })
            .collect();
        if ok.is_empty() {
            break;
        }
        let (c, l) = ok[rng.gen_range(0..ok.len())];
        steps.push(Step::new(*c, l, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)));
    }
    steps
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelCheck {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub prediction: f64,
    pub within_5se: bool,
}

/// Estimates against predictions; a label passes when |est − pred| ≤ 5·stderr.
pub fn compare(run: &ProtocolRun, prediction: &BTreeMap<String, f64>) -> Vec<LabelCheck> {
    run.estimates
        .iter()
        .map(|(label, e)| {
            let p = prediction.get(label).copied().unwrap_or(f64::NAN);
            LabelCheck { label: label.clone(), estimate: e.mean, stderr: e.stderr, prediction: p, within_5se: (e.mean - p).abs() <= 5.0 * e.stderr + 1e-9 }
        })
        .collect()
}

pub fn run_record(run: &ProtocolRun, checks: &[LabelCheck]) -> serde_json::Value {
    json!({
        "steps": run.steps.iter().map(|s| json!({"site": s.site.to_string(), "g": s.g, "theta": s.theta})).collect::<Vec<_>>(),
        "seed": run.seed,
        "rng": "ChaCha8, stream = shot index",
        "shots": run.shots,
        "bases": run.bases.iter().collect::<String>(),
        "estimates": checks.iter().map(|c| (c.label.clone(), json!({
            "estimate": c.estimate,
            "stderr": c.stderr,
            "prediction": c.prediction,
            "pass": c.within_5se,
        }))).collect::<serde_json::Map<_, _>>(),
        "pass": checks.iter().all(|c| c.within_5se),
    })
}
