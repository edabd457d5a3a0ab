//! Hamiltonian builders and symmetry catalogs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Coord, Lattice, LatticeKind, LatticeSpec};
use crate::pauli::{self, Letter, PauliOperator};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Toric,
    XzStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Vertex,
    Plaquette,
    FieldX,
    FieldZ,
    EpsilonX,
    StarC,
    StarD,
}

#[derive(Clone, Debug, Serialize)]
pub struct Term {
    pub coeff: f64,
    pub op: PauliOperator,
    pub kind: TermKind,
    pub center: Coord,
}

#[derive(Clone, Debug)]
pub struct SpinModel {
    pub family: Family,
    pub lattice: Lattice,
    pub terms: Vec<Term>,
    pub stabilizer_subset: Vec<usize>,
    pub h_x: f64,
    pub h_z: f64,
    pub epsilon: f64,
}

impl SpinModel {
    pub fn spec(&self) -> LatticeSpec {
        self.lattice.spec
    }

    pub fn n_qubits(&self) -> usize {
        self.lattice.n_qubits()
    }

    pub fn stabilizers(&self) -> Vec<PauliOperator> {
        self.stabilizer_subset.iter().map(|&i| self.terms[i].op.clone()).collect()
    }

    /// Terms with nonzero coefficient as (coefficient, operator).
    pub fn weighted_terms(&self) -> Vec<(f64, PauliOperator)> {
        self.terms.iter().filter(|t| t.coeff != 0.0).map(|t| (t.coeff, t.op.clone())).collect()
    }

    pub fn terms_of(&self, kind: TermKind) -> impl Iterator<Item = (usize, &Term)> {
        self.terms.iter().enumerate().filter(move |(_, t)| t.kind == kind)
    }

    /// Index of the stabilizer term of `kind` centred at `c`.
    pub fn term_at(&self, kind: TermKind, c: Coord) -> Option<usize> {
        self.terms.iter().position(|t| t.kind == kind && t.center == c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "family": self.family,
            "lattice": self.lattice.spec,
            "n_qubits": self.n_qubits(),
            "h_x": self.h_x,
            "h_z": self.h_z,
            "epsilon": self.epsilon,
            "terms": self.terms.iter().map(|t| json!({
                "coeff": t.coeff,
                "op": t.op.to_text(),
                "kind": t.kind,
                "center": [t.center.x2, t.center.y2],
            })).collect::<Vec<_>>(),
            "stabilizer_subset": self.stabilizer_subset,
        })
    }
}

fn star_letters(c: Coord, l: Letter) -> Vec<(Coord, Letter)> {
    [(0, 0), (-2, 0), (2, 0), (0, -2), (0, 2)]
        .iter()
        .map(|(dx, dy)| (Coord::new(c.x2 + dx, c.y2 + dy), l))
        .collect()
}

fn vertex_letters(v: Coord) -> Vec<(Coord, Letter)> {
    [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .iter()
        .map(|(dx, dy)| (Coord::new(v.x2 + dx, v.y2 + dy), Letter::X))
        .collect()
}

fn plaquette_letters(p: Coord) -> Vec<(Coord, Letter)> {
    [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .iter()
        .map(|(dx, dy)| (Coord::new(p.x2 + dx, p.y2 + dy), Letter::Z))
        .collect()
}

/// Anisotropic toric code. On the open lattice `h_x` and `h_z` must agree (α);
/// `epsilon` adds X fields on the vertical edges of the first and last column.
pub fn build_toric(spec: LatticeSpec, h_x: f64, h_z: f64, epsilon: f64) -> Result<SpinModel> {
    if spec.kind != LatticeKind::ToricEdgeQubits {
        return Err(Error::InvalidLattice("toric model needs an edge-qubit lattice".into()));
    }
    let lattice = Lattice::new(spec)?;
    let (lx, ly) = (spec.lx as i32, spec.ly as i32);
    let mut terms = Vec::new();
    let open = spec.boundary == Boundary::OpenSmooth;
    if open && (h_x - h_z).abs() > 0.0 {
        return Err(Error::Domain(format!("open lattice needs h_x == h_z, got {h_x} and {h_z}")));
    }
    let (vx, vy, px, py) = if open { (1..=lx, 1..=ly, 1..lx, 1..ly) } else { (0..=lx - 1, 0..=ly - 1, 0..lx, 0..ly) };
    for y in vy.clone() {
        for x in vx.clone() {
            let c = Coord::new(2 * x, 2 * y);
            terms.push(Term { coeff: -1.0, op: lattice.pauli_cut(&vertex_letters(c)), kind: TermKind::Vertex, center: c });
        }
    }
    for y in py.clone() {
        for x in px.clone() {
            let c = Coord::new(2 * x + 1, 2 * y + 1);
            terms.push(Term { coeff: -1.0, op: lattice.pauli_cut(&plaquette_letters(c)), kind: TermKind::Plaquette, center: c });
        }
    }
    let n_stab = terms.len();
    for &c in lattice.sites() {
        if c.is_vertical_edge() {
            let bulk = !open || (c.x2 > 2 && c.x2 < 2 * lx);
            if bulk {
                terms.push(Term { coeff: -h_x, op: lattice.pauli(&[(c, Letter::X)])?, kind: TermKind::FieldX, center: c });
            }
        }
    }
    for &c in lattice.sites() {
        if c.is_horizontal_edge() {
            terms.push(Term { coeff: -h_z, op: lattice.pauli(&[(c, Letter::Z)])?, kind: TermKind::FieldZ, center: c });
        }
    }
    if open && epsilon != 0.0 {
        for &c in lattice.sites() {
            if c.is_vertical_edge() && (c.x2 == 2 || c.x2 == 2 * lx) {
                terms.push(Term { coeff: -epsilon, op: lattice.pauli(&[(c, Letter::X)])?, kind: TermKind::EpsilonX, center: c });
            }
        }
    }
    Ok(SpinModel {
        family: Family::Toric,
        lattice,
        terms,
        stabilizer_subset: (0..n_stab).collect(),
        h_x,
        h_z,
        epsilon: if open { epsilon } else { 0.0 },
    })
}

/// Open-boundary H_MBQC with field strength α.
pub fn build_toric_mbqc(lx: usize, ly: usize, alpha: f64, epsilon: f64) -> Result<SpinModel> {
    build_toric(LatticeSpec::toric_open(lx, ly), alpha, alpha, epsilon)
}

pub fn build_xz_star(spec: LatticeSpec) -> Result<SpinModel> {
    if spec.kind != LatticeKind::StarVertexQubits {
        return Err(Error::InvalidLattice("XZ-star model needs a vertex-qubit lattice".into()));
    }
    let lattice = Lattice::new(spec)?;
    let mut terms = Vec::new();
    for &c in lattice.sites() {
        let y = c.y2 / 2;
        let (l, kind) = if y % 2 == 0 { (Letter::X, TermKind::StarC) } else { (Letter::Z, TermKind::StarD) };
        terms.push(Term { coeff: -1.0, op: lattice.pauli_cut(&star_letters(c, l)), kind, center: c });
    }
    let n = terms.len();
    Ok(SpinModel { family: Family::XzStar, lattice, terms, stabilizer_subset: (0..n).collect(), h_x: 0.0, h_z: 0.0, epsilon: 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryEntry {
    pub label: String,
    pub u: PauliOperator,
    pub v_l: PauliOperator,
    pub v_r: PauliOperator,
    /// Indices into the model's terms whose product is `u`.
    pub factors: Vec<usize>,
    pub row: i32,
    pub derived: bool,
    /// Generator labels whose product this entry is (itself for generators).
    pub components: Vec<String>,
    pub chi: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCatalog {
    pub family: Family,
    pub n_qubits: usize,
    pub entries: Vec<SymmetryEntry>,
    /// x2 of the left and right boundary columns; `None` on periodic lattices.
    pub left_x2: Option<i32>,
    pub right_x2: Option<i32>,
    #[serde(skip)]
    pub sites: Vec<Coord>,
    pub metadata: BTreeMap<String, String>,
}

impl SymmetryCatalog {
    pub fn generators(&self) -> Vec<&SymmetryEntry> {
        self.entries.iter().filter(|e| !e.derived).collect()
    }

    pub fn group_gens(&self) -> Vec<String> {
        self.generators().iter().map(|e| e.label.clone()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&SymmetryEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn entry(&self, label: &str) -> Result<&SymmetryEntry> {
        self.get(label).ok_or_else(|| Error::Domain(format!("unknown symmetry label {label}")))
    }

    pub fn generator_index(&self, label: &str) -> Option<usize> {
        self.generators().iter().position(|e| e.label == label)
    }

    /// Membership vector of `label` over the generator list.
    pub fn expand(&self, label: &str) -> Result<Vec<bool>> {
        let e = self.entry(label)?;
        let mut v = vec![false; self.generators().len()];
        for c in &e.components {
            let i = self.generator_index(c).ok_or_else(|| Error::MalformedCatalog(format!("component {c} not a generator")))?;
            v[i] = !v[i];
        }
        Ok(v)
    }

    pub fn local_rep(&self, label: &str, q: usize) -> Result<Letter> {
        Ok(self.entry(label)?.u.letter(q))
    }

    pub fn is_left(&self, q: usize) -> bool {
        Some(self.sites[q].x2) == self.left_x2
    }

    pub fn is_right(&self, q: usize) -> bool {
        Some(self.sites[q].x2) == self.right_x2
    }

    pub fn is_bulk(&self, q: usize) -> bool {
        !self.is_left(q) && !self.is_right(q)
    }

    pub fn u_bulk(&self, label: &str) -> Result<PauliOperator> {
        Ok(self.entry(label)?.u.restrict(|q| self.is_bulk(q)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "family": self.family,
            "generators": self.group_gens(),
            "entries": self.entries.iter().map(|e| json!({
                "label": e.label,
                "U": e.u.to_text(),
                "V_L": e.v_l.to_text(),
                "V_R": e.v_r.to_text(),
                "derived": e.derived,
                "components": e.components,
                "chi": e.chi,
            })).collect::<Vec<_>>(),
            "left_x2": self.left_x2,
            "right_x2": self.right_x2,
            "metadata": self.metadata,
        })
    }
}

struct Raw {
    label: String,
    factors: Vec<usize>,
    row: i32,
    derived: bool,
    components: Vec<String>,
}

fn assemble(model: &SpinModel, raws: Vec<Raw>, metadata: BTreeMap<String, String>) -> Result<SymmetryCatalog> {
    let n = model.n_qubits();
    let periodic = model.spec().is_periodic();
    let (lo, hi) = model.lattice.x2_range();
    let (left_x2, right_x2) = if periodic { (None, None) } else { (Some(lo), Some(hi)) };
    let sites = model.lattice.sites().to_vec();
    let stabs = model.stabilizers();
    let mut entries = Vec::new();
    for r in raws {
        let u = pauli::product(n, r.factors.iter().map(|&i| &model.terms[i].op));
        if u.y_phase_exp() != 0 {
            return Err(Error::MalformedCatalog(format!("{} is not a + sign Pauli product", r.label)));
        }
        let v_l = match left_x2 {
            Some(x) => u.restrict(|q| sites[q].x2 == x),
            None => PauliOperator::identity(n),
        };
        let v_r = match right_x2 {
            Some(x) => u.restrict(|q| sites[q].x2 == x),
            None => PauliOperator::identity(n),
        };
        let chi = match pauli::stabilizer_sign(&stabs, &u) {
            Some(-1) => 1,
            _ => 0,
        };
        entries.push(SymmetryEntry {
            label: r.label,
            u,
            v_l,
            v_r,
            factors: r.factors,
            row: r.row,
            derived: r.derived,
            components: r.components,
            chi,
        });
    }
    Ok(SymmetryCatalog { family: model.family, n_qubits: n, entries, left_x2, right_x2, sites, metadata })
}

pub fn toric_label(sector: char, y: i32) -> String {
    format!("{sector}_{y}")
}

pub fn xz_label(barred: bool, pattern: &str, y: i32) -> String {
    if barred {
        format!("gbar{pattern}_{y}")
    } else {
        format!("g{pattern}_{y}")
    }
}

/// Residues (mod 3) selected by a pattern string such as "110".
pub fn pattern_residues(pattern: &str) -> Vec<i32> {
    pattern.chars().enumerate().filter(|(_, c)| *c == '1').map(|(i, _)| i as i32).collect()
}

pub fn symmetry_catalog(model: &SpinModel) -> Result<SymmetryCatalog> {
    let spec = model.spec();
    let mut meta = BTreeMap::new();
    let mut raws = Vec::new();
    match model.family {
        Family::Toric => {
            let (rows_e, rows_m): (Vec<i32>, Vec<i32>) = if spec.is_periodic() {
                ((0..spec.ly as i32).collect(), (0..spec.ly as i32).collect())
            } else {
                ((1..=spec.ly as i32).collect(), (1..spec.ly as i32).collect())
            };
            for &y in &rows_e {
                let f: Vec<usize> = model.terms_of(TermKind::Vertex).filter(|(_, t)| t.center.y2 == 2 * y).map(|(i, _)| i).collect();
                let l = toric_label('e', y);
                raws.push(Raw { label: l.clone(), factors: f, row: 2 * y, derived: false, components: vec![l] });
            }
            for &y in &rows_m {
                let f: Vec<usize> = model.terms_of(TermKind::Plaquette).filter(|(_, t)| t.center.y2 == 2 * y + 1).map(|(i, _)| i).collect();
                let l = toric_label('m', y);
                raws.push(Raw { label: l.clone(), factors: f, row: 2 * y + 1, derived: false, components: vec![l] });
            }
            meta.insert("electric rows".into(), format!("{rows_e:?}"));
            meta.insert("magnetic rows (plaquette row y+1/2)".into(), format!("{rows_m:?}"));
        }
        Family::XzStar => {
            let periodic = spec.is_periodic();
            let shift = if periodic { 0 } else { 1 };
            let rows: Vec<i32> = if periodic { (0..spec.ly as i32).collect() } else { (1..spec.ly as i32).collect() };
            meta.insert("residue rule".into(), format!("x in pattern iff (x - {shift}) mod 3 is a selected residue"));
            meta.insert("row parity".into(), "C (X) stars on even rows give g families; D (Z) stars on odd rows give gbar families".into());
            meta.insert("rows".into(), format!("{rows:?}"));
            if !periodic {
                meta.insert(
                    "left boundary".into(),
                    "with the residue shift the left actions of 011 and 101 are exchanged relative to the published listing; gbar101 acts on the left column as a Z-type operator".into(),
                );
            }
            let star_rows = |barred: bool| rows.iter().copied().filter(move |y| (y % 2 == 1) == barred);
            let factors_for = |y: i32, residues: &[i32]| -> Vec<usize> {
                let kind = if y % 2 == 0 { TermKind::StarC } else { TermKind::StarD };
                model
                    .terms_of(kind)
                    .filter(|(_, t)| t.center.y2 == 2 * y && residues.contains(&(t.center.x2 / 2 - shift).rem_euclid(3)))
                    .map(|(i, _)| i)
                    .collect()
            };
            let mut derived = Vec::new();
            for barred in [true, false] {
                for y in star_rows(barred) {
                    let a = xz_label(barred, "110", y);
                    let b = xz_label(barred, "011", y);
                    raws.push(Raw { label: a.clone(), factors: factors_for(y, &[0, 1]), row: 2 * y, derived: false, components: vec![a.clone()] });
                    raws.push(Raw { label: b.clone(), factors: factors_for(y, &[1, 2]), row: 2 * y, derived: false, components: vec![b.clone()] });
                    derived.push(Raw {
                        label: xz_label(barred, "101", y),
                        factors: factors_for(y, &[0, 2]),
                        row: 2 * y,
                        derived: true,
                        components: vec![a, b],
                    });
                }
            }
            raws.extend(derived);
        }
    }
    let cat = assemble(model, raws, meta)?;
    for e in &cat.entries {
        for t in model.terms.iter().filter(|t| t.kind != TermKind::EpsilonX) {
            if e.u.anticommutes_with(&t.op) {
                return Err(Error::MalformedCatalog(format!("{} anticommutes with a model term", e.label)));
            }
        }
    }
    Ok(cat)
}

/// Overrides χ from measured symmetry expectations (sign of ⟨U(g)⟩).
pub fn set_chi_from_expectations<F: Fn(&PauliOperator) -> f64>(cat: &mut SymmetryCatalog, expect: F) {
    for e in cat.entries.iter_mut() {
        e.chi = u8::from(expect(&e.u) < 0.0);
    }
}
