//! Substitution maps from the anisotropic toric code to transverse-field Ising
//! chains: the direct map M, its Kramers-Wannier dual M̃, and the chain-level
//! duality D with M̃ = D ∘ M.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::f2::Echelon;
use crate::lattice::{Coord, Lattice, LatticeKind};
use crate::models::{build_toric, Family, SpinModel, TermKind};
use crate::pauli::{Letter, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    DirectM,
    DualM,
    KwD,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    Electric,
    Magnetic,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainLayout {
    pub sector: Sector,
    /// Lattice row y (vertex rows for electric, plaquette rows for magnetic).
    pub row: i32,
    pub sites: Vec<Coord>,
    pub offset: usize,
}

/// Chain variables of one map, laid out chain after chain.
#[derive(Clone, Debug)]
pub struct Register {
    pub chains: Vec<ChainLayout>,
    pub periodic: bool,
    wrap: (i32, i32),
    index: BTreeMap<Coord, usize>,
}

impl Register {
    fn new(chains: Vec<(Sector, i32, Vec<Coord>)>, periodic: bool, wrap: (i32, i32)) -> Self {
        let mut out = Vec::new();
        let mut index = BTreeMap::new();
        let mut offset = 0;
        for (sector, row, sites) in chains {
            for (i, c) in sites.iter().enumerate() {
                index.insert(*c, offset + i);
            }
            let n = sites.len();
            out.push(ChainLayout { sector, row, sites, offset });
            offset += n;
        }
        Register { chains: out, periodic, wrap, index }
    }

    pub fn n_qubits(&self) -> usize {
        self.chains.iter().map(|c| c.sites.len()).sum()
    }

    fn norm(&self, c: Coord) -> Coord {
        if self.periodic {
            Coord::new(c.x2.rem_euclid(self.wrap.0), c.y2)
        } else {
            c
        }
    }

    pub fn qubit(&self, c: Coord) -> Option<usize> {
        self.index.get(&self.norm(c)).copied()
    }

    pub fn chain_of(&self, q: usize) -> usize {
        self.chains.iter().position(|c| q >= c.offset && q < c.offset + c.sites.len()).expect("qubit in register")
    }

    /// Letters at chain coordinates; coordinates outside the register are dropped.
    pub fn pauli_cut(&self, letters: &[(Coord, Letter)]) -> PauliOperator {
        let n = self.n_qubits();
        let mut p = PauliOperator::identity(n);
        for &(c, l) in letters {
            if let Some(q) = self.qubit(c) {
                p = &p * &PauliOperator::single(n, q, l);
            }
        }
        p.normalized()
    }

    /// Restriction of a register operator to chain `k`, on the chain's own qubits.
    pub fn chain_local(&self, op: &PauliOperator, k: usize) -> PauliOperator {
        let ch = &self.chains[k];
        let n = ch.sites.len();
        let mut p = PauliOperator::identity(n);
        for (q, l) in op.letters() {
            if q >= ch.offset && q < ch.offset + n {
                p = &p * &PauliOperator::single(n, q - ch.offset, l);
            }
        }
        p.with_letter_phase(op.y_phase_exp())
    }

    pub fn find_chain(&self, sector: Sector, row: i32) -> Option<usize> {
        self.chains.iter().position(|c| c.sector == sector && c.row == row)
    }
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub family: &'static str,
    pub center: Coord,
    pub source: PauliOperator,
    pub image: PauliOperator,
}

#[derive(Clone, Debug)]
pub struct SubstitutionMap {
    pub which: MapKind,
    pub source_n: usize,
    pub target: Register,
    pub rules: Vec<Rule>,
    /// Central chain operators equal to +1 on the image of the lattice Hilbert space.
    pub constraints: Vec<PauliOperator>,
    echelon: Echelon,
}

impl SubstitutionMap {
    /// Checks commutation preservation on all rule pairs and consistency on relations.
    pub fn new(which: MapKind, source_n: usize, target: Register, rules: Vec<Rule>) -> Result<Self> {
        for (i, a) in rules.iter().enumerate() {
            if !a.source.is_hermitian() || !a.image.is_hermitian() {
                return Err(Error::NonHermitian(format!("rule {} at {}", a.family, a.center)));
            }
            for b in &rules[i + 1..] {
                if a.source.anticommutes_with(&b.source) != a.image.anticommutes_with(&b.image) {
                    return Err(Error::Invariance(format!(
                        "{} at {} and {} at {} change commutation",
                        a.family, a.center, b.family, b.center
                    )));
                }
            }
        }
        let mut echelon = Echelon::new(rules.len());
        let mut m = SubstitutionMap { which, source_n, target, rules, constraints: Vec::new(), echelon: Echelon::new(0) };
        for i in 0..m.rules.len() {
            let row = m.rules[i].source.symplectic_row();
            if !echelon.insert(i, &row) {
                let prior = echelon.solve(&row).expect("dependent row is solvable");
                let img = m.image_of(&prior, &m.rules[i].source);
                if img != m.rules[i].image {
                    let c = &img * &m.rules[i].image;
                    if !c.is_hermitian() || c.is_identity_pattern() || m.rules.iter().any(|r| r.image.anticommutes_with(&c)) {
                        return Err(Error::Unsupported(format!(
                            "{:?} is inconsistent on this lattice: relation through {} at {} is not preserved",
                            which, m.rules[i].family, m.rules[i].center
                        )));
                    }
                    if !m.constraints.contains(&c) {
                        m.constraints.push(c);
                    }
                }
            }
        }
        m.echelon = echelon;
        Ok(m)
    }

    fn image_of(&self, idx: &[usize], target: &PauliOperator) -> PauliOperator {
        let mut src = PauliOperator::identity(self.source_n);
        let mut img = PauliOperator::identity(self.target.n_qubits());
        for &i in idx {
            src = &src * &self.rules[i].source;
            img = &img * &self.rules[i].image;
        }
        let c = (4 + target.phase_exp() - src.phase_exp()) % 4;
        img.times_i(c)
    }

    /// Equal as operators on the constrained sector.
    pub fn equivalent(&self, a: &PauliOperator, b: &PauliOperator) -> bool {
        let b_inv = b.clone().with_letter_phase((4 - b.y_phase_exp()) % 4);
        let d = a * &b_inv;
        if d.is_identity() {
            return true;
        }
        if self.constraints.len() > 16 {
            return false;
        }
        (1u32..(1 << self.constraints.len())).any(|mask| {
            let mut c = d.clone();
            for (j, k) in self.constraints.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    c = &c * k;
                }
            }
            c.is_identity()
        })
    }

    /// Image of `op`, unique up to the sector constraints; the lowest-weight representative is returned.
    pub fn apply(&self, op: &PauliOperator) -> Result<PauliOperator> {
        if op.n_qubits() != self.source_n {
            return Err(Error::Dimension { expected: self.source_n, got: op.n_qubits() });
        }
        let pat = op.pattern();
        if let Some(i) = self.rules.iter().position(|r| r.source.pattern() == pat) {
            return Ok(self.image_of(&[i], op));
        }
        let idx = self.echelon.solve(&op.symplectic_row()).ok_or_else(|| Error::Unmappable(op.to_text()))?;
        let img = self.image_of(&idx, op);
        if self.constraints.is_empty() || self.constraints.len() > 12 {
            return Ok(img);
        }
        let mut best = img.clone();
        for mask in 1u32..(1 << self.constraints.len()) {
            let mut c = img.clone();
            for (j, k) in self.constraints.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    c = &c * k;
                }
            }
            if (c.weight(), c.to_text()) < (best.weight(), best.to_text()) {
                best = c;
            }
        }
        Ok(best)
    }
}

pub fn apply_map(op: &PauliOperator, map: &SubstitutionMap) -> Result<PauliOperator> {
    map.apply(op)
}

fn check_toric(lattice: &Lattice) -> Result<()> {
    if lattice.spec.kind != LatticeKind::ToricEdgeQubits {
        return Err(Error::Unsupported("dualities exist only for the toric family".into()));
    }
    Ok(())
}

fn geometry(lattice: &Lattice) -> (Vec<i32>, Vec<i32>, Vec<i32>, Vec<i32>) {
    let (lx, ly) = (lattice.spec.lx as i32, lattice.spec.ly as i32);
    if lattice.spec.is_periodic() {
        ((0..lx).map(|x| 2 * x).collect(), (0..ly).collect(), (0..lx).map(|x| 2 * x + 1).collect(), (0..ly).collect())
    } else {
        ((1..=lx).map(|x| 2 * x).collect(), (1..=ly).collect(), (1..lx).map(|x| 2 * x + 1).collect(), (1..ly).collect())
    }
}

fn direct_register(lattice: &Lattice) -> Register {
    let (vx, vy, _, py) = geometry(lattice);
    let periodic = lattice.spec.is_periodic();
    let w = (2 * lattice.spec.lx as i32, 2 * lattice.spec.ly as i32);
    let mut chains = Vec::new();
    for &y in &vy {
        let sites: Vec<Coord> = if periodic {
            vx.iter().map(|&x2| Coord::new(x2 + 1, 2 * y)).collect()
        } else {
            let mut s: Vec<Coord> = vx.iter().map(|&x2| Coord::new(x2 - 1, 2 * y)).collect();
            s.push(Coord::new(vx[vx.len() - 1] + 1, 2 * y));
            s
        };
        chains.push((Sector::Electric, y, sites));
    }
    for &y in &py {
        chains.push((Sector::Magnetic, y, vx.iter().map(|&x2| Coord::new(x2, 2 * y + 1)).collect()));
    }
    Register::new(chains, periodic, w)
}

fn dual_register(lattice: &Lattice) -> Register {
    let (vx, vy, px, py) = geometry(lattice);
    let w = (2 * lattice.spec.lx as i32, 2 * lattice.spec.ly as i32);
    let mut chains = Vec::new();
    for &y in &vy {
        chains.push((Sector::Electric, y, vx.iter().map(|&x2| Coord::new(x2, 2 * y)).collect()));
    }
    for &y in &py {
        chains.push((Sector::Magnetic, y, px.iter().map(|&x2| Coord::new(x2, 2 * y + 1)).collect()));
    }
    Register::new(chains, lattice.spec.is_periodic(), w)
}

/// Lattice operators the maps act on: A, B and the field terms, optionally with the end-column X fields.
fn source_generators(lattice: &Lattice, end_fields: bool) -> Result<SpinModel> {
    build_toric(lattice.spec, 1.0, 1.0, if end_fields { 1.0 } else { 0.0 })
}

fn family_name(kind: TermKind) -> &'static str {
    match kind {
        TermKind::Vertex => "A",
        TermKind::Plaquette => "B",
        TermKind::FieldZ => "Z",
        TermKind::FieldX | TermKind::EpsilonX => "X",
        _ => "?",
    }
}

fn point(c: Coord, dx: i32, l: Letter) -> (Coord, Letter) {
    (Coord::new(c.x2 + dx, c.y2), l)
}

pub fn direct_map(lattice: &Lattice) -> Result<SubstitutionMap> {
    direct_map_with(lattice, false)
}

pub fn direct_map_with(lattice: &Lattice, end_fields: bool) -> Result<SubstitutionMap> {
    check_toric(lattice)?;
    let reg = direct_register(lattice);
    let src = source_generators(lattice, end_fields)?;
    let mut rules = Vec::new();
    for t in &src.terms {
        let c = t.center;
        let letters = match t.kind {
            TermKind::Vertex => vec![point(c, -1, Letter::Z), point(c, 1, Letter::Z)],
            TermKind::FieldZ => vec![point(c, 0, Letter::X)],
            TermKind::Plaquette => vec![point(c, -1, Letter::Z), point(c, 1, Letter::Z)],
            TermKind::FieldX | TermKind::EpsilonX => vec![point(c, 0, Letter::X)],
            _ => continue,
        };
        rules.push(Rule { family: family_name(t.kind), center: c, source: t.op.normalized(), image: reg.pauli_cut(&letters) });
    }
    SubstitutionMap::new(MapKind::DirectM, lattice.n_qubits(), reg, rules)
}

pub fn dual_map(lattice: &Lattice) -> Result<SubstitutionMap> {
    dual_map_with(lattice, false)
}

pub fn dual_map_with(lattice: &Lattice, end_fields: bool) -> Result<SubstitutionMap> {
    check_toric(lattice)?;
    let reg = dual_register(lattice);
    let src = source_generators(lattice, end_fields)?;
    let mut rules = Vec::new();
    for t in &src.terms {
        let c = t.center;
        let letters = match t.kind {
            TermKind::Vertex => vec![point(c, 0, Letter::X)],
            TermKind::FieldZ => vec![point(c, -1, Letter::Z), point(c, 1, Letter::Z)],
            TermKind::Plaquette => vec![point(c, 0, Letter::X)],
            TermKind::FieldX | TermKind::EpsilonX => vec![point(c, -1, Letter::Z), point(c, 1, Letter::Z)],
            _ => continue,
        };
        rules.push(Rule { family: family_name(t.kind), center: c, source: t.op.normalized(), image: reg.pauli_cut(&letters) });
    }
    SubstitutionMap::new(MapKind::DualM, lattice.n_qubits(), reg, rules)
}

/// D on the chain variables of M: bonds go to single X, transverse fields to bonds.
pub fn kw_map(lattice: &Lattice) -> Result<SubstitutionMap> {
    check_toric(lattice)?;
    let from = direct_register(lattice);
    let to = dual_register(lattice);
    let (vx, vy, px, py) = geometry(lattice);
    let n = from.n_qubits();
    let mut rules = Vec::new();
    for &y in &vy {
        for &x2 in &vx {
            let c = Coord::new(x2, 2 * y);
            let bond = from.pauli_cut(&[point(c, -1, Letter::Z), point(c, 1, Letter::Z)]);
            rules.push(Rule { family: "sigma_zz", center: c, source: bond, image: to.pauli_cut(&[point(c, 0, Letter::X)]) });
        }
        for &x2 in &px {
            let c = Coord::new(x2, 2 * y);
            rules.push(Rule {
                family: "sigma_x",
                center: c,
                source: from.pauli_cut(&[point(c, 0, Letter::X)]),
                image: to.pauli_cut(&[point(c, -1, Letter::Z), point(c, 1, Letter::Z)]),
            });
        }
    }
    for &y in &py {
        for &x2 in &px {
            let c = Coord::new(x2, 2 * y + 1);
            let bond = from.pauli_cut(&[point(c, -1, Letter::Z), point(c, 1, Letter::Z)]);
            rules.push(Rule { family: "tau_zz", center: c, source: bond, image: to.pauli_cut(&[point(c, 0, Letter::X)]) });
        }
        for &x2 in &vx {
            let c = Coord::new(x2, 2 * y + 1);
            rules.push(Rule {
                family: "tau_x",
                center: c,
                source: from.pauli_cut(&[point(c, 0, Letter::X)]),
                image: to.pauli_cut(&[point(c, -1, Letter::Z), point(c, 1, Letter::Z)]),
            });
        }
    }
    SubstitutionMap::new(MapKind::KwD, n, to, rules)
}

/// M or M̃ for a model; open lattices always include the end-column X fields as sources.
pub fn map_for_model(model: &SpinModel, which: MapKind) -> Result<SubstitutionMap> {
    let ends = !model.spec().is_periodic();
    match which {
        MapKind::DirectM => direct_map_with(&model.lattice, ends),
        MapKind::DualM => dual_map_with(&model.lattice, ends),
        MapKind::KwD => kw_map(&model.lattice),
    }
}

pub fn substitution_map(lattice: &Lattice, which: MapKind) -> Result<SubstitutionMap> {
    match which {
        MapKind::DirectM => direct_map(lattice),
        MapKind::DualM => dual_map(lattice),
        MapKind::KwD => kw_map(lattice),
    }
}

/// H = -Σ coupling_b Z_b Z_{b+1} - Σ field_i X_i - Σ longitudinal_i Z_i on one chain.
#[derive(Clone, Debug, Serialize)]
pub struct ChainSpec {
    pub sector: Sector,
    pub row: i32,
    pub n_sites: usize,
    pub field: Vec<f64>,
    pub coupling: Vec<f64>,
    pub longitudinal: Vec<f64>,
    pub periodic: bool,
    pub origin_map: Vec<String>,
    /// Conserved chain operators fixed by the model's symmetric sector.
    pub constraints: Vec<(PauliOperator, i8)>,
    pub chain_index: usize,
}

impl ChainSpec {
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut b: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.periodic && n > 2 {
            b.push((n - 1, 0));
        }
        b
    }

    pub fn terms(&self) -> Vec<(f64, PauliOperator)> {
        let n = self.n_sites;
        let mut out = Vec::new();
        for ((i, j), &j_b) in self.bonds().iter().zip(&self.coupling) {
            if j_b != 0.0 {
                out.push((-j_b, PauliOperator::from_letters(n, &[(*i, Letter::Z), (*j, Letter::Z)])));
            }
        }
        for (i, &h) in self.field.iter().enumerate() {
            if h != 0.0 {
                out.push((-h, PauliOperator::single(n, i, Letter::X)));
            }
        }
        for (i, &l) in self.longitudinal.iter().enumerate() {
            if l != 0.0 {
                out.push((-l, PauliOperator::single(n, i, Letter::Z)));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "sector": self.sector,
            "row": self.row,
            "n_sites": self.n_sites,
            "fields": self.field,
            "couplings": self.coupling,
            "longitudinal": self.longitudinal,
            "periodic": self.periodic,
            "origin_map": self.origin_map,
        })
    }
}

fn sector_of(kind: TermKind) -> Option<Sector> {
    match kind {
        TermKind::Vertex | TermKind::FieldZ => Some(Sector::Electric),
        TermKind::Plaquette | TermKind::FieldX | TermKind::EpsilonX => Some(Sector::Magnetic),
        _ => None,
    }
}

pub fn decompose_chains(model: &SpinModel, map: &SubstitutionMap) -> Result<Vec<ChainSpec>> {
    if model.family != Family::Toric {
        return Err(Error::Unsupported("chain decomposition needs the toric family".into()));
    }
    if map.which == MapKind::KwD {
        return Err(Error::Unsupported("D acts on chain variables, pick M or M̃".into()));
    }
    if map.source_n != model.n_qubits() {
        return Err(Error::Dimension { expected: map.source_n, got: model.n_qubits() });
    }
    for a in &model.terms {
        for b in &model.terms {
            if sector_of(a.kind) == Some(Sector::Electric)
                && sector_of(b.kind) == Some(Sector::Magnetic)
                && a.op.anticommutes_with(&b.op)
            {
                return Err(Error::Invariance("electric and magnetic sectors do not commute".into()));
            }
        }
    }
    let reg = &map.target;
    let mut specs: Vec<ChainSpec> = reg
        .chains
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let n = c.sites.len();
            let nb = if reg.periodic && n > 2 { n } else { n.saturating_sub(1) };
            ChainSpec {
                sector: c.sector,
                row: c.row,
                n_sites: n,
                field: vec![0.0; n],
                coupling: vec![0.0; nb],
                longitudinal: vec![0.0; n],
                periodic: reg.periodic,
                origin_map: vec!["frozen".into(); n],
                constraints: Vec::new(),
                chain_index: k,
            }
        })
        .collect();
    for t in &model.terms {
        let img = map.apply(&t.op.normalized())?;
        let sign = img.sign().ok_or_else(|| Error::NonHermitian(img.to_text()))? as f64;
        let sup = img.support();
        let k = match sup.first() {
            Some(&q) => reg.chain_of(q),
            None => return Err(Error::Unmappable(format!("term at {} maps to a constant", t.center))),
        };
        if sup.iter().any(|&q| reg.chain_of(q) != k) {
            return Err(Error::Unmappable(format!("term at {} spans several chains", t.center)));
        }
        let off = reg.chains[k].offset;
        let local: Vec<(usize, Letter)> = img.letters().into_iter().map(|(q, l)| (q - off, l)).collect();
        let w = -t.coeff * sign;
        let spec = &mut specs[k];
        let name = format!("{}{}", family_name(t.kind), t.center);
        match local.as_slice() {
            [(i, Letter::X)] => {
                spec.field[*i] += w;
                spec.origin_map[*i] = name;
            }
            [(i, Letter::Z)] => spec.longitudinal[*i] += w,
            [(i, Letter::Z), (j, Letter::Z)] => {
                let b = spec
                    .bonds()
                    .iter()
                    .position(|&(p, q)| (p, q) == (*i, *j) || (p, q) == (*j, *i))
                    .ok_or_else(|| Error::Unmappable(format!("term at {} is not a chain bond", t.center)))?;
                spec.coupling[b] += w;
            }
            _ => return Err(Error::Unmappable(format!("term at {} has a non-Ising image", t.center))),
        }
    }
    // conserved images of the row symmetries
    let src = source_generators(&model.lattice, false)?;
    for spec in specs.iter_mut() {
        let kind = if spec.sector == Sector::Electric { TermKind::Vertex } else { TermKind::Plaquette };
        let y2 = if spec.sector == Sector::Electric { 2 * spec.row } else { 2 * spec.row + 1 };
        let row_ops: Vec<&PauliOperator> = src.terms.iter().filter(|t| t.kind == kind && t.center.y2 == y2).map(|t| &t.op).collect();
        let u = crate::pauli::product(model.n_qubits(), row_ops);
        let img = map.apply(&u)?;
        let local = reg.chain_local(&img, spec.chain_index);
        let h = spec.terms();
        if h.iter().all(|(_, p)| p.commutes_with(&local)) && !local.is_identity_pattern() {
            let s = local.sign().unwrap_or(1);
            spec.constraints.push((local.normalized(), s));
        }
    }
    for c in &map.constraints {
        let chains: std::collections::BTreeSet<usize> = c.support().into_iter().map(|q| reg.chain_of(q)).collect();
        // factor by chain; the overall sign goes on the first factor
        let mut sign = c.sign().unwrap_or(1);
        for &k in &chains {
            let local = reg.chain_local(&c.normalized(), k).normalized();
            let entry = (local, sign);
            sign = 1;
            if !specs[k].constraints.iter().any(|(p, _)| *p == entry.0) {
                specs[k].constraints.push(entry);
            }
        }
    }
    Ok(specs)
}

/// Operators of interest on the open lattice, by row.
pub fn loop_operator(model: &SpinModel, sector: Sector, row: i32, from_x: i32, to_x: i32) -> PauliOperator {
    let (kind, dx, y2) = match sector {
        Sector::Electric => (TermKind::Vertex, 0, 2 * row),
        Sector::Magnetic => (TermKind::Plaquette, 1, 2 * row + 1),
    };
    let ops = model
        .terms
        .iter()
        .filter(|t| t.kind == kind && t.center.y2 == y2 && t.center.x2 >= 2 * from_x + dx && t.center.x2 <= 2 * to_x + dx)
        .map(|t| &t.op);
    crate::pauli::product(model.n_qubits(), ops)
}

/// Horizontal string: Z on horizontal edges (x+½, y), x in [from_x, to_x] (electric) or X on vertical edges (x, y+½) (magnetic).
pub fn string_operator(lattice: &Lattice, sector: Sector, row: i32, from_x: i32, to_x: i32) -> Result<PauliOperator> {
    let mut letters = Vec::new();
    for x in from_x..=to_x {
        let c = match sector {
            Sector::Electric => Coord::new(2 * x + 1, 2 * row),
            Sector::Magnetic => Coord::new(2 * x, 2 * row + 1),
        };
        let l = if sector == Sector::Electric { Letter::Z } else { Letter::X };
        letters.push((c, l));
    }
    lattice.pauli(&letters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::models::build_toric_mbqc;
    use crate::testutil::dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open(lx: usize, ly: usize) -> Lattice {
        Lattice::new(LatticeSpec::toric_open(lx, ly)).unwrap()
    }

    fn reg_op(reg: &Register, letters: &[(Coord, Letter)]) -> PauliOperator {
        for (c, _) in letters {
            assert!(reg.qubit(*c).is_some(), "{c} not in register");
        }
        reg.pauli_cut(letters)
    }

    #[test]
    fn loop_and_string_images() {
        let lat = open(6, 3);
        let model = build_toric_mbqc(6, 3, 0.0, 0.0).unwrap();
        let m = direct_map(&lat).unwrap();
        let mt = dual_map(&lat).unwrap();
        let y = 2;
        // R^e spanning vertices x = 2..4
        let r = loop_operator(&model, Sector::Electric, y, 2, 4);
        assert_eq!(m.apply(&r).unwrap(), reg_op(&m.target, &[(Coord::new(3, 4), Letter::Z), (Coord::new(9, 4), Letter::Z)]));
        let want: Vec<_> = (2..=4).map(|x| (Coord::new(2 * x, 4), Letter::X)).collect();
        assert_eq!(mt.apply(&r).unwrap(), reg_op(&mt.target, &want));
        // R^m over plaquettes x = 2..4
        let r = loop_operator(&model, Sector::Magnetic, 1, 2, 4);
        assert_eq!(m.apply(&r).unwrap(), reg_op(&m.target, &[(Coord::new(4, 3), Letter::Z), (Coord::new(10, 3), Letter::Z)]));
        // W[Γ^e] on horizontal edges x = 2..4
        let w = string_operator(&lat, Sector::Electric, y, 2, 4).unwrap();
        assert_eq!(mt.apply(&w).unwrap(), reg_op(&mt.target, &[(Coord::new(4, 4), Letter::Z), (Coord::new(10, 4), Letter::Z)]));
        let want: Vec<_> = (2..=4).map(|x| (Coord::new(2 * x + 1, 4), Letter::X)).collect();
        assert_eq!(m.apply(&w).unwrap(), reg_op(&m.target, &want));
        // W[Γ^m] on interior vertical edges x = 2..4
        let w = string_operator(&lat, Sector::Magnetic, 1, 2, 4).unwrap();
        assert_eq!(mt.apply(&w).unwrap(), reg_op(&mt.target, &[(Coord::new(3, 3), Letter::Z), (Coord::new(9, 3), Letter::Z)]));
        let a = model.terms[model.term_at(TermKind::Vertex, Coord::new(6, 4)).unwrap()].op.clone();
        assert_eq!(mt.apply(&a).unwrap(), reg_op(&mt.target, &[(Coord::new(6, 4), Letter::X)]));
    }

    #[test]
    fn unmappable_operator() {
        let lat = open(3, 2);
        let m = dual_map(&lat).unwrap();
        let x_h = lat.pauli(&[(Coord::new(3, 2), Letter::X)]).unwrap();
        assert!(matches!(m.apply(&x_h), Err(Error::Unmappable(_))));
    }

    fn random_word(map: &SubstitutionMap, rng: &mut ChaCha8Rng) -> PauliOperator {
        let mut p = PauliOperator::identity(map.source_n);
        for r in &map.rules {
            if rng.gen_bool(0.3) {
                p = &p * &r.source;
            }
        }
        p
    }

    #[test]
    fn commutation_preserved_on_random_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for lat in [open(4, 3), Lattice::new(LatticeSpec::toric_periodic(3, 3)).unwrap()] {
            let maps = if lat.spec.is_periodic() { vec![direct_map(&lat).unwrap()] } else { vec![direct_map(&lat).unwrap(), dual_map(&lat).unwrap()] };
            for m in maps {
                for _ in 0..200 {
                    let p = random_word(&m, &mut rng);
                    let q = random_word(&m, &mut rng);
                    let (ip, iq) = (m.apply(&p).unwrap(), m.apply(&q).unwrap());
                    assert_eq!(p.commutes_with(&q), ip.commutes_with(&iq));
                    let pq = m.apply(&(&p * &q)).unwrap();
                    assert!(m.equivalent(&pq, &(&ip * &iq)), "{:?} {} vs {}", m.which, pq.to_text(), (&ip * &iq).to_text());
                }
            }
        }
    }

    #[test]
    fn dual_is_kw_after_direct() {
        for lat in [open(3, 2), open(5, 4)] {
            let (m, mt, d) = (direct_map(&lat).unwrap(), dual_map(&lat).unwrap(), kw_map(&lat).unwrap());
            for r in &mt.rules {
                assert_eq!(d.apply(&m.apply(&r.source).unwrap()).unwrap(), r.image, "{} {}", r.family, r.center);
            }
        }
    }

    #[test]
    fn relations_become_sector_constraints() {
        let lat = Lattice::new(LatticeSpec::toric_periodic(3, 3)).unwrap();
        let mt = dual_map(&lat).unwrap();
        assert!(!mt.constraints.is_empty());
        let all_x: Vec<_> = mt.target.chains.iter().filter(|c| c.sector == Sector::Electric).flat_map(|c| c.sites.iter().map(|s| (*s, Letter::X))).collect();
        let parity = mt.target.pauli_cut(&all_x);
        assert!(mt.constraints.iter().any(|c| c.pattern() == parity.pattern()));
        assert!(direct_map(&lat).is_ok());
        let open = dual_map(&open(3, 2)).unwrap();
        for c in &open.constraints {
            assert!(open.rules.iter().all(|r| r.image.commutes_with(c)));
        }
    }

    #[test]
    fn open_chain_layout() {
        let model = build_toric_mbqc(3, 2, 0.7, 0.0).unwrap();
        let mt = dual_map(&model.lattice).unwrap();
        let chains = decompose_chains(&model, &mt).unwrap();
        let e: Vec<_> = chains.iter().filter(|c| c.sector == Sector::Electric).collect();
        let m: Vec<_> = chains.iter().filter(|c| c.sector == Sector::Magnetic).collect();
        assert_eq!((e.len(), m.len()), (2, 1));
        for c in &e {
            assert_eq!(c.n_sites, 3);
            assert_eq!(c.field, vec![1.0; 3]);
            assert_eq!(c.coupling, vec![0.7; 2]);
        }
        assert_eq!(m[0].n_sites, 2);
        assert_eq!(m[0].field, vec![1.0; 2]);
        assert_eq!(m[0].coupling, vec![0.7]);
        let model = build_toric_mbqc(5, 3, 0.5, 0.0).unwrap();
        let chains = decompose_chains(&model, &dual_map(&model.lattice).unwrap()).unwrap();
        let mc = chains.iter().find(|c| c.sector == Sector::Magnetic).unwrap();
        assert_eq!(mc.coupling, vec![0.5; 3]);
        let zero = build_toric_mbqc(5, 3, 0.0, 0.0).unwrap();
        for c in decompose_chains(&zero, &dual_map(&zero.lattice).unwrap()).unwrap() {
            assert!(c.coupling.iter().all(|&j| j == 0.0));
        }
    }

    #[test]
    fn periodic_direct_chains() {
        let model = build_toric(LatticeSpec::toric_periodic(3, 2), 0.4, 0.6, 0.0).unwrap();
        let chains = decompose_chains(&model, &direct_map(&model.lattice).unwrap()).unwrap();
        assert_eq!(chains.len(), 4);
        for c in &chains {
            assert_eq!(c.coupling, vec![1.0; 3]);
            let h = if c.sector == Sector::Electric { 0.6 } else { 0.4 };
            assert_eq!(c.field, vec![h; 3]);
        }
    }

    fn chain_ground(c: &ChainSpec) -> f64 {
        let terms: Vec<(f64, String)> = c.terms().iter().map(|(w, p)| (*w, p.to_text())).collect();
        if terms.is_empty() {
            return 0.0;
        }
        dense::ground(&dense::hamiltonian(c.n_sites, &terms)).0
    }

    #[test]
    fn chain_energies_match_2d() {
        for alpha in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let model = build_toric_mbqc(3, 2, alpha, 0.0).unwrap();
            let terms: Vec<(f64, String)> = model.weighted_terms().iter().map(|(w, p)| (*w, p.to_text())).collect();
            let e2d = dense::ground(&dense::hamiltonian(model.n_qubits(), &terms)).0;
            for which in [MapKind::DirectM, MapKind::DualM] {
                let map = substitution_map(&model.lattice, which).unwrap();
                let sum: f64 = decompose_chains(&model, &map).unwrap().iter().map(chain_ground).sum();
                assert!((sum - e2d).abs() < 1e-10, "{which:?} α={alpha}: {sum} vs {e2d}");
            }
        }
    }

    fn distinct_levels(c: &ChainSpec) -> Vec<f64> {
        let terms: Vec<(f64, String)> = c.terms().iter().map(|(w, p)| (*w, p.to_text())).collect();
        let mut out: Vec<f64> = Vec::new();
        for e in dense::spectrum(&dense::hamiltonian(c.n_sites, &terms)) {
            if out.last().map_or(true, |l| (e - l).abs() > 1e-8) {
                out.push(e);
            }
        }
        out
    }

    #[test]
    fn self_dual_point_spectra_agree() {
        let model = build_toric_mbqc(4, 2, 1.0, 0.0).unwrap();
        let d = decompose_chains(&model, &direct_map(&model.lattice).unwrap()).unwrap();
        let t = decompose_chains(&model, &dual_map(&model.lattice).unwrap()).unwrap();
        for (a, b) in d.iter().zip(&t) {
            assert_eq!((a.sector, a.row), (b.sector, b.row));
            let (sa, sb) = (distinct_levels(a), distinct_levels(b));
            assert_eq!(sa.len(), sb.len());
            for (x, y) in sa.iter().zip(&sb) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn random_words_have_hermitian_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lat = open(4, 3);
        let m = dual_map(&lat).unwrap();
        for _ in 0..50 {
            let p = random_word(&m, &mut rng).normalized();
            assert!(m.apply(&p).unwrap().is_hermitian());
        }
    }
}
