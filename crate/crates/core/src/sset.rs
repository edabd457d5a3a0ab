//! Global relations among subsystem symmetries, their truncation to boundary
//! Wilson loops, the φ anyon invariant and string-operator braiding.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::f2;
use crate::lattice::Coord;
use crate::models::{Family, SpinModel, SymmetryCatalog, TermKind};
use crate::pauli::{self, Letter, PauliOperator};

/// Anyon names: toric {e, m}; XZ-star {e, ebar, m, mbar}.
fn basis_names(family: Family) -> &'static [&'static str] {
    match family {
        Family::Toric => &["e", "m"],
        Family::XzStar => &["e", "ebar", "m", "mbar"],
    }
}

/// Element of the Z_2 fusion group, one bit per basis anyon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnyonLabel {
    pub family: Family,
    pub bits: u8,
}

impl AnyonLabel {
    pub fn vacuum(family: Family) -> Self {
        AnyonLabel { family, bits: 0 }
    }

    pub fn named(family: Family, name: &str) -> Result<Self> {
        if name == "1" {
            return Ok(Self::vacuum(family));
        }
        let names = basis_names(family);
        let mut bits = 0u8;
        for part in name.split('*') {
            let i = names.iter().position(|n| *n == part).ok_or_else(|| Error::Parse(format!("unknown anyon {part}")))?;
            bits ^= 1 << i;
        }
        Ok(AnyonLabel { family, bits })
    }

    pub fn basis(family: Family) -> Vec<AnyonLabel> {
        (0..basis_names(family).len()).map(|i| AnyonLabel { family, bits: 1 << i }).collect()
    }

    pub fn fuse(self, other: AnyonLabel) -> AnyonLabel {
        AnyonLabel { family: self.family, bits: self.bits ^ other.bits }
    }

    pub fn is_vacuum(&self) -> bool {
        self.bits == 0
    }
}

impl fmt::Display for AnyonLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits == 0 {
            return write!(f, "1");
        }
        let names = basis_names(self.family);
        let parts: Vec<&str> = (0..names.len()).filter(|i| self.bits >> i & 1 == 1).map(|i| names[i]).collect();
        if self.family == Family::Toric && parts.len() == 2 {
            return write!(f, "em");
        }
        write!(f, "{}", parts.join("*"))
    }
}

impl Serialize for AnyonLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalRelation {
    pub id: String,
    pub factors: Vec<String>,
    pub product: PauliOperator,
}

/// Rectangle of stabilizer centres, inclusive bounds in doubled units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub x0: i32,
    pub x1: i32,
    pub y0: i32,
    pub y1: i32,
}

impl Rect {
    pub fn new(x0: i32, x1: i32, y0: i32, y1: i32) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.x2 >= self.x0 && c.x2 <= self.x1 && c.y2 >= self.y0 && c.y2 <= self.y1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.x0 <= o.x0 && self.x1 >= o.x1 && self.y0 <= o.y0 && self.y1 >= o.y1
    }

    /// Sites within one lattice unit of the bounding lines.
    pub fn in_ribbon(&self, c: Coord) -> bool {
        let outer = c.x2 >= self.x0 - 2 && c.x2 <= self.x1 + 2 && c.y2 >= self.y0 - 2 && c.y2 <= self.y1 + 2;
        let deep = c.x2 > self.x0 + 2 && c.x2 < self.x1 - 2 && c.y2 > self.y0 + 2 && c.y2 < self.y1 - 2;
        outer && !deep
    }
}

fn is_stabilizer_kind(k: TermKind) -> bool {
    matches!(k, TermKind::Vertex | TermKind::Plaquette | TermKind::StarC | TermKind::StarD)
}

/// Product of the symmetry operators of `labels`; must be the identity with sign +1.
pub fn check_relation(cat: &SymmetryCatalog, id: &str, labels: &[String]) -> Result<GlobalRelation> {
    let ops: Vec<&PauliOperator> = labels.iter().map(|l| cat.entry(l).map(|e| &e.u)).collect::<Result<_>>()?;
    let product = pauli::product(cat.n_qubits, ops);
    if !product.is_identity() {
        return Err(Error::MalformedCatalog(format!("relation {id}: product is {}, not the identity", product.to_text())));
    }
    Ok(GlobalRelation { id: id.to_string(), factors: labels.to_vec(), product })
}

/// Toric: Π_y S(g^e_y) = Π_y S(g^m_y) = 1. XZ-star: products over even (odd) rows of the 110 and 011 families.
pub fn global_relations(cat: &SymmetryCatalog) -> Result<Vec<GlobalRelation>> {
    let gens = cat.generators();
    let pick = |f: &dyn Fn(&str) -> bool| -> Vec<String> { gens.iter().map(|e| e.label.clone()).filter(|l| f(l)).collect() };
    let groups: Vec<(&str, Vec<String>)> = match cat.family {
        Family::Toric => vec![("e", pick(&|l| l.starts_with("e_"))), ("m", pick(&|l| l.starts_with("m_")))],
        Family::XzStar => vec![
            ("g110", pick(&|l| l.starts_with("g110_"))),
            ("g011", pick(&|l| l.starts_with("g011_"))),
            ("gbar110", pick(&|l| l.starts_with("gbar110_"))),
            ("gbar011", pick(&|l| l.starts_with("gbar011_"))),
        ],
    };
    groups.into_iter().map(|(id, labels)| check_relation(cat, id, &labels)).collect()
}

/// Π_{y ∈ I_y} S_{I_x}(g_y): the relation's stabilizer factors with centres inside `rect`.
pub fn truncate_relation(model: &SpinModel, cat: &SymmetryCatalog, rel: &GlobalRelation, rect: Rect) -> Result<PauliOperator> {
    if !model.spec().is_periodic() {
        let (lo, hi) = model.lattice.x2_range();
        let ylo = model.lattice.sites().iter().map(|c| c.y2).min().unwrap_or(0);
        let yhi = model.lattice.sites().iter().map(|c| c.y2).max().unwrap_or(0);
        if rect.x0 - 2 <= lo || rect.x1 + 2 >= hi || rect.y0 - 2 <= ylo || rect.y1 + 2 >= yhi {
            return Err(Error::Domain(format!("rectangle {rect:?} touches the lattice boundary")));
        }
    }
    let mut op = PauliOperator::identity(model.n_qubits());
    for label in &rel.factors {
        for &t in &cat.entry(label)?.factors {
            if rect.contains(model.terms[t].center) {
                op = &op * &model.terms[t].op;
            }
        }
    }
    Ok(op)
}

/// Stabilizer terms anticommuting with `op`.
pub fn syndrome(model: &SpinModel, op: &PauliOperator) -> Vec<usize> {
    model
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| is_stabilizer_kind(t.kind) && t.op.anticommutes_with(op))
        .map(|(i, _)| i)
        .collect()
}

fn residue(model: &SpinModel, c: Coord) -> i32 {
    let shift = if model.spec().is_periodic() { 0 } else { 1 };
    (c.x2 / 2 - shift).rem_euclid(3)
}

/// Sector carried by a single violated stabilizer.
pub fn stabilizer_label(model: &SpinModel, t: usize) -> Result<AnyonLabel> {
    let term = &model.terms[t];
    let f = model.family;
    let name = match (term.kind, residue(model, term.center)) {
        (TermKind::Vertex, _) => "e",
        (TermKind::Plaquette, _) => "m",
        (TermKind::StarC, 2) => "e",
        (TermKind::StarC, 0) => "ebar",
        (TermKind::StarC, _) => "e*ebar",
        (TermKind::StarD, 0) => "m",
        (TermKind::StarD, 2) => "mbar",
        (TermKind::StarD, _) => "m*mbar",
        _ => return Err(Error::Unlabeled(format!("term {t} is not a stabilizer"))),
    };
    AnyonLabel::named(f, name)
}

pub fn label_of_syndrome(model: &SpinModel, terms: &[usize]) -> Result<AnyonLabel> {
    terms.iter().try_fold(AnyonLabel::vacuum(model.family), |acc, &t| Ok(acc.fuse(stabilizer_label(model, t)?)))
}

fn cluster_radius(family: Family) -> f64 {
    match family {
        Family::Toric => 0.75,
        Family::XzStar => 1.0,
    }
}

/// Groups syndrome terms into endpoint clusters by single linkage.
pub fn endpoint_clusters(model: &SpinModel, terms: &[usize]) -> Vec<Vec<usize>> {
    let r = cluster_radius(model.family) + 1e-9;
    let mut parent: Vec<usize> = (0..terms.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..terms.len() {
        for j in 0..i {
            if model.lattice.distance(model.terms[terms[i]].center, model.terms[terms[j]].center) <= r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..terms.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(terms[i]);
    }
    groups.into_values().collect()
}

/// Endpoint sectors of an open string. A string with no syndrome gives (1, 1).
pub fn anyon_label_of_string(model: &SpinModel, open_string: &PauliOperator) -> Result<(AnyonLabel, AnyonLabel)> {
    let syn = syndrome(model, open_string);
    let mut labelled = Vec::new();
    for c in endpoint_clusters(model, &syn) {
        let l = label_of_syndrome(model, &c)?;
        if !l.is_vacuum() {
            let x = c.iter().map(|&t| model.terms[t].center.x2).min().unwrap_or(0);
            let y = c.iter().map(|&t| model.terms[t].center.y2).min().unwrap_or(0);
            labelled.push(((x, y), l));
        }
    }
    labelled.sort();
    match labelled.as_slice() {
        [] => Ok((AnyonLabel::vacuum(model.family), AnyonLabel::vacuum(model.family))),
        [(_, a), (_, b)] => Ok((*a, *b)),
        _ => Err(Error::Unlabeled(format!("syndrome splits into {} charged clusters", labelled.len()))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiCheck {
    pub rect: Rect,
    pub left: AnyonLabel,
    pub right: AnyonLabel,
    pub cut: Vec<String>,
}

fn period(family: Family) -> i32 {
    match family {
        Family::Toric => 1,
        Family::XzStar => 3,
    }
}

/// φ for one rectangle: truncate, remove a segment of the top edge, label the two ends.
pub fn phi_single(model: &SpinModel, cat: &SymmetryCatalog, rel: &GlobalRelation, rect: Rect) -> Result<PhiCheck> {
    let vac = AnyonLabel::vacuum(model.family);
    let loop_op = truncate_relation(model, cat, rel, rect)?;
    if loop_op.is_identity_pattern() {
        return Ok(PhiCheck { rect, left: vac, right: vac, cut: vec![] });
    }
    let sites = model.lattice.sites();
    let support = loop_op.support();
    let top = support.iter().map(|&q| sites[q].y2).max().expect("nonempty");
    let row: Vec<usize> = support.iter().copied().filter(|&q| sites[q].y2 == top).collect();
    let lo = row.iter().map(|&q| sites[q].x2).min().expect("nonempty");
    let hi = row.iter().map(|&q| sites[q].x2).max().expect("nonempty");
    let mid = (lo + hi).div_euclid(2);
    let p = period(model.family);
    let cut: Vec<usize> = row.iter().copied().filter(|&q| (sites[q].x2 - mid).abs() <= p).collect();
    let opened = loop_op.restrict(|q| !cut.contains(&q));
    let syn = syndrome(model, &opened);
    let (l, r): (Vec<usize>, Vec<usize>) = syn.iter().partition(|&&t| model.lattice.delta(Coord::new(mid, top), model.terms[t].center).0 < 0);
    let left = label_of_syndrome(model, &l)?;
    let right = label_of_syndrome(model, &r)?;
    if left != right {
        return Err(Error::Invariance(format!("relation {}: ends carry {left} and {right}", rel.id)));
    }
    Ok(PhiCheck { rect, left, right, cut: cut.iter().map(|&q| sites[q].to_string()).collect() })
}

/// φ(rel), required to agree on every rectangle in `rects`.
pub fn phi(model: &SpinModel, cat: &SymmetryCatalog, rel: &GlobalRelation, rects: &[Rect]) -> Result<(AnyonLabel, Vec<PhiCheck>)> {
    if rel.factors.is_empty() {
        return Ok((AnyonLabel::vacuum(model.family), vec![]));
    }
    let checks: Vec<PhiCheck> = rects.iter().map(|&r| phi_single(model, cat, rel, r)).collect::<Result<_>>()?;
    let first = checks.first().map(|c| c.left).ok_or_else(|| Error::Domain("phi needs at least one rectangle".into()))?;
    if let Some(bad) = checks.iter().find(|c| c.left != first) {
        return Err(Error::Invariance(format!("relation {}: {} on {:?} but {} on {:?}", rel.id, first, rects[0], bad.left, bad.rect)));
    }
    Ok((first, checks))
}

/// Nested bulk rectangles suited to the lattice: three for each stabilizer row parity.
pub fn nested_rects(model: &SpinModel, rel: &GlobalRelation, cat: &SymmetryCatalog) -> Result<Vec<Rect>> {
    let first = cat.entry(rel.factors.first().ok_or_else(|| Error::Domain("empty relation".into()))?)?;
    let kind = model.terms[*first.factors.first().ok_or_else(|| Error::MalformedCatalog("symmetry without factors".into()))?].kind;
    let spec = model.spec();
    let (w, h) = (2 * spec.lx as i32, 2 * spec.ly as i32);
    let out = match model.family {
        Family::Toric => {
            let cx = w / 2 - (w / 2) % 2 + i32::from(kind == TermKind::Plaquette);
            let cy = h / 2 - (h / 2) % 2 + i32::from(kind == TermKind::Plaquette);
            (0..3).map(|k| Rect::new(cx - 2 * k, cx + 2 * k, cy - 2 * k, cy + 2 * k)).collect()
        }
        Family::XzStar => {
            let a = spec.lx as i32 / 4;
            let odd = first.row / 2 % 2 != 0;
            let b = spec.ly as i32 / 2;
            let b = if (b % 2 == 1) == odd { b } else { b - 1 };
            let rows = if odd { [(b, b), (b, b + 2), (b - 2, b + 2)] } else { [(b, b), (b - 2, b), (b - 2, b + 2)] };
            let xs = [(a, a + 2), (a, a + 5), (a - 2, a + 6)];
            xs.iter().zip(rows).map(|(&(x0, x1), (y0, y1))| Rect::new(2 * x0, 2 * x1, 2 * y0, 2 * y1)).collect()
        }
    };
    Ok(out)
}

/// A Pauli in the sites satisfying `allowed` whose syndrome is exactly `target`.
pub fn solve_string(model: &SpinModel, target: &[usize], allowed: impl Fn(Coord) -> bool) -> Result<PauliOperator> {
    let n = model.n_qubits();
    let stabs: Vec<usize> = (0..model.terms.len()).filter(|&t| is_stabilizer_kind(model.terms[t].kind)).collect();
    let pos: BTreeMap<usize, usize> = stabs.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let words = f2::words(stabs.len());
    let mut rows = Vec::new();
    let mut gens = Vec::new();
    for (q, &c) in model.lattice.sites().iter().enumerate() {
        if !allowed(c) {
            continue;
        }
        for l in [Letter::X, Letter::Z] {
            let p = PauliOperator::single(n, q, l);
            let mut row = vec![0u64; words];
            for (i, &t) in stabs.iter().enumerate() {
                if model.terms[t].op.anticommutes_with(&p) {
                    f2::set(&mut row, i, true);
                }
            }
            rows.push(row);
            gens.push(p);
        }
    }
    let mut want = vec![0u64; words];
    for t in target {
        let i = pos.get(t).ok_or_else(|| Error::Domain(format!("term {t} is not a stabilizer")))?;
        f2::set(&mut want, *i, true);
    }
    let combo = f2::solve(&rows, &want).ok_or_else(|| Error::Unlabeled("no string with the requested endpoints".into()))?;
    Ok(pauli::product(n, combo.iter().map(|&i| &gens[i])).normalized())
}

/// A stabilizer carrying exactly the basis anyon `a`, as (kind, residue).
fn template(a: AnyonLabel) -> Result<(TermKind, i32)> {
    let name = a.to_string();
    Ok(match (a.family, name.as_str()) {
        (Family::Toric, "e") => (TermKind::Vertex, 0),
        (Family::Toric, "m") => (TermKind::Plaquette, 0),
        (Family::XzStar, "e") => (TermKind::StarC, 2),
        (Family::XzStar, "ebar") => (TermKind::StarC, 0),
        (Family::XzStar, "m") => (TermKind::StarD, 0),
        (Family::XzStar, "mbar") => (TermKind::StarD, 2),
        _ => return Err(Error::Unlabeled(format!("no single-stabilizer representative for {name}"))),
    })
}

fn centres(model: &SpinModel, kind: TermKind, res: i32) -> Vec<(usize, Coord)> {
    model
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == kind && (model.family == Family::Toric || residue(model, t.center) == res))
        .map(|(i, t)| (i, t.center))
        .collect()
}

/// Horizontal (or vertical) string carrying `a`, with endpoints spread across the middle of the lattice.
pub fn straight_string(model: &SpinModel, a: AnyonLabel, horizontal: bool) -> Result<PauliOperator> {
    let spec = model.spec();
    if !spec.is_periodic() {
        return Err(Error::Unsupported("string representatives are built on periodic lattices".into()));
    }
    let (w, h) = (2 * spec.lx as i32, 2 * spec.ly as i32);
    let mut op = PauliOperator::identity(model.n_qubits());
    for b in AnyonLabel::basis(model.family) {
        if a.bits & b.bits == 0 {
            continue;
        }
        let (kind, res) = template(b)?;
        let cs = centres(model, kind, res);
        fn cx(c: Coord) -> i32 {
            c.x2
        }
        fn cy(c: Coord) -> i32 {
            c.y2
        }
        let (main, cross, span_main, span_cross): (fn(Coord) -> i32, fn(Coord) -> i32, i32, i32) = if horizontal { (cx, cy, w, h) } else { (cy, cx, h, w) };
        let line = cs.iter().map(|(_, c)| cross(*c)).min_by_key(|v| (v - span_cross / 2).abs()).ok_or_else(|| Error::Unlabeled("no stabilizer of that kind".into()))?;
        let on_line: Vec<&(usize, Coord)> = cs.iter().filter(|(_, c)| cross(*c) == line && main(*c) >= span_main / 6 && main(*c) <= span_main * 5 / 6).collect();
        let start = on_line.iter().min_by_key(|(_, c)| main(*c)).ok_or_else(|| Error::Unlabeled("lattice too small".into()))?;
        let end = on_line.iter().max_by_key(|(_, c)| main(*c)).expect("nonempty");
        let (m0, m1) = (main(start.1), main(end.1));
        let allowed = |c: Coord| (cross(c) - line).abs() <= 2 && main(c) >= m0 - 2 && main(c) <= m1 + 2;
        let s = solve_string(model, &[start.0, end.0], allowed)?;
        op = &op * &s;
    }
    Ok(op.normalized())
}

/// Braiding sign from a horizontal string of `a` crossing a vertical string of `b` once.
pub fn mutual_statistics(model: &SpinModel, a: AnyonLabel, b: AnyonLabel) -> Result<i8> {
    let s = straight_string(model, a, true)?;
    let t = straight_string(model, b, false)?;
    Ok(if s.anticommutes_with(&t) { -1 } else { 1 })
}

pub fn statistics_table(model: &SpinModel) -> Result<Vec<(AnyonLabel, AnyonLabel, i8)>> {
    let basis = AnyonLabel::basis(model.family);
    let mut out = Vec::new();
    for &a in &basis {
        for &b in &basis {
            out.push((a, b, mutual_statistics(model, a, b)?));
        }
    }
    Ok(out)
}

/// Relabeling of the XZ-star basis onto (e1, m1, e2, m2) of two toric codes, if one reproduces the table.
pub fn two_toric_relabeling(table: &[(AnyonLabel, AnyonLabel, i8)]) -> Option<[usize; 4]> {
    let target = |i: usize, j: usize| -> i8 {
        // basis order (e1, m1, e2, m2): e_k and m_k braid with -1
        if i / 2 == j / 2 && i != j {
            -1
        } else {
            1
        }
    };
    let sign = |i: usize, j: usize| table.iter().find(|(a, b, _)| a.bits == 1 << i && b.bits == 1 << j).map(|x| x.2);
    let mut perm = [0, 1, 2, 3];
    loop {
        if (0..4).all(|i| (0..4).all(|j| sign(i, j) == Some(target(perm[i], perm[j])))) {
            return Some(perm);
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct MobilityCheck {
    pub endpoint: String,
    pub horizontal_moves: usize,
    pub vertical_moves: usize,
    pub candidates: usize,
}

/// Symmetric single-site Paulis near an e endpoint that move it by one vertex and create nothing else.
pub fn restricted_mobility(model: &SpinModel, cat: &SymmetryCatalog) -> Result<MobilityCheck> {
    if model.family != Family::Toric {
        return Err(Error::Unsupported("mobility check is defined for the toric model".into()));
    }
    let flips = |op: &PauliOperator| syndrome(model, op);
    let e = AnyonLabel::named(model.family, "e")?;
    let string = straight_string(model, e, true)?;
    let base = flips(&string);
    let syn = syndrome(model, &string);
    let end = *syn.iter().min_by_key(|&&t| model.terms[t].center.x2).ok_or_else(|| Error::Unlabeled("string has no endpoint".into()))?;
    let v = model.terms[end].center;
    let (mut horiz, mut vert, mut cand) = (0, 0, 0);
    for (q, &c) in model.lattice.sites().iter().enumerate() {
        if model.lattice.distance(c, v) > 1.5 {
            continue;
        }
        for l in [Letter::X, Letter::Y, Letter::Z] {
            cand += 1;
            let p = PauliOperator::single(model.n_qubits(), q, l);
            if cat.entries.iter().any(|e| e.u.anticommutes_with(&p)) {
                continue;
            }
            let moved = &string * &p;
            let now = flips(&moved);
            let gone: Vec<usize> = base.iter().copied().filter(|t| !now.contains(t)).collect();
            let new: Vec<usize> = now.iter().copied().filter(|t| !base.contains(t)).collect();
            if gone != [end] || new.len() != 1 || model.terms[new[0]].kind != TermKind::Vertex {
                continue;
            }
            let (dx, dy) = model.lattice.delta(v, model.terms[new[0]].center);
            if dy == 0 && dx.abs() == 2 {
                horiz += 1;
            } else if dx == 0 && dy.abs() == 2 {
                vert += 1;
            }
        }
    }
    Ok(MobilityCheck { endpoint: v.to_string(), horizontal_moves: horiz, vertical_moves: vert, candidates: cand })
}

/// Left-end sectors of the prose string patterns (ZZI… on C rows, XXI… on D rows) by start residue.
pub fn derived_dictionary(model: &SpinModel) -> Result<BTreeMap<String, String>> {
    if model.family != Family::XzStar || !model.spec().is_periodic() {
        return Err(Error::Unsupported("dictionary derivation needs a periodic XZ-star lattice".into()));
    }
    let n = model.n_qubits();
    let lx = model.spec().lx as i32;
    let mut out = BTreeMap::new();
    for (letter, y) in [(Letter::Z, 0), (Letter::X, 1)] {
        for s in 0..3 {
            let len = lx / 2;
            let letters: Vec<(Coord, Letter)> = (0..len).filter(|j| j % 3 != 2).map(|j| (Coord::new(2 * (s + 3 + j), 2 * y), letter)).collect();
            let op = model.lattice.pauli(&letters)?;
            let syn = syndrome(model, &op);
            let left: Vec<usize> = syn.iter().copied().filter(|&t| model.terms[t].center.x2 < 2 * (s + 3) + 1).collect();
            let res: Vec<String> = left.iter().map(|&t| residue(model, model.terms[t].center).to_string()).collect();
            let kind = if letter == Letter::Z { "C" } else { "D" };
            out.insert(format!("{kind} string from x={s} mod 3"), format!("residues {}", res.join(",")));
            let lab = label_of_syndrome(model, &left)?;
            out.insert(format!("{kind} string from x={s} mod 3 label"), lab.to_string());
        }
    }
    let _ = n;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub family: Family,
    pub relations: Vec<(String, AnyonLabel, Vec<PhiCheck>)>,
    pub statistics: Vec<(AnyonLabel, AnyonLabel, i8)>,
    pub two_toric_relabeling: Option<Vec<String>>,
    pub mobility: Option<MobilityCheck>,
}

pub fn invariant_report(model: &SpinModel, cat: &SymmetryCatalog) -> Result<InvariantReport> {
    let mut relations = Vec::new();
    for rel in global_relations(cat)? {
        let rects = nested_rects(model, &rel, cat)?;
        let (label, checks) = phi(model, cat, &rel, &rects)?;
        relations.push((rel.id.clone(), label, checks));
    }
    let statistics = statistics_table(model)?;
    let relabel = if model.family == Family::XzStar {
        let names = ["e1", "m1", "e2", "m2"];
        two_toric_relabeling(&statistics).map(|p| {
            AnyonLabel::basis(model.family).iter().zip(p).map(|(a, i)| format!("{a}->{}", names[i])).collect()
        })
    } else {
        None
    };
    let mobility = if model.family == Family::Toric { Some(restricted_mobility(model, cat)?) } else { None };
    Ok(InvariantReport { family: model.family, relations, statistics, two_toric_relabeling: relabel, mobility })
}

pub fn report_json(r: &InvariantReport) -> serde_json::Value {
    json!({
        "family": r.family,
        "phi": r.relations.iter().map(|(id, l, checks)| (id.clone(), json!({
            "label": l.to_string(),
            "rectangles": checks.iter().map(|c| json!([c.rect.x0, c.rect.x1, c.rect.y0, c.rect.y1])).collect::<Vec<_>>(),
        }))).collect::<serde_json::Map<_, _>>(),
        "statistics": r.statistics.iter().map(|(a, b, s)| json!([a.to_string(), b.to_string(), s])).collect::<Vec<_>>(),
        "two_toric_relabeling": r.two_toric_relabeling,
        "mobility": r.mobility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::models::{build_toric, build_xz_star, symmetry_catalog};

    fn toric(l: usize) -> (SpinModel, SymmetryCatalog) {
        let m = build_toric(LatticeSpec::toric_periodic(l, l), 0.3, 0.3, 0.0).unwrap();
        let c = symmetry_catalog(&m).unwrap();
        (m, c)
    }

    fn xz(lx: usize, ly: usize) -> (SpinModel, SymmetryCatalog) {
        let m = build_xz_star(LatticeSpec::star_periodic(lx, ly)).unwrap();
        let c = symmetry_catalog(&m).unwrap();
        (m, c)
    }

    fn lab(f: Family, s: &str) -> AnyonLabel {
        AnyonLabel::named(f, s).unwrap()
    }

    #[test]
    fn relations_hold() {
        let (_, c) = toric(4);
        assert_eq!(global_relations(&c).unwrap().len(), 2);
        let (_, c) = xz(12, 8);
        let rels = global_relations(&c).unwrap();
        assert_eq!(rels.len(), 4);
        assert!(rels.iter().all(|r| r.factors.len() == 4));
        let (_, c) = toric(4);
        assert!(check_relation(&c, "row", &["e_1".to_string()]).is_err());
    }

    #[test]
    fn truncation_is_a_boundary_loop() {
        let (m, c) = toric(6);
        let rels = global_relations(&c).unwrap();
        let rect = Rect::new(4, 8, 4, 8);
        let lp = truncate_relation(&m, &c, &rels[0], rect).unwrap();
        assert!(lp.is_x_type() && lp.weight() == 12);
        assert!(lp.support().iter().all(|&q| rect.in_ribbon(m.lattice.site(q))));
        assert!(syndrome(&m, &lp).is_empty());
        let single = truncate_relation(&m, &c, &rels[0], Rect::new(4, 4, 4, 4)).unwrap();
        let v = m.term_at(TermKind::Vertex, Coord::new(4, 4)).unwrap();
        assert_eq!(single, m.terms[v].op);
        let zl = truncate_relation(&m, &c, &rels[1], Rect::new(5, 9, 5, 9)).unwrap();
        assert!(zl.is_z_type() && syndrome(&m, &zl).is_empty());
        let (m, c) = xz(12, 8);
        for rel in global_relations(&c).unwrap() {
            for rect in nested_rects(&m, &rel, &c).unwrap() {
                let lp = truncate_relation(&m, &c, &rel, rect).unwrap();
                assert!(!lp.is_identity_pattern());
                assert!(syndrome(&m, &lp).is_empty(), "{}", rel.id);
                assert!(lp.support().iter().all(|&q| rect.in_ribbon(m.lattice.site(q))), "{} {rect:?}", rel.id);
            }
        }
    }

    #[test]
    fn toric_phi() {
        let (m, c) = toric(8);
        let rels = global_relations(&c).unwrap();
        let f = Family::Toric;
        for (rel, want) in rels.iter().zip(["m", "e"]) {
            let rects = nested_rects(&m, rel, &c).unwrap();
            assert!(rects[2].contains_rect(&rects[1]) && rects[1].contains_rect(&rects[0]));
            let (l, checks) = phi(&m, &c, rel, &rects).unwrap();
            assert_eq!(l, lab(f, want));
            assert_eq!(checks.len(), 3);
        }
        let empty = GlobalRelation { id: "trivial".into(), factors: vec![], product: PauliOperator::identity(m.n_qubits()) };
        assert!(phi(&m, &c, &empty, &[]).unwrap().0.is_vacuum());
    }

    #[test]
    fn toric_strings() {
        let (m, _) = toric(6);
        let f = Family::Toric;
        let zs = m.lattice.pauli(&[(Coord::new(3, 4), Letter::Z), (Coord::new(5, 4), Letter::Z), (Coord::new(7, 4), Letter::Z)]).unwrap();
        assert_eq!(anyon_label_of_string(&m, &zs).unwrap(), (lab(f, "e"), lab(f, "e")));
        let v = m.term_at(TermKind::Vertex, Coord::new(4, 4)).unwrap();
        assert_eq!(anyon_label_of_string(&m, &m.terms[v].op).unwrap(), (lab(f, "1"), lab(f, "1")));
        let xs = m.lattice.pauli(&[(Coord::new(3, 4), Letter::X), (Coord::new(3, 6), Letter::X), (Coord::new(3, 8), Letter::X)]).unwrap();
        let ys = &zs * &xs;
        assert_eq!(anyon_label_of_string(&m, &xs).unwrap().0, lab(f, "m"));
        // the shared edge fuses e and m at one end, leaving three charged ends
        assert!(matches!(anyon_label_of_string(&m, &ys), Err(Error::Unlabeled(_))));
        let ends = endpoint_clusters(&m, &syndrome(&m, &ys));
        let labels: Vec<String> = ends.iter().map(|c| label_of_syndrome(&m, c).unwrap().to_string()).collect();
        assert_eq!(labels.iter().filter(|l| *l == "em").count(), 1);
        assert!(label_of_syndrome(&m, &syndrome(&m, &ys)).unwrap().is_vacuum());
        assert_eq!(mutual_statistics(&m, lab(f, "e"), lab(f, "m")).unwrap(), -1);
        assert_eq!(mutual_statistics(&m, lab(f, "e"), lab(f, "e")).unwrap(), 1);
        assert_eq!(mutual_statistics(&m, lab(f, "m"), lab(f, "m")).unwrap(), 1);
    }

    #[test]
    fn fusion_of_concatenated_strings() {
        let (m, _) = xz(12, 8);
        let f = Family::XzStar;
        let a = straight_string(&m, lab(f, "e"), true).unwrap();
        let b = straight_string(&m, lab(f, "m"), true).unwrap();
        let (la, _) = anyon_label_of_string(&m, &a).unwrap();
        let (lb, _) = anyon_label_of_string(&m, &b).unwrap();
        assert_eq!((la, lb), (lab(f, "e"), lab(f, "m")));
        let both = label_of_syndrome(&m, &syndrome(&m, &(&a * &b))).unwrap();
        assert!(both.is_vacuum());
        let ends = endpoint_clusters(&m, &syndrome(&m, &(&a * &b)));
        let left: Vec<usize> = ends.iter().filter(|c| m.terms[c[0]].center.x2 < 12).flatten().copied().collect();
        assert_eq!(label_of_syndrome(&m, &left).unwrap(), la.fuse(lb));
    }

    #[test]
    fn xz_dictionary_matches_fixture() {
        let (m, _) = xz(12, 8);
        let d = derived_dictionary(&m).unwrap();
        let fixture: BTreeMap<String, String> = serde_json::from_str(include_str!("../tests/fixtures/xz_dictionary.json")).unwrap();
        assert_eq!(d, fixture);
        // every single-site Pauli is neutral
        for q in [0, 13, 50] {
            for l in [Letter::X, Letter::Y, Letter::Z] {
                let p = PauliOperator::single(m.n_qubits(), q, l);
                assert!(label_of_syndrome(&m, &syndrome(&m, &p)).unwrap().is_vacuum());
            }
        }
    }

    #[test]
    fn xz_statistics_two_toric_codes() {
        let (m, _) = xz(18, 12);
        let t = statistics_table(&m).unwrap();
        assert_eq!(t.len(), 16);
        assert!(two_toric_relabeling(&t).is_some(), "{t:?}");
    }

    #[test]
    fn toric_mobility_restricted() {
        let (m, c) = toric(6);
        let r = restricted_mobility(&m, &c).unwrap();
        assert_eq!(r.vertical_moves, 0);
        assert!(r.horizontal_moves > 0);
    }
}
