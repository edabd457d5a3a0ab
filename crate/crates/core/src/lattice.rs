//! Lattice geometry in doubled integer coordinates.
//!
//! Vertices sit at (even, even), edge midpoints at (odd, even) or (even, odd)
//! and plaquette centres at (odd, odd). Star lattices put qubits on vertices.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{GeneratingSet, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    ToricEdgeQubits,
    StarVertexQubits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    OpenSmooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub lx: usize,
    pub ly: usize,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn toric_open(lx: usize, ly: usize) -> Self {
        LatticeSpec { kind: LatticeKind::ToricEdgeQubits, lx, ly, boundary: Boundary::OpenSmooth }
    }

    pub fn toric_periodic(lx: usize, ly: usize) -> Self {
        LatticeSpec { kind: LatticeKind::ToricEdgeQubits, lx, ly, boundary: Boundary::Periodic }
    }

    pub fn star_open(lx: usize, ly: usize) -> Self {
        LatticeSpec { kind: LatticeKind::StarVertexQubits, lx, ly, boundary: Boundary::OpenSmooth }
    }

    pub fn star_periodic(lx: usize, ly: usize) -> Self {
        LatticeSpec { kind: LatticeKind::StarVertexQubits, lx, ly, boundary: Boundary::Periodic }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lx < 2 || self.ly < 2 {
            return Err(Error::InvalidLattice(format!("L_x, L_y must be at least 2, got {}x{}", self.lx, self.ly)));
        }
        if self.kind == LatticeKind::StarVertexQubits && self.lx % 3 != 0 {
            return Err(Error::InvalidLattice(format!("star lattice needs L_x divisible by 3, got {}", self.lx)));
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x2: i32,
    pub y2: i32,
}

impl Coord {
    pub const fn new(x2: i32, y2: i32) -> Self {
        Coord { x2, y2 }
    }

    /// From lattice units; `x`, `y` must be multiples of 1/2.
    pub fn at(x: f64, y: f64) -> Self {
        Coord { x2: (2.0 * x).round() as i32, y2: (2.0 * y).round() as i32 }
    }

    pub fn is_vertex(&self) -> bool {
        self.x2 % 2 == 0 && self.y2 % 2 == 0
    }

    pub fn is_horizontal_edge(&self) -> bool {
        self.x2.rem_euclid(2) == 1 && self.y2.rem_euclid(2) == 0
    }

    pub fn is_vertical_edge(&self) -> bool {
        self.x2.rem_euclid(2) == 0 && self.y2.rem_euclid(2) == 1
    }

    pub fn x(&self) -> f64 {
        self.x2 as f64 / 2.0
    }

    pub fn y(&self) -> f64 {
        self.y2 as f64 / 2.0
    }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x(), self.y())
    }
}

/// An enumerated lattice: qubit sites sorted by (x2, y2).
#[derive(Clone, Debug)]
pub struct Lattice {
    pub spec: LatticeSpec,
    sites: Vec<Coord>,
    index: HashMap<Coord, usize>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let (lx, ly) = (spec.lx as i32, spec.ly as i32);
        let mut sites = Vec::new();
        match (spec.kind, spec.boundary) {
            (LatticeKind::ToricEdgeQubits, Boundary::OpenSmooth) => {
                for y in 1..=ly {
                    for x in 1..lx {
                        sites.push(Coord::new(2 * x + 1, 2 * y));
                    }
                }
                for y in 1..ly {
                    for x in 1..=lx {
                        sites.push(Coord::new(2 * x, 2 * y + 1));
                    }
                }
            }
            (LatticeKind::ToricEdgeQubits, Boundary::Periodic) => {
                for y in 0..ly {
                    for x in 0..lx {
                        sites.push(Coord::new(2 * x + 1, 2 * y));
                        sites.push(Coord::new(2 * x, 2 * y + 1));
                    }
                }
            }
            (LatticeKind::StarVertexQubits, Boundary::OpenSmooth) => {
                for y in 1..=ly {
                    for x in 0..=lx {
                        sites.push(Coord::new(2 * x, 2 * y));
                    }
                }
            }
            (LatticeKind::StarVertexQubits, Boundary::Periodic) => {
                for y in 0..ly {
                    for x in 0..lx {
                        sites.push(Coord::new(2 * x, 2 * y));
                    }
                }
            }
        }
        sites.sort();
        let index = sites.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Ok(Lattice { spec, sites, index })
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Coord] {
        &self.sites
    }

    pub fn site(&self, q: usize) -> Coord {
        self.sites[q]
    }

    /// Wraps periodic coordinates into the fundamental domain.
    pub fn wrap(&self, c: Coord) -> Coord {
        if self.spec.is_periodic() {
            let (w, h) = (2 * self.spec.lx as i32, 2 * self.spec.ly as i32);
            Coord::new(c.x2.rem_euclid(w), c.y2.rem_euclid(h))
        } else {
            c
        }
    }

    pub fn qubit(&self, c: Coord) -> Option<usize> {
        self.index.get(&self.wrap(c)).copied()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.qubit(c).is_some()
    }

    /// Minimum x2 and maximum x2 over qubit sites.
    pub fn x2_range(&self) -> (i32, i32) {
        let lo = self.sites.iter().map(|c| c.x2).min().unwrap_or(0);
        let hi = self.sites.iter().map(|c| c.x2).max().unwrap_or(0);
        (lo, hi)
    }

    /// Displacement in doubled units, using the minimum image on periodic lattices.
    pub fn delta(&self, a: Coord, b: Coord) -> (i32, i32) {
        let (mut dx, mut dy) = (b.x2 - a.x2, b.y2 - a.y2);
        if self.spec.is_periodic() {
            let (w, h) = (2 * self.spec.lx as i32, 2 * self.spec.ly as i32);
            dx = dx.rem_euclid(w);
            if dx > w / 2 {
                dx -= w;
            }
            dy = dy.rem_euclid(h);
            if dy > h / 2 {
                dy -= h;
            }
        }
        (dx, dy)
    }

    /// Euclidean distance in lattice units.
    pub fn distance(&self, a: Coord, b: Coord) -> f64 {
        let (dx, dy) = self.delta(a, b);
        ((dx * dx + dy * dy) as f64).sqrt() / 2.0
    }

    /// Builds a Pauli operator from site letters.
    pub fn pauli(&self, letters: &[(Coord, crate::pauli::Letter)]) -> Result<PauliOperator> {
        let mut v = Vec::with_capacity(letters.len());
        for &(c, l) in letters {
            let q = self.qubit(c).ok_or_else(|| Error::Domain(format!("site {c} not on lattice")))?;
            v.push((q, l));
        }
        Ok(PauliOperator::from_letters(self.n_qubits(), &v))
    }

    /// Letters at the sites that exist; sites off the lattice are dropped (boundary cut).
    pub fn pauli_cut(&self, letters: &[(Coord, crate::pauli::Letter)]) -> PauliOperator {
        let mut seen = BTreeSet::new();
        let mut v = Vec::new();
        for &(c, l) in letters {
            if let Some(q) = self.qubit(c) {
                if seen.insert(q) {
                    v.push((q, l));
                }
            }
        }
        PauliOperator::from_letters(self.n_qubits(), &v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryStyle {
    Smooth,
    Rough,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub sites: BTreeSet<Coord>,
    pub boundary_style: Option<BoundaryStyle>,
    /// Sites on the bounding lines of a rectangle; empty for generic regions.
    #[serde(default)]
    pub perimeter: BTreeSet<Coord>,
}

impl Region {
    pub fn from_sites<I: IntoIterator<Item = Coord>>(sites: I) -> Self {
        Region { sites: sites.into_iter().collect(), boundary_style: None, perimeter: BTreeSet::new() }
    }

    pub fn empty() -> Self {
        Self::from_sites([])
    }

    pub fn support_of(lattice: &Lattice, p: &PauliOperator) -> Self {
        Self::from_sites(p.support().into_iter().map(|q| lattice.site(q)))
    }

    /// Qubit sites in the closed plane rectangle [x0, x1] x [y0, y1] (doubled units).
    /// Even corners give a smooth boundary, odd corners a rough one.
    pub fn rectangle(lattice: &Lattice, x0: i32, x1: i32, y0: i32, y1: i32) -> Self {
        let parity = [x0, x1, y0, y1].map(|v| v.rem_euclid(2));
        let style = if parity.iter().all(|&p| p == 0) {
            BoundaryStyle::Smooth
        } else if parity.iter().all(|&p| p == 1) {
            BoundaryStyle::Rough
        } else {
            BoundaryStyle::Mixed
        };
        let mut sites = BTreeSet::new();
        let mut perimeter = BTreeSet::new();
        for &c in lattice.sites() {
            if c.x2 >= x0 && c.x2 <= x1 && c.y2 >= y0 && c.y2 <= y1 {
                sites.insert(c);
                if c.x2 == x0 || c.x2 == x1 || c.y2 == y0 || c.y2 == y1 {
                    perimeter.insert(c);
                }
            }
        }
        Region { sites, boundary_style: Some(style), perimeter }
    }

    pub fn contains(&self, c: &Coord) -> bool {
        self.sites.contains(c)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn x2_span(&self) -> Option<(i32, i32)> {
        let lo = self.sites.iter().map(|c| c.x2).min()?;
        let hi = self.sites.iter().map(|c| c.x2).max()?;
        Some((lo, hi))
    }
}

/// All qubit sites within Euclidean distance `k` (lattice units) of the region.
pub fn neighborhood(lattice: &Lattice, region: &Region, k: f64) -> Region {
    let k4 = 4.0 * k * k + 1e-9;
    let mut out: BTreeSet<Coord> = region.sites.clone();
    for &c in lattice.sites() {
        if out.contains(&c) {
            continue;
        }
        let near = region.sites.iter().any(|r| {
            let (dx, dy) = lattice.delta(*r, c);
            ((dx * dx + dy * dy) as f64) <= k4
        });
        if near {
            out.insert(c);
        }
    }
    Region { sites: out, boundary_style: None, perimeter: BTreeSet::new() }
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub inside: GeneratingSet,
    pub outside: GeneratingSet,
    pub crossing: GeneratingSet,
    pub inside_idx: Vec<usize>,
    pub outside_idx: Vec<usize>,
    pub crossing_idx: Vec<usize>,
}

/// Classifies generators as inside (support within the region), outside (no
/// support on the region's interior) or crossing.
pub fn partition_stabilizers(lattice: &Lattice, stabs: &GeneratingSet, region: &Region) -> Partition {
    let mut idx = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in stabs.elements.iter().enumerate() {
        let supp: Vec<Coord> = s.support().into_iter().map(|q| lattice.site(q)).collect();
        if supp.iter().all(|c| region.contains(c)) {
            idx.0.push(i);
        } else if supp.iter().all(|c| !region.contains(c) || region.perimeter.contains(c)) {
            idx.1.push(i);
        } else {
            idx.2.push(i);
        }
    }
    let pick = |v: &[usize]| GeneratingSet {
        n_qubits: stabs.n_qubits,
        elements: v.iter().map(|&i| stabs.elements[i].clone()).collect(),
    };
    Partition {
        inside: pick(&idx.0),
        outside: pick(&idx.1),
        crossing: pick(&idx.2),
        inside_idx: idx.0,
        outside_idx: idx.1,
        crossing_idx: idx.2,
    }
}

/// Required separation in unit cells between regions of the given styles.
pub fn min_separation(a: BoundaryStyle, b: BoundaryStyle, delta: f64) -> Result<f64> {
    use BoundaryStyle::*;
    match (a, b) {
        (Smooth, Smooth) | (Rough, Rough) => Ok(2.0 * delta + 1.0),
        (Smooth, Rough) | (Rough, Smooth) => Ok(2.0 * delta + 1.5),
        _ => Err(Error::Domain("separation is defined for smooth and rough styles only".into())),
    }
}

/// Horizontal gap in unit cells between the x-extents of two regions.
pub fn horizontal_separation(a: &Region, b: &Region) -> Option<f64> {
    let (a0, a1) = a.x2_span()?;
    let (b0, b1) = b.x2_span()?;
    let gap = if a1 < b0 {
        b0 - a1
    } else if b1 < a0 {
        a0 - b1
    } else {
        0
    };
    Some(gap as f64 / 2.0)
}

fn crossing_violations(lattice: &Lattice, stabs: &GeneratingSet, np: &Region, nq: &Region) -> Vec<usize> {
    let part = partition_stabilizers(lattice, stabs, np);
    part.crossing_idx
        .into_iter()
        .filter(|&i| stabs.elements[i].support().iter().any(|&q| nq.contains(&lattice.site(q))))
        .collect()
}

/// True iff no crossing generator of N_Δ(supp P) touches N_Δ(supp Q), for the
/// generating set exactly as provided.
pub fn decorrelation_hypothesis(
    lattice: &Lattice,
    stabs: &GeneratingSet,
    p: &PauliOperator,
    q: &PauliOperator,
    delta: f64,
) -> bool {
    let np = neighborhood(lattice, &Region::support_of(lattice, p), delta);
    let nq = neighborhood(lattice, &Region::support_of(lattice, q), delta);
    if np.is_empty() || nq.is_empty() {
        return true;
    }
    crossing_violations(lattice, stabs, &np, &nq).is_empty()
}

/// Like [`decorrelation_hypothesis`], but lets each offending crossing generator be
/// replaced by its product with one overlapping generator when that removes the
/// violation. The replacement keeps the generated group unchanged.
pub fn decorrelation_hypothesis_recombined(
    lattice: &Lattice,
    stabs: &GeneratingSet,
    p: &PauliOperator,
    q: &PauliOperator,
    delta: f64,
) -> bool {
    let np = neighborhood(lattice, &Region::support_of(lattice, p), delta);
    let nq = neighborhood(lattice, &Region::support_of(lattice, q), delta);
    if np.is_empty() || nq.is_empty() {
        return true;
    }
    let mut gens = stabs.clone();
    loop {
        let bad = crossing_violations(lattice, &gens, &np, &nq);
        let Some(&i) = bad.first() else { return true };
        let gi = gens.elements[i].clone();
        let mut fixed = false;
        for j in 0..gens.len() {
            if j == i {
                continue;
            }
            let gj = &gens.elements[j];
            let overlap = gi.support().iter().any(|s| gj.support().contains(s));
            if !overlap {
                continue;
            }
            let cand = &gi * gj;
            let mut trial = gens.clone();
            trial.elements[i] = cand;
            if crossing_violations(lattice, &trial, &np, &nq).len() < bad.len() {
                gens = trial;
                fixed = true;
                break;
            }
        }
        if !fixed {
            return false;
        }
    }
}
