//! n-qubit Pauli operators in the binary symplectic representation.
//!
//! An operator is stored as `i^phase · Π_q X_q^{x_q} Z_q^{z_q}`. The text form
//! writes Y letters directly, so its phase tag is the "letter phase"
//! `phase - #Y (mod 4)`, returned by [`PauliOperator::y_phase_exp`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::f2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn anticommutes(self, other: Letter) -> bool {
        self != Letter::I && other != Letter::I && self != other
    }
}

/// Phase-stripped Pauli pattern, usable as an ordered set key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = f2::words(n.max(1));
        PauliOperator { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    pub fn single(n: usize, q: usize, l: Letter) -> Self {
        Self::from_letters(n, &[(q, l)])
    }

    /// Builds `+ Π letters` (letter phase 0, so Y means the Hermitian Y).
    pub fn from_letters(n: usize, letters: &[(usize, Letter)]) -> Self {
        let mut p = Self::identity(n);
        for &(q, l) in letters {
            assert!(q < n, "qubit {q} out of range for {n} qubits");
            debug_assert_eq!(p.letter(q), Letter::I, "qubit {q} given twice");
            let (x, z) = l.bits();
            f2::set(&mut p.x, q, x);
            f2::set(&mut p.z, q, z);
        }
        p.set_letter_phase(0);
        p
    }

    pub fn from_bits(n: usize, x: Vec<u64>, z: Vec<u64>, phase: u8) -> Self {
        let w = f2::words(n.max(1));
        assert!(x.len() == w && z.len() == w, "bitmask length does not match {n} qubits");
        PauliOperator { n, x, z, phase: phase & 3 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> &[u64] {
        &self.x
    }

    pub fn z_bits(&self) -> &[u64] {
        &self.z
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn num_y(&self) -> u32 {
        self.x.iter().zip(&self.z).map(|(a, b)| (a & b).count_ones()).sum()
    }

    /// Phase tag relative to the letter product, i.e. operator = i^t · ⊗ letters.
    pub fn y_phase_exp(&self) -> u8 {
        ((self.phase as u32 + 4 - (self.num_y() % 4)) % 4) as u8
    }

    pub fn set_letter_phase(&mut self, t: u8) {
        self.phase = ((t as u32 + self.num_y()) % 4) as u8;
    }

    pub fn with_letter_phase(mut self, t: u8) -> Self {
        self.set_letter_phase(t);
        self
    }

    pub fn is_hermitian(&self) -> bool {
        self.y_phase_exp() % 2 == 0
    }

    /// Sign of a Hermitian operator relative to its letter product.
    pub fn sign(&self) -> Option<i8> {
        match self.y_phase_exp() {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Same letters with letter phase 0.
    pub fn normalized(&self) -> Self {
        self.clone().with_letter_phase(0)
    }

    pub fn neg(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) & 3;
        p
    }

    pub fn times_i(&self, k: u8) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + k) & 3;
        p
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(f2::get(&self.x, q), f2::get(&self.z, q))
    }

    pub fn is_identity_pattern(&self) -> bool {
        f2::is_zero(&self.x) && f2::is_zero(&self.z)
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity_pattern() && self.phase == 0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.letter(q) != Letter::I).collect()
    }

    pub fn weight(&self) -> usize {
        self.support().len()
    }

    pub fn pattern(&self) -> Pattern {
        Pattern { x: self.x.clone(), z: self.z.clone() }
    }

    pub fn from_pattern(n: usize, p: &Pattern) -> Self {
        Self::from_bits(n, p.x.clone(), p.z.clone(), 0).with_letter_phase(0)
    }

    /// Concatenated `x | z` row for symplectic linear algebra.
    pub fn symplectic_row(&self) -> Vec<u64> {
        let w = self.x.len();
        let mut r = vec![0u64; 2 * w];
        r[..w].copy_from_slice(&self.x);
        r[w..].copy_from_slice(&self.z);
        r
    }

    pub fn is_x_type(&self) -> bool {
        f2::is_zero(&self.z)
    }

    pub fn is_z_type(&self) -> bool {
        f2::is_zero(&self.x)
    }

    pub fn letters(&self) -> Vec<(usize, Letter)> {
        self.support().into_iter().map(|q| (q, self.letter(q))).collect()
    }

    /// Keeps the qubits where `keep` holds; the letter phase is preserved.
    pub fn restrict<F: Fn(usize) -> bool>(&self, keep: F) -> Self {
        let t = self.y_phase_exp();
        let mut p = Self::identity(self.n);
        for q in 0..self.n {
            if keep(q) {
                f2::set(&mut p.x, q, f2::get(&self.x, q));
                f2::set(&mut p.z, q, f2::get(&self.z, q));
            }
        }
        p.with_letter_phase(t)
    }

    /// Re-indexes onto `n` qubits via `map[q_old] = q_new`; letter phase is preserved.
    pub fn embed(&self, n: usize, map: &[usize]) -> Self {
        let t = self.y_phase_exp();
        let letters: Vec<_> = self.letters().into_iter().map(|(q, l)| (map[q], l)).collect();
        Self::from_letters(n, &letters).with_letter_phase(t)
    }

    pub fn try_multiply(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, got: other.n });
        }
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}
        let bc: u32 = self.z.iter().zip(&other.x).map(|(b, c)| (b & c).count_ones()).sum();
        let phase = ((self.phase as u32 + other.phase as u32 + 2 * (bc & 1)) % 4) as u8;
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        Ok(PauliOperator { n: self.n, x, z, phase })
    }

    pub fn anticommutes_with(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "dimension mismatch");
        f2::dot(&self.x, &other.z) ^ f2::dot(&self.z, &other.x)
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        !self.anticommutes_with(other)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.n + 2);
        match self.y_phase_exp() {
            0 => s.push('+'),
            1 => s.push_str("+i"),
            2 => s.push('-'),
            _ => s.push_str("-i"),
        }
        for q in 0..self.n {
            s.push(self.letter(q).to_char());
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let (neg, rest) = match t.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (imag, body) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let n = body.chars().count();
        let mut letters = Vec::new();
        for (q, c) in body.chars().enumerate() {
            let l = Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {text:?}")))?;
            if l != Letter::I {
                letters.push((q, l));
            }
        }
        let tag = (if neg { 2 } else { 0 }) + u8::from(imag);
        Ok(Self::from_letters(n, &letters).with_letter_phase(tag))
    }
}

impl std::ops::Mul for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        self.try_multiply(rhs).expect("Pauli dimension mismatch")
    }
}

impl std::ops::Mul for PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: PauliOperator) -> PauliOperator {
        &self * &rhs
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({})", self.to_text())
    }
}

impl FromStr for PauliOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn multiply(p: &PauliOperator, q: &PauliOperator) -> Result<PauliOperator> {
    p.try_multiply(q)
}

/// 0 if the operators commute, 1 if they anticommute.
pub fn commutes(p: &PauliOperator, q: &PauliOperator) -> Result<u8> {
    if p.n != q.n {
        return Err(Error::Dimension { expected: p.n, got: q.n });
    }
    Ok(u8::from(p.anticommutes_with(q)))
}

pub fn product<'a, I: IntoIterator<Item = &'a PauliOperator>>(n: usize, ops: I) -> PauliOperator {
    ops.into_iter().fold(PauliOperator::identity(n), |acc, p| &acc * p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingSet {
    pub n_qubits: usize,
    pub elements: Vec<PauliOperator>,
}

impl GeneratingSet {
    pub fn new(n_qubits: usize, elements: Vec<PauliOperator>) -> Result<Self> {
        for e in &elements {
            if e.n_qubits() != n_qubits {
                return Err(Error::Dimension { expected: n_qubits, got: e.n_qubits() });
            }
        }
        Ok(GeneratingSet { n_qubits, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.elements.iter().map(|e| e.symplectic_row()).collect()
    }
}

/// Symmetric bit matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryForm {
    pub size: usize,
    pub matrix: Vec<Vec<u8>>,
}

impl BinaryForm {
    pub fn from_fn<F: Fn(usize, usize) -> bool>(size: usize, f: F) -> Self {
        let matrix = (0..size)
            .map(|i| (0..size).map(|j| u8::from(i != j && f(i, j))).collect())
            .collect();
        BinaryForm { size, matrix }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.matrix[i][j] == 1
    }

    pub fn is_valid(&self) -> bool {
        (0..self.size).all(|i| self.matrix[i][i] == 0 && (0..self.size).all(|j| self.matrix[i][j] == self.matrix[j][i]))
    }

    /// Evaluates the bilinear form on two coefficient vectors.
    pub fn eval(&self, a: &[bool], b: &[bool]) -> bool {
        let mut acc = false;
        for i in 0..self.size {
            if !a[i] {
                continue;
            }
            for j in 0..self.size {
                if b[j] && self.get(i, j) {
                    acc = !acc;
                }
            }
        }
        acc
    }

    /// Nullity of the matrix over F2.
    pub fn radical_dim(&self) -> usize {
        let rows: Vec<Vec<u64>> = self
            .matrix
            .iter()
            .map(|r| {
                let mut w = vec![0u64; f2::words(self.size.max(1))];
                for (j, &b) in r.iter().enumerate() {
                    f2::set(&mut w, j, b == 1);
                }
                w
            })
            .collect();
        self.size - f2::rank(&rows)
    }
}

pub fn group_rank(gens: &GeneratingSet) -> usize {
    f2::rank(&gens.rows())
}

/// Greedy first-wins scan: keeps generator i iff the form vanishes against every kept one.
pub fn maximal_isotropic_indices(form: &BinaryForm) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..form.size {
        if kept.iter().all(|&j| !form.get(i, j)) {
            kept.push(i);
        }
    }
    kept
}

pub fn maximal_isotropic(gens: &GeneratingSet, form: &BinaryForm) -> Result<GeneratingSet> {
    if form.size != gens.len() {
        return Err(Error::Dimension { expected: gens.len(), got: form.size });
    }
    let idx = maximal_isotropic_indices(form);
    GeneratingSet::new(gens.n_qubits, idx.into_iter().map(|i| gens.elements[i].clone()).collect())
}

/// Eigenvalue of `op` on the +1 stabilizer state of the commuting set `gens`,
/// or `None` when `op` is not (up to phase) in the generated group.
pub fn stabilizer_sign(gens: &[PauliOperator], op: &PauliOperator) -> Option<i8> {
    let n = op.n_qubits();
    let rows: Vec<Vec<u64>> = gens.iter().map(|g| g.symplectic_row()).collect();
    let combo = f2::solve(&rows, &op.symplectic_row())?;
    let prod = product(n, combo.iter().map(|&i| &gens[i]));
    let d = (op.phase_exp() + 4 - prod.phase_exp()) % 4;
    match d {
        0 => Some(1),
        2 => Some(-1),
        _ => None,
    }
}

/// Sorted letter maps keyed by qubit, convenient for tables keyed by site.
pub fn letter_map(p: &PauliOperator) -> BTreeMap<usize, Letter> {
    p.letters().into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::dense;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliOperator {
        PauliOperator::parse(s).unwrap()
    }

    #[test]
    fn single_qubit_products() {
        let xz = &p("X") * &p("Z");
        assert_eq!(xz.y_phase_exp(), 3);
        assert_eq!(xz.to_text(), "-iY");
        let xx = &p("X") * &p("X");
        assert!(xx.is_identity());
        assert_eq!(xx.phase_exp(), 0);
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        let a = p("XZ");
        let b = p("ZZ");
        let c = &a * &b;
        assert_eq!(c, p("-iYI"));
        assert!(dense::approx_eq(&dense::pauli(&c.to_text()), &dense::matmul(&dense::pauli(&a.to_text()), &dense::pauli(&b.to_text()))));
    }

    #[test]
    fn commutation_examples() {
        assert_eq!(commutes(&p("X"), &p("Z")).unwrap(), 1);
        assert_eq!(commutes(&p("XX"), &p("ZZ")).unwrap(), 0);
        assert_eq!(commutes(&p("XI"), &p("ZZ")).unwrap(), 1);
        assert!(commutes(&p("X"), &p("XX")).is_err());
        assert!(multiply(&p("X"), &p("XX")).is_err());
    }

    #[test]
    fn text_round_trip() {
        for s in ["+XYZI", "-iYI", "+iZ", "-XX", "+II"] {
            assert_eq!(p(s).to_text(), s);
        }
        assert!(PauliOperator::parse("XQ").is_err());
        let j = serde_json::to_string(&p("-iYZ")).unwrap();
        let back: PauliOperator = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p("-iYZ"));
    }

    #[test]
    fn rank_examples() {
        let g = GeneratingSet::new(2, vec![p("XX"), p("ZZ"), p("YY")]).unwrap();
        assert_eq!(group_rank(&g), 2);
        assert_eq!(group_rank(&GeneratingSet::new(3, vec![]).unwrap()), 0);
    }

    #[test]
    fn maximal_isotropic_first_wins() {
        let g = GeneratingSet::new(1, vec![p("X"), p("Z")]).unwrap();
        let form = BinaryForm::from_fn(2, |i, j| g.elements[i].anticommutes_with(&g.elements[j]));
        let h = maximal_isotropic(&g, &form).unwrap();
        assert_eq!(h.elements, vec![p("X")]);
    }

    #[test]
    fn hermiticity_predicate() {
        assert!(p("Y").is_hermitian());
        assert_eq!(p("Y").phase_exp(), 1);
        assert!(!p("iX").is_hermitian());
        assert!((&p("XZ") * &p("ZX")).is_hermitian());
    }

    #[test]
    fn stabilizer_sign_on_bell_pair() {
        let gens = [p("XX"), p("ZZ")];
        assert_eq!(stabilizer_sign(&gens, &p("-YY")), Some(1));
        assert_eq!(stabilizer_sign(&gens, &p("YY")), Some(-1));
        assert_eq!(stabilizer_sign(&gens, &p("XI")), None);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(move |(ls, ph)| {
            let letters: Vec<_> = ls
                .iter()
                .enumerate()
                .map(|(q, &l)| (q, [Letter::I, Letter::X, Letter::Y, Letter::Z][l as usize]))
                .collect();
            PauliOperator::from_letters(n, &letters).times_i(ph)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn dense_oracle_agreement((a, b) in (1usize..=3).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))) {
            let ab = &a * &b;
            let (ma, mb) = (dense::pauli(&a.to_text()), dense::pauli(&b.to_text()));
            prop_assert!(dense::approx_eq(&dense::pauli(&ab.to_text()), &dense::matmul(&ma, &mb)));
            let comm = dense::approx_eq(&dense::matmul(&ma, &mb), &dense::matmul(&mb, &ma));
            prop_assert_eq!(comm, a.commutes_with(&b));
        }

        #[test]
        fn associativity(a in arb_pauli(5), b in arb_pauli(5), c in arb_pauli(5)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn swap_differs_by_commutation_sign(a in arb_pauli(6), b in arb_pauli(6)) {
            let ab = &a * &b;
            let ba = &b * &a;
            prop_assert_eq!(a.anticommutes_with(&b), b.anticommutes_with(&a));
            let expect = if a.anticommutes_with(&b) { ba.neg() } else { ba };
            prop_assert_eq!(ab, expect);
        }

        #[test]
        fn rank_invariant_under_row_ops(ops in proptest::collection::vec(arb_pauli(4), 1..6), i in 0usize..6, j in 0usize..6) {
            let g = GeneratingSet::new(4, ops.clone()).unwrap();
            let (i, j) = (i % ops.len(), j % ops.len());
            let mut ops2 = ops.clone();
            if i != j {
                ops2[i] = &ops[i] * &ops[j];
            }
            prop_assert_eq!(group_rank(&g), group_rank(&GeneratingSet::new(4, ops2).unwrap()));
        }

        #[test]
        fn maximal_isotropic_is_isotropic_and_maximal(ops in proptest::collection::vec(arb_pauli(3), 1..8)) {
            let form = BinaryForm::from_fn(ops.len(), |i, j| ops[i].anticommutes_with(&ops[j]));
            let kept = maximal_isotropic_indices(&form);
            for &a in &kept { for &b in &kept { prop_assert!(!form.get(a, b)); } }
            for i in 0..ops.len() {
                if !kept.contains(&i) {
                    prop_assert!(kept.iter().any(|&k| form.get(i, k)));
                }
            }
        }

        #[test]
        fn text_round_trips(a in arb_pauli(7)) {
            prop_assert_eq!(PauliOperator::parse(&a.to_text()).unwrap(), a);
        }
    }
}
