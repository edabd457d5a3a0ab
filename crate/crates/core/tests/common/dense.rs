//! Dense-matrix oracle: explicit Kronecker products and full diagonalization.
//! Operators are passed in text form so this file has no dependency on the
//! library types. Basis index bit q holds qubit q.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub type M = DMatrix<C>;
pub type V = DVector<C>;

fn one(l: char) -> M {
    let z = C::new(0.0, 0.0);
    let o = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    match l {
        'I' => M::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => M::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => M::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => M::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad letter {l}"),
    }
}

/// Matrix of a Pauli string like `-iXYZ` (qubit 0 leftmost in the text).
pub fn pauli(text: &str) -> M {
    let t = text.trim();
    let (neg, rest) = match t.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (imag, body) = match rest.strip_prefix('i') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let letters: Vec<char> = body.chars().collect();
    let mut m = M::from_element(1, 1, C::new(1.0, 0.0));
    // highest qubit is the most significant tensor factor
    for &l in &letters {
        m = one(l).kronecker(&m);
    }
    let mut c = C::new(1.0, 0.0);
    if neg {
        c = -c;
    }
    if imag {
        c *= C::new(0.0, 1.0);
    }
    m * c
}

pub fn matmul(a: &M, b: &M) -> M {
    a * b
}

pub fn approx_eq(a: &M, b: &M) -> bool {
    a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() < 1e-10)
}

pub fn hamiltonian(n: usize, terms: &[(f64, String)]) -> M {
    let d = 1usize << n;
    let mut h = M::zeros(d, d);
    for (c, t) in terms {
        h += pauli(t) * C::new(*c, 0.0);
    }
    h
}

/// Ground energy, ground vector and gap to the next level.
pub fn ground(h: &M) -> (f64, V, f64) {
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let e0 = eig.eigenvalues[idx[0]];
    let gap = if idx.len() > 1 { eig.eigenvalues[idx[1]] - e0 } else { f64::INFINITY };
    let v = eig.eigenvectors.column(idx[0]).into_owned();
    (e0, v, gap)
}

pub fn spectrum(h: &M) -> Vec<f64> {
    let mut e: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

pub fn expect(v: &V, m: &M) -> C {
    (v.adjoint() * m * v)[(0, 0)]
}

pub fn expect_text(v: &V, text: &str) -> f64 {
    expect(v, &pauli(text)).re
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &M) -> M {
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let s = (norm.log2().ceil().max(0.0) as i32) + 1;
    let scaled = a * C::new(0.5f64.powi(s), 0.0);
    let d = a.nrows();
    let mut term = M::identity(d, d);
    let mut sum = M::identity(d, d);
    for k in 1..30 {
        term = &term * &scaled * C::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn spectral_norm(a: &M) -> f64 {
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn trace_norm(a: &M) -> f64 {
    a.clone().singular_values().iter().sum()
}
