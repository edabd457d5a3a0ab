//! Dense linear algebra over F2 on packed `u64` rows.

pub fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
pub fn get(row: &[u64], i: usize) -> bool {
    (row[i / 64] >> (i % 64)) & 1 == 1
}

#[inline]
pub fn set(row: &mut [u64], i: usize, v: bool) {
    let m = 1u64 << (i % 64);
    if v {
        row[i / 64] |= m;
    } else {
        row[i / 64] &= !m;
    }
}

#[inline]
pub fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

pub fn is_zero(row: &[u64]) -> bool {
    row.iter().all(|&w| w == 0)
}

pub fn popcount(row: &[u64]) -> u32 {
    row.iter().map(|w| w.count_ones()).sum()
}

pub fn dot(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum::<u32>() & 1 == 1
}

fn lowest_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Row-reduced basis that remembers which input rows produced each pivot row.
#[derive(Clone, Debug)]
pub struct Echelon {
    n_inputs: usize,
    pivots: Vec<(usize, Vec<u64>, Vec<u64>)>,
}

impl Echelon {
    pub fn new(n_inputs: usize) -> Self {
        Echelon { n_inputs, pivots: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let mut e = Echelon::new(rows.len());
        for (i, r) in rows.iter().enumerate() {
            e.insert(i, r);
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `row`, returning the residue and the combination of inputs used.
    fn reduce(&self, row: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let mut r = row.to_vec();
        let mut combo = vec![0u64; words(self.n_inputs.max(1))];
        for (p, prow, pcombo) in &self.pivots {
            if get(&r, *p) {
                xor_into(&mut r, prow);
                xor_into(&mut combo, pcombo);
            }
        }
        (r, combo)
    }

    /// Inserts input row `index`; returns false if it was dependent.
    pub fn insert(&mut self, index: usize, row: &[u64]) -> bool {
        if index >= self.n_inputs {
            self.n_inputs = index + 1;
            for (_, _, c) in self.pivots.iter_mut() {
                c.resize(words(self.n_inputs), 0);
            }
        }
        let (r, mut combo) = self.reduce(row);
        combo.resize(words(self.n_inputs), 0);
        match lowest_bit(&r) {
            None => false,
            Some(p) => {
                let cur = get(&combo, index);
                set(&mut combo, index, !cur);
                for (_, prow, pcombo) in self.pivots.iter_mut() {
                    if get(prow, p) {
                        xor_into(prow, &r);
                        xor_into(pcombo, &combo);
                    }
                }
                self.pivots.push((p, r, combo));
                true
            }
        }
    }

    /// Indices of input rows whose XOR equals `target`, if any.
    pub fn solve(&self, target: &[u64]) -> Option<Vec<usize>> {
        let (r, combo) = self.reduce(target);
        if !is_zero(&r) {
            return None;
        }
        Some((0..self.n_inputs).filter(|&i| get(&combo, i)).collect())
    }

    pub fn contains(&self, target: &[u64]) -> bool {
        is_zero(&self.reduce(target).0)
    }
}

pub fn rank(rows: &[Vec<u64>]) -> usize {
    Echelon::from_rows(rows).rank()
}

pub fn solve(rows: &[Vec<u64>], target: &[u64]) -> Option<Vec<usize>> {
    Echelon::from_rows(rows).solve(target)
}
