//! Ordered index pairs and triples used to pack symmetric tensors.

use crate::error::{Error, Result};

/// An ordered pair `first <= second` together with its multiplicity n(μν).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymPair {
    pub first: usize,
    pub second: usize,
    pub mult: usize,
}

impl SymPair {
    pub fn index(&self) -> usize {
        PAIR_INDEX[self.first][self.second]
    }
}

/// The ten ordered pairs in packing order.
pub const PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

pub const PAIR_INDEX: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];

/// n(μν) for each packed pair.
pub const MULT: [f64; 10] = [1.0, 2.0, 2.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0, 1.0];

pub fn normalize_pair(a: usize, b: usize) -> Result<SymPair> {
    if a > 3 {
        return Err(Error::IndexOutOfRange(a));
    }
    if b > 3 {
        return Err(Error::IndexOutOfRange(b));
    }
    let (first, second) = if a <= b { (a, b) } else { (b, a) };
    Ok(SymPair {
        first,
        second,
        mult: if first == second { 1 } else { 2 },
    })
}

#[inline]
pub fn pidx(a: usize, b: usize) -> usize {
    PAIR_INDEX[a][b]
}

#[inline]
pub fn mult(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        2.0
    }
}

/// The twenty ordered triples μ ≤ ν ≤ λ in packing order.
pub const TRIPLES: [(usize, usize, usize); 20] = build_triples();

const fn build_triples() -> [(usize, usize, usize); 20] {
    let mut out = [(0, 0, 0); 20];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = a;
        while b < 4 {
            let mut c = b;
            while c < 4 {
                out[n] = (a, b, c);
                n += 1;
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

/// Packed index of the triple formed by any permutation of (a, b, c).
#[inline]
pub fn tidx(a: usize, b: usize, c: usize) -> usize {
    let mut s = [a, b, c];
    s.sort_unstable();
    TRIPLE_INDEX[s[0]][s[1]][s[2]]
}

const TRIPLE_INDEX: [[[usize; 4]; 4]; 4] = build_triple_index();

const fn build_triple_index() -> [[[usize; 4]; 4]; 4] {
    let t = build_triples();
    let mut out = [[[usize::MAX; 4]; 4]; 4];
    let mut i = 0;
    while i < 20 {
        let (a, b, c) = t[i];
        out[a][b][c] = i;
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(
            normalize_pair(2, 1).unwrap(),
            SymPair { first: 1, second: 2, mult: 2 }
        );
        assert_eq!(
            normalize_pair(3, 3).unwrap(),
            SymPair { first: 3, second: 3, mult: 1 }
        );
        assert_eq!(
            normalize_pair(0, 2).unwrap(),
            SymPair { first: 0, second: 2, mult: 2 }
        );
        assert_eq!(normalize_pair(4, 0), Err(Error::IndexOutOfRange(4)));
    }

    #[test]
    fn tables_consistent() {
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            assert_eq!(pidx(a, b), k);
            assert_eq!(pidx(b, a), k);
            assert_eq!(MULT[k], mult(a, b));
        }
        for (k, &(a, b, c)) in TRIPLES.iter().enumerate() {
            assert_eq!(tidx(c, a, b), k);
            assert_eq!(tidx(b, c, a), k);
        }
    }

    proptest! {
        #[test]
        fn normalize_idempotent_and_symmetric(a in 0usize..4, b in 0usize..4) {
            let p = normalize_pair(a, b).unwrap();
            prop_assert_eq!(p, normalize_pair(b, a).unwrap());
            prop_assert_eq!(p, normalize_pair(p.first, p.second).unwrap());
            prop_assert!(p.first <= p.second);
            prop_assert_eq!(p.mult == 1, p.first == p.second);
        }
    }
}
