//! Set partitions and the moment/cumulant (cluster) expansion.
//!
//! Subsets of the slot positions 0..n are bitmasks. Blocks keep the
//! ascending order of their elements.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Commutative ring operations needed by the expansion.
pub trait Ring: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Ring for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

/// All partitions of the given elements (in the given order) into blocks,
/// via restricted growth strings.
pub fn partitions_of(elems: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let n = elems.len();
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        let nb = maxes[n - 1] + 1;
        let mut blocks = vec![Vec::new(); nb];
        for (i, &b) in a.iter().enumerate() {
            blocks[b].push(elems[i]);
        }
        out.push(blocks);
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let bound = maxes[i - 1] + 1;
            if a[i] < bound {
                a[i] += 1;
                maxes[i] = maxes[i - 1].max(a[i]);
                for j in i + 1..n {
                    a[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

pub fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    partitions_of(&(0..n).collect::<Vec<_>>())
}

/// Bell numbers by the triangle recurrence.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

pub fn mask_of(block: &[usize]) -> u64 {
    block.iter().fold(0u64, |m, &i| m | (1u64 << i))
}

pub fn elements(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1u64 << i) != 0).collect()
}

/// Full value of the subset `mask` as the sum over partitions of products of
/// truncated block values supplied by `trunc`.
pub fn expand_with<T: Ring, F: FnMut(u64) -> Result<T>>(mask: u64, mut trunc: F) -> Result<T> {
    let mut total = T::zero();
    for part in partitions_of(&elements(mask)) {
        let mut prod = T::one();
        for block in &part {
            prod = prod.mul(&trunc(mask_of(block))?);
        }
        total = total.add(&prod);
    }
    Ok(total)
}

/// Full n-point value from a table of truncated values keyed by subset mask.
pub fn cluster_expand<T: Ring>(table: &BTreeMap<u64, T>, n: usize) -> Result<T> {
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    expand_with(all, |m| table.get(&m).cloned().ok_or(Error::MissingEntry(format!("truncated value for block {:?}", elements(m)))))
}

/// Full values for every nonempty subset of 0..n.
pub fn moments_from_cumulants<T: Ring>(table: &BTreeMap<u64, T>, n: usize) -> Result<BTreeMap<u64, T>> {
    let mut out = BTreeMap::new();
    for m in 1..(1u64 << n) {
        let v = expand_with(m, |b| table.get(&b).cloned().ok_or(Error::MissingEntry(format!("block {:?}", elements(b)))))?;
        out.insert(m, v);
    }
    Ok(out)
}

/// Inverse of `moments_from_cumulants` by recursive subtraction over subsets
/// of increasing size.
pub fn cumulants_from_moments<T: Ring>(moments: &BTreeMap<u64, T>, n: usize) -> Result<BTreeMap<u64, T>> {
    let mut masks: Vec<u64> = (1..(1u64 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut cum: BTreeMap<u64, T> = BTreeMap::new();
    for m in masks {
        let full = moments.get(&m).cloned().ok_or(Error::MissingEntry(format!("moment {:?}", elements(m))))?;
        let mut rest = T::zero();
        for part in partitions_of(&elements(m)) {
            if part.len() == 1 {
                continue;
            }
            let mut prod = T::one();
            for block in &part {
                prod = prod.mul(&cum[&mask_of(block)]);
            }
            rest = rest.add(&prod);
        }
        cum.insert(m, full.sub(&rest));
    }
    Ok(cum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_numbers() {
        let b: Vec<u64> = (0..8).map(bell).collect();
        assert_eq!(b, vec![1, 1, 2, 5, 15, 52, 203, 877]);
        for n in 0..8 {
            assert_eq!(partitions(n).len() as u64, bell(n));
        }
    }

    #[test]
    fn blocks_are_ascending_and_cover() {
        for part in partitions(5) {
            let mut all: Vec<usize> = part.iter().flatten().copied().collect();
            for b in &part {
                assert!(b.windows(2).all(|w| w[0] < w[1]));
            }
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn odd_expansion_with_pairs_only_vanishes() {
        let mut t = BTreeMap::new();
        for m in 1u64..8 {
            t.insert(m, if m.count_ones() == 2 { 1.7 } else { 0.0 });
        }
        assert_eq!(cluster_expand(&t, 3).unwrap(), 0.0);
    }

    #[test]
    fn four_point_pair_partitions() {
        let w = |i: usize, j: usize| (i * 10 + j) as f64;
        let mut t = BTreeMap::new();
        for m in 1u64..16 {
            let e = elements(m);
            t.insert(m, if e.len() == 2 { w(e[0], e[1]) } else { 0.0 });
        }
        let full = cluster_expand(&t, 4).unwrap();
        assert_eq!(full, w(0, 1) * w(2, 3) + w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2));
    }

    #[test]
    fn missing_entry_is_reported() {
        let t: BTreeMap<u64, f64> = BTreeMap::new();
        assert!(matches!(cluster_expand(&t, 2), Err(Error::MissingEntry(_))));
    }

    #[test]
    fn round_trip_integer_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let mut t = BTreeMap::new();
            for m in 1..(1u64 << n) {
                t.insert(m, rng.random_range(-9i64..10));
            }
            let mom = moments_from_cumulants(&t, n).unwrap();
            assert_eq!(cumulants_from_moments(&mom, n).unwrap(), t);
        }
    }
}
