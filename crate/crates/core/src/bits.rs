//! Small helpers for user sets stored as `u32` bitmasks (bit `i` = user `i`,
//! zero-based).

use alloc::vec::Vec;

/// Iterator over the set bits of a mask, lowest first.
#[derive(Clone, Copy, Debug)]
pub struct Ones(u32);

impl Iterator for Ones {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Ones {}

pub fn ones(mask: u32) -> Ones {
    Ones(mask)
}

pub fn to_vec(mask: u32) -> Vec<usize> {
    ones(mask).collect()
}

pub fn from_slice(items: &[usize]) -> u32 {
    items.iter().fold(0, |m, &i| m | (1 << i))
}

/// All `size`-element subsets of `mask`, in increasing numeric order.
pub fn subsets_of_size(mask: u32, size: usize) -> Vec<u32> {
    let elems = to_vec(mask);
    let n = elems.len();
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    if size == 0 {
        out.push(0);
        return out;
    }
    // Gosper's hack over positions within `elems`, then map back.
    let mut pos: u64 = (1u64 << size) - 1;
    let limit = 1u64 << n;
    while pos < limit {
        let mut m = 0u32;
        let mut p = pos;
        while p != 0 {
            let b = p.trailing_zeros() as usize;
            m |= 1 << elems[b];
            p &= p - 1;
        }
        out.push(m);
        let c = pos & pos.wrapping_neg();
        let r = pos + c;
        pos = (((r ^ pos) >> 2) / c) | r;
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerate_binomial_counts() {
        let mask = 0b1011_0110;
        for size in 0..=5 {
            let subs = subsets_of_size(mask, size);
            let expected = [1, 5, 10, 10, 5, 1][size];
            assert_eq!(subs.len(), expected);
            assert!(subs.iter().all(|&s| s & !mask == 0 && s.count_ones() as usize == size));
        }
        assert!(subsets_of_size(mask, 6).is_empty());
    }

    #[test]
    fn ones_iterates_low_to_high() {
        assert_eq!(to_vec(0b10110), [1, 2, 4]);
        assert_eq!(from_slice(&[1, 2, 4]), 0b10110);
    }
}
