//! Dense bit rows and square bit matrices.
//!
//! Commeasurability relations, up-sets and exclusivity graphs are all
//! symmetric or row-indexed relations over a carrier of at most a few
//! thousand elements, so a flat `Vec<u64>` per row is the right shape:
//! row intersection and emptiness tests compile to word operations.

/// A fixed-width row of bits.
#[derive(Clone, PartialEq, Eq)]
pub struct BitRow {
    width: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn new(width: usize) -> Self {
        BitRow {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.width);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.width);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// True when `self` and `other` share at least one set bit.
    pub fn intersects(&self, other: &BitRow) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Lowest index set in both rows.
    pub fn first_common(&self, other: &BitRow) -> Option<usize> {
        for (k, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let w = a & b;
            if w != 0 {
                return Some(k * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// True when every bit of `self` is also set in `other`.
    pub fn is_subset(&self, other: &BitRow) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + b)
                }
            })
        })
    }
}

impl std::fmt::Debug for BitRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter_ones()).finish()
    }
}

/// A square bit matrix keyed by `(row, column)`.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    rows: Vec<BitRow>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        BitMatrix {
            n,
            rows: vec![BitRow::new(n); n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
        self.rows[j].set(i, value);
    }

    pub fn row(&self, i: usize) -> &BitRow {
        &self.rows[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut BitRow {
        &mut self.rows[i]
    }

    /// Unordered pairs `(i, j)` with `i < j` and `get(i, j)`.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.rows[i]
                .iter_ones()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn count_true(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list()
            .entries(self.rows.iter().map(|r| format!("{r:?}")))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut row = BitRow::new(130);
        row.set(0, true);
        row.set(64, true);
        row.set(129, true);
        assert!(row.get(0) && row.get(64) && row.get(129));
        assert!(!row.get(1));
        assert_eq!(row.count_ones(), 3);
        assert_eq!(row.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        row.set(64, false);
        assert_eq!(row.count_ones(), 2);
    }

    #[test]
    fn intersection_and_subset() {
        let mut a = BitRow::new(70);
        let mut b = BitRow::new(70);
        a.set(3, true);
        a.set(69, true);
        b.set(69, true);
        assert!(a.intersects(&b));
        assert_eq!(a.first_common(&b), Some(69));
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
        b.clear();
        assert!(!a.intersects(&b));
        assert_eq!(a.first_common(&b), None);
    }

    #[test]
    fn matrix_symmetric_set() {
        let mut m = BitMatrix::new(5);
        m.set_sym(1, 3, true);
        assert!(m.get(1, 3) && m.get(3, 1));
        assert_eq!(m.upper_pairs().collect::<Vec<_>>(), vec![(1, 3)]);
    }
}
