//! Linear algebra over GF(2) on vectors packed into a `u64`.

/// Incremental XOR basis that remembers, for every basis vector, which input
/// columns were combined to produce it.
#[derive(Clone, Debug)]
pub struct XorBasis {
    vecs: [u64; 64],
    combos: [u64; 64],
    present: u64,
    null: Vec<u64>,
    pivots: Vec<usize>,
    inserted: usize,
}

impl Default for XorBasis {
    fn default() -> Self {
        XorBasis { vecs: [0; 64], combos: [0; 64], present: 0, null: Vec::new(), pivots: Vec::new(), inserted: 0 }
    }
}

impl XorBasis {
    /// Basis for the column span of `cols`, tracking column combinations.
    pub fn from_columns(cols: &[u64]) -> Self {
        assert!(cols.len() <= 64, "at most 64 columns");
        let mut b = XorBasis::default();
        for &c in cols {
            b.push(c);
        }
        b
    }

    /// Appends column number `self.inserted`.
    pub fn push(&mut self, col: u64) {
        let j = self.inserted;
        self.inserted += 1;
        let (v, c) = self.reduce(col, 1u64 << j);
        if v == 0 {
            self.null.push(c);
        } else {
            let lead = 63 - v.leading_zeros() as usize;
            self.vecs[lead] = v;
            self.combos[lead] = c;
            self.present |= 1 << lead;
            self.pivots.push(j);
        }
    }

    fn reduce(&self, mut v: u64, mut combo: u64) -> (u64, u64) {
        while v != 0 {
            let lead = 63 - v.leading_zeros() as usize;
            if self.present >> lead & 1 == 0 {
                break;
            }
            v ^= self.vecs[lead];
            combo ^= self.combos[lead];
        }
        (v, combo)
    }

    pub fn rank(&self) -> usize {
        self.present.count_ones() as usize
    }

    /// Columns that entered the basis, in insertion order.
    pub fn pivot_columns(&self) -> &[usize] {
        &self.pivots
    }

    /// Basis of `{a : sum_j a_j col_j = 0}`.
    pub fn null_space(&self) -> &[u64] {
        &self.null
    }

    /// Some `a` with `sum_j a_j col_j = target`, if one exists.
    pub fn solve(&self, target: u64) -> Option<u64> {
        let (v, c) = self.reduce(target, 0);
        (v == 0).then_some(c)
    }

    pub fn contains(&self, v: u64) -> bool {
        self.reduce(v, 0).0 == 0
    }
}

/// Gray-code order: step `i >= 1` flips bit `trailing_zeros(i)`.
#[inline]
pub fn gray_flip(i: u64) -> usize {
    i.trailing_zeros() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(cols: &[u64], a: u64) -> u64 {
        cols.iter().enumerate().filter(|(j, _)| a >> j & 1 == 1).fold(0, |acc, (_, c)| acc ^ c)
    }

    #[test]
    fn rank_deficient_example() {
        let cols = [0b011, 0b101, 0b110, 0b001];
        let b = XorBasis::from_columns(&cols);
        assert_eq!(b.rank(), 3);
        assert_eq!(b.null_space().len(), 1);
        assert_eq!(apply(&cols, b.null_space()[0]), 0);
        let a = b.solve(0b111).unwrap();
        assert_eq!(apply(&cols, a), 0b111);
    }

    proptest! {
        #[test]
        fn solve_and_null_space_are_consistent(cols in prop::collection::vec(0u64..(1 << 10), 1..13), t in 0u64..(1 << 10)) {
            let b = XorBasis::from_columns(&cols);
            prop_assert_eq!(b.rank() + b.null_space().len(), cols.len());
            for &v in b.null_space() {
                prop_assert_eq!(apply(&cols, v), 0);
            }
            // brute force reachability
            let reachable = (0u64..1 << cols.len()).any(|a| apply(&cols, a) == t);
            match b.solve(t) {
                Some(a) => prop_assert_eq!(apply(&cols, a), t),
                None => prop_assert!(!reachable),
            }
        }
    }
}
