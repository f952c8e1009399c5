//! Reduced symmetric Kronecker powers.
//!
//! The r-fold Kronecker power of an n-vector has n^r entries but only
//! `binomial(n + r - 1, r)` distinct monomials. The reduced basis lists each
//! monomial once as a non-decreasing index tuple, in lexicographic order. For
//! n = 3, r = 2 that is
//!
//! ```text
//! x1², x1·x2, x1·x3, x2², x2·x3, x3²
//! ```
//!
//! Indices are 0-based throughout; tuple `(0, 2)` is the monomial `x1·x3`.

use crate::{Error, Result};

/// Number of distinct monomials of degree `r` in `n` variables.
pub fn reduced_dim(n: usize, r: usize) -> Result<usize> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidArgument(format!(
            "reduced basis undefined for n = {n}, r = {r}"
        )));
    }
    Ok(binomial(n + r - 1, r))
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    // Exact at every step: the running product is always a binomial coefficient.
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Ordered reduced basis for the `order`-th Kronecker power of an
/// `n`-dimensional state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIndexMap {
    n: usize,
    order: usize,
    tuples: Vec<Vec<usize>>,
}

impl MonomialIndexMap {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        let dim = reduced_dim(n, order)?;
        let mut tuples = Vec::with_capacity(dim);
        let mut current = Vec::with_capacity(order);
        enumerate(n, order, 0, &mut current, &mut tuples);
        debug_assert_eq!(tuples.len(), dim);
        Ok(Self { n, order, tuples })
    }

    /// The order-2 map used everywhere else in the crate.
    pub fn pairs(n: usize) -> Result<Self> {
        Self::new(n, 2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// The index tuple stored at basis position `k`.
    pub fn tuple(&self, k: usize) -> &[usize] {
        &self.tuples[k]
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[usize]> {
        self.tuples.iter().map(Vec::as_slice)
    }

    /// Position of the unordered pair `{i, j}` in an order-2 basis.
    pub fn index_of_pair(&self, i: usize, j: usize) -> Result<usize> {
        if self.order != 2 {
            return Err(Error::InvalidArgument(format!(
                "index_of_pair needs an order-2 map, this one has order {}",
                self.order
            )));
        }
        for index in [i, j] {
            if index >= self.n {
                return Err(Error::IndexOutOfRange { index, n: self.n });
            }
        }
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        // Row `lo` starts after the rows 0..lo, which hold n, n-1, ... entries.
        Ok(lo * self.n - lo * (lo.saturating_sub(1)) / 2 + (hi - lo))
    }

    /// Unchecked variant for internal loops where the indices are known valid.
    pub(crate) fn pair(&self, i: usize, j: usize) -> usize {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        lo * self.n - lo * (lo.saturating_sub(1)) / 2 + (hi - lo)
    }

    /// Reduced square `x ⊗ x` of an `n`-vector in this map's ordering.
    pub fn reduce_square(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.order != 2 {
            return Err(Error::InvalidArgument(
                "reduce_square needs an order-2 map".into(),
            ));
        }
        if v.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "expected a vector of length {}, got {}",
                self.n,
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite input to reduce_square".into(),
            ));
        }
        Ok(self.tuples.iter().map(|t| v[t[0]] * v[t[1]]).collect())
    }
}

fn enumerate(
    n: usize,
    remaining: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for i in start..n {
        current.push(i);
        enumerate(n, remaining - 1, i, current, out);
        current.pop();
    }
}

/// Reduced square of a 3-vector, the only size the reactor model needs.
pub fn reduce_square3(v: &[f64; 3]) -> [f64; 6] {
    [
        v[0] * v[0],
        v[0] * v[1],
        v[0] * v[2],
        v[1] * v[1],
        v[1] * v[2],
        v[2] * v[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_count(n: usize, r: usize) -> usize {
        // Count exponent vectors (a_1..a_n) with sum r.
        fn rec(vars: usize, left: usize) -> usize {
            if vars == 1 {
                return 1;
            }
            (0..=left).map(|a| rec(vars - 1, left - a)).sum()
        }
        rec(n, r)
    }

    #[test]
    fn dimensions() {
        assert_eq!(reduced_dim(3, 2).unwrap(), 6);
        assert_eq!(reduced_dim(7, 1).unwrap(), 7);
        assert_eq!(reduced_dim(2, 3).unwrap(), 4);
        assert_eq!(reduced_dim(3, 2).unwrap() + 3, 9);
        for n in 1..6 {
            for r in 1..5 {
                assert_eq!(reduced_dim(n, r).unwrap(), brute_force_count(n, r));
            }
        }
        assert!(reduced_dim(0, 2).is_err());
        assert!(reduced_dim(3, 0).is_err());
    }

    #[test]
    fn pair_ordering_matches_reactor_basis() {
        let map = MonomialIndexMap::pairs(3).unwrap();
        let expected = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        for (k, (i, j)) in expected.iter().enumerate() {
            assert_eq!(map.tuple(k), &[*i, *j]);
            assert_eq!(map.index_of_pair(*i, *j).unwrap(), k);
        }
        assert_eq!(map.index_of_pair(0, 0).unwrap(), 0);
        assert_eq!(map.index_of_pair(2, 2).unwrap(), 5);
        assert_eq!(map.index_of_pair(2, 0).unwrap(), 2);
        assert!(map.index_of_pair(3, 0).is_err());
        assert!(MonomialIndexMap::new(3, 3)
            .unwrap()
            .index_of_pair(0, 1)
            .is_err());
    }

    #[test]
    fn general_order_tuples_are_sorted_and_unique() {
        let map = MonomialIndexMap::new(4, 3).unwrap();
        assert_eq!(map.len(), 20);
        for w in map.tuples.windows(2) {
            assert!(w[0] < w[1]);
        }
        for t in map.tuples() {
            assert!(t.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn reduce_square_examples() {
        let map = MonomialIndexMap::pairs(3).unwrap();
        assert_eq!(
            map.reduce_square(&[1.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(map.reduce_square(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0; 6]);
        let got = map.reduce_square(&[3.0, 1.12, 0.009528]).unwrap();
        let want = [9.0, 3.36, 0.028584, 1.2544, 0.01067136, 9.0782784e-5];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
        }
        assert_eq!(got, reduce_square3(&[3.0, 1.12, 0.009528]).to_vec());
        assert!(map.reduce_square(&[f64::NAN, 0.0, 0.0]).is_err());
        assert!(map.reduce_square(&[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..8, i in 0usize..8, j in 0usize..8) {
            prop_assume!(i < n && j < n);
            let map = MonomialIndexMap::pairs(n).unwrap();
            let k = map.index_of_pair(i, j).unwrap();
            prop_assert_eq!(map.tuple(k), &[i.min(j), i.max(j)]);
            prop_assert_eq!(k, map.index_of_pair(j, i).unwrap());
        }

        #[test]
        fn reduce_square_is_quadratic(
            v in proptest::collection::vec(-1e3f64..1e3, 3),
            c in -50.0f64..50.0,
        ) {
            let map = MonomialIndexMap::pairs(3).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let lhs = map.reduce_square(&scaled).unwrap();
            let rhs = map.reduce_square(&v).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                let want = c * c * b;
                prop_assert!((a - want).abs() <= 8.0 * f64::EPSILON * want.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
}
