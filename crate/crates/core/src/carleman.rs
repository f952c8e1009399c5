//! Order-2 Carleman embedding.
//!
//! A quadratic-drift Itô SDE driven by one scalar Brownian motion,
//!
//! ```text
//! dx_i = (c_i + Σ_j L_ij x_j + Σ_jk Q_i,jk x_j x_k) dt + g_i dB,
//! ```
//!
//! is lifted to the augmented state `ξ = (x, x ⊗ x)` (reduced basis from
//! [`crate::kronecker`]). The Itô product rule gives
//!
//! ```text
//! d(x_i x_j) = (x_i f_j + x_j f_i + g_i g_j) dt + (x_i g_j + x_j g_i) dB,
//! ```
//!
//! and discarding every drift monomial of degree three leaves the bilinear SDE
//!
//! ```text
//! dξ = (A0 + A ξ) dt + (G + D ξ) dB.
//! ```

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::format::sci;
use crate::kronecker::MonomialIndexMap;
use crate::model::ReactorParams;
use crate::{Error, Result};

/// One monomial of a polynomial drift: `coeff · Π x_k^powers[k]` in equation `equation`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTerm {
    pub equation: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl DriftTerm {
    pub fn new(equation: usize, coeff: f64, powers: &[u32]) -> Self {
        Self {
            equation,
            coeff,
            powers: powers.to_vec(),
        }
    }
}

/// Quadratic-drift SDE with one additive noise column.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSde {
    n: usize,
    c: DVector<f64>,
    l: DMatrix<f64>,
    q: Vec<DMatrix<f64>>,
    g: DVector<f64>,
}

impl QuadraticSde {
    /// Builds the SDE from coefficient arrays. Each quadratic form is symmetrized.
    pub fn new(
        c: DVector<f64>,
        l: DMatrix<f64>,
        q: Vec<DMatrix<f64>>,
        g: DVector<f64>,
    ) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "state dimension must be positive".into(),
            ));
        }
        if l.shape() != (n, n) || g.len() != n || q.len() != n {
            return Err(Error::InvalidArgument(format!(
                "coefficient shapes inconsistent with n = {n}"
            )));
        }
        if q.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::InvalidArgument(
                "each quadratic form must be n×n".into(),
            ));
        }
        let finite = c
            .iter()
            .chain(l.iter())
            .chain(g.iter())
            .all(|x| x.is_finite())
            && q.iter().all(|m| m.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        let q = q.into_iter().map(|m| (&m + m.transpose()) * 0.5).collect();
        Ok(Self { n, c, l, q, g })
    }

    /// Builds the SDE from a list of drift monomials, rejecting anything above degree two.
    pub fn from_monomials(n: usize, g: DVector<f64>, terms: &[DriftTerm]) -> Result<Self> {
        let mut c = DVector::zeros(n);
        let mut l = DMatrix::zeros(n, n);
        let mut q = vec![DMatrix::zeros(n, n); n];
        for term in terms {
            if term.equation >= n {
                return Err(Error::IndexOutOfRange {
                    index: term.equation,
                    n,
                });
            }
            if term.powers.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "monomial has {} exponents, expected {n}",
                    term.powers.len()
                )));
            }
            let degree: u32 = term.powers.iter().sum();
            let vars: Vec<usize> = term
                .powers
                .iter()
                .enumerate()
                .flat_map(|(k, &p)| std::iter::repeat_n(k, p as usize))
                .collect();
            match vars.as_slice() {
                [] => c[term.equation] += term.coeff,
                [j] => l[(term.equation, *j)] += term.coeff,
                [j, k] if j == k => q[term.equation][(*j, *j)] += term.coeff,
                [j, k] => {
                    let half = 0.5 * term.coeff;
                    q[term.equation][(*j, *k)] += half;
                    q[term.equation][(*k, *j)] += half;
                }
                _ => return Err(Error::DegreeTooHigh { degree }),
            }
        }
        Self::new(c, l, q, g)
    }

    /// Coefficient form of the reactor drift.
    pub fn van_de_vusse(p: &ReactorParams) -> Self {
        let inv_v = 1.0 / p.v;
        let terms = [
            DriftTerm::new(0, -p.k1, &[1, 0, 0]),
            DriftTerm::new(0, p.caf / p.v, &[0, 0, 1]),
            DriftTerm::new(0, -p.k3, &[2, 0, 0]),
            DriftTerm::new(0, -inv_v, &[1, 0, 1]),
            DriftTerm::new(1, p.k1, &[1, 0, 0]),
            DriftTerm::new(1, -p.k2, &[0, 1, 0]),
            DriftTerm::new(1, -inv_v, &[0, 1, 1]),
            DriftTerm::new(2, -p.alpha, &[0, 0, 1]),
        ];
        Self::from_monomials(3, DVector::from_vec(vec![0.0, 0.0, p.beta]), &terms)
            .expect("reactor drift is quadratic")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn quadratic(&self) -> &[DMatrix<f64>] {
        &self.q
    }

    pub fn noise(&self) -> &DVector<f64> {
        &self.g
    }

    /// `c + L x + (xᵀ Q_i x)_i`.
    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut f = &self.c + &self.l * x;
        for (i, qi) in self.q.iter().enumerate() {
            f[i] += x.dot(&(qi * x));
        }
        f
    }
}

/// Augmented bilinear SDE `dξ = (A0 + A ξ) dt + (G + D ξ) dB`.
///
/// The first `n` coordinates are the physical state, the remaining
/// `n(n+1)/2` the reduced second Kronecker power. Blocks follow that split:
/// `A11` is n×n, `A12` n×m, `A21` m×n, `A22` m×m with `m = n(n+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearSystem {
    n: usize,
    pub a0: DVector<f64>,
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub g: DVector<f64>,
    /// White-noise intensity; unit-intensity Brownian motion.
    pub qw: f64,
}

impl BilinearSystem {
    fn zeros(n: usize) -> Self {
        let dim = n + n * (n + 1) / 2;
        Self {
            n,
            a0: DVector::zeros(dim),
            a: DMatrix::zeros(dim, dim),
            d: DMatrix::zeros(dim, dim),
            g: DVector::zeros(dim),
            qw: 1.0,
        }
    }

    /// Physical state dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Augmented dimension `n + n(n+1)/2`.
    pub fn dim(&self) -> usize {
        self.a0.len()
    }

    fn m(&self) -> usize {
        self.dim() - self.n
    }

    pub fn a01(&self) -> DVector<f64> {
        self.a0.rows(0, self.n).clone_owned()
    }
    pub fn a02(&self) -> DVector<f64> {
        self.a0.rows(self.n, self.m()).clone_owned()
    }
    pub fn a11(&self) -> DMatrix<f64> {
        self.a.view((0, 0), (self.n, self.n)).clone_owned()
    }
    pub fn a12(&self) -> DMatrix<f64> {
        self.a.view((0, self.n), (self.n, self.m())).clone_owned()
    }
    pub fn a21(&self) -> DMatrix<f64> {
        self.a.view((self.n, 0), (self.m(), self.n)).clone_owned()
    }
    pub fn a22(&self) -> DMatrix<f64> {
        self.a
            .view((self.n, self.n), (self.m(), self.m()))
            .clone_owned()
    }
    pub fn d11(&self) -> DMatrix<f64> {
        self.d.view((0, 0), (self.n, self.n)).clone_owned()
    }
    pub fn d12(&self) -> DMatrix<f64> {
        self.d.view((0, self.n), (self.n, self.m())).clone_owned()
    }
    pub fn d21(&self) -> DMatrix<f64> {
        self.d.view((self.n, 0), (self.m(), self.n)).clone_owned()
    }
    pub fn d22(&self) -> DMatrix<f64> {
        self.d
            .view((self.n, self.n), (self.m(), self.m()))
            .clone_owned()
    }
    pub fn g1(&self) -> DVector<f64> {
        self.g.rows(0, self.n).clone_owned()
    }
    pub fn g2(&self) -> DVector<f64> {
        self.g.rows(self.n, self.m()).clone_owned()
    }

    /// Drift of the augmented SDE, `A0 + A ξ`.
    pub fn augmented_drift(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.a0 + &self.a * xi
    }

    /// Diffusion column of the augmented SDE, `G + D ξ`.
    pub fn augmented_diffusion(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.d * xi
    }

    /// Lifts a physical state onto the consistency manifold `(x, x ⊗ x)`.
    pub fn lift(&self, x: &[f64]) -> Result<DVector<f64>> {
        let map = MonomialIndexMap::pairs(self.n)?;
        let sq = map.reduce_square(x)?;
        Ok(DVector::from_iterator(
            self.dim(),
            x.iter().copied().chain(sq),
        ))
    }

    /// Plain-text dump of the nontrivial blocks, row-major, `%.12e` entries.
    pub fn dump_blocks(&self) -> String {
        let mut out = String::new();
        let blocks = [
            ("A11", self.a11()),
            ("A12", self.a12()),
            ("A22", self.a22()),
            ("D21", self.d21()),
            (
                "G1",
                DMatrix::from_column_slice(self.n, 1, self.g1().as_slice()),
            ),
            (
                "A02",
                DMatrix::from_column_slice(self.m(), 1, self.a02().as_slice()),
            ),
        ];
        for (name, m) in blocks {
            let _ = writeln!(out, "# {name} {}x{}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| sci(m[(r, c)], 12)).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }
}

/// Order-2 Carleman embedding of a quadratic SDE.
pub fn embed_order2(sde: &QuadraticSde, map: &MonomialIndexMap) -> Result<BilinearSystem> {
    let n = sde.n;
    if map.n() != n || map.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "index map built for (n = {}, r = {}), need (n = {n}, r = 2)",
            map.n(),
            map.order()
        )));
    }
    let mut sys = BilinearSystem::zeros(n);

    // Physical rows: the drift is reproduced exactly.
    for i in 0..n {
        sys.a0[i] = sde.c[i];
        for j in 0..n {
            sys.a[(i, j)] = sde.l[(i, j)];
        }
        for (k, t) in map.tuples().enumerate() {
            let (j, l) = (t[0], t[1]);
            sys.a[(i, n + k)] = if j == l {
                sde.q[i][(j, j)]
            } else {
                sde.q[i][(j, l)] + sde.q[i][(l, j)]
            };
        }
        sys.g[i] = sde.g[i];
    }

    // Product rows: x_i f_j + x_j f_i + g_i g_j, degree-3 monomials dropped.
    for (row, t) in map.tuples().enumerate() {
        let r = n + row;
        let (i, j) = (t[0], t[1]);
        for (a, b) in [(i, j), (j, i)] {
            // x_a · f_b, keeping the constant and linear parts of f_b.
            sys.a[(r, a)] += sde.c[b];
            for k in 0..n {
                sys.a[(r, n + map.pair(a, k))] += sde.l[(b, k)];
            }
            // x_a · g_b dB
            sys.d[(r, a)] += sde.g[b];
        }
        sys.a0[r] = sde.g[i] * sde.g[j];
    }
    Ok(sys)
}

/// The reactor's bilinear matrices written out entry by entry.
pub fn build_vandevusse(p: &ReactorParams) -> BilinearSystem {
    let mut sys = BilinearSystem::zeros(3);
    let (k1, k2, k3, caf, v, alpha, beta) = (p.k1, p.k2, p.k3, p.caf, p.v, p.alpha, p.beta);

    #[rustfmt::skip]
    let a11 = [
        [-k1, 0.0, caf / v],
        [k1, -k2, 0.0],
        [0.0, 0.0, -alpha],
    ];
    #[rustfmt::skip]
    let a12 = [
        [-k3, 0.0, -1.0 / v, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, -1.0 / v, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ];
    // Row x1x2 carries -(k1 + k2); the x1x2 coefficient of d(x1 x2) is -k1 - k2.
    #[rustfmt::skip]
    let a22 = [
        [-2.0 * k1, 0.0, 2.0 * caf / v, 0.0, 0.0, 0.0],
        [k1, -(k1 + k2), 0.0, 0.0, caf / v, 0.0],
        [0.0, 0.0, -(alpha + k1), 0.0, 0.0, caf / v],
        [0.0, 2.0 * k1, 0.0, -2.0 * k2, 0.0, 0.0],
        [0.0, 0.0, k1, 0.0, -(alpha + k2), 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -2.0 * alpha],
    ];
    #[rustfmt::skip]
    let d21 = [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [beta, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, beta, 0.0],
        [0.0, 0.0, 2.0 * beta],
    ];

    place(&mut sys.a, 0, 0, &a11);
    place(&mut sys.a, 0, 3, &a12);
    place(&mut sys.a, 3, 3, &a22);
    place(&mut sys.d, 3, 0, &d21);
    sys.g[2] = beta;
    sys.a0[8] = beta * beta;
    sys
}

fn place<const C: usize>(m: &mut DMatrix<f64>, r0: usize, c0: usize, block: &[[f64; C]]) {
    for (r, row) in block.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            m[(r0 + r, c0 + c)] = x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map3() -> MonomialIndexMap {
        MonomialIndexMap::pairs(3).unwrap()
    }

    #[test]
    fn scalar_ou_embedding() {
        let (alpha, beta) = (0.1, 0.044);
        let sde = QuadraticSde::new(
            DVector::from_element(1, 0.0),
            DMatrix::from_element(1, 1, -alpha),
            vec![DMatrix::zeros(1, 1)],
            DVector::from_element(1, beta),
        )
        .unwrap();
        let sys = embed_order2(&sde, &MonomialIndexMap::pairs(1).unwrap()).unwrap();
        assert_eq!(sys.dim(), 2);
        // d(x) = -αx dt + β dB
        assert_eq!(sys.a[(0, 0)], -alpha);
        assert_eq!(sys.a[(0, 1)], 0.0);
        assert_eq!(sys.g[0], beta);
        // d(x²) = (-2αx² + β²) dt + 2βx dB
        assert_eq!(sys.a[(1, 1)], -2.0 * alpha);
        assert_eq!(sys.a[(1, 0)], 0.0);
        assert_eq!(sys.a0[1], beta * beta);
        assert_eq!(sys.d[(1, 0)], 2.0 * beta);
        assert_eq!(sys.d[(1, 1)], 0.0);
        assert_eq!(sys.g[1], 0.0);
    }

    #[test]
    fn builder_matches_explicit_matrices() {
        for p in [ReactorParams::SET1, ReactorParams::SET2] {
            let generic = embed_order2(&QuadraticSde::van_de_vusse(&p), &map3()).unwrap();
            let explicit = build_vandevusse(&p);
            assert_eq!(generic.a0, explicit.a0);
            assert_eq!(generic.a, explicit.a);
            assert_eq!(generic.d, explicit.d);
            assert_eq!(generic.g, explicit.g);
            assert_eq!(generic.dim(), 9);
        }
    }

    #[test]
    fn explicit_block_structure() {
        let p = ReactorParams::SET1;
        let sys = build_vandevusse(&p);
        assert!((sys.a11()[(0, 2)] - 0.00027).abs() < 1e-18);
        assert!((sys.a02()[5] - 0.001936).abs() < 1e-18);
        assert!(sys.a21().iter().all(|&x| x == 0.0));
        assert!(sys.d11().iter().all(|&x| x == 0.0));
        assert!(sys.d12().iter().all(|&x| x == 0.0));
        assert!(sys.d22().iter().all(|&x| x == 0.0));
        assert!(sys.g2().iter().all(|&x| x == 0.0));
        assert_eq!(sys.a01(), DVector::zeros(3));
        assert_eq!(sys.a02().iter().filter(|&&x| x != 0.0).count(), 1);
        assert_eq!(sys.a22()[(1, 1)], -(p.k1 + p.k2));
    }

    #[test]
    fn noiseless_embedding_has_no_diffusion() {
        let sde = QuadraticSde::van_de_vusse(&ReactorParams::SET1.with_beta(0.0));
        let sys = embed_order2(&sde, &map3()).unwrap();
        assert!(sys.d.iter().all(|&x| x == 0.0));
        assert!(sys.g.iter().all(|&x| x == 0.0));
        assert!(sys.a02().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_cubic_terms() {
        let terms = [DriftTerm::new(0, 1.0, &[3, 0])];
        let err = QuadraticSde::from_monomials(2, DVector::zeros(2), &terms).unwrap_err();
        assert!(matches!(err, Error::DegreeTooHigh { degree: 3 }));
        let terms = [DriftTerm::new(1, 1.0, &[1, 1, 1])];
        assert!(QuadraticSde::from_monomials(3, DVector::zeros(3), &terms).is_err());
    }

    #[test]
    fn wrong_map_rejected() {
        let sde = QuadraticSde::van_de_vusse(&ReactorParams::SET1);
        assert!(embed_order2(&sde, &MonomialIndexMap::pairs(2).unwrap()).is_err());
        assert!(embed_order2(&sde, &MonomialIndexMap::new(3, 3).unwrap()).is_err());
    }

    #[test]
    fn coefficient_form_reproduces_model_drift() {
        let p = ReactorParams::SET2;
        let sde = QuadraticSde::van_de_vusse(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = nalgebra::Vector3::new(
                rng.random_range(-2.0..4.0),
                rng.random_range(-2.0..4.0),
                rng.random_range(-1.0..1.0),
            );
            let f = sde.drift(&DVector::from_column_slice(x.as_slice()));
            let want = crate::model::drift(&x, &p);
            for i in 0..3 {
                assert!((f[i] - want[i]).abs() < 1e-14);
            }
        }
        for qi in sde.quadratic() {
            assert_eq!(qi, &qi.transpose());
        }
    }

    #[test]
    fn augmented_drift_examples() {
        let p = ReactorParams::SET1;
        let sys = build_vandevusse(&p);
        assert_eq!(sys.augmented_drift(&DVector::zeros(9)), sys.a0);

        let xi = sys.lift(&crate::model::SET1_X0).unwrap();
        let f = sys.augmented_drift(&xi);
        let want = crate::model::drift(&nalgebra::Vector3::from(crate::model::SET1_X0), &p);
        for i in 0..3 {
            assert!((f[i] - want[i]).abs() < 1e-15, "{} vs {}", f[i], want[i]);
        }

        let mut e = DVector::zeros(9);
        e[8] = 1.0;
        let f = sys.augmented_drift(&e);
        assert!((f[8] - (-0.2 + 0.001936)).abs() < 1e-16);
    }

    /// Degree-3 terms of x_i f_j + x_j f_i, written out by hand for each product row.
    fn dropped_cubic_terms(x: &[f64; 3], p: &ReactorParams) -> [f64; 6] {
        let [x1, x2, x3] = *x;
        let (k3, v) = (p.k3, p.v);
        [
            -2.0 * k3 * x1 * x1 * x1 - 2.0 / v * x1 * x1 * x3,
            -k3 * x1 * x1 * x2 - 2.0 / v * x1 * x2 * x3,
            -k3 * x1 * x1 * x3 - 1.0 / v * x1 * x3 * x3,
            -2.0 / v * x2 * x2 * x3,
            -1.0 / v * x2 * x3 * x3,
            0.0,
        ]
    }

    #[test]
    fn truncation_drops_exactly_the_cubic_terms() {
        let p = ReactorParams::SET1;
        let sys = build_vandevusse(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = [
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ];
            let xv = nalgebra::Vector3::from(x);
            let f = crate::model::drift(&xv, &p);
            let g = crate::model::diffusion(&p);
            let lifted = sys.augmented_drift(&sys.lift(&x).unwrap());
            let dropped = dropped_cubic_terms(&x, &p);
            for (k, (i, j)) in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
                .into_iter()
                .enumerate()
            {
                let ito = x[i] * f[j] + x[j] * f[i] + g[i] * g[j];
                let residual = ito - lifted[3 + k];
                assert!(
                    (residual - dropped[k]).abs() < 1e-12,
                    "row {k}: {residual} vs {}",
                    dropped[k]
                );
            }
        }
    }

    #[test]
    fn truncation_residual_is_homogeneous_cubic() {
        let p = ReactorParams::SET2;
        let sys = build_vandevusse(&p.with_beta(0.0));
        let residual = |x: [f64; 3]| {
            let f = crate::model::drift(&nalgebra::Vector3::from(x), &p);
            let lifted = sys.augmented_drift(&sys.lift(&x).unwrap());
            let map = map3();
            (0..6)
                .map(|k| {
                    let t = map.tuple(k);
                    x[t[0]] * f[t[1]] + x[t[1]] * f[t[0]] - lifted[3 + k]
                })
                .collect::<Vec<_>>()
        };
        let x = [0.7, -1.3, 0.4];
        let r1 = residual(x);
        let r2 = residual(x.map(|v| 2.0 * v));
        for (a, b) in r1.iter().zip(&r2) {
            assert!((8.0 * a - b).abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn dump_has_six_blocks() {
        let dump = build_vandevusse(&ReactorParams::SET1).dump_blocks();
        let headers: Vec<&str> = dump.lines().filter(|l| l.starts_with('#')).collect();
        assert_eq!(
            headers,
            [
                "# A11 3x3",
                "# A12 3x6",
                "# A22 6x6",
                "# D21 6x3",
                "# G1 3x1",
                "# A02 6x1"
            ]
        );
        assert!(dump.contains("2.700000000000e-04"));
        assert!(dump.contains("1.936000000000e-03"));
    }
}
