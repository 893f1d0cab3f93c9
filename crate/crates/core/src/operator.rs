//! Sector-tagged sparse complex matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{DMat, HermitianEigen};
use crate::C64;

/// Largest dimension for which dense factorizations are attempted.
pub const DENSE_LIMIT: usize = 5000;

/// Which Hilbert space a matrix acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectorTag {
    Fock { sites: usize, n_up: usize, n_down: usize },
    /// Anything that is not a single Fock sector: random test matrices,
    /// extended (Sambe) spaces.
    Generic { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hint {
    Hermitian,
    AntiHermitian,
    General,
}

/// Square sparse matrix in compressed-row form. Entries are kept sorted by
/// (row, col) and exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    sector: SectorTag,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hint: Hint,
}

impl OperatorMatrix {
    pub fn zeros(sector: SectorTag, dim: usize) -> Self {
        OperatorMatrix {
            sector,
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hint: Hint::Hermitian,
        }
    }

    pub fn identity(sector: SectorTag, dim: usize) -> Self {
        Self::from_diagonal(sector, &vec![C64::new(1.0, 0.0); dim])
    }

    /// Duplicates are summed; exact zeros are dropped.
    pub fn from_triplets(sector: SectorTag, dim: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trips.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        let mut i = 0;
        while i < trips.len() {
            let (r, c, mut v) = trips[i];
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside dimension {dim}");
            i += 1;
            while i < trips.len() && trips[i].0 == r && trips[i].1 == c {
                v += trips[i].2;
                i += 1;
            }
            if v != C64::zero() {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix { sector, dim, row_ptr, cols, vals, hint: Hint::General }
    }

    pub fn from_diagonal(sector: SectorTag, diag: &[C64]) -> Self {
        let trips = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let m = Self::from_triplets(sector, diag.len(), trips);
        let hint = if diag.iter().all(|z| z.im == 0.0) {
            Hint::Hermitian
        } else if diag.iter().all(|z| z.re == 0.0) {
            Hint::AntiHermitian
        } else {
            Hint::General
        };
        m.with_hint(hint)
    }

    pub fn from_real_diagonal(sector: SectorTag, diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(sector, &d)
    }

    pub fn from_dense(sector: SectorTag, a: &DMat) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let mut trips = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = a[(r, c)];
                if v != C64::zero() {
                    trips.push((r, c, v));
                }
            }
        }
        Self::from_triplets(sector, n, trips)
    }

    /// Set the hint without checking it.
    pub fn with_hint(mut self, hint: Hint) -> Self {
        self.hint = hint;
        self
    }

    /// Set the hint after checking it to `tol` in max norm.
    pub fn checked_hint(self, hint: Hint, tol: f64) -> Result<Self> {
        let defect = match hint {
            Hint::Hermitian => self.hermiticity_defect(),
            Hint::AntiHermitian => self.anti_hermiticity_defect(),
            Hint::General => 0.0,
        };
        if defect > tol {
            return Err(Error::Contract(format!("{hint:?} hint violated by {defect:e}")));
        }
        Ok(self.with_hint(hint))
    }

    pub fn sector(&self) -> SectorTag {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hint(&self) -> Hint {
        self.hint
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// All stored entries in (row, col) order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn to_dense(&self) -> DMat {
        let mut a = DMat::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            a[(r, c)] = v;
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// ‖self − other‖_max.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub_raw(&self.adjoint(), C64::new(1.0, 0.0)).max_abs()
    }

    /// ‖A + A†‖_max.
    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.sub_raw(&self.adjoint(), C64::new(-1.0, 0.0)).max_abs()
    }

    pub fn same_space(&self, other: &Self) -> Result<()> {
        if self.sector != other.sector || self.dim != other.dim {
            return Err(Error::Domain(format!(
                "sector mismatch: {:?} (dim {}) vs {:?} (dim {})",
                self.sector, self.dim, other.sector, other.dim
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut count = vec![0usize; n + 1];
        for &c in &self.cols {
            count[c + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![C64::zero(); self.nnz()];
        for r in 0..n {
            for (c, v) in self.row(r) {
                let k = next[c];
                cols[k] = r;
                vals[k] = v.conj();
                next[c] += 1;
            }
        }
        OperatorMatrix { sector: self.sector, dim: n, row_ptr, cols, vals, hint: self.hint }
    }

    pub fn scale(&self, z: C64) -> Self {
        if z == C64::zero() {
            return Self::zeros(self.sector, self.dim);
        }
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= z;
        }
        out.vals.retain(|v| *v != C64::zero());
        if out.vals.len() != self.vals.len() {
            // underflow removed entries; rebuild the structure
            return Self::from_triplets(
                self.sector,
                self.dim,
                self.triplets().map(|(r, c, v)| (r, c, v * z)).collect(),
            )
            .with_hint(scaled_hint(self.hint, z));
        }
        out.hint = scaled_hint(self.hint, z);
        out
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// self − z·other, without sector checks.
    fn sub_raw(&self, other: &Self, z: C64) -> Self {
        self.axpy_raw(other, -z)
    }

    fn axpy_raw(&self, other: &Self, z: C64) -> Self {
        let n = self.dim;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..n {
            let (mut i, ie) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut k, ke) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while i < ie || k < ke {
                let ci = if i < ie { self.cols[i] } else { usize::MAX };
                let ck = if k < ke { other.cols[k] } else { usize::MAX };
                let (c, v) = if ci < ck {
                    i += 1;
                    (ci, self.vals[i - 1])
                } else if ck < ci {
                    k += 1;
                    (ck, z * other.vals[k - 1])
                } else {
                    i += 1;
                    k += 1;
                    (ci, self.vals[i - 1] + z * other.vals[k - 1])
                };
                if v != C64::zero() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let hint = if other.nnz() == 0 {
            self.hint
        } else if self.nnz() == 0 {
            scaled_hint(other.hint, z)
        } else if self.hint == scaled_hint(other.hint, z) {
            self.hint
        } else {
            Hint::General
        };
        OperatorMatrix { sector: self.sector, dim: n, row_ptr, cols, vals, hint }
    }

    /// self + z·other.
    pub fn axpy(&self, other: &Self, z: C64) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.axpy_raw(other, z))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.axpy(other, C64::new(1.0, 0.0))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.axpy(other, C64::new(-1.0, 0.0))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(self.mul_raw(other))
    }

    fn mul_raw(&self, other: &Self) -> Self {
        let n = self.dim;
        if n >= 64 && self.nnz() > n * n / 8 && other.nnz() > n * n / 8 {
            return Self::from_dense(self.sector, &(self.to_dense() * other.to_dense()));
        }
        let mut acc = vec![C64::zero(); n];
        let mut mark = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..n {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::zero();
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C64::zero() {
                    cols.push(c);
                    vals.push(acc[c]);
                }
            }
            row_ptr.push(cols.len());
        }
        OperatorMatrix { sector: self.sector, dim: n, row_ptr, cols, vals, hint: Hint::General }
    }

    /// Project onto the hinted symmetry class: (A ± A†)/2. General matrices
    /// are returned unchanged.
    pub fn enforce_hint(self) -> Self {
        let sign = match self.hint {
            Hint::Hermitian => 1.0,
            Hint::AntiHermitian => -1.0,
            Hint::General => return self,
        };
        let hint = self.hint;
        let adj = self.adjoint();
        self.axpy_raw(&adj, C64::new(sign, 0.0)).scale_real(0.5).with_hint(hint)
    }

    /// y = A x.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut s = C64::zero();
            for (c, v) in self.row(r) {
                s += v * x[c];
            }
            y[r] = s;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        let y = self.matvec(psi);
        psi.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    /// The entries of rows and columns listed in `keep`, as a new `Generic` matrix.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        let trips = self
            .triplets()
            .filter(|(r, c, _)| pos[*r] != usize::MAX && pos[*c] != usize::MAX)
            .map(|(r, c, v)| (pos[r], pos[c], v))
            .collect();
        Self::from_triplets(SectorTag::Generic { dim: keep.len() }, keep.len(), trips).with_hint(self.hint)
    }

    /// Same entries, relabelled to another sector tag of equal dimension.
    pub fn retag(mut self, sector: SectorTag) -> Self {
        self.sector = sector;
        self
    }

    /// Off-diagonal part and diagonal part: A = off + diag.
    pub fn split_diagonal(&self) -> (Self, Self) {
        let off = Self::from_triplets(
            self.sector,
            self.dim,
            self.triplets().filter(|(r, c, _)| r != c).collect(),
        )
        .with_hint(self.hint);
        let diag = Self::from_triplets(
            self.sector,
            self.dim,
            self.triplets().filter(|(r, c, _)| r == c).collect(),
        )
        .with_hint(self.hint);
        (off, diag)
    }
}

fn scaled_hint(h: Hint, z: C64) -> Hint {
    if z.im == 0.0 {
        h
    } else if z.re == 0.0 {
        match h {
            Hint::Hermitian => Hint::AntiHermitian,
            Hint::AntiHermitian => Hint::Hermitian,
            Hint::General => Hint::General,
        }
    } else {
        Hint::General
    }
}

/// [A, B] = AB − BA. Hints propagate: two Hermitian (or two anti-Hermitian)
/// operands give an anti-Hermitian result, mixed operands a Hermitian one.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.same_space(b)?;
    let ab = a.mul_raw(b);
    let ba = b.mul_raw(a);
    let hint = match (a.hint, b.hint) {
        (Hint::Hermitian, Hint::Hermitian) | (Hint::AntiHermitian, Hint::AntiHermitian) => Hint::AntiHermitian,
        (Hint::Hermitian, Hint::AntiHermitian) | (Hint::AntiHermitian, Hint::Hermitian) => Hint::Hermitian,
        _ => Hint::General,
    };
    Ok(ab.axpy_raw(&ba, C64::new(-1.0, 0.0)).with_hint(hint).enforce_hint())
}

/// exp(A) for anti-Hermitian A, through the spectral decomposition of the
/// Hermitian matrix −iA.
pub fn unitary_exp(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    let defect = a.anti_hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::Contract(format!("unitary_exp needs an anti-Hermitian input, ‖A + A†‖ = {defect:e}")));
    }
    if a.dim > DENSE_LIMIT {
        return Err(Error::Domain(format!("dimension {} exceeds the dense limit", a.dim)));
    }
    if a.nnz() == 0 {
        return Ok(OperatorMatrix::identity(a.sector, a.dim));
    }
    let k = a.to_dense() * C64::new(0.0, -1.0);
    let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    let eig = HermitianEigen::new(&k);
    let u = eig.apply_fn(|x| C64::new(0.0, x).exp());
    Ok(OperatorMatrix::from_dense(a.sector, &u))
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    /// Panics on a sector mismatch; use [`OperatorMatrix::try_add`] to get an error instead.
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_add(rhs).expect("operator sum")
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_sub(rhs).expect("operator difference")
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_mul(rhs).expect("operator product")
    }
}

impl Mul<C64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, z: C64) -> OperatorMatrix {
        self.scale(z)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, x: f64) -> OperatorMatrix {
        self.scale_real(x)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const G: SectorTag = SectorTag::Generic { dim: 3 };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dense_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n)
    }

    fn from_pairs(n: usize, v: &[(f64, f64)]) -> OperatorMatrix {
        let mut a = DMat::zeros(n, n);
        for r in 0..n {
            for k in 0..n {
                let (x, y) = v[r * n + k];
                // sparsify a little so structural code paths get exercised
                if (r + 2 * k) % 3 != 0 {
                    a[(r, k)] = c(x, y);
                }
            }
        }
        OperatorMatrix::from_dense(SectorTag::Generic { dim: n }, &a)
    }

    #[test]
    fn triplets_are_summed_sorted_and_zero_free() {
        let m = OperatorMatrix::from_triplets(
            G,
            3,
            vec![(2, 0, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (2, 0, c(-1.0, 0.0)), (0, 0, c(0.5, 0.0))],
        );
        let t: Vec<_> = m.triplets().collect();
        assert_eq!(t, vec![(0, 0, c(0.5, 0.0)), (0, 1, c(2.0, 0.0))]);
    }

    #[test]
    fn commutator_of_a_with_itself_vanishes() {
        let a = OperatorMatrix::from_triplets(G, 3, vec![(0, 1, c(1.0, 2.0)), (2, 1, c(-3.0, 0.0))]);
        assert_eq!(commutator(&a, &a).unwrap().nnz(), 0);
    }

    #[test]
    fn commutator_rejects_mismatched_sectors() {
        let a = OperatorMatrix::identity(G, 3);
        let b = OperatorMatrix::identity(SectorTag::Fock { sites: 3, n_up: 1, n_down: 0 }, 3);
        assert!(matches!(commutator(&a, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn unitary_exp_of_zero_is_identity() {
        let z = OperatorMatrix::zeros(G, 3);
        assert_eq!(unitary_exp(&z).unwrap(), OperatorMatrix::identity(G, 3));
    }

    #[test]
    fn unitary_exp_of_diagonal_phase() {
        let theta = 0.7;
        let n = [0.0, 1.0, 2.0];
        let a = OperatorMatrix::from_diagonal(G, &n.map(|x| c(0.0, theta * x)));
        let u = unitary_exp(&a).unwrap();
        for (i, &x) in n.iter().enumerate() {
            assert!((u.get(i, i) - c(0.0, theta * x).exp()).norm() < 1e-12);
        }
        assert!(u.triplets().all(|(r, c, v)| r == c || v.norm() < 1e-14));
    }

    #[test]
    fn unitary_exp_rejects_hermitian_input() {
        let a = OperatorMatrix::identity(G, 3);
        assert!(matches!(unitary_exp(&a), Err(Error::Contract(_))));
    }

    #[test]
    fn unitary_exp_matches_taylor_series() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let mut x = DMat::zeros(n, n);
        for r in 0..n {
            for k in 0..n {
                x[(r, k)] = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            }
        }
        let anti = (&x - x.adjoint()) * c(0.5, 0.0);
        let a = OperatorMatrix::from_dense(SectorTag::Generic { dim: n }, &anti);
        let u = unitary_exp(&a).unwrap().to_dense();
        // 30-term Taylor oracle
        let mut term = DMat::identity(n, n);
        let mut sum = DMat::identity(n, n);
        for k in 1..30 {
            term = &term * &anti * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        assert!(crate::linalg::max_abs(&(&u - &sum)) < 1e-10);
        assert!(crate::linalg::unitarity_defect(&u) < 1e-10);
    }

    proptest! {
        #[test]
        fn sparse_ops_match_dense(va in dense_strategy(5), vb in dense_strategy(5), zr in -2.0f64..2.0, zi in -2.0f64..2.0) {
            let a = from_pairs(5, &va);
            let b = from_pairs(5, &vb);
            let (da, db) = (a.to_dense(), b.to_dense());
            let z = c(zr, zi);
            prop_assert!(crate::linalg::max_abs(&((&a * &b).to_dense() - &da * &db)) < 1e-12);
            prop_assert!(crate::linalg::max_abs(&(a.axpy(&b, z).unwrap().to_dense() - (&da + &db * z))) < 1e-12);
            prop_assert!(crate::linalg::max_abs(&(a.adjoint().to_dense() - da.adjoint())) == 0.0);
            let comm = commutator(&a, &b).unwrap().to_dense();
            prop_assert!(crate::linalg::max_abs(&(comm - (&da * &db - &db * &da))) < 1e-12);
        }

        #[test]
        fn commutator_hints_hold(va in dense_strategy(4), vb in dense_strategy(4)) {
            let a = from_pairs(4, &va);
            let b = from_pairs(4, &vb);
            let ha = (&a + &a.adjoint()).with_hint(Hint::Hermitian);
            let hb = (&b + &b.adjoint()).with_hint(Hint::Hermitian);
            let k = commutator(&ha, &hb).unwrap();
            prop_assert_eq!(k.hint(), Hint::AntiHermitian);
            prop_assert!(k.anti_hermiticity_defect() <= 1e-12);
            let h = commutator(&k, &ha).unwrap();
            prop_assert_eq!(h.hint(), Hint::Hermitian);
            prop_assert!(h.hermiticity_defect() <= 1e-12);
        }
    }
}
