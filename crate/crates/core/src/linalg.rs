//! Dense helpers on top of nalgebra used by the solvers.

use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

pub type DMat = DMatrix<C64>;

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: DMat,
    /// Same vectors when the input was real symmetric.
    real_vectors: Option<DMatrix<f64>>,
}

impl HermitianEigen {
    pub fn new(a: &DMat) -> Self {
        let n = a.nrows();
        if n == 0 {
            return HermitianEigen { values: Vec::new(), vectors: DMat::zeros(0, 0), real_vectors: None };
        }
        if a.iter().all(|z| z.im == 0.0) {
            return Self::new_real(&a.map(|z| z.re));
        }
        let eig = a.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMat::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        HermitianEigen { values, vectors, real_vectors: None }
    }

    fn new_real(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let eig = a.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut rv = DMatrix::<f64>::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            rv.set_column(k, &eig.eigenvectors.column(i));
        }
        HermitianEigen { values, vectors: rv.map(|x| C64::new(x, 0.0)), real_vectors: Some(rv) }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// max ε − min ε.
    pub fn spread(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// V · diag(φ(ε)) · V†.
    pub fn apply_fn(&self, phi: impl Fn(f64) -> C64) -> DMat {
        let n = self.dim();
        if let Some(v) = &self.real_vectors {
            // V diag(Re φ) Vᵀ + i V diag(Im φ) Vᵀ with real products
            let p: Vec<C64> = self.values.iter().map(|&e| phi(e)).collect();
            let mut re = v.clone();
            let mut im = v.clone();
            for k in 0..n {
                re.column_mut(k).scale_mut(p[k].re);
                im.column_mut(k).scale_mut(p[k].im);
            }
            let (re, im) = (re * v.transpose(), im * v.transpose());
            return DMat::from_fn(n, n, |r, c| C64::new(re[(r, c)], im[(r, c)]));
        }
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let p = phi(self.values[k]);
            for r in 0..n {
                scaled[(r, k)] *= p;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// exp(−i H t).
    pub fn propagator(&self, t: f64) -> DMat {
        self.apply_fn(|e| C64::new(0.0, -e * t).exp())
    }

    /// Rotate `a` into the eigenbasis: V† a V.
    pub fn to_eigenbasis(&self, a: &DMat) -> DMat {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// Rotate back: V a V†.
    pub fn from_eigenbasis(&self, a: &DMat) -> DMat {
        &self.vectors * a * self.vectors.adjoint()
    }
}

pub fn max_abs(a: &DMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// ‖a − I‖_max.
pub fn identity_defect(a: &DMat) -> f64 {
    let mut m: f64 = 0.0;
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            let target = if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            m = m.max((a[(r, c)] - target).norm());
        }
    }
    m
}

/// ‖U†U − I‖_max.
pub fn unitarity_defect(u: &DMat) -> f64 {
    identity_defect(&(u.adjoint() * u))
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
