//! Operator Sylvester equations C + [f, H0] − s f = 0.
//!
//! Solvers: eigenbasis division ([`SpectralSolver`]), elementwise division
//! for diagonal H0 ([`solve_diagonal`]) and the expansion in powers of the
//! off-diagonal part of H0 ([`solve_hopping_series`]). Oracles: a direct
//! Hessenberg–Schur factorization of the Kronecker system, the literal
//! vectorized dense system for tiny dimensions, and Simpson quadrature of the
//! damped Laplace integral.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Hessenberg, Schur};
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{DMat, HermitianEigen};
use crate::operator::{commutator, Hint, OperatorMatrix, DENSE_LIMIT};
use crate::C64;

/// C + [f, H0] − shift·f = 0 for the unknown f.
#[derive(Debug, Clone, Copy)]
pub struct SylvesterProblem<'a> {
    pub h0: &'a OperatorMatrix,
    pub rhs: &'a OperatorMatrix,
    pub shift: f64,
}

impl<'a> SylvesterProblem<'a> {
    pub fn new(h0: &'a OperatorMatrix, rhs: &'a OperatorMatrix, shift: f64) -> Result<Self> {
        h0.same_space(rhs)?;
        Ok(SylvesterProblem { h0, rhs, shift })
    }

    fn check(&self) -> Result<()> {
        self.h0.same_space(self.rhs)?;
        if self.shift == 0.0 || !self.shift.is_finite() {
            return Err(Error::Domain(format!("shift must be finite and nonzero, got {}", self.shift)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonancePolicy {
    /// Raise a resonance error (default).
    Fail,
    /// Set resonant entries of the solution to zero.
    ZeroResonant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Denominators at or below this magnitude count as resonant. `None`
    /// selects 1e−8 × max(|shift|, spectral spread of H0).
    pub res_tol: Option<f64>,
    pub policy: ResonancePolicy,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { res_tol: None, policy: ResonancePolicy::Fail }
    }
}

impl SolveOptions {
    fn tol(&self, shift: f64, spread: f64) -> f64 {
        self.res_tol.unwrap_or(1e-8 * shift.abs().max(spread))
    }
}

/// Entries of the rotated source below this fraction of its largest entry
/// are treated as structural zeros when checking for resonances.
const NEGLIGIBLE_SOURCE: f64 = 1e-11;

/// ‖C + [f, H0] − shift·f‖_max.
pub fn residual_norm(f: &OperatorMatrix, prob: &SylvesterProblem) -> Result<f64> {
    f.same_space(prob.h0)?;
    let comm = commutator(f, prob.h0)?;
    Ok(prob.rhs.try_add(&comm)?.axpy(f, C64::new(-prob.shift, 0.0))?.max_abs())
}

/// Eigendecomposition of H0, reusable across sources and shifts.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    eig: HermitianEigen,
    template: OperatorMatrix,
}

impl SpectralSolver {
    pub fn new(h0: &OperatorMatrix) -> Result<Self> {
        if h0.dim() > DENSE_LIMIT {
            return Err(Error::Domain(format!("dimension {} exceeds the dense limit {DENSE_LIMIT}", h0.dim())));
        }
        let defect = h0.hermiticity_defect();
        if defect > 1e-10 * h0.max_abs().max(1.0) {
            return Err(Error::Contract(format!("H0 must be Hermitian (defect {defect:e})")));
        }
        let a = h0.to_dense();
        let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        Ok(SpectralSolver { eig: HermitianEigen::new(&a), template: OperatorMatrix::zeros(h0.sector(), h0.dim()) })
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eig
    }

    pub fn spread(&self) -> f64 {
        self.eig.spread()
    }

    /// min over eigenvalue pairs of |shift − (ε_b − ε_a)|.
    pub fn resonance_margin(&self, shift: f64) -> f64 {
        let e = &self.eig.values;
        let mut m = f64::INFINITY;
        for &ea in e {
            for &eb in e {
                m = m.min((shift - (eb - ea)).abs());
            }
        }
        m
    }

    pub fn solve(&self, rhs: &OperatorMatrix, shift: f64, opts: SolveOptions) -> Result<OperatorMatrix> {
        self.template.same_space(rhs)?;
        if shift == 0.0 || !shift.is_finite() {
            return Err(Error::Domain(format!("shift must be finite and nonzero, got {shift}")));
        }
        if rhs.nnz() == 0 {
            return Ok(self.template.clone().with_hint(Hint::General));
        }
        let tol = opts.tol(shift, self.spread());
        let mut ct = self.eig.to_eigenbasis(&rhs.to_dense());
        let scale = crate::linalg::max_abs(&ct);
        let e = &self.eig.values;
        let n = e.len();
        for b in 0..n {
            for a in 0..n {
                let gap = e[b] - e[a];
                let den = shift - gap;
                if den.abs() <= tol {
                    if ct[(a, b)].norm() > NEGLIGIBLE_SOURCE * scale && opts.policy == ResonancePolicy::Fail {
                        return Err(Error::resonance(gap, shift, "eigenvalue difference"));
                    }
                    ct[(a, b)] = C64::zero();
                } else {
                    ct[(a, b)] /= den;
                }
            }
        }
        Ok(OperatorMatrix::from_dense(rhs.sector(), &self.eig.from_eigenbasis(&ct)))
    }
}

/// f_ab = C_ab / (shift − (ε_b − ε_a)) in the eigenbasis of H0.
pub fn solve_spectral(prob: &SylvesterProblem, res_tol: Option<f64>) -> Result<OperatorMatrix> {
    prob.check()?;
    SpectralSolver::new(prob.h0)?.solve(prob.rhs, prob.shift, SolveOptions { res_tol, ..Default::default() })
}

/// f_ab = C_ab / (shift − (D_bb − D_aa)) on the support of C, for diagonal D.
pub fn solve_diagonal(d: &OperatorMatrix, rhs: &OperatorMatrix, shift: f64, opts: SolveOptions) -> Result<OperatorMatrix> {
    d.same_space(rhs)?;
    if !d.is_diagonal() {
        return Err(Error::Contract("solve_diagonal needs a diagonal H0".into()));
    }
    if shift == 0.0 || !shift.is_finite() {
        return Err(Error::Domain(format!("shift must be finite and nonzero, got {shift}")));
    }
    let diag: Vec<f64> = d.diagonal().iter().map(|z| z.re).collect();
    let spread = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = opts.tol(shift, if spread.is_finite() { spread } else { 0.0 });
    let mut trips = Vec::with_capacity(rhs.nnz());
    for (a, b, v) in rhs.triplets() {
        let gap = diag[b] - diag[a];
        let den = shift - gap;
        if den.abs() <= tol {
            if opts.policy == ResonancePolicy::Fail {
                return Err(Error::resonance(gap, shift, "diagonal energy difference"));
            }
            continue;
        }
        trips.push((a, b, v / den));
    }
    Ok(OperatorMatrix::from_triplets(rhs.sector(), rhs.dim(), trips))
}

/// Terms y_0 … y_N of the solution in powers of the off-diagonal part h.
#[derive(Debug, Clone)]
pub struct HoppingSeriesSolution {
    pub orders: Vec<OperatorMatrix>,
    /// residual_norms[k] = ‖C + [Σ_{n≤k} y_n, H0] − shift Σ_{n≤k} y_n‖_max.
    pub residual_norms: Vec<f64>,
}

impl HoppingSeriesSolution {
    pub fn sum(&self) -> OperatorMatrix {
        sum_terms(&self.orders)
    }
}

pub(crate) fn sum_terms(terms: &[OperatorMatrix]) -> OperatorMatrix {
    let mut it = terms.iter();
    let first = it.next().expect("at least one term").clone();
    it.fold(first, |acc, t| &acc + t)
}

/// Graded solve with H0 = h + D: y_n = solve_diagonal(S_n + [y_{n−1}, h]),
/// where `sources[n]` is the part of the source proportional to hⁿ.
pub fn solve_graded(
    h: &OperatorMatrix,
    d: &OperatorMatrix,
    sources: &[OperatorMatrix],
    shift: f64,
    max_order: usize,
    opts: SolveOptions,
) -> Result<Vec<OperatorMatrix>> {
    h.same_space(d)?;
    let mut out: Vec<OperatorMatrix> = Vec::with_capacity(max_order + 1);
    for n in 0..=max_order {
        let mut src = sources.get(n).cloned().unwrap_or_else(|| OperatorMatrix::zeros(d.sector(), d.dim()));
        src.same_space(d)?;
        if n > 0 {
            src = src.try_add(&commutator(&out[n - 1], h)?)?;
        }
        let y = solve_diagonal(d, &src, shift, opts).map_err(|e| match e {
            Error::Resonance(mut r) => {
                r.hopping_order = Some(n);
                Error::Resonance(r)
            }
            e => e,
        })?;
        out.push(y);
    }
    Ok(out)
}

/// Solve C + [f, h + D] − shift·f = 0 order by order in h, through `max_order` (≤ 4).
pub fn solve_hopping_series(
    h: &OperatorMatrix,
    d: &OperatorMatrix,
    rhs: &OperatorMatrix,
    shift: f64,
    max_order: usize,
    opts: SolveOptions,
) -> Result<HoppingSeriesSolution> {
    if max_order > 4 {
        return Err(Error::Domain(format!("hopping series is limited to order 4, got {max_order}")));
    }
    let orders = solve_graded(h, d, core::slice::from_ref(rhs), shift, max_order, opts)?;
    let h0 = h.try_add(d)?;
    let prob = SylvesterProblem::new(&h0, rhs, shift)?;
    let mut partial = orders[0].clone();
    let mut residual_norms = vec![residual_norm(&partial, &prob)?];
    for y in &orders[1..] {
        partial = &partial + y;
        residual_norms.push(residual_norm(&partial, &prob)?);
    }
    Ok(HoppingSeriesSolution { orders, residual_norms })
}

/// Solve the Kronecker system (I ⊗ (H0 + s) − H0ᵀ ⊗ I) vec f = vec C by a
/// structured direct factorization: Hessenberg reduction of H0 + s, complex
/// Schur form of H0, then one Hessenberg solve per column (Golub–Nash–Van Loan).
/// H0 is treated as a general matrix; no eigendecomposition is used.
pub fn solve_kronecker_oracle(prob: &SylvesterProblem) -> Result<OperatorMatrix> {
    prob.check()?;
    let n = prob.h0.dim();
    if n * n > 1_000_000 {
        return Err(Error::Domain(format!("Kronecker oracle limited to dim² ≤ 1e6, got dim {n}")));
    }
    let b = prob.h0.to_dense();
    let mut a = b.clone();
    for i in 0..n {
        a[(i, i)] += C64::new(prob.shift, 0.0);
    }
    let scale = crate::linalg::max_abs(&b).max(prob.shift.abs());
    let tol = 1e-8 * scale;
    let (p, ha) = Hessenberg::new(a).unpack();
    let (z, t) = schur_with_retries(b, scale)?;
    let cp = p.adjoint() * prob.rhs.to_dense() * &z;
    let mut y = DMat::zeros(n, n);
    let mut col = vec![C64::zero(); n];
    for k in 0..n {
        for r in 0..n {
            let mut s = cp[(r, k)];
            for i in 0..k {
                s += t[(i, k)] * y[(r, i)];
            }
            col[r] = s;
        }
        hessenberg_solve(&ha, t[(k, k)], &mut col, tol).map_err(|piv| {
            Error::resonance(t[(k, k)].re + prob.shift - piv, prob.shift, "singular Kronecker system")
        })?;
        for r in 0..n {
            y[(r, k)] = col[r];
        }
    }
    let x = &p * y * z.adjoint();
    Ok(OperatorMatrix::from_dense(prob.rhs.sector(), &x))
}

/// Complex Schur form B = Z T Z†. The QR iteration can stall on symmetric
/// matrices with zero diagonal (open chains at low filling), so on failure it is
/// rerun on B + σI and σ is removed from T.
fn schur_with_retries(b: DMat, scale: f64) -> Result<(DMat, DMat)> {
    for sigma in [0.0, 0.37, -0.61, 1.13] {
        let mut m = b.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += C64::new(sigma * scale.max(1.0), 0.0);
        }
        if let Some(schur) = Schur::try_new(m, f64::EPSILON, 10_000) {
            let (z, mut t) = schur.unpack();
            for i in 0..t.nrows() {
                t[(i, i)] -= C64::new(sigma * scale.max(1.0), 0.0);
            }
            return Ok((z, t));
        }
    }
    Err(Error::Numeric("Schur iteration did not converge".into()))
}

/// Solve (H − λ I) x = b in place for upper Hessenberg H by Gaussian
/// elimination with adjacent-row pivoting. On a pivot below `tol` returns the
/// pivot magnitude.
fn hessenberg_solve(h: &DMat, lambda: C64, b: &mut [C64], tol: f64) -> core::result::Result<(), f64> {
    let n = b.len();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] -= lambda;
    }
    for k in 0..n.saturating_sub(1) {
        if a[(k + 1, k)].norm() > a[(k, k)].norm() {
            for c in k..n {
                let tmp = a[(k, c)];
                a[(k, c)] = a[(k + 1, c)];
                a[(k + 1, c)] = tmp;
            }
            b.swap(k, k + 1);
        }
        let piv = a[(k, k)];
        if piv.norm() <= tol {
            return Err(piv.norm());
        }
        let m = a[(k + 1, k)] / piv;
        if m != C64::zero() {
            for c in k..n {
                let v = a[(k, c)];
                a[(k + 1, c)] -= m * v;
            }
            let bk = b[k];
            b[k + 1] -= m * bk;
        }
    }
    for k in (0..n).rev() {
        let piv = a[(k, k)];
        if piv.norm() <= tol {
            return Err(piv.norm());
        }
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[(k, c)] * b[c];
        }
        b[k] = s / piv;
    }
    Ok(())
}

/// The literal dim² × dim² vectorized system solved by dense LU. Only for
/// tiny dimensions (dim ≤ 24); used to cross-check the structured oracle.
pub fn solve_vectorized_dense(prob: &SylvesterProblem) -> Result<OperatorMatrix> {
    prob.check()?;
    let n = prob.h0.dim();
    if n > 24 {
        return Err(Error::Domain(format!("vectorized dense solve limited to dim ≤ 24, got {n}")));
    }
    let h = prob.h0.to_dense();
    let c = prob.rhs.to_dense();
    let nn = n * n;
    // column-major vec: vec(f)[r + n·k] = f[r, k]
    let mut k = DMat::zeros(nn, nn);
    for col in 0..n {
        for r in 0..n {
            let row = r + n * col;
            // ((H0 + s) f)[r, col] = Σ_i (H0 + s)[r, i] f[i, col]
            for i in 0..n {
                k[(row, i + n * col)] += h[(r, i)];
            }
            k[(row, r + n * col)] += C64::new(prob.shift, 0.0);
            // −(f H0)[r, col] = −Σ_i f[r, i] H0[i, col]
            for i in 0..n {
                k[(row, r + n * i)] -= h[(i, col)];
            }
        }
    }
    let mut rhs = nalgebra::DVector::zeros(nn);
    for col in 0..n {
        for r in 0..n {
            rhs[r + n * col] = c[(r, col)];
        }
    }
    let lu = k.lu();
    let x = lu.solve(&rhs).ok_or_else(|| Error::resonance(0.0, prob.shift, "singular vectorized system"))?;
    let mut f = DMat::zeros(n, n);
    for col in 0..n {
        for r in 0..n {
            f[(r, col)] = x[r + n * col];
        }
    }
    Ok(OperatorMatrix::from_dense(prob.rhs.sector(), &f))
}

/// Result of the quadrature oracle with its error estimate.
#[derive(Debug, Clone)]
pub struct LaplaceEstimate {
    pub solution: OperatorMatrix,
    /// Estimated max-norm error: damping bias + truncation tail + Simpson
    /// discretization.
    pub error_estimate: f64,
}

/// −i ∫₀^{t_max} dτ e^{i s τ − η τ} e^{i H0 τ} C e^{−i H0 τ} by composite
/// Simpson with `steps` intervals (rounded up to even). Error model:
/// O(η) bias from the damping, O(e^{−η t_max}) truncation tail, and the
/// Simpson term O(h⁴ Ω⁴) with Ω the largest integrand frequency.
pub fn laplace_oracle(prob: &SylvesterProblem, t_max: f64, steps: usize, damping: f64) -> Result<LaplaceEstimate> {
    laplace_oracle_extrapolated(prob, t_max, steps, damping, 1)
}

/// As [`laplace_oracle`], but evaluates the integral at dampings η·2^m for
/// m < `levels` in a single sweep and Richardson-extrapolates η → 0⁺,
/// which removes the bias through order η^{levels−1}.
pub fn laplace_oracle_extrapolated(
    prob: &SylvesterProblem,
    t_max: f64,
    steps: usize,
    damping: f64,
    levels: usize,
) -> Result<LaplaceEstimate> {
    prob.check()?;
    if !(damping > 0.0) || !(t_max > 0.0) || steps == 0 || levels == 0 {
        return Err(Error::Domain("laplace oracle needs damping > 0, t_max > 0, steps ≥ 1, levels ≥ 1".into()));
    }
    let n = prob.h0.dim();
    let steps = steps + steps % 2;
    let h = t_max / steps as f64;
    let eig = HermitianEigen::new(&prob.h0.to_dense());
    // R = e^{i H0 h}; W_k = R^k C R^{−k}
    let r = eig.apply_fn(|e| C64::new(0.0, e * h).exp());
    let rd = r.adjoint();
    let mut w = prob.rhs.to_dense();
    let etas: Vec<f64> = (0..levels).map(|m| damping * (1u64 << m) as f64).collect();
    let mut acc: Vec<DMat> = vec![DMat::zeros(n, n); levels];
    for k in 0..=steps {
        let tau = k as f64 * h;
        let simpson = if k == 0 || k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        for (m, &eta) in etas.iter().enumerate() {
            let weight = C64::new(-eta * tau, prob.shift * tau).exp() * C64::new(0.0, -simpson * h / 3.0);
            acc[m] += &w * weight;
        }
        if k < steps {
            w = &r * w * &rd;
        }
    }
    // Richardson on η_m = η 2^m: repeatedly cancel the leading power.
    let mut table = acc;
    for p in 1..levels {
        let factor = (1u64 << p) as f64;
        let next: Vec<DMat> = (0..table.len() - 1)
            .map(|m| (&table[m] * C64::new(factor, 0.0) - &table[m + 1]) * C64::new(1.0 / (factor - 1.0), 0.0))
            .collect();
        table = next;
    }
    let solution = OperatorMatrix::from_dense(prob.rhs.sector(), &table[0]);

    let e = &eig.values;
    let mut gap = f64::INFINITY;
    for &ea in e {
        for &eb in e {
            gap = gap.min((prob.shift - (eb - ea)).abs());
        }
    }
    let c_norm = prob.rhs.frobenius();
    let omega_max = prob.shift.abs() + eig.spread();
    let eta_top = etas[levels - 1];
    let bias = c_norm * (eta_top / gap).powi(levels as i32) / gap;
    let tail = c_norm * (-damping * t_max).exp() / gap.max(damping);
    let quad = c_norm * (h * omega_max).powi(4) / 180.0 * t_max.min(1.0 / damping);
    Ok(LaplaceEstimate { solution, error_estimate: bias + tail + quad })
}
