//! Closed-form Hubbard-chain oracles and the high-frequency-expansion baseline.
//!
//! Every builder assembles its operator term by term from ladder strings and
//! density polynomials, without simplification, so a mismatch against the
//! numeric engine points at one family of terms.

use alloc::format;

use crate::basis::{c, cdag, commutator, diagonal_operator, Ladder, SectorBasis, Spin};
use crate::error::{Error, Result};
use crate::model::{HubbardDriveParams, PeriodicHamiltonian};
use crate::operator::{Hint, OperatorMatrix};
use crate::C64;

/// Relative closeness at which a coefficient denominator counts as resonant.
pub const COEFF_RES_TOL: f64 = 1e-8;

/// A density polynomial a + β n_x + γ n_y + δ n_x n_y, stored by coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityFactor {
    pub constant: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl DensityFactor {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.constant + self.beta * x + self.gamma * y + self.delta * x * y
    }

    /// Coefficients of the unique bilinear polynomial with the given values
    /// at (x, y) = (0,0), (1,0), (0,1), (1,1).
    pub fn from_corners(c00: f64, c10: f64, c01: f64, c11: f64) -> Self {
        DensityFactor { constant: c00, beta: c10 - c00, gamma: c01 - c00, delta: c11 - c10 - c01 + c00 }
    }
}

/// Dimensionless interaction dressings of the Hubbard generators and
/// effective Hamiltonians. Single-primed quantities are suffixed `1`,
/// double-primed ones (same forms at 2ω) `1d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardCoefficients {
    pub beta1: f64,
    pub gamma1: f64,
    pub delta1: f64,
    pub beta1d: f64,
    pub gamma1d: f64,
    pub delta1d: f64,
    pub beta2: f64,
    pub gamma2: f64,
    pub delta2: f64,
    pub beta3: f64,
    pub gamma3: f64,
    pub delta3: f64,
    pub beta4: f64,
    pub gamma4: f64,
    pub delta4: f64,
}

fn guarded(num: f64, den: f64, shift: f64, u: f64, what: &str) -> Result<f64> {
    let scale = shift.abs().max(u.abs()).max(f64::MIN_POSITIVE);
    if den.abs() <= COEFF_RES_TOL * scale {
        return Err(Error::resonance(u, shift, what));
    }
    Ok(num / den)
}

/// (β, γ, δ) = (−U/(w+U), U/(w−U), −β−γ).
fn primed(u: f64, w: f64, tag: &str) -> Result<(f64, f64, f64)> {
    let b = guarded(-u, w + u, w, u, &format!("β{tag} = −U/(ω+U)"))?;
    let g = guarded(u, w - u, w, u, &format!("γ{tag} = U/(ω−U)"))?;
    Ok((b, g, -b - g))
}

impl HubbardCoefficients {
    /// 1 + β′x + γ′y + δ′xy.
    pub fn first(&self) -> DensityFactor {
        DensityFactor { constant: 1.0, beta: self.beta1, gamma: self.gamma1, delta: self.delta1 }
    }

    /// Same at 2ω.
    pub fn first_doubled(&self) -> DensityFactor {
        DensityFactor { constant: 1.0, beta: self.beta1d, gamma: self.gamma1d, delta: self.delta1d }
    }

    pub fn second(&self) -> DensityFactor {
        DensityFactor { constant: 1.0, beta: self.beta2, gamma: self.gamma2, delta: self.delta2 }
    }

    pub fn third(&self) -> DensityFactor {
        DensityFactor { constant: -11.0 / 24.0, beta: self.beta3, gamma: self.gamma3, delta: self.delta3 }
    }

    pub fn fourth(&self) -> DensityFactor {
        DensityFactor { constant: -0.25, beta: self.beta4, gamma: self.gamma4, delta: self.delta4 }
    }
}

/// All dressing coefficients at interaction U and frequency ω.
pub fn hubbard_coefficients(u: f64, omega: f64) -> Result<HubbardCoefficients> {
    if !u.is_finite() || !omega.is_finite() {
        return Err(Error::Domain("non-finite U or omega".into()));
    }
    let (b1, g1, d1) = primed(u, omega, "′")?;
    let (b1d, g1d, d1d) = primed(u, 2.0 * omega, "″")?;
    let b2 = b1 + b1d + b1 * b1d;
    let g2 = g1 + g1d + g1 * g1d;
    let d2 = d1 + d1d + g1 * b1d + g1d * b1 + g1 * d1d + g1d * d1 + b1 * d1d + b1d * d1 + d1 * d1d;

    let p1 = DensityFactor { constant: 1.0, beta: b1, gamma: g1, delta: d1 };
    let q = DensityFactor { constant: -1.0, beta: b1d, gamma: g1d, delta: d1d };
    let corner = |x: f64, y: f64| {
        let p = p1.eval(x, y);
        p * p * q.eval(x, y) / 8.0 - p * p / 3.0
    };
    let third = DensityFactor::from_corners(corner(0.0, 0.0), corner(1.0, 0.0), corner(0.0, 1.0), corner(1.0, 1.0));

    Ok(HubbardCoefficients {
        beta1: b1,
        gamma1: g1,
        delta1: d1,
        beta1d: b1d,
        gamma1d: g1d,
        delta1d: d1d,
        beta2: b2,
        gamma2: g2,
        delta2: d2,
        beta3: third.beta,
        gamma3: third.gamma,
        delta3: third.delta,
        beta4: third.beta + b2 / 24.0 + b1 / 6.0,
        gamma4: third.gamma + g2 / 24.0 + g1 / 6.0,
        delta4: third.delta + d2 / 24.0 + d1 / 6.0,
    })
}

/// Term-by-term accumulator: coeff · (ladder string) · (density polynomial).
struct Terms<'a> {
    basis: &'a SectorBasis,
    acc: OperatorMatrix,
}

impl<'a> Terms<'a> {
    fn new(basis: &'a SectorBasis) -> Self {
        Terms { basis, acc: OperatorMatrix::zeros(basis.tag(), basis.dim()) }
    }

    fn add(&mut self, coeff: f64, ops: &[Ladder], dens: impl Fn(&dyn Fn(usize, Spin) -> f64) -> f64) -> Result<()> {
        let b = self.basis;
        let string = b.string_operator(ops, C64::new(coeff, 0.0))?;
        let poly = diagonal_operator(b, |k| {
            let n = |site: usize, s: Spin| b.occupation(k, site, s) as f64;
            dens(&n)
        });
        let term = string.try_mul(&poly)?;
        self.acc = self.acc.try_add(&term)?;
        Ok(())
    }

    fn finish(self) -> OperatorMatrix {
        self.acc
    }
}

fn check_sites(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<()> {
    p.validate()?;
    if basis.sites() != p.sites {
        return Err(Error::Domain(format!("basis has L = {} but parameters say L = {}", basis.sites(), p.sites)));
    }
    Ok(())
}

/// Σ_s Σ_{i,j} w(i, j) c†_{j,s} c_{i,s} · F(n_{j,s̄}, n_{i,s̄}) over nearest neighbours, with
/// w = +1 for i = j + 1 and `back` for j = i + 1.
fn dressed_hops(basis: &SectorBasis, coeff: f64, back: f64, f: DensityFactor) -> Result<OperatorMatrix> {
    let mut t = Terms::new(basis);
    for s in Spin::BOTH {
        for j in 1..=basis.sites() {
            for i in 1..=basis.sites() {
                let w = if i == j + 1 {
                    1.0
                } else if j == i + 1 {
                    back
                } else {
                    continue;
                };
                t.add(coeff * w, &[cdag(j, s), c(i, s)], |n| f.eval(n(j, s.flip()), n(i, s.flip())))?;
            }
        }
    }
    Ok(t.finish())
}

/// (g/ω) Σ_{j,s} (j + offset) n_{j,s}.
pub fn analytic_y0(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let pre = p.drive_strength / p.omega;
    let mut t = Terms::new(basis);
    for s in Spin::BOTH {
        for j in 1..=basis.sites() {
            t.add(pre * (j as f64 + p.dipole_offset), &[cdag(j, s), c(j, s)], |_| 1.0)?;
        }
    }
    Ok(t.finish())
}

/// (Jg/ω²) Σ_s Σ_{i,j} (δ_{i−j,1} − δ_{j−i,1}) c†_{j,s} c_{i,s} (1 + β′n_{j,s̄} + γ′n_{i,s̄} + δ′n_{j,s̄}n_{i,s̄}).
pub fn analytic_y1(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let pre = p.hopping * p.drive_strength / (p.omega * p.omega);
    dressed_hops(basis, pre, -1.0, k.first())
}

/// J² part of f_1⁽¹⁾: pair hopping, two-site density terms and the six
/// correlated three-site families (bulk sums over j = 2 … L−1).
pub fn analytic_y2(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    use Spin::{Down as D, Up as Uu};
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let (b1, g1, d1) = (k.beta1, k.gamma1, k.delta1);
    let (jj, g, w, u) = (p.hopping, p.drive_strength, p.omega, p.interaction);
    let l = basis.sites();
    let mut t = Terms::new(basis);

    let pre = 2.0 * jj * jj * g / (w * w * w);
    for j in 1..l {
        t.add(pre * (b1 - g1), &[cdag(j, Uu), cdag(j, D), c(j + 1, Uu), c(j + 1, D)], |_| 1.0)?;
        t.add(-pre * (b1 - g1), &[cdag(j + 1, Uu), cdag(j + 1, D), c(j, Uu), c(j, D)], |_| 1.0)?;
        t.add(pre, &[], |n| {
            let nj = n(j, Uu) + n(j, D);
            let nj1 = n(j + 1, Uu) + n(j + 1, D);
            -nj + nj1
                + (b1 + g1) * (n(j + 1, Uu) * n(j + 1, D) * (1.0 - nj) - n(j, Uu) * n(j, D) * (1.0 - nj1))
        })?;
    }

    let pre = jj * jj * g / (w * w * w);
    for j in 2..l {
        for s in Spin::BOTH {
            let sb = s.flip();
            t.add(pre, &[cdag(j - 1, s), c(j + 1, s)], |n| {
                let (a, m, z) = (n(j - 1, sb), n(j, sb), n(j + 1, sb));
                ((b1 - g1) * m - b1 * a + g1 * z - d1 * m * (a - z)) * (1.0 + b1 * a + g1 * z + d1 * a * z)
            })?;
            t.add(pre, &[cdag(j + 1, s), c(j - 1, s)], |n| {
                let (a, m, z) = (n(j - 1, sb), n(j, sb), n(j + 1, sb));
                ((g1 - b1) * m - g1 * a + b1 * z - d1 * m * (a - z)) * (1.0 + b1 * z + g1 * a + d1 * a * z)
            })?;
            t.add(pre, &[cdag(j, s), cdag(j - 1, sb), c(j, sb), c(j + 1, s)], |n| {
                let (a, z) = (n(j - 1, s), n(j + 1, sb));
                ((b1 - g1) - d1 * (a - z)) * (1.0 + b1 * a + g1 * z + d1 * a * z)
            })?;
            t.add(pre, &[cdag(j + 1, s), cdag(j, sb), c(j - 1, sb), c(j, s)], |n| {
                let (a, z) = (n(j - 1, s), n(j + 1, sb));
                ((g1 - b1) - d1 * (a - z)) * (1.0 + b1 * z + g1 * a + d1 * a * z)
            })?;
            t.add(pre, &[cdag(j, s), cdag(j, sb), c(j - 1, sb), c(j + 1, s)], |n| {
                let (a, z) = (n(j - 1, s), n(j + 1, sb));
                d1 * (a - z) * (w / (w + u) - b1 * (a + z) - d1 * a * z)
            })?;
            t.add(pre, &[cdag(j + 1, s), cdag(j - 1, sb), c(j, sb), c(j, s)], |n| {
                let (a, z) = (n(j - 1, s), n(j + 1, sb));
                d1 * (a - z) * (w / (w - u) - g1 * (a + z) - d1 * a * z)
            })?;
        }
    }
    Ok(t.finish())
}

/// f_1⁽¹⁾ through J^order (order ≤ 2); f_{−1}⁽¹⁾ = −(f_1⁽¹⁾)†.
pub fn analytic_generator_f11(p: &HubbardDriveParams, basis: &SectorBasis, order: usize) -> Result<OperatorMatrix> {
    if order > 2 {
        return Err(Error::Domain(format!("closed form known through J², asked for J^{order}")));
    }
    let mut f = analytic_y0(p, basis)?;
    if order >= 1 {
        f = f.try_add(&analytic_y1(p, basis)?)?;
    }
    if order >= 2 {
        f = f.try_add(&analytic_y2(p, basis)?)?;
    }
    Ok(f)
}

/// O(J) part of H′⁽²⁾: hopping renormalisation plus correlated hopping.
pub fn analytic_h2_linear(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let (jj, g, w, u) = (p.hopping, p.drive_strength, p.omega, p.interaction);
    hubbard_coefficients(u, w)?;
    let r = g * g / (w * w);
    let corr = -jj * r * u * (1.0 / (u - w) + 1.0 / (w + u));
    let mut t = Terms::new(basis);
    for s in Spin::BOTH {
        let sb = s.flip();
        for j in 1..basis.sites() {
            t.add(jj * r, &[cdag(j, s), c(j + 1, s)], |_| 1.0)?;
            t.add(jj * r, &[cdag(j + 1, s), c(j, s)], |_| 1.0)?;
            let dress = |n: &dyn Fn(usize, Spin) -> f64| (n(j, sb) + n(j + 1, sb)) / 2.0 - n(j, sb) * n(j + 1, sb);
            t.add(corr, &[cdag(j, s), c(j + 1, s)], dress)?;
            t.add(corr, &[cdag(j + 1, s), c(j, s)], dress)?;
        }
    }
    Ok(t.finish().with_hint(Hint::Hermitian))
}

/// J² part of H′⁽²⁾: doublon exchange and three-site terms, prefactor (β′−γ′).
pub fn analytic_h2_quadratic(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    use Spin::{Down as D, Up as Uu};
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let (jj, g, w) = (p.hopping, p.drive_strength, p.omega);
    let bg = k.beta1 - k.gamma1;
    let d1 = k.delta1;
    let l = basis.sites();
    let mut t = Terms::new(basis);

    let pre = 4.0 * jj * jj * g * g / (w * w * w) * bg;
    for j in 1..l {
        t.add(pre, &[cdag(j, Uu), cdag(j, D), c(j + 1, Uu), c(j + 1, D)], |_| 1.0)?;
        t.add(pre, &[cdag(j + 1, Uu), cdag(j + 1, D), c(j, Uu), c(j, D)], |_| 1.0)?;
    }

    let pre = jj * jj * g * g / (w * w * w) * bg;
    for j in 2..l {
        for s in Spin::BOTH {
            let sb = s.flip();
            let dress = |n: &dyn Fn(usize, Spin) -> f64| {
                let (a, m, z) = (n(j - 1, sb), n(j, sb), n(j + 1, sb));
                2.0 * m - a - z + d1 * (1.0 - 2.0 * m) * (a + z - 2.0 * a * z)
            };
            t.add(pre, &[cdag(j - 1, s), c(j + 1, s)], dress)?;
            t.add(pre, &[cdag(j + 1, s), c(j - 1, s)], dress)?;
            let swap = |n: &dyn Fn(usize, Spin) -> f64| {
                let (a, z) = (n(j - 1, s), n(j + 1, sb));
                1.0 - d1 * a - d1 * z + 2.0 * d1 * a * z
            };
            t.add(2.0 * pre, &[cdag(j, s), cdag(j - 1, sb), c(j, sb), c(j + 1, s)], swap)?;
            t.add(2.0 * pre, &[cdag(j + 1, s), cdag(j, sb), c(j - 1, sb), c(j, s)], swap)?;
        }
    }
    Ok(t.finish().with_hint(Hint::Hermitian))
}

/// H′⁽²⁾ through O(J), plus the J² block when `include_j2`.
pub fn analytic_h_eff2(p: &HubbardDriveParams, basis: &SectorBasis, include_j2: bool) -> Result<OperatorMatrix> {
    let mut h = analytic_h2_linear(p, basis)?;
    if include_j2 {
        h = h.try_add(&analytic_h2_quadratic(p, basis)?)?;
    }
    Ok(h.with_hint(Hint::Hermitian))
}

/// O(J) part of f_2⁽²⁾: (Jg²/4ω³) Σ (δ_{i−j,1} + δ_{j−i,1}) c†_{j,s}c_{i,s}(1 + β₂n_{j,s̄} + γ₂n_{i,s̄} + δ₂nn).
pub fn analytic_z1(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let w = p.omega;
    dressed_hops(basis, p.hopping * p.drive_strength * p.drive_strength / (4.0 * w * w * w), 1.0, k.second())
}

/// O(J) part of f_1⁽³⁾, with the −11/24 + β₃… dressing.
pub fn analytic_f31(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let (g, w) = (p.drive_strength, p.omega);
    dressed_hops(basis, p.hopping * g * g * g / (w * w * w * w), -1.0, k.third())
}

/// O(J) part of H′⁽⁴⁾.
pub fn analytic_h4(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<OperatorMatrix> {
    check_sites(p, basis)?;
    let k = hubbard_coefficients(p.interaction, p.omega)?;
    let f = k.fourth();
    let (g, w) = (p.drive_strength, p.omega);
    let (g2, w2) = (g * g, w * w);
    let pre = g2 * g2 * p.hopping / (2.0 * w2 * w2);
    let mut t = Terms::new(basis);
    for s in Spin::BOTH {
        for j in 1..=basis.sites() {
            for i in 1..=basis.sites() {
                if i != j + 1 && j != i + 1 {
                    continue;
                }
                let dress = |n: &dyn Fn(usize, Spin) -> f64| f.eval(n(j, s.flip()), n(i, s.flip()));
                t.add(pre, &[cdag(j, s), c(i, s)], dress)?;
                t.add(pre, &[cdag(i, s), c(j, s)], dress)?;
            }
        }
    }
    Ok(t.finish().with_hint(Hint::Hermitian))
}

/// High-frequency (Magnus-type) expansion through ω⁻² for a single-frequency drive:
/// H0 + H_0⁽¹⁾ + (1/ω)[H_1, H_{−1}] + [[H_1, H0 + H_0⁽¹⁾], H_{−1}]/(2ω²) + [[H_{−1}, H0 + H_0⁽¹⁾], H_1]/(2ω²).
pub fn hfe_hamiltonian(ph: &PeriodicHamiltonian) -> Result<OperatorMatrix> {
    for key in ph.drive().keys() {
        if key.order() != 1 || key.harmonic().abs() > 1 {
            return Err(Error::Unsupported(format!(
                "the high-frequency baseline needs a single-frequency first-order drive, found component ({}, {})",
                key.order(),
                key.harmonic()
            )));
        }
    }
    let w = ph.omega();
    let static_part = match ph.component(1, 0) {
        Some(h) => ph.h0().try_add(h)?,
        None => ph.h0().clone(),
    };
    let mut out = static_part.clone();
    if let (Some(hp), Some(hm)) = (ph.component(1, 1), ph.component(1, -1)) {
        out = out.axpy(&commutator(hp, hm)?, C64::new(1.0 / w, 0.0))?;
        let half = C64::new(1.0 / (2.0 * w * w), 0.0);
        out = out.axpy(&commutator(&commutator(hp, &static_part)?, hm)?, half)?;
        out = out.axpy(&commutator(&commutator(hm, &static_part)?, hp)?, half)?;
    }
    Ok(out.with_hint(Hint::Hermitian).enforce_hint())
}

/// Π_j (1 − n_{j↑} n_{j↓}) as a 0/1 diagonal.
pub fn zero_doublon_projector(basis: &SectorBasis) -> OperatorMatrix {
    diagonal_operator(basis, |k| {
        let (u, d) = basis.states()[k];
        if u & d == 0 {
            1.0
        } else {
            0.0
        }
    })
    .with_hint(Hint::Hermitian)
}

/// Exchange coupling of the driven chain at large U.
pub fn spin_exchange_coefficient(p: &HubbardDriveParams) -> Result<f64> {
    let (jj, u, g, w) = (p.hopping, p.interaction, p.drive_strength, p.omega);
    if u.abs() <= COEFF_RES_TOL * w.abs() {
        return Err(Error::Domain("exchange coupling needs U ≠ 0".into()));
    }
    hubbard_coefficients(u, w)?;
    let r = g * g / (w * w);
    Ok(4.0 * jj * jj / u * (1.0 - 2.0 * r) + 4.0 * r * jj * jj * (1.0 / (u - w) + 1.0 / (w + u)))
}

/// Σ_{j<L} S_j·S_{j+1} with S^z = ½(n↑ − n↓) and S⁺ = c†↑c↓.
pub fn heisenberg_bonds(basis: &SectorBasis) -> Result<OperatorMatrix> {
    use Spin::{Down as D, Up as Uu};
    let mut t = Terms::new(basis);
    for j in 1..basis.sites() {
        t.add(0.25, &[], |n| (n(j, Uu) - n(j, D)) * (n(j + 1, Uu) - n(j + 1, D)))?;
        t.add(0.5, &[cdag(j, Uu), c(j, D), cdag(j + 1, D), c(j + 1, Uu)], |_| 1.0)?;
        t.add(0.5, &[cdag(j, D), c(j, Uu), cdag(j + 1, Uu), c(j + 1, D)], |_| 1.0)?;
    }
    Ok(t.finish().with_hint(Hint::Hermitian))
}

/// J_ex Σ_j (S_j·S_{j+1} − ¼), the spin model the large-U chain reduces to.
pub fn heisenberg_hamiltonian(basis: &SectorBasis, exchange: f64) -> Result<OperatorMatrix> {
    let bonds = heisenberg_bonds(basis)?;
    let shift = OperatorMatrix::identity(basis.tag(), basis.dim()).scale_real(0.25 * (basis.sites() - 1) as f64);
    Ok(bonds.try_sub(&shift)?.scale_real(exchange).with_hint(Hint::Hermitian))
}
