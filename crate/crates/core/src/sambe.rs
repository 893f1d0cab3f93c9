//! Truncated Sambe (extended Floquet) space and the block-diagonalisation check.
//!
//! Harmonic blocks are indexed j = −M…M; block index j + M.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fswt::MicromotionFourier;
use crate::model::PeriodicHamiltonian;
use crate::operator::{Hint, OperatorMatrix, SectorTag};
use crate::C64;

/// Matrix on C^{2M+1} ⊗ H split into (2M+1)² blocks of size `block_dim`.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub cutoff: usize,
    pub block_dim: usize,
    pub matrix: OperatorMatrix,
}

impl BlockMatrix {
    fn from_blocks(cutoff: usize, block_dim: usize, block: impl Fn(i32, i32) -> Option<OperatorMatrix>) -> Self {
        let m = cutoff as i32;
        let n = 2 * cutoff + 1;
        let mut trips = Vec::new();
        for j in -m..=m {
            for jp in -m..=m {
                if let Some(b) = block(j, jp) {
                    let (r0, c0) = (((j + m) as usize) * block_dim, ((jp + m) as usize) * block_dim);
                    trips.extend(b.triplets().map(|(r, c, v)| (r0 + r, c0 + c, v)));
                }
            }
        }
        let dim = n * block_dim;
        BlockMatrix { cutoff, block_dim, matrix: OperatorMatrix::from_triplets(SectorTag::Generic { dim }, dim, trips) }
    }

    pub fn harmonics(&self) -> core::ops::RangeInclusive<i32> {
        -(self.cutoff as i32)..=self.cutoff as i32
    }

    fn check(&self, j: i32) -> Result<usize> {
        if j.unsigned_abs() as usize > self.cutoff {
            return Err(Error::Domain(format!("harmonic {j} outside ±{}", self.cutoff)));
        }
        Ok((j + self.cutoff as i32) as usize)
    }

    /// Block (j, j′) as a generic-tagged operator.
    pub fn block(&self, j: i32, jp: i32) -> Result<OperatorMatrix> {
        let (bj, bjp) = (self.check(j)?, self.check(jp)?);
        let d = self.block_dim;
        let (r0, c0) = (bj * d, bjp * d);
        let mut trips = Vec::new();
        for r in 0..d {
            for (c, v) in self.matrix.row(r0 + r) {
                if c >= c0 && c < c0 + d {
                    trips.push((r, c - c0, v));
                }
            }
        }
        Ok(OperatorMatrix::from_triplets(SectorTag::Generic { dim: d }, d, trips))
    }
}

/// Sambe Hamiltonian: block(j, j′) = δ_{jj′} jω I + H_{j−j′}.
#[derive(Debug, Clone)]
pub struct SambeHamiltonian {
    pub omega: f64,
    pub blocks: BlockMatrix,
}

impl SambeHamiltonian {
    pub fn cutoff(&self) -> usize {
        self.blocks.cutoff
    }

    pub fn block(&self, j: i32, jp: i32) -> Result<OperatorMatrix> {
        self.blocks.block(j, jp)
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.blocks.matrix
    }
}

pub fn build_sambe(ph: &PeriodicHamiltonian, cutoff: usize) -> Result<SambeHamiltonian> {
    let need = ph.max_harmonic() as usize + 1;
    if cutoff < need {
        return Err(Error::Domain(format!("cutoff {cutoff} too small for harmonic {}; need ≥ {need}", ph.max_harmonic())));
    }
    let d = ph.dim();
    let w = ph.omega();
    let tag = SectorTag::Generic { dim: d };
    let mut fourier = BTreeMap::new();
    for k in -ph.max_harmonic()..=ph.max_harmonic() {
        fourier.insert(k, ph.fourier_component(k).retag(tag));
    }
    let blocks = BlockMatrix::from_blocks(cutoff, d, |j, jp| {
        let mut b = fourier.get(&(j - jp)).cloned();
        if j == jp {
            let shift = OperatorMatrix::identity(tag, d).scale_real(j as f64 * w);
            b = Some(match b {
                Some(h) => &h + &shift,
                None => shift,
            });
        }
        b
    });
    Ok(SambeHamiltonian { omega: w, blocks: BlockMatrix { matrix: blocks.matrix.with_hint(Hint::Hermitian), ..blocks } })
}

/// Extended-space transform: block(j, j′) = Û_{j−j′} (zero beyond the stored coefficients).
pub fn build_transform(u: &MicromotionFourier, cutoff: usize) -> Result<BlockMatrix> {
    if u.cutoff < cutoff {
        return Err(Error::Domain(format!("micro-motion known to harmonic {} but cutoff {cutoff} requested", u.cutoff)));
    }
    let d = u.get(0).expect("cutoff ≥ 1").dim();
    let tag = SectorTag::Generic { dim: d };
    Ok(BlockMatrix::from_blocks(cutoff, d, |j, jp| u.get(j - jp).map(|b| b.clone().retag(tag))))
}

/// ‖Ĵ†Ĵ − I‖_max over the central blocks |j|, |j′| ≤ M/2; the outer rows
/// lose part of the ladder to truncation and are excluded.
pub fn transform_unitarity_defect(jmat: &BlockMatrix) -> Result<f64> {
    let full = BlockMatrix { matrix: jmat.matrix.adjoint().try_mul(&jmat.matrix)?, ..jmat.clone() };
    let tag = SectorTag::Generic { dim: jmat.block_dim };
    let id = OperatorMatrix::identity(tag, jmat.block_dim);
    let mut worst = 0.0f64;
    for j in central_rows(jmat.cutoff) {
        for jp in central_rows(jmat.cutoff) {
            let b = full.block(j, jp)?;
            worst = worst.max(if j == jp { b.max_abs_diff(&id) } else { b.max_abs() });
        }
    }
    Ok(worst)
}

/// Ĵ S Ĵ† as blocks.
pub fn transformed_sambe(s: &SambeHamiltonian, jmat: &BlockMatrix) -> Result<BlockMatrix> {
    if s.blocks.cutoff != jmat.cutoff || s.blocks.block_dim != jmat.block_dim {
        return Err(Error::Domain("Sambe matrix and transform have different shapes".into()));
    }
    let m = jmat.matrix.try_mul(&s.blocks.matrix)?.try_mul(&jmat.matrix.adjoint())?;
    Ok(BlockMatrix { cutoff: jmat.cutoff, block_dim: jmat.block_dim, matrix: m })
}

fn central_rows(cutoff: usize) -> core::ops::RangeInclusive<i32> {
    let h = (cutoff / 2) as i32;
    -h..=h
}

/// Largest entry of the off-diagonal blocks of Ĵ S Ĵ†, per offset |j − j′| ≥ 1,
/// over the central block rows |j| ≤ M/2.
pub fn offdiagonal_block_norms(s: &SambeHamiltonian, jmat: &BlockMatrix) -> Result<BTreeMap<usize, f64>> {
    let t = transformed_sambe(s, jmat)?;
    let mut out = BTreeMap::new();
    for j in central_rows(t.cutoff) {
        for jp in t.harmonics() {
            if jp == j {
                continue;
            }
            let n = t.block(j, jp)?.max_abs();
            let e = out.entry(j.abs_diff(jp) as usize).or_insert(0.0f64);
            *e = e.max(n);
        }
    }
    Ok(out)
}

/// max over central j of ‖(Ĵ S Ĵ†)_{jj} − (H′ + jω I)‖_max.
pub fn diagonal_block_defect(s: &SambeHamiltonian, jmat: &BlockMatrix, h_eff: &OperatorMatrix) -> Result<f64> {
    let t = transformed_sambe(s, jmat)?;
    let d = t.block_dim;
    let tag = SectorTag::Generic { dim: d };
    let h = h_eff.clone().retag(tag);
    let mut worst = 0.0f64;
    for j in central_rows(t.cutoff) {
        let want = h.axpy(&OperatorMatrix::identity(tag, d), C64::new(j as f64 * s.omega, 0.0))?;
        worst = worst.max(t.block(j, j)?.max_abs_diff(&want));
    }
    Ok(worst)
}
