//! Time-periodic Hamiltonians as Fourier components per drive order, and the
//! dipole-driven Hubbard chain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;


use crate::basis::{cdag, c, diagonal_operator, OperatorBuilder, SectorBasis, Spin};
use crate::error::{Error, Result};
use crate::operator::{Hint, OperatorMatrix, SectorTag};
use crate::C64;

/// (drive order n ≥ 1, harmonic j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DriveKey {
    order: u32,
    harmonic: i32,
}

impl DriveKey {
    pub fn new(order: u32, harmonic: i32) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("drive order must be at least 1".into()));
        }
        Ok(DriveKey { order, harmonic })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn harmonic(&self) -> i32 {
        self.harmonic
    }

    pub fn partner(&self) -> DriveKey {
        DriveKey { order: self.order, harmonic: -self.harmonic }
    }
}

/// H_t = H0 + Σ_{n,j} H^(n)_j e^{ijωt}. Absent keys are zero.
#[derive(Debug, Clone)]
pub struct PeriodicHamiltonian {
    h0: OperatorMatrix,
    drive: BTreeMap<DriveKey, OperatorMatrix>,
    omega: f64,
}

impl PeriodicHamiltonian {
    pub fn new(h0: OperatorMatrix, omega: f64) -> Self {
        PeriodicHamiltonian { h0, drive: BTreeMap::new(), omega }
    }

    /// Store a component. Both (n, j) and (n, −j) must be inserted for a
    /// Hermitian H_t; `validate_periodic` reports missing partners.
    pub fn insert(&mut self, key: DriveKey, op: OperatorMatrix) -> Result<()> {
        self.h0.same_space(&op)?;
        self.drive.insert(key, op);
        Ok(())
    }

    /// Insert H^(n)_j together with its partner H^(n)_{−j} = (H^(n)_j)†.
    pub fn insert_pair(&mut self, order: u32, harmonic: i32, op: OperatorMatrix) -> Result<()> {
        let key = DriveKey::new(order, harmonic)?;
        if harmonic == 0 {
            return self.insert(key, op);
        }
        self.insert(key.partner(), op.adjoint())?;
        self.insert(key, op)
    }

    pub fn h0(&self) -> &OperatorMatrix {
        &self.h0
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sector(&self) -> SectorTag {
        self.h0.sector()
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn drive(&self) -> &BTreeMap<DriveKey, OperatorMatrix> {
        &self.drive
    }

    pub fn component(&self, order: u32, harmonic: i32) -> Option<&OperatorMatrix> {
        self.drive.get(&DriveKey { order, harmonic })
    }

    /// Stored harmonics of one drive order.
    pub fn harmonics(&self, order: u32) -> Vec<i32> {
        self.drive.keys().filter(|k| k.order == order).map(|k| k.harmonic).collect()
    }

    pub fn max_order(&self) -> u32 {
        self.drive.keys().map(|k| k.order).max().unwrap_or(0)
    }

    pub fn max_harmonic(&self) -> i32 {
        self.drive.keys().map(|k| k.harmonic.abs()).max().unwrap_or(0)
    }

    /// Only (1, ±1) keys, the class for which the fourth order is available.
    pub fn is_monochromatic(&self) -> bool {
        !self.drive.is_empty() && self.drive.keys().all(|k| k.order == 1 && k.harmonic.abs() == 1)
    }

    /// Total Fourier component H_j summed over drive orders (H0 included at j = 0).
    pub fn fourier_component(&self, harmonic: i32) -> OperatorMatrix {
        let mut sum = if harmonic == 0 {
            self.h0.clone()
        } else {
            OperatorMatrix::zeros(self.sector(), self.dim())
        };
        for (k, op) in &self.drive {
            if k.harmonic == harmonic {
                sum = &sum + op;
            }
        }
        sum
    }

    pub fn with_h0(&self, h0: OperatorMatrix) -> Result<Self> {
        self.h0.same_space(&h0)?;
        Ok(PeriodicHamiltonian { h0, drive: self.drive.clone(), omega: self.omega })
    }

    pub fn without_drive(&self) -> Self {
        PeriodicHamiltonian { h0: self.h0.clone(), drive: BTreeMap::new(), omega: self.omega }
    }
}

/// H_t at time t.
pub fn hamiltonian_at_time(ph: &PeriodicHamiltonian, t: f64) -> OperatorMatrix {
    let mut h = ph.h0.clone();
    for (k, op) in &ph.drive {
        let phase = C64::new(0.0, k.harmonic as f64 * ph.omega * t).exp();
        h = h.axpy(op, phase).expect("components share the sector");
    }
    h.with_hint(Hint::Hermitian).enforce_hint()
}

/// Violations of the type invariants; empty when the model is well formed.
pub fn validate_periodic(ph: &PeriodicHamiltonian) -> Vec<String> {
    let mut v = Vec::new();
    if !(ph.omega > 0.0) || !ph.omega.is_finite() {
        v.push(format!("omega must be positive and finite, got {}", ph.omega));
    }
    if ph.h0.hermiticity_defect() > 1e-12 {
        v.push(format!("H0 is not Hermitian (defect {:e})", ph.h0.hermiticity_defect()));
    }
    for (k, op) in &ph.drive {
        if op.same_space(&ph.h0).is_err() {
            v.push(format!("component ({}, {}) lives in another sector", k.order, k.harmonic));
            continue;
        }
        match ph.drive.get(&k.partner()) {
            None => v.push(format!(
                "component ({}, {}) has no ({}, {}) partner",
                k.order, k.harmonic, k.order, -k.harmonic
            )),
            Some(p) => {
                // each unordered pair is reported once
                if k.harmonic >= 0 {
                    let d = op.max_abs_diff(&p.adjoint());
                    if d > 1e-12 {
                        v.push(format!(
                            "components ({}, ±{}) are not adjoint to each other (defect {d:e})",
                            k.order, k.harmonic
                        ));
                    }
                }
            }
        }
    }
    v
}

/// Driven Hubbard chain parameters. Energies in units of the hopping J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardDriveParams {
    pub sites: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub chemical_potential: f64,
    pub drive_strength: f64,
    pub omega: f64,
    /// Origin shift c of the dipole coordinate: the drive is g Σ_j (j + c) n_j.
    pub dipole_offset: f64,
}

impl HubbardDriveParams {
    pub fn new(sites: usize, hopping: f64, interaction: f64, drive_strength: f64, omega: f64) -> Self {
        HubbardDriveParams {
            sites,
            hopping,
            interaction,
            chemical_potential: 0.0,
            drive_strength,
            omega,
            dipole_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.hopping, self.interaction, self.chemical_potential, self.drive_strength, self.omega, self.dipole_offset]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite model parameter".into()));
        }
        if self.sites < 2 {
            return Err(Error::Domain(format!("need L ≥ 2, got {}", self.sites)));
        }
        if !(self.hopping >= 0.0) {
            return Err(Error::Domain(format!("need J ≥ 0, got {}", self.hopping)));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Domain(format!("need omega > 0, got {}", self.omega)));
        }
        Ok(())
    }
}

/// ĥ = −J Σ_s Σ_{j<L} (c†_{j+1,s} c_{j,s} + c†_{j,s} c_{j+1,s}), open boundaries.
pub fn kinetic_operator(basis: &SectorBasis, hopping: f64) -> OperatorMatrix {
    let mut b = OperatorBuilder::new(basis);
    for s in Spin::BOTH {
        for j in 1..basis.sites() {
            b.add_real(&[cdag(j + 1, s), c(j, s)], -hopping).expect("sites in range");
            b.add_real(&[cdag(j, s), c(j + 1, s)], -hopping).expect("sites in range");
        }
    }
    b.finish().with_hint(Hint::Hermitian)
}

/// Û = U Σ_j n_{j↑} n_{j↓}.
pub fn interaction_operator(basis: &SectorBasis, interaction: f64) -> OperatorMatrix {
    diagonal_operator(basis, |k| {
        let (u, d) = basis.states()[k];
        interaction * (u & d).count_ones() as f64
    })
}

/// Σ_j (j + offset) n_j, sites counted from 1.
pub fn dipole_operator(basis: &SectorBasis, offset: f64) -> OperatorMatrix {
    diagonal_operator(basis, |k| {
        let (u, d) = basis.states()[k];
        (1..=basis.sites())
            .map(|j| (j as f64 + offset) * (((u >> (j - 1)) & 1) + ((d >> (j - 1)) & 1)) as f64)
            .sum()
    })
}

/// H0 = ĥ + Û − μN̂ and H^(1)_{±1} = g Σ_j (j + offset) n_j.
pub fn build_driven_hubbard(p: &HubbardDriveParams, basis: &SectorBasis) -> Result<PeriodicHamiltonian> {
    p.validate()?;
    if basis.sites() != p.sites {
        return Err(Error::Domain(format!("basis has L = {} but parameters say L = {}", basis.sites(), p.sites)));
    }
    let n = basis.particles() as f64;
    let diag = diagonal_operator(basis, |k| {
        let (u, d) = basis.states()[k];
        p.interaction * (u & d).count_ones() as f64 - p.chemical_potential * n
    });
    let h0 = (&kinetic_operator(basis, p.hopping) + &diag).with_hint(Hint::Hermitian);
    let mut ph = PeriodicHamiltonian::new(h0, p.omega);
    if p.drive_strength != 0.0 {
        let drive = dipole_operator(basis, p.dipole_offset).scale_real(p.drive_strength);
        ph.insert_pair(1, 1, drive)?;
    }
    Ok(ph)
}
