//! Exact and effective time evolution, return rates, the NRMSE metric,
//! the response correlator and finite-chain occupancy scans.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::fswt::{FswtEngine, GeneratorMethod, GeneratorSeries};
use crate::linalg::{inner, vec_norm, DMat, HermitianEigen};
use crate::model::{build_driven_hubbard, hamiltonian_at_time, HubbardDriveParams, PeriodicHamiltonian};
use crate::operator::{commutator, Hint, OperatorMatrix};
use crate::reference::hfe_hamiltonian;
use crate::C64;

pub const MIN_STEPS_PER_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionMethod {
    Exact,
    FswtStrobe,
    HfeStrobe,
    FswtMicromotion,
}

impl fmt::Display for EvolutionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvolutionMethod::Exact => "exact",
            EvolutionMethod::FswtStrobe => "fswt-strobe",
            EvolutionMethod::HfeStrobe => "hfe-strobe",
            EvolutionMethod::FswtMicromotion => "fswt-micromotion",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub return_rate: Vec<f64>,
    pub method: EvolutionMethod,
}

fn period(ph: &PeriodicHamiltonian) -> f64 {
    2.0 * core::f64::consts::PI / ph.omega()
}

/// exp(−i H(t_mid) dt).
fn midpoint_step(ph: &PeriodicHamiltonian, t_mid: f64, dt: f64) -> DMat {
    let h = hamiltonian_at_time(ph, t_mid);
    HermitianEigen::new(&h.to_dense()).propagator(dt)
}

fn check_steps(steps_per_period: usize) -> Result<()> {
    if steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(Error::Domain(format!("need at least {MIN_STEPS_PER_PERIOD} steps per period, got {steps_per_period}")));
    }
    Ok(())
}

fn dense_propagator(ph: &PeriodicHamiltonian, t0: f64, t1: f64, steps_per_period: usize) -> Result<DMat> {
    check_steps(steps_per_period)?;
    if !(t1 >= t0) {
        return Err(Error::Domain(format!("need t1 ≥ t0, got {t0} → {t1}")));
    }
    let n = ph.dim();
    let mut u = DMat::identity(n, n);
    if t1 == t0 {
        return Ok(u);
    }
    let steps = ((t1 - t0) / period(ph) * steps_per_period as f64 - 1e-9).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let step = midpoint_step(ph, t0 + (k as f64 + 0.5) * dt, dt);
        u = step * u;
    }
    Ok(u)
}

/// Time-ordered product of midpoint exponentials from t0 to t1.
pub fn exact_propagator(ph: &PeriodicHamiltonian, t0: f64, t1: f64, steps_per_period: usize) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_dense(ph.sector(), &dense_propagator(ph, t0, t1, steps_per_period)?))
}

/// exp(−i H_eff dt).
pub fn stroboscopic_propagator(h_eff: &OperatorMatrix, dt: f64) -> Result<OperatorMatrix> {
    if h_eff.hermiticity_defect() > 1e-10 * h_eff.max_abs().max(1.0) {
        return Err(Error::Contract("effective Hamiltonian is not Hermitian".into()));
    }
    Ok(OperatorMatrix::from_dense(h_eff.sector(), &HermitianEigen::new(&h_eff.to_dense()).propagator(dt)))
}

fn apply(u: &DMat, psi: &[C64]) -> Vec<C64> {
    let n = psi.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for r in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..n {
            acc += u[(r, c)] * psi[c];
        }
        out[r] = acc;
    }
    out
}

/// Propagates states between arbitrary times.
pub trait Evolver {
    fn method(&self) -> EvolutionMethod;
    fn dim(&self) -> usize;
    fn advance(&mut self, psi: &mut Vec<C64>, t0: f64, t1: f64) -> Result<()>;
}

/// Exact evolution. Whole-period intervals starting on a period boundary reuse
/// one cached period propagator; anything else is stepped directly.
pub struct ExactEvolver<'a> {
    ph: &'a PeriodicHamiltonian,
    steps_per_period: usize,
    one_period: Option<DMat>,
}

impl<'a> ExactEvolver<'a> {
    pub fn new(ph: &'a PeriodicHamiltonian, steps_per_period: usize) -> Result<Self> {
        check_steps(steps_per_period)?;
        Ok(ExactEvolver { ph, steps_per_period, one_period: None })
    }

    fn period_count(&self, t: f64) -> Option<i64> {
        let x = t / period(self.ph);
        let k = x.round();
        ((x - k).abs() < 1e-9 * x.abs().max(1.0)).then_some(k as i64)
    }
}

impl Evolver for ExactEvolver<'_> {
    fn method(&self) -> EvolutionMethod {
        EvolutionMethod::Exact
    }

    fn dim(&self) -> usize {
        self.ph.dim()
    }

    fn advance(&mut self, psi: &mut Vec<C64>, t0: f64, t1: f64) -> Result<()> {
        if t1 == t0 {
            return Ok(());
        }
        if let (Some(k0), Some(k1)) = (self.period_count(t0), self.period_count(t1)) {
            if k1 > k0 {
                if self.one_period.is_none() {
                    self.one_period = Some(dense_propagator(self.ph, 0.0, period(self.ph), self.steps_per_period)?);
                }
                let u = self.one_period.as_ref().unwrap();
                for _ in k0..k1 {
                    *psi = apply(u, psi);
                }
                return Ok(());
            }
        }
        *psi = apply(&dense_propagator(self.ph, t0, t1, self.steps_per_period)?, psi);
        Ok(())
    }
}

/// Evolution with a static effective Hamiltonian, optionally dressed by the
/// micro-motion: ψ(t) = Û_t† e^{−iH′(t−t0)} Û_{t0} ψ(t0).
pub struct EffectiveEvolver {
    eigen: HermitianEigen,
    method: EvolutionMethod,
    micromotion: Option<(GeneratorSeries, u32)>,
}

impl EffectiveEvolver {
    pub fn new(h_eff: &OperatorMatrix, method: EvolutionMethod) -> Result<Self> {
        if h_eff.hermiticity_defect() > 1e-10 * h_eff.max_abs().max(1.0) {
            return Err(Error::Contract("effective Hamiltonian is not Hermitian".into()));
        }
        Ok(EffectiveEvolver { eigen: HermitianEigen::new(&h_eff.to_dense()), method, micromotion: None })
    }

    /// Dress with Û_t = exp(Σ_{n ≤ max_order} F_t⁽ⁿ⁾).
    pub fn with_micromotion(mut self, f: GeneratorSeries, max_order: u32) -> Self {
        self.micromotion = Some((f, max_order));
        self.method = EvolutionMethod::FswtMicromotion;
        self
    }

    fn kick(&self, psi: &[C64], t: f64, dagger: bool) -> Result<Vec<C64>> {
        let (f, n) = self.micromotion.as_ref().unwrap();
        let mut g = f.generator_at_time(t, *n);
        if dagger {
            g = g.scale_real(-1.0);
        }
        Ok(crate::operator::unitary_exp(&g)?.matvec(psi))
    }
}

impl Evolver for EffectiveEvolver {
    fn method(&self) -> EvolutionMethod {
        self.method
    }

    fn dim(&self) -> usize {
        self.eigen.dim()
    }

    fn advance(&mut self, psi: &mut Vec<C64>, t0: f64, t1: f64) -> Result<()> {
        if self.micromotion.is_some() {
            *psi = self.kick(psi, t0, false)?;
        }
        let v = &self.eigen.vectors;
        let n = self.dim();
        let mut coef = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                acc += v[(r, k)].conj() * psi[r];
            }
            coef[k] = acc * C64::new(0.0, -self.eigen.values[k] * (t1 - t0)).exp();
        }
        for r in 0..n {
            psi[r] = (0..n).map(|k| v[(r, k)] * coef[k]).sum();
        }
        if self.micromotion.is_some() {
            *psi = self.kick(psi, t1, true)?;
        }
        Ok(())
    }
}

/// Product state with both spins on sites 1, 3, 5, …
pub fn cdw_state(basis: &SectorBasis) -> Result<Vec<C64>> {
    let l = basis.sites();
    let half = l.div_ceil(2);
    if basis.n_up() != half || basis.n_down() != half {
        return Err(Error::Domain(format!("CDW state on L = {l} needs ({half}, {half}) particles")));
    }
    let mask: u32 = (0..l).step_by(2).map(|b| 1u32 << b).sum();
    let k = basis.index_of(mask, mask).expect("mask has the right counts");
    // Π_j c†_{j↑}c†_{j↓}|0⟩ against the (all ↑, then all ↓) orbital order
    let pairs_swapped = (half * (half - 1)) / 2;
    let sign = if pairs_swapped.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
    psi[k] = C64::new(sign, 0.0);
    Ok(psi)
}

/// 𝓛(t) = |⟨ψ0|Û(t, t_0)|ψ0⟩|² on `times` (first entry is t_0).
pub fn return_rate_series(ev: &mut dyn Evolver, psi0: &[C64], times: &[f64]) -> Result<EvolutionResult> {
    if (vec_norm(psi0) - 1.0).abs() > 1e-10 {
        return Err(Error::Contract("initial state is not normalised".into()));
    }
    if psi0.len() != ev.dim() {
        return Err(Error::Domain("state and evolver dimensions differ".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be nondecreasing".into()));
    }
    let mut psi = psi0.to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut prev = times.first().copied().unwrap_or(0.0);
    for &t in times {
        ev.advance(&mut psi, prev, t)?;
        prev = t;
        out.push(inner(psi0, &psi).norm_sqr());
    }
    Ok(EvolutionResult { times: times.to_vec(), return_rate: out, method: ev.method() })
}

/// n·T for n = 0, 1, … up to t_final.
pub fn strobe_times(omega: f64, t_final: f64) -> Vec<f64> {
    let t = 2.0 * core::f64::consts::PI / omega;
    let n = (t_final / t + 1e-9).floor().max(0.0) as usize;
    (0..=n).map(|k| k as f64 * t).collect()
}

fn time_average(times: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    if times.len() == 1 {
        return y(0);
    }
    let span = times[times.len() - 1] - times[0];
    if span == 0.0 {
        return (0..times.len()).map(&y).sum::<f64>() / times.len() as f64;
    }
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (y(k) + y(k - 1)) * (times[k] - times[k - 1]);
    }
    acc / span
}

/// ℰ = sqrt(⟨(𝓛 − 𝓛_ref)²⟩_t) / ⟨𝓛_ref⟩_t with trapezoid time averages.
pub fn nrmse(times: &[f64], series: &[f64], reference: &[f64]) -> Result<f64> {
    if times.is_empty() || series.len() != times.len() || reference.len() != times.len() {
        return Err(Error::Domain("series and reference must share a nonempty time grid".into()));
    }
    let mse = time_average(times, |k| (series[k] - reference[k]).powi(2));
    let mean = time_average(times, |k| reference[k]);
    Ok(mse.sqrt() / mean)
}

/// NRMSE between two evolution results on the same grid.
pub fn nrmse_results(series: &EvolutionResult, reference: &EvolutionResult) -> Result<f64> {
    let same = series.times.len() == reference.times.len()
        && series.times.iter().zip(&reference.times).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same {
        return Err(Error::Domain("time grids differ".into()));
    }
    nrmse(&reference.times, &series.return_rate, &reference.return_rate)
}

/// ⟨ψ|[f, A]|ψ⟩.
pub fn response_correlator(f: &OperatorMatrix, a: &OperatorMatrix, state: &[C64]) -> Result<C64> {
    if (vec_norm(state) - 1.0).abs() > 1e-10 {
        return Err(Error::Contract("state is not normalised".into()));
    }
    Ok(commutator(f, a)?.expectation(state))
}

/// H0 + Σ_{2 ≤ k ≤ order} H′⁽ᵏ⁾ from the engine (H0 + H′⁽²⁾ at order 2).
pub fn fswt_effective_hamiltonian(ph: &PeriodicHamiltonian, method: GeneratorMethod, order: u32) -> Result<OperatorMatrix> {
    let (_, h) = FswtEngine::new(ph, method)?.run(order)?;
    Ok(h.truncated(order).with_hint(Hint::Hermitian).enforce_hint())
}

/// Return rates of the CDW state on the stroboscopic grid for the exact,
/// FSWT and high-frequency evolutions. Effective-Hamiltonian failures are kept
/// per column so a resonant FSWT does not hide the others.
#[derive(Debug, Clone)]
pub struct CdwComparison {
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub fswt: Result<Vec<f64>>,
    pub hfe: Result<Vec<f64>>,
}

impl CdwComparison {
    pub fn nrmse_fswt(&self) -> Result<f64> {
        nrmse(&self.times, self.fswt.as_ref().map_err(|e| e.clone())?, &self.exact)
    }

    pub fn nrmse_hfe(&self) -> Result<f64> {
        nrmse(&self.times, self.hfe.as_ref().map_err(|e| e.clone())?, &self.exact)
    }
}

pub fn cdw_comparison(
    p: &HubbardDriveParams,
    t_final: f64,
    steps_per_period: usize,
    method: GeneratorMethod,
    fswt_order: u32,
) -> Result<CdwComparison> {
    let half = p.sites.div_ceil(2);
    let basis = SectorBasis::new(p.sites, half, half)?;
    let ph = build_driven_hubbard(p, &basis)?;
    let psi0 = cdw_state(&basis)?;
    let times = strobe_times(p.omega, t_final);
    let exact = return_rate_series(&mut ExactEvolver::new(&ph, steps_per_period)?, &psi0, &times)?.return_rate;
    let run = |h: Result<OperatorMatrix>, m| -> Result<Vec<f64>> {
        let mut ev = EffectiveEvolver::new(&h?, m)?;
        Ok(return_rate_series(&mut ev, &psi0, &times)?.return_rate)
    };
    let fswt = run(fswt_effective_hamiltonian(&ph, method, fswt_order), EvolutionMethod::FswtStrobe);
    let hfe = run(hfe_hamiltonian(&ph), EvolutionMethod::HfeStrobe);
    Ok(CdwComparison { times, exact, fswt, hfe })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianVariant {
    Undriven,
    Hfe,
    Fswt,
}

/// Lowest energy per particle number N at μ = 0, over all (N↑, N↓) sectors.
pub fn lowest_energy_by_particle_number(
    p: &HubbardDriveParams,
    variant: HamiltonianVariant,
    method: GeneratorMethod,
) -> Result<BTreeMap<usize, f64>> {
    let mut q = *p;
    q.chemical_potential = 0.0;
    q.validate()?;
    let mut out: BTreeMap<usize, f64> = BTreeMap::new();
    for nu in 0..=q.sites {
        for nd in 0..=q.sites {
            let basis = SectorBasis::new(q.sites, nu, nd)?;
            let ph = build_driven_hubbard(&q, &basis)?;
            let h = match variant {
                HamiltonianVariant::Undriven => ph.h0().clone(),
                HamiltonianVariant::Hfe => hfe_hamiltonian(&ph)?,
                HamiltonianVariant::Fswt => fswt_effective_hamiltonian(&ph, method, 2)?,
            };
            let e0 = HermitianEigen::new(&h.to_dense()).values[0];
            let e = out.entry(nu + nd).or_insert(f64::INFINITY);
            *e = e.min(e0);
        }
    }
    Ok(out)
}

/// (μ, ⟨n̂⟩ = N_ground/L) over `mu_grid`. Degenerate minima pick the smallest N.
pub fn occupancy_from_energies(energies: &BTreeMap<usize, f64>, sites: usize, mu_grid: &[f64]) -> Vec<(f64, f64)> {
    mu_grid
        .iter()
        .map(|&mu| {
            let mut best: Option<(usize, f64)> = None;
            for (&n, &e) in energies {
                let g = e - mu * n as f64;
                let tol = 1e-10 * g.abs().max(1.0);
                if best.is_none_or(|(_, b)| g < b - tol) {
                    best = Some((n, g));
                }
            }
            (mu, best.map_or(0, |(n, _)| n) as f64 / sites as f64)
        })
        .collect()
}

/// Ground-state filling versus chemical potential; the FSWT variant uses the
/// through-J² hopping series.
pub fn ground_state_occupancy_scan(p: &HubbardDriveParams, variant: HamiltonianVariant, mu_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if p.sites > 8 {
        return Err(Error::Domain(format!("occupancy scans are limited to L ≤ 8, got {}", p.sites)));
    }
    let e = lowest_energy_by_particle_number(p, variant, GeneratorMethod::HoppingSeries(2))?;
    Ok(occupancy_from_energies(&e, p.sites, mu_grid))
}
