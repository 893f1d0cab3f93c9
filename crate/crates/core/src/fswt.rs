//! Order-by-order elimination of the oscillating part of a periodic
//! Hamiltonian.
//!
//! Generators f_j⁽ⁿ⁾ are stored as [`Expansion`]s graded by powers of the
//! off-diagonal part of H0. The spectral method yields a single grade-0 term
//! (the exact solution); the hopping series keeps grades 0…N separately so
//! that each power of J can be compared with closed forms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;


use crate::error::{Error, Result};
use crate::model::PeriodicHamiltonian;
use crate::operator::{commutator, unitary_exp, Hint, OperatorMatrix, SectorTag};
use crate::sylvester::{solve_graded, SolveOptions, SpectralSolver};
use crate::C64;

/// How each Sylvester equation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMethod {
    /// Exact division in the eigenbasis of H0.
    Spectral,
    /// Expansion in the off-diagonal part of H0 through the given power.
    HoppingSeries(usize),
}

impl GeneratorMethod {
    pub fn max_grade(&self) -> usize {
        match self {
            GeneratorMethod::Spectral => 0,
            GeneratorMethod::HoppingSeries(n) => *n,
        }
    }
}

impl fmt::Display for GeneratorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorMethod::Spectral => write!(f, "spectral"),
            GeneratorMethod::HoppingSeries(n) => write!(f, "series:{n}"),
        }
    }
}

impl FromStr for GeneratorMethod {
    type Err = Error;

    /// `spectral` or `series:N` with N ≤ 4.
    fn from_str(s: &str) -> Result<Self> {
        if s == "spectral" {
            return Ok(GeneratorMethod::Spectral);
        }
        if let Some(n) = s.strip_prefix("series:") {
            let n: usize = n.parse().map_err(|_| Error::Domain(format!("bad series order in {s:?}")))?;
            if n > 4 {
                return Err(Error::Domain(format!("series order {n} exceeds 4")));
            }
            return Ok(GeneratorMethod::HoppingSeries(n));
        }
        Err(Error::Domain(format!("unknown method {s:?}; expected spectral or series:N")))
    }
}

/// An operator split into parts proportional to J⁰, J¹, …, J^max_grade.
#[derive(Debug, Clone)]
pub struct Expansion {
    terms: Vec<OperatorMatrix>,
}

impl Expansion {
    pub fn zero(sector: SectorTag, dim: usize, max_grade: usize) -> Self {
        Expansion { terms: vec![OperatorMatrix::zeros(sector, dim).with_hint(Hint::General); max_grade + 1] }
    }

    /// `op` at grade 0, zeros above.
    pub fn constant(op: OperatorMatrix, max_grade: usize) -> Self {
        let mut e = Self::zero(op.sector(), op.dim(), max_grade);
        e.terms[0] = op;
        e
    }

    pub fn from_terms(terms: Vec<OperatorMatrix>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Domain("expansion needs at least one term".into()))?;
        for t in &terms[1..] {
            first.same_space(t)?;
        }
        Ok(Expansion { terms })
    }

    pub fn max_grade(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn sector(&self) -> SectorTag {
        self.terms[0].sector()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    pub fn term(&self, grade: usize) -> &OperatorMatrix {
        &self.terms[grade]
    }

    pub fn terms(&self) -> &[OperatorMatrix] {
        &self.terms
    }

    pub fn total(&self) -> OperatorMatrix {
        crate::sylvester::sum_terms(&self.terms)
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.iter().all(|t| t.nnz() == 0)
    }

    /// Largest entry over all grades.
    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.max_abs()).fold(0.0, f64::max)
    }

    fn check(&self, other: &Self) -> Result<()> {
        self.terms[0].same_space(&other.terms[0])?;
        if self.terms.len() != other.terms.len() {
            return Err(Error::Contract(format!(
                "expansions truncated at different grades ({} vs {})",
                self.max_grade(),
                other.max_grade()
            )));
        }
        Ok(())
    }

    /// self + z·other, gradewise.
    pub fn axpy(&self, other: &Self, z: C64) -> Result<Self> {
        self.check(other)?;
        let terms = self.terms.iter().zip(&other.terms).map(|(a, b)| a.axpy(b, z)).collect::<Result<_>>()?;
        Ok(Expansion { terms })
    }

    pub fn add_scaled(&mut self, other: &Self, x: f64) -> Result<()> {
        *self = self.axpy(other, C64::new(x, 0.0))?;
        Ok(())
    }

    pub fn scale(&self, z: C64) -> Self {
        Expansion { terms: self.terms.iter().map(|t| t.scale(z)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Expansion { terms: self.terms.iter().map(|t| t.adjoint()).collect() }
    }

    pub fn with_hint(self, hint: Hint) -> Self {
        Expansion { terms: self.terms.into_iter().map(|t| t.with_hint(hint).enforce_hint()).collect() }
    }

    /// Gradewise [self, other], truncated at the common maximum grade.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.max_grade();
        let mut out = Self::zero(self.sector(), self.dim(), n);
        for i in 0..=n {
            if self.terms[i].nnz() == 0 {
                continue;
            }
            for l in 0..=n - i {
                if other.terms[l].nnz() == 0 {
                    continue;
                }
                let c = commutator(&self.terms[i], &other.terms[l])?;
                out.terms[i + l] = out.terms[i + l].try_add(&c)?;
            }
        }
        Ok(out)
    }
}

/// Fourier coefficients f_j⁽ⁿ⁾ of the micro-motion generator.
#[derive(Debug, Clone)]
pub struct GeneratorSeries {
    omega: f64,
    method: GeneratorMethod,
    sector: SectorTag,
    dim: usize,
    coeffs: BTreeMap<(u32, i32), Expansion>,
}

impl GeneratorSeries {
    pub fn new(omega: f64, method: GeneratorMethod, sector: SectorTag, dim: usize) -> Self {
        GeneratorSeries { omega, method, sector, dim, coeffs: BTreeMap::new() }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn method(&self) -> GeneratorMethod {
        self.method
    }

    pub fn sector(&self) -> SectorTag {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, order: u32, harmonic: i32) -> Option<&Expansion> {
        self.coeffs.get(&(order, harmonic))
    }

    /// Summed f_j⁽ⁿ⁾, or the zero matrix when the entry is absent.
    pub fn total(&self, order: u32, harmonic: i32) -> OperatorMatrix {
        self.get(order, harmonic).map(|e| e.total()).unwrap_or_else(|| OperatorMatrix::zeros(self.sector, self.dim))
    }

    pub fn keys(&self) -> impl Iterator<Item = (u32, i32)> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, i32), &Expansion)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn harmonics(&self, order: u32) -> Vec<i32> {
        self.coeffs.keys().filter(|(n, _)| *n == order).map(|(_, j)| *j).collect()
    }

    pub fn max_order(&self) -> u32 {
        self.coeffs.keys().map(|(n, _)| *n).max().unwrap_or(0)
    }

    /// Store f_j and its partner f_{−j} = −f_j†.
    pub fn insert_pair(&mut self, order: u32, harmonic: i32, f: Expansion) -> Result<()> {
        if order == 0 || harmonic == 0 {
            return Err(Error::Contract(format!("generators have no ({order}, {harmonic}) component")));
        }
        if f.sector() != self.sector || f.dim() != self.dim {
            return Err(Error::Domain("generator lives in a different sector".into()));
        }
        let partner = f.adjoint().scale(C64::new(-1.0, 0.0));
        self.coeffs.insert((order, harmonic), f);
        self.coeffs.insert((order, -harmonic), partner);
        Ok(())
    }

    /// max over stored keys of ‖f_j + f_{−j}†‖_max.
    pub fn pairing_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(n, j), f) in &self.coeffs {
            let partner = self.total(n, -j);
            worst = worst.max(f.total().axpy(&partner.adjoint(), C64::new(1.0, 0.0)).map(|d| d.max_abs()).unwrap_or(f64::INFINITY));
        }
        worst
    }

    /// F_t = Σ_{n ≤ max_order, j} f_j⁽ⁿ⁾ e^{ijωt}, anti-Hermitian.
    pub fn generator_at_time(&self, t: f64, max_order: u32) -> OperatorMatrix {
        let mut acc = OperatorMatrix::zeros(self.sector, self.dim);
        for (&(n, j), f) in &self.coeffs {
            if n > max_order {
                continue;
            }
            let phase = C64::new(0.0, j as f64 * self.omega * t).exp();
            for term in f.terms() {
                acc = acc.axpy(term, phase).expect("same sector");
            }
        }
        acc.with_hint(Hint::AntiHermitian).enforce_hint()
    }
}

/// Static effective Hamiltonian H′ = Σ_k H′⁽ᵏ⁾.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    /// H′⁽ᵏ⁾ by order k in the drive strength.
    pub orders: BTreeMap<u32, OperatorMatrix>,
    /// The same, split by powers of the hopping.
    pub graded: BTreeMap<u32, Expansion>,
    pub method: GeneratorMethod,
    /// Drive orders of the generators that entered.
    pub generator_orders: Vec<u32>,
    /// ‖H − H†‖_max of each order before symmetrization.
    pub hermiticity_defects: BTreeMap<u32, f64>,
}

impl EffectiveHamiltonian {
    pub fn order(&self, k: u32) -> Option<&OperatorMatrix> {
        self.orders.get(&k)
    }

    /// Σ_k H′⁽ᵏ⁾.
    pub fn total(&self) -> OperatorMatrix {
        let ops: Vec<OperatorMatrix> = self.orders.values().cloned().collect();
        crate::sylvester::sum_terms(&ops).with_hint(Hint::Hermitian).enforce_hint()
    }

    /// Σ_{k ≤ max_order} H′⁽ᵏ⁾.
    pub fn truncated(&self, max_order: u32) -> OperatorMatrix {
        let ops: Vec<OperatorMatrix> = self.orders.range(..=max_order).map(|(_, v)| v.clone()).collect();
        crate::sylvester::sum_terms(&ops).with_hint(Hint::Hermitian).enforce_hint()
    }
}

fn hermitian_part(e: Expansion) -> (Expansion, f64) {
    let defect = e.total().hermiticity_defect();
    (e.with_hint(Hint::Hermitian), defect)
}

/// Solver state shared by all orders: either the eigendecomposition of H0 or
/// its split into off-diagonal and diagonal parts.
pub struct FswtEngine<'a> {
    ph: &'a PeriodicHamiltonian,
    method: GeneratorMethod,
    opts: SolveOptions,
    spectral: Option<SpectralSolver>,
    hop: OperatorMatrix,
    diag: OperatorMatrix,
}

impl<'a> FswtEngine<'a> {
    pub fn new(ph: &'a PeriodicHamiltonian, method: GeneratorMethod) -> Result<Self> {
        Self::with_options(ph, method, SolveOptions::default())
    }

    pub fn with_options(ph: &'a PeriodicHamiltonian, method: GeneratorMethod, opts: SolveOptions) -> Result<Self> {
        if !(ph.omega() > 0.0) || !ph.omega().is_finite() {
            return Err(Error::Domain(format!("omega must be positive and finite, got {}", ph.omega())));
        }
        let (hop, diag) = ph.h0().split_diagonal();
        let spectral = match method {
            GeneratorMethod::Spectral => Some(SpectralSolver::new(ph.h0())?),
            GeneratorMethod::HoppingSeries(n) if n > 4 => {
                return Err(Error::Domain(format!("series order {n} exceeds 4")));
            }
            GeneratorMethod::HoppingSeries(_) => None,
        };
        Ok(FswtEngine { ph, method, opts, spectral, hop, diag })
    }

    pub fn method(&self) -> GeneratorMethod {
        self.method
    }

    pub fn hamiltonian(&self) -> &PeriodicHamiltonian {
        self.ph
    }

    pub fn spectral_solver(&self) -> Option<&SpectralSolver> {
        self.spectral.as_ref()
    }

    fn grade(&self) -> usize {
        self.method.max_grade()
    }

    fn zero(&self) -> Expansion {
        Expansion::zero(self.ph.sector(), self.ph.dim(), self.grade())
    }

    /// Drive component H_j⁽ⁿ⁾ at grade 0, or `None` if not stored.
    fn drive(&self, order: u32, harmonic: i32) -> Option<Expansion> {
        self.ph.component(order, harmonic).map(|op| Expansion::constant(op.clone(), self.grade()))
    }

    fn empty_series(&self) -> GeneratorSeries {
        GeneratorSeries::new(self.ph.omega(), self.method, self.ph.sector(), self.ph.dim())
    }

    /// Solve source + [f, H0] − jω f = 0.
    pub fn solve(&self, source: &Expansion, order: u32, harmonic: i32) -> Result<Expansion> {
        let shift = harmonic as f64 * self.ph.omega();
        let out = match &self.spectral {
            Some(s) => s.solve(&source.total(), shift, self.opts).map(|f| Expansion::constant(f, 0)),
            None => solve_graded(&self.hop, &self.diag, source.terms(), shift, self.grade(), self.opts)
                .and_then(Expansion::from_terms),
        };
        out.map_err(|e| e.at(order, harmonic))
    }

    /// Solve for f_j at every positive j in `sources` (using −j when only that
    /// is present) and store the adjoint partners.
    fn solve_and_pair(&self, series: &mut GeneratorSeries, order: u32, sources: &BTreeMap<i32, Expansion>) -> Result<()> {
        let mut positive: Vec<i32> = sources.keys().map(|j| j.abs()).collect();
        positive.sort_unstable();
        positive.dedup();
        for j in positive {
            if let Some(src) = sources.get(&j) {
                let f = self.solve(src, order, j)?;
                series.insert_pair(order, j, f)?;
            } else {
                let f = self.solve(&sources[&-j], order, -j)?;
                series.insert_pair(order, -j, f)?;
            }
        }
        Ok(())
    }

    /// f_j⁽¹⁾ for every stored first-order harmonic j ≠ 0.
    pub fn first_order_generators(&self) -> Result<GeneratorSeries> {
        let mut sources = BTreeMap::new();
        for j in self.ph.harmonics(1) {
            if j != 0 {
                sources.insert(j, self.drive(1, j).expect("stored"));
            }
        }
        let mut series = self.empty_series();
        self.solve_and_pair(&mut series, 1, &sources)?;
        Ok(series)
    }

    fn require(&self, f: &GeneratorSeries, order: u32) -> Result<()> {
        for j in self.ph.harmonics(order) {
            if j != 0 && f.get(order, j).is_none() {
                return Err(Error::Contract(format!("missing generator f_{j}^({order}) for a stored drive harmonic")));
            }
        }
        if f.sector() != self.ph.sector() || f.dim() != self.ph.dim() {
            return Err(Error::Domain("generators belong to a different sector".into()));
        }
        Ok(())
    }

    fn gen(&self, f: &GeneratorSeries, order: u32, harmonic: i32) -> Option<Expansion> {
        f.get(order, harmonic).cloned()
    }

    /// H′⁽²⁾ = H_0⁽²⁾ + ½ Σ_{j≠0} [f_j⁽¹⁾, H_{−j}⁽¹⁾].
    pub fn effective_h2(&self, f: &GeneratorSeries) -> Result<Expansion> {
        self.effective_h2_with_defect(f).map(|(e, _)| e)
    }

    fn effective_h2_with_defect(&self, f: &GeneratorSeries) -> Result<(Expansion, f64)> {
        self.require(f, 1)?;
        let mut acc = self.drive(2, 0).unwrap_or_else(|| self.zero());
        for j in f.harmonics(1) {
            if let Some(h) = self.drive(1, -j) {
                acc.add_scaled(&f.get(1, j).unwrap().commutator(&h)?, 0.5)?;
            }
        }
        Ok(hermitian_part(acc))
    }

    /// source_j = H_j⁽²⁾ + ½ Σ_{j′≠0} [f_{j′}⁽¹⁾, H_{j−j′}⁽¹⁾] + ½ [f_j⁽¹⁾, H_0⁽¹⁾],
    /// for every j ≠ 0 with a nonzero result.
    pub fn second_order_sources(&self, f: &GeneratorSeries) -> Result<BTreeMap<i32, Expansion>> {
        self.require(f, 1)?;
        let mut candidates: Vec<i32> = self.ph.harmonics(2);
        for jp in f.harmonics(1) {
            for jd in self.ph.harmonics(1) {
                candidates.push(jp + jd);
            }
        }
        candidates.retain(|&j| j != 0);
        candidates.sort_unstable();
        candidates.dedup();
        let h10 = self.drive(1, 0);
        let mut out = BTreeMap::new();
        for j in candidates {
            let mut acc = self.drive(2, j).unwrap_or_else(|| self.zero());
            for jp in f.harmonics(1) {
                if let Some(h) = self.drive(1, j - jp) {
                    acc.add_scaled(&f.get(1, jp).unwrap().commutator(&h)?, 0.5)?;
                }
            }
            if let (Some(h), Some(fj)) = (&h10, f.get(1, j)) {
                acc.add_scaled(&fj.commutator(h)?, 0.5)?;
            }
            if !acc.is_structurally_zero() {
                out.insert(j, acc);
            }
        }
        Ok(out)
    }

    /// Adds the (2, j) generators to `f`.
    pub fn second_order_generators(&self, f: &GeneratorSeries) -> Result<GeneratorSeries> {
        let sources = self.second_order_sources(f)?;
        let mut out = f.clone();
        self.solve_and_pair(&mut out, 2, &sources)?;
        Ok(out)
    }

    /// H′⁽³⁾ = H_0⁽³⁾ + ½Σ[f_j⁽¹⁾, H_{−j}⁽²⁾] + ½Σ[f_j⁽²⁾, H_{−j}⁽¹⁾]
    ///        + 1/12 ΣΣ[f_j⁽¹⁾,[f_{j′}⁽¹⁾, H_{−j−j′}⁽¹⁾]] − 1/12 Σ[f_j⁽¹⁾,[f_{−j}⁽¹⁾, H_0⁽¹⁾]].
    pub fn effective_h3(&self, f: &GeneratorSeries) -> Result<Expansion> {
        self.effective_h3_with_defect(f).map(|(e, _)| e)
    }

    fn effective_h3_with_defect(&self, f: &GeneratorSeries) -> Result<(Expansion, f64)> {
        self.require(f, 1)?;
        self.require(f, 2)?;
        let mut acc = self.drive(3, 0).unwrap_or_else(|| self.zero());
        let f1 = f.harmonics(1);
        for &j in &f1 {
            if let Some(h) = self.drive(2, -j) {
                acc.add_scaled(&f.get(1, j).unwrap().commutator(&h)?, 0.5)?;
            }
        }
        for j in f.harmonics(2) {
            if let Some(h) = self.drive(1, -j) {
                acc.add_scaled(&f.get(2, j).unwrap().commutator(&h)?, 0.5)?;
            }
        }
        for &j in &f1 {
            let fj = f.get(1, j).unwrap();
            for &jp in &f1 {
                if let Some(h) = self.drive(1, -j - jp) {
                    let inner = f.get(1, jp).unwrap().commutator(&h)?;
                    acc.add_scaled(&fj.commutator(&inner)?, 1.0 / 12.0)?;
                }
            }
        }
        if let Some(h10) = self.drive(1, 0) {
            for &j in &f1 {
                if let Some(fm) = f.get(1, -j) {
                    let inner = fm.commutator(&h10)?;
                    acc.add_scaled(&f.get(1, j).unwrap().commutator(&inner)?, -1.0 / 12.0)?;
                }
            }
        }
        Ok(hermitian_part(acc))
    }

    fn require_monochrome(&self) -> Result<()> {
        if !self.ph.is_monochromatic() {
            return Err(Error::Unsupported(
                "third-order generators and H′⁽⁴⁾ are implemented only for drives with (1, ±1) components alone".into(),
            ));
        }
        Ok(())
    }

    /// Adds f_1⁽³⁾, f_2⁽³⁾ and f_3⁽³⁾ (and partners) for a drive H_{±1}⁽¹⁾:
    ///   ½[f_2⁽²⁾, H_{−1}] + 1/12[f_{−1}⁽¹⁾,[f_1⁽¹⁾, H_1]] + ⅔[f_1⁽¹⁾, H′⁽²⁾] + [f_1⁽³⁾, H0] − ω f_1⁽³⁾ = 0,
    ///   [f_2⁽³⁾, H0] − 2ω f_2⁽³⁾ = 0,
    ///   ½[f_2⁽²⁾, H_1] + 1/12[f_1⁽¹⁾,[f_1⁽¹⁾, H_1]] + [f_3⁽³⁾, H0] − 3ω f_3⁽³⁾ = 0.
    pub fn third_order_generators_monochrome(&self, f: &GeneratorSeries, h2: &Expansion) -> Result<GeneratorSeries> {
        self.require_monochrome()?;
        self.require(f, 1)?;
        let mut out = f.clone();
        let (Some(hp), Some(hm)) = (self.drive(1, 1), self.drive(1, -1)) else {
            return Ok(out);
        };
        let f1p = f.get(1, 1).cloned().unwrap_or_else(|| self.zero());
        let f1m = f.get(1, -1).cloned().unwrap_or_else(|| self.zero());
        let f22 = self.gen(f, 2, 2).unwrap_or_else(|| self.zero());

        let mut s1 = f22.commutator(&hm)?.scale(C64::new(0.5, 0.0));
        s1.add_scaled(&f1m.commutator(&f1p.commutator(&hp)?)?, 1.0 / 12.0)?;
        s1.add_scaled(&f1p.commutator(h2)?, 2.0 / 3.0)?;

        let mut s3 = f22.commutator(&hp)?.scale(C64::new(0.5, 0.0));
        s3.add_scaled(&f1p.commutator(&f1p.commutator(&hp)?)?, 1.0 / 12.0)?;

        let mut sources = BTreeMap::new();
        sources.insert(1, s1);
        sources.insert(2, self.zero());
        sources.insert(3, s3);
        self.solve_and_pair(&mut out, 3, &sources)?;
        Ok(out)
    }

    /// H′⁽⁴⁾ = X + X† with
    /// X = ½[f_1⁽³⁾, H_{−1}] + 1/12[f_2⁽²⁾,[f_{−1}⁽¹⁾, H_{−1}]] + 1/12[f_{−1}⁽¹⁾,[f_2⁽²⁾, H_{−1}]]
    ///     − 1/12[f_1⁽¹⁾,[f_{−1}⁽¹⁾, H′⁽²⁾]].
    pub fn effective_h4_monochrome(&self, f: &GeneratorSeries, h2: &Expansion) -> Result<Expansion> {
        self.effective_h4_with_defect(f, h2).map(|(e, _)| e)
    }

    fn effective_h4_with_defect(&self, f: &GeneratorSeries, h2: &Expansion) -> Result<(Expansion, f64)> {
        self.require_monochrome()?;
        self.require(f, 1)?;
        let Some(hm) = self.drive(1, -1) else {
            return Ok((self.zero(), 0.0));
        };
        if f.get(3, 1).is_none() {
            return Err(Error::Contract("H′⁽⁴⁾ needs the third-order generators".into()));
        }
        let f1p = f.get(1, 1).cloned().unwrap_or_else(|| self.zero());
        let f1m = f.get(1, -1).cloned().unwrap_or_else(|| self.zero());
        let f22 = self.gen(f, 2, 2).unwrap_or_else(|| self.zero());
        let f31 = f.get(3, 1).unwrap();

        let mut x = f31.commutator(&hm)?.scale(C64::new(0.5, 0.0));
        x.add_scaled(&f22.commutator(&f1m.commutator(&hm)?)?, 1.0 / 12.0)?;
        x.add_scaled(&f1m.commutator(&f22.commutator(&hm)?)?, 1.0 / 12.0)?;
        x.add_scaled(&f1p.commutator(&f1m.commutator(h2)?)?, -1.0 / 12.0)?;
        let h4 = x.axpy(&x.adjoint(), C64::new(1.0, 0.0))?;
        Ok(hermitian_part(h4))
    }

    /// Generators through order max_order − 1 and H′⁽ᵏ⁾ for k ≤ max_order (≤ 4).
    pub fn run(&self, max_order: u32) -> Result<(GeneratorSeries, EffectiveHamiltonian)> {
        if max_order > 4 {
            return Err(Error::Domain(format!("orders beyond 4 are not available, got {max_order}")));
        }
        let mut graded = BTreeMap::new();
        let mut defects = BTreeMap::new();
        graded.insert(0, Expansion::constant(self.ph.h0().clone(), self.grade()));
        defects.insert(0, self.ph.h0().hermiticity_defect());
        if max_order >= 1 {
            if let Some(h) = self.drive(1, 0) {
                defects.insert(1, h.total().hermiticity_defect());
                graded.insert(1, h);
            }
        }
        let mut f = self.empty_series();
        if max_order >= 2 {
            f = self.first_order_generators()?;
            let (h2, d2) = self.effective_h2_with_defect(&f)?;
            defects.insert(2, d2);
            if max_order >= 3 {
                f = self.second_order_generators(&f)?;
                let (h3, d3) = self.effective_h3_with_defect(&f)?;
                defects.insert(3, d3);
                graded.insert(3, h3);
            }
            if max_order >= 4 {
                f = self.third_order_generators_monochrome(&f, &h2)?;
                let (h4, d4) = self.effective_h4_with_defect(&f, &h2)?;
                defects.insert(4, d4);
                graded.insert(4, h4);
            }
            graded.insert(2, h2);
        }
        let orders = graded.iter().map(|(k, e)| (*k, e.total().with_hint(Hint::Hermitian).enforce_hint())).collect();
        let mut generator_orders: Vec<u32> = f.keys().map(|(n, _)| n).collect();
        generator_orders.dedup();
        Ok((f, EffectiveHamiltonian { orders, graded, method: self.method, generator_orders, hermiticity_defects: defects }))
    }
}

/// First-order generators of `ph` (engine built on the fly).
pub fn first_order_generators(ph: &PeriodicHamiltonian, method: GeneratorMethod) -> Result<GeneratorSeries> {
    FswtEngine::new(ph, method)?.first_order_generators()
}

/// Effective Hamiltonian through `max_order` together with the generators used.
pub fn compute_effective_hamiltonian(
    ph: &PeriodicHamiltonian,
    method: GeneratorMethod,
    max_order: u32,
) -> Result<(GeneratorSeries, EffectiveHamiltonian)> {
    FswtEngine::new(ph, method)?.run(max_order)
}

/// Û_t = exp(Σ_{n ≤ max_order, j} f_j⁽ⁿ⁾ e^{ijωt}), from the summed generator.
pub fn micromotion_at_time(f: &GeneratorSeries, t: f64, max_order: u32) -> Result<OperatorMatrix> {
    unitary_exp(&f.generator_at_time(t, max_order))
}

/// Fourier coefficients Û_j, j = −M…M, of the micro-motion unitary.
#[derive(Debug, Clone)]
pub struct MicromotionFourier {
    pub cutoff: usize,
    coeffs: Vec<OperatorMatrix>,
    /// ‖I − Σ_j Û_j†Û_j‖_max: weight missing beyond the cutoff.
    pub tail_defect: f64,
}

impl MicromotionFourier {
    pub fn get(&self, j: i32) -> Option<&OperatorMatrix> {
        let k = j + self.cutoff as i32;
        if k < 0 {
            return None;
        }
        self.coeffs.get(k as usize)
    }

    /// Σ_j Û_j e^{ijωt}.
    pub fn reconstruct(&self, omega: f64, t: f64) -> OperatorMatrix {
        let m = self.cutoff as i32;
        let mut acc = OperatorMatrix::zeros(self.coeffs[0].sector(), self.coeffs[0].dim());
        for j in -m..=m {
            acc = acc.axpy(self.get(j).unwrap(), C64::new(0.0, j as f64 * omega * t).exp()).unwrap();
        }
        acc
    }
}

/// Û_j = (1/T)∫₀ᵀ e^{−ijωt} Û_t dt by the 8M-point periodic trapezoid rule.
pub fn micromotion_fourier(f: &GeneratorSeries, max_order: u32, cutoff: usize) -> Result<MicromotionFourier> {
    if cutoff == 0 {
        return Err(Error::Domain("harmonic cutoff must be at least 1".into()));
    }
    let m = cutoff as i32;
    let points = 8 * cutoff;
    let period = 2.0 * core::f64::consts::PI / f.omega();
    let zero = OperatorMatrix::zeros(f.sector(), f.dim());
    let mut coeffs = vec![zero; 2 * cutoff + 1];
    for p in 0..points {
        let t = period * p as f64 / points as f64;
        let u = micromotion_at_time(f, t, max_order)?;
        for j in -m..=m {
            let w = C64::new(0.0, -(j as f64) * f.omega() * t).exp() / points as f64;
            let k = (j + m) as usize;
            coeffs[k] = coeffs[k].axpy(&u, w)?;
        }
    }
    let mut norm = OperatorMatrix::zeros(f.sector(), f.dim());
    for c in &coeffs {
        norm = norm.try_add(&c.adjoint().try_mul(c)?)?;
    }
    let tail_defect = norm.try_sub(&OperatorMatrix::identity(f.sector(), f.dim()))?.max_abs();
    Ok(MicromotionFourier { cutoff, coeffs, tail_defect })
}

/// Short human-readable summary of which generator entries were produced.
pub fn describe(f: &GeneratorSeries) -> String {
    let mut s = String::new();
    for ((n, j), e) in f.iter() {
        s.push_str(&format!("f[{n},{j}] max {:.3e}\n", e.max_abs()));
    }
    s
}
