//! Fixed-(L, N↑, N↓) Fock sectors of a spin-½ fermion chain and
//! second-quantized operators restricted to them.
//!
//! Orbital order for Jordan–Wigner strings: all up orbitals (sites 1…L) come
//! before all down orbitals. A basis state with occupied orbitals p₁ < p₂ < …
//! is c†_{p₁} c†_{p₂} … |vac⟩. Sites are 1-based in every public function.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator::{Hint, OperatorMatrix, SectorTag};
use crate::C64;

pub use crate::operator::{commutator, unitary_exp};

/// Largest chain length the bitmask representation accepts.
pub const MAX_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

/// One creation or annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub dagger: bool,
    pub site: usize,
    pub spin: Spin,
}

/// c†_{site, spin}
pub fn cdag(site: usize, spin: Spin) -> Ladder {
    Ladder { dagger: true, site, spin }
}

/// c_{site, spin}
pub fn c(site: usize, spin: Spin) -> Ladder {
    Ladder { dagger: false, site, spin }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    n_up: usize,
    n_down: usize,
    /// (up mask, down mask), ascending.
    states: Vec<(u32, u32)>,
}

fn masks_with_popcount(sites: usize, n: usize) -> Vec<u32> {
    (0u32..(1u32 << sites)).filter(|m| m.count_ones() as usize == n).collect()
}

impl SectorBasis {
    pub fn new(sites: usize, n_up: usize, n_down: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::Domain(format!("site count {sites} outside 1..={MAX_SITES}")));
        }
        if n_up > sites || n_down > sites {
            return Err(Error::Domain(format!("particle counts ({n_up}, {n_down}) exceed L = {sites}")));
        }
        let ups = masks_with_popcount(sites, n_up);
        let downs = masks_with_popcount(sites, n_down);
        let mut states = Vec::with_capacity(ups.len() * downs.len());
        for &u in &ups {
            for &d in &downs {
                states.push((u, d));
            }
        }
        Ok(SectorBasis { sites, n_up, n_down, states })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn particles(&self) -> usize {
        self.n_up + self.n_down
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[(u32, u32)] {
        &self.states
    }

    pub fn tag(&self) -> SectorTag {
        SectorTag::Fock { sites: self.sites, n_up: self.n_up, n_down: self.n_down }
    }

    pub fn index_of(&self, up: u32, down: u32) -> Option<usize> {
        self.states.binary_search(&(up, down)).ok()
    }

    /// Occupation (0 or 1) of (site, spin) in state k.
    pub fn occupation(&self, k: usize, site: usize, spin: Spin) -> u32 {
        let (u, d) = self.states[k];
        let m = match spin {
            Spin::Up => u,
            Spin::Down => d,
        };
        (m >> (site - 1)) & 1
    }

    fn orbital(&self, site: usize, spin: Spin) -> u32 {
        match spin {
            Spin::Up => (site - 1) as u32,
            Spin::Down => (self.sites + site - 1) as u32,
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return Err(Error::Domain(format!("site {site} outside 1..={}", self.sites)));
        }
        Ok(())
    }

    /// Apply a product of ladder operators (rightmost acts first) to state k.
    /// Returns the target combined mask and the fermionic sign, or `None`
    /// when the string annihilates the state.
    fn apply(&self, k: usize, ops: &[Ladder]) -> Option<(u64, f64)> {
        let (u, d) = self.states[k];
        let mut conf = (u as u64) | ((d as u64) << self.sites);
        let mut sign = 1.0;
        for op in ops.iter().rev() {
            let p = self.orbital(op.site, op.spin);
            let occupied = (conf >> p) & 1 == 1;
            if occupied == op.dagger {
                return None;
            }
            if (conf & ((1u64 << p) - 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            conf ^= 1u64 << p;
        }
        Some((conf, sign))
    }

    fn split(&self, conf: u64) -> (u32, u32) {
        let low = (1u64 << self.sites) - 1;
        ((conf & low) as u32, (conf >> self.sites) as u32)
    }

    /// Matrix of `coeff · ops[0] ops[1] …` on this sector.
    pub fn string_operator(&self, ops: &[Ladder], coeff: C64) -> Result<OperatorMatrix> {
        let mut b = OperatorBuilder::new(self);
        b.add(ops, coeff)?;
        Ok(b.finish())
    }
}

/// Accumulates sums of ladder strings into one sparse matrix.
pub struct OperatorBuilder<'a> {
    basis: &'a SectorBasis,
    trips: Vec<(usize, usize, C64)>,
}

impl<'a> OperatorBuilder<'a> {
    pub fn new(basis: &'a SectorBasis) -> Self {
        OperatorBuilder { basis, trips: Vec::new() }
    }

    pub fn basis(&self) -> &SectorBasis {
        self.basis
    }

    /// Add `coeff · ops[0] ops[1] …`. Strings that leave the sector are a
    /// domain error.
    pub fn add(&mut self, ops: &[Ladder], coeff: C64) -> Result<()> {
        for op in ops {
            self.basis.check_site(op.site)?;
        }
        let (dup, ddown) = ops.iter().fold((0i64, 0i64), |(a, b), op| {
            let s = if op.dagger { 1 } else { -1 };
            match op.spin {
                Spin::Up => (a + s, b),
                Spin::Down => (a, b + s),
            }
        });
        if dup != 0 || ddown != 0 {
            return Err(Error::Domain("operator string changes the particle numbers".into()));
        }
        if coeff == C64::new(0.0, 0.0) {
            return Ok(());
        }
        for k in 0..self.basis.dim() {
            if let Some((conf, sign)) = self.basis.apply(k, ops) {
                let (u, d) = self.basis.split(conf);
                let row = self.basis.index_of(u, d).expect("number-conserving string stays in sector");
                self.trips.push((row, k, coeff * sign));
            }
        }
        Ok(())
    }

    pub fn add_real(&mut self, ops: &[Ladder], coeff: f64) -> Result<()> {
        self.add(ops, C64::new(coeff, 0.0))
    }

    pub fn finish(self) -> OperatorMatrix {
        OperatorMatrix::from_triplets(self.basis.tag(), self.basis.dim(), self.trips)
    }
}

/// Sector basis, with a domain error on bad counts.
pub fn build_sector_basis(sites: usize, n_up: usize, n_down: usize) -> Result<SectorBasis> {
    SectorBasis::new(sites, n_up, n_down)
}

/// c†_{i,s} c_{j,s}; i = j gives the number operator n_{i,s}.
pub fn one_body_operator(basis: &SectorBasis, spin: Spin, i: usize, j: usize) -> Result<OperatorMatrix> {
    let m = basis.string_operator(&[cdag(i, spin), c(j, spin)], C64::new(1.0, 0.0))?;
    Ok(if i == j { m.with_hint(Hint::Hermitian) } else { m })
}

pub fn number_operator(basis: &SectorBasis, site: usize, spin: Spin) -> Result<OperatorMatrix> {
    basis.check_site(site)?;
    let d: Vec<f64> = (0..basis.dim()).map(|k| basis.occupation(k, site, spin) as f64).collect();
    Ok(OperatorMatrix::from_real_diagonal(basis.tag(), &d))
}

/// Diagonal operator Σ_k f(state k).
pub fn diagonal_operator(basis: &SectorBasis, f: impl Fn(usize) -> f64) -> OperatorMatrix {
    let d: Vec<f64> = (0..basis.dim()).map(f).collect();
    OperatorMatrix::from_real_diagonal(basis.tag(), &d)
}

/// N̂ = Σ_{j,s} n_{j,s}.
pub fn total_number(basis: &SectorBasis) -> OperatorMatrix {
    let n = basis.particles() as f64;
    diagonal_operator(basis, |_| n)
}

/// Ŝ_z = ½ Σ_j (n_{j↑} − n_{j↓}).
pub fn total_spin_z(basis: &SectorBasis) -> OperatorMatrix {
    let s = 0.5 * (basis.n_up() as f64 - basis.n_down() as f64);
    diagonal_operator(basis, |_| s)
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use alloc::vec;
    use std::collections::BTreeMap;

    #[test]
    fn dimensions() {
        assert_eq!(SectorBasis::new(2, 1, 1).unwrap().dim(), 4);
        assert_eq!(SectorBasis::new(6, 3, 3).unwrap().dim(), 400);
        assert_eq!(SectorBasis::new(12, 6, 6).unwrap().dim(), 853_776);
        assert!(matches!(SectorBasis::new(2, 3, 0), Err(Error::Domain(_))));
        assert!(matches!(SectorBasis::new(MAX_SITES + 1, 0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn index_is_a_bijection_and_order_is_deterministic() {
        let b = SectorBasis::new(5, 2, 3).unwrap();
        for (k, &(u, d)) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(u, d), Some(k));
            assert_eq!(u.count_ones(), 2);
            assert_eq!(d.count_ones(), 3);
            assert!(u < 32 && d < 32);
        }
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b, SectorBasis::new(5, 2, 3).unwrap());
    }

    #[test]
    fn single_particle_hop() {
        let b = SectorBasis::new(2, 1, 0).unwrap();
        let m = one_body_operator(&b, Spin::Up, 1, 2).unwrap();
        // |01⟩ (site 1 occupied, mask 0b01) → … c†_1 c_2 moves the particle from site 2 to site 1
        let from = b.index_of(0b10, 0).unwrap();
        let to = b.index_of(0b01, 0).unwrap();
        let t: Vec<_> = m.triplets().collect();
        assert_eq!(t, vec![(to, from, C64::new(1.0, 0.0))]);
    }

    #[test]
    fn number_operator_is_diagonal_occupation() {
        let b = SectorBasis::new(3, 2, 1).unwrap();
        let m = one_body_operator(&b, Spin::Up, 2, 2).unwrap();
        assert!(m.is_diagonal());
        for k in 0..b.dim() {
            assert_eq!(m.get(k, k).re, b.occupation(k, 2, Spin::Up) as f64);
        }
        assert_eq!(m, number_operator(&b, 2, Spin::Up).unwrap());
    }

    #[test]
    fn site_out_of_range() {
        let b = SectorBasis::new(3, 1, 1).unwrap();
        assert!(matches!(one_body_operator(&b, Spin::Up, 0, 1), Err(Error::Domain(_))));
        assert!(matches!(one_body_operator(&b, Spin::Down, 1, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn densities_commute() {
        let b = SectorBasis::new(3, 2, 2).unwrap();
        let a = number_operator(&b, 1, Spin::Up).unwrap();
        let d = number_operator(&b, 2, Spin::Down).unwrap();
        assert_eq!(commutator(&a, &d).unwrap().nnz(), 0);
    }

    #[test]
    fn hop_across_occupied_same_spin_site_has_minus_sign() {
        let b = SectorBasis::new(3, 2, 0).unwrap();
        let m = one_body_operator(&b, Spin::Up, 1, 3).unwrap();
        let from = b.index_of(0b110, 0).unwrap();
        let to = b.index_of(0b011, 0).unwrap();
        assert_eq!(m.get(to, from), C64::new(-1.0, 0.0));
        // nothing in between: sign +1
        let b1 = SectorBasis::new(3, 1, 0).unwrap();
        let m1 = one_body_operator(&b1, Spin::Up, 1, 3).unwrap();
        assert_eq!(m1.get(b1.index_of(0b001, 0).unwrap(), b1.index_of(0b100, 0).unwrap()), C64::new(1.0, 0.0));
    }

    // First-quantized oracle: a state of N particles is an antisymmetric
    // amplitude over ordered tuples of orbitals. c† and c act by the usual
    // (anti)symmetrized insertion and removal, independent of bit tricks.
    type Wave = BTreeMap<Vec<u32>, f64>;

    fn perm_sign(v: &[u32]) -> f64 {
        let mut s = 1.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i] > v[j] {
                    s = -s;
                }
            }
        }
        s
    }

    fn permutations(v: &[u32]) -> Vec<Vec<u32>> {
        if v.len() <= 1 {
            return vec![v.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..v.len() {
            let mut rest = v.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    fn slater(orbitals: &[u32]) -> Wave {
        let norm = 1.0 / factorial(orbitals.len()).sqrt();
        permutations(orbitals).into_iter().map(|p| {
            let s = perm_sign(&p);
            (p, s * norm)
        }).collect()
    }

    fn create(p: u32, psi: &Wave) -> Wave {
        let mut out = Wave::new();
        for (x, &a) in psi {
            let n = x.len();
            let f = 1.0 / ((n + 1) as f64).sqrt();
            for k in 0..=n {
                let mut y = x.clone();
                y.insert(k, p);
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                *out.entry(y).or_insert(0.0) += s * f * a;
            }
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    fn annihilate(p: u32, psi: &Wave) -> Wave {
        let mut out = Wave::new();
        for (x, &a) in psi {
            if x[0] == p {
                let n = x.len() as f64;
                *out.entry(x[1..].to_vec()).or_insert(0.0) += n.sqrt() * a;
            }
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    fn overlap(a: &Wave, b: &Wave) -> f64 {
        a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or(0.0)).sum()
    }

    fn orbitals_of(b: &SectorBasis, k: usize) -> Vec<u32> {
        let (u, d) = b.states()[k];
        let conf = (u as u64) | ((d as u64) << b.sites());
        (0..2 * b.sites() as u32).filter(|p| (conf >> p) & 1 == 1).collect()
    }

    fn oracle_matrix(b: &SectorBasis, ops: &[Ladder]) -> Vec<Vec<f64>> {
        let orb = |op: &Ladder| match op.spin {
            Spin::Up => (op.site - 1) as u32,
            Spin::Down => (b.sites() + op.site - 1) as u32,
        };
        let n = b.dim();
        let waves: Vec<Wave> = (0..n).map(|k| slater(&orbitals_of(b, k))).collect();
        let mut m = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut psi = waves[col].clone();
            for op in ops.iter().rev() {
                psi = if op.dagger { create(orb(op), &psi) } else { annihilate(orb(op), &psi) };
            }
            for row in 0..n {
                m[row][col] = overlap(&waves[row], &psi);
            }
        }
        m
    }

    fn assert_matches_oracle(b: &SectorBasis, ops: &[Ladder]) {
        let got = b.string_operator(ops, C64::new(1.0, 0.0)).unwrap();
        let want = oracle_matrix(b, ops);
        for r in 0..b.dim() {
            for k in 0..b.dim() {
                let g = got.get(r, k);
                assert!(g.im == 0.0 && (g.re - want[r][k]).abs() < 1e-12, "{ops:?} entry ({r},{k}): {g} vs {}", want[r][k]);
            }
        }
    }

    #[test]
    fn one_body_signs_match_slater_determinants() {
        for (l, nu, nd) in [(3, 1, 0), (3, 2, 0), (3, 2, 1), (4, 2, 2), (4, 3, 1)] {
            let b = SectorBasis::new(l, nu, nd).unwrap();
            for s in Spin::BOTH {
                for i in 1..=l {
                    for j in 1..=l {
                        assert_matches_oracle(&b, &[cdag(i, s), c(j, s)]);
                    }
                }
            }
        }
    }

    #[test]
    fn two_body_signs_match_slater_determinants() {
        let b = SectorBasis::new(3, 2, 1).unwrap();
        for s in Spin::BOTH {
            let t = s.flip();
            assert_matches_oracle(&b, &[cdag(2, s), cdag(1, t), c(2, t), c(3, s)]);
            assert_matches_oracle(&b, &[cdag(2, s), cdag(2, t), c(1, t), c(3, s)]);
            assert_matches_oracle(&b, &[cdag(1, Spin::Up), cdag(1, Spin::Down), c(2, Spin::Up), c(2, Spin::Down)]);
            assert_matches_oracle(&b, &[cdag(1, s), c(3, s), cdag(2, t), c(2, t)]);
        }
    }

    #[test]
    fn anticommutation_through_hop_products() {
        // c†_i c_j c†_j c_i + c†_j c_i c†_i c_j = n_i (1 − n_j) + n_j (1 − n_i) for i ≠ j
        let b = SectorBasis::new(4, 2, 2).unwrap();
        for s in Spin::BOTH {
            for i in 1..=4 {
                for j in 1..=4 {
                    if i == j {
                        continue;
                    }
                    let a = one_body_operator(&b, s, i, j).unwrap();
                    let bb = one_body_operator(&b, s, j, i).unwrap();
                    let lhs = &(&a * &bb) + &(&bb * &a);
                    let ni = number_operator(&b, i, s).unwrap();
                    let nj = number_operator(&b, j, s).unwrap();
                    let id = OperatorMatrix::identity(b.tag(), b.dim());
                    let rhs = &(&ni * &(&id - &nj)) + &(&nj * &(&id - &ni));
                    assert!(lhs.max_abs_diff(&rhs) == 0.0);
                }
            }
        }
    }

    #[test]
    fn strings_leaving_the_sector_are_rejected() {
        let b = SectorBasis::new(3, 1, 1).unwrap();
        assert!(b.string_operator(&[cdag(1, Spin::Up), c(1, Spin::Down)], C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn builders_are_deterministic() {
        let b = SectorBasis::new(4, 2, 1).unwrap();
        let ops = [cdag(1, Spin::Up), c(3, Spin::Up)];
        assert_eq!(b.string_operator(&ops, C64::new(0.3, -1.0)).unwrap(), b.string_operator(&ops, C64::new(0.3, -1.0)).unwrap());
    }
}
