//! Acceptance runner: one PASS/FAIL line per primary criterion.
//!
//! Exits 0 regardless of the outcome so the workspace test run stays usable;
//! set `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use fswt_core::dynamics::{
    cdw_comparison, cdw_state, exact_propagator, return_rate_series, strobe_times, EffectiveEvolver, EvolutionMethod, Evolver, ExactEvolver,
};
use fswt_core::fswt::{micromotion_at_time, micromotion_fourier, FswtEngine};
use fswt_core::linalg::{unitarity_defect, vec_norm, DMat, HermitianEigen};
use fswt_core::model::{build_driven_hubbard, kinetic_operator};
use fswt_core::operator::commutator;
use fswt_core::reference::{
    analytic_f31, analytic_h4, analytic_y0, analytic_y1, analytic_y2, analytic_z1, hfe_hamiltonian, heisenberg_hamiltonian,
    spin_exchange_coefficient, zero_doublon_projector,
};
use fswt_core::sambe::{build_sambe, build_transform, offdiagonal_block_norms};
use fswt_core::sylvester::{residual_norm, solve_kronecker_oracle, SolveOptions, SpectralSolver, SylvesterProblem};
use fswt_core::{GeneratorMethod, HubbardDriveParams, OperatorMatrix, PeriodicHamiltonian, SectorBasis, SectorTag, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "sylvester solvers", budget: Duration::from_secs(60), run: sylvester_correctness },
        Criterion { id: 2, name: "closed-form oracles", budget: Duration::from_secs(60), run: analytic_oracles },
        Criterion { id: 3, name: "high-frequency reduction", budget: Duration::from_secs(60), run: hfe_reduction },
        Criterion { id: 4, name: "structural zeros", budget: Duration::from_secs(30), run: structural_zeros },
        Criterion { id: 5, name: "bessel limit", budget: Duration::from_secs(30), run: bessel_limit },
        Criterion { id: 6, name: "return-rate benchmark", budget: Duration::from_secs(1800), run: dynamics_benchmark },
        Criterion { id: 7, name: "sambe scaling", budget: Duration::from_secs(300), run: sambe_scaling },
        Criterion { id: 8, name: "free fermions", budget: Duration::from_secs(60), run: free_fermions },
        Criterion { id: 9, name: "spin-model limit", budget: Duration::from_secs(60), run: spin_model },
        Criterion { id: 10, name: "invariant suites", budget: Duration::from_secs(300), run: invariants },
    ];
    let filter: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    let mut ran = 0;
    for c in &criteria {
        if filter.is_some_and(|f| f != c.id) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let out = (c.run)();
        let dt = t.elapsed();
        let (mut ok, mut detail) = match out {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if dt > c.budget {
            ok = false;
            detail.push_str(&format!("; over time budget {:?}", c.budget));
        }
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {}: {} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, c.id, c.name, detail, dt.as_secs_f64());
    }
    println!("acceptance: {}/{} passed", ran - failed, ran);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hubbard(l: usize, nu: usize, nd: usize, u: f64, g: f64, w: f64) -> (SectorBasis, PeriodicHamiltonian) {
    let b = SectorBasis::new(l, nu, nd).unwrap();
    let ph = build_driven_hubbard(&HubbardDriveParams::new(l, 1.0, u, g, w), &b).unwrap();
    (b, ph)
}

fn scaled_diff(a: &OperatorMatrix, reference: &OperatorMatrix) -> f64 {
    a.max_abs_diff(reference) / reference.max_abs().max(1.0)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn random_dense(rng: &mut ChaCha8Rng, n: usize) -> DMat {
    DMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMat {
    let a = random_dense(rng, n);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn sylvester_correctness() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_agree = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut instances = 0;
    while instances < 20 {
        let n = rng.gen_range(8..=64);
        let tag = SectorTag::Generic { dim: n };
        let h0 = OperatorMatrix::from_dense(tag, &random_hermitian(&mut rng, n));
        let rhs = OperatorMatrix::from_dense(tag, &random_dense(&mut rng, n));
        let solver = SpectralSolver::new(&h0).unwrap();
        let shift = solver.spread() * rng.gen_range(0.2..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        if solver.resonance_margin(shift) < 1e-2 {
            continue;
        }
        let (r, a) = compare_solvers(&solver, &h0, &rhs, shift)?;
        worst_res = worst_res.max(r);
        worst_agree = worst_agree.max(a);
        instances += 1;
    }
    let mut sectors = 0;
    for l in 2..=6 {
        for nu in 0..=l {
            for nd in 0..=l {
                let (_, ph) = hubbard(l, nu, nd, 3.0, 4.0, 16.0);
                let solver = SpectralSolver::new(ph.h0()).unwrap();
                let (r, a) = compare_solvers(&solver, ph.h0(), ph.component(1, 1).unwrap(), 16.0)?;
                worst_res = worst_res.max(r);
                worst_agree = worst_agree.max(a);
                sectors += 1;
            }
        }
    }
    check(
        worst_res <= 1e-9 && worst_agree <= 1e-10,
        format!("{instances} random + {sectors} Hubbard sectors; residual/‖C‖ {worst_res:.1e} (≤1e-9), spectral vs Kronecker {worst_agree:.1e} (≤1e-10)"),
    )
}

/// (residual / ‖C‖_max, ‖f_spec − f_kron‖_max / max(1, ‖f‖_max)).
fn compare_solvers(solver: &SpectralSolver, h0: &OperatorMatrix, rhs: &OperatorMatrix, shift: f64) -> Result<(f64, f64), String> {
    let prob = SylvesterProblem::new(h0, rhs, shift).unwrap();
    let f = solver.solve(rhs, shift, SolveOptions::default()).map_err(|e| e.to_string())?;
    let k = solve_kronecker_oracle(&prob).map_err(|e| format!("{e} (dim {}, shift {shift:.3})", h0.dim()))?;
    let res = residual_norm(&f, &prob).unwrap() / rhs.max_abs().max(1e-300);
    Ok((res, scaled_diff(&f, &k)))
}

fn analytic_oracles() -> Outcome {
    let names = ["y0", "y1", "y2", "z1", "third-order generator", "fourth-order hamiltonian"];
    let mut worst = [0.0f64; 6];
    let mut at = [String::new(), String::new(), String::new(), String::new(), String::new(), String::new()];
    for (l, n) in [(2, 1), (4, 2)] {
        for u in [0.0, 3.0, 8.0] {
            for w in [12.0, 16.0] {
                let p = HubbardDriveParams::new(l, 1.0, u, w / 4.0, w);
                let b = SectorBasis::new(l, n, n).unwrap();
                let ph = build_driven_hubbard(&p, &b).unwrap();
                let e2 = FswtEngine::new(&ph, GeneratorMethod::HoppingSeries(2)).unwrap();
                let f = e2.first_order_generators().unwrap();
                let f11 = f.get(1, 1).unwrap();
                let e1 = FswtEngine::new(&ph, GeneratorMethod::HoppingSeries(1)).unwrap();
                let f1 = e1.first_order_generators().unwrap();
                let h2 = e1.effective_h2(&f1).unwrap();
                let f2 = e1.second_order_generators(&f1).unwrap();
                let f3 = e1.third_order_generators_monochrome(&f2, &h2).unwrap();
                let h4 = e1.effective_h4_monochrome(&f3, &h2).unwrap();
                let errs = [
                    scaled_diff(f11.term(0), &analytic_y0(&p, &b).unwrap()),
                    scaled_diff(f11.term(1), &analytic_y1(&p, &b).unwrap()),
                    scaled_diff(f11.term(2), &analytic_y2(&p, &b).unwrap()),
                    scaled_diff(f3.get(2, 2).unwrap().term(1), &analytic_z1(&p, &b).unwrap()),
                    scaled_diff(f3.get(3, 1).unwrap().term(1), &analytic_f31(&p, &b).unwrap()),
                    scaled_diff(h4.term(1), &analytic_h4(&p, &b).unwrap()),
                ];
                for (k, e) in errs.iter().enumerate() {
                    if *e > worst[k] {
                        worst[k] = *e;
                        at[k] = format!("L={l} U={u} ω={w}");
                    }
                }
            }
        }
    }
    let mut detail = String::new();
    let mut ok = true;
    for k in 0..6 {
        let pass = worst[k] <= 1e-12;
        ok &= pass;
        if pass {
            write!(detail, "{} {:.1e}; ", names[k], worst[k]).unwrap();
        } else {
            write!(detail, "{} {:.1e} at {} (>1e-12); ", names[k], worst[k], at[k]).unwrap();
        }
    }
    if !ok {
        detail.push_str("printed third-order dressing disagrees with its defining equation on doublon-changing hops");
    }
    check(ok, detail.trim_end_matches("; ").to_string())
}

fn hfe_reduction() -> Outcome {
    let omegas = [40.0, 80.0, 160.0, 320.0];
    let mut diffs = Vec::new();
    for &w in &omegas {
        let (_, ph) = hubbard(4, 2, 2, 3.0, 4.0, w);
        let (_, h) = FswtEngine::new(&ph, GeneratorMethod::Spectral).unwrap().run(2).unwrap();
        let correction = hfe_hamiltonian(&ph).unwrap().try_sub(ph.h0()).unwrap();
        diffs.push(h.order(2).unwrap().max_abs_diff(&correction));
    }
    let s = slope(&omegas, &diffs);
    check((s + 4.0).abs() <= 0.3, format!("log-log slope {s:.3} (−4 ± 0.3); ‖ΔH‖ {:.2e} … {:.2e}", diffs[0], diffs[3]))
}

fn structural_zeros() -> Outcome {
    let mut worst = [0.0f64; 3];
    for (l, n, u) in [(2, 1, 3.0), (4, 2, 3.0), (4, 2, 5.0)] {
        for method in [GeneratorMethod::Spectral, GeneratorMethod::HoppingSeries(2)] {
            let (_, ph) = hubbard(l, n, n, u, 4.0, 16.0);
            let (f, h) = FswtEngine::new(&ph, method).unwrap().run(4).unwrap();
            let get = |o, j| f.get(o, j).map_or(0.0, |e| e.max_abs());
            worst[0] = worst[0].max(get(2, 1)).max(get(2, -1));
            worst[1] = worst[1].max(h.order(3).map_or(0.0, |m| m.max_abs()));
            worst[2] = worst[2].max(get(3, 2)).max(get(3, -2));
        }
    }
    check(
        worst.iter().all(|&x| x <= 1e-12),
        format!("max|f⁽²⁾_±1| {:.1e}, max|H′⁽³⁾| {:.1e}, max|f⁽³⁾_±2| {:.1e} (≤1e-12)", worst[0], worst[1], worst[2]),
    )
}

fn bessel_limit() -> Outcome {
    let mut worst = 0.0f64;
    for (g, w) in [(4.0, 16.0), (2.0, 11.0), (1.0, 20.0)] {
        for (l, nu, nd) in [(4, 2, 2), (5, 2, 1)] {
            let (b, ph) = hubbard(l, nu, nd, 0.0, g, w);
            let (_, h) = FswtEngine::new(&ph, GeneratorMethod::HoppingSeries(1)).unwrap().run(4).unwrap();
            let hop = kinetic_operator(&b, 1.0);
            let mut got = hop.clone();
            for k in [2, 4] {
                got = got.try_add(h.graded[&k].term(1)).unwrap();
            }
            let r = g * g / (w * w);
            let want = hop.scale_real(1.0 - r + 0.25 * r * r);
            worst = worst.max(got.max_abs_diff(&want) / want.max_abs());
        }
    }
    check(worst <= 1e-10, format!("relative deviation of renormalized hopping {worst:.1e} (≤1e-10)"))
}

fn dynamics_benchmark() -> Outcome {
    let mut detail = String::new();
    let mut ok = true;
    let mut ratio16 = f64::NAN;
    for w in [8.5, 9.0, 10.0, 12.0, 16.0, 20.0] {
        let p = HubbardDriveParams::new(6, 1.0, 3.0, w / 4.0, w);
        let c = cdw_comparison(&p, 60.0, 128, GeneratorMethod::HoppingSeries(2), 2).map_err(|e| e.to_string())?;
        let ef = c.nrmse_fswt().map_err(|e| e.to_string())?;
        let eh = c.nrmse_hfe().map_err(|e| e.to_string())?;
        write!(detail, "ω={w}: {ef:.3}/{eh:.3}; ").unwrap();
        if w >= 9.0 {
            ok &= ef < eh;
        } else {
            ok &= (0.1..=0.3).contains(&ef);
        }
        if w == 16.0 {
            ratio16 = ef / eh;
        }
    }
    ok &= ratio16 <= 1.0 / 3.0;
    write!(detail, "ratio at ω=16 {ratio16:.3} (≤1/3)").unwrap();
    check(ok, format!("ℰ_FSWT/ℰ_HFE {detail}"))
}

fn sambe_offdiag(g_over_w: f64, order: u32) -> f64 {
    let w = 10.0;
    let b = SectorBasis::new(2, 1, 1).unwrap();
    let mut p = HubbardDriveParams::new(2, 1.0, 3.0, g_over_w * w, w);
    p.dipole_offset = -1.5;
    let ph = build_driven_hubbard(&p, &b).unwrap();
    let (f, _) = FswtEngine::new(&ph, GeneratorMethod::Spectral).unwrap().run(order + 1).unwrap();
    let u = micromotion_fourier(&f, order, 8).unwrap();
    let j = build_transform(&u, 8).unwrap();
    let s = build_sambe(&ph, 8).unwrap();
    offdiagonal_block_norms(&s, &j).unwrap().values().cloned().fold(0.0, f64::max)
}

fn sambe_scaling() -> Outcome {
    let grid = [0.02, 0.04, 0.06, 0.08, 0.1];
    let n1: Vec<f64> = grid.iter().map(|&x| sambe_offdiag(x, 1)).collect();
    let n2: Vec<f64> = grid.iter().map(|&x| sambe_offdiag(x, 2)).collect();
    let (s1, s2) = (slope(&grid, &n1), slope(&grid, &n2));
    check(
        (s1 - 2.0).abs() <= 0.2 && (s2 - 3.0).abs() <= 0.3,
        format!("slope with first-order generators {s1:.3} (2 ± 0.2), with second-order {s2:.3} (3 ± 0.3)"),
    )
}

fn effective_spectrum(ph: &PeriodicHamiltonian, method: GeneratorMethod) -> Vec<f64> {
    let (_, h) = FswtEngine::new(ph, method).unwrap().run(2).unwrap();
    HermitianEigen::new(&h.truncated(2).to_dense()).values.iter().cloned().collect()
}

fn subset_sums(levels: &[f64], k: usize) -> Vec<f64> {
    let n = levels.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| levels[i]).sum())
        .collect()
}

fn free_fermions() -> Outcome {
    let mut worst = 0.0f64;
    for method in [GeneratorMethod::Spectral, GeneratorMethod::HoppingSeries(2)] {
        let (_, one) = hubbard(6, 1, 0, 0.0, 4.0, 16.0);
        let levels = effective_spectrum(&one, method);
        let (_, many) = hubbard(6, 3, 3, 0.0, 4.0, 16.0);
        let got = effective_spectrum(&many, method);
        let ups = subset_sums(&levels, 3);
        let mut want: Vec<f64> = ups.iter().flat_map(|a| ups.iter().map(move |b| a + b)).collect();
        want.sort_by(f64::total_cmp);
        if want.len() != got.len() {
            return Err(format!("{} reconstructed levels for a sector of dimension {}", want.len(), got.len()));
        }
        worst = worst.max(want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check(worst <= 1e-9, format!("L=6 (3,3) spectrum from one-particle levels, max deviation {worst:.1e} (≤1e-9)"))
}

fn spin_model() -> Outcome {
    let p = HubbardDriveParams::new(4, 1.0, 50.0, 4.0, 16.0);
    let b = SectorBasis::new(4, 2, 2).unwrap();
    let ph = build_driven_hubbard(&p, &b).unwrap();
    let e = effective_spectrum(&ph, GeneratorMethod::HoppingSeries(2));
    let jex = spin_exchange_coefficient(&p).unwrap();
    let proj = zero_doublon_projector(&b);
    let keep: Vec<usize> = (0..b.dim()).filter(|&k| proj.get(k, k).re == 1.0).collect();
    let heis = heisenberg_hamiltonian(&b, jex).unwrap().restrict(&keep);
    let eh = HermitianEigen::new(&heis.to_dense()).values;
    let scale = eh.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = (0..6).map(|k| (e[k] - eh[k]).abs()).fold(0.0f64, f64::max) / scale;
    check(err <= 0.1, format!("J_ex {jex:.5}; lowest-band relative error {err:.3} (≤ 5J/U = 0.1)"))
}

/// Full Fock space of the two-site chain (16 states), built directly from
/// Jordan–Wigner matrices with mode order (1↑, 2↑, 1↓, 2↓).
struct TwoSiteFock {
    ann: Vec<DMat>,
}

impl TwoSiteFock {
    fn new() -> Self {
        let ann = (0..4)
            .map(|m| {
                DMat::from_fn(16, 16, |r, c| {
                    if c >> m & 1 == 1 && r == c ^ (1 << m) {
                        let sign = if (c & ((1 << m) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        C64::new(sign, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        TwoSiteFock { ann }
    }

    fn number(&self, m: usize) -> DMat {
        self.ann[m].adjoint() * &self.ann[m]
    }

    fn op(a: &DMat) -> OperatorMatrix {
        OperatorMatrix::from_dense(SectorTag::Generic { dim: 16 }, a)
    }

    fn driven(&self, u: f64, g: f64, w: f64) -> PeriodicHamiltonian {
        let mut h0 = DMat::zeros(16, 16);
        for (a, b) in [(0, 1), (2, 3)] {
            h0 -= self.ann[a].adjoint() * &self.ann[b] + self.ann[b].adjoint() * &self.ann[a];
        }
        h0 += (self.number(0) * self.number(2) + self.number(1) * self.number(3)) * C64::new(u, 0.0);
        let x = (self.number(0) + self.number(2)) * C64::new(g, 0.0) + (self.number(1) + self.number(3)) * C64::new(2.0 * g, 0.0);
        let mut ph = PeriodicHamiltonian::new(Self::op(&h0), w);
        ph.insert_pair(1, 1, Self::op(&x)).unwrap();
        ph
    }
}

fn invariants() -> Outcome {
    let mut fails = Vec::new();
    let mut note = |name: &str, value: f64, tol: f64| {
        if !(value <= tol) {
            fails.push(format!("{name} {value:.1e} > {tol:.0e}"));
        }
    };

    // adjoint pairing and linearity of the solver
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tag = SectorTag::Generic { dim: 24 };
    let h0 = OperatorMatrix::from_dense(tag, &random_hermitian(&mut rng, 24));
    let c1 = OperatorMatrix::from_dense(tag, &random_dense(&mut rng, 24));
    let c2 = OperatorMatrix::from_dense(tag, &random_dense(&mut rng, 24));
    let solver = SpectralSolver::new(&h0).unwrap();
    let w = solver.spread() * 0.7;
    let opts = SolveOptions::default();
    let f = solver.solve(&c1, w, opts).unwrap();
    let fm = solver.solve(&c1.adjoint(), -w, opts).unwrap();
    note("adjoint pairing", fm.try_add(&f.adjoint()).unwrap().max_abs(), 1e-10);
    let f2 = solver.solve(&c2, w, opts).unwrap();
    let f12 = solver.solve(&c1.try_add(&c2).unwrap(), w, opts).unwrap();
    note("linearity", f12.max_abs_diff(&f.try_add(&f2).unwrap()), 1e-10);

    // generator pairing and symmetry conservation on the full two-site Fock space
    let fock = TwoSiteFock::new();
    let n_tot = TwoSiteFock::op(&(0..4).map(|m| fock.number(m)).fold(DMat::zeros(16, 16), |a, b| a + b));
    let sz = TwoSiteFock::op(&((fock.number(0) + fock.number(1) - fock.number(2) - fock.number(3)) * C64::new(0.5, 0.0)));
    for method in [GeneratorMethod::Spectral, GeneratorMethod::HoppingSeries(2)] {
        let ph = fock.driven(3.0, 2.0, 11.0);
        let (f, h) = FswtEngine::new(&ph, method).unwrap().run(4).unwrap();
        note("generator pairing", f.pairing_defect(), 1e-12);
        for (k, hk) in &h.orders {
            let cn = commutator(hk, &n_tot).unwrap().max_abs();
            let cs = commutator(hk, &sz).unwrap().max_abs();
            note(&format!("[H′⁽{k}⁾, N] ({method})"), cn, 1e-10);
            note(&format!("[H′⁽{k}⁾, Sz] ({method})"), cs, 1e-10);
        }
    }

    // dipole-origin gauge and chemical-potential independence
    let b = SectorBasis::new(4, 2, 2).unwrap();
    for method in [GeneratorMethod::Spectral, GeneratorMethod::HoppingSeries(2)] {
        let base = HubbardDriveParams::new(4, 1.0, 3.0, 3.0, 12.0);
        let ph = build_driven_hubbard(&base, &b).unwrap();
        let (f_ref, h_ref) = FswtEngine::new(&ph, method).unwrap().run(4).unwrap();
        let mut shifted = base;
        shifted.dipole_offset = 0.7;
        let (_, h_shift) = FswtEngine::new(&build_driven_hubbard(&shifted, &b).unwrap(), method).unwrap().run(4).unwrap();
        for (k, hk) in &h_ref.orders {
            if *k >= 2 {
                note(&format!("dipole gauge H′⁽{k}⁾ ({method})"), hk.max_abs_diff(&h_shift.orders[k]), 1e-10);
            }
        }
        let mut mu = base;
        mu.chemical_potential = 1.7;
        let (f_mu, _) = FswtEngine::new(&build_driven_hubbard(&mu, &b).unwrap(), method).unwrap().run(4).unwrap();
        let worst = f_ref.iter().map(|(key, e)| e.total().max_abs_diff(&f_mu.total(key.0, key.1))).fold(0.0, f64::max);
        note(&format!("μ-independence ({method})"), worst, 1e-10);

        // determinism
        let (f_again, h_again) = FswtEngine::new(&ph, method).unwrap().run(4).unwrap();
        let same = h_ref.orders.iter().all(|(k, m)| *m == h_again.orders[k])
            && f_ref.iter().all(|(key, e)| e.total() == f_again.total(key.0, key.1));
        note(&format!("repeated run differs ({method})"), if same { 0.0 } else { 1.0 }, 0.0);

        // unitarity of the micro-motion
        let u = micromotion_at_time(&f_ref, 0.37, 3).unwrap();
        note(&format!("micro-motion unitarity ({method})"), unitarity_defect(&u.to_dense()), 1e-9);
    }

    // propagators and state norms
    let p = HubbardDriveParams::new(4, 1.0, 3.0, 4.0, 16.0);
    let ph = build_driven_hubbard(&p, &b).unwrap();
    let t = 2.0 * std::f64::consts::PI / p.omega;
    note("exact propagator unitarity", unitarity_defect(&exact_propagator(&ph, 0.0, t, 64).unwrap().to_dense()), 1e-9);
    let psi0 = cdw_state(&b).unwrap();
    let times = strobe_times(p.omega, 60.0);
    let mut ev = ExactEvolver::new(&ph, 64).unwrap();
    let mut psi = psi0.clone();
    ev.advance(&mut psi, 0.0, *times.last().unwrap()).unwrap();
    note("norm drift over 60/J", (vec_norm(&psi) - 1.0).abs(), 1e-8);
    let (_, h) = FswtEngine::new(&ph, GeneratorMethod::HoppingSeries(2)).unwrap().run(2).unwrap();
    let h_eff = h.truncated(2);
    let mut ev = EffectiveEvolver::new(&h_eff, EvolutionMethod::FswtStrobe).unwrap();
    let e0 = h_eff.expectation(&psi0).re;
    let mut psi = psi0.clone();
    ev.advance(&mut psi, 0.0, 60.0).unwrap();
    note("energy conservation", (h_eff.expectation(&psi).re - e0).abs(), 1e-9);
    let series = return_rate_series(&mut ev, &psi0, &times).unwrap();
    note("return rate at t0", (series.return_rate[0] - 1.0).abs(), 1e-12);
    note("return rate bound", series.return_rate.iter().cloned().fold(0.0, f64::max) - 1.0, 1e-12);

    drop(note);
    if fails.is_empty() {
        Ok("pairing, linearity, N/Sz conservation (full Fock L=2), dipole gauge, μ-independence, determinism, unitarity, norm and energy conservation".into())
    } else {
        Err(fails.join("; "))
    }
}
