use std::fmt::Write as _;

use fswt_core::dynamics::{cdw_comparison, fswt_effective_hamiltonian, ground_state_occupancy_scan, CdwComparison, HamiltonianVariant};
use fswt_core::fswt::{micromotion_fourier, FswtEngine, GeneratorSeries};
use fswt_core::linalg::HermitianEigen;
use fswt_core::model::build_driven_hubbard;
use fswt_core::reference::{hfe_hamiltonian, hubbard_coefficients, spin_exchange_coefficient};
use fswt_core::sambe::{build_sambe, build_transform, diagonal_block_defect, offdiagonal_block_norms, transform_unitarity_defect};
use fswt_core::sylvester::{residual_norm, SpectralSolver, SylvesterProblem};
use fswt_core::{Error, GeneratorMethod, HubbardDriveParams, OperatorMatrix, PeriodicHamiltonian, SectorBasis};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::args::Command;
use crate::config::{Needs, RunConfig};
use crate::error::CliError;
use crate::format::{csv_row, float, operator_json};

/// Spectral diagnostics (eigenvalues, resonance margins) are skipped above this dimension.
const SPECTRAL_REPORT_LIMIT: usize = 2000;

/// What a command leaves behind: text for stdout and, for commands that
/// still write partial artifacts, a failure to report afterwards.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub error: Option<CliError>,
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    let flags = cmd.flags();
    let map = flags.to_map();
    let needs = match cmd {
        Command::SweepOmega(_) => Needs { omega: false, omegas: true },
        _ => Needs { omega: true, omegas: false },
    };
    let default_method = match cmd {
        Command::Evolve(_) | Command::SweepOmega(_) | Command::MuScan(_) => GeneratorMethod::HoppingSeries(2),
        _ => GeneratorMethod::Spectral,
    };
    let cfg = RunConfig::resolve(&map, flags.config.as_deref(), needs, default_method)?;
    match cmd {
        Command::ModelInfo(_) => model_info(&cfg),
        Command::Fswt(_) => fswt(&cfg),
        Command::CompareHfe(_) => compare_hfe(&cfg),
        Command::Evolve(_) => evolve(&cfg),
        Command::SweepOmega(_) => sweep_omega(&cfg),
        Command::SambeCheck(_) => sambe_check(&cfg),
        Command::MuScan(_) => mu_scan(&cfg),
    }
}

fn model(cfg: &RunConfig) -> Result<(SectorBasis, PeriodicHamiltonian), CliError> {
    let basis = SectorBasis::new(cfg.params.sites, cfg.n_up, cfg.n_down)?;
    let ph = build_driven_hubbard(&cfg.params, &basis)?;
    Ok((basis, ph))
}

/// Closed-form denominators ω ± U and 2ω ± U must stay clear of zero when the
/// drive and the hopping are both on.
fn closed_form_guard(p: &HubbardDriveParams) -> fswt_core::Result<()> {
    if p.drive_strength != 0.0 && p.hopping != 0.0 {
        hubbard_coefficients(p.interaction, p.omega)?;
    }
    Ok(())
}

fn resonance_guard(p: &HubbardDriveParams) -> Result<(), CliError> {
    Ok(closed_form_guard(p)?)
}

fn header(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    format!(
        "model: L={} J={} U={} mu={} g={} omega={} dipole-offset={}\nsector: n_up={} n_down={}\n",
        p.sites,
        float(p.hopping),
        float(p.interaction),
        float(p.chemical_potential),
        float(p.drive_strength),
        float(p.omega),
        float(p.dipole_offset),
        cfg.n_up,
        cfg.n_down
    )
}

fn margins(ph: &PeriodicHamiltonian, out: &mut String) {
    let w = ph.omega();
    if ph.dim() > SPECTRAL_REPORT_LIMIT {
        writeln!(out, "spectral resonance margins: skipped (dim {} > {SPECTRAL_REPORT_LIMIT})", ph.dim()).unwrap();
        return;
    }
    match SpectralSolver::new(ph.h0()) {
        Ok(s) => {
            for j in 1..=3 {
                writeln!(out, "spectral resonance margin min|{j}ω − (ε_b − ε_a)|: {}", float(s.resonance_margin(j as f64 * w))).unwrap();
            }
        }
        Err(e) => writeln!(out, "spectral resonance margins unavailable: {e}").unwrap(),
    }
}

fn closed_form_margins(p: &HubbardDriveParams, out: &mut String) {
    let (w, u) = (p.omega, p.interaction);
    for (name, x) in [("|ω − U|", w - u), ("|ω + U|", w + u), ("|2ω − U|", 2.0 * w - u), ("|2ω + U|", 2.0 * w + u), ("|3ω − U|", 3.0 * w - u)] {
        writeln!(out, "closed-form denominator {name}: {}", float(x.abs())).unwrap();
    }
}

fn lowest(op: &OperatorMatrix, k: usize) -> Vec<f64> {
    HermitianEigen::new(&op.to_dense()).values.iter().take(k).cloned().collect()
}

fn finish(cfg: &RunConfig, name: &str, text: String) -> Result<Outcome, CliError> {
    if cfg.out_given {
        cfg.prepare_out()?;
        cfg.write(name, &text)?;
    }
    Ok(Outcome { stdout: text, error: None })
}

fn model_info(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (basis, ph) = model(cfg)?;
    let mut s = header(cfg);
    writeln!(s, "dimension: {}", basis.dim()).unwrap();
    writeln!(s, "H0: nnz {} max|entry| {}", ph.h0().nnz(), float(ph.h0().max_abs())).unwrap();
    for (key, op) in ph.drive() {
        writeln!(s, "drive H[{},{}]: nnz {} max|entry| {}", key.order(), key.harmonic(), op.nnz(), float(op.max_abs())).unwrap();
    }
    if basis.dim() <= SPECTRAL_REPORT_LIMIT && basis.dim() > 0 {
        let e = HermitianEigen::new(&ph.h0().to_dense());
        writeln!(s, "H0 spectrum: [{}, {}]", float(e.values[0]), float(e.values[e.values.len() - 1])).unwrap();
    }
    margins(&ph, &mut s);
    closed_form_margins(&cfg.params, &mut s);
    match hubbard_coefficients(cfg.params.interaction, cfg.params.omega) {
        Ok(k) => {
            writeln!(s, "coefficients at ω: beta {} gamma {} delta {}", float(k.beta1), float(k.gamma1), float(k.delta1)).unwrap();
            writeln!(s, "coefficients at 2ω: beta {} gamma {} delta {}", float(k.beta1d), float(k.gamma1d), float(k.delta1d)).unwrap();
        }
        Err(e) => writeln!(s, "coefficients: {e}").unwrap(),
    }
    match spin_exchange_coefficient(&cfg.params) {
        Ok(j) => writeln!(s, "spin exchange J_ex: {}", float(j)).unwrap(),
        Err(e) => writeln!(s, "spin exchange: {e}").unwrap(),
    }
    finish(cfg, "model_info.txt", s)
}

fn generator_residuals(engine: &FswtEngine, ph: &PeriodicHamiltonian, f: &GeneratorSeries, s: &mut String) -> Result<(), CliError> {
    let w = ph.omega();
    for j in f.harmonics(1) {
        let Some(c) = ph.component(1, j) else { continue };
        let fj = f.total(1, j);
        let prob = SylvesterProblem::new(ph.h0(), c, j as f64 * w)?;
        writeln!(s, "residual f[1,{j}]: {}", float(residual_norm(&fj, &prob)?)).unwrap();
    }
    if f.max_order() >= 2 {
        for (j, src) in engine.second_order_sources(f)? {
            if f.get(2, j).is_none() {
                continue;
            }
            let c = src.total();
            let prob = SylvesterProblem::new(ph.h0(), &c, j as f64 * w)?;
            writeln!(s, "residual f[2,{j}]: {}", float(residual_norm(&f.total(2, j), &prob)?)).unwrap();
        }
    }
    Ok(())
}

fn fswt(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.prepare_out()?;
    let (basis, ph) = model(cfg)?;
    resonance_guard(&cfg.params)?;
    let engine = FswtEngine::new(&ph, cfg.method)?;
    let (f, h) = engine.run(cfg.orders)?;

    let mut heff = Map::new();
    for (k, op) in &h.orders {
        heff.insert(k.to_string(), operator_json(op));
    }
    let mut gens = Map::new();
    for ((n, j), e) in f.iter() {
        gens.insert(format!("{n},{j}"), operator_json(&e.total()));
    }
    cfg.write("h_eff.json", &(serde_json::to_string_pretty(&Value::Object(heff)).expect("json") + "\n"))?;
    cfg.write("generators.json", &(serde_json::to_string_pretty(&Value::Object(gens)).expect("json") + "\n"))?;

    let mut s = String::from("fswt report\n");
    s.push_str(&header(cfg));
    writeln!(s, "dimension: {}", basis.dim()).unwrap();
    writeln!(s, "method: {}  orders: {}", cfg.method, cfg.orders).unwrap();
    margins(&ph, &mut s);
    closed_form_margins(&cfg.params, &mut s);
    generator_residuals(&engine, &ph, &f, &mut s)?;
    writeln!(s, "generator pairing defect: {}", float(f.pairing_defect())).unwrap();
    for ((n, j), e) in f.iter() {
        writeln!(s, "max|f[{n},{j}]|: {}", float(e.max_abs())).unwrap();
    }
    for (k, op) in &h.orders {
        writeln!(s, "max|H'({k})|: {}", float(op.max_abs())).unwrap();
    }
    for (k, d) in &h.hermiticity_defects {
        writeln!(s, "hermiticity defect H'({k}): {}", float(*d)).unwrap();
    }
    cfg.write("report.txt", &s)?;
    Ok(Outcome { stdout: s, error: None })
}

fn compare_hfe(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, ph) = model(cfg)?;
    resonance_guard(&cfg.params)?;
    let hf = fswt_effective_hamiltonian(&ph, cfg.method, cfg.orders)?;
    let hh = hfe_hamiltonian(&ph)?;
    let mut s = String::from("fswt vs high-frequency expansion\n");
    s.push_str(&header(cfg));
    writeln!(s, "method: {}  orders: {}", cfg.method, cfg.orders).unwrap();
    writeln!(s, "max|H_fswt − H_hfe|: {}", float(hf.max_abs_diff(&hh))).unwrap();
    let (ef, eh) = (lowest(&hf, 8), lowest(&hh, 8));
    writeln!(s, "k,E_fswt,E_hfe,difference").unwrap();
    for (k, (a, b)) in ef.iter().zip(&eh).enumerate() {
        writeln!(s, "{k},{},{},{}", float(*a), float(*b), float(a - b)).unwrap();
    }
    finish(cfg, "compare_hfe.txt", s)
}

fn sambe_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, ph) = model(cfg)?;
    resonance_guard(&cfg.params)?;
    let gen_order = cfg.orders.saturating_sub(1).max(1);
    let (f, h) = FswtEngine::new(&ph, cfg.method)?.run(gen_order + 1)?;
    let u = micromotion_fourier(&f, gen_order, cfg.cutoff)?;
    let j = build_transform(&u, cfg.cutoff)?;
    let sam = build_sambe(&ph, cfg.cutoff)?;
    let mut s = String::from("sambe check\n");
    s.push_str(&header(cfg));
    writeln!(s, "method: {}  generator order: {}  M: {}", cfg.method, gen_order, cfg.cutoff).unwrap();
    writeln!(s, "micro-motion Fourier tail defect: {}", float(u.tail_defect)).unwrap();
    if u.tail_defect > 1e-3 {
        let c = -0.5 * (cfg.params.sites as f64 + 1.0);
        writeln!(s, "note: micro-motion reaches past M; try --dipole-offset {c} (adds only a phase) or a larger --M").unwrap();
    }
    writeln!(s, "transform unitarity defect (central blocks): {}", float(transform_unitarity_defect(&j)?)).unwrap();
    for (offset, norm) in offdiagonal_block_norms(&sam, &j)? {
        writeln!(s, "off-diagonal block norm at offset {offset}: {}", float(norm)).unwrap();
    }
    let d = diagonal_block_defect(&sam, &j, &h.truncated(gen_order + 1))?;
    writeln!(s, "diagonal block defect against H0 + H': {}", float(d)).unwrap();
    finish(cfg, "sambe_check.txt", s)
}

/// Keep resonance failures of a column; anything else aborts.
fn isolate(r: &fswt_core::Result<Vec<f64>>) -> Result<Option<&Vec<f64>>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Resonance(_)) => Ok(None),
        Err(e) => Err(e.clone().into()),
    }
}

fn comparison(cfg: &RunConfig, p: &HubbardDriveParams) -> Result<CdwComparison, CliError> {
    let mut c = cdw_comparison(p, cfg.t_final, cfg.steps_per_period, cfg.method, cfg.orders)?;
    if let Err(e) = closed_form_guard(p) {
        c.fswt = Err(e);
    }
    Ok(c)
}

fn evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let half = cfg.params.sites.div_ceil(2);
    if (cfg.n_up, cfg.n_down) != (half, half) {
        return Err(CliError::usage(format!("evolve starts from the CDW state and needs --nup {half} --ndown {half}")));
    }
    cfg.prepare_out()?;
    let c = comparison(cfg, &cfg.params)?;
    let fswt_col = isolate(&c.fswt)?;
    let hfe_col = isolate(&c.hfe)?;
    let mut csv = String::from("t,L_exact");
    if fswt_col.is_some() {
        csv.push_str(",L_fswt");
    }
    if hfe_col.is_some() {
        csv.push_str(",L_hfe");
    }
    csv.push('\n');
    for (k, &t) in c.times.iter().enumerate() {
        let mut row = vec![Some(t), Some(c.exact[k])];
        if let Some(v) = fswt_col {
            row.push(Some(v[k]));
        }
        if let Some(v) = hfe_col {
            row.push(Some(v[k]));
        }
        csv.push_str(&csv_row(&row));
    }
    let path = cfg.write("dynamics.csv", &csv)?;
    let mut s = header(cfg);
    writeln!(s, "method: {}  orders: {}  steps per period: {}", cfg.method, cfg.orders, cfg.steps_per_period).unwrap();
    writeln!(s, "samples: {} (t = nT up to {})", c.times.len(), float(cfg.t_final)).unwrap();
    let mut error = None;
    match c.nrmse_fswt() {
        Ok(e) => writeln!(s, "E_fswt: {}", float(e)).unwrap(),
        Err(e) => {
            writeln!(s, "E_fswt: unavailable ({e})").unwrap();
            error = Some(CliError::from(e));
        }
    }
    match c.nrmse_hfe() {
        Ok(e) => writeln!(s, "E_hfe: {}", float(e)).unwrap(),
        Err(e) => writeln!(s, "E_hfe: unavailable ({e})").unwrap(),
    }
    writeln!(s, "wrote {}", path.display()).unwrap();
    Ok(Outcome { stdout: s, error })
}

fn sweep_omega(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.prepare_out()?;
    let rows: Vec<Result<(f64, Option<f64>, Option<f64>), CliError>> = cfg
        .omegas
        .par_iter()
        .map(|&w| {
            let mut p = cfg.params;
            p.omega = w;
            p.drive_strength = cfg.g_over_omega * w;
            let c = comparison(cfg, &p)?;
            let ef = isolate(&c.fswt)?.map(|_| c.nrmse_fswt()).transpose()?;
            let eh = isolate(&c.hfe)?.map(|_| c.nrmse_hfe()).transpose()?;
            Ok((w, ef, eh))
        })
        .collect();
    let mut csv = String::from("omega,E_fswt,E_hfe\n");
    let mut s = header(cfg);
    writeln!(s, "g/omega: {}  method: {}  orders: {}  t-final: {}", float(cfg.g_over_omega), cfg.method, cfg.orders, float(cfg.t_final)).unwrap();
    for r in rows {
        let (w, ef, eh) = r?;
        csv.push_str(&csv_row(&[Some(w), ef, eh]));
        let show = |x: Option<f64>| x.map(float).unwrap_or_else(|| "resonant".into());
        writeln!(s, "omega {}: E_fswt {} E_hfe {}", float(w), show(ef), show(eh)).unwrap();
    }
    let path = cfg.write("sweep.csv", &csv)?;
    writeln!(s, "wrote {}", path.display()).unwrap();
    Ok(Outcome { stdout: s, error: None })
}

fn mu_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.prepare_out()?;
    let variants = [HamiltonianVariant::Undriven, HamiltonianVariant::Hfe, HamiltonianVariant::Fswt];
    let cols: Vec<fswt_core::Result<Vec<(f64, f64)>>> = variants
        .par_iter()
        .map(|&v| {
            if v == HamiltonianVariant::Fswt {
                closed_form_guard(&cfg.params)?;
            }
            ground_state_occupancy_scan(&cfg.params, v, &cfg.mu_grid)
        })
        .collect();
    let mut error = None;
    let mut filled: Vec<Option<Vec<(f64, f64)>>> = Vec::new();
    for c in cols {
        match c {
            Ok(v) => filled.push(Some(v)),
            Err(e @ Error::Resonance(_)) => {
                error.get_or_insert(CliError::from(e));
                filled.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut csv = String::from("mu,n_undriven,n_hfe,n_fswt\n");
    for (k, &mu) in cfg.mu_grid.iter().enumerate() {
        let mut row = vec![Some(mu)];
        row.extend(filled.iter().map(|c| c.as_ref().map(|v| v[k].1)));
        csv.push_str(&csv_row(&row));
    }
    let path = cfg.write("mu_scan.csv", &csv)?;
    let mut s = header(cfg);
    writeln!(s, "mu points: {}  fswt variant: series:2 through H'(2)", cfg.mu_grid.len()).unwrap();
    writeln!(s, "wrote {}", path.display()).unwrap();
    Ok(Outcome { stdout: s, error })
}
