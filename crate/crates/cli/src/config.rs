//! Flat key=value run configuration merged with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fswt_core::{GeneratorMethod, HubbardDriveParams};

use crate::error::CliError;

/// Keys accepted in config files; the same names as the long flags.
pub const KEYS: [&str; 18] = [
    "L",
    "J",
    "U",
    "mu",
    "g",
    "omega",
    "nup",
    "ndown",
    "orders",
    "method",
    "steps-per-period",
    "M",
    "out",
    "dipole-offset",
    "t-final",
    "omegas",
    "g-over-omega",
    "mu-grid",
];

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("config line {}: expected key=value, got {raw:?}", n + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::usage(format!("config line {}: unknown key {k:?}", n + 1)));
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

/// Which optional inputs a command insists on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub omega: bool,
    pub omegas: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: HubbardDriveParams,
    pub n_up: usize,
    pub n_down: usize,
    pub method: GeneratorMethod,
    pub orders: u32,
    pub steps_per_period: usize,
    pub cutoff: usize,
    pub out: PathBuf,
    /// Whether `out` was set explicitly (report-only commands write files only then).
    pub out_given: bool,
    pub t_final: f64,
    pub omegas: Vec<f64>,
    pub g_over_omega: f64,
    pub mu_grid: Vec<f64>,
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|s| parse_float(key, s)).transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key)
            .map(|s| s.parse::<usize>().map_err(|_| bad(key, s, "a nonnegative integer")))
            .transpose()
    }
}

fn bad(key: &str, value: &str, want: &str) -> CliError {
    CliError::usage(format!("--{key}: expected {want}, got {value:?}")).with_context("flag", key)
}

fn missing(key: &str) -> CliError {
    CliError::usage(format!("missing required flag --{key}")).with_context("flag", key)
}

fn parse_float(key: &str, s: &str) -> Result<f64, CliError> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, s, "a finite number")),
    }
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (parse_float(key, a.trim())?, parse_float(key, b.trim())?);
            let n: usize = n.trim().parse().map_err(|_| bad(key, s, "start:stop:count"))?;
            match n {
                0 => return Err(bad(key, s, "a positive point count")),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        }
        [_] => s.split(',').map(|x| parse_float(key, x.trim())).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad(key, s, "a comma list or start:stop:count")),
    };
    Ok(grid)
}

impl RunConfig {
    /// Merge `config` (if any) under `flags`, apply defaults, validate.
    pub fn resolve(
        flags: &BTreeMap<&'static str, String>,
        config: Option<&Path>,
        needs: Needs,
        default_method: GeneratorMethod,
    ) -> Result<RunConfig, CliError> {
        let mut merged = match config {
            Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
            None => BTreeMap::new(),
        };
        for (k, v) in flags {
            merged.insert((*k).to_string(), v.clone());
        }
        let v = Values(merged);

        let sites = v.count("L")?.ok_or_else(|| missing("L"))?;
        let half = sites.div_ceil(2);
        let interaction = v.float("U")?.unwrap_or(0.0);
        let omegas = match v.raw("omegas") {
            Some(s) => parse_grid("omegas", s)?,
            None if needs.omegas => return Err(missing("omegas")),
            None => Vec::new(),
        };
        let omega = match v.float("omega")? {
            Some(w) => w,
            None if needs.omega => return Err(missing("omega")),
            None => omegas.first().copied().unwrap_or(1.0),
        };
        let params = HubbardDriveParams {
            sites,
            hopping: v.float("J")?.unwrap_or(1.0),
            interaction,
            chemical_potential: v.float("mu")?.unwrap_or(0.0),
            drive_strength: v.float("g")?.unwrap_or(0.0),
            omega,
            dipole_offset: v.float("dipole-offset")?.unwrap_or(0.0),
        };
        params.validate().map_err(CliError::from)?;
        if omegas.iter().any(|w| !(*w > 0.0)) {
            return Err(bad("omegas", v.raw("omegas").unwrap_or(""), "positive frequencies"));
        }
        let method = match v.raw("method") {
            Some(s) => s.parse::<GeneratorMethod>().map_err(|e| CliError::usage(e.to_string()).with_context("flag", "method"))?,
            None => default_method,
        };
        let orders = v.count("orders")?.unwrap_or(2);
        if orders > 4 {
            return Err(bad("orders", v.raw("orders").unwrap(), "an order ≤ 4"));
        }
        let steps_per_period = v.count("steps-per-period")?.unwrap_or(128);
        let cutoff = v.count("M")?.unwrap_or(8);
        let t_final = v.float("t-final")?.unwrap_or(60.0);
        if t_final < 0.0 {
            return Err(bad("t-final", v.raw("t-final").unwrap(), "a nonnegative time"));
        }
        let g_over_omega = v.float("g-over-omega")?.unwrap_or(0.25);
        let mu_grid = match v.raw("mu-grid") {
            Some(s) => parse_grid("mu-grid", s)?,
            None => {
                let c = 0.5 * interaction;
                let span = c.abs() + 6.0;
                (0..121).map(|k| c - span + 2.0 * span * k as f64 / 120.0).collect()
            }
        };
        let out_given = v.raw("out").is_some();
        let out = PathBuf::from(v.raw("out").unwrap_or("."));
        Ok(RunConfig {
            params,
            n_up: v.count("nup")?.unwrap_or(half),
            n_down: v.count("ndown")?.unwrap_or(half),
            method,
            orders: orders as u32,
            steps_per_period,
            cutoff,
            out,
            out_given,
            t_final,
            omegas,
            g_over_omega,
            mu_grid,
        })
    }

    /// Create the output directory and make sure a file can be written there.
    pub fn prepare_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let probe = self.out.join(".fswt-write-check");
        fs::write(&probe, b"").map_err(|e| CliError::io(&self.out, e))?;
        fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.out.join(name);
        fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}
