//! Flat `key = value` configuration with `#` comments.
//!
//! Grid-valued keys (`b`, `case`, `alpha`, `nu`) take comma-separated lists;
//! numeric grids also accept `start:stop:step`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::{ActionCounting, HistoryMode};
use crate::lattice::Lattice;
use crate::metrics::SigmaForm;
use crate::point_process::CaseKind;

/// `(key, unit, default, description)` for every configuration key.
pub const KEYS: &[(&str, &str, &str, &str)] = &[
    (
        "L",
        "agents per side",
        "30",
        "lattice side length; N = L^2 agents",
    ),
    (
        "k",
        "neighbors",
        "4",
        "neighborhood size: 4 (von Neumann) or 8 (Moore)",
    ),
    (
        "case",
        "-",
        "standard,poisson,endo,exo",
        "timing models to run",
    ),
    (
        "b",
        "payoff units",
        "1.1:3.0:0.1",
        "defector's advantage grid (each > 1)",
    ),
    (
        "alpha",
        "dimensionless",
        "0.5",
        "excitation strength grid, each in [0, 1)",
    ),
    (
        "nu",
        "dimensionless",
        "1",
        "kernel shape factor grid, each > 0",
    ),
    (
        "beta",
        "1/time",
        "auto",
        "decay ratio override; auto = 1 (poisson, endo) or k (exo)",
    ),
    (
        "target_rate",
        "actions/time",
        "1",
        "expected per-agent action rate used to calibrate rho",
    ),
    ("t_g", "time", "1", "duration of one donation stage"),
    (
        "mu",
        "probability",
        "0.01",
        "mutation probability in the update stage",
    ),
    ("g_end", "generations", "1000", "generations per trial"),
    (
        "g_ave",
        "generations",
        "200",
        "final generations averaged into trial statistics",
    ),
    ("replicates", "trials", "10", "independent trials per cell"),
    (
        "seed",
        "-",
        "1",
        "master seed; every trial seed derives from it",
    ),
    (
        "history",
        "-",
        "carry",
        "point-process history across generations: carry or reset",
    ),
    (
        "counting",
        "-",
        "all",
        "actions counted in d_i: all or cooperators",
    ),
    (
        "sigma_form",
        "-",
        "std",
        "sigma_d as sample std (std) or sample variance (variance)",
    ),
    (
        "dump_events",
        "-",
        "false",
        "write per-event traces (run only)",
    ),
    (
        "dump_grid",
        "generations",
        "0",
        "write the strategy grid every M generations; 0 = off (run only)",
    ),
    ("out", "path", "results", "output directory"),
];

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// All four cases over the b-grid at alpha = 0.5, nu = 1.
    Exp1,
    /// Hawkes cases over the (alpha, nu) grid at b in {1.5, 1.9, 2.3, 2.7}.
    Exp2,
    /// Non-uniformity indices over the (alpha, nu) grid at b = 1.1.
    Fig8,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp1" => Ok(Preset::Exp1),
            "exp2" => Ok(Preset::Exp2),
            "fig8" => Ok(Preset::Fig8),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (exp1, exp2, fig8)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// L = 30, 1000 generations (last 200 averaged), 10 replicates.
    Desk,
    /// L = 100, 3000 generations (last 500 averaged), 100 replicates.
    Paper,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Config(format!(
                "unknown scale `{other}` (desk, paper)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub side: usize,
    pub k: usize,
    pub cases: Vec<CaseKind>,
    pub b_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    pub beta: Option<f64>,
    pub target_rate: f64,
    pub t_g: f64,
    pub mu: f64,
    pub g_end: usize,
    pub g_ave: usize,
    pub replicates: usize,
    pub seed: u64,
    pub history: HistoryMode,
    pub counting: ActionCounting,
    pub sigma_form: SigmaForm,
    pub dump_events: bool,
    pub dump_grid: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = Self {
            side: 30,
            k: 4,
            cases: CaseKind::ALL.to_vec(),
            b_grid: Vec::new(),
            alpha_grid: vec![0.5],
            nu_grid: vec![1.0],
            beta: None,
            target_rate: 1.0,
            t_g: 1.0,
            mu: 0.01,
            g_end: 1000,
            g_ave: 200,
            replicates: 10,
            seed: 1,
            history: HistoryMode::Carry,
            counting: ActionCounting::All,
            sigma_form: SigmaForm::StdDev,
            dump_events: false,
            dump_grid: 0,
            out: PathBuf::from("results"),
        };
        cfg.b_grid = parse_grid("b", "1.1:3.0:0.1").expect("default b grid");
        cfg
    }
}

impl ExperimentConfig {
    pub fn with_scale(mut self, scale: Scale) -> Self {
        match scale {
            Scale::Desk => {
                self.side = 30;
                self.g_end = 1000;
                self.g_ave = 200;
                self.replicates = 10;
            }
            Scale::Paper => {
                self.side = 100;
                self.g_end = 3000;
                self.g_ave = 500;
                self.replicates = 100;
            }
        }
        self
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        let hawkes = vec![CaseKind::Poisson, CaseKind::Endo, CaseKind::Exo];
        let alphas = parse_grid("alpha", "0.1:0.9:0.1").expect("alpha grid");
        let nus = parse_grid("nu", "1:5:1").expect("nu grid");
        match preset {
            Preset::Exp1 => {
                self.cases = CaseKind::ALL.to_vec();
                self.b_grid = parse_grid("b", "1.1:3.0:0.1").expect("b grid");
                self.alpha_grid = vec![0.5];
                self.nu_grid = vec![1.0];
            }
            Preset::Exp2 => {
                self.cases = hawkes;
                self.b_grid = vec![1.5, 1.9, 2.3, 2.7];
                self.alpha_grid = alphas;
                self.nu_grid = nus;
            }
            Preset::Fig8 => {
                self.cases = hawkes;
                self.b_grid = vec![1.1];
                self.alpha_grid = alphas;
                self.nu_grid = nus;
            }
        }
        self
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical_key(key)?;
        let v = value.trim();
        match key {
            "L" => self.side = parse_num(key, v)?,
            "k" => self.k = parse_num(key, v)?,
            "case" => {
                self.cases = split_list(v)
                    .map(|s| s.parse::<CaseKind>())
                    .collect::<Result<Vec<_>>>()?
            }
            "b" => self.b_grid = parse_grid(key, v)?,
            "alpha" => self.alpha_grid = parse_grid(key, v)?,
            "nu" => self.nu_grid = parse_grid(key, v)?,
            "beta" => {
                self.beta = if v.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "target_rate" => self.target_rate = parse_num(key, v)?,
            "t_g" => self.t_g = parse_num(key, v)?,
            "mu" => self.mu = parse_num(key, v)?,
            "g_end" => self.g_end = parse_num(key, v)?,
            "g_ave" => self.g_ave = parse_num(key, v)?,
            "replicates" => self.replicates = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "history" => {
                self.history = match v.to_ascii_lowercase().as_str() {
                    "carry" => HistoryMode::Carry,
                    "reset" => HistoryMode::Reset,
                    _ => return Err(bad_value(key, v, "carry or reset")),
                }
            }
            "counting" => {
                self.counting = match v.to_ascii_lowercase().as_str() {
                    "all" => ActionCounting::All,
                    "cooperators" => ActionCounting::CooperatorsOnly,
                    _ => return Err(bad_value(key, v, "all or cooperators")),
                }
            }
            "sigma_form" => {
                self.sigma_form = match v.to_ascii_lowercase().as_str() {
                    "std" => SigmaForm::StdDev,
                    "variance" => SigmaForm::Variance,
                    _ => return Err(bad_value(key, v, "std or variance")),
                }
            }
            "dump_events" => {
                self.dump_events = match v.to_ascii_lowercase().as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad_value(key, v, "true or false")),
                }
            }
            "dump_grid" => self.dump_grid = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => unreachable!("canonical_key returned unknown key {key}"),
        }
        Ok(())
    }

    /// Applies every assignment in `text`. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Checks every field and every cell's stationarity.
    pub fn validate(&self) -> Result<()> {
        Lattice::new(self.side, self.k)?;
        let nonempty = [
            ("case", self.cases.is_empty()),
            ("b", self.b_grid.is_empty()),
            ("alpha", self.alpha_grid.is_empty()),
            ("nu", self.nu_grid.is_empty()),
        ];
        for (name, empty) in nonempty {
            if empty {
                return Err(Error::Config(format!("`{name}` grid is empty")));
            }
        }
        if self.replicates == 0 {
            return Err(Error::Config("`replicates` must be positive".into()));
        }
        for &b in &self.b_grid {
            let mut game = crate::game::GameParams::new(CaseKind::Standard, b);
            game.mu = self.mu;
            game.t_g = self.t_g;
            game.g_end = self.g_end;
            game.g_ave = self.g_ave;
            game.validate()?;
        }
        for &nu in &self.nu_grid {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(bad_value("nu", &nu.to_string(), "values > 0"));
            }
        }
        for &case in &self.cases {
            for &alpha in &self.alpha_grid {
                for &nu in &self.nu_grid {
                    case.kernel_params(alpha, nu, self.target_rate, self.k, self.beta)?;
                }
            }
        }
        Ok(())
    }

    /// `key = value` rendering of every field; parses back to `self`.
    pub fn to_manifest(&self) -> String {
        let mut s = format!("# hawkes-coop {}\n", env!("CARGO_PKG_VERSION"));
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "L = {}", self.side);
        let _ = writeln!(s, "k = {}", self.k);
        let cases: Vec<&str> = self.cases.iter().map(|c| c.name()).collect();
        let _ = writeln!(s, "case = {}", cases.join(","));
        let _ = writeln!(s, "b = {}", list(&self.b_grid));
        let _ = writeln!(s, "alpha = {}", list(&self.alpha_grid));
        let _ = writeln!(s, "nu = {}", list(&self.nu_grid));
        let _ = writeln!(
            s,
            "beta = {}",
            self.beta
                .map_or_else(|| "auto".to_string(), |b| b.to_string())
        );
        let _ = writeln!(s, "target_rate = {}", self.target_rate);
        let _ = writeln!(s, "t_g = {}", self.t_g);
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "g_end = {}", self.g_end);
        let _ = writeln!(s, "g_ave = {}", self.g_ave);
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "seed = {}", self.seed);
        let history = match self.history {
            HistoryMode::Carry => "carry",
            HistoryMode::Reset => "reset",
        };
        let _ = writeln!(s, "history = {history}");
        let counting = match self.counting {
            ActionCounting::All => "all",
            ActionCounting::CooperatorsOnly => "cooperators",
        };
        let _ = writeln!(s, "counting = {counting}");
        let sigma = match self.sigma_form {
            SigmaForm::StdDev => "std",
            SigmaForm::Variance => "variance",
        };
        let _ = writeln!(s, "sigma_form = {sigma}");
        let _ = writeln!(s, "dump_events = {}", self.dump_events);
        let _ = writeln!(s, "dump_grid = {}", self.dump_grid);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}

/// Maps accepted spellings (`t-g`, `T_G`, `l`) onto the canonical key.
pub fn canonical_key(key: &str) -> Result<&'static str> {
    let norm = key.trim().replace('-', "_");
    KEYS.iter()
        .map(|k| k.0)
        .find(|k| k.eq_ignore_ascii_case(&norm))
        .ok_or_else(|| {
            let valid: Vec<&str> = KEYS.iter().map(|k| k.0).collect();
            Error::Config(format!(
                "unknown key `{key}`; valid keys: {}",
                valid.join(", ")
            ))
        })
}

fn bad_value(key: &str, value: &str, expected: &str) -> Error {
    Error::Config(format!(
        "`{key}`: invalid value `{value}` (expected {expected})"
    ))
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| bad_value(key, v, "a number"))
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `a,b,c` or `start:stop:step` (inclusive, rounded to 10 decimals).
pub fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in split_list(v) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_num(key, x)?),
            [start, stop, step] => {
                let (start, stop, step): (f64, f64, f64) = (
                    parse_num(key, start)?,
                    parse_num(key, stop)?,
                    parse_num(key, step)?,
                );
                if step.is_nan() || step <= 0.0 || stop < start {
                    return Err(bad_value(
                        key,
                        item,
                        "start:stop:step with step > 0 and stop >= start",
                    ));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10));
            }
            _ => return Err(bad_value(key, item, "a number or start:stop:step")),
        }
    }
    Ok(out)
}
