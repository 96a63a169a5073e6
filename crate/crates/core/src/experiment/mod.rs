//! Parameter sweeps over `(case, b, alpha, nu)` cells with replicated,
//! independently seeded trials.

pub mod config;
pub mod io;

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{Engine, GameParams};
use crate::lattice::Lattice;
use crate::metrics::GenerationStats;
use crate::point_process::{CaseKind, KernelParams};
use crate::seed;

pub use config::{ExperimentConfig, Preset, Scale};

/// One point of the parameter grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub case: CaseKind,
    pub b: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl Cell {
    /// Total order used for sorting result tables.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.case
            .cmp(&other.case)
            .then(self.b.total_cmp(&other.b))
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.nu.total_cmp(&other.nu))
    }

    fn same(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }

    /// Seed of replicate `replicate`, a pure function of the master seed
    /// and the cell's parameters.
    pub fn seed(&self, master: u64, replicate: usize) -> u64 {
        seed::derive(
            master,
            &[
                self.case as u64,
                self.b.to_bits(),
                self.alpha.to_bits(),
                self.nu.to_bits(),
                replicate as u64,
            ],
        )
    }
}

/// Cartesian product of the configured grids, in case-major order.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(
        config.cases.len() * config.b_grid.len() * config.alpha_grid.len() * config.nu_grid.len(),
    );
    for &case in &config.cases {
        for &b in &config.b_grid {
            for &alpha in &config.alpha_grid {
                for &nu in &config.nu_grid {
                    out.push(Cell { case, b, alpha, nu });
                }
            }
        }
    }
    out
}

/// Trial-level result of one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRow {
    pub cell: Cell,
    /// Calibrated baseline intensity; `None` for the standard model.
    pub rho: Option<f64>,
    pub replicate: usize,
    pub seed: u64,
    pub stats: GenerationStats,
}

pub fn game_params(config: &ExperimentConfig, cell: &Cell) -> GameParams {
    GameParams {
        b: cell.b,
        mu: config.mu,
        t_g: config.t_g,
        g_end: config.g_end,
        g_ave: config.g_ave,
        case: cell.case,
        counting: config.counting,
        history: config.history,
        sigma_form: config.sigma_form,
    }
}

pub fn kernel_params(config: &ExperimentConfig, cell: &Cell) -> Result<Option<KernelParams>> {
    cell.case.kernel_params(
        cell.alpha,
        cell.nu,
        config.target_rate,
        config.k,
        config.beta,
    )
}

/// Builds the engine for one replicate without running it.
pub fn build_engine(config: &ExperimentConfig, cell: &Cell, replicate: usize) -> Result<Engine> {
    let lattice = Lattice::new(config.side, config.k)?;
    let kernel = kernel_params(config, cell)?;
    Engine::new(
        lattice,
        game_params(config, cell),
        kernel,
        cell.seed(config.seed, replicate),
    )
}

/// Runs one full trial. Deterministic in `(config.seed, cell, replicate)`.
pub fn run_cell(config: &ExperimentConfig, cell: &Cell, replicate: usize) -> Result<ReplicateRow> {
    let mut engine = build_engine(config, cell, replicate)?;
    let summary = engine.run_trial()?;
    Ok(ReplicateRow {
        cell: *cell,
        rho: kernel_params(config, cell)?.map(|k| k.rho),
        replicate,
        seed: cell.seed(config.seed, replicate),
        stats: summary.stats,
    })
}

/// A cell that did not complete.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    /// Rows of completed cells, sorted by cell then replicate.
    pub rows: Vec<ReplicateRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every `(cell, replicate)` job on `jobs` worker threads (0 = all
/// cores). Output order is independent of scheduling; a failing replicate
/// drops its whole cell into `failures`.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> Result<SweepResult> {
    config.validate()?;
    let grid = cells(config);
    let work: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..config.replicates).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(usize, Result<ReplicateRow>)> = pool.install(|| {
        work.par_iter()
            .map(|&(c, r)| (c, run_cell(config, &grid[c], r)))
            .collect()
    });

    let mut failed: Vec<Option<String>> = vec![None; grid.len()];
    for (c, outcome) in &outcomes {
        if let (Err(e), None) = (outcome, &failed[*c]) {
            failed[*c] = Some(e.to_string());
        }
    }
    let mut rows: Vec<ReplicateRow> = outcomes
        .into_iter()
        .filter(|(c, _)| failed[*c].is_none())
        .filter_map(|(_, o)| o.ok())
        .collect();
    rows.sort_by(|a, b| a.cell.cmp_key(&b.cell).then(a.replicate.cmp(&b.replicate)));
    let failures = grid
        .iter()
        .zip(failed)
        .filter_map(|(cell, e)| e.map(|error| CellFailure { cell: *cell, error }))
        .collect();
    Ok(SweepResult { rows, failures })
}

/// Mean, standard error, and range of one metric within a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            n,
            mean,
            se,
            min,
            max,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub rho: Option<f64>,
    pub replicates: usize,
    pub f_c: MetricSummary,
    pub mean_d: MetricSummary,
    pub sigma_d: MetricSummary,
    /// `None` when no replicate had a fittable exponent.
    pub gamma_1: Option<MetricSummary>,
    pub r_d: MetricSummary,
}

/// Groups rows by cell and summarises each metric. The result is sorted by
/// cell, so it does not depend on row order.
pub fn aggregate(rows: &[ReplicateRow]) -> Vec<CellSummary> {
    let mut sorted: Vec<&ReplicateRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cell.cmp_key(&b.cell).then(a.replicate.cmp(&b.replicate)));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let cell = sorted[start].cell;
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| r.cell.same(&cell))
                .count();
        let group = &sorted[start..end];
        let pick =
            |f: fn(&GenerationStats) -> f64| group.iter().map(|r| f(&r.stats)).collect::<Vec<_>>();
        let gammas: Vec<f64> = group.iter().filter_map(|r| r.stats.gamma_1).collect();
        let summary = |v: Vec<f64>| MetricSummary::of(&v).expect("non-empty group");
        out.push(CellSummary {
            cell,
            rho: group[0].rho,
            replicates: group.len(),
            f_c: summary(pick(|s| s.f_c)),
            mean_d: summary(pick(|s| s.mean_d)),
            sigma_d: summary(pick(|s| s.sigma_d)),
            gamma_1: MetricSummary::of(&gammas),
            r_d: summary(pick(|s| s.r_d)),
        });
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(case: CaseKind, b: f64, rep: usize, f_c: f64) -> ReplicateRow {
        ReplicateRow {
            cell: Cell {
                case,
                b,
                alpha: 0.5,
                nu: 1.0,
            },
            rho: None,
            replicate: rep,
            seed: rep as u64,
            stats: GenerationStats {
                f_c,
                mean_d: 1.0,
                sigma_d: 0.0,
                gamma_1: None,
                r_d: 1.0,
            },
        }
    }

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.side = 6;
        cfg.g_end = 12;
        cfg.g_ave = 4;
        cfg.replicates = 2;
        cfg.b_grid = vec![1.2, 1.6];
        cfg
    }

    #[test]
    fn aggregate_examples() {
        let same: Vec<_> = (0..5)
            .map(|r| row(CaseKind::Standard, 1.5, r, 0.3))
            .collect();
        let s = aggregate(&same);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].f_c.mean, s[0].f_c.se, s[0].replicates), (0.3, 0.0, 5));
        assert!(s[0].gamma_1.is_none());

        let pair = vec![
            row(CaseKind::Endo, 1.5, 0, 0.0),
            row(CaseKind::Endo, 1.5, 1, 1.0),
        ];
        let s = aggregate(&pair);
        assert_eq!(s[0].f_c.mean, 0.5);
        assert_eq!((s[0].f_c.min, s[0].f_c.max), (0.0, 1.0));
    }

    #[test]
    fn aggregate_is_order_independent() {
        let mut rows = vec![
            row(CaseKind::Exo, 1.5, 1, 0.2),
            row(CaseKind::Endo, 1.5, 0, 0.4),
            row(CaseKind::Exo, 1.5, 0, 0.1),
            row(CaseKind::Endo, 1.2, 0, 0.9),
        ];
        let a = aggregate(&rows);
        rows.reverse();
        assert_eq!(a, aggregate(&rows));
        assert_eq!(a.len(), 3);
        assert_eq!(a[0].cell.case, CaseKind::Endo);
        assert_eq!(a[0].cell.b, 1.2);
    }

    proptest! {
        #[test]
        fn standard_error_shrinks_with_replicates(seed in any::<u64>()) {
            // SE of R iid uniforms is sqrt(1/12 / R); check the ratio between
            // R = 100 and R = 1600 draws is near 4.
            let mut s = crate::seed::KeyedStream::new(seed, 0);
            let small: Vec<f64> = (0..100).map(|_| s.next_f64()).collect();
            let large: Vec<f64> = (0..1600).map(|_| s.next_f64()).collect();
            let ratio = MetricSummary::of(&small).unwrap().se / MetricSummary::of(&large).unwrap().se;
            prop_assert!((ratio - 4.0).abs() < 1.0, "ratio {}", ratio);
        }
    }

    #[test]
    fn cell_grid_and_seeds() {
        let cfg = tiny();
        let grid = cells(&cfg);
        assert_eq!(grid.len(), 4 * 2);
        let mut seeds: Vec<u64> = grid
            .iter()
            .flat_map(|c| (0..3).map(move |r| c.seed(7, r)))
            .collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 24);
    }

    #[test]
    fn run_cell_is_deterministic() {
        let cfg = tiny();
        let cell = cells(&cfg)[5];
        assert_eq!(
            run_cell(&cfg, &cell, 1).unwrap(),
            run_cell(&cfg, &cell, 1).unwrap()
        );
        assert_ne!(
            run_cell(&cfg, &cell, 0).unwrap().seed,
            run_cell(&cfg, &cell, 1).unwrap().seed
        );
    }

    #[test]
    fn sweep_shape_and_thread_independence() {
        let cfg = tiny();
        let one = run_sweep(&cfg, 1).unwrap();
        assert!(one.is_complete());
        assert_eq!(one.rows.len(), cells(&cfg).len() * cfg.replicates);
        let many = run_sweep(&cfg, 3).unwrap();
        assert_eq!(one, many);
        assert!(one
            .rows
            .iter()
            .filter(|r| r.cell.case == CaseKind::Standard)
            .all(|r| r.rho.is_none()));
    }

    #[test]
    fn sweep_refuses_unstationary_config() {
        let mut cfg = tiny();
        cfg.cases = vec![CaseKind::Exo];
        cfg.alpha_grid = vec![0.99];
        cfg.beta = Some(1.0);
        assert!(matches!(
            run_sweep(&cfg, 1),
            Err(Error::NonStationary { .. })
        ));
    }
}
