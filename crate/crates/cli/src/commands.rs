use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hawkes_coop_core::experiment::io::{
    read_results, render_grid, write_manifest, write_plot_files, write_results_file, write_summary,
    EventWriter, SeriesWriter,
};
use hawkes_coop_core::experiment::{build_engine, kernel_params, Cell};
use hawkes_coop_core::{
    aggregate, cells, run_sweep, CellSummary, Error, EventTimeline, ExperimentConfig, Lattice,
    LatticeSampler,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Cli, Command, ConfigArgs, OUT_ENV};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Partial { failed, total } => {
                write!(f, "{failed} of {total} cells failed; see failures.csv")
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::NonStationary { .. }
            | Error::InvalidLattice { .. } => CliError::Config(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<()> {
    let log = Log {
        quiet: cli.quiet,
        verbose: cli.verbose,
    };
    match &cli.command {
        Command::Run { config, replicate } => run(config, *replicate, log),
        Command::Sweep { config } => sweep(config, log),
        Command::Analyze { results, out } => analyze(results, out.as_deref(), log),
        Command::Trace {
            config,
            horizon,
            step,
            row,
            col,
        } => trace(config, *horizon, *step, (*row, *col), log),
    }
}

#[derive(Clone, Copy)]
struct Log {
    quiet: bool,
    verbose: u8,
}

impl Log {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Defaults, then scale, preset, config file and explicit overrides.
pub fn build_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
        cfg.out = PathBuf::from(dir);
    }
    if let Some(scale) = &args.scale {
        cfg = cfg.with_scale(scale.parse()?);
    }
    if let Some(preset) = &args.preset {
        cfg = cfg.with_preset(preset.parse()?);
    }
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in args.overrides() {
        cfg.set(key, &value)?;
    }
    for item in &args.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(key.trim(), value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single_cell(cfg: &ExperimentConfig, command: &str) -> Result<Cell> {
    let grid = cells(cfg);
    match grid.as_slice() {
        [cell] => Ok(*cell),
        _ => Err(CliError::Config(format!(
            "`{command}` needs exactly one (case, b, alpha, nu) cell but the configuration gives {}; \
             narrow it with --case, --b, --alpha and --nu",
            grid.len()
        ))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn describe(cell: &Cell) -> String {
    format!(
        "case={} b={} alpha={} nu={}",
        cell.case, cell.b, cell.alpha, cell.nu
    )
}

fn run(args: &ConfigArgs, replicate: usize, log: Log) -> Result<()> {
    let cfg = build_config(args)?;
    let cell = single_cell(&cfg, "run")?;
    fs::create_dir_all(&cfg.out)?;
    let mut engine = build_engine(&cfg, &cell, replicate)?;
    log.info(format!(
        "run {} replicate {replicate}: {} generations on {}x{}",
        describe(&cell),
        cfg.g_end,
        cfg.side,
        cfg.side
    ));

    let mut series = SeriesWriter::new(create(&cfg.out.join("series.csv"))?)?;
    let mut events = if cfg.dump_events {
        Some(EventWriter::new(create(&cfg.out.join("events.csv"))?)?)
    } else {
        None
    };
    let grid_dir = cfg.out.join("grids");
    if cfg.dump_grid > 0 {
        if grid_dir.exists() {
            fs::remove_dir_all(&grid_dir)?;
        }
        fs::create_dir_all(&grid_dir)?;
        let initial = render_grid(&engine.population().strategies, engine.lattice());
        fs::write(grid_dir.join("gen_000000.txt"), initial)?;
    }

    let t_g = cfg.t_g;
    let every = cfg.dump_grid;
    let mut failure: Option<Error> = None;
    let summary = engine.run_trial_with(|e, stats| {
        if failure.is_some() {
            return;
        }
        let g = e.generation() - 1;
        let mut step = || -> hawkes_coop_core::Result<()> {
            series.push(g, stats)?;
            if let Some(w) = events.as_mut() {
                w.push(g, g as f64 * t_g, e.timeline(), e.lattice())?;
            }
            if every > 0 && (g + 1) % every == 0 {
                let path = grid_dir.join(format!("gen_{:06}.txt", g + 1));
                fs::write(path, render_grid(&e.population().strategies, e.lattice()))?;
            }
            Ok(())
        };
        if let Err(err) = step() {
            failure = Some(err);
        }
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    series.finish()?;
    if let Some(w) = events {
        w.finish()?;
    }
    write_manifest(&cfg.out.join("manifest.txt"), &cfg)?;

    let s = summary.stats;
    println!(
        "{} seed={} f_C={:.4} mean_d={:.4} sigma_d={:.4} gamma_1={} r_d={:.4}",
        describe(&cell),
        cell.seed(cfg.seed, replicate),
        s.f_c,
        s.mean_d,
        s.sigma_d,
        s.gamma_1
            .map_or_else(|| "-".to_string(), |g| format!("{g:.4}")),
        s.r_d
    );
    Ok(())
}

fn print_summary(s: &CellSummary) {
    println!(
        "{:<8} b={:<4} alpha={:<4} nu={:<3} f_C={:.4}±{:.4} mean_d={:.4} sigma_d={:.4} gamma_1={} r_d={:+.4}",
        s.cell.case.name(),
        s.cell.b,
        s.cell.alpha,
        s.cell.nu,
        s.f_c.mean,
        s.f_c.se,
        s.mean_d.mean,
        s.sigma_d.mean,
        s.gamma_1.map_or_else(|| "-".to_string(), |g| format!("{:.3}", g.mean)),
        s.r_d.mean
    );
}

fn write_analysis(dir: &Path, summaries: &[CellSummary]) -> Result<()> {
    let mut out = create(&dir.join("summary.csv"))?;
    write_summary(&mut out, summaries)?;
    out.flush()?;
    write_plot_files(&dir.join("plots"), summaries)?;
    Ok(())
}

fn sweep(args: &ConfigArgs, log: Log) -> Result<()> {
    let cfg = build_config(args)?;
    if cfg.dump_events || cfg.dump_grid > 0 {
        log.info("note: event and grid dumps apply to `run` only; ignored by `sweep`");
    }
    let total = cells(&cfg).len();
    fs::create_dir_all(&cfg.out)?;
    log.info(format!(
        "sweep: {total} cells x {} replicates, L={}, {} generations",
        cfg.replicates, cfg.side, cfg.g_end
    ));
    let result = run_sweep(&cfg, args.jobs)?;

    write_results_file(&cfg.out.join("results.csv"), &result.rows)?;
    write_manifest(&cfg.out.join("manifest.txt"), &cfg)?;
    let summaries = aggregate(&result.rows);
    write_analysis(&cfg.out, &summaries)?;
    if log.verbose > 0 {
        summaries.iter().for_each(print_summary);
    }

    let failures_path = cfg.out.join("failures.csv");
    if result.is_complete() {
        if failures_path.exists() {
            fs::remove_file(&failures_path)?;
        }
        log.info(format!(
            "wrote {} rows to {}",
            result.rows.len(),
            cfg.out.display()
        ));
        return Ok(());
    }
    let mut w = create(&failures_path)?;
    writeln!(w, "case,b,alpha,nu,error")?;
    for f in &result.failures {
        let error = f.error.replace('"', "'");
        writeln!(
            w,
            "{},{},{},{},\"{error}\"",
            f.cell.case, f.cell.b, f.cell.alpha, f.cell.nu
        )?;
    }
    w.flush()?;
    Err(CliError::Partial {
        failed: result.failures.len(),
        total,
    })
}

fn analyze(results: &Path, out: Option<&Path>, log: Log) -> Result<()> {
    let rows = read_results(results)?;
    if rows.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no result rows",
            results.display()
        )));
    }
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => results
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    let summaries = aggregate(&rows);
    fs::create_dir_all(&dir)?;
    write_analysis(&dir, &summaries)?;
    if log.verbose > 0 {
        summaries.iter().for_each(print_summary);
    }
    log.info(format!(
        "{} rows -> {} cells; wrote {}",
        rows.len(),
        summaries.len(),
        dir.join("summary.csv").display()
    ));
    Ok(())
}

fn trace(
    args: &ConfigArgs,
    horizon: f64,
    step: f64,
    (row, col): (usize, usize),
    log: Log,
) -> Result<()> {
    let cfg = build_config(args)?;
    let cell = single_cell(&cfg, "trace")?;
    if !(horizon.is_finite() && horizon > 0.0 && step.is_finite() && step > 0.0 && step <= horizon)
    {
        return Err(CliError::Config(format!(
            "need 0 < step <= horizon, got step {step} and horizon {horizon}"
        )));
    }
    if row >= cfg.side || col >= cfg.side {
        return Err(CliError::Config(format!(
            "agent ({row}, {col}) is outside the {}x{} lattice",
            cfg.side, cfg.side
        )));
    }
    let params = kernel_params(&cfg, &cell)?.ok_or_else(|| {
        CliError::Config("`trace` needs a point-process case (poisson, endo or exo)".into())
    })?;
    let lattice = Lattice::new(cfg.side, cfg.k)?;
    let agent = lattice.index(row, col);
    let mut rng = ChaCha8Rng::seed_from_u64(cell.seed(cfg.seed, 0));
    let mut sampler = LatticeSampler::new(params, &lattice, &mut rng)?;
    sampler.warm_up(&lattice, &mut rng);

    fs::create_dir_all(&cfg.out)?;
    let mut events = EventWriter::new(create(&cfg.out.join("trace_events.csv"))?)?;
    let mut intensity = create(&cfg.out.join("trace_intensity.csv"))?;
    writeln!(intensity, "time,lambda")?;
    let origin = sampler.clock();
    writeln!(intensity, "0,{}", sampler.intensity(agent, origin))?;

    let steps = (horizon / step).round() as usize;
    let mut window = EventTimeline::new(lattice.len());
    let mut count = 0usize;
    for s in 0..steps {
        let start = s as f64 * step;
        sampler.run_window(&lattice, step, &mut rng, &mut window);
        for e in window.events() {
            let t = start + e.time;
            events.record(
                (t / cfg.t_g).floor() as usize,
                t,
                e.agent as usize,
                &lattice,
            )?;
        }
        count += window.len();
        let t = (s + 1) as f64 * step;
        writeln!(
            intensity,
            "{t},{}",
            sampler.intensity(agent, sampler.clock())
        )?;
    }
    events.finish()?;
    intensity.flush()?;
    write_manifest(&cfg.out.join("manifest.txt"), &cfg)?;
    log.info(format!(
        "trace {}: {count} events over {horizon} time units; rho={}",
        describe(&cell),
        params.rho
    ));
    Ok(())
}
