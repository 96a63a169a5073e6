//! CSV result files, run manifests and gnuplot-ready data files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{Cell, CellSummary, ExperimentConfig, MetricSummary, ReplicateRow};
use crate::game::Strategy;
use crate::lattice::Lattice;
use crate::metrics::GenerationStats;
use crate::sampler::EventTimeline;

pub const RESULT_HEADER: [&str; 12] = [
    "case",
    "b",
    "alpha",
    "nu",
    "rho",
    "replicate",
    "seed",
    "f_C",
    "mean_d",
    "sigma_d",
    "gamma_1",
    "r_d",
];

pub const SERIES_HEADER: [&str; 6] = ["generation", "f_C", "mean_d", "sigma_d", "gamma_1", "r_d"];

pub const EVENT_HEADER: [&str; 4] = ["generation", "time", "agent_row", "agent_col"];

const METRICS: [&str; 5] = ["f_C", "mean_d", "sigma_d", "gamma_1", "r_d"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results<W: Write>(out: W, rows: &[ReplicateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        let s = &r.stats;
        w.write_record([
            r.cell.case.name().to_string(),
            r.cell.b.to_string(),
            r.cell.alpha.to_string(),
            r.cell.nu.to_string(),
            opt(r.rho),
            r.replicate.to_string(),
            r.seed.to_string(),
            s.f_c.to_string(),
            s.mean_d.to_string(),
            s.sigma_d.to_string(),
            opt(s.gamma_1),
            s.r_d.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_file(path: &Path, rows: &[ReplicateRow]) -> Result<()> {
    write_results(fs::File::create(path)?, rows)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse::<T>().map_err(|_| {
        Error::Io(format!(
            "line {line}: bad value `{raw}` in column `{}`",
            RESULT_HEADER[i]
        ))
    })
}

fn opt_field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<f64>> {
    if rec.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        field(rec, i, line).map(Some)
    }
}

/// Parses a per-replicate result file.
pub fn read_results(path: &Path) -> Result<Vec<ReplicateRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers()?.clone();
    if header.iter().ne(RESULT_HEADER) {
        return Err(Error::Io(format!(
            "{}: unexpected header, expected {}",
            path.display(),
            RESULT_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let case = rec.get(0).unwrap_or("").parse()?;
        rows.push(ReplicateRow {
            cell: Cell {
                case,
                b: field(&rec, 1, line)?,
                alpha: field(&rec, 2, line)?,
                nu: field(&rec, 3, line)?,
            },
            rho: opt_field(&rec, 4, line)?,
            replicate: field(&rec, 5, line)?,
            seed: field(&rec, 6, line)?,
            stats: GenerationStats {
                f_c: field(&rec, 7, line)?,
                mean_d: field(&rec, 8, line)?,
                sigma_d: field(&rec, 9, line)?,
                gamma_1: opt_field(&rec, 10, line)?,
                r_d: field(&rec, 11, line)?,
            },
        });
    }
    Ok(rows)
}

pub fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = ["case", "b", "alpha", "nu", "rho", "replicates"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in METRICS {
        for stat in ["mean", "se", "min", "max"] {
            h.push(format!("{m}_{stat}"));
        }
    }
    h
}

fn metric_fields(m: Option<&MetricSummary>) -> [String; 4] {
    match m {
        Some(m) => [
            m.mean.to_string(),
            m.se.to_string(),
            m.min.to_string(),
            m.max.to_string(),
        ],
        None => Default::default(),
    }
}

pub fn write_summary<W: Write>(out: W, summaries: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(summary_header())?;
    for s in summaries {
        let mut rec = vec![
            s.cell.case.name().to_string(),
            s.cell.b.to_string(),
            s.cell.alpha.to_string(),
            s.cell.nu.to_string(),
            opt(s.rho),
            s.replicates.to_string(),
        ];
        for m in [
            Some(&s.f_c),
            Some(&s.mean_d),
            Some(&s.sigma_d),
            s.gamma_1.as_ref(),
            Some(&s.r_d),
        ] {
            rec.extend(metric_fields(m));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, config: &ExperimentConfig) -> Result<()> {
    fs::write(path, config.to_manifest())?;
    Ok(())
}

fn gp(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NaN".into())
}

/// Writes gnuplot-compatible whitespace-separated data files, one dataset
/// per block (blocks separated by two blank lines, addressable with
/// `index`). Returns the paths written.
pub fn write_plot_files(dir: &Path, summaries: &[CellSummary]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    // f_C against b, one block per (case, alpha, nu).
    let mut by_b = String::from("# b f_C_mean f_C_se\n");
    for (label, group) in blocks(
        summaries,
        |s| (s.cell.case, s.cell.alpha.to_bits(), s.cell.nu.to_bits()),
        |s| s.cell.b,
    ) {
        let c = group[0].cell;
        by_b.push_str(&format!(
            "# {label} case={} alpha={} nu={}\n",
            c.case, c.alpha, c.nu
        ));
        for s in group {
            by_b.push_str(&format!("{} {} {}\n", s.cell.b, s.f_c.mean, s.f_c.se));
        }
        by_b.push_str("\n\n");
    }
    written.push(write_text(dir, "fc_vs_b.dat", &by_b)?);

    // Non-uniformity indices against alpha (per case, b, nu) and nu (per case, b, alpha).
    let idx_header = "mean_d sigma_d gamma_1 r_d f_C";
    let idx_row = |x: f64, s: &CellSummary| {
        format!(
            "{x} {} {} {} {} {}\n",
            s.mean_d.mean,
            s.sigma_d.mean,
            gp(s.gamma_1.map(|g| g.mean)),
            s.r_d.mean,
            s.f_c.mean
        )
    };
    let mut by_alpha = format!("# alpha {idx_header}\n");
    for (label, group) in blocks(
        summaries,
        |s| (s.cell.case, s.cell.b.to_bits(), s.cell.nu.to_bits()),
        |s| s.cell.alpha,
    ) {
        let c = group[0].cell;
        by_alpha.push_str(&format!(
            "# {label} case={} b={} nu={}\n",
            c.case, c.b, c.nu
        ));
        for s in group {
            by_alpha.push_str(&idx_row(s.cell.alpha, s));
        }
        by_alpha.push_str("\n\n");
    }
    written.push(write_text(dir, "indices_vs_alpha.dat", &by_alpha)?);
    let mut by_nu = format!("# nu {idx_header}\n");
    for (label, group) in blocks(
        summaries,
        |s| (s.cell.case, s.cell.b.to_bits(), s.cell.alpha.to_bits()),
        |s| s.cell.nu,
    ) {
        let c = group[0].cell;
        by_nu.push_str(&format!(
            "# {label} case={} b={} alpha={}\n",
            c.case, c.b, c.alpha
        ));
        for s in group {
            by_nu.push_str(&idx_row(s.cell.nu, s));
        }
        by_nu.push_str("\n\n");
    }
    written.push(write_text(dir, "indices_vs_nu.dat", &by_nu)?);

    // Scatter of indices against f_C, one block per (b, case).
    let mut scatter = String::from("# sigma_d gamma_1 r_d f_C alpha nu\n");
    for (label, group) in blocks(
        summaries,
        |s| (s.cell.case, s.cell.b.to_bits(), 0),
        |s| s.cell.alpha * 1e3 + s.cell.nu,
    ) {
        let c = group[0].cell;
        scatter.push_str(&format!("# {label} case={} b={}\n", c.case, c.b));
        for s in group {
            scatter.push_str(&format!(
                "{} {} {} {} {} {}\n",
                s.sigma_d.mean,
                gp(s.gamma_1.map(|g| g.mean)),
                s.r_d.mean,
                s.f_c.mean,
                s.cell.alpha,
                s.cell.nu
            ));
        }
        scatter.push_str("\n\n");
    }
    written.push(write_text(dir, "indices_vs_fc.dat", &scatter)?);
    Ok(written)
}

/// Groups summaries by `key`, each group sorted by `x`; labels are block
/// indices.
fn blocks<K: Ord + Copy>(
    summaries: &[CellSummary],
    key: impl Fn(&CellSummary) -> K,
    x: impl Fn(&CellSummary) -> f64,
) -> Vec<(String, Vec<&CellSummary>)> {
    let mut sorted: Vec<&CellSummary> = summaries.iter().collect();
    sorted.sort_by(|a, b| key(a).cmp(&key(b)).then(x(a).total_cmp(&x(b))));
    let mut out: Vec<(String, Vec<&CellSummary>)> = Vec::new();
    let mut current: Option<K> = None;
    for s in sorted {
        if current != Some(key(s)) {
            current = Some(key(s));
            out.push((format!("index {}", out.len()), Vec::new()));
        }
        out.last_mut().expect("block").1.push(s);
    }
    out
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Per-generation statistics of a single trial.
pub struct SeriesWriter<W: Write> {
    w: csv::Writer<W>,
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SERIES_HEADER)?;
        Ok(Self { w })
    }

    pub fn push(&mut self, generation: usize, s: &GenerationStats) -> Result<()> {
        self.w.write_record([
            generation.to_string(),
            s.f_c.to_string(),
            s.mean_d.to_string(),
            s.sigma_d.to_string(),
            opt(s.gamma_1),
            s.r_d.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// `generation,time,agent_row,agent_col` trace of donation events.
pub struct EventWriter<W: Write> {
    w: csv::Writer<W>,
}

impl<W: Write> EventWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EVENT_HEADER)?;
        Ok(Self { w })
    }

    /// Writes the events of one donation stage; `offset` is added to the
    /// window-relative event times.
    pub fn push(
        &mut self,
        generation: usize,
        offset: f64,
        timeline: &EventTimeline,
        lattice: &Lattice,
    ) -> Result<()> {
        for e in timeline.events() {
            self.record(generation, offset + e.time, e.agent as usize, lattice)?;
        }
        Ok(())
    }

    pub fn record(
        &mut self,
        generation: usize,
        time: f64,
        agent: usize,
        lattice: &Lattice,
    ) -> Result<()> {
        let (row, col) = lattice.coords(agent);
        self.w.write_record([
            generation.to_string(),
            time.to_string(),
            row.to_string(),
            col.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Strategy grid, one `C`/`D` character per cell, one row per line.
pub fn render_grid(strategies: &[Strategy], lattice: &Lattice) -> String {
    let side = lattice.side();
    let mut s = String::with_capacity(side * (side + 1));
    for row in strategies.chunks(side) {
        s.extend(row.iter().map(|st| st.as_char()));
        s.push('\n');
    }
    s
}
