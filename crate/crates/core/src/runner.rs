//! Config-driven runs: single solves, sweeps, oracle validation and field
//! dumps, each writing deterministic CSV/JSON artifacts.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Format, Point, RunConfig, Variant};
use crate::fundamental::{find_fundamental, solve_lossy, ModePair};
use crate::mode::{ModeSolution, Polarization, Quality};
use crate::oracle::{find_resonance, LayeredRadialProblem};
use crate::qed::{build_report, geometry_echo, QedReport};

pub const CSV_HEADER: &str = "geometry_variant,R_m,Rminor_m,t_m,polarization,m,lambda_res_m,Q_total,Q_rad,Q_abs,V_m_m3,Gamma_coating,f,g_max_over_2pi_Hz,g_eff_over_2pi_Hz,kappa_over_2pi_Hz,gamma_eff_over_2pi_Hz,config_hash";

pub const VALIDATION_HEADER: &str =
    "geometry_variant,R_m,Rminor_m,t_m,polarization,m,method,lambda_res_m,Q_rad,rel_err_lambda,delta_log10_Q_rad,within_tolerance,config_hash";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} failed: {message}")]
    Solver { stage: &'static str, message: String },
    #[error("{failed} of {total} validation rows outside tolerance")]
    Validation { failed: usize, total: usize },
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// 1 config, 2 solver (or output), 3 validation tolerance.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Solver { .. } | RunError::Io(_) => 2,
            RunError::Validation { .. } => 3,
        }
    }
}

/// Which stage of a point failed, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl StageError {
    fn new(stage: &'static str, e: impl ToString) -> Self {
        Self { stage, message: e.to_string() }
    }
}

/// One (geometry, polarization) outcome with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub geometry_variant: &'static str,
    #[serde(rename = "R_m")]
    pub major_radius: f64,
    #[serde(rename = "Rminor_m")]
    pub minor_radius: f64,
    #[serde(rename = "t_m")]
    pub coating: f64,
    pub polarization: Polarization,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<QedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    pub config_hash: String,
    pub grid_cells: usize,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let head = format!(
            "{},{},{},{},{}",
            self.geometry_variant, self.major_radius, self.minor_radius, self.coating, self.polarization
        );
        let body = match &self.report {
            Some(r) => [
                r.m.to_string(),
                r.lambda_res_m.to_string(),
                quality_cell(r.q_total),
                quality_cell(r.q_rad),
                quality_cell(r.q_abs),
                r.mode_volume.to_string(),
                r.gamma_coating.to_string(),
                r.f.to_string(),
                r.g_max_over_2pi_hz.to_string(),
                r.g_eff_over_2pi_hz.to_string(),
                r.kappa_over_2pi_hz.to_string(),
                r.gamma_eff_over_2pi_hz.to_string(),
            ]
            .join(","),
            None => vec![""; 12].join(","),
        };
        format!("{head},{body},{}", self.config_hash)
    }
}

fn quality_cell(q: Quality) -> String {
    match q {
        Quality::Finite(v) => v.to_string(),
        Quality::AtLeast(v) => format!(">={v:e}"),
    }
}

/// Lossless and lossy solves plus all figures of merit at one point.
pub fn solve_point(config: &RunConfig, point: Point) -> Result<(QedReport, ModePair), StageError> {
    let cs = config.cross_section(point.radius, point.coating).map_err(|e| StageError::new("geometry", e))?;
    let settings = config.settings();
    let (m, lossless) =
        find_fundamental(&cs, point.polarization, config.target.wavelength, &settings).map_err(|e| StageError::new("mode search", e))?;
    let lossy = solve_lossy(&cs, &lossless, &settings).map_err(|e| StageError::new("lossy solve", e))?;
    let pair = ModePair { m, lossless, lossy };
    let report = build_report(&cs, &pair, &config.dipole(), config.materials.host_permittivity)
        .map_err(|e| StageError::new("metrics", e))?;
    Ok((report, pair))
}

fn row_for(config: &RunConfig, hash: &str, point: Point) -> (ResultRow, Option<ModePair>) {
    let start = Instant::now();
    let outcome = solve_point(config, point);
    let (r, rm, t) = match config.cross_section(point.radius, point.coating) {
        Ok(cs) => geometry_echo(&cs),
        Err(_) => (point.radius, config.minor_radius(), point.coating),
    };
    let variant = match config.geometry.variant {
        Variant::CoatedToroid => "coated_toroid",
        Variant::CoatedSphere => "coated_sphere",
        Variant::Cylinder => "cylinder",
    };
    let (report, error, pair) = match outcome {
        Ok((report, pair)) => (Some(report), None, Some(pair)),
        Err(e) => (None, Some(e), None),
    };
    let row = ResultRow {
        geometry_variant: variant,
        major_radius: r,
        minor_radius: rm,
        coating: t,
        polarization: point.polarization,
        report,
        error,
        config_hash: hash.to_owned(),
        grid_cells: pair.as_ref().map_or(0, |p| p.lossless.fields.grid.cell_count()),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    (row, pair)
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_rows(config: &RunConfig, dir: &Path, stem: &str, hash: &str, rows: &[ResultRow]) -> Result<Vec<PathBuf>, RunError> {
    let mut written = Vec::new();
    if config.output.formats.contains(&Format::Csv) {
        let path = dir.join(format!("{stem}.csv"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "{CSV_HEADER}")?;
        for row in rows {
            writeln!(w, "{}", row.csv_line())?;
        }
        w.flush()?;
        written.push(path);
    }
    if config.output.formats.contains(&Format::Json) {
        #[derive(Serialize)]
        struct Doc<'a> {
            config_hash: &'a str,
            rows: &'a [ResultRow],
        }
        let path = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&Doc { config_hash: hash, rows }).map_err(io::Error::other)?;
        fs::write(&path, text + "\n")?;
        written.push(path);
    }
    Ok(written)
}

fn write_field(dir: &Path, hash: &str, mode: &ModeSolution) -> Result<PathBuf, RunError> {
    let path = dir.join(format!("field_{}.txt", mode.polarization));
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "# config_hash {hash}")?;
    writeln!(w, "# polarization {} m {} lambda_res_m {:e}", mode.polarization, mode.m, mode.wavelength())?;
    mode.fields.write_dump(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn write_grid(dir: &Path, hash: &str, mode: &ModeSolution) -> Result<PathBuf, RunError> {
    let path = dir.join(format!("grid_{}.txt", mode.polarization));
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "# config_hash {hash}")?;
    mode.fields.grid.write_dump(&mut w)?;
    w.flush()?;
    Ok(path)
}

fn require_scalar(config: &RunConfig) -> Result<(), RunError> {
    if config.is_scalar() {
        Ok(())
    } else {
        Err(ConfigError::Invalid { field: "geometry", message: "this command needs a single R and t; use sweep".into() }.into())
    }
}

/// Every polarization of a single geometry. Fails on the first failing point.
pub fn run_single(config: &RunConfig, out: &Path) -> Result<Vec<ResultRow>, RunError> {
    require_scalar(config)?;
    let hash = config.hash();
    let mut rows = Vec::new();
    let mut modes = Vec::new();
    for point in config.points() {
        let (row, pair) = row_for(config, &hash, point);
        if let Some(e) = &row.error {
            return Err(RunError::Solver { stage: e.stage, message: format!("{} {}", point.polarization, e.message) });
        }
        rows.push(row);
        modes.extend(pair.map(|p| p.lossless));
    }
    create_dir(out)?;
    write_rows(config, out, "solve", &hash, &rows)?;
    if config.output.field_map {
        for mode in &modes {
            write_field(out, &hash, mode)?;
        }
    }
    Ok(rows)
}

/// The Cartesian product of the sweep axes and polarizations, solved by a
/// pool of `workers` threads. Failed points become error rows.
pub fn run_sweep(config: &RunConfig, out: &Path, workers: usize) -> Result<Vec<ResultRow>, RunError> {
    let hash = config.hash();
    let points = config.points();
    create_dir(out)?;
    let slots: Mutex<Vec<Option<ResultRow>>> = Mutex::new(vec![None; points.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, points.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&point) = points.get(k) else { break };
                let (row, _) = row_for(config, &hash, point);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(row);
            });
        }
    });
    let rows: Vec<ResultRow> = slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every point ran")).collect();
    write_rows(config, out, "sweep", &hash, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed == rows.len() {
        let first = rows.iter().find_map(|r| r.error.clone());
        let (stage, message) = first.map_or(("sweep", "no points".to_owned()), |e| (e.stage, e.message));
        return Err(RunError::Solver { stage, message: format!("all {failed} points failed; first: {message}") });
    }
    Ok(rows)
}

/// Numeric against analytic resonance for one point.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub geometry_variant: &'static str,
    #[serde(rename = "R_m")]
    pub radius: f64,
    #[serde(rename = "t_m")]
    pub coating: f64,
    pub polarization: Polarization,
    pub m: Option<u32>,
    pub numeric_lambda_m: Option<f64>,
    pub numeric_q_rad: Option<f64>,
    pub analytic_lambda_m: Option<f64>,
    pub analytic_q_rad: Option<f64>,
    pub rel_err_lambda: Option<f64>,
    /// Absent when either Q exceeds the comparison ceiling.
    pub delta_log10_q_rad: Option<f64>,
    pub pass: bool,
    pub error: Option<StageError>,
}

impl ValidationRow {
    fn csv_lines(&self, hash: &str) -> [String; 2] {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let head = format!("{},{},0,{},{}", self.geometry_variant, self.radius, self.coating, self.polarization);
        let m = self.m.map_or(String::new(), |m| m.to_string());
        let tail = format!("{},{},{}", opt(self.rel_err_lambda), opt(self.delta_log10_q_rad), self.pass);
        [
            format!("{head},{m},numeric,{},{},{tail},{hash}", opt(self.numeric_lambda_m), opt(self.numeric_q_rad)),
            format!("{head},{m},analytic,{},{},{tail},{hash}", opt(self.analytic_lambda_m), opt(self.analytic_q_rad)),
        ]
    }
}

fn validate_point(config: &RunConfig, point: Point) -> ValidationRow {
    let variant = if config.geometry.variant == Variant::Cylinder { "cylinder" } else { "coated_sphere" };
    let mut row = ValidationRow {
        geometry_variant: variant,
        radius: point.radius,
        coating: point.coating,
        polarization: point.polarization,
        m: None,
        numeric_lambda_m: None,
        numeric_q_rad: None,
        analytic_lambda_m: None,
        analytic_q_rad: None,
        rel_err_lambda: None,
        delta_log10_q_rad: None,
        pass: false,
        error: None,
    };
    let result = (|| {
        let cs = config.cross_section(point.radius, point.coating).map_err(|e| StageError::new("geometry", e))?;
        let settings = config.settings();
        let (m, mode) = find_fundamental(&cs, point.polarization, config.target.wavelength, &settings)
            .map_err(|e| StageError::new("mode search", e))?;
        row.m = Some(m);
        let lambda = mode.wavelength();
        row.numeric_lambda_m = Some(lambda);
        row.numeric_q_rad = Some(mode.quality().value());
        let prob = LayeredRadialProblem::from_cross_section(&cs, point.polarization, m as usize)
            .map_err(|e| StageError::new("oracle", e))?;
        // Half a free spectral range either side isolates order m.
        let half = 0.5 * lambda / m as f64;
        let res = find_resonance(&prob, (lambda - half, lambda + half)).map_err(|e| StageError::new("oracle", e))?;
        Ok::<_, StageError>((mode.quality(), res))
    })();
    match result {
        Ok((q_num, res)) => {
            let v = &config.validation;
            let rel = (row.numeric_lambda_m.unwrap_or(0.0) - res.wavelength).abs() / res.wavelength;
            row.analytic_lambda_m = Some(res.wavelength);
            row.analytic_q_rad = Some(res.quality);
            row.rel_err_lambda = Some(rel);
            let compare_q = !q_num.is_bound() && q_num.value() <= v.max_compared_quality && res.quality <= v.max_compared_quality;
            let dq = compare_q.then(|| (q_num.value().log10() - res.quality.log10()).abs());
            row.delta_log10_q_rad = dq;
            row.pass = rel <= v.wavelength_tolerance && dq.is_none_or(|d| d <= v.log_q_tolerance);
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Compares each point against the analytic oracle. Requires a sphere or
/// a cylinder.
pub fn run_validate(config: &RunConfig, out: &Path, workers: usize) -> Result<Vec<ValidationRow>, RunError> {
    if config.geometry.variant == Variant::CoatedToroid {
        return Err(ConfigError::Invalid { field: "geometry.variant", message: "validation needs coated_sphere or cylinder".into() }.into());
    }
    let hash = config.hash();
    let points = config.points();
    create_dir(out)?;
    let slots: Mutex<Vec<Option<ValidationRow>>> = Mutex::new(vec![None; points.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, points.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&point) = points.get(k) else { break };
                let row = validate_point(config, point);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(row);
            });
        }
    });
    let rows: Vec<ValidationRow> = slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every point ran")).collect();

    if config.output.formats.contains(&Format::Csv) {
        let mut w = BufWriter::new(fs::File::create(out.join("validate.csv"))?);
        writeln!(w, "{VALIDATION_HEADER}")?;
        for row in &rows {
            for line in row.csv_lines(&hash) {
                writeln!(w, "{line}")?;
            }
        }
        w.flush()?;
    }
    if config.output.formats.contains(&Format::Json) {
        #[derive(Serialize)]
        struct Doc<'a> {
            config_hash: &'a str,
            rows: &'a [ValidationRow],
        }
        let text = serde_json::to_string_pretty(&Doc { config_hash: &hash, rows: &rows }).map_err(io::Error::other)?;
        fs::write(out.join("validate.json"), text + "\n")?;
    }

    if let Some(e) = rows.iter().find_map(|r| r.error.clone()) {
        return Err(RunError::Solver { stage: e.stage, message: e.message });
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(RunError::Validation { failed, total: rows.len() });
    }
    Ok(rows)
}

/// Lossless fundamental mode of each polarization, written as a field map
/// and a grid map.
pub fn dump_field(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    require_scalar(config)?;
    let hash = config.hash();
    let settings = config.settings();
    let mut modes = Vec::new();
    for point in config.points() {
        let cs = config.cross_section(point.radius, point.coating)?;
        let (_, mode) = find_fundamental(&cs, point.polarization, config.target.wavelength, &settings)
            .map_err(|e| RunError::Solver { stage: "mode search", message: format!("{} {e}", point.polarization) })?;
        modes.push(mode);
    }
    create_dir(out)?;
    let mut written = Vec::new();
    for mode in &modes {
        written.push(write_field(out, &hash, mode)?);
        written.push(write_grid(out, &hash, mode)?);
    }
    Ok(written)
}
