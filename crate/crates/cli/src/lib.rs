//! Command implementations behind the `bandit` binary.
//!
//! Every command returns [`extbandit::Error`]; [`exit_code`] maps schema and
//! model-validation failures to status 2 and everything else to status 1.

pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use extbandit::analytic::{fit_log_constant, regret_reference, LogFit, Regime};
use extbandit::config::{parse_config, OutputFormat, Override, ValidatedConfig};
use extbandit::harness::{sweep, Execution, SweepCell};
use extbandit::results::{
    read_json, read_result_rows, write_csv, write_json, ResultRow, ResultsDocument, SampleRow,
};
use extbandit::{Error, Result};
use serde::Serialize;

use crate::plot::{Chart, Mark, Series};

pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else {
        1
    }
}

/// Options shared by `run` and `sweep`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    /// Raw `path=value` assignments.
    pub overrides: Vec<String>,
}

/// Reads, overrides and validates an experiment file.
pub fn load_config(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ValidatedConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: format!("cannot read: {e}"),
    })?;
    let mut parsed: Vec<Override> = overrides
        .iter()
        .map(|o| Override::parse(o))
        .collect::<Result<_>>()?;
    if let Some(seed) = seed {
        parsed.push(Override::new("run.base_seed", seed.into()));
    }
    parse_config(&text, &parsed)?.validate()
}

/// What a run or sweep produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub directory: PathBuf,
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
}

/// Runs every policy at the configured horizon and exponent.
pub fn run_command(opts: &RunOptions, exec: Execution) -> Result<RunReport> {
    let mut cfg = load_config(&opts.config, &opts.overrides, opts.seed)?;
    cfg.sweep.horizons.clear();
    cfg.sweep.alphas.clear();
    execute(cfg, opts, exec)
}

/// Runs every policy over the configured horizon × exponent grid.
pub fn sweep_command(opts: &RunOptions, exec: Execution) -> Result<RunReport> {
    let cfg = load_config(&opts.config, &opts.overrides, opts.seed)?;
    execute(cfg, opts, exec)
}

/// Schema and model checks only; returns a one-line summary.
pub fn validate_command(path: &Path, overrides: &[String]) -> Result<String> {
    let cfg = load_config(path, overrides, None)?;
    let points = cfg.sweep.grid()?.len();
    Ok(format!(
        "ok: {} arms, f = {}, {} policies, {} grid point(s), {} replications",
        cfg.model.arms(),
        cfg.model.externality().label(),
        cfg.sweep.policies.len(),
        points,
        cfg.sweep.replications
    ))
}

fn execute(cfg: ValidatedConfig, opts: &RunOptions, exec: Execution) -> Result<RunReport> {
    let directory = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let cells = sweep(&cfg.sweep, exec)?;
    let files = write_outputs(&directory, &cells, &cfg.output.formats, opts.deterministic)?;
    let rows = result_rows(&cells, opts.deterministic);
    Ok(RunReport {
        directory,
        rows,
        files,
    })
}

fn result_rows(cells: &[SweepCell], deterministic: bool) -> Vec<ResultRow> {
    cells
        .iter()
        .map(|c| {
            let mut r = ResultRow::from_cell(c);
            if deterministic {
                r.wall_seconds = 0.0;
            }
            r
        })
        .collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes the requested artifacts once every cell is complete.
pub fn write_outputs(
    directory: &Path,
    cells: &[SweepCell],
    formats: &[OutputFormat],
    deterministic: bool,
) -> Result<Vec<PathBuf>> {
    let rows = result_rows(cells, deterministic);
    for r in &rows {
        r.check_finite()?;
    }
    let stamp = (!deterministic).then(|| format!("generated_at_unix={}", unix_now()));
    fs::create_dir_all(directory)?;
    let mut files = Vec::new();

    if formats.contains(&OutputFormat::Csv) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, stamp.as_deref())?;
        files.push(write_file(directory.join("results.csv"), &buf)?);
        let samples: Vec<SampleRow> = cells.iter().flat_map(SampleRow::from_cell).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &samples, stamp.as_deref())?;
        files.push(write_file(directory.join("samples.csv"), &buf)?);
    }
    if formats.contains(&OutputFormat::Json) {
        let doc = ResultsDocument {
            generated_at: stamp.clone(),
            rows: rows.clone(),
        };
        let mut buf = Vec::new();
        write_json(&mut buf, &doc)?;
        files.push(write_file(directory.join("results.json"), &buf)?);
    }
    if formats.contains(&OutputFormat::Svg) {
        let plots = directory.join("plots");
        fs::create_dir_all(&plots)?;
        for (name, chart) in run_charts(cells) {
            files.push(write_file(plots.join(name), chart.render().as_bytes())?);
        }
    }
    Ok(files)
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes)?;
    Ok(path)
}

fn point_tag(horizon: u64, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("T{horizon}_alpha{a}"),
        None => format!("T{horizon}"),
    }
}

/// One strip chart of pseudo-regret realizations per grid point, plus mean
/// regret against T when the grid has several horizons.
fn run_charts(cells: &[SweepCell]) -> Vec<(String, Chart)> {
    let mut by_point: Vec<(String, Vec<&SweepCell>)> = Vec::new();
    for c in cells {
        let tag = point_tag(c.point.horizon, c.point.alpha);
        match by_point.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, v)) => v.push(c),
            None => by_point.push((tag, vec![c])),
        }
    }
    let mut charts = Vec::new();
    for (tag, group) in &by_point {
        let mut chart = Chart {
            title: format!("Pseudo-regret realizations, {}", tag.replace('_', ", ")),
            x_label: "policy".into(),
            y_label: "pseudo-regret".into(),
            ..Chart::default()
        };
        for (i, cell) in group.iter().enumerate() {
            let n = cell.aggregate.samples.len().max(1) as f64;
            let points = cell
                .aggregate
                .samples
                .iter()
                .enumerate()
                .map(|(k, &y)| (i as f64 + 0.6 * ((k as f64 + 0.5) / n - 0.5), y))
                .collect();
            chart.x_categories.push((i as f64, cell.policy.label()));
            chart.series.push(Series {
                label: cell.policy.label(),
                points,
                mark: Mark::Dots,
                colour: i,
            });
        }
        charts.push((format!("samples_{tag}.svg"), chart));
    }

    let horizons: std::collections::BTreeSet<u64> = cells.iter().map(|c| c.point.horizon).collect();
    if horizons.len() > 1 {
        let mut series: Vec<Series> = Vec::new();
        for c in cells {
            let label = match c.point.alpha {
                Some(a) => format!("{} alpha={a}", c.policy.label()),
                None => c.policy.label(),
            };
            let point = (c.point.horizon as f64, c.aggregate.mean_regret);
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push(point),
                None => {
                    let colour = series.len();
                    series.push(Series {
                        label,
                        points: vec![point],
                        mark: Mark::Line,
                        colour,
                    });
                }
            }
        }
        charts.push((
            "regret_vs_horizon.svg".into(),
            Chart {
                title: "Mean pseudo-regret".into(),
                x_label: "T".into(),
                y_label: "pseudo-regret".into(),
                log_x: true,
                log_y: true,
                series,
                ..Chart::default()
            },
        ));
    }
    charts
}

/// Regime selection for `curves`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeChoice {
    /// From each row's `alpha`.
    Auto,
    Lt1,
    Eq1,
    Gt1,
}

impl RegimeChoice {
    fn resolve(self, alpha: Option<f64>) -> Result<Regime> {
        let from_alpha = || {
            alpha.ok_or_else(|| {
                Error::Fit("rows carry no alpha; choose the regime explicitly with --regime".into())
            })
        };
        let regime = match self {
            RegimeChoice::Auto => return Regime::from_alpha(from_alpha()?),
            RegimeChoice::Eq1 => Regime::AlphaEq1,
            RegimeChoice::Lt1 => Regime::AlphaLt1 {
                alpha: from_alpha()?,
            },
            RegimeChoice::Gt1 => Regime::AlphaGt1 {
                alpha: from_alpha()?,
            },
        };
        if let Some(a) = alpha {
            let natural = Regime::from_alpha(a)?;
            if natural.tag() != regime.tag() {
                return Err(Error::Fit(format!(
                    "regime {} does not match alpha = {a} ({})",
                    regime.tag(),
                    natural.tag()
                )));
            }
        }
        Ok(regime)
    }
}

/// A fitted overlay for one (policy, parameters, alpha) series.
#[derive(Debug, Clone)]
pub struct CurveFit {
    pub policy: String,
    pub params: String,
    pub alpha: Option<f64>,
    pub regime: Regime,
    pub horizons: Vec<u64>,
    pub regret: Vec<f64>,
    pub regret_se: Vec<f64>,
    /// Regime shape curve with a fitted constant.
    pub reference: LogFit,
    /// Linear-in-T curve with a fitted constant, for comparison.
    pub linear: LogFit,
}

impl CurveFit {
    pub fn label(&self) -> String {
        let base = if self.params.is_empty() {
            self.policy.clone()
        } else {
            format!("{}({})", self.policy, self.params)
        };
        match self.alpha {
            Some(a) => format!("{base} alpha={a}"),
            None => base,
        }
    }
}

#[derive(Debug, Serialize)]
struct CurveRow<'a> {
    policy: &'a str,
    params: &'a str,
    alpha: Option<f64>,
    regime: &'static str,
    horizon: u64,
    regret_mean: f64,
    regret_se: f64,
    reference_shape: f64,
    reference_fitted: f64,
    constant: f64,
    log_rss: f64,
    linear_constant: f64,
    linear_rss: f64,
}

/// Loads result rows from CSV, or JSON when the file ends in `.json`.
pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = fs::File::open(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        Ok(read_json(file)?.rows)
    } else {
        read_result_rows(file)
    }
}

/// Fits one constant per series against the regime's regret shape.
pub fn fit_curves(rows: &[ResultRow], choice: RegimeChoice) -> Result<Vec<CurveFit>> {
    type Key = (String, String, Option<u64>);
    let mut groups: Vec<(Key, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        let key = (
            r.policy.clone(),
            r.params.clone(),
            r.alpha.map(f64::to_bits),
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Fit("results contain no rows".into()));
    }
    let mut fits = Vec::new();
    for ((policy, params, _), mut group) in groups {
        group.sort_by_key(|r| r.horizon);
        if let Some(w) = group.windows(2).find(|w| w[0].horizon == w[1].horizon) {
            return Err(Error::Fit(format!(
                "{} has two rows at T = {}",
                w[0].label(),
                w[0].horizon
            )));
        }
        let alpha = group[0].alpha;
        let regime = choice.resolve(alpha)?;
        let horizons: Vec<u64> = group.iter().map(|r| r.horizon).collect();
        let t: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
        let regret: Vec<f64> = group.iter().map(|r| r.regret_mean).collect();
        let context = |e: Error| Error::Fit(format!("{}: {e}", group[0].label()));
        let reference =
            fit_log_constant(&t, &regret, |h| regret_reference(regime, h)).map_err(context)?;
        let linear = fit_log_constant(&t, &regret, |h| h).map_err(context)?;
        fits.push(CurveFit {
            policy,
            params,
            alpha,
            regime,
            horizons,
            regret_se: group.iter().map(|r| r.regret_se).collect(),
            regret,
            reference,
            linear,
        });
    }
    Ok(fits)
}

/// Fits overlays for a results file and writes `curves.csv` (and optionally
/// `plots/curves.svg`) into `out_dir`, defaulting to the results directory.
pub fn curves_command(
    results: &Path,
    choice: RegimeChoice,
    out_dir: Option<&Path>,
    plot: bool,
) -> Result<(Vec<CurveFit>, Vec<PathBuf>)> {
    let rows = load_results(results)?;
    let fits = fit_curves(&rows, choice)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| results.parent().map(Path::to_path_buf).unwrap_or_default());
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(&dir)?;
    }
    let mut out_rows = Vec::new();
    for f in &fits {
        for (i, &h) in f.horizons.iter().enumerate() {
            let shape = regret_reference(f.regime, h as f64);
            out_rows.push(CurveRow {
                policy: &f.policy,
                params: &f.params,
                alpha: f.alpha,
                regime: f.regime.tag(),
                horizon: h,
                regret_mean: f.regret[i],
                regret_se: f.regret_se[i],
                reference_shape: shape,
                reference_fitted: f.reference.constant * shape,
                constant: f.reference.constant,
                log_rss: f.reference.rss,
                linear_constant: f.linear.constant,
                linear_rss: f.linear.rss,
            });
        }
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, &out_rows, None)?;
    let mut files = vec![write_file(dir.join("curves.csv"), &buf)?];
    if plot {
        let plots = dir.join("plots");
        fs::create_dir_all(&plots)?;
        files.push(write_file(
            plots.join("curves.svg"),
            curves_chart(&fits).render().as_bytes(),
        )?);
    }
    Ok((fits, files))
}

fn curves_chart(fits: &[CurveFit]) -> Chart {
    let mut series = Vec::new();
    for (i, f) in fits.iter().enumerate() {
        let t: Vec<f64> = f.horizons.iter().map(|&h| h as f64).collect();
        series.push(Series {
            label: f.label(),
            points: t.iter().copied().zip(f.regret.iter().copied()).collect(),
            mark: Mark::Line,
            colour: i,
        });
        series.push(Series {
            label: format!("{:.3} x {}", f.reference.constant, shape_name(f.regime)),
            points: t
                .iter()
                .map(|&h| (h, f.reference.constant * regret_reference(f.regime, h)))
                .collect(),
            mark: Mark::Dashed,
            colour: i,
        });
    }
    Chart {
        title: "Pseudo-regret against fitted reference curves".into(),
        x_label: "T".into(),
        y_label: "pseudo-regret".into(),
        log_x: true,
        log_y: true,
        series,
        ..Chart::default()
    }
}

fn shape_name(regime: Regime) -> String {
    match regime {
        Regime::AlphaLt1 { alpha } => format!("T^{} ln^{alpha} T", 1.0 - alpha),
        Regime::AlphaEq1 => "ln^2 T".into(),
        Regime::AlphaGt1 { alpha } => format!("ln^{alpha} T"),
    }
}

/// Human-readable table of result rows.
pub fn format_rows(rows: &[ResultRow]) -> String {
    let labels: Vec<String> = rows.iter().map(ResultRow::label).collect();
    let width = labels.iter().map(String::len).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<w$}  {:>9}  {:>6}  {:>12}  {:>10}  {:>8}\n",
        "policy",
        "T",
        "alpha",
        "regret",
        "se",
        "starved",
        w = width
    );
    for (r, label) in rows.iter().zip(labels) {
        let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<w$}  {:>9}  {:>6}  {:>12.3}  {:>10.3}  {:>8.3}\n",
            label,
            r.horizon,
            alpha,
            r.regret_mean,
            r.regret_se,
            r.starvation_frequency,
            w = width
        ));
    }
    out
}
