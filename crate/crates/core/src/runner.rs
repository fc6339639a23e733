//! Executes a [`RunConfig`]: runs the selected engines at every sweep point
//! and writes the CSV table, the oracle time series, the JSON summary and
//! an optional SVG plot.
//!
//! Every sweep point uses the same master seed, so MCWF curves share their
//! random numbers point to point and differences between points are not
//! swamped by independent sampling noise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cascade::{build_basic_model, build_entanglement_model, CascadeParams, ScenarioModel};
use crate::config::{RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::lindblad::{c1_coherent_flux, c1_flux, integrate_master, MasterSolution, ObservableTrace};
use crate::obe::{self, ObeParams};
use crate::operator::expectation;
use crate::plot::{emit_plot, Plot, Point, Series};
use crate::trajectory::{run_ensemble_recorded, EnsembleResult, Estimate};

pub const CSV_HEADER: &str = "sweep_param,sweep_value,engine,observable,mean,stderr,n_traj,seed";
pub const TIMESERIES_HEADER: &str = "sweep_param,sweep_value,t,series,value";

pub const ENGINE_MCWF: &str = "mcwf";
pub const ENGINE_ORACLE: &str = "oracle";
pub const ENGINE_CLOSED_FORM: &str = "closed_form";

/// Version string recorded in summaries: crate version plus `git describe`.
pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("CASCADE_SIM_GIT"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub engine: &'static str,
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_traj: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDiagnostics {
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub sweep_value: Option<f64>,
    pub rows: Vec<Row>,
    /// Trajectories still excited at `t_end` (MCWF only).
    pub horizon_warnings: usize,
    pub oracle: Option<OracleDiagnostics>,
    pub trace: Option<ObservableTrace>,
}

impl PointResult {
    pub fn row(&self, engine: &str, observable: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.engine == engine && r.observable == observable)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: RunConfig,
    pub points: Vec<PointResult>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LinearFit { slope, intercept, r_squared })
}

/// Ratio-of-means estimate `Σnum/Σden` with a first-order (delta-method)
/// standard error; `num` and `den` are paired per trajectory.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let mean_den = den.iter().sum::<f64>() / n as f64;
    if !(mean_den > 0.0) {
        return Estimate { mean: f64::NAN, stderr: f64::NAN };
    }
    let ratio = num.iter().sum::<f64>() / den.iter().sum::<f64>();
    let residuals: Vec<f64> = num.iter().zip(den).map(|(a, b)| a - ratio * b).collect();
    let spread = Estimate::from_samples(&residuals).stderr;
    Estimate { mean: ratio, stderr: spread / mean_den }
}

/// Observable that the summary analysis and the plot track.
pub fn primary_observable(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::LambdaBasic | Scenario::LambdaJitter => "absorbed",
        Scenario::PolarizationEntanglement => "total_success",
        Scenario::CoherentObe => "window_flux_rel",
    }
}

fn projector_samples(model: &ScenarioModel, result: &EnsembleResult, name: &str) -> Result<Vec<f64>> {
    let projector = model.projector(name)?;
    let records = result.records.as_ref().ok_or_else(|| Error::config("ensemble was run without records"))?;
    records.iter().map(|r| expectation(&r.final_state, projector).map(|z| z.re)).collect()
}

struct Ctx<'a> {
    config: &'a RunConfig,
    rows: Vec<Row>,
    horizon_warnings: usize,
    oracle: Option<OracleDiagnostics>,
    trace: Option<ObservableTrace>,
}

impl Ctx<'_> {
    fn mcwf(&mut self, observable: impl Into<String>, e: Estimate) {
        self.rows.push(Row {
            engine: ENGINE_MCWF,
            observable: observable.into(),
            mean: e.mean,
            stderr: e.stderr,
            n_traj: self.config.ensemble.n_traj,
            seed: self.config.ensemble.master_seed,
        });
    }

    fn exact(&mut self, engine: &'static str, observable: impl Into<String>, value: f64) {
        self.rows.push(Row { engine, observable: observable.into(), mean: value, stderr: 0.0, n_traj: 0, seed: 0 });
    }

    fn ensemble(&mut self, model: &ScenarioModel) -> Result<EnsembleResult> {
        let e = &self.config.ensemble;
        let result = run_ensemble_recorded(model, &self.config.integrator, e.n_traj, e.master_seed)?;
        self.horizon_warnings += result.horizon_warnings;
        Ok(result)
    }

    /// Projector estimates plus the fraction of jumps in each channel.
    fn mcwf_standard(&mut self, result: &EnsembleResult) {
        for (name, estimate) in &result.observables {
            self.mcwf(name.clone(), *estimate);
        }
        let total = result.total_jumps();
        for (channel, &count) in &result.channel_counts {
            let f = if total > 0 { count as f64 / total as f64 } else { 0.0 };
            let stderr = if total > 0 { (f * (1.0 - f) / total as f64).sqrt() } else { 0.0 };
            self.mcwf(format!("jump_fraction:{channel}"), Estimate { mean: f, stderr });
        }
    }

    fn master(&mut self, model: &ScenarioModel) -> Result<MasterSolution> {
        let solution = integrate_master(model, &self.config.integrator)?;
        let diag =
            OracleDiagnostics { max_trace_drift: solution.max_trace_drift, min_eigenvalue: solution.min_eigenvalue };
        self.oracle = Some(match self.oracle.take() {
            None => diag,
            Some(d) => OracleDiagnostics {
                max_trace_drift: d.max_trace_drift.max(diag.max_trace_drift),
                min_eigenvalue: d.min_eigenvalue.min(diag.min_eigenvalue),
            },
        });
        Ok(solution)
    }

    fn oracle_standard(&mut self, solution: &MasterSolution) {
        for (name, value) in solution.final_observables() {
            self.exact(ENGINE_ORACLE, name, value);
        }
    }
}

fn evaluate_basic(ctx: &mut Ctx, params: &CascadeParams) -> Result<()> {
    let model = build_basic_model(params)?;
    if ctx.config.engine.runs_oracle() {
        let solution = ctx.master(&model)?;
        ctx.oracle_standard(&solution);
        ctx.trace = Some(solution.trace);
    }
    if ctx.config.engine.runs_mcwf() {
        let result = ctx.ensemble(&model)?;
        ctx.mcwf_standard(&result);
    }
    Ok(())
}

/// Jittered run against a `gamma30_S = 0` baseline with everything else equal.
fn evaluate_jitter(ctx: &mut Ctx, params: &CascadeParams) -> Result<()> {
    let model = build_basic_model(params)?;
    let baseline = build_basic_model(&CascadeParams { gamma30_s: 0.0, ..*params })?;
    if ctx.config.engine.runs_oracle() {
        let solution = ctx.master(&model)?;
        ctx.oracle_standard(&solution);
        let jittered = solution.trace.final_value("absorbed")?;
        let reference = ctx.master(&baseline)?.trace.final_value("absorbed")?;
        ctx.exact(ENGINE_ORACLE, "absorbed_baseline", reference);
        ctx.exact(ENGINE_ORACLE, "relative_decrease", 1.0 - jittered / reference);
        ctx.trace = Some(solution.trace);
    }
    if ctx.config.engine.runs_mcwf() {
        let result = ctx.ensemble(&model)?;
        ctx.mcwf_standard(&result);
        // same seeds, so the pairing below is trajectory by trajectory
        let reference = ctx.ensemble(&baseline)?;
        ctx.mcwf("absorbed_baseline", reference.observable("absorbed")?);
        let num = projector_samples(&model, &result, "absorbed")?;
        let den = projector_samples(&baseline, &reference, "absorbed")?;
        let kept = ratio_estimate(&num, &den);
        ctx.mcwf("relative_decrease", Estimate { mean: 1.0 - kept.mean, stderr: kept.stderr });
    }
    Ok(())
}

fn evaluate_entanglement(ctx: &mut Ctx, params: &CascadeParams) -> Result<()> {
    let model = build_entanglement_model(params)?;
    if ctx.config.engine.runs_oracle() {
        let solution = ctx.master(&model)?;
        ctx.oracle_standard(&solution);
        let success = solution.trace.final_value("success")?;
        let bell = solution.trace.final_value("bell")?;
        ctx.exact(ENGINE_ORACLE, "fidelity", if success > 0.0 { bell / success } else { f64::NAN });
        ctx.exact(ENGINE_ORACLE, "total_success", params.eta_s * success);
        ctx.trace = Some(solution.trace);
    }
    if ctx.config.engine.runs_mcwf() {
        let result = ctx.ensemble(&model)?;
        ctx.mcwf_standard(&result);
        let bell = projector_samples(&model, &result, "bell")?;
        let success = projector_samples(&model, &result, "success")?;
        ctx.mcwf("fidelity", ratio_estimate(&bell, &success));
        let s = result.observable("success")?;
        ctx.mcwf("total_success", Estimate { mean: params.eta_s * s.mean, stderr: params.eta_s * s.stderr });
    }
    Ok(())
}

/// Closed-form field plus the time-domain output flux at the center of the
/// quasi-steady window, both relative to the incident flux `|beta|²`.
fn evaluate_obe(ctx: &mut Ctx, params: &ObeParams) -> Result<()> {
    let field = obe::mean_output_field(params)?;
    let coherence = obe::quasi_steady_coherence(params)?;
    let incident = params.beta * params.beta;
    ctx.exact(ENGINE_CLOSED_FORM, "output_field_re", field.re);
    ctx.exact(ENGINE_CLOSED_FORM, "output_field_im", field.im);
    ctx.exact(ENGINE_CLOSED_FORM, "coherence_re", coherence.re);
    ctx.exact(ENGINE_CLOSED_FORM, "coherence_im", coherence.im);
    if incident > 0.0 {
        ctx.exact(ENGINE_CLOSED_FORM, "output_flux_rel", field.norm_sqr() / incident);
    }

    let model = obe::build_coherent_drive_model(params)?;
    if ctx.config.engine.runs_oracle() {
        let solution = ctx.master(&model)?;
        ctx.oracle_standard(&solution);
        let center = obe::window_center(params, ctx.config.integrator.t_end);
        ctx.exact(ENGINE_ORACLE, "window_center", center);
        if incident > 0.0 {
            let total = c1_flux(&solution.trace)?.value_at(center);
            let coherent = c1_coherent_flux(&solution.trace)?.value_at(center);
            ctx.exact(ENGINE_ORACLE, "window_flux_rel", total / incident);
            ctx.exact(ENGINE_ORACLE, "window_coherent_flux_rel", coherent / incident);
        }
        ctx.trace = Some(solution.trace);
    }
    if ctx.config.engine.runs_mcwf() {
        let result = ctx.ensemble(&model)?;
        ctx.mcwf_standard(&result);
    }
    Ok(())
}

/// Runs every engine selected by `config` at a single parameter point.
pub fn evaluate_point(config: &RunConfig, sweep_value: Option<f64>) -> Result<PointResult> {
    let mut ctx = Ctx { config, rows: Vec::new(), horizon_warnings: 0, oracle: None, trace: None };
    match config.scenario {
        Scenario::LambdaBasic => evaluate_basic(&mut ctx, config.params.cascade()?)?,
        Scenario::LambdaJitter => evaluate_jitter(&mut ctx, config.params.cascade()?)?,
        Scenario::PolarizationEntanglement => evaluate_entanglement(&mut ctx, config.params.cascade()?)?,
        Scenario::CoherentObe => evaluate_obe(&mut ctx, config.params.obe()?)?,
    }
    Ok(PointResult {
        sweep_value,
        rows: ctx.rows,
        horizon_warnings: ctx.horizon_warnings,
        oracle: ctx.oracle,
        trace: ctx.trace,
    })
}

/// Evaluates every sweep point. Points may run concurrently; results come
/// back in sweep order.
pub fn execute(config: &RunConfig) -> Result<RunReport> {
    config.check()?;
    let started = Instant::now();
    let points = config
        .sweep_points()
        .into_par_iter()
        .map(|value| match value {
            None => evaluate_point(config, None),
            Some(v) => config
                .at_sweep_value(v)
                .and_then(|point_config| evaluate_point(&point_config, Some(v)))
                .map_err(|e| Error::SweepPoint {
                    param: config.sweep.as_ref().map(|s| s.path.clone()).unwrap_or_default(),
                    value: v,
                    source: Box::new(e),
                }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { config: config.clone(), points, wall_clock_seconds: started.elapsed().as_secs_f64() })
}

fn sweep_param(config: &RunConfig) -> &str {
    config.sweep.as_ref().map(|s| s.path.as_str()).unwrap_or("")
}

/// Shortest round-trip form; switches to exponent notation for tiny values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let param = sweep_param(&self.config);
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for point in &self.points {
            let value = fmt_value(point.sweep_value);
            for r in &point.rows {
                let _ = writeln!(
                    out,
                    "{param},{value},{},{},{},{},{},{}",
                    r.engine,
                    r.observable,
                    num(r.mean),
                    num(r.stderr),
                    r.n_traj,
                    r.seed
                );
            }
        }
        out
    }

    /// Long-format oracle time series, or `None` when the oracle did not run.
    pub fn timeseries_csv(&self) -> Option<String> {
        if self.points.iter().all(|p| p.trace.is_none()) {
            return None;
        }
        let param = sweep_param(&self.config);
        let mut out = String::new();
        out.push_str(TIMESERIES_HEADER);
        out.push('\n');
        for point in &self.points {
            let Some(trace) = &point.trace else { continue };
            let value = fmt_value(point.sweep_value);
            for (name, values) in &trace.series {
                for (t, v) in trace.times.iter().zip(values) {
                    let _ = writeln!(out, "{param},{value},{},{name},{}", num(*t), num(*v));
                }
            }
        }
        Some(out)
    }

    /// `(sweep value, estimate)` pairs of one observable for one engine.
    /// Points without a sweep value are placed at `x = 0`.
    pub fn series(&self, engine: &str, observable: &str) -> Vec<(f64, Estimate)> {
        self.points
            .iter()
            .filter_map(|p| {
                p.row(engine, observable)
                    .map(|r| (p.sweep_value.unwrap_or(0.0), Estimate { mean: r.mean, stderr: r.stderr }))
            })
            .collect()
    }

    fn engines(&self) -> Vec<&'static str> {
        [ENGINE_ORACLE, ENGINE_MCWF, ENGINE_CLOSED_FORM]
            .into_iter()
            .filter(|e| self.points.iter().any(|p| p.rows.iter().any(|r| r.engine == *e)))
            .collect()
    }

    fn analysis(&self) -> Value {
        let primary = primary_observable(self.config.scenario);
        let mut by_engine = BTreeMap::new();
        for engine in self.engines() {
            let series = self.series(engine, primary);
            if series.is_empty() {
                continue;
            }
            let peak = series
                .iter()
                .fold(None::<&(f64, Estimate)>, |best, s| match best {
                    Some(b) if b.1.mean >= s.1.mean => Some(b),
                    _ => Some(s),
                })
                .expect("series is non-empty");
            let xs: Vec<f64> = series.iter().map(|s| s.0).collect();
            let ys: Vec<f64> = series.iter().map(|s| s.1.mean).collect();
            let fit = if self.config.sweep.is_some() { linear_fit(&xs, &ys) } else { None };
            by_engine.insert(
                engine,
                json!({
                    "peak": { "sweep_value": peak.0, "mean": peak.1.mean, "stderr": peak.1.stderr },
                    "linear_fit": fit.map(|f| json!({
                        "slope": f.slope,
                        "intercept": f.intercept,
                        "r_squared": f.r_squared,
                    })),
                }),
            );
        }
        json!({ "observable": primary, "engines": by_engine })
    }

    pub fn summary(&self) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|p| {
                let mut results: BTreeMap<&str, BTreeMap<&str, Value>> = BTreeMap::new();
                for r in &p.rows {
                    results
                        .entry(r.engine)
                        .or_default()
                        .insert(&r.observable, json!({ "mean": r.mean, "stderr": r.stderr }));
                }
                json!({
                    "sweep_value": p.sweep_value,
                    "results": results,
                    "horizon_warnings": p.horizon_warnings,
                    "oracle": p.oracle.as_ref().map(|d| json!({
                        "max_trace_drift": d.max_trace_drift,
                        "min_eigenvalue": d.min_eigenvalue,
                    })),
                })
            })
            .collect();
        json!({
            "version": version(),
            "wall_clock_seconds": self.wall_clock_seconds,
            "config": self.config.to_value(),
            "sweep_param": self.config.sweep.as_ref().map(|s| s.path.clone()),
            "points": points,
            "analysis": self.analysis(),
        })
    }

    pub fn plot(&self) -> Plot {
        let primary = primary_observable(self.config.scenario);
        let series = self
            .engines()
            .into_iter()
            .map(|engine| Series {
                name: engine.to_string(),
                points: self
                    .series(engine, primary)
                    .into_iter()
                    .map(|(x, e)| Point { x, y: e.mean, yerr: e.stderr })
                    .collect(),
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        Plot {
            title: self.config.scenario.name().to_string(),
            x_label: self.config.sweep.as_ref().map(|s| s.path.clone()).unwrap_or_else(|| "point".into()),
            y_label: primary.to_string(),
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub timeseries: Option<PathBuf>,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
}

fn timeseries_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}_timeseries.csv"))
}

/// Writes the report's files; relative output paths resolve against `out_dir`.
pub fn write_outputs(report: &RunReport, out_dir: &Path) -> Result<WrittenFiles> {
    std::fs::create_dir_all(out_dir)?;
    let outputs = &report.config.outputs;
    let csv = out_dir.join(&outputs.csv);
    std::fs::write(&csv, report.to_csv())?;
    let timeseries = match report.timeseries_csv() {
        Some(text) => {
            let path = timeseries_path(&csv);
            std::fs::write(&path, text)?;
            Some(path)
        }
        None => None,
    };
    let json_path = out_dir.join(&outputs.json);
    let mut text = serde_json::to_string_pretty(&report.summary()).expect("summary serializes");
    text.push('\n');
    std::fs::write(&json_path, text)?;
    let svg = match &outputs.svg {
        Some(name) => {
            let path = out_dir.join(name);
            emit_plot(&report.plot(), &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(WrittenFiles { csv, timeseries, json: json_path, svg })
}

/// [`execute`] followed by [`write_outputs`].
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<(RunReport, WrittenFiles)> {
    let report = execute(config)?;
    let files = write_outputs(&report, out_dir)?;
    Ok((report, files))
}
