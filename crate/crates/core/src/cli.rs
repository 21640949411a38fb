//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 2 on configuration errors, 3 on numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::delays::{transmission_delay, wigner_smith_delay};
use crate::error::{Error, Result};
use crate::io::config::{Circuit, RunConfig};
use crate::io::csv::Table;
use crate::io::{netlist_doc, sha256_hex, touchstone, Artifact, Manifest};
use crate::metrics::{asymmetry_spectrum, attenuation_sweep, band_average, noise_from_spectrum, CurveMode};
use crate::netlist::{build_ab_ring, Netlist};
use crate::pulse::{envelope_peaks, gaussian_pulse, propagate, pulse_metrics, sigma_v, Peak, TimeSeries};
use crate::pzfit::{fit, zero_crossing_scan, FitOptions, FitOutcome, ScanSettings};
use crate::sweep::{sweep_nudged, FrequencyGrid, FrequencySpectrum};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RINGGRAPH_WORKERS";

/// Envelope peaks below this fraction of a trace's maximum are not reported.
const PEAK_FLOOR: f64 = 0.01;

#[derive(Parser)]
#[command(name = "ringgraph", version, about = "Scattering simulation of non-reciprocal microwave ring graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Output directory; overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config and RINGGRAPH_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write whitespace-separated `.dat` files for gnuplot.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Frequency,
    Time,
}

#[derive(Subcommand)]
enum Command {
    /// S-matrix spectrum (.s2p for two ports, CSV always).
    Sweep(Common),
    /// Complex transmission and Wigner-Smith delays.
    Delays(Common),
    /// Gaussian pulse propagation and arrival metrics.
    Pulse(Common),
    /// Pole/zero fit of the Wigner-Smith delay, scanned over attenuation.
    Pzfit(Common),
    /// Transmission asymmetry against lumped attenuation.
    Attnsweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Noise transmission spectra and their ratio.
    Noise(Common),
    /// Check a netlist document, or a run config with `--config`.
    Validate {
        path: PathBuf,
        #[arg(long)]
        config: bool,
    },
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            0
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", diagnostic_json(&e, code));
            code
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else {
        3
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Validation(_) => "validation",
        Error::Resonance { .. } => "resonance",
        Error::OutOfBand { .. } => "out_of_band",
        Error::DegenerateJacobian(_) => "degenerate_jacobian",
        Error::Unsupported(_) => "unsupported",
        Error::Parse { .. } => "parse",
        Error::Config(_) => "config",
        Error::Io { .. } => "io",
    }
}

/// One-line JSON description of a failure, for standard error.
pub fn diagnostic_json(e: &Error, code: i32) -> String {
    let mut v = json!({
        "level": "error",
        "exit_code": code,
        "kind": error_kind(e),
        "message": e.to_string(),
    });
    match e {
        Error::Validation(d) => v["diagnostics"] = serde_json::to_value(d).expect("diagnostics serialize"),
        Error::Parse { line, .. } => v["line"] = json!(line),
        Error::Resonance { frequency, .. } => v["frequency_hz"] = json!(frequency),
        Error::DegenerateJacobian(p) => v["parameters"] = json!(p),
        _ => {}
    }
    v.to_string()
}

fn default_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV}='{s}' is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

fn dispatch(command: Command) -> Result<Value> {
    let (name, common, mode) = match command {
        Command::Validate { path, config } => return validate(&path, config),
        Command::Sweep(c) => ("sweep", c, None),
        Command::Delays(c) => ("delays", c, None),
        Command::Pulse(c) => ("pulse", c, None),
        Command::Pzfit(c) => ("pzfit", c, None),
        Command::Attnsweep { common, mode } => ("attnsweep", common, mode),
        Command::Noise(c) => ("noise", c, None),
    };
    let start = Instant::now();
    let cfg = RunConfig::load(&common.config)?;
    let workers = match common.workers.or(cfg.workers) {
        Some(0) => return Err(Error::Config("workers must be >= 1".into())),
        Some(n) => n,
        None => default_workers()?.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let dir = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut out = Outputs {
        dir,
        plot_data: common.plot_data,
        hash: cfg.input_hash.clone(),
        command: name,
        artifacts: Vec::new(),
    };
    let summary = pool.install(|| match name {
        "sweep" => cmd_sweep(&cfg, &mut out),
        "delays" => cmd_delays(&cfg, &mut out),
        "pulse" => cmd_pulse(&cfg, &mut out),
        "pzfit" => cmd_pzfit(&cfg, &mut out),
        "attnsweep" => {
            let mode = match mode {
                Some(ModeArg::Frequency) => CurveMode::Frequency,
                Some(ModeArg::Time) => CurveMode::Time,
                None => cfg.curve_mode,
            };
            cmd_attnsweep(&cfg, mode, &mut out)
        }
        _ => cmd_noise(&cfg, &mut out),
    })?;
    out.text("summary.json", &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))?;
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        config: Some(common.config.display().to_string()),
        input_sha256: cfg.input_hash.clone(),
        seed: cfg.seed,
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: out.artifacts,
    }
    .write(&out.dir)?;
    Ok(summary)
}

struct Outputs {
    dir: PathBuf,
    plot_data: bool,
    hash: String,
    command: &'static str,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            file: name.into(),
            sha256: sha256_hex(body.as_bytes()),
        });
        Ok(())
    }

    fn table(&mut self, name: &str, table: Table) -> Result<()> {
        let table = table
            .meta("command", self.command)
            .meta("config_sha256", &self.hash);
        self.text(&format!("{name}.csv"), &table.to_csv())?;
        if self.plot_data {
            self.text(&format!("{name}.dat"), &table.to_plot_data())?;
        }
        Ok(())
    }
}

fn circuit(cfg: &RunConfig) -> Result<Netlist> {
    match &cfg.circuit {
        Circuit::Ring { params, .. } => build_ab_ring(params),
        Circuit::Netlist(path) => netlist_doc::load(path),
    }
}

fn spectrum(cfg: &RunConfig, grid: &FrequencyGrid) -> Result<FrequencySpectrum> {
    sweep_nudged(&circuit(cfg)?, grid)
}

fn cmd_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let grid = cfg.require_grid()?;
    let spec = spectrum(cfg, &grid)?;
    let m = spec.ports();
    let mut cols = vec!["f [Hz]".to_string()];
    for i in 0..m {
        for j in 0..m {
            cols.push(format!("Re S{}{}", i + 1, j + 1));
            cols.push(format!("Im S{}{}", i + 1, j + 1));
        }
    }
    let labels: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&labels).meta("units", "f in Hz, S dimensionless");
    for (k, s) in spec.matrices.iter().enumerate() {
        let mut row = vec![spec.grid.freq(k)];
        for i in 0..m {
            for j in 0..m {
                row.extend([s[(i, j)].re, s[(i, j)].im]);
            }
        }
        t.push(row);
    }
    out.table("spectrum", t)?;
    let mut summary = json!({ "ports": m, "points": grid.n_points });
    if m == 2 {
        out.text("spectrum.s2p", &touchstone::to_string(&spec, &format!("config_sha256 {}", out.hash))?)?;
        let mut t = Table::new(&["f [Hz]", "|S21|", "|S12|", "P21-P12"]);
        let d = asymmetry_spectrum(&spec)?;
        for (k, s) in spec.matrices.iter().enumerate() {
            t.push(vec![spec.grid.freq(k), s[(1, 0)].norm(), s[(0, 1)].norm(), d[k]]);
        }
        out.table("transmission", t)?;
        let (lo, hi) = cfg.band.unwrap_or((grid.f_start, grid.f_stop));
        summary["band_hz"] = json!([lo, hi]);
        summary["mean_p21_minus_p12"] = json!(band_average(&grid, &d, lo, hi)?);
    }
    Ok(summary)
}

fn cmd_delays(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let grid = cfg.require_grid()?;
    let spec = spectrum(cfg, &grid)?;
    let mut series = vec![("tau_W".to_string(), wigner_smith_delay(&spec)?)];
    let m = spec.ports();
    for to in 0..m {
        for from in 0..m {
            if to != from {
                series.push((format!("tau_{}{}", to + 1, from + 1), transmission_delay(&spec, from, to)?));
            }
        }
    }
    let mut cols = vec!["f [Hz]".to_string()];
    for (name, _) in &series {
        cols.push(format!("Re {name} [s]"));
        cols.push(format!("Im {name} [s]"));
    }
    let labels: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&labels).meta("invalid", "NaN marks endpoints and zeros of S");
    for k in 0..grid.n_points {
        let mut row = vec![grid.freq(k)];
        for (_, d) in &series {
            let v = if d.valid[k] { d.values[k] } else { f64::NAN.into() };
            row.extend([v.re, v.im]);
        }
        t.push(row);
    }
    out.table("delays", t)?;
    let (lo, hi) = cfg.band.unwrap_or((grid.f_start, grid.f_stop));
    let mut means = serde_json::Map::new();
    for (name, d) in &series {
        let z = d.band_mean(lo, hi)?;
        means.insert(name.clone(), json!({ "re_s": z.re, "im_s": z.im }));
    }
    let mut summary = json!({ "band_hz": [lo, hi], "band_mean": means });
    if m == 2 {
        let re = |n: &str| summary["band_mean"][n]["re_s"].as_f64().unwrap_or(f64::NAN);
        summary["ratio_re_tau12_over_tau21"] = json!(re("tau_12") / re("tau_21"));
    }
    Ok(summary)
}

fn cmd_pulse(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let p = &cfg.pulse;
    let (lo, hi) = p.spec.band();
    if !(lo > 0.0) {
        return Err(Error::Config(format!(
            "pulse band reaches {lo} Hz; raise fc or widen the pulse"
        )));
    }
    let n = ((hi - lo) / p.grid_step).round() as usize + 1;
    let spec = spectrum(cfg, &FrequencyGrid::new(lo, hi, n)?)?;
    let vin = gaussian_pulse(&p.spec, p.sample_rate, p.duration)?;
    let m = spec.ports();
    let mut traces: Vec<(String, TimeSeries)> = vec![("v_in".into(), vin.clone())];
    for to in 0..m {
        for from in 0..m {
            traces.push((format!("v_{}{}", to + 1, from + 1), propagate(&spec, &vin, from, to)?));
        }
    }
    let mut cols = vec!["t [s]".to_string()];
    cols.extend(traces.iter().map(|(n, _)| format!("{n} [V]")));
    let labels: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(&labels);
    for k in 0..vin.len() {
        let mut row = vec![vin.time(k)];
        row.extend(traces.iter().map(|(_, ts)| ts.samples[k]));
        t.push(row);
    }
    out.table("traces", t)?;
    let t_center = p.spec.t_center;
    let peaks_json = |peaks: &[Peak]| {
        peaks
            .iter()
            .map(|c| json!({ "delay_s": c.time - t_center, "amp_v": c.amplitude }))
            .collect::<Vec<_>>()
    };
    let mut lines = String::new();
    let mut report = serde_json::Map::new();
    for (name, ts) in &traces {
        let pm = pulse_metrics(ts)?;
        let rec = json!({
            "trace": name,
            "delay_s": pm.arrival - p.spec.t_center,
            "peak_amp_v": pm.peak_amp,
            "ambiguous": pm.ambiguous(),
            "candidates": peaks_json(&pm.candidates),
            "peaks": peaks_json(&envelope_peaks(ts, PEAK_FLOOR)),
        });
        lines.push_str(&rec.to_string());
        lines.push('\n');
        report.insert(name.clone(), rec);
    }
    out.text("pulse_metrics.jsonl", &lines)?;
    let mut summary = json!({ "fc_hz": p.spec.fc, "fwhm_s": p.spec.fwhm, "traces": report });
    if m == 2 {
        let trace = |name: &str| &traces.iter().find(|(n, _)| n == name).expect("trace exists").1;
        summary["sigma_v"] = match sigma_v(trace("v_21"), trace("v_12"), &vin) {
            Ok(s) => json!(s),
            Err(_) => Value::Null,
        };
    }
    Ok(summary)
}

fn fit_rows(t: &mut Table, gamma: f64, o: &FitOutcome) {
    for (n, (mode, low)) in o.set.modes.iter().zip(&o.low_confidence).enumerate() {
        t.push(vec![
            gamma,
            n as f64,
            mode.f_n,
            mode.gamma_n,
            mode.z_re,
            mode.z_im,
            *low as u8 as f64,
            o.residual_norm,
            o.converged() as u8 as f64,
        ]);
    }
}

fn cmd_pzfit(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let grid = cfg.require_grid()?;
    let band = cfg.band.unwrap_or((grid.f_start, grid.f_stop));
    let n_modes = cfg
        .n_modes
        .ok_or_else(|| Error::Config("pzfit needs a [pzfit] table with n_modes".into()))?;
    let mut t = Table::new(&[
        "gamma_half [Np]",
        "mode",
        "f_n [Hz]",
        "gamma_n [Hz]",
        "Re z_n [Hz]",
        "Im z_n [Hz]",
        "low_confidence",
        "residual [s]",
        "converged",
    ]);
    let summary = match &cfg.gamma_grid {
        Some(gammas) => {
            let (params, variant, _) = cfg.require_ring()?;
            let settings = ScanSettings { grid, band, n_modes };
            let report = zero_crossing_scan(&params, variant, gammas, &settings)?;
            for row in &report.rows {
                fit_rows(&mut t, row.gamma_half, &row.outcome);
            }
            json!({
                "crossing_np": report.crossing,
                "re_drift": report.re_drift,
                "mean_im_z_hz": report.rows.iter().map(|r| r.mean_im_z).collect::<Vec<_>>(),
            })
        }
        None => {
            let tau = wigner_smith_delay(&spectrum(cfg, &grid)?)?;
            let opts = FitOptions {
                band: Some(band),
                ..FitOptions::default()
            };
            let o = fit(&tau, n_modes, None, &opts)?;
            let gamma = match &cfg.circuit {
                Circuit::Ring { gamma_half, .. } => *gamma_half,
                Circuit::Netlist(_) => f64::NAN,
            };
            fit_rows(&mut t, gamma, &o);
            json!({
                "residual_s": o.residual_norm,
                "iterations": o.iterations,
                "termination": o.termination,
            })
        }
    };
    out.table("pzfit", t.meta("eta", "0 Hz"))?;
    Ok(summary)
}

fn cmd_attnsweep(cfg: &RunConfig, mode: CurveMode, out: &mut Outputs) -> Result<Value> {
    let (params, variant, _) = cfg.require_ring()?;
    let gammas = cfg.require_gamma_grid()?;
    let settings = cfg.attenuation_settings()?;
    let curve = attenuation_sweep(&params, variant, gammas, &settings, mode)?;
    let (name, column) = match mode {
        CurveMode::Frequency => ("asymmetry_frequency", "<P21-P12>"),
        CurveMode::Time => ("asymmetry_time", "sigma_V"),
    };
    let mut t = Table::new(&["gamma_half [Np]", column]);
    for (g, v) in curve.gamma_half.iter().zip(&curve.value) {
        t.push(vec![*g, *v]);
    }
    out.table(name, t)?;
    Ok(json!({ "mode": mode, "certificate": curve.certificate() }))
}

fn cmd_noise(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let grid = cfg.require_grid()?;
    let block = cfg
        .noise_block
        .ok_or_else(|| Error::Config("noise needs a [noise] table with block".into()))?;
    let report = noise_from_spectrum(&spectrum(cfg, &grid)?, block, cfg.noise_mode)?;
    let mut t = Table::new(&["f [Hz]", "NP21", "NP12"]).meta("units", "power per unit source PSD");
    for k in 0..report.frequencies.len() {
        t.push(vec![report.frequencies[k], report.np21[k], report.np12[k]]);
    }
    out.table("noise", t)?;
    let mut t = Table::new(&["f [Hz]", "NP21", "NP12"]).meta("block", block);
    for k in 0..report.block_frequencies.len() {
        t.push(vec![report.block_frequencies[k], report.block_np21[k], report.block_np12[k]]);
    }
    out.table("noise_blocks", t)?;
    Ok(json!({ "mode": cfg.noise_mode, "block": block, "mean_ratio": report.mean_ratio }))
}

fn validate(path: &Path, as_config: bool) -> Result<Value> {
    if as_config {
        let cfg = RunConfig::load(path)?;
        circuit(&cfg)?.validate()?;
        return Ok(json!({ "status": "ok", "input_sha256": cfg.input_hash }));
    }
    let n = netlist_doc::load(path)?;
    Ok(json!({
        "status": "ok",
        "components": n.components.len(),
        "external_ports": n.external_ports.len(),
    }))
}
