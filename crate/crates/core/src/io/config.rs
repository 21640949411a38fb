//! Run configuration files (TOML).
//!
//! Every dimensioned value is a string with a unit. A relative netlist path
//! resolves against the directory holding the config file; the output
//! directory resolves against the working directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Table;

use super::netlist_doc::{coax_from_table, toml_error};
use super::units::{parse_quantity, Dimension};
use crate::elements::CoaxSpec;
use crate::error::{Error, Result};
use crate::metrics::{AttenuationSweep, CurveMode, NoiseMode};
use crate::netlist::{GyratorMode, RingParams, RingVariant};
use crate::pulse::{PulseSpec, DEFAULT_DURATION, DEFAULT_SAMPLE_RATE};
use crate::sweep::FrequencyGrid;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    grid: Option<RawGrid>,
    ring: Option<RawRing>,
    netlist: Option<String>,
    band: Option<RawBand>,
    pulse: Option<RawPulse>,
    attenuation: Option<RawAttenuation>,
    pzfit: Option<RawPzfit>,
    noise: Option<RawNoise>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    output_dir: Option<String>,
    workers: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: String,
    stop: String,
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRing {
    circumference: String,
    #[serde(default)]
    variant: Option<RingVariant>,
    gamma_half: Option<String>,
    gyrator: Option<GyratorMode>,
    gyrator_phase: Option<String>,
    #[serde(default)]
    uniform_loss: bool,
    coax: Option<Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    lo: String,
    hi: String,
    points: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    fc: Option<String>,
    fwhm: Option<String>,
    amplitude: Option<String>,
    t_center: Option<String>,
    sample_rate: Option<String>,
    duration: Option<String>,
    grid_step: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttenuation {
    start: Option<String>,
    stop: Option<String>,
    step: Option<String>,
    values: Option<Vec<String>>,
    mode: Option<CurveMode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPzfit {
    n_modes: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    block: usize,
    #[serde(default)]
    stochastic: bool,
    realizations: Option<usize>,
}

/// What a run simulates.
#[derive(Debug, Clone, PartialEq)]
pub enum Circuit {
    Ring {
        params: RingParams,
        variant: RingVariant,
        gamma_half: f64,
    },
    Netlist(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSettings {
    pub spec: PulseSpec,
    pub sample_rate: f64,
    pub duration: f64,
    /// Step of the frequency sweep behind each propagated trace, Hz.
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub seed: u64,
    pub grid: Option<FrequencyGrid>,
    pub circuit: Circuit,
    pub band: Option<(f64, f64)>,
    /// Points of the band grid used by attenuation sweeps.
    pub band_points: usize,
    pub pulse: PulseSettings,
    pub gamma_grid: Option<Vec<f64>>,
    pub curve_mode: CurveMode,
    pub n_modes: Option<usize>,
    pub noise_block: Option<usize>,
    pub noise_mode: NoiseMode,
    /// SHA-256 of the config text followed by any referenced netlist file.
    pub input_hash: String,
}

fn q(text: &str, dim: Dimension, what: &str) -> Result<f64> {
    parse_quantity(text, dim).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn opt_q(text: &Option<String>, dim: Dimension, what: &str, default: f64) -> Result<f64> {
    text.as_deref().map_or(Ok(default), |t| q(t, dim, what))
}

fn gamma_grid(raw: &RawAttenuation) -> Result<Vec<f64>> {
    let a = Dimension::Attenuation;
    let grid = match (&raw.values, &raw.start, &raw.stop, &raw.step) {
        (Some(v), None, None, None) => v
            .iter()
            .map(|s| q(s, a, "attenuation.values"))
            .collect::<Result<Vec<_>>>()?,
        (None, Some(start), Some(stop), Some(step)) => {
            let (start, stop, step) = (
                q(start, a, "attenuation.start")?,
                q(stop, a, "attenuation.stop")?,
                q(step, a, "attenuation.step")?,
            );
            if !(step > 0.0) || !(stop >= start) {
                return Err(Error::Config("attenuation grid needs start <= stop and step > 0".into()));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| start + k as f64 * step).collect()
        }
        _ => {
            return Err(Error::Config(
                "attenuation needs either 'values' or all of 'start', 'stop', 'step'".into(),
            ))
        }
    };
    if grid.is_empty() || grid.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::Config("attenuation values must be >= 0 Np".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("attenuation values must be strictly ascending".into()));
    }
    Ok(grid)
}

impl RunConfig {
    /// Parse config text; `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());

        let grid = match &raw.grid {
            Some(g) => Some(
                FrequencyGrid::new(
                    q(&g.start, Dimension::Frequency, "grid.start")?,
                    q(&g.stop, Dimension::Frequency, "grid.stop")?,
                    g.points,
                )
                .map_err(|e| Error::Config(format!("grid: {e}")))?,
            ),
            None => None,
        };

        let circuit = match (&raw.ring, &raw.netlist) {
            (Some(r), None) => {
                let coax = match &r.coax {
                    Some(t) => coax_from_table(t, 0, CoaxSpec::semirigid_141())
                        .map_err(|e| Error::Config(format!("ring.coax: {e}")))?,
                    None => CoaxSpec::semirigid_141(),
                };
                let sigma = q(&r.circumference, Dimension::Length, "ring.circumference")?;
                let variant = r.variant.unwrap_or(RingVariant::Balanced);
                let gamma_half = opt_q(&r.gamma_half, Dimension::Attenuation, "ring.gamma_half", 0.0)?;
                let phase = opt_q(&r.gyrator_phase, Dimension::Angle, "ring.gyrator_phase", std::f64::consts::PI)?;
                if !(sigma > 0.0) || !(gamma_half >= 0.0) {
                    return Err(Error::Config("ring needs circumference > 0 and gamma_half >= 0".into()));
                }
                let params = RingParams {
                    coax,
                    ..RingParams::lossless(sigma)
                }
                .with_gamma_half(variant, gamma_half)
                .with_uniform_loss(r.uniform_loss)
                .with_gyrator(r.gyrator.unwrap_or(GyratorMode::Composed), phase);
                Circuit::Ring {
                    params,
                    variant,
                    gamma_half,
                }
            }
            (None, Some(p)) => {
                let path = base_dir.join(p);
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                hasher.update(&bytes);
                Circuit::Netlist(path)
            }
            _ => {
                return Err(Error::Config(
                    "give exactly one of a [ring] table and a 'netlist' path".into(),
                ))
            }
        };

        let band = match &raw.band {
            Some(b) => {
                let lo = q(&b.lo, Dimension::Frequency, "band.lo")?;
                let hi = q(&b.hi, Dimension::Frequency, "band.hi")?;
                if !(lo > 0.0 && hi > lo) {
                    return Err(Error::Config("band needs 0 < lo < hi".into()));
                }
                if let Some(g) = &grid {
                    if lo < g.f_start || hi > g.f_stop {
                        return Err(Error::Config(format!(
                            "band {lo} .. {hi} Hz lies outside the grid {} .. {} Hz",
                            g.f_start, g.f_stop
                        )));
                    }
                }
                Some((lo, hi))
            }
            None => None,
        };
        let band_points = raw.band.as_ref().and_then(|b| b.points).unwrap_or(2001);

        let p = raw.pulse.as_ref();
        let get = |f: fn(&RawPulse) -> &Option<String>| p.and_then(|p| f(p).clone());
        let fc_default = band.map_or(9.7e9, |(lo, hi)| 0.5 * (lo + hi));
        let base = PulseSpec::nanosecond(fc_default);
        let pulse = PulseSettings {
            spec: PulseSpec {
                fc: opt_q(&get(|p| &p.fc), Dimension::Frequency, "pulse.fc", base.fc)?,
                fwhm: opt_q(&get(|p| &p.fwhm), Dimension::Time, "pulse.fwhm", base.fwhm)?,
                amplitude: opt_q(&get(|p| &p.amplitude), Dimension::Voltage, "pulse.amplitude", base.amplitude)?,
                t_center: opt_q(&get(|p| &p.t_center), Dimension::Time, "pulse.t_center", base.t_center)?,
            },
            sample_rate: opt_q(&get(|p| &p.sample_rate), Dimension::Frequency, "pulse.sample_rate", DEFAULT_SAMPLE_RATE)?,
            duration: opt_q(&get(|p| &p.duration), Dimension::Time, "pulse.duration", DEFAULT_DURATION)?,
            grid_step: opt_q(&get(|p| &p.grid_step), Dimension::Frequency, "pulse.grid_step", 1e6)?,
        };
        if !(pulse.spec.fwhm > 0.0 && pulse.sample_rate > 0.0 && pulse.duration > 0.0 && pulse.grid_step > 0.0) {
            return Err(Error::Config("pulse fwhm, sample_rate, duration and grid_step must be > 0".into()));
        }

        let (gamma, curve_mode) = match &raw.attenuation {
            Some(a) => (Some(gamma_grid(a)?), a.mode.unwrap_or(CurveMode::Frequency)),
            None => (None, CurveMode::Frequency),
        };
        let seed = raw.run.seed.unwrap_or(0);
        let noise_mode = match &raw.noise {
            Some(n) if n.stochastic => NoiseMode::Stochastic {
                realizations: n.realizations.unwrap_or(10_000),
                seed,
            },
            Some(n) if n.realizations.is_some() => {
                return Err(Error::Config("noise.realizations needs stochastic = true".into()))
            }
            _ => NoiseMode::Deterministic,
        };
        if raw.noise.as_ref().is_some_and(|n| n.block == 0) {
            return Err(Error::Config("noise.block must be >= 1".into()));
        }
        if raw.run.workers == Some(0) {
            return Err(Error::Config("run.workers must be >= 1".into()));
        }

        let output_dir = PathBuf::from(raw.run.output_dir.as_deref().unwrap_or("out"));
        let input_hash = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(RunConfig {
            base_dir: base_dir.to_path_buf(),
            output_dir,
            workers: raw.run.workers,
            seed,
            grid,
            circuit,
            band,
            band_points,
            pulse,
            gamma_grid: gamma,
            curve_mode,
            n_modes: raw.pzfit.map(|p| p.n_modes),
            noise_block: raw.noise.map(|n| n.block),
            noise_mode,
            input_hash,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn require_grid(&self) -> Result<FrequencyGrid> {
        self.grid
            .ok_or_else(|| Error::Config("this command needs a [grid] table".into()))
    }

    pub fn require_band(&self) -> Result<(f64, f64)> {
        self.band
            .ok_or_else(|| Error::Config("this command needs a [band] table".into()))
    }

    pub fn require_ring(&self) -> Result<(RingParams, RingVariant, f64)> {
        match &self.circuit {
            Circuit::Ring {
                params,
                variant,
                gamma_half,
            } => Ok((*params, *variant, *gamma_half)),
            Circuit::Netlist(_) => Err(Error::Config(
                "this command varies the ring attenuation and needs a [ring] table".into(),
            )),
        }
    }

    pub fn require_gamma_grid(&self) -> Result<&[f64]> {
        self.gamma_grid
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs an [attenuation] table".into()))
    }

    /// Settings of an attenuation sweep over the configured band.
    pub fn attenuation_settings(&self) -> Result<AttenuationSweep> {
        let (lo, hi) = self.require_band()?;
        Ok(AttenuationSweep {
            grid: FrequencyGrid::new(lo, hi, self.band_points)
                .map_err(|e| Error::Config(format!("band: {e}")))?,
            band: (lo, hi),
            pulse_grid_step: self.pulse.grid_step,
            fwhm: self.pulse.spec.fwhm,
        })
    }
}
