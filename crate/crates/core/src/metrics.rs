//! Transmission asymmetry, attenuation sweeps and incoherent-source analysis.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{build_ab_ring, RingParams, RingVariant};
use crate::pulse::{gaussian_pulse, propagate, sigma_v, PulseSpec, DEFAULT_DURATION, DEFAULT_SAMPLE_RATE};
use crate::sweep::{sweep, FrequencyGrid, FrequencySpectrum};

/// `|S21|² − |S12|²` at every grid point.
pub fn asymmetry_spectrum(spec: &FrequencySpectrum) -> Result<Vec<f64>> {
    spec.require_two_port()?;
    Ok(spec
        .matrices
        .iter()
        .map(|s| s[(1, 0)].norm_sqr() - s[(0, 1)].norm_sqr())
        .collect())
}

/// Mean of `series` over grid points with `f_lo <= f <= f_hi`.
pub fn band_average(grid: &FrequencyGrid, series: &[f64], f_lo: f64, f_hi: f64) -> Result<f64> {
    if series.len() != grid.n_points {
        return Err(Error::domain(format!(
            "series of {} values on a {}-point grid",
            series.len(),
            grid.n_points
        )));
    }
    let r = grid.band_indices(f_lo, f_hi);
    if r.is_empty() {
        return Err(Error::domain(format!(
            "band {f_lo} .. {f_hi} Hz holds no grid points"
        )));
    }
    let n = r.len() as f64;
    Ok(series[r].iter().sum::<f64>() / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    /// Band-averaged `P21 − P12`.
    Frequency,
    /// Pulse-based `σ_V`.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryCurve {
    /// Per-bond attenuation `Γ_A/2`, Np.
    pub gamma_half: Vec<f64>,
    pub value: Vec<f64>,
    pub mode: CurveMode,
}

/// Evidence that a curve rises to an interior maximum and falls after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCertificate {
    pub argmax: usize,
    pub gamma_at_max: f64,
    pub max_value: f64,
    /// Some sample before the maximum is strictly lower.
    pub rises: bool,
    /// Some sample after the maximum is strictly lower.
    pub falls: bool,
    /// Interior strict local maxima.
    pub local_maxima: usize,
}

impl PeakCertificate {
    pub fn non_monotone(&self) -> bool {
        self.rises && self.falls
    }
}

impl AsymmetryCurve {
    pub fn argmax(&self) -> Option<usize> {
        self.value
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
    }

    pub fn certificate(&self) -> Option<PeakCertificate> {
        let k = self.argmax()?;
        let v = &self.value;
        let local_maxima = (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
            .count();
        Some(PeakCertificate {
            argmax: k,
            gamma_at_max: self.gamma_half[k],
            max_value: v[k],
            rises: v[..k].iter().any(|&x| x < v[k]),
            falls: v[k + 1..].iter().any(|&x| x < v[k]),
            local_maxima,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationSweep {
    /// Frequency grid for the frequency-domain average. Its span should hold
    /// `band`.
    pub grid: FrequencyGrid,
    pub band: (f64, f64),
    /// Frequency step of the sweep behind each propagated pulse.
    pub pulse_grid_step: f64,
    pub fwhm: f64,
}

impl AttenuationSweep {
    /// Average over `band` on a 2001-point grid; 1 ns pulses at the band centre.
    pub fn over_band(f_lo: f64, f_hi: f64) -> Result<Self> {
        Ok(AttenuationSweep {
            grid: FrequencyGrid::new(f_lo, f_hi, 2001)?,
            band: (f_lo, f_hi),
            pulse_grid_step: 1e6,
            fwhm: 1e-9,
        })
    }

    pub fn pulse(&self) -> PulseSpec {
        PulseSpec {
            fwhm: self.fwhm,
            ..PulseSpec::nanosecond(0.5 * (self.band.0 + self.band.1))
        }
    }
}

/// Band-averaged `P21 − P12` of one ring.
pub fn frequency_asymmetry(params: &RingParams, settings: &AttenuationSweep) -> Result<f64> {
    let spec = sweep(&build_ab_ring(params)?, &settings.grid)?;
    let d = asymmetry_spectrum(&spec)?;
    band_average(&spec.grid, &d, settings.band.0, settings.band.1)
}

/// `σ_V` of one ring for a pulse at the band centre.
pub fn time_asymmetry(params: &RingParams, settings: &AttenuationSweep) -> Result<f64> {
    let pulse = settings.pulse();
    let (lo, hi) = pulse.band();
    let n = ((hi - lo) / settings.pulse_grid_step).round() as usize + 1;
    let spec = sweep(&build_ab_ring(params)?, &FrequencyGrid::new(lo, hi, n)?)?;
    let vin = gaussian_pulse(&pulse, DEFAULT_SAMPLE_RATE, DEFAULT_DURATION)?;
    let v21 = propagate(&spec, &vin, 0, 1)?;
    let v12 = propagate(&spec, &vin, 1, 0)?;
    sigma_v(&v21, &v12, &vin)
}

pub fn attenuation_sweep(
    params: &RingParams,
    variant: RingVariant,
    gamma_half: &[f64],
    settings: &AttenuationSweep,
    mode: CurveMode,
) -> Result<AsymmetryCurve> {
    if gamma_half.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("attenuation grid must be strictly ascending"));
    }
    let value = gamma_half
        .par_iter()
        .map(|&g| {
            let p = params.with_gamma_half(variant, g);
            match mode {
                CurveMode::Frequency => frequency_asymmetry(&p, settings),
                CurveMode::Time => time_asymmetry(&p, settings),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymmetryCurve {
        gamma_half: gamma_half.to_vec(),
        value,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseMode {
    /// Flat source PSD: `NP_ij = |S_ij|²`.
    Deterministic,
    /// Average of `realizations` independent complex Gaussian source
    /// amplitudes per frequency and direction.
    Stochastic { realizations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub frequencies: Vec<f64>,
    /// Transmitted power per unit source PSD, linear.
    pub np21: Vec<f64>,
    pub np12: Vec<f64>,
    pub block: usize,
    /// Block centres and block means.
    pub block_frequencies: Vec<f64>,
    pub block_np21: Vec<f64>,
    pub block_np12: Vec<f64>,
    /// Mean over the grid of `NP21/NP12`.
    pub mean_ratio: f64,
}

/// Replace each run of `block` consecutive values (the last may be shorter)
/// with its mean.
pub fn block_average(values: &[f64], block: usize) -> Vec<f64> {
    values
        .chunks(block.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

pub fn noise_from_spectrum(spec: &FrequencySpectrum, block: usize, mode: NoiseMode) -> Result<NoiseReport> {
    spec.require_two_port()?;
    if block == 0 {
        return Err(Error::domain("block size must be >= 1"));
    }
    let p21: Vec<f64> = spec.matrices.iter().map(|s| s[(1, 0)].norm_sqr()).collect();
    let p12: Vec<f64> = spec.matrices.iter().map(|s| s[(0, 1)].norm_sqr()).collect();
    let (np21, np12) = match mode {
        NoiseMode::Deterministic => (p21, p12),
        NoiseMode::Stochastic { realizations, seed } => {
            if realizations == 0 {
                return Err(Error::domain("need at least one realization"));
            }
            // the power of a unit complex Gaussian amplitude is Exp(1)
            let draws: Vec<(f64, f64)> = (0..p21.len())
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let mut mean = |p: f64| {
                        let s: f64 = (0..realizations).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum();
                        p * s / realizations as f64
                    };
                    let a = mean(p21[k]);
                    let b = mean(p12[k]);
                    (a, b)
                })
                .collect();
            draws.into_iter().unzip()
        }
    };
    let ratio = np21
        .iter()
        .zip(&np12)
        .map(|(a, b)| a / b)
        .sum::<f64>()
        / np21.len() as f64;
    let frequencies = spec.grid.frequencies();
    Ok(NoiseReport {
        block_frequencies: block_average(&frequencies, block),
        block_np21: block_average(&np21, block),
        block_np12: block_average(&np12, block),
        frequencies,
        np21,
        np12,
        block,
        mean_ratio: ratio,
    })
}

pub fn noise_transmission(
    params: &RingParams,
    grid: &FrequencyGrid,
    block: usize,
    mode: NoiseMode,
) -> Result<NoiseReport> {
    let spec = sweep(&build_ab_ring(params)?, grid)?;
    noise_from_spectrum(&spec, block, mode)
}
