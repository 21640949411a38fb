//! Time-domain propagation of modulated Gaussian pulses by spectral synthesis.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::FrequencySpectrum;

/// Largest tolerated fraction of input energy outside the swept band.
pub const OUT_OF_BAND_LIMIT: f64 = 1e-6;

/// Second-largest to largest envelope peak ratio above which a trace is
/// ambiguous.
pub const AMBIGUITY_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.sample_rate
    }

    pub fn scaled(&self, k: f64) -> TimeSeries {
        TimeSeries {
            samples: self.samples.iter().map(|x| k * x).collect(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub fc: f64,
    /// Full width at half maximum of the amplitude envelope, s.
    pub fwhm: f64,
    pub amplitude: f64,
    pub t_center: f64,
}

impl PulseSpec {
    /// 1 ns envelope centred at 10 ns, unit amplitude.
    pub fn nanosecond(fc: f64) -> Self {
        PulseSpec {
            fc,
            fwhm: 1e-9,
            amplitude: 1.0,
            t_center: 10e-9,
        }
    }

    /// Highest frequency with non-negligible content.
    pub fn max_frequency(&self) -> f64 {
        self.fc + 3.0 / self.fwhm
    }

    /// Frequency band that holds the pulse spectrum, `fc ± 3/fwhm`.
    pub fn band(&self) -> (f64, f64) {
        let w = 3.0 / self.fwhm;
        ((self.fc - w).max(0.5 * self.fc), self.fc + w)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fc > 0.0) || !(self.fwhm > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::domain("pulse needs fc > 0 and fwhm > 0"));
        }
        Ok(())
    }
}

/// Default record: 64 GS/s for 64 ns.
pub const DEFAULT_SAMPLE_RATE: f64 = 64e9;
pub const DEFAULT_DURATION: f64 = 64e-9;

pub fn gaussian_pulse(spec: &PulseSpec, sample_rate: f64, duration: f64) -> Result<TimeSeries> {
    spec.validate()?;
    if !(sample_rate > 2.0 * spec.max_frequency()) {
        return Err(Error::domain(format!(
            "sample rate {sample_rate} Hz is below twice the pulse content limit {} Hz",
            spec.max_frequency()
        )));
    }
    let margin = 5.0 * spec.fwhm;
    if spec.t_center - margin < 0.0 || spec.t_center + margin > duration {
        return Err(Error::domain(format!(
            "record of {duration} s does not cover t_center ± 5·fwhm"
        )));
    }
    let n = (duration * sample_rate).round() as usize;
    let a = 4.0 * LN_2 / (spec.fwhm * spec.fwhm);
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / sample_rate - spec.t_center;
            spec.amplitude * (-a * t * t).exp() * (2.0 * PI * spec.fc * t).cos()
        })
        .collect();
    Ok(TimeSeries {
        sample_rate,
        t0: 0.0,
        samples,
    })
}

fn fft(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
}

/// Linear interpolation of `S[to][from]` in real and imaginary parts; `None`
/// outside the grid.
fn interpolate(spec: &FrequencySpectrum, to: usize, from: usize, f: f64) -> Option<Complex64> {
    let g = &spec.grid;
    if f < g.f_start || f > g.f_stop {
        return None;
    }
    let x = (f - g.f_start) / g.step();
    let k = (x.floor() as usize).min(g.n_points - 2);
    let t = x - k as f64;
    let a = spec.matrices[k][(to, from)];
    let b = spec.matrices[k + 1][(to, from)];
    Some(a + (b - a) * t)
}

/// Output at port `to` for `input` injected at port `from`.
///
/// Amplitudes follow the `e^{-iωt}` convention, so the positive-frequency bins
/// of the forward transform are multiplied by `conj S(f)`.
pub fn propagate(
    spec: &FrequencySpectrum,
    input: &TimeSeries,
    from: usize,
    to: usize,
) -> Result<TimeSeries> {
    let m = spec.ports();
    if from >= m || to >= m {
        return Err(Error::domain(format!(
            "port pair ({to}, {from}) out of range for a {m}-port spectrum"
        )));
    }
    let n = input.len();
    if n < 2 {
        return Err(Error::domain("input trace is empty"));
    }
    let mut buf: Vec<Complex64> = input.samples.iter().map(|&x| x.into()).collect();
    fft(&mut buf, false);

    let df = input.sample_rate / n as f64;
    let half = n / 2;
    let mut total = 0.0;
    let mut outside = 0.0;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=half {
        let w = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
        let e = w * buf[k].norm_sqr();
        total += e;
        match interpolate(spec, to, from, k as f64 * df) {
            Some(s) => out[k] = buf[k] * s.conj(),
            None => outside += e,
        }
    }
    if total > 0.0 && outside / total > OUT_OF_BAND_LIMIT {
        return Err(Error::OutOfBand {
            fraction: outside / total,
        });
    }
    if n % 2 == 0 {
        out[half] = out[half].re.into();
    }
    out[0] = out[0].re.into();
    for k in 1..n.div_ceil(2) {
        out[n - k] = out[k].conj();
    }
    fft(&mut out, true);
    let scale = 1.0 / n as f64;
    Ok(TimeSeries {
        sample_rate: input.sample_rate,
        t0: input.t0,
        samples: out.iter().map(|z| z.re * scale).collect(),
    })
}

/// Magnitude of the analytic signal.
pub fn envelope(ts: &TimeSeries) -> Vec<f64> {
    let n = ts.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = ts.samples.iter().map(|&x| x.into()).collect();
    fft(&mut buf, false);
    for (k, z) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= w;
    }
    fft(&mut buf, true);
    buf.iter().map(|z| z.norm() / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub amplitude: f64,
}

/// Envelope maxima above `min_rel` of the global maximum, tallest first, with
/// three-point parabolic refinement.
pub fn envelope_peaks(ts: &TimeSeries, min_rel: f64) -> Vec<Peak> {
    let env = envelope(ts);
    let max = env.iter().cloned().fold(0.0, f64::max);
    if env.len() < 3 || max == 0.0 {
        return Vec::new();
    }
    let mut peaks: Vec<Peak> = (1..env.len() - 1)
        .filter(|&k| env[k] > env[k - 1] && env[k] >= env[k + 1] && env[k] >= min_rel * max)
        .map(|k| {
            let (y0, y1, y2) = (env[k - 1], env[k], env[k + 1]);
            let den = y0 - 2.0 * y1 + y2;
            let d = if den != 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
            Peak {
                time: ts.time(k) + d / ts.sample_rate,
                amplitude: y1 - 0.25 * (y0 - y2) * d,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    peaks
}

/// Tallest envelope peak with `t_lo <= time <= t_hi`.
pub fn peak_in_window(ts: &TimeSeries, t_lo: f64, t_hi: f64) -> Option<Peak> {
    envelope_peaks(ts, 0.0)
        .into_iter()
        .find(|p| p.time >= t_lo && p.time <= t_hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseMetrics {
    pub arrival: f64,
    pub peak_amp: f64,
    /// Peaks above [`AMBIGUITY_RATIO`] of the largest; more than one means the
    /// arrival is ambiguous.
    pub candidates: Vec<Peak>,
}

impl PulseMetrics {
    pub fn ambiguous(&self) -> bool {
        self.candidates.len() > 1
    }
}

pub fn pulse_metrics(ts: &TimeSeries) -> Result<PulseMetrics> {
    let candidates: Vec<Peak> = envelope_peaks(ts, 0.0)
        .into_iter()
        .filter(|p| p.amplitude > 0.0)
        .collect();
    let top = *candidates
        .first()
        .ok_or_else(|| Error::domain("trace has no envelope peak"))?;
    Ok(PulseMetrics {
        arrival: top.time,
        peak_amp: top.amplitude,
        candidates: candidates
            .into_iter()
            .take_while(|p| p.amplitude > AMBIGUITY_RATIO * top.amplitude)
            .collect(),
    })
}

/// `(|V21|² − |V12|²)/|V_in|²` from peak envelope amplitudes.
pub fn sigma_v(v21: &TimeSeries, v12: &TimeSeries, vin: &TimeSeries) -> Result<f64> {
    let mut amp = [0.0; 3];
    for (slot, (name, ts)) in amp
        .iter_mut()
        .zip([("V21", v21), ("V12", v12), ("Vin", vin)])
    {
        let m = pulse_metrics(ts)?;
        if m.ambiguous() {
            return Err(Error::domain(format!(
                "{name} has {} comparable envelope peaks",
                m.candidates.len()
            )));
        }
        *slot = m.peak_amp;
    }
    Ok((amp[0] * amp[0] - amp[1] * amp[1]) / (amp[2] * amp[2]))
}
