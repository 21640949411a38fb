//! Complex transmission and Wigner–Smith time delays.
//!
//! With `f` in Hz the delay is `τ = −(i/2π)·S′/S`, so a pure delay line of
//! transit time `T` gives `τ = T` in seconds. Derivatives are second-order
//! central differences; the two endpoints use one-sided differences and are
//! marked invalid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{FrequencyGrid, FrequencySpectrum};

/// Magnitude below which `S` (or `det S`) is treated as a zero on the real axis.
pub const ZERO_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    /// `τ` of `S[to][from]`, 0-based ports.
    Transmission { from: usize, to: usize },
    WignerSmith,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDelaySpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
    pub valid: Vec<bool>,
    pub kind: DelayKind,
}

impl ComplexDelaySpectrum {
    /// Arithmetic mean of the valid points with `f_lo <= f <= f_hi`.
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut n = 0usize;
        for k in self.grid.band_indices(f_lo, f_hi) {
            if self.valid[k] {
                sum += self.values[k];
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::domain(format!(
                "no valid delay samples in {f_lo} .. {f_hi} Hz"
            )));
        }
        Ok(sum / n as f64)
    }

    /// Valid points as `(f, τ)` pairs.
    pub fn valid_points(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        (0..self.values.len())
            .filter(|&k| self.valid[k])
            .map(|k| (self.grid.freq(k), self.values[k]))
    }
}

/// `−(i/2π)·(ds/df)/s` along a uniformly sampled series.
fn log_derivative(grid: &FrequencyGrid, s: &[Complex64], scale: f64) -> (Vec<Complex64>, Vec<bool>) {
    let n = s.len();
    let h = grid.step();
    let k0 = Complex64::new(0.0, -scale / (2.0 * PI));
    let mut values = vec![Complex64::new(f64::NAN, f64::NAN); n];
    let mut valid = vec![false; n];
    for k in 0..n {
        if s[k].norm() < ZERO_THRESHOLD {
            continue;
        }
        let ds = if k == 0 {
            (s[1] - s[0]) / h
        } else if k + 1 == n {
            (s[k] - s[k - 1]) / h
        } else {
            (s[k + 1] - s[k - 1]) / (2.0 * h)
        };
        values[k] = k0 * ds / s[k];
        valid[k] = k > 0 && k + 1 < n;
    }
    (values, valid)
}

pub fn transmission_delay(
    spec: &FrequencySpectrum,
    from: usize,
    to: usize,
) -> Result<ComplexDelaySpectrum> {
    let s = spec.element(to, from)?;
    let (values, valid) = log_derivative(&spec.grid, &s, 1.0);
    Ok(ComplexDelaySpectrum {
        grid: spec.grid,
        values,
        valid,
        kind: DelayKind::Transmission { from, to },
    })
}

pub fn wigner_smith_delay(spec: &FrequencySpectrum) -> Result<ComplexDelaySpectrum> {
    let m = spec.ports();
    if m == 0 {
        return Err(Error::domain("empty spectrum"));
    }
    let det: Vec<Complex64> = spec.matrices.iter().map(|s| s.determinant()).collect();
    let (values, valid) = log_derivative(&spec.grid, &det, 1.0 / m as f64);
    Ok(ComplexDelaySpectrum {
        grid: spec.grid,
        values,
        valid,
        kind: DelayKind::WignerSmith,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{CoaxSpec, ElementKind, LineSpec};
    use crate::netlist::{build_ab_ring, GyratorMode, Netlist, RingParams};
    use crate::sweep::sweep;

    fn line_net(electrical: f64) -> Netlist {
        let mut n = Netlist::new();
        n.add(
            "l",
            ElementKind::Line(LineSpec::with_electrical_length(CoaxSpec::lossless(), electrical, true)),
        );
        n.external("l", 0).external("l", 1);
        n
    }

    #[test]
    fn line_delay_is_transit_time() {
        let grid = FrequencyGrid::new(8e9, 9e9, 1001).unwrap();
        let spec = sweep(&line_net(0.3), &grid).unwrap();
        let t = 0.3 / crate::elements::C0;
        let tau = transmission_delay(&spec, 0, 1).unwrap();
        assert!(!tau.valid[0] && !tau.valid[1000]);
        for (_, v) in tau.valid_points() {
            assert!((v.re - t).abs() / t < 1e-4, "{v}");
            assert!(v.im.abs() < 1e-15);
        }
        let ws = wigner_smith_delay(&spec).unwrap();
        for (_, v) in ws.valid_points() {
            assert!((v.re - t).abs() / t < 1e-4);
            assert!(v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_ring_delays_match() {
        let p = RingParams::balanced(0.6, 0.2)
            .with_uniform_loss(true)
            .with_gyrator(GyratorMode::Ideal, 0.0);
        let grid = FrequencyGrid::new(8e9, 9e9, 2001).unwrap();
        let spec = sweep(&build_ab_ring(&p).unwrap(), &grid).unwrap();
        let a = transmission_delay(&spec, 0, 1).unwrap();
        let b = transmission_delay(&spec, 1, 0).unwrap();
        for k in 1..2000 {
            assert!((a.values[k] - b.values[k]).norm() < 1e-9 * a.values[k].norm().max(1e-9));
        }
    }

    #[test]
    fn refinement_converges() {
        let p = RingParams::balanced(0.6, 0.2);
        let ring = build_ab_ring(&p).unwrap();
        let coarse = sweep(&ring, &FrequencyGrid::new(8e9, 9e9, 2001).unwrap()).unwrap();
        let fine = sweep(&ring, &FrequencyGrid::new(8e9, 9e9, 4001).unwrap()).unwrap();
        let a = transmission_delay(&coarse, 0, 1).unwrap();
        let b = transmission_delay(&fine, 0, 1).unwrap();
        for k in 10..1990 {
            let rel = (a.values[k] - b.values[2 * k]).norm() / b.values[2 * k].norm();
            assert!(rel < 1e-3, "k={k} rel={rel}");
        }
    }

    #[test]
    fn quotient_matches_unwrapped_phase() {
        let ring = build_ab_ring(&RingParams::balanced(0.6, 0.1)).unwrap();
        let grid = FrequencyGrid::new(8.1e9, 8.2e9, 401).unwrap();
        let spec = sweep(&ring, &grid).unwrap();
        let s = spec.element(1, 0).unwrap();
        let tau = transmission_delay(&spec, 0, 1).unwrap();
        let mut phase: Vec<f64> = s.iter().map(|z| z.arg()).collect();
        for k in 1..phase.len() {
            let d = phase[k] - phase[k - 1];
            phase[k] -= (d / (2.0 * PI)).round() * 2.0 * PI;
        }
        let h = grid.step();
        for k in 1..400 {
            let group = (phase[k + 1] - phase[k - 1]) / (2.0 * h) / (2.0 * PI);
            let lnmag = (s[k + 1].norm().ln() - s[k - 1].norm().ln()) / (2.0 * h) / (2.0 * PI);
            let direct = Complex64::new(group, -lnmag);
            let rel = (direct - tau.values[k]).norm() / tau.values[k].norm();
            assert!(rel < 1e-5, "k={k} rel={rel}");
        }
    }

    #[test]
    fn band_mean_skips_invalid() {
        let grid = FrequencyGrid::new(1e9, 2e9, 5).unwrap();
        let d = ComplexDelaySpectrum {
            grid,
            values: vec![Complex64::new(100.0, 0.0), 1.0.into(), 2.0.into(), 3.0.into(), Complex64::new(100.0, 0.0)],
            valid: vec![false, true, true, true, false],
            kind: DelayKind::WignerSmith,
        };
        assert_eq!(d.band_mean(1e9, 2e9).unwrap(), Complex64::new(2.0, 0.0));
        assert!(d.band_mean(1.9e9, 2e9).is_err());
    }
}
