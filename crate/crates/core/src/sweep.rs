//! Frequency sweeps of a netlist.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elements::CMatrix;
use crate::error::{Error, Result};
use crate::netlist::Netlist;

/// Uniform frequency grid, inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_start: f64, f_stop: f64, n_points: usize) -> Result<Self> {
        let g = FrequencyGrid {
            f_start,
            f_stop,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    /// 7–12.4 GHz at 32001 points.
    pub fn desk_default() -> Self {
        FrequencyGrid {
            f_start: 7e9,
            f_stop: 12.4e9,
            n_points: 32001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start > 0.0) || !(self.f_stop > self.f_start) || !self.f_stop.is_finite() {
            return Err(Error::domain(format!(
                "grid needs 0 < f_start < f_stop, got {} .. {}",
                self.f_start, self.f_stop
            )));
        }
        if self.n_points < 2 {
            return Err(Error::domain("grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.f_stop - self.f_start) / (self.n_points - 1) as f64
    }

    pub fn freq(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.f_stop
        } else {
            self.f_start + k as f64 * self.step()
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.freq(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Indices of grid points with `f_lo <= f <= f_hi`.
    pub fn band_indices(&self, f_lo: f64, f_hi: f64) -> std::ops::Range<usize> {
        let h = self.step();
        let tol = 1e-9 * h;
        let lo = ((f_lo - self.f_start - tol) / h).ceil().max(0.0) as usize;
        let hi = ((f_hi - self.f_start + tol) / h).floor();
        if hi < 0.0 {
            return 0..0;
        }
        let hi = (hi as usize + 1).min(self.n_points);
        lo.min(hi)..hi
    }
}

/// S-matrices on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpectrum {
    pub grid: FrequencyGrid,
    pub matrices: Vec<CMatrix>,
}

impl FrequencySpectrum {
    pub fn new(grid: FrequencyGrid, matrices: Vec<CMatrix>) -> Result<Self> {
        grid.validate()?;
        if matrices.len() != grid.n_points {
            return Err(Error::domain(format!(
                "{} matrices for a grid of {} points",
                matrices.len(),
                grid.n_points
            )));
        }
        let m = matrices[0].nrows();
        if matrices.iter().any(|s| s.nrows() != m || s.ncols() != m) {
            return Err(Error::domain("spectrum matrices differ in shape"));
        }
        Ok(FrequencySpectrum { grid, matrices })
    }

    pub fn ports(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    /// `S[to][from]` at every grid point.
    pub fn element(&self, to: usize, from: usize) -> Result<Vec<Complex64>> {
        let m = self.ports();
        if to >= m || from >= m {
            return Err(Error::domain(format!(
                "port pair ({to}, {from}) out of range for a {m}-port spectrum"
            )));
        }
        Ok(self.matrices.iter().map(|s| s[(to, from)]).collect())
    }

    pub(crate) fn require_two_port(&self) -> Result<()> {
        if self.ports() != 2 {
            return Err(Error::domain(format!(
                "operation needs a 2-port spectrum, got {} ports",
                self.ports()
            )));
        }
        Ok(())
    }
}

/// Evaluate `netlist` at every grid point. Points are computed in parallel on
/// the current rayon pool; the result is in grid order.
pub fn sweep(netlist: &Netlist, grid: &FrequencyGrid) -> Result<FrequencySpectrum> {
    grid.validate()?;
    let prepared = netlist.prepare()?;
    let matrices = (0..grid.n_points)
        .into_par_iter()
        .map(|k| prepared.assemble(grid.freq(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencySpectrum {
        grid: *grid,
        matrices,
    })
}

/// Like [`sweep`], but a point that hits a trapped-mode singularity is
/// re-evaluated half a grid step higher.
pub fn sweep_nudged(netlist: &Netlist, grid: &FrequencyGrid) -> Result<FrequencySpectrum> {
    grid.validate()?;
    let prepared = netlist.prepare()?;
    let half = 0.5 * grid.step();
    let matrices = (0..grid.n_points)
        .into_par_iter()
        .map(|k| {
            let f = grid.freq(k);
            match prepared.assemble(f) {
                Err(Error::Resonance { .. }) => prepared.assemble(f + half),
                r => r,
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencySpectrum {
        grid: *grid,
        matrices,
    })
}
