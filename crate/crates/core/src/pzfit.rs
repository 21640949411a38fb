//! Pole/zero description of the Wigner–Smith delay and its least-squares fit.
//!
//! For a mode with pole `f_n − iΓ_n` and zero `z_n`, and uniform attenuation
//! `η` (Hz) shifting every singularity down by `iη`,
//!
//! ```text
//! Re τ_W = 1/(2πM) Σ [ (Im z_n − η)/((f − Re z_n)² + (Im z_n − η)²)
//!                    + (Γ_n + η)/((f − f_n)² + (Γ_n + η)²) ]
//! Im τ_W = −1/(2πM) Σ [ (f − Re z_n)/((f − Re z_n)² + (Im z_n − η)²)
//!                     − (f − f_n)/((f − f_n)² + (Γ_n + η)²) ]
//! ```
//!
//! The `1/2π` matches the delay convention of [`crate::delays`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delays::{wigner_smith_delay, ComplexDelaySpectrum};
use crate::error::{Error, Result};
use crate::netlist::{build_ab_ring, RingParams, RingVariant};
use crate::sweep::{sweep, FrequencyGrid};

/// Internal working unit: parameters in GHz, delays in ns.
const SCALE: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub f_n: f64,
    pub gamma_n: f64,
    pub z_re: f64,
    pub z_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleZeroSet {
    pub modes: Vec<Mode>,
    /// Uniform attenuation as a frequency offset, Hz.
    pub eta: f64,
    pub m_ports: usize,
}

/// Convert an amplitude decay rate (1/s) into the equivalent imaginary
/// frequency offset (Hz).
pub fn eta_hz_from_rate(rate: f64) -> f64 {
    rate / (2.0 * PI)
}

impl PoleZeroSet {
    pub fn new(mut modes: Vec<Mode>, eta: f64, m_ports: usize) -> Self {
        modes.sort_by(|a, b| a.f_n.total_cmp(&b.f_n));
        PoleZeroSet {
            modes,
            eta,
            m_ports,
        }
    }

    pub fn tau(&self, f: f64) -> Result<Complex64> {
        model_tau(self, f)
    }
}

pub fn model_tau(pzs: &PoleZeroSet, f: f64) -> Result<Complex64> {
    if pzs.m_ports == 0 {
        return Err(Error::domain("port count must be >= 1"));
    }
    let c = 1.0 / (2.0 * PI * pzs.m_ports as f64);
    let mut re = 0.0;
    let mut im = 0.0;
    for m in &pzs.modes {
        let a = m.z_im - pzs.eta;
        let u = f - m.z_re;
        let d = u * u + a * a;
        let b = m.gamma_n + pzs.eta;
        let v = f - m.f_n;
        let e = v * v + b * b;
        if d == 0.0 || e == 0.0 {
            return Err(Error::domain(format!(
                "pole or zero lies on the real axis at f = {f} Hz"
            )));
        }
        re += a / d + b / e;
        im += -u / d + v / e;
    }
    Ok(Complex64::new(c * re, c * im))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fit only points with `lo <= f <= hi`; whole grid when `None`.
    pub band: Option<(f64, f64)>,
    /// Uniform attenuation offset in Hz; the starting value when `free_eta`.
    pub eta: f64,
    pub free_eta: bool,
    /// Tie every zero to the conjugate of its pole (`z_n = f_n + iΓ_n`), the
    /// structure of a network whose only loss is uniform. Freeing `η` needs
    /// this; otherwise `η` trades off against the per-mode widths.
    pub conjugate_zeros: bool,
    pub m_ports: usize,
    pub max_iterations: usize,
    /// Relative cost change that ends the iteration.
    pub tolerance: f64,
    /// Minimum spacing of auto-initialised poles, Hz. Defaults to half the
    /// band width per mode.
    pub min_peak_separation: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            band: None,
            eta: 0.0,
            free_eta: false,
            conjugate_zeros: false,
            m_ports: 2,
            max_iterations: 200,
            tolerance: 1e-10,
            min_peak_separation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// No damping level produced a lower cost.
    Stalled,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub set: PoleZeroSet,
    /// Root-sum-square of the stacked residuals, in seconds.
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Per mode: the zero sits within two grid steps of the real axis, so the
    /// pole is poorly determined.
    pub low_confidence: Vec<bool>,
}

impl FitOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn poles_low_confidence(&self) -> bool {
        self.low_confidence.iter().any(|&b| b)
    }
}

fn param_names(n_modes: usize, tied: bool, free_eta: bool) -> Vec<String> {
    let per: &[&str] = if tied {
        &["f_n", "gamma_n"]
    } else {
        &["f_n", "gamma_n", "z_re", "z_im"]
    };
    let mut v = Vec::with_capacity(per.len() * n_modes + 1);
    for k in 0..n_modes {
        for p in per {
            v.push(format!("{p}[{k}]"));
        }
    }
    if free_eta {
        v.push("eta".into());
    }
    v
}

struct Problem<'a> {
    f: &'a [f64],
    data: &'a [Complex64],
    n_modes: usize,
    /// Zeros are the conjugates of the poles.
    tied: bool,
    eta_fixed: Option<f64>,
    c: f64,
}

impl Problem<'_> {
    fn per_mode(&self) -> usize {
        if self.tied {
            2
        } else {
            4
        }
    }

    fn n_params(&self) -> usize {
        self.per_mode() * self.n_modes + usize::from(self.eta_fixed.is_none())
    }

    fn eta(&self, p: &[f64]) -> f64 {
        self.eta_fixed
            .unwrap_or_else(|| p[self.per_mode() * self.n_modes])
    }

    /// `(f_n, Γ_n, Re z_n, Im z_n)` and the parameter indices they come from.
    fn mode(&self, p: &[f64], k: usize) -> ([f64; 4], [usize; 4]) {
        if self.tied {
            let (i, j) = (2 * k, 2 * k + 1);
            ([p[i], p[j], p[i], p[j]], [i, j, i, j])
        } else {
            let i = 4 * k;
            ([p[i], p[i + 1], p[i + 2], p[i + 3]], [i, i + 1, i + 2, i + 3])
        }
    }

    fn to_params(&self, set: &PoleZeroSet) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for m in &set.modes {
            if self.tied {
                p.extend([m.f_n, m.gamma_n].map(|x| x / SCALE));
            } else {
                p.extend([m.f_n, m.gamma_n, m.z_re, m.z_im].map(|x| x / SCALE));
            }
        }
        if self.eta_fixed.is_none() {
            p.push(set.eta / SCALE);
        }
        p
    }

    /// Poles and zeros stay within one band width of the data and pole
    /// widths stay positive.
    fn feasible(&self, p: &[f64]) -> bool {
        let (lo, hi) = (self.f[0], self.f[self.f.len() - 1]);
        let span = hi - lo;
        let eta = self.eta(p);
        (0..self.n_modes).all(|k| {
            let ([f_n, g, zr, zi], _) = self.mode(p, k);
            let inside = |x: f64| x > lo - span && x < hi + span;
            inside(f_n) && inside(zr) && g + eta > 0.0 && (zi - eta).abs() < span
        })
    }

    /// Stacked residuals `[Re; Im]` and optionally the Jacobian.
    fn eval(&self, p: &[f64], want_jac: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let n = self.f.len();
        let eta = self.eta(p);
        let eta_col = self.per_mode() * self.n_modes;
        let c = self.c;
        let mut r = DVector::zeros(2 * n);
        let mut jac = want_jac.then(|| DMatrix::zeros(2 * n, self.n_params()));
        for (i, &f) in self.f.iter().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..self.n_modes {
                let ([f_n, g, zr, zi], [i_fn, i_g, i_zr, i_zi]) = self.mode(p, k);
                let a = zi - eta;
                let u = f - zr;
                let d = u * u + a * a;
                let b = g + eta;
                let v = f - f_n;
                let e = v * v + b * b;
                re += a / d + b / e;
                im += -u / d + v / e;
                if let Some(j) = jac.as_mut() {
                    let (d2, e2) = (d * d, e * e);
                    // zero term
                    let re_zr = 2.0 * a * u / d2;
                    let re_zi = (u * u - a * a) / d2;
                    let im_zr = (a * a - u * u) / d2;
                    let im_zi = 2.0 * u * a / d2;
                    // pole term
                    let re_fn = 2.0 * b * v / e2;
                    let re_g = (v * v - b * b) / e2;
                    let im_fn = (v * v - b * b) / e2;
                    let im_g = -2.0 * v * b / e2;
                    j[(i, i_fn)] += c * re_fn;
                    j[(i, i_g)] += c * re_g;
                    j[(i, i_zr)] += c * re_zr;
                    j[(i, i_zi)] += c * re_zi;
                    j[(n + i, i_fn)] += c * im_fn;
                    j[(n + i, i_g)] += c * im_g;
                    j[(n + i, i_zr)] += c * im_zr;
                    j[(n + i, i_zi)] += c * im_zi;
                    if self.eta_fixed.is_none() {
                        j[(i, eta_col)] += c * (re_g - re_zi);
                        j[(n + i, eta_col)] += c * (im_g - im_zi);
                    }
                }
            }
            r[i] = c * re - self.data[i].re;
            r[n + i] = c * im - self.data[i].im;
        }
        (r, jac)
    }
}

/// Rank check on the column-normalised Jacobian. Reports the parameters that
/// make up the near-null direction.
fn check_degenerate(jac: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let norms: Vec<f64> = jac.column_iter().map(|c| c.norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let dead: Vec<String> = norms
        .iter()
        .enumerate()
        .filter(|(_, &nk)| !(nk > 1e-12 * max))
        .map(|(k, _)| names[k].clone())
        .collect();
    if !dead.is_empty() {
        return Err(Error::DegenerateJacobian(dead));
    }
    let mut normed = jac.clone();
    for (k, mut col) in normed.column_iter_mut().enumerate() {
        col /= norms[k];
    }
    // the Gram matrix is small; its eigenvectors are the right singular vectors
    let gram = normed.transpose() * &normed;
    let eig = gram.symmetric_eigen();
    let (kmin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one parameter");
    let lmax = eig.eigenvalues.max();
    if lmin.max(0.0) <= 1e-14 * lmax {
        let v = eig.eigenvectors.column(kmin);
        let involved = v
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > 0.1)
            .map(|(k, _)| names[k].clone())
            .collect();
        return Err(Error::DegenerateJacobian(involved));
    }
    Ok(())
}

/// Poles at the tallest local maxima of `Re τ`, zeros at their conjugates.
pub fn auto_init(
    f: &[f64],
    tau: &[Complex64],
    n_modes: usize,
    min_separation: f64,
    eta: f64,
    m_ports: usize,
) -> Result<PoleZeroSet> {
    let re: Vec<f64> = tau.iter().map(|z| z.re).collect();
    let mut peaks: Vec<usize> = (1..re.len().saturating_sub(1))
        .filter(|&k| re[k] > re[k - 1] && re[k] >= re[k + 1] && re[k] > 0.0)
        .collect();
    peaks.sort_by(|&a, &b| re[b].total_cmp(&re[a]));
    let mut chosen: Vec<usize> = Vec::with_capacity(n_modes);
    for k in peaks {
        if chosen.iter().all(|&c| (f[c] - f[k]).abs() >= min_separation) {
            chosen.push(k);
            if chosen.len() == n_modes {
                break;
            }
        }
    }
    if chosen.len() < n_modes {
        return Err(Error::domain(format!(
            "found {} separated delay peaks, need {n_modes}",
            chosen.len()
        )));
    }
    chosen.sort_unstable();
    let step = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
    let modes = chosen
        .into_iter()
        .map(|k| {
            let half = 0.5 * re[k];
            let mut lo = k;
            while lo > 0 && re[lo] > half {
                lo -= 1;
            }
            let mut hi = k;
            while hi + 1 < re.len() && re[hi] > half {
                hi += 1;
            }
            let width = (0.5 * (f[hi] - f[lo])).clamp(2.0 * step, min_separation.max(2.0 * step));
            let g = (width - eta).max(step);
            Mode {
                f_n: f[k],
                gamma_n: g,
                z_re: f[k],
                z_im: g + eta,
            }
        })
        .collect();
    Ok(PoleZeroSet::new(modes, eta, m_ports))
}

/// Zero heights and mode centres chosen mode by mode to minimise the
/// starting cost, so that zeros on both sides of the real axis can be present
/// at once. A zero just below the axis turns a peak of `Re τ` into a dip whose
/// flank is what the peak search finds, hence the centre shifts.
fn mixed_start(prob: &Problem, above: &PoleZeroSet, eta: f64) -> PoleZeroSet {
    const HEIGHTS: [f64; 6] = [1.0, 0.5, 2.0, -0.25, -0.5, -2.0];
    const SHIFTS: [f64; 7] = [0.0, -0.5, 0.5, -1.0, 1.0, -1.5, 1.5];
    let cost = |set: &PoleZeroSet| {
        let p = prob.to_params(&PoleZeroSet { eta, ..set.clone() });
        prob.eval(&p, false).0.norm_squared()
    };
    let mut set = above.clone();
    let mut best = cost(&set);
    for _ in 0..2 {
        for k in 0..set.modes.len() {
            let m = set.modes[k];
            let g = m.gamma_n + eta;
            for h in HEIGHTS {
                for sh in SHIFTS {
                    let mut trial = set.clone();
                    trial.modes[k].z_im = eta + h * g;
                    trial.modes[k].f_n = m.f_n + sh * g;
                    trial.modes[k].z_re = m.z_re + sh * g;
                    let c = cost(&trial);
                    if c < best {
                        best = c;
                        set = trial;
                    }
                }
            }
        }
    }
    set
}

/// Levenberg–Marquardt fit of [`model_tau`] to the valid points of `delay`.
///
/// Non-convergence is not an error: the best parameters found are returned
/// with [`Termination::IterationCap`] or [`Termination::Stalled`].
pub fn fit(
    delay: &ComplexDelaySpectrum,
    n_modes: usize,
    init: Option<&PoleZeroSet>,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    if n_modes == 0 {
        return Err(Error::domain("n_modes must be >= 1"));
    }
    let (lo, hi) = opts
        .band
        .unwrap_or((delay.grid.f_start, delay.grid.f_stop));
    let mut f = Vec::new();
    let mut data = Vec::new();
    for k in delay.grid.band_indices(lo, hi) {
        if delay.valid[k] && delay.values[k].re.is_finite() && delay.values[k].im.is_finite() {
            f.push(delay.grid.freq(k) / SCALE);
            data.push(delay.values[k] * SCALE);
        }
    }
    if f.len() < 4 * n_modes + 2 {
        return Err(Error::domain(format!(
            "{} valid samples are too few for {n_modes} mode(s)",
            f.len()
        )));
    }

    let prob = Problem {
        f: &f,
        data: &data,
        n_modes,
        tied: opts.conjugate_zeros,
        eta_fixed: (!opts.free_eta).then_some(opts.eta / SCALE),
        c: 1.0 / (2.0 * PI * opts.m_ports.max(1) as f64),
    };
    let names = param_names(n_modes, opts.conjugate_zeros, opts.free_eta);

    let starts = match init {
        Some(s) => {
            if s.modes.len() != n_modes {
                return Err(Error::domain(format!(
                    "initial set has {} modes, expected {n_modes}",
                    s.modes.len()
                )));
            }
            vec![s.clone()]
        }
        None => {
            let sep = opts
                .min_peak_separation
                .unwrap_or(0.5 * (hi - lo) / n_modes as f64);
            let fh: Vec<f64> = f.iter().map(|x| x * SCALE).collect();
            let th: Vec<Complex64> = data.iter().map(|x| x / SCALE).collect();
            let above = auto_init(&fh, &th, n_modes, sep, opts.eta, opts.m_ports)?;
            if opts.conjugate_zeros {
                vec![above]
            } else {
                // zeros may already have crossed below the real axis
                let mut below = above.clone();
                for m in &mut below.modes {
                    m.z_im = opts.eta - 0.25 * m.gamma_n;
                }
                let mixed = mixed_start(&prob, &above, opts.eta);
                let mut starts = vec![above, below];
                if !starts.contains(&mixed) {
                    starts.push(mixed);
                }
                starts
            }
        }
    };

    let mut best: Option<LmRun> = None;
    for start in starts {
        let p0 = prob.to_params(&PoleZeroSet {
            eta: opts.eta,
            ..start
        });
        let (_, jac) = prob.eval(&p0, true);
        check_degenerate(&jac.expect("jacobian requested"), &names)?;
        let run = levenberg_marquardt(&prob, p0, opts);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");

    let p = &run.params;
    let eta = prob.eta(p) * SCALE;
    let modes: Vec<Mode> = (0..n_modes)
        .map(|k| {
            let ([f_n, gamma_n, z_re, z_im], _) = prob.mode(p, k);
            Mode {
                f_n: f_n * SCALE,
                gamma_n: gamma_n * SCALE,
                z_re: z_re * SCALE,
                z_im: z_im * SCALE,
            }
        })
        .collect();
    let set = PoleZeroSet::new(modes, eta, opts.m_ports);
    let step = delay.grid.step();
    let low_confidence = set
        .modes
        .iter()
        .map(|m| (m.z_im - eta).abs() < 2.0 * step)
        .collect();
    Ok(FitOutcome {
        set,
        residual_norm: run.cost.sqrt() / SCALE,
        iterations: run.iterations,
        termination: run.termination,
        cost_history: run.history,
        low_confidence,
    })
}

struct LmRun {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    termination: Termination,
    history: Vec<f64>,
}

/// Damped Gauss–Newton: solve `(JᵀJ + λ·diag JᵀJ) δ = −Jᵀr`, dividing `λ` by
/// ten after an accepted step and multiplying by ten after a rejected one.
fn levenberg_marquardt(prob: &Problem<'_>, mut p: Vec<f64>, opts: &FitOptions) -> LmRun {
    let (mut r, jac) = prob.eval(&p, true);
    let mut jac = jac.expect("jacobian requested");
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut termination = Termination::IterationCap;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            // a step below rounding level that cannot lower the cost means
            // the minimum is already reached
            let tiny = step.norm() <= 1e-12 * DVector::from_column_slice(&p).norm();
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let (r_new, _) = prob.eval(&trial, false);
            let c_new = r_new.norm_squared();
            if c_new.is_finite() && c_new < cost && prob.feasible(&trial) {
                let rel = (cost - c_new) / cost;
                p = trial;
                r = r_new;
                cost = c_new;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < opts.tolerance || cost == 0.0 {
                    termination = Termination::Converged;
                }
                break;
            }
            if tiny {
                termination = Termination::Converged;
                break;
            }
            lambda *= 10.0;
        }
        if termination == Termination::Converged {
            break;
        }
        if !accepted {
            termination = Termination::Stalled;
            break;
        }
        jac = prob.eval(&p, true).1.expect("jacobian requested");
    }
    LmRun {
        params: p,
        cost,
        iterations,
        termination,
        history,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma_half: f64,
    pub outcome: FitOutcome,
    /// Mean over modes of `Im z_n − η`, Hz.
    pub mean_im_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Per-bond attenuation where the mean zero crosses the real axis; `None`
    /// when the trajectory is monotone without a sign change.
    pub crossing: Option<f64>,
    /// Largest relative change of any `Re z_n`, or of any `f_n` in rows whose
    /// poles are trusted, from the first row.
    pub re_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub grid: FrequencyGrid,
    pub band: (f64, f64),
    pub n_modes: usize,
}

/// Fit the Wigner–Smith delay of the ring at every `gamma_half` and locate
/// the sign change of the mean zero height.
pub fn zero_crossing_scan(
    params: &RingParams,
    variant: RingVariant,
    gamma_grid: &[f64],
    settings: &ScanSettings,
) -> Result<ScanReport> {
    if gamma_grid.is_empty() {
        return Err(Error::domain("empty attenuation grid"));
    }
    if gamma_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("attenuation grid must be strictly ascending"));
    }
    let opts = FitOptions {
        band: Some(settings.band),
        eta: 0.0,
        m_ports: 2,
        ..FitOptions::default()
    };
    let mean_im_z = |o: &FitOutcome| {
        o.set.modes.iter().map(|m| m.z_im - o.set.eta).sum::<f64>() / o.set.modes.len() as f64
    };
    let fitted = gamma_grid
        .par_iter()
        .map(|&g| {
            let p = params.with_gamma_half(variant, g);
            let spec = sweep(&build_ab_ring(&p)?, &settings.grid)?;
            let tau = wigner_smith_delay(&spec)?;
            let outcome = fit(&tau, settings.n_modes, None, &opts)?;
            Ok((tau, outcome))
        })
        .collect::<Result<Vec<_>>>()?;

    // trajectories are continuous in Γ: a fit seeded from the previous row
    // escapes local minima that the peak-based start falls into
    let mut outcomes: Vec<FitOutcome> = Vec::with_capacity(fitted.len());
    for (tau, outcome) in fitted.iter() {
        let mut best = outcome.clone();
        if let Some(prev) = outcomes.last() {
            if let Ok(seeded) = fit(tau, settings.n_modes, Some(&prev.set), &opts) {
                if seeded.residual_norm < best.residual_norm {
                    best = seeded;
                }
            }
        }
        outcomes.push(best);
    }
    let rows: Vec<ScanRow> = gamma_grid
        .iter()
        .zip(outcomes)
        .map(|(&g, outcome)| ScanRow {
            gamma_half: g,
            mean_im_z: mean_im_z(&outcome),
            outcome,
        })
        .collect();

    let crossing = rows.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.mean_im_z == 0.0 {
            Some(a.gamma_half)
        } else if a.mean_im_z.signum() != b.mean_im_z.signum() {
            let t = a.mean_im_z / (a.mean_im_z - b.mean_im_z);
            Some(a.gamma_half + t * (b.gamma_half - a.gamma_half))
        } else {
            None
        }
    });

    // zeros may swap partners between rows, so compare sorted positions
    let sorted = |row: &ScanRow, pick: fn(&Mode) -> f64| {
        let mut v: Vec<f64> = row.outcome.set.modes.iter().map(pick).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let drift = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) / y).abs())
            .fold(0.0, f64::max)
    };
    let z0 = sorted(&rows[0], |m| m.z_re);
    let p0 = sorted(&rows[0], |m| m.f_n);
    let mut re_drift: f64 = 0.0;
    for row in &rows {
        re_drift = re_drift.max(drift(&sorted(row, |m| m.z_re), &z0));
        if !row.outcome.poles_low_confidence() {
            re_drift = re_drift.max(drift(&sorted(row, |m| m.f_n), &p0));
        }
    }
    Ok(ScanReport {
        rows,
        crossing,
        re_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synth(set: &PoleZeroSet, grid: FrequencyGrid) -> ComplexDelaySpectrum {
        let values: Vec<Complex64> = grid
            .frequencies()
            .iter()
            .map(|&f| model_tau(set, f).unwrap())
            .collect();
        let n = values.len();
        ComplexDelaySpectrum {
            grid,
            values,
            valid: vec![true; n],
            kind: crate::delays::DelayKind::WignerSmith,
        }
    }

    fn five_modes() -> PoleZeroSet {
        let modes = (0..5)
            .map(|k| {
                let fk = 8.0e9 + 0.25e9 * k as f64;
                Mode {
                    f_n: fk,
                    gamma_n: 20e6 + 3e6 * k as f64,
                    z_re: fk + 1.5e6 * k as f64 - 2e6,
                    z_im: 12e6 - 1.7e6 * k as f64,
                }
            })
            .collect();
        PoleZeroSet::new(modes, 0.0, 2)
    }

    #[test]
    fn tails_vanish_and_conjugate_pair() {
        let one = PoleZeroSet::new(
            vec![Mode {
                f_n: 8e9,
                gamma_n: 1e7,
                z_re: 8e9,
                z_im: 1e7,
            }],
            0.0,
            2,
        );
        let far = model_tau(&one, 1e12).unwrap();
        assert!(far.norm() < 1e-13);
        let at = model_tau(&one, 8e9).unwrap();
        let pole_only = 1.0 / (2.0 * PI * 2.0) / 1e7;
        assert!((at.re - 2.0 * pole_only).abs() < 1e-9 * pole_only);
        assert_eq!(at.im, 0.0);
    }

    #[test]
    fn zero_on_axis_is_domain_error() {
        let s = PoleZeroSet::new(
            vec![Mode {
                f_n: 8e9,
                gamma_n: 1e7,
                z_re: 8.1e9,
                z_im: 5e6,
            }],
            5e6,
            2,
        );
        assert!(model_tau(&s, 8.1e9).is_err());
        assert!(model_tau(&s, 8.1e9 + 1.0).is_ok());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let set = five_modes();
        let grid = FrequencyGrid::new(7.9e9, 9.1e9, 301).unwrap();
        let f: Vec<f64> = grid.frequencies().iter().map(|x| x / SCALE).collect();
        let data = vec![Complex64::new(0.0, 0.0); f.len()];
        let mut p: Vec<f64> = set
            .modes
            .iter()
            .flat_map(|m| [m.f_n, m.gamma_n, m.z_re, m.z_im].map(|x| x / SCALE))
            .collect();
        p.push(0.004);
        let prob = Problem {
            f: &f,
            data: &data,
            n_modes: 5,
            tied: false,
            eta_fixed: None,
            c: 1.0 / (4.0 * PI),
        };
        let (_, jac) = prob.eval(&p, true);
        let jac = jac.unwrap();
        for k in 0..p.len() {
            let h = 1e-7;
            let mut pp = p.clone();
            pp[k] += h;
            let mut pm = p.clone();
            pm[k] -= h;
            let fd = (prob.eval(&pp, false).0 - prob.eval(&pm, false).0) / (2.0 * h);
            let scale = fd.amax().max(1.0);
            assert!((fd - jac.column(k)).amax() < 1e-5 * scale, "param {k}");
        }
    }

    #[test]
    fn round_trip_five_modes() {
        let truth = five_modes();
        let grid = FrequencyGrid::new(7.85e9, 9.15e9, 4001).unwrap();
        let out = fit(&synth(&truth, grid), 5, None, &FitOptions::default()).unwrap();
        assert!(out.converged(), "{:?}", out.termination);
        for (a, b) in out.set.modes.iter().zip(&truth.modes) {
            for (x, y) in [(a.f_n, b.f_n), (a.gamma_n, b.gamma_n), (a.z_re, b.z_re), (a.z_im, b.z_im)] {
                assert!(((x - y) / y).abs() < 1e-3, "{x} vs {y}");
            }
        }
        assert!(out.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn fixed_eta_recovers_lossless_set() {
        let lossless = five_modes();
        let mut lossy = lossless.clone();
        lossy.eta = 4e6;
        let grid = FrequencyGrid::new(7.85e9, 9.15e9, 4001).unwrap();
        let opts = FitOptions {
            eta: 4e6,
            ..FitOptions::default()
        };
        let out = fit(&synth(&lossy, grid), 5, None, &opts).unwrap();
        for (a, b) in out.set.modes.iter().zip(&lossless.modes) {
            assert!(((a.f_n - b.f_n) / b.f_n).abs() < 1e-6);
            assert!(((a.gamma_n - b.gamma_n) / b.gamma_n).abs() < 1e-3);
            assert!(((a.z_im - b.z_im) / b.z_im).abs() < 1e-3);
        }
    }

    #[test]
    fn free_eta_with_untied_zeros_is_degenerate() {
        let grid = FrequencyGrid::new(7.85e9, 9.15e9, 2001).unwrap();
        let opts = FitOptions {
            eta: 1e6,
            free_eta: true,
            ..FitOptions::default()
        };
        match fit(&synth(&five_modes(), grid), 5, None, &opts) {
            Err(Error::DegenerateJacobian(names)) => {
                assert!(names.iter().any(|n| n == "eta"), "{names:?}")
            }
            other => panic!("expected a degenerate Jacobian, got {other:?}"),
        }
    }

    #[test]
    fn free_eta_with_conjugate_zeros_is_recovered() {
        let mut truth = five_modes();
        for m in &mut truth.modes {
            m.z_re = m.f_n;
            m.z_im = m.gamma_n;
        }
        truth.eta = 3e6;
        let grid = FrequencyGrid::new(7.85e9, 9.15e9, 4001).unwrap();
        let opts = FitOptions {
            eta: 0.0,
            free_eta: true,
            conjugate_zeros: true,
            ..FitOptions::default()
        };
        let out = fit(&synth(&truth, grid), 5, None, &opts).unwrap();
        assert!(out.converged());
        assert!((out.set.eta - 3e6).abs() < 3e3, "{}", out.set.eta);
        for (a, b) in out.set.modes.iter().zip(&truth.modes) {
            assert!(((a.gamma_n - b.gamma_n) / b.gamma_n).abs() < 1e-3);
            assert_eq!(a.z_im, a.gamma_n);
        }
    }

    #[test]
    fn too_few_peaks_is_reported() {
        let grid = FrequencyGrid::new(7.85e9, 8.1e9, 1001).unwrap();
        let r = fit(&synth(&five_modes(), grid), 5, None, &FitOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn model_is_permutation_invariant(seed in 0usize..120, f in 7.5e9f64..9.5e9) {
            let set = five_modes();
            let mut modes = set.modes.clone();
            let mut s = seed;
            for i in (1..modes.len()).rev() {
                modes.swap(i, s % (i + 1));
                s /= i + 1;
            }
            let shuffled = PoleZeroSet { modes, ..set.clone() };
            let a = model_tau(&set, f).unwrap();
            let b = model_tau(&shuffled, f).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}
