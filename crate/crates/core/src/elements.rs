//! Closed-form scattering matrices of the circuit elements.
//!
//! Wave amplitudes follow the `e^{-iωt}` time convention: a matched line of
//! transit time `T` transmits with `exp(i(ω + iη)T)`, so phase grows with
//! frequency and a uniform attenuation rate `η` enters as an imaginary offset
//! of the angular frequency. All ports share one real reference impedance.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0e-7 * PI;

/// Geometry and loss parameters of a homogeneous coaxial cable.
///
/// `inner_radius_a` and `outer_radius_b` are the lengths that appear in the
/// conductor-loss term `1/a + 1/b` and `ln(b/a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoaxSpec {
    pub inner_radius_a: f64,
    pub outer_radius_b: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Conductor resistivity, Ω·m.
    pub rho: f64,
}

impl CoaxSpec {
    /// 0.141" semi-rigid PTFE cable: 0.91 mm centre conductor, 2.98 mm
    /// dielectric, silver-plated copper-clad steel conductor resistivity.
    pub fn semirigid_141() -> Self {
        CoaxSpec {
            inner_radius_a: 0.0455e-2,
            outer_radius_b: 0.149e-2,
            eps_r: 2.01,
            tan_delta: 0.00028,
            rho: 4.4e-8,
        }
    }

    /// Same dielectric, no loss at all.
    pub fn lossless() -> Self {
        CoaxSpec {
            tan_delta: 0.0,
            rho: 0.0,
            ..Self::semirigid_141()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let CoaxSpec {
            inner_radius_a: a,
            outer_radius_b: b,
            eps_r,
            tan_delta,
            rho,
        } = *self;
        if !(a > 0.0) {
            return Err(Error::domain(format!("coax inner radius must be > 0, got {a}")));
        }
        if !(b >= a) {
            return Err(Error::domain(format!(
                "coax outer radius {b} must exceed inner radius {a}"
            )));
        }
        if !(eps_r >= 1.0) {
            return Err(Error::domain(format!("eps_r must be >= 1, got {eps_r}")));
        }
        if !(tan_delta >= 0.0) || !(rho >= 0.0) {
            return Err(Error::domain("loss tangent and resistivity must be >= 0"));
        }
        Ok(())
    }
}

/// Uniform attenuation rate of a coax line in s⁻¹ (rad/s):
///
/// `η(f) = ½[ωtanδ + √(ωρ/2μ₀) · (1/√εr) · (1/ln(b/a)) · (1/a + 1/b)]`.
pub fn eta_of_f(f: f64, coax: &CoaxSpec) -> Result<f64> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::domain(format!("frequency must be positive, got {f}")));
    }
    coax.validate()?;
    let CoaxSpec {
        inner_radius_a: a,
        outer_radius_b: b,
        eps_r,
        tan_delta,
        rho,
    } = *coax;
    let omega = 2.0 * PI * f;
    let dielectric = omega * tan_delta;
    let conductor = if rho == 0.0 {
        0.0
    } else {
        (omega * rho / (2.0 * MU0)).sqrt() / eps_r.sqrt() / (b / a).ln() * (1.0 / a + 1.0 / b)
    };
    let eta = 0.5 * (dielectric + conductor);
    if !eta.is_finite() {
        return Err(Error::domain(format!(
            "attenuation is not finite for a = {a}, b = {b}"
        )));
    }
    Ok(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub coax: CoaxSpec,
    pub physical_length: f64,
    pub lossless_override: bool,
}

impl LineSpec {
    /// Line whose electrical length (physical length times √εr) is `electrical`.
    pub fn with_electrical_length(coax: CoaxSpec, electrical: f64, lossless: bool) -> Self {
        LineSpec {
            coax,
            physical_length: electrical / coax.eps_r.sqrt(),
            lossless_override: lossless,
        }
    }

    pub fn electrical_length(&self) -> f64 {
        self.physical_length * self.coax.eps_r.sqrt()
    }

    /// One-way transit time, s.
    pub fn transit_time(&self) -> f64 {
        self.electrical_length() / C0
    }

    /// Complex transmission coefficient `exp(i(ω + iη)T)`.
    pub fn transmission(&self, f: f64) -> Result<Complex64> {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::domain(format!("frequency must be positive, got {f}")));
        }
        if !(self.physical_length >= 0.0) {
            return Err(Error::domain("line length must be >= 0"));
        }
        let eta = if self.lossless_override {
            0.0
        } else {
            eta_of_f(f, &self.coax)?
        };
        let t = self.transit_time();
        let omega = 2.0 * PI * f;
        Ok(Complex64::new(-eta * t, omega * t).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    /// 1 → 2 → 3 → 1.
    Forward,
    /// 1 → 3 → 2 → 1.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminationKind {
    Open,
    Short,
    Matched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Line(LineSpec),
    Tee { ports: usize },
    Circulator(Chirality),
    /// Matched reciprocal attenuator, total attenuation in nepers.
    Attenuator { nepers: f64 },
    Termination(TerminationKind),
    /// Line with an extra phase on the port-2 → port-1 transmission only.
    IdealGyrator { line: LineSpec, extra_phase: f64 },
}

impl ElementKind {
    pub fn port_count(&self) -> usize {
        match self {
            ElementKind::Line(_) | ElementKind::Attenuator { .. } => 2,
            ElementKind::IdealGyrator { .. } => 2,
            ElementKind::Tee { ports } => *ports,
            ElementKind::Circulator(_) => 3,
            ElementKind::Termination(_) => 1,
        }
    }

    pub fn smatrix(&self, f: f64) -> Result<CMatrix> {
        match self {
            ElementKind::Line(spec) => line_smatrix(f, spec),
            ElementKind::Tee { ports } => tee_smatrix(*ports),
            ElementKind::Circulator(c) => Ok(circulator_smatrix(*c)),
            ElementKind::Attenuator { nepers } => attenuator_smatrix(*nepers),
            ElementKind::Termination(kind) => Ok(termination_reflection(*kind)),
            ElementKind::IdealGyrator { line, extra_phase } => {
                ideal_gyrator_smatrix(f, line, *extra_phase)
            }
        }
    }

    /// Short lowercase tag used in diagnostics and netlist files.
    pub fn tag(&self) -> &'static str {
        match self {
            ElementKind::Line(_) => "line",
            ElementKind::Tee { .. } => "tee",
            ElementKind::Circulator(_) => "circulator",
            ElementKind::Attenuator { .. } => "attenuator",
            ElementKind::Termination(_) => "termination",
            ElementKind::IdealGyrator { .. } => "gyrator",
        }
    }
}

fn two_port(s11: Complex64, s21: Complex64, s12: Complex64, s22: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[s11, s12, s21, s22])
}

pub fn line_smatrix(f: f64, spec: &LineSpec) -> Result<CMatrix> {
    let t = spec.transmission(f)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(two_port(zero, t, t, zero))
}

/// Neumann vertex `S = (2/n)J − I`.
pub fn tee_smatrix(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::domain(format!("tee needs at least 2 ports, got {n}")));
    }
    let off = 2.0 / n as f64;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(if i == j { off - 1.0 } else { off }, 0.0)
    }))
}

pub fn circulator_smatrix(chirality: Chirality) -> CMatrix {
    let mut s = CMatrix::zeros(3, 3);
    let one = Complex64::new(1.0, 0.0);
    // forward: S21 = S32 = S13 = 1
    for from in 0..3 {
        let to = (from + 1) % 3;
        s[(to, from)] = one;
    }
    match chirality {
        Chirality::Forward => s,
        Chirality::Reverse => s.transpose(),
    }
}

pub fn attenuator_smatrix(nepers: f64) -> Result<CMatrix> {
    if !(nepers >= 0.0) || !nepers.is_finite() {
        return Err(Error::domain(format!(
            "attenuation must be a finite value >= 0 Np, got {nepers}"
        )));
    }
    let t = Complex64::new((-nepers).exp(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(two_port(zero, t, t, zero))
}

pub fn termination_reflection(kind: TerminationKind) -> CMatrix {
    let r = match kind {
        TerminationKind::Open => 1.0,
        TerminationKind::Short => -1.0,
        TerminationKind::Matched => 0.0,
    };
    CMatrix::from_element(1, 1, Complex64::new(r, 0.0))
}

pub fn ideal_gyrator_smatrix(f: f64, line: &LineSpec, extra_phase: f64) -> Result<CMatrix> {
    let t = line.transmission(f)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(two_port(zero, t, t * Complex64::from_polar(1.0, extra_phase), zero))
}

/// `max |(S S† − I)_ij|`.
pub fn unitarity_defect(s: &CMatrix) -> f64 {
    let n = s.nrows();
    let p = s * s.adjoint() - CMatrix::identity(n, n);
    p.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn printed_coax() -> CoaxSpec {
        CoaxSpec {
            inner_radius_a: 0.091e-2,
            outer_radius_b: 0.298e-2,
            eps_r: 2.01,
            tan_delta: 0.00028,
            rho: 4.4e-3,
        }
    }

    #[test]
    fn eta_regression_values() {
        // Frozen from a 30-digit evaluation of the closed form.
        let lit = printed_coax();
        assert_relative_eq!(eta_of_f(8.5e9, &lit).unwrap(), 4_131_293_810.141_81, max_relative = 1e-12);
        assert_relative_eq!(eta_of_f(17e9, &lit).unwrap(), 5_846_911_656.088_84, max_relative = 1e-12);
        let sr = CoaxSpec::semirigid_141();
        assert_relative_eq!(eta_of_f(8.5e9, &sr).unwrap(), 33_558_298.122_205_2, max_relative = 1e-12);
        assert_relative_eq!(eta_of_f(17e9, &sr).unwrap(), 51_838_519.972_852_7, max_relative = 1e-12);
    }

    #[test]
    fn eta_zero_without_loss_and_linear_dielectric_term() {
        assert_eq!(eta_of_f(8.5e9, &CoaxSpec::lossless()).unwrap(), 0.0);
        let dielectric_only = CoaxSpec {
            rho: 0.0,
            ..CoaxSpec::semirigid_141()
        };
        let e1 = eta_of_f(5e9, &dielectric_only).unwrap();
        let e2 = eta_of_f(10e9, &dielectric_only).unwrap();
        assert_relative_eq!(e2, 2.0 * e1, max_relative = 1e-14);
    }

    #[test]
    fn eta_rejects_degenerate_coax() {
        let bad = CoaxSpec {
            outer_radius_b: 0.091e-2,
            ..printed_coax()
        };
        assert!(matches!(eta_of_f(8.5e9, &bad), Err(Error::Domain(_))));
        assert!(eta_of_f(0.0, &printed_coax()).is_err());
    }

    #[test]
    fn zero_length_and_half_wave_lines() {
        let l0 = LineSpec {
            coax: CoaxSpec::semirigid_141(),
            physical_length: 0.0,
            lossless_override: false,
        };
        let s = line_smatrix(9e9, &l0).unwrap();
        assert_relative_eq!(s[(1, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(s[(0, 0)], Complex64::new(0.0, 0.0));

        // β L = π at 1 GHz for a 0.15 m electrical length
        let half = LineSpec::with_electrical_length(CoaxSpec::lossless(), C0 / 2e9, true);
        let s = line_smatrix(1e9, &half).unwrap();
        assert_relative_eq!(s[(1, 0)].re, -1.0, epsilon = 1e-12);
        assert!(s[(1, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn lossless_line_group_delay_is_transit_time() {
        let line = LineSpec::with_electrical_length(CoaxSpec::semirigid_141(), 0.3, true);
        for f in [1e9, 8.5e9, 17e9] {
            let h = 1e3;
            let a = line.transmission(f - h).unwrap().arg();
            let b = line.transmission(f + h).unwrap().arg();
            let mut d = b - a;
            if d < -PI {
                d += 2.0 * PI;
            }
            let tau = d / (2.0 * h) / (2.0 * PI);
            assert_relative_eq!(tau, 0.3 / C0, max_relative = 1e-6);
            // 1.0 ns within the rounding of c
            assert!((tau - 1.0e-9).abs() < 1e-12);
        }
    }

    #[test]
    fn lossy_line_amplitude() {
        let line = LineSpec::with_electrical_length(CoaxSpec::semirigid_141(), 0.3, false);
        let f = 8.5e9;
        let eta = eta_of_f(f, &line.coax).unwrap();
        assert_relative_eq!(
            line.transmission(f).unwrap().norm(),
            (-eta * 0.3 / C0).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn tee_is_neumann_vertex() {
        let s = tee_smatrix(3).unwrap();
        assert_relative_eq!(s[(0, 0)].re, -1.0 / 3.0);
        assert_relative_eq!(s[(0, 1)].re, 2.0 / 3.0);
        // direct multiplication, independent of unitarity_defect
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += s[(i, k)] * s[(j, k)].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).norm() < 1e-15);
            }
        }
        let s2 = tee_smatrix(2).unwrap();
        assert_eq!(s2[(0, 0)].re, 0.0);
        assert_eq!(s2[(0, 1)].re, 1.0);
        assert!(matches!(tee_smatrix(1), Err(Error::Domain(_))));
    }

    #[test]
    fn circulator_routes_forward() {
        let s = circulator_smatrix(Chirality::Forward);
        // input at port 1 leaves at port 2
        assert_eq!(s[(1, 0)].re, 1.0);
        assert_eq!(s[(2, 0)].re, 0.0);
        assert_eq!(s[(0, 0)].re, 0.0);
        assert_eq!(s[(2, 1)].re, 1.0);
        assert_eq!(s[(0, 2)].re, 1.0);
        assert!(unitarity_defect(&s) < 1e-15);
        let r = circulator_smatrix(Chirality::Reverse);
        assert_eq!(r, s.transpose());
        assert_eq!(r.transpose(), s);
    }

    #[test]
    fn attenuator_and_terminations() {
        assert_eq!(attenuator_smatrix(0.0).unwrap()[(1, 0)].re, 1.0);
        assert_relative_eq!(attenuator_smatrix(0.18).unwrap()[(1, 0)].re, 0.835_270_211_411_272, epsilon = 1e-12);
        assert_relative_eq!(attenuator_smatrix(1.0).unwrap()[(0, 1)].re, 1.0 / std::f64::consts::E);
        assert!(attenuator_smatrix(-0.1).is_err());
        assert_eq!(termination_reflection(TerminationKind::Open)[(0, 0)].re, 1.0);
        assert_eq!(termination_reflection(TerminationKind::Short)[(0, 0)].re, -1.0);
        assert_eq!(termination_reflection(TerminationKind::Matched)[(0, 0)].re, 0.0);
    }

    #[test]
    fn gyrator_phase_on_reverse_path_only() {
        let line = LineSpec::with_electrical_length(CoaxSpec::semirigid_141(), 0.3, false);
        let f = 9.1e9;
        let plain = line_smatrix(f, &line).unwrap();
        let g0 = ideal_gyrator_smatrix(f, &line, 0.0).unwrap();
        assert_eq!(plain, g0);
        let g = ideal_gyrator_smatrix(f, &line, PI).unwrap();
        assert!((g[(0, 1)] + g[(1, 0)]).norm() < 1e-15);
        assert_relative_eq!(g[(0, 1)].norm(), g[(1, 0)].norm(), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn lossless_elements_are_unitary(f in 1e8f64..2e10, len in 0.0f64..2.0, n in 2usize..8, phase in -7.0f64..7.0) {
            let line = LineSpec { coax: CoaxSpec::semirigid_141(), physical_length: len, lossless_override: true };
            let mats = [
                line_smatrix(f, &line).unwrap(),
                tee_smatrix(n).unwrap(),
                circulator_smatrix(Chirality::Forward),
                circulator_smatrix(Chirality::Reverse),
                attenuator_smatrix(0.0).unwrap(),
                termination_reflection(TerminationKind::Open),
                termination_reflection(TerminationKind::Short),
                ideal_gyrator_smatrix(f, &line, phase).unwrap(),
            ];
            for m in &mats {
                prop_assert!(unitarity_defect(m) < 1e-12);
            }
        }

        #[test]
        fn reciprocal_elements_are_symmetric(f in 1e8f64..2e10, len in 0.0f64..2.0, np in 0.0f64..3.0, n in 2usize..8) {
            let line = LineSpec { coax: CoaxSpec::semirigid_141(), physical_length: len, lossless_override: false };
            for m in [line_smatrix(f, &line).unwrap(), tee_smatrix(n).unwrap(), attenuator_smatrix(np).unwrap()] {
                prop_assert_eq!(m.clone(), m.transpose());
            }
        }

        #[test]
        fn eta_monotone(f in 1e8f64..2e10, df in 0.0f64..1e10, td in 0.0f64..0.01, rho in 0.0f64..1e-6, dtd in 0.0f64..0.01, drho in 0.0f64..1e-6) {
            let base = CoaxSpec { tan_delta: td, rho, ..CoaxSpec::semirigid_141() };
            let e0 = eta_of_f(f, &base).unwrap();
            prop_assert!(eta_of_f(f + df, &base).unwrap() >= e0);
            let more = CoaxSpec { tan_delta: td + dtd, rho: rho + drho, ..base };
            prop_assert!(eta_of_f(f, &more).unwrap() >= e0);
        }
    }
}
