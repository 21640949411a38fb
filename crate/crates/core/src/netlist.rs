//! Component graphs and their reduction to an external scattering matrix.
//!
//! Connections are zero-length, lossless, reflectionless joints between two
//! component ports. Reduction uses the block partition
//! `S = S_EE + S_EI P (I − S_II P)⁻¹ S_IE`, where `P` swaps the two ports of
//! every connection.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{
    Chirality, CMatrix, CoaxSpec, ElementKind, LineSpec, TerminationKind, C0,
};
use crate::error::{Error, Result};

/// Condition estimate above which the interconnection is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortRef {
    pub component: String,
    pub port: usize,
}

impl PortRef {
    pub fn new(component: impl Into<String>, port: usize) -> Self {
        PortRef {
            component: component.into(),
            port,
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub kind: ElementKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub components: Vec<Component>,
    pub connections: Vec<(PortRef, PortRef)>,
    pub external_ports: Vec<PortRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    DuplicateComponent,
    UnknownComponent,
    PortOutOfRange,
    SelfConnection,
    PortUsedTwice,
    DanglingPort,
    NoExternalPorts,
    InvalidElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub component: Option<String>,
    pub port: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn at(kind: DiagnosticKind, port: &PortRef, message: String) -> Self {
        Diagnostic {
            kind,
            component: Some(port.component.clone()),
            port: Some(port.port),
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: impl Into<String>, kind: ElementKind) -> &mut Self {
        self.components.push(Component {
            id: id.into(),
            kind,
        });
        self
    }

    pub fn connect(&mut self, a: (&str, usize), b: (&str, usize)) -> &mut Self {
        self.connections
            .push((PortRef::new(a.0, a.1), PortRef::new(b.0, b.1)));
        self
    }

    pub fn external(&mut self, component: &str, port: usize) -> &mut Self {
        self.external_ports.push(PortRef::new(component, port));
        self
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    /// Every violation of the netlist invariants; empty when well formed.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut ports: HashMap<&str, usize> = HashMap::new();
        for c in &self.components {
            if ports.insert(&c.id, c.kind.port_count()).is_some() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::DuplicateComponent,
                    component: Some(c.id.clone()),
                    port: None,
                    message: format!("component id '{}' is declared more than once", c.id),
                });
            }
            if let Err(e) = check_element(&c.kind) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::InvalidElement,
                    component: Some(c.id.clone()),
                    port: None,
                    message: format!("component '{}': {e}", c.id),
                });
            }
        }

        let mut uses: HashMap<PortRef, usize> = HashMap::new();
        let check_ref = |p: &PortRef, out: &mut Vec<Diagnostic>| -> bool {
            match ports.get(p.component.as_str()) {
                None => {
                    out.push(Diagnostic::at(
                        DiagnosticKind::UnknownComponent,
                        p,
                        format!("{p} refers to an undeclared component"),
                    ));
                    false
                }
                Some(&n) if p.port >= n => {
                    out.push(Diagnostic::at(
                        DiagnosticKind::PortOutOfRange,
                        p,
                        format!("{p} is out of range: component has {n} port(s)"),
                    ));
                    false
                }
                Some(_) => true,
            }
        };
        for (a, b) in &self.connections {
            if a == b {
                out.push(Diagnostic::at(
                    DiagnosticKind::SelfConnection,
                    a,
                    format!("{a} is connected to itself"),
                ));
            }
            for p in [a, b] {
                if check_ref(p, &mut out) {
                    *uses.entry(p.clone()).or_default() += 1;
                }
            }
        }
        for p in &self.external_ports {
            if check_ref(p, &mut out) {
                *uses.entry(p.clone()).or_default() += 1;
            }
        }
        if self.external_ports.is_empty() {
            out.push(Diagnostic {
                kind: DiagnosticKind::NoExternalPorts,
                component: None,
                port: None,
                message: "netlist declares no external ports".into(),
            });
        }

        for c in &self.components {
            for port in 0..c.kind.port_count() {
                let p = PortRef::new(c.id.clone(), port);
                match uses.get(&p).copied().unwrap_or(0) {
                    0 => out.push(Diagnostic::at(
                        DiagnosticKind::DanglingPort,
                        &p,
                        format!("{p} is neither connected nor external"),
                    )),
                    1 => {}
                    k => out.push(Diagnostic::at(
                        DiagnosticKind::PortUsedTwice,
                        &p,
                        format!("{p} is used {k} times"),
                    )),
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(d))
        }
    }

    /// Validate once and precompute the port partition.
    pub fn prepare(&self) -> Result<PreparedNetlist<'_>> {
        self.validate()?;
        let mut offset = HashMap::new();
        let mut total = 0usize;
        for c in &self.components {
            offset.insert(c.id.as_str(), total);
            total += c.kind.port_count();
        }
        let index = |p: &PortRef| offset[p.component.as_str()] + p.port;

        let external: Vec<usize> = self.external_ports.iter().map(index).collect();
        let mut internal = Vec::with_capacity(2 * self.connections.len());
        for (a, b) in &self.connections {
            internal.push(index(a));
            internal.push(index(b));
        }
        // connection k occupies internal slots 2k, 2k+1
        let partner: Vec<usize> = (0..internal.len()).map(|i| i ^ 1).collect();
        Ok(PreparedNetlist {
            netlist: self,
            offsets: self
                .components
                .iter()
                .map(|c| offset[c.id.as_str()])
                .collect(),
            total_ports: total,
            external,
            internal,
            partner,
        })
    }

    pub fn assemble(&self, f: f64) -> Result<CMatrix> {
        self.prepare()?.assemble(f)
    }
}

fn check_element(kind: &ElementKind) -> Result<()> {
    match kind {
        ElementKind::Tee { ports } if *ports < 2 => {
            Err(Error::domain(format!("tee needs at least 2 ports, got {ports}")))
        }
        ElementKind::Attenuator { nepers } if !(*nepers >= 0.0) => {
            Err(Error::domain(format!("attenuation must be >= 0 Np, got {nepers}")))
        }
        ElementKind::Line(l) | ElementKind::IdealGyrator { line: l, .. } => {
            if !(l.physical_length >= 0.0) {
                return Err(Error::domain("line length must be >= 0"));
            }
            l.coax.validate()
        }
        _ => Ok(()),
    }
}

/// A validated netlist with its port partition cached.
#[derive(Debug, Clone)]
pub struct PreparedNetlist<'a> {
    netlist: &'a Netlist,
    offsets: Vec<usize>,
    total_ports: usize,
    external: Vec<usize>,
    internal: Vec<usize>,
    partner: Vec<usize>,
}

impl PreparedNetlist<'_> {
    pub fn external_port_count(&self) -> usize {
        self.external.len()
    }

    pub fn netlist(&self) -> &Netlist {
        self.netlist
    }

    fn block_matrix(&self, f: f64) -> Result<CMatrix> {
        let mut s = CMatrix::zeros(self.total_ports, self.total_ports);
        for (c, &off) in self.netlist.components.iter().zip(&self.offsets) {
            let m = c.kind.smatrix(f)?;
            s.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(&m);
        }
        Ok(s)
    }

    pub fn assemble(&self, f: f64) -> Result<CMatrix> {
        let s = self.block_matrix(f)?;
        let ne = self.external.len();
        let ni = self.internal.len();
        let see = CMatrix::from_fn(ne, ne, |i, j| s[(self.external[i], self.external[j])]);
        if ni == 0 {
            return Ok(see);
        }
        let one = Complex64::new(1.0, 0.0);
        // A = I − S_II P, with (S_II P)[i][j] = S_II[i][partner(j)]
        let a = CMatrix::from_fn(ni, ni, |i, j| {
            let v = s[(self.internal[i], self.internal[self.partner[j]])];
            if i == j {
                one - v
            } else {
                -v
            }
        });
        let inv = a
            .clone()
            .try_inverse()
            .ok_or(Error::Resonance {
                frequency: f,
                condition: f64::INFINITY,
            })?;
        let condition = norm1(&a) * norm1(&inv);
        if !(condition <= SINGULAR_CONDITION) {
            return Err(Error::Resonance {
                frequency: f,
                condition,
            });
        }
        let sie = CMatrix::from_fn(ni, ne, |i, j| s[(self.internal[i], self.external[j])]);
        let x = inv * sie;
        // S_EI P X: (P X)[i] = X[partner(i)]
        let sei_p = CMatrix::from_fn(ne, ni, |i, j| s[(self.external[i], self.internal[self.partner[j]])]);
        Ok(see + sei_p * x)
    }
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GyratorMode {
    /// Two circulators with trimmed open/short stubs.
    Composed,
    /// Single two-port with a one-directional extra phase.
    Ideal,
}

/// Parameters of the two-port ring: tee, upper bond (line + attenuator),
/// lower bond (gyrator + attenuator), tee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingParams {
    /// Electrical length of each bond, m. The circumference is twice this.
    pub branch_electrical_length: f64,
    pub coax: CoaxSpec,
    /// Lumped attenuation on the upper bond, Np.
    pub gamma_upper: f64,
    /// Lumped attenuation on the gyrator bond, Np.
    pub gamma_lower: f64,
    pub gyrator_mode: GyratorMode,
    pub gyrator_phase: f64,
    pub uniform_loss_on: bool,
}

/// Where the lumped loss of a ring goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingVariant {
    /// `Γ_A/2` on each bond.
    Balanced,
    /// The whole `Γ_A` on the gyrator bond.
    Unbalanced,
}

/// Physical length of the open/short caps inside the composed gyrator, m.
pub const TERMINATION_CAP_LENGTH: f64 = 0.013e-2;

impl RingParams {
    /// Lossless ring of circumference `sigma` with a composed π gyrator.
    pub fn lossless(sigma: f64) -> Self {
        RingParams {
            branch_electrical_length: sigma / 2.0,
            coax: CoaxSpec::semirigid_141(),
            gamma_upper: 0.0,
            gamma_lower: 0.0,
            gyrator_mode: GyratorMode::Composed,
            gyrator_phase: PI,
            uniform_loss_on: false,
        }
    }

    /// Balanced ring: `gamma_half` Np on each bond.
    pub fn balanced(sigma: f64, gamma_half: f64) -> Self {
        RingParams {
            gamma_upper: gamma_half,
            gamma_lower: gamma_half,
            ..Self::lossless(sigma)
        }
    }

    /// Unbalanced ring: the whole `2·gamma_half` on the gyrator bond.
    pub fn unbalanced(sigma: f64, gamma_half: f64) -> Self {
        RingParams {
            gamma_upper: 0.0,
            gamma_lower: 2.0 * gamma_half,
            ..Self::lossless(sigma)
        }
    }

    /// Same ring with per-bond attenuation `gamma_half` placed per `variant`.
    pub fn with_gamma_half(self, variant: RingVariant, gamma_half: f64) -> Self {
        let (upper, lower) = match variant {
            RingVariant::Balanced => (gamma_half, gamma_half),
            RingVariant::Unbalanced => (0.0, 2.0 * gamma_half),
        };
        RingParams {
            gamma_upper: upper,
            gamma_lower: lower,
            ..self
        }
    }

    pub fn with_uniform_loss(mut self, on: bool) -> Self {
        self.uniform_loss_on = on;
        self
    }

    pub fn with_gyrator(mut self, mode: GyratorMode, phase: f64) -> Self {
        self.gyrator_mode = mode;
        self.gyrator_phase = phase;
        self
    }

    /// Σ, m.
    pub fn circumference(&self) -> f64 {
        2.0 * self.branch_electrical_length
    }

    /// Shape-resonance spacing c/Σ, Hz.
    pub fn delta(&self) -> f64 {
        C0 / self.circumference()
    }

    fn validate(&self) -> Result<()> {
        if !(self.branch_electrical_length > 0.0) {
            return Err(Error::domain("branch electrical length must be > 0"));
        }
        if !(self.gamma_upper >= 0.0) || !(self.gamma_lower >= 0.0) {
            return Err(Error::domain("lumped attenuation must be >= 0 Np"));
        }
        self.coax.validate()?;
        if self.gyrator_mode == GyratorMode::Composed {
            let off = (self.gyrator_phase - PI).rem_euclid(2.0 * PI);
            if off > 1e-12 && 2.0 * PI - off > 1e-12 {
                return Err(Error::domain(
                    "a composed gyrator realizes a π differential phase only; use the ideal mode for other phases",
                ));
            }
            let cap = TERMINATION_CAP_LENGTH * self.coax.eps_r.sqrt();
            if self.branch_electrical_length / 4.0 <= cap {
                return Err(Error::domain("branch too short to hold the gyrator stubs"));
            }
        }
        Ok(())
    }
}

/// Build the two-port ring. External port 1 is `tee_a.0`, port 2 is `tee_b.0`;
/// the gyrator's extra phase acts on waves travelling from port 2 to port 1.
pub fn build_ab_ring(params: &RingParams) -> Result<Netlist> {
    params.validate()?;
    let lossless = !params.uniform_loss_on;
    let line = |electrical: f64| {
        LineSpec::with_electrical_length(params.coax, electrical, lossless)
    };
    let l = params.branch_electrical_length;

    let mut n = Netlist::new();
    n.add("tee_a", ElementKind::Tee { ports: 3 })
        .add("tee_b", ElementKind::Tee { ports: 3 })
        .add("upper", ElementKind::Line(line(l)))
        .add("att_upper", ElementKind::Attenuator { nepers: params.gamma_upper })
        .add("att_lower", ElementKind::Attenuator { nepers: params.gamma_lower });
    n.connect(("tee_a", 1), ("upper", 0))
        .connect(("upper", 1), ("att_upper", 0))
        .connect(("att_upper", 1), ("tee_b", 1));

    let (gyr_in, gyr_out) = match params.gyrator_mode {
        GyratorMode::Ideal => {
            n.add(
                "gyrator",
                ElementKind::IdealGyrator {
                    line: line(l),
                    extra_phase: params.gyrator_phase,
                },
            );
            (("gyrator", 0), ("gyrator", 1))
        }
        GyratorMode::Composed => {
            // Equal stubs make the open/short sign the only direction-dependent
            // phase; link + 2·stub equals the bond length.
            let cap = TERMINATION_CAP_LENGTH * params.coax.eps_r.sqrt();
            let stub = l / 4.0;
            n.add("gyr_circ_in", ElementKind::Circulator(Chirality::Forward))
                .add("gyr_circ_out", ElementKind::Circulator(Chirality::Forward))
                .add("gyr_link", ElementKind::Line(line(l / 2.0)))
                .add("gyr_trim_open", ElementKind::Line(line(stub - cap)))
                .add("gyr_cap_open", ElementKind::Line(line(cap)))
                .add("gyr_open", ElementKind::Termination(TerminationKind::Open))
                .add("gyr_trim_short", ElementKind::Line(line(stub - cap)))
                .add("gyr_cap_short", ElementKind::Line(line(cap)))
                .add("gyr_short", ElementKind::Termination(TerminationKind::Short));
            n.connect(("gyr_circ_in", 1), ("gyr_trim_open", 0))
                .connect(("gyr_trim_open", 1), ("gyr_cap_open", 0))
                .connect(("gyr_cap_open", 1), ("gyr_open", 0))
                .connect(("gyr_circ_in", 2), ("gyr_link", 0))
                .connect(("gyr_link", 1), ("gyr_circ_out", 0))
                .connect(("gyr_circ_out", 2), ("gyr_trim_short", 0))
                .connect(("gyr_trim_short", 1), ("gyr_cap_short", 0))
                .connect(("gyr_cap_short", 1), ("gyr_short", 0));
            (("gyr_circ_in", 0), ("gyr_circ_out", 1))
        }
    };
    n.connect(("tee_a", 2), gyr_in)
        .connect(gyr_out, ("att_lower", 0))
        .connect(("att_lower", 1), ("tee_b", 2));
    n.external("tee_a", 0).external("tee_b", 0);
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{line_smatrix, unitarity_defect};

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ring_netlist_is_valid() {
        for mode in [GyratorMode::Composed, GyratorMode::Ideal] {
            let n = build_ab_ring(&RingParams::balanced(0.6, 0.18).with_gyrator(mode, PI)).unwrap();
            assert!(n.diagnostics().is_empty(), "{:?}", n.diagnostics());
        }
    }

    #[test]
    fn port_connected_twice_is_named() {
        let mut n = Netlist::new();
        let l = LineSpec::with_electrical_length(CoaxSpec::lossless(), 0.1, true);
        n.add("a", ElementKind::Line(l)).add("b", ElementKind::Line(l));
        n.connect(("a", 1), ("b", 0)).connect(("a", 1), ("b", 1));
        n.external("a", 0);
        let d = n.diagnostics();
        assert!(d.iter().any(|d| d.kind == DiagnosticKind::PortUsedTwice
            && d.component.as_deref() == Some("a")
            && d.port == Some(1)));
    }

    #[test]
    fn dangling_port_is_reported() {
        let mut n = Netlist::new();
        n.add("t", ElementKind::Tee { ports: 3 });
        n.external("t", 0).external("t", 1);
        let d = n.diagnostics();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::DanglingPort);
        assert_eq!(d[0].port, Some(2));
        assert!(matches!(n.assemble(1e9), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_and_out_of_range_refs() {
        let mut n = Netlist::new();
        n.add("t", ElementKind::Termination(TerminationKind::Open));
        n.connect(("t", 0), ("ghost", 0)).external("t", 3);
        let kinds: Vec<_> = n.diagnostics().into_iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::UnknownComponent));
        assert!(kinds.contains(&DiagnosticKind::PortOutOfRange));
        assert!(Netlist::new().diagnostics().iter().any(|d| d.kind == DiagnosticKind::NoExternalPorts));
    }

    #[test]
    fn single_line_is_its_own_network() {
        let l = LineSpec::with_electrical_length(CoaxSpec::semirigid_141(), 0.3, false);
        let mut n = Netlist::new();
        n.add("l", ElementKind::Line(l)).external("l", 0).external("l", 1);
        let f = 8.3e9;
        assert_eq!(n.assemble(f).unwrap(), line_smatrix(f, &l).unwrap());
    }

    #[test]
    fn series_lines_compose() {
        let coax = CoaxSpec::semirigid_141();
        let half = LineSpec::with_electrical_length(coax, 0.15, false);
        let full = LineSpec::with_electrical_length(coax, 0.3, false);
        let mut n = Netlist::new();
        n.add("a", ElementKind::Line(half)).add("b", ElementKind::Line(half));
        n.connect(("a", 1), ("b", 0)).external("a", 0).external("b", 1);
        for f in [1e9, 8.5e9, 12.4e9] {
            assert!(max_diff(&n.assemble(f).unwrap(), &line_smatrix(f, &full).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn composed_gyrator_matches_ideal() {
        for lossy in [false, true] {
            let p = RingParams::balanced(0.6, 0.2).with_uniform_loss(lossy);
            let comp = build_ab_ring(&p).unwrap();
            let ideal = build_ab_ring(&p.with_gyrator(GyratorMode::Ideal, PI)).unwrap();
            for f in [7.1e9, 8.5e9, 11.9e9] {
                assert!(max_diff(&comp.assemble(f).unwrap(), &ideal.assemble(f).unwrap()) < 1e-12);
            }
        }
    }

    #[test]
    fn composed_gyrator_alone_has_pi_difference() {
        let coax = CoaxSpec::semirigid_141();
        let p = RingParams::lossless(0.6).with_uniform_loss(true);
        let ring = build_ab_ring(&p).unwrap();
        // cut the gyrator out of the ring
        let mut g = Netlist::new();
        for c in ring.components.iter().filter(|c| c.id.starts_with("gyr_")) {
            g.components.push(c.clone());
        }
        for (a, b) in &ring.connections {
            if a.component.starts_with("gyr_") && b.component.starts_with("gyr_") {
                g.connections.push((a.clone(), b.clone()));
            }
        }
        g.external("gyr_circ_in", 0).external("gyr_circ_out", 1);
        let bond = LineSpec::with_electrical_length(coax, 0.3, false);
        for f in [7e9, 9.3e9, 12.4e9] {
            let s = g.assemble(f).unwrap();
            let d = (s[(0, 1)] / s[(1, 0)]).arg();
            assert!((d.abs() - PI).abs() < 1e-12);
            assert!((s[(0, 1)].norm() - s[(1, 0)].norm()).abs() < 1e-14);
            assert!((s[(1, 0)] - bond.transmission(f).unwrap()).norm() < 1e-12);
            assert!(s[(0, 0)].norm() < 1e-15 && s[(1, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn ring_geometry() {
        let p = RingParams::lossless(0.6);
        assert!((p.circumference() - 0.6).abs() < 1e-15);
        assert!((p.delta() - 0.5e9).abs() / 0.5e9 < 1e-3);
        assert!(build_ab_ring(&p.with_gyrator(GyratorMode::Composed, 1.0)).is_err());
    }

    #[test]
    fn lossless_ring_unitary_and_lossy_subunitary() {
        let lossless = build_ab_ring(&RingParams::lossless(0.6)).unwrap();
        let lossy = build_ab_ring(&RingParams::balanced(0.6, 0.3).with_uniform_loss(true)).unwrap();
        for k in 0..50 {
            let f = 7e9 + k as f64 * 0.11e9;
            assert!(unitarity_defect(&lossless.assemble(f).unwrap()) < 1e-10);
            let s = lossy.assemble(f).unwrap();
            let sv = s.clone().singular_values();
            assert!(sv.max() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn plain_line_ring_is_reciprocal() {
        let p = RingParams::balanced(0.6, 0.25)
            .with_uniform_loss(true)
            .with_gyrator(GyratorMode::Ideal, 0.0);
        let n = build_ab_ring(&p).unwrap();
        for k in 0..40 {
            let s = n.assemble(7e9 + k as f64 * 0.13e9).unwrap();
            assert!(max_diff(&s, &s.transpose()) < 1e-10);
        }
    }

    #[test]
    fn renaming_and_reordering_do_not_change_result() {
        let n = build_ab_ring(&RingParams::balanced(0.6, 0.1).with_uniform_loss(true)).unwrap();
        let mut m = n.clone();
        let rename = |s: &str| format!("x_{}", s.chars().rev().collect::<String>());
        for c in &mut m.components {
            c.id = rename(&c.id);
        }
        m.components.reverse();
        for (a, b) in &mut m.connections {
            a.component = rename(&a.component);
            b.component = rename(&b.component);
            std::mem::swap(a, b);
        }
        m.connections.reverse();
        for p in &mut m.external_ports {
            p.component = rename(&p.component);
        }
        let f = 9.87e9;
        assert!(max_diff(&n.assemble(f).unwrap(), &m.assemble(f).unwrap()) < 1e-13);
    }

    #[test]
    fn trapped_lossless_loop_reports_resonance() {
        // half-wave line between two shorts, isolated from the external ports
        let f = 1e9;
        let l = LineSpec::with_electrical_length(CoaxSpec::lossless(), C0 / (2.0 * f), true);
        let mut n = Netlist::new();
        n.add("l", ElementKind::Line(l))
            .add("s1", ElementKind::Termination(TerminationKind::Short))
            .add("s2", ElementKind::Termination(TerminationKind::Short))
            .add("probe", ElementKind::Tee { ports: 2 });
        n.connect(("l", 0), ("s1", 0)).connect(("l", 1), ("s2", 0));
        n.external("probe", 0).external("probe", 1);
        match n.assemble(f) {
            Err(Error::Resonance { frequency, .. }) => assert_eq!(frequency, f),
            other => panic!("expected resonance, got {other:?}"),
        }
        assert!(n.assemble(f * 1.01).is_ok());
    }
}
