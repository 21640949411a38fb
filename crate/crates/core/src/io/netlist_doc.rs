//! Declarative netlist documents (TOML).
//!
//! ```toml
//! external = ["tee_a.0", "tee_b.0"]
//! connections = ["tee_a.1 -- upper.0", "upper.1 -- tee_b.1"]
//!
//! [coax]
//! inner_radius = "0.0455 cm"
//! outer_radius = "0.149 cm"
//! eps_r = 2.01
//! tan_delta = 0.00028
//! resistivity = "4.4e-8 ohm*m"
//!
//! [[component]]
//! id = "upper"
//! kind = "line"
//! electrical_length = "0.3 m"
//! ```
//!
//! Component kinds and their keys:
//! `line` (`length` or `electrical_length`, `lossless`, `coax`),
//! `tee` (`ports`), `circulator` (`chirality`), `attenuator` (`loss`),
//! `termination` (`load`), `gyrator` (as `line`, plus `extra_phase`).
//! Unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use toml::{Spanned, Table, Value};

use super::units::{parse_quantity, Dimension};
use crate::elements::{Chirality, CoaxSpec, ElementKind, LineSpec, TerminationKind};
use crate::error::{Error, Result};
use crate::netlist::{Netlist, PortRef};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(default)]
    external: Vec<Spanned<String>>,
    #[serde(default)]
    connections: Vec<Spanned<String>>,
    coax: Option<Spanned<Table>>,
    #[serde(default)]
    component: Vec<Spanned<Table>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub(crate) fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map_or(1, |s| line_of(text, s.start));
    Error::Parse {
        line,
        message: e.message().to_string(),
    }
}

struct Fields<'a> {
    table: &'a Table,
    line: usize,
    what: String,
}

impl<'a> Fields<'a> {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse {
            line: self.line,
            message: format!("{}: {msg}", self.what),
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        for k in self.table.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(self.err(format_args!("unknown key '{k}'")));
            }
        }
        Ok(())
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(format_args!("'{key}' must be a string"))),
        }
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        let v = match self.table.get(key) {
            None => return Ok(None),
            Some(v) => v,
        };
        let r = match (v, dim) {
            (Value::String(s), _) => parse_quantity(s, dim),
            (Value::Float(x), Dimension::Dimensionless) => Ok(*x),
            (Value::Integer(x), Dimension::Dimensionless) => Ok(*x as f64),
            _ => return Err(self.err(format_args!("'{key}' needs a quoted value with a unit"))),
        };
        r.map(Some).map_err(|e| self.err(format_args!("'{key}': {e}")))
    }

    fn required(&self, key: &str, dim: Dimension) -> Result<f64> {
        self.quantity(key, dim)?
            .ok_or_else(|| self.err(format_args!("missing '{key}'")))
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(format_args!("'{key}' must be true or false"))),
        }
    }
}

pub(crate) fn coax_from_table(table: &Table, line: usize, base: CoaxSpec) -> Result<CoaxSpec> {
    let f = Fields {
        table,
        line,
        what: "coax".into(),
    };
    f.allow(&["inner_radius", "outer_radius", "eps_r", "tan_delta", "resistivity"])?;
    let c = CoaxSpec {
        inner_radius_a: f.quantity("inner_radius", Dimension::Length)?.unwrap_or(base.inner_radius_a),
        outer_radius_b: f.quantity("outer_radius", Dimension::Length)?.unwrap_or(base.outer_radius_b),
        eps_r: f.quantity("eps_r", Dimension::Dimensionless)?.unwrap_or(base.eps_r),
        tan_delta: f.quantity("tan_delta", Dimension::Dimensionless)?.unwrap_or(base.tan_delta),
        rho: f.quantity("resistivity", Dimension::Resistivity)?.unwrap_or(base.rho),
    };
    c.validate().map_err(|e| f.err(e))?;
    Ok(c)
}

fn line_spec(f: &Fields, coax: CoaxSpec) -> Result<LineSpec> {
    let coax = match f.table.get("coax") {
        None => coax,
        Some(Value::Table(t)) => coax_from_table(t, f.line, coax)?,
        Some(_) => return Err(f.err("'coax' must be a table")),
    };
    let lossless = f.bool("lossless")?.unwrap_or(false);
    let physical = f.quantity("length", Dimension::Length)?;
    let electrical = f.quantity("electrical_length", Dimension::Length)?;
    let spec = match (physical, electrical) {
        (Some(l), None) => LineSpec {
            coax,
            physical_length: l,
            lossless_override: lossless,
        },
        (None, Some(e)) => LineSpec::with_electrical_length(coax, e, lossless),
        _ => return Err(f.err("give exactly one of 'length' and 'electrical_length'")),
    };
    if !(spec.physical_length >= 0.0) {
        return Err(f.err("length must be >= 0"));
    }
    Ok(spec)
}

fn component(f: &Fields, coax: CoaxSpec) -> Result<(String, ElementKind)> {
    let id = f.str("id")?.ok_or_else(|| f.err("missing 'id'"))?.to_string();
    let kind = f.str("kind")?.ok_or_else(|| f.err("missing 'kind'"))?;
    let f = Fields {
        table: f.table,
        line: f.line,
        what: format!("component '{id}'"),
    };
    const LINE_KEYS: [&str; 6] = ["id", "kind", "length", "electrical_length", "lossless", "coax"];
    let element = match kind {
        "line" => {
            f.allow(&LINE_KEYS)?;
            ElementKind::Line(line_spec(&f, coax)?)
        }
        "gyrator" => {
            let mut keys = LINE_KEYS.to_vec();
            keys.push("extra_phase");
            f.allow(&keys)?;
            ElementKind::IdealGyrator {
                line: line_spec(&f, coax)?,
                extra_phase: f.required("extra_phase", Dimension::Angle)?,
            }
        }
        "tee" => {
            f.allow(&["id", "kind", "ports"])?;
            let ports = match f.table.get("ports") {
                None => 3,
                Some(Value::Integer(n)) if *n >= 2 => *n as usize,
                Some(_) => return Err(f.err("'ports' must be an integer >= 2")),
            };
            ElementKind::Tee { ports }
        }
        "circulator" => {
            f.allow(&["id", "kind", "chirality"])?;
            match f.str("chirality")?.unwrap_or("forward") {
                "forward" => ElementKind::Circulator(Chirality::Forward),
                "reverse" => ElementKind::Circulator(Chirality::Reverse),
                other => return Err(f.err(format_args!("chirality '{other}'"))),
            }
        }
        "attenuator" => {
            f.allow(&["id", "kind", "loss"])?;
            let nepers = f.required("loss", Dimension::Attenuation)?;
            if !(nepers >= 0.0) {
                return Err(f.err("loss must be >= 0"));
            }
            ElementKind::Attenuator { nepers }
        }
        "termination" => {
            f.allow(&["id", "kind", "load"])?;
            match f.str("load")?.ok_or_else(|| f.err("missing 'load'"))? {
                "open" => ElementKind::Termination(TerminationKind::Open),
                "short" => ElementKind::Termination(TerminationKind::Short),
                "matched" => ElementKind::Termination(TerminationKind::Matched),
                other => return Err(f.err(format_args!("load '{other}'"))),
            }
        }
        other => return Err(f.err(format_args!("unknown kind '{other}'"))),
    };
    Ok((id, element))
}

fn port_ref(s: &str, line: usize) -> Result<PortRef> {
    let bad = || Error::Parse {
        line,
        message: format!("'{s}' is not of the form id.port"),
    };
    let (id, port) = s.trim().rsplit_once('.').ok_or_else(bad)?;
    let port = port.parse::<usize>().map_err(|_| bad())?;
    if id.is_empty() {
        return Err(bad());
    }
    Ok(PortRef::new(id, port))
}

/// Parse a document. The result is structurally parsed but not validated;
/// call [`Netlist::validate`] for the topology checks.
pub fn parse(text: &str) -> Result<Netlist> {
    let raw: RawDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let coax = match &raw.coax {
        Some(t) => coax_from_table(t.get_ref(), line_of(text, t.span().start), CoaxSpec::semirigid_141())?,
        None => CoaxSpec::semirigid_141(),
    };
    let mut n = Netlist::new();
    for c in &raw.component {
        let f = Fields {
            table: c.get_ref(),
            line: line_of(text, c.span().start),
            what: "component".into(),
        };
        let (id, kind) = component(&f, coax)?;
        n.add(id, kind);
    }
    for c in &raw.connections {
        let line = line_of(text, c.span().start);
        let s = c.get_ref();
        let (a, b) = s
            .split_once("--")
            .or_else(|| s.split_once('\u{2014}'))
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("connection '{s}' needs 'a.i -- b.j'"),
            })?;
        n.connections.push((port_ref(a, line)?, port_ref(b, line)?));
    }
    for e in &raw.external {
        n.external_ports
            .push(port_ref(e.get_ref(), line_of(text, e.span().start))?);
    }
    Ok(n)
}

/// Parse and validate a document file.
pub fn load(path: &Path) -> Result<Netlist> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let n = parse(&text)?;
    n.validate()?;
    Ok(n)
}

fn coax_lines(c: &CoaxSpec) -> String {
    format!(
        "inner_radius = \"{} m\"\nouter_radius = \"{} m\"\neps_r = {:?}\ntan_delta = {:?}\nresistivity = \"{} ohm*m\"\n",
        c.inner_radius_a, c.outer_radius_b, c.eps_r, c.tan_delta, c.rho
    )
}

fn inline_coax(c: &CoaxSpec) -> String {
    format!(
        "{{ inner_radius = \"{} m\", outer_radius = \"{} m\", eps_r = {:?}, tan_delta = {:?}, resistivity = \"{} ohm*m\" }}",
        c.inner_radius_a, c.outer_radius_b, c.eps_r, c.tan_delta, c.rho
    )
}

/// Serialize a netlist; `parse(&to_string(n))` reproduces `n` exactly.
pub fn to_string(n: &Netlist) -> String {
    let shared = n
        .components
        .iter()
        .find_map(|c| match &c.kind {
            ElementKind::Line(l) | ElementKind::IdealGyrator { line: l, .. } => Some(l.coax),
            _ => None,
        })
        .unwrap_or_else(CoaxSpec::semirigid_141);
    let list = |items: Vec<String>| {
        let body: Vec<String> = items.iter().map(|s| format!("  \"{s}\",")).collect();
        format!("[\n{}\n]", body.join("\n"))
    };
    let mut s = String::new();
    let ext = n.external_ports.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(s, "external = {}", list(ext));
    let conns = n
        .connections
        .iter()
        .map(|(a, b)| format!("{a} -- {b}"))
        .collect();
    let _ = writeln!(s, "connections = {}\n", list(conns));
    let _ = writeln!(s, "[coax]\n{}", coax_lines(&shared));
    for c in &n.components {
        let _ = writeln!(s, "[[component]]\nid = \"{}\"", c.id);
        let line_body = |s: &mut String, l: &LineSpec| {
            let _ = writeln!(s, "length = \"{} m\"", l.physical_length);
            if l.lossless_override {
                let _ = writeln!(s, "lossless = true");
            }
            if l.coax != shared {
                let _ = writeln!(s, "coax = {}", inline_coax(&l.coax));
            }
        };
        match &c.kind {
            ElementKind::Line(l) => {
                let _ = writeln!(s, "kind = \"line\"");
                line_body(&mut s, l);
            }
            ElementKind::IdealGyrator { line, extra_phase } => {
                let _ = writeln!(s, "kind = \"gyrator\"\nextra_phase = \"{extra_phase} rad\"");
                line_body(&mut s, line);
            }
            ElementKind::Tee { ports } => {
                let _ = writeln!(s, "kind = \"tee\"\nports = {ports}");
            }
            ElementKind::Circulator(ch) => {
                let name = match ch {
                    Chirality::Forward => "forward",
                    Chirality::Reverse => "reverse",
                };
                let _ = writeln!(s, "kind = \"circulator\"\nchirality = \"{name}\"");
            }
            ElementKind::Attenuator { nepers } => {
                let _ = writeln!(s, "kind = \"attenuator\"\nloss = \"{nepers} Np\"");
            }
            ElementKind::Termination(t) => {
                let name = match t {
                    TerminationKind::Open => "open",
                    TerminationKind::Short => "short",
                    TerminationKind::Matched => "matched",
                };
                let _ = writeln!(s, "kind = \"termination\"\nload = \"{name}\"");
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_ab_ring, GyratorMode, RingParams};

    #[test]
    fn ring_round_trips() {
        for mode in [GyratorMode::Composed, GyratorMode::Ideal] {
            let p = RingParams::balanced(0.6, 0.18)
                .with_uniform_loss(true)
                .with_gyrator(mode, std::f64::consts::PI);
            let ring = build_ab_ring(&p).unwrap();
            let text = to_string(&ring);
            let back = parse(&text).unwrap();
            assert_eq!(back, ring, "{text}");
        }
    }

    #[test]
    fn per_line_coax_survives() {
        let mut n = build_ab_ring(&RingParams::lossless(0.6)).unwrap();
        if let ElementKind::Line(l) = &mut n.components[2].kind {
            l.coax.eps_r = 1.0;
        }
        assert_eq!(parse(&to_string(&n)).unwrap(), n);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = "[[component]]\nid = \"a\"\nkind = \"attenuator\"\nloss = \"1 Np\"\ncolour = \"red\"\n";
        match parse(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let err = parse("wires = []\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn units_are_required() {
        let text = "[[component]]\nid = \"a\"\nkind = \"attenuator\"\nloss = 1.0\n";
        assert!(parse(text).is_err());
        let text = "[[component]]\nid = \"l\"\nkind = \"line\"\nlength = \"1\"\n";
        assert!(parse(text).is_err());
    }

    #[test]
    fn bad_connection_syntax() {
        let text = "connections = [\n  \"a.0 b.1\",\n]\n";
        assert!(matches!(parse(text), Err(Error::Parse { line: 2, .. })));
        let text = "external = [\"a\"]\n";
        assert!(matches!(parse(text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn topology_errors_surface_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.toml");
        std::fs::write(
            &path,
            "external = [\"a.0\"]\nconnections = [\"a.1 -- b.0\"]\n[[component]]\nid = \"a\"\nkind = \"attenuator\"\nloss = \"0 Np\"\n",
        )
        .unwrap();
        assert!(matches!(load(&path), Err(Error::Validation(_))));
    }
}
