//! Quantities written as `"<number> <unit>"`, converted to SI.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Length,
    Time,
    /// Amplitude attenuation, stored in nepers.
    Attenuation,
    Angle,
    Resistivity,
    Voltage,
    Dimensionless,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Attenuation => "attenuation",
            Dimension::Angle => "angle",
            Dimension::Resistivity => "resistivity",
            Dimension::Voltage => "voltage",
            Dimension::Dimensionless => "dimensionless",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let u = unit.to_ascii_lowercase();
        let f = match (self, u.as_str()) {
            (Dimension::Frequency, "hz") => 1.0,
            (Dimension::Frequency, "khz") => 1e3,
            (Dimension::Frequency, "mhz") => 1e6,
            (Dimension::Frequency, "ghz") => 1e9,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "cm") => 1e-2,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "um") => 1e-6,
            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "ms") => 1e-3,
            (Dimension::Time, "us") => 1e-6,
            (Dimension::Time, "ns") => 1e-9,
            (Dimension::Time, "ps") => 1e-12,
            (Dimension::Attenuation, "np") => 1.0,
            (Dimension::Attenuation, "db") => std::f64::consts::LN_10 / 20.0,
            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Angle, "deg") => std::f64::consts::PI / 180.0,
            (Dimension::Resistivity, "ohm*m" | "ohm.m" | "ω·m" | "ω*m") => 1.0,
            (Dimension::Voltage, "v") => 1.0,
            (Dimension::Voltage, "mv") => 1e-3,
            _ => return None,
        };
        Some(f)
    }
}

/// Parse `"8.5 GHz"`-style text. Dimensioned quantities must carry a unit;
/// dimensionless ones must not.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_whitespace())
        .unwrap_or(t.len());
    let (num, unit) = (&t[..split], t[split..].trim());
    let value: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("'{text}': '{num}' is not a number")))?;
    if !value.is_finite() {
        return Err(Error::Config(format!("'{text}' is not finite")));
    }
    if dim == Dimension::Dimensionless {
        if !unit.is_empty() {
            return Err(Error::Config(format!("'{text}' must not carry a unit")));
        }
        return Ok(value);
    }
    if unit.is_empty() {
        return Err(Error::Config(format!(
            "'{text}' needs a {} unit",
            dim.name()
        )));
    }
    dim.factor(unit)
        .map(|f| value * f)
        .ok_or_else(|| Error::Config(format!("'{unit}' is not a {} unit", dim.name())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(parse_quantity("8.5 GHz", Dimension::Frequency).unwrap(), 8.5e9);
        assert_eq!(parse_quantity(" 0.091 cm ", Dimension::Length).unwrap(), 0.091e-2);
        assert_eq!(parse_quantity("1 ns", Dimension::Time).unwrap(), 1e-9);
        assert_eq!(parse_quantity("0.18 Np", Dimension::Attenuation).unwrap(), 0.18);
        assert!((parse_quantity("20 dB", Dimension::Attenuation).unwrap() - 10f64.ln()).abs() < 1e-15);
        assert!((parse_quantity("180 deg", Dimension::Angle).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(parse_quantity("4.4e-8 ohm*m", Dimension::Resistivity).unwrap(), 4.4e-8);
        assert_eq!(parse_quantity("2.01", Dimension::Dimensionless).unwrap(), 2.01);
    }

    #[test]
    fn units_are_mandatory_and_checked() {
        assert!(parse_quantity("8.5", Dimension::Frequency).is_err());
        assert!(parse_quantity("8.5 m", Dimension::Frequency).is_err());
        assert!(parse_quantity("2 m", Dimension::Dimensionless).is_err());
        assert!(parse_quantity("abc GHz", Dimension::Frequency).is_err());
    }
}
