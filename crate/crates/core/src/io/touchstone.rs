//! Touchstone v1 files in the `# HZ S RI R 50` dialect.
//!
//! Two-port rows are `f S11 S21 S12 S22`; files with three or more ports
//! hold the matrix row by row, one row per line.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::elements::CMatrix;
use crate::error::{Error, Result};
use crate::sweep::{FrequencyGrid, FrequencySpectrum};

/// Serialize a 2-port spectrum.
pub fn to_string(spec: &FrequencySpectrum, comment: &str) -> Result<String> {
    spec.require_two_port()?;
    let mut s = String::new();
    for line in comment.lines() {
        let _ = writeln!(s, "! {line}");
    }
    s.push_str("# HZ S RI R 50\n");
    for (k, m) in spec.matrices.iter().enumerate() {
        let _ = write!(s, "{:.15e}", spec.grid.freq(k));
        for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let z = m[(i, j)];
            let _ = write!(s, " {:.15e} {:.15e}", z.re, z.im);
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write(path: &Path, spec: &FrequencySpectrum, comment: &str) -> Result<()> {
    std::fs::write(path, to_string(spec, comment)?).map_err(|e| Error::io(path, e))
}

fn check_option_line(line: &str, lineno: usize) -> Result<()> {
    let tokens: Vec<String> = line[1..]
        .split_whitespace()
        .map(|t| t.to_ascii_uppercase())
        .collect();
    let mut bad = Vec::new();
    let mut k = 0;
    while k < tokens.len() {
        let t = tokens[k].as_str();
        match t {
            "HZ" | "S" | "RI" => {}
            "R" => {
                let r = tokens.get(k + 1).ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: "reference impedance missing after R".into(),
                })?;
                if r.parse::<f64>().ok() != Some(50.0) {
                    bad.push(format!("R {r}"));
                }
                k += 1;
            }
            _ => bad.push(t.to_string()),
        }
        k += 1;
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Unsupported(bad.join("/")))
    }
}

/// Port count implied by a `.sNp` extension.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    ext.strip_prefix('s')?.strip_suffix('p')?.parse().ok()
}

/// Parse an `n`-port file.
pub fn parse_nport(text: &str, n: usize) -> Result<FrequencySpectrum> {
    if n == 0 {
        return Err(Error::Unsupported("0-port file".into()));
    }
    let mut option_seen = false;
    let mut numbers: Vec<(usize, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if option_seen {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "second option line".into(),
                });
            }
            check_option_line(line, i + 1)?;
            option_seen = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::Unsupported("Touchstone 2.0 keywords".into()));
        }
        for tok in line.split_whitespace() {
            let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("'{tok}' is not a number"),
            })?;
            numbers.push((i + 1, v));
        }
    }
    if !option_seen {
        return Err(Error::Parse {
            line: 1,
            message: "option line '# HZ S RI R 50' missing".into(),
        });
    }
    let per_point = 1 + 2 * n * n;
    if numbers.is_empty() || numbers.len() % per_point != 0 {
        let line = numbers.last().map_or(1, |x| x.0);
        return Err(Error::Parse {
            line,
            message: format!(
                "{} values is not a whole number of {per_point}-value records",
                numbers.len()
            ),
        });
    }
    let mut freqs = Vec::new();
    let mut matrices = Vec::new();
    for rec in numbers.chunks(per_point) {
        freqs.push(rec[0]);
        let vals = &rec[1..];
        let m = CMatrix::from_fn(n, n, |i, j| {
            // Two-port records are column-major, larger ones row-major.
            let k = if n == 2 { j * 2 + i } else { i * n + j };
            Complex64::new(vals[2 * k].1, vals[2 * k + 1].1)
        });
        matrices.push(m);
    }
    let grid = uniform_grid(&freqs)?;
    FrequencySpectrum::new(grid, matrices)
}

fn uniform_grid(freqs: &[(usize, f64)]) -> Result<FrequencyGrid> {
    if freqs.len() < 2 {
        return Err(Error::Unsupported("single-frequency file".into()));
    }
    let (first, last) = (freqs[0].1, freqs[freqs.len() - 1].1);
    let grid = FrequencyGrid::new(first, last, freqs.len()).map_err(|e| Error::Parse {
        line: freqs[0].0,
        message: e.to_string(),
    })?;
    let h = grid.step();
    for (k, &(line, f)) in freqs.iter().enumerate() {
        if (f - grid.freq(k)).abs() > 1e-6 * h {
            return Err(Error::Parse {
                line,
                message: format!("frequency {f} breaks the uniform grid"),
            });
        }
    }
    Ok(grid)
}

/// Read a 2-port file; anything else is rejected.
pub fn read(path: &Path) -> Result<FrequencySpectrum> {
    if let Some(n) = ports_from_extension(path) {
        if n != 2 {
            return Err(Error::Unsupported(format!("{n}-port file")));
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_nport(&text, 2)
}

/// Read a `.sNp` file of any port count.
pub fn read_nport(path: &Path) -> Result<FrequencySpectrum> {
    let n = ports_from_extension(path)
        .ok_or_else(|| Error::Unsupported(format!("extension of {}", path.display())))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_nport(&text, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_ab_ring, RingParams};
    use crate::sweep::sweep;

    #[test]
    fn two_port_round_trip() {
        let ring = build_ab_ring(&RingParams::balanced(0.6, 0.18)).unwrap();
        let spec = sweep(&ring, &FrequencyGrid::new(8e9, 9e9, 51).unwrap()).unwrap();
        let text = to_string(&spec, "ring").unwrap();
        assert!(text.starts_with("! ring\n# HZ S RI R 50\n"));
        let back = parse_nport(&text, 2).unwrap();
        assert_eq!(back.grid.n_points, 51);
        for (a, b) in spec.matrices.iter().zip(&back.matrices) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).norm() <= 1e-14 * x.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn column_order_of_two_port() {
        let text = "# HZ S RI R 50\n1e9 1 0 2 0 3 0 4 0\n2e9 1 0 2 0 3 0 4 0\n";
        let s = parse_nport(text, 2).unwrap();
        assert_eq!(s.matrices[0][(1, 0)].re, 2.0);
        assert_eq!(s.matrices[0][(0, 1)].re, 3.0);
    }

    #[test]
    fn other_dialects_name_the_tokens() {
        let err = parse_nport("# GHZ S MA R 50\n1 0 0 0 0 0 0 0 0\n", 2).unwrap_err();
        assert_eq!(err.to_string(), "unsupported: GHZ/MA");
        let err = parse_nport("# HZ Y RI R 75\n", 2).unwrap_err();
        assert_eq!(err.to_string(), "unsupported: Y/R 75");
    }

    #[test]
    fn malformed_records() {
        assert!(matches!(
            parse_nport("# HZ S RI R 50\n1e9 1 0 2\n", 2),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_nport("# HZ S RI R 50\n1e9 1 0 0 0 0 0 0 0\n2e9 1 0 0 0 0 0 0 0\n4e9 1 0 0 0 0 0 0 0\n", 2),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_nport("1e9 1 0 0 0 0 0 0 0\n", 2),
            Err(Error::Parse { .. })
        ));
    }
}
