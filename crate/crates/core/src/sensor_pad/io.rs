//! Plain-text taxel layout files.
//!
//! ```text
//! rows 12
//! cols 32
//! pitch_u 0.002
//! pitch_v 0.002
//! margin 0.001
//! orientation 6.123233995736766e-17 0 0 -1
//! taxels 384
//! -0.011 -0.031 0.002
//! ...
//! ```
//!
//! The orientation line is informational; it is always `Euler(0, 0, −π)`.

use std::io::{BufRead, Write};

use nalgebra::Point3;

use super::lattice::TaxelArray;
use super::SensorPadError;

pub fn write_taxels(taxels: &TaxelArray, out: &mut dyn Write) -> std::io::Result<()> {
    let q = taxels.orientation_local();
    writeln!(out, "rows {}", taxels.rows())?;
    writeln!(out, "cols {}", taxels.cols())?;
    writeln!(out, "pitch_u {:?}", taxels.pitch_u())?;
    writeln!(out, "pitch_v {:?}", taxels.pitch_v())?;
    writeln!(out, "margin {:?}", taxels.margin())?;
    writeln!(out, "orientation {:?} {:?} {:?} {:?}", q.w, q.i, q.j, q.k)?;
    writeln!(out, "taxels {}", taxels.len())?;
    for p in taxels.positions_local() {
        writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn read_taxels(input: impl BufRead) -> Result<TaxelArray, SensorPadError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(
        |(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')),
    );

    let mut header = |key: &str| -> Result<(usize, Vec<String>), SensorPadError> {
        let (line, text) = lines.next().ok_or_else(|| SensorPadError::Parse {
            line: 0,
            message: format!("missing `{key}` line"),
        })?;
        let text = text?;
        let mut words = text.split_whitespace();
        if words.next() != Some(key) {
            return Err(SensorPadError::Parse {
                line,
                message: format!("expected `{key}`, found `{}`", text.trim()),
            });
        }
        Ok((line, words.map(str::to_owned).collect()))
    };
    let rows = parse_one::<usize>(header("rows")?)?;
    let cols = parse_one::<usize>(header("cols")?)?;
    let pitch_u = parse_one::<f64>(header("pitch_u")?)?;
    let pitch_v = parse_one::<f64>(header("pitch_v")?)?;
    let margin = parse_one::<f64>(header("margin")?)?;
    let (line, q) = header("orientation")?;
    if q.len() != 4 {
        return Err(SensorPadError::Parse {
            line,
            message: "orientation needs 4 components (w x y z)".into(),
        });
    }
    let count = parse_one::<usize>(header("taxels")?)?;

    let mut positions = Vec::with_capacity(count);
    for (line, text) in lines.by_ref().take(count) {
        let values = parse_words::<f64>(line, &text?)?;
        if values.len() != 3 {
            return Err(SensorPadError::Parse {
                line,
                message: format!("expected `x y z`, found {} values", values.len()),
            });
        }
        positions.push(Point3::new(values[0], values[1], values[2]));
    }
    if positions.len() != count {
        return Err(SensorPadError::Parse {
            line: 0,
            message: format!("expected {count} taxel lines, found {}", positions.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(SensorPadError::Parse {
            line,
            message: "trailing data after taxel list".into(),
        });
    }
    TaxelArray::new(rows, cols, positions, pitch_u, pitch_v, margin)
}

fn parse_words<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>, SensorPadError> {
    text.split_whitespace()
        .map(|w| {
            w.parse::<T>().map_err(|_| SensorPadError::Parse {
                line,
                message: format!("cannot parse `{w}`"),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(
    (line, words): (usize, Vec<String>),
) -> Result<T, SensorPadError> {
    if words.len() != 1 {
        return Err(SensorPadError::Parse {
            line,
            message: format!("expected one value, found {}", words.len()),
        });
    }
    parse_words(line, &words[0]).map(|mut v| v.remove(0))
}
