//! Unit-suffixed physical quantities. Everything is converted to SI at load:
//! metres, seconds, rad/s for angular frequency and Hz for cyclic frequency.

use std::f64::consts::TAU;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Time,
    /// Returned in rad/s; `Hz` and `kHz` inputs are multiplied by 2 pi.
    AngularFrequency,
    /// Returned in Hz; `rad/s` inputs are divided by 2 pi.
    CyclicFrequency,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::Time => "time",
            Dim::AngularFrequency | Dim::CyclicFrequency => "frequency",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        match self {
            Dim::Length => match unit {
                "m" => Some(1.0),
                "mm" => Some(1e-3),
                "um" | "µm" | "μm" => Some(1e-6),
                "nm" => Some(1e-9),
                _ => None,
            },
            Dim::Time => match unit {
                "s" => Some(1.0),
                "ms" => Some(1e-3),
                "us" | "µs" | "μs" => Some(1e-6),
                _ => None,
            },
            Dim::AngularFrequency => match unit {
                "rad/s" | "rad" => Some(1.0),
                "Hz" | "hz" => Some(TAU),
                "kHz" | "khz" => Some(TAU * 1e3),
                _ => None,
            },
            Dim::CyclicFrequency => match unit {
                "rad/s" | "rad" => Some(1.0 / TAU),
                "Hz" | "hz" => Some(1.0),
                "kHz" | "khz" => Some(1e3),
                _ => None,
            },
        }
    }
}

/// Splits `"30um"` into `(30.0, "um")` by taking the longest numeric prefix.
fn split(text: &str) -> Option<(f64, &str)> {
    let text = text.trim();
    (1..=text.len())
        .rev()
        .filter(|&i| text.is_char_boundary(i))
        .find_map(|i| text[..i].trim().parse::<f64>().ok().map(|v| (v, text[i..].trim())))
}

/// Parses a quantity that must carry a unit of dimension `dim`.
pub fn parse(text: &str, dim: Dim) -> Result<f64, CliError> {
    parse_with_default(text, dim, None)
}

/// Like [`parse`], but a bare number is read in `default` units.
pub fn parse_with_default(text: &str, dim: Dim, default: Option<&str>) -> Result<f64, CliError> {
    let (value, unit) =
        split(text).ok_or_else(|| CliError::config(format!("`{text}` is not a number with a unit")))?;
    let unit = match (unit.is_empty(), default) {
        (true, Some(d)) => d,
        (true, None) => {
            return Err(CliError::config(format!(
                "`{text}` needs a {} unit suffix",
                dim.name()
            )))
        }
        (false, _) => unit,
    };
    let scale = dim
        .scale(unit)
        .ok_or_else(|| CliError::config(format!("unknown {} unit `{unit}` in `{text}`", dim.name())))?;
    if !value.is_finite() {
        return Err(CliError::config(format!("`{text}` is not finite")));
    }
    Ok(value * scale)
}

pub fn parse_hz(text: &str) -> Result<f64, CliError> {
    parse(text, Dim::CyclicFrequency)
}
