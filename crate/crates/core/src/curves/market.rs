use std::path::Path;

use crate::error::{domain, Error, Result};

/// Piecewise-constant hazard curve. Piece `i` applies on `(t_{i-1}, t_i]`
/// with `t_{-1} = 0`; the last hazard is extended flat beyond the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketCurve {
    ends: Vec<f64>,
    hazards: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MarketCurve {
    pub fn piecewise(ends: Vec<f64>, hazards: Vec<f64>) -> Result<Self> {
        if ends.is_empty() || ends.len() != hazards.len() {
            return Err(domain(format!(
                "need one hazard per knot and at least one knot, got {} knots and {} hazards",
                ends.len(),
                hazards.len()
            )));
        }
        let mut prev = 0.0;
        let mut cumulative = Vec::with_capacity(ends.len());
        let mut acc = 0.0;
        for (&t, &h) in ends.iter().zip(&hazards) {
            if !(t.is_finite() && t > prev) {
                return Err(domain(format!("knot times must be finite and strictly increasing from 0, got {t}")));
            }
            if !(h.is_finite() && h >= 0.0) {
                return Err(domain(format!("hazard must be finite and >= 0, got {h}")));
            }
            acc += h * (t - prev);
            cumulative.push(acc);
            prev = t;
        }
        Ok(Self { ends, hazards, cumulative })
    }

    pub fn flat(hazard: f64, horizon: f64) -> Result<Self> {
        Self::piecewise(vec![horizon], vec![hazard])
    }

    /// Parses `time hazard` rows (whitespace or comma separated). Blank
    /// lines and `#` comments are skipped; a non-numeric first row is taken
    /// as a header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ends = Vec::new();
        let mut hazards = Vec::new();
        let mut seen_row = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
            let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
            if !seen_row && parsed.iter().all(Option::is_none) {
                seen_row = true;
                continue;
            }
            seen_row = true;
            match parsed.as_slice() {
                [Some(t), Some(h)] => {
                    ends.push(*t);
                    hazards.push(*h);
                }
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected two numbers `time hazard`, got {line:?}"),
                    })
                }
            }
        }
        if ends.is_empty() {
            return Err(Error::Parse { line: 0, message: "no hazard rows".into() });
        }
        Self::piecewise(ends, hazards).map_err(|e| Error::Parse { line: 0, message: e.to_string() })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn horizon(&self) -> f64 {
        *self.ends.last().expect("non-empty curve")
    }

    fn piece(&self, t: f64) -> usize {
        self.ends.partition_point(|&e| e < t).min(self.ends.len() - 1)
    }

    pub fn hazard(&self, t: f64) -> f64 {
        self.hazards[self.piece(t)]
    }

    /// `∫₀ᵗ h(s) ds`.
    pub fn integrated_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.piece(t);
        let (start, base) = if i == 0 { (0.0, 0.0) } else { (self.ends[i - 1], self.cumulative[i - 1]) };
        base + self.hazards[i] * (t - start)
    }

    /// `P^M(0,t) = exp(−∫₀ᵗ h)`.
    pub fn survival(&self, t: f64) -> f64 {
        (-self.integrated_hazard(t)).exp()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ends.iter().copied().zip(self.hazards.iter().copied())
    }
}
