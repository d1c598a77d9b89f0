use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use kzsim::ai::log_grid;
use kzsim::fit::{FitWindow, Sample};

use crate::config;
use crate::Invalid;

pub mod ai;
pub mod kzm;
pub mod lz;
pub mod oracle;
pub mod pulse;

pub struct Context {
    pub file: Option<Map<String, Value>>,
    pub out: PathBuf,
    pub tol: Option<f64>,
}

impl Context {
    pub fn resolve<T>(&self, flags: &impl Serialize) -> Result<T, Invalid>
    where
        T: Default + Serialize + DeserializeOwned,
    {
        config::resolve(self.file.as_ref(), flags, self.tol)
    }
}

/// `lo,hi,points` for a log-spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid(pub f64, pub f64, pub usize);

impl LogGrid {
    pub fn points(&self) -> Result<Vec<f64>, Invalid> {
        let LogGrid(lo, hi, n) = *self;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(Invalid(format!("bad grid {lo},{hi},{n}: need 0 < lo <= hi and points >= 1")));
        }
        Ok(log_grid(lo, hi, n))
    }
}

pub fn parse_grid(s: &str) -> Result<LogGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected lo,hi,points, got {s:?}"));
    };
    let f = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(LogGrid(f(lo)?, f(hi)?, n.parse().map_err(|e| format!("{n:?}: {e}"))?))
}

/// `lo,hi` bounds of a fit window.
pub fn parse_bounds(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(format!("expected lo,hi, got {s:?}"));
    };
    let f = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([f(lo)?, f(hi)?])
}

/// Explicit values win over a grid; giving both is an error.
pub fn values_or_grid(values: &Option<Vec<f64>>, grid: &Option<LogGrid>, default: LogGrid) -> Result<Vec<f64>, Invalid> {
    match (values, grid) {
        (Some(_), Some(_)) => Err(Invalid("give either an explicit list or a grid, not both".into())),
        (Some(v), None) if v.is_empty() => Err(Invalid("empty value list".into())),
        (Some(v), None) => Ok(v.clone()),
        (None, Some(g)) => g.points(),
        (None, None) => default.points(),
    }
}

pub fn window(bounds: &Option<[f64; 2]>, xs: &[f64]) -> Result<FitWindow, Invalid> {
    let w = match bounds {
        Some([lo, hi]) => FitWindow::new(*lo, *hi),
        None => {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            FitWindow::new(lo, hi)
        }
    };
    w.map_err(|e| Invalid(e.to_string()))
}

/// Reads `x,y[,w]` rows, skipping `#` comments and a non-numeric header row.
pub fn read_samples(path: &Path) -> Result<Vec<Sample>, Invalid> {
    let bad = |m: String| Invalid(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let nums: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match (nums, line) {
            (Ok(v), _) if v.len() == 2 => out.push(Sample::new(v[0], v[1])),
            (Ok(v), _) if v.len() == 3 => out.push(Sample::weighted(v[0], v[1], v[2])),
            (Ok(v), _) => return Err(bad(format!("expected 2 or 3 columns, got {}", v.len()))),
            (Err(_), 0) => continue,
            (Err(e), _) => return Err(bad(format!("row {}: {e}", line + 1))),
        }
    }
    Ok(out)
}
