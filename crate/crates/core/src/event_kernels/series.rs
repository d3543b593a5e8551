//! Refinement diagnostics for the finiteness of
//! `∫ φᵀ c φ dt + Σ (φᵀΔN / (1 + φᵀΔN))²`. Floating point; every result is
//! approximate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of the bracket density `c(t)` and of `φ(t)` on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLevel {
    pub t: Vec<f64>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub phi: Vec<Vec<f64>>,
}

impl GridLevel {
    /// Scalar `c` and `φ`.
    pub fn scalar(t: Vec<f64>, c: Vec<f64>, phi: Vec<f64>) -> Self {
        GridLevel {
            t,
            c: c.into_iter().map(|v| vec![vec![v]]).collect(),
            phi: phi.into_iter().map(|v| vec![v]).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesInput {
    /// Successively refined grids, coarsest first.
    #[serde(default)]
    pub levels: Vec<GridLevel>,
    /// The values `φᵀΔN` at the jump times, in order.
    #[serde(default)]
    pub jumps: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub growth: f64,
    pub runs: usize,
    pub rel_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            growth: 1.5,
            runs: 4,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub values: Vec<f64>,
    pub verdict: SeriesVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub approximate: bool,
    pub integral: Option<SeriesSummary>,
    pub jumps: Option<SeriesSummary>,
    pub verdict: SeriesVerdict,
}

fn quad(c: &[Vec<f64>], phi: &[f64]) -> Result<f64> {
    if c.len() != phi.len() || c.iter().any(|r| r.len() != phi.len()) {
        return Err(Error::BadGrid("c and φ dimensions disagree".into()));
    }
    Ok(c.iter()
        .zip(phi)
        .map(|(row, a)| a * row.iter().zip(phi).map(|(x, b)| x * b).sum::<f64>())
        .sum())
}

/// Trapezoid rule for `φᵀcφ`. A non-finite value is tolerated only at an
/// endpoint, where its cell is dropped.
fn trapezoid(level: &GridLevel) -> Result<f64> {
    let n = level.t.len();
    if n < 2 {
        return Err(Error::BadGrid("a grid needs at least two points".into()));
    }
    if level.c.len() != n || level.phi.len() != n {
        return Err(Error::BadGrid("sample count differs from grid size".into()));
    }
    if level.t.iter().any(|t| !t.is_finite()) || level.t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadGrid("grid points must be finite and increasing".into()));
    }
    let f = (0..n)
        .map(|i| quad(&level.c[i], &level.phi[i]))
        .collect::<Result<Vec<_>>>()?;
    if (1..n - 1).any(|i| !f[i].is_finite()) {
        return Err(Error::BadGrid("non-finite sample inside the grid".into()));
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        if !f[i].is_finite() || !f[i + 1].is_finite() {
            continue;
        }
        total += 0.5 * (f[i] + f[i + 1]) * (level.t[i + 1] - level.t[i]);
    }
    Ok(total)
}

fn classify(values: &[f64], th: &Thresholds) -> SeriesVerdict {
    let n = values.len();
    if n > th.runs && values[n - th.runs - 1..].windows(2).all(|w| w[0] > 0.0 && w[1] >= th.growth * w[0]) {
        return SeriesVerdict::Divergent;
    }
    if n >= 2 {
        let (a, b) = (values[n - 2], values[n - 1]);
        let scale = b.abs().max(f64::MIN_POSITIVE);
        if (a == b) || (b - a).abs() / scale <= th.rel_tol {
            return SeriesVerdict::Finite;
        }
    }
    SeriesVerdict::Inconclusive
}

pub fn series_diagnostics(input: &SeriesInput, th: &Thresholds) -> Result<SeriesReport> {
    if input.levels.is_empty() && input.jumps.is_empty() {
        return Err(Error::BadGrid("no grid levels and no jumps".into()));
    }
    let integral = if input.levels.is_empty() {
        None
    } else {
        if input.levels.windows(2).any(|w| w[1].t.len() <= w[0].t.len()) {
            return Err(Error::BadGrid("levels must refine".into()));
        }
        let values = input.levels.iter().map(trapezoid).collect::<Result<Vec<_>>>()?;
        let verdict = classify(&values, th);
        Some(SeriesSummary { values, verdict })
    };
    let jumps = if input.jumps.is_empty() {
        None
    } else {
        if input.jumps.iter().any(|x| !x.is_finite() || *x <= -1.0) {
            return Err(Error::BadGrid("jump values must be finite and exceed -1".into()));
        }
        // partial sums at dyadic prefix lengths, then the full length
        let mut values = Vec::new();
        let mut sum = 0.0;
        let mut next = 1;
        for (i, x) in input.jumps.iter().enumerate() {
            let r = x / (1.0 + x);
            sum += r * r;
            if i + 1 == next || i + 1 == input.jumps.len() {
                values.push(sum);
                next *= 2;
            }
        }
        let verdict = classify(&values, th);
        Some(SeriesSummary { values, verdict })
    };
    let parts: Vec<SeriesVerdict> = integral.iter().chain(&jumps).map(|s| s.verdict).collect();
    let verdict = if parts.contains(&SeriesVerdict::Divergent) {
        SeriesVerdict::Divergent
    } else if parts.iter().all(|v| *v == SeriesVerdict::Finite) {
        SeriesVerdict::Finite
    } else {
        SeriesVerdict::Inconclusive
    };
    Ok(SeriesReport {
        approximate: true,
        integral,
        jumps,
        verdict,
    })
}

/// Uniform grids on `[a, b]` with `base · 2^j` cells for `j < levels`.
pub fn sample_levels(
    c: impl Fn(f64) -> Vec<Vec<f64>>,
    phi: impl Fn(f64) -> Vec<f64>,
    a: f64,
    b: f64,
    base: usize,
    levels: usize,
) -> Vec<GridLevel> {
    (0..levels)
        .map(|j| {
            let cells = base << j;
            let t: Vec<f64> = (0..=cells).map(|i| a + (b - a) * i as f64 / cells as f64).collect();
            GridLevel {
                c: t.iter().map(|&s| c(s)).collect(),
                phi: t.iter().map(|&s| phi(s)).collect(),
                t,
            }
        })
        .collect()
}
