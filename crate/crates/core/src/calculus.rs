//! Discrete stochastic calculus on a finite basis: compensators, brackets,
//! stochastic integrals and the Doléans-Dade exponential.
//!
//! On a finite space with a finite horizon every local martingale is a true
//! martingale, so "local" is dropped throughout. A process is a martingale
//! when `E[ΔX_k | F_{k-}] = 0` at every tick. There is no continuous or
//! totally inaccessible part: `X^m` is purely the accessible jump part.

use num::{One, Zero};

use crate::basis::{block_average, Filtration, SampleSpace};
use crate::error::{Error, Result};
use crate::process::{Process, StoppingTime};
use crate::rational::Q;

/// `X = X_0 + X^m + X^v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub martingale_part: Process,
    pub drift_part: Process,
}

/// First tick at which `E[ΔX_k | F_{k-}] != 0`, or `None` for a martingale.
pub fn martingale_defect(space: &SampleSpace, filt: &Filtration, x: &Process) -> Result<Option<usize>> {
    x.check_adapted(filt)?;
    for k in 1..=filt.horizon() {
        for i in 0..x.dim() {
            let jumps = x.jump_slice(k, i);
            if filt
                .pre(k)
                .blocks()
                .iter()
                .any(|b| !block_average(space, b, &jumps).is_zero())
            {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

pub fn is_martingale(space: &SampleSpace, filt: &Filtration, x: &Process) -> Result<bool> {
    Ok(martingale_defect(space, filt, x)?.is_none())
}

/// Predictable dual projection `A^{F·p}`: zero at 0 with increments
/// `E[ΔA_k | F_{k-}]`.
pub fn compensator(space: &SampleSpace, filt: &Filtration, a: &Process) -> Result<Process> {
    a.check_adapted(filt)?;
    Ok(compensator_unchecked(space, filt, a))
}

/// Same as [`compensator`] without the adaptedness check; used for
/// projections of products that are adapted by construction.
pub(crate) fn compensator_unchecked(space: &SampleSpace, filt: &Filtration, a: &Process) -> Process {
    let n = space.len();
    let big_k = filt.horizon();
    let mut incr = vec![vec![vec![Q::zero(); a.dim()]; big_k]; n];
    for k in 1..=big_k {
        for i in 0..a.dim() {
            let jumps = a.jump_slice(k, i);
            for b in filt.pre(k).blocks() {
                let m = block_average(space, b, &jumps);
                for &w in b {
                    incr[w][k - 1][i] = m.clone();
                }
            }
        }
    }
    Process::from_jumps(&incr, a.dim())
}

pub fn canonical_decomposition(space: &SampleSpace, filt: &Filtration, x: &Process) -> Result<Decomposition> {
    let drift_part = compensator(space, filt, x)?;
    let martingale_part = x.minus_initial().sub(&drift_part);
    Ok(Decomposition {
        martingale_part,
        drift_part,
    })
}

/// `[X, Y]_k = Σ_{j<=k} ΔX_j ΔY_jᵀ`, flattened row-major: component
/// `i * dim(Y) + j` holds `[X_i, Y_j]`.
pub fn bracket(x: &Process, y: &Process) -> Process {
    assert_eq!(x.num_outcomes(), y.num_outcomes(), "bracket of processes on different spaces");
    assert_eq!(x.horizon(), y.horizon(), "bracket of processes on different grids");
    let (dx, dy) = (x.dim(), y.dim());
    let jumps: Vec<Vec<Vec<Q>>> = (0..x.num_outcomes())
        .map(|w| {
            (1..=x.horizon())
                .map(|k| {
                    let (jx, jy) = (x.jump(w, k), y.jump(w, k));
                    let mut out = Vec::with_capacity(dx * dy);
                    for a in &jx {
                        for b in &jy {
                            out.push(a * b);
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    Process::from_jumps(&jumps, dx * dy)
}

/// `(H·X)_k = Σ_{j<=k} H_jᵀ ΔX_j`; `H_k` must be `F_{k-}`-measurable.
pub fn stoch_integral(filt: &Filtration, h: &Process, x: &Process) -> Result<Process> {
    h.check_predictable(filt)?;
    if h.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: h.dim(),
        });
    }
    Ok(integral_unchecked(h, x))
}

pub(crate) fn integral_unchecked(h: &Process, x: &Process) -> Process {
    let jumps: Vec<Vec<Vec<Q>>> = (0..x.num_outcomes())
        .map(|w| {
            (1..=x.horizon())
                .map(|k| {
                    let v = h
                        .value(w, k)
                        .iter()
                        .zip(x.jump(w, k))
                        .fold(Q::zero(), |acc, (a, b)| acc + a * b);
                    vec![v]
                })
                .collect()
        })
        .collect();
    Process::from_jumps(&jumps, 1)
}

/// `ℰ(X)_k = Π_{j<=k} (1 + ΔX_j)` for a scalar `X`.
pub fn doleans_exp(x: &Process) -> Process {
    let values = (0..x.num_outcomes())
        .map(|w| {
            let mut acc = Q::one();
            let mut row = vec![acc.clone()];
            for k in 1..=x.horizon() {
                acc *= Q::one() + &x.jump(w, k)[0];
                row.push(acc.clone());
            }
            row
        })
        .collect();
    Process::scalar(values)
}

/// `X^T`, frozen after `T(ω)`; `T` must be a stopping time of `filt`.
pub fn stop(filt: &Filtration, x: &Process, t: &StoppingTime) -> Result<Process> {
    t.check_stopping_time(filt)?;
    Ok(freeze(x, t))
}

/// `X^T` without checking that `T` is a stopping time of any particular
/// filtration.
pub fn freeze(x: &Process, t: &StoppingTime) -> Process {
    Process::from_fn(x.num_outcomes(), x.horizon(), x.dim(), |w, k| {
        let k = t.value(w).map_or(k, |t| k.min(t));
        x.value(w, k).to_vec()
    })
}
