//! Outcome-by-tick arrays of exact rational vectors, and stopping times.

use num::Zero;

use crate::basis::Filtration;
use crate::error::{Error, Result};
use crate::rational::Q;

/// `values[ω][k]` is the vector value at tick `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process {
    dim: usize,
    values: Vec<Vec<Vec<Q>>>,
}

impl Process {
    pub fn zeros(n: usize, horizon: usize, dim: usize) -> Self {
        Process {
            dim,
            values: vec![vec![vec![Q::zero(); dim]; horizon + 1]; n],
        }
    }

    pub fn from_fn(n: usize, horizon: usize, dim: usize, f: impl Fn(usize, usize) -> Vec<Q>) -> Self {
        let values = (0..n)
            .map(|w| {
                (0..=horizon)
                    .map(|k| {
                        let v = f(w, k);
                        assert_eq!(v.len(), dim, "process value of wrong dimension");
                        v
                    })
                    .collect()
            })
            .collect();
        Process { dim, values }
    }

    /// Scalar process from `values[ω][k]`.
    pub fn scalar(values: Vec<Vec<Q>>) -> Self {
        Process {
            dim: 1,
            values: values
                .into_iter()
                .map(|row| row.into_iter().map(|v| vec![v]).collect())
                .collect(),
        }
    }

    /// Process with `X_0 = 0` and the given jumps `jumps[ω][k-1]` at ticks `1..=K`.
    pub fn from_jumps(jumps: &[Vec<Vec<Q>>], dim: usize) -> Self {
        let values = jumps
            .iter()
            .map(|row| {
                let mut acc = vec![Q::zero(); dim];
                let mut out = vec![acc.clone()];
                for j in row {
                    for (a, b) in acc.iter_mut().zip(j) {
                        *a += b;
                    }
                    out.push(acc.clone());
                }
                out
            })
            .collect();
        Process { dim, values }
    }

    pub fn try_new(dim: usize, values: Vec<Vec<Vec<Q>>>) -> Result<Self> {
        let ticks = values.first().map_or(0, Vec::len);
        for row in &values {
            if row.len() != ticks {
                return Err(Error::DimensionMismatch {
                    expected: ticks,
                    found: row.len(),
                });
            }
            for v in row {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    });
                }
            }
        }
        Ok(Process { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outcomes(&self) -> usize {
        self.values.len()
    }

    /// Last tick index `K`.
    pub fn horizon(&self) -> usize {
        self.values.first().map_or(0, |r| r.len() - 1)
    }

    pub fn value(&self, w: usize, k: usize) -> &[Q] {
        &self.values[w][k]
    }

    pub fn value_mut(&mut self, w: usize, k: usize) -> &mut Vec<Q> {
        &mut self.values[w][k]
    }

    /// First component, for scalar processes.
    pub fn at(&self, w: usize, k: usize) -> &Q {
        &self.values[w][k][0]
    }

    pub fn values(&self) -> &[Vec<Vec<Q>>] {
        &self.values
    }

    /// `ΔX_k(ω)`, zero at tick 0.
    pub fn jump(&self, w: usize, k: usize) -> Vec<Q> {
        if k == 0 {
            return vec![Q::zero(); self.dim];
        }
        self.values[w][k]
            .iter()
            .zip(&self.values[w][k - 1])
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Component `i` of `ΔX_k` as a function of the outcome.
    pub fn jump_slice(&self, k: usize, i: usize) -> Vec<Q> {
        (0..self.num_outcomes()).map(|w| self.jump(w, k)[i].clone()).collect()
    }

    /// Component `i` of `X_k` as a function of the outcome.
    pub fn slice(&self, k: usize, i: usize) -> Vec<Q> {
        self.values.iter().map(|row| row[k][i].clone()).collect()
    }

    pub fn component(&self, i: usize) -> Process {
        Process {
            dim: 1,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| vec![v[i].clone()]).collect())
                .collect(),
        }
    }

    /// Stacks scalar or vector processes on the same grid into one process.
    pub fn stack(parts: &[Process]) -> Process {
        let n = parts[0].num_outcomes();
        let horizon = parts[0].horizon();
        let dim = parts.iter().map(Process::dim).sum();
        Process::from_fn(n, horizon, dim, |w, k| {
            parts.iter().flat_map(|p| p.value(w, k).iter().cloned()).collect()
        })
    }

    pub fn zip_with(&self, other: &Process, f: impl Fn(&Q, &Q) -> Q) -> Process {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        assert_eq!(self.values.len(), other.values.len());
        Process {
            dim: self.dim,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(ra, rb)| {
                    ra.iter()
                        .zip(rb)
                        .map(|(va, vb)| va.iter().zip(vb).map(|(a, b)| f(a, b)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Process) -> Process {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Process) -> Process {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: &Q) -> Process {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(&Q) -> Q) -> Process {
        Process {
            dim: self.dim,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.iter().map(&f).collect()).collect())
                .collect(),
        }
    }

    /// `X - X_0`.
    pub fn minus_initial(&self) -> Process {
        Process {
            dim: self.dim,
            values: self
                .values
                .iter()
                .map(|row| {
                    let x0 = row[0].clone();
                    row.iter()
                        .map(|v| v.iter().zip(&x0).map(|(a, b)| a - b).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values
            .iter()
            .all(|row| row.iter().all(|v| v.iter().all(Zero::is_zero)))
    }

    fn check_shape(&self, filt: &Filtration) -> Result<()> {
        if self.num_outcomes() != filt.num_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: filt.num_outcomes(),
                found: self.num_outcomes(),
            });
        }
        if self.horizon() != filt.horizon() {
            return Err(Error::DimensionMismatch {
                expected: filt.horizon(),
                found: self.horizon(),
            });
        }
        Ok(())
    }

    /// `X_k` constant on the atoms of `F_k` at every tick.
    pub fn check_adapted(&self, filt: &Filtration) -> Result<()> {
        self.check_shape(filt)?;
        for k in 0..=filt.horizon() {
            if !self.constant_on(filt.at(k), |w| self.values[w][k].clone()) {
                return Err(Error::NotAdapted { tick: k });
            }
        }
        Ok(())
    }

    /// `X_0` is `F_0`-measurable and `X_k` is `F_{k-}`-measurable for `k >= 1`.
    /// For an adapted process this is the same as every jump being
    /// `F_{k-}`-measurable.
    pub fn check_predictable(&self, filt: &Filtration) -> Result<()> {
        self.check_shape(filt)?;
        for k in 0..=filt.horizon() {
            if !self.constant_on(filt.pre(k), |w| self.values[w][k].clone()) {
                return Err(Error::NotPredictable { tick: k });
            }
        }
        Ok(())
    }

    fn constant_on(&self, part: &crate::basis::Partition, f: impl Fn(usize) -> Vec<Q>) -> bool {
        part.blocks().iter().all(|b| {
            let first = f(b[0]);
            b[1..].iter().all(|&w| f(w) == first)
        })
    }
}

/// A random tick in `{0..K}` or `+∞` (`None`), per outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingTime {
    value: Vec<Option<usize>>,
}

impl StoppingTime {
    pub fn new(value: Vec<Option<usize>>) -> Self {
        StoppingTime { value }
    }

    pub fn constant(n: usize, k: usize) -> Self {
        StoppingTime {
            value: vec![Some(k); n],
        }
    }

    pub fn infinite(n: usize) -> Self {
        StoppingTime {
            value: vec![None; n],
        }
    }

    pub fn value(&self, w: usize) -> Option<usize> {
        self.value[w]
    }

    pub fn values(&self) -> &[Option<usize>] {
        &self.value
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// True when tick `k` lies in `[0, T(ω)]`.
    pub fn covers(&self, w: usize, k: usize) -> bool {
        self.value[w].is_none_or(|t| k <= t)
    }

    /// Every finite value lies on the grid `{0..K}`.
    pub fn check_random_time(&self, horizon: usize) -> Result<()> {
        if self.value.iter().flatten().any(|&t| t > horizon) {
            return Err(Error::NotARandomTime);
        }
        Ok(())
    }

    /// `{T <= k}` is a union of `F_k` atoms for every tick.
    pub fn check_stopping_time(&self, filt: &Filtration) -> Result<()> {
        if self.value.len() != filt.num_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: filt.num_outcomes(),
                found: self.value.len(),
            });
        }
        self.check_random_time(filt.horizon())?;
        for k in 0..=filt.horizon() {
            let set: Vec<bool> = self.value.iter().map(|t| t.is_some_and(|t| t <= k)).collect();
            if !filt.at(k).contains_set(&set) {
                return Err(Error::NotAStoppingTime { tick: k });
            }
        }
        Ok(())
    }
}
