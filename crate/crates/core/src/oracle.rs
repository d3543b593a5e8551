//! Independent no-arbitrage oracle.
//!
//! Decides by linear feasibility whether a strictly positive `Z` with
//! `Z_0 = 1` exists such that `Z` and `Z S` are martingales on `[0, T]`.
//! The system is assembled straight from atom masses, and the module carries
//! its own simplex: nothing here goes through the calculus, representation,
//! enlargement or viability code, so agreement with those modules is a real
//! cross-check.
//!
//! When no deflator exists the oracle returns a Stiemke certificate `y` with
//! `Aᵀy >= 0`, `bᵀy <= 0` and `Σ(Aᵀy) - bᵀy = 1`. Any `z > 0` with `A z = b`
//! would give `0 < yᵀA z = bᵀy <= 0`, so the certificate is checkable with
//! a handful of exact dot products.

use num::{One, Signed, Zero};

use crate::basis::{Filtration, SampleSpace};
use crate::process::{Process, StoppingTime};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowKind {
    /// `Z_0 = 1` on an `F_0` atom.
    Initial,
    /// `E[ΔZ_k | F_{k-}] = 0`.
    Mass,
    /// `E[Δ(Z S^i)_k | F_{k-}] = 0`.
    Asset(usize),
    /// `Z_k = Z_{k-1}` on a child past the horizon.
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowLabel {
    pub tick: usize,
    pub atom: Vec<usize>,
    pub kind: RowKind,
}

/// `A z = b`, `z > 0`, with one unknown per `(k, F_k atom)`.
#[derive(Clone, Debug)]
pub struct DeflatorSystem {
    /// `offsets[k] + j` indexes the unknown for atom `j` of `F_k`.
    offsets: Vec<usize>,
    num_vars: usize,
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
    pub labels: Vec<RowLabel>,
}

impl DeflatorSystem {
    pub fn build(space: &SampleSpace, filt: &Filtration, s: &Process, horizon: &StoppingTime) -> Self {
        let big_k = filt.horizon();
        let mut offsets = Vec::with_capacity(big_k + 1);
        let mut num_vars = 0;
        for k in 0..=big_k {
            offsets.push(num_vars);
            num_vars += filt.at(k).num_blocks();
        }
        let mut sys = DeflatorSystem {
            offsets,
            num_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
            labels: Vec::new(),
        };
        for (j, block) in filt.at(0).blocks().iter().enumerate() {
            let mut row = vec![Q::zero(); num_vars];
            row[j] = Q::one();
            sys.push(row, Q::one(), 0, block, RowKind::Initial);
        }
        for k in 1..=big_k {
            let (prev, pre, at) = (filt.at(k - 1), filt.pre(k), filt.at(k));
            for block in pre.blocks() {
                let parent = sys.offsets[k - 1] + prev.block_of(block[0]);
                let mut kids: Vec<usize> = block.iter().map(|&w| at.block_of(w)).collect();
                kids.sort_unstable();
                kids.dedup();
                let active = horizon.value(block[0]).is_none_or(|t| k <= t);
                if !active {
                    for &c in &kids {
                        let mut row = vec![Q::zero(); num_vars];
                        row[sys.offsets[k] + c] = Q::one();
                        row[parent] = -Q::one();
                        sys.push(row, Q::zero(), k, at.block(c), RowKind::Frozen);
                    }
                    continue;
                }
                let mass: Q = block.iter().map(|&w| space.prob(w)).sum();
                let mut row = vec![Q::zero(); num_vars];
                row[parent] = -mass.clone();
                for &c in &kids {
                    row[sys.offsets[k] + c] = at.block(c).iter().map(|&w| space.prob(w)).sum();
                }
                sys.push(row, Q::zero(), k, block, RowKind::Mass);
                for i in 0..s.dim() {
                    let mut row = vec![Q::zero(); num_vars];
                    row[parent] = -(&mass * &s.value(block[0], k - 1)[i]);
                    for &c in &kids {
                        let cb = at.block(c);
                        let cm: Q = cb.iter().map(|&w| space.prob(w)).sum();
                        row[sys.offsets[k] + c] = cm * &s.value(cb[0], k)[i];
                    }
                    sys.push(row, Q::zero(), k, block, RowKind::Asset(i));
                }
            }
        }
        sys
    }

    fn push(&mut self, row: Vec<Q>, rhs: Q, tick: usize, atom: &[usize], kind: RowKind) {
        self.rows.push(row);
        self.rhs.push(rhs);
        self.labels.push(RowLabel {
            tick,
            atom: atom.to_vec(),
            kind,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Reads `z` off an adapted process; `None` if `Z` is not constant on
    /// some atom.
    pub fn unknowns_of(&self, filt: &Filtration, z: &Process) -> Option<Vec<Q>> {
        let mut out = vec![Q::zero(); self.num_vars];
        for k in 0..=filt.horizon() {
            for (j, block) in filt.at(k).blocks().iter().enumerate() {
                let v = z.at(block[0], k);
                if block.iter().any(|&w| z.at(w, k) != v) {
                    return None;
                }
                out[self.offsets[k] + j] = v.clone();
            }
        }
        Some(out)
    }

    fn process_of(&self, filt: &Filtration, z: &[Q]) -> Process {
        let n = filt.num_outcomes();
        Process::from_fn(n, filt.horizon(), 1, |w, k| vec![z[self.offsets[k] + filt.at(k).block_of(w)].clone()])
    }

    /// `A z = b` and `z > 0`.
    pub fn accepts(&self, z: &[Q]) -> bool {
        z.len() == self.num_vars
            && z.iter().all(Signed::is_positive)
            && self.rows.iter().zip(&self.rhs).all(|(r, b)| dot(r, z) == *b)
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// One multiplier per row of the system.
    pub y: Vec<Q>,
}

impl Certificate {
    /// `Aᵀy >= 0`, `bᵀy <= 0` and `Σ(Aᵀy) - bᵀy = 1`.
    pub fn verify(&self, sys: &DeflatorSystem) -> bool {
        if self.y.len() != sys.rows.len() {
            return false;
        }
        let mut aty = vec![Q::zero(); sys.num_vars];
        for (row, yi) in sys.rows.iter().zip(&self.y) {
            if yi.is_zero() {
                continue;
            }
            for (acc, a) in aty.iter_mut().zip(row) {
                if !a.is_zero() {
                    *acc += a * yi;
                }
            }
        }
        let by = dot(&sys.rhs, &self.y);
        let total: Q = aty.iter().sum::<Q>() - &by;
        aty.iter().all(|v| !v.is_negative()) && !by.is_positive() && total.is_one()
    }

    /// Rows carrying a nonzero multiplier.
    pub fn support<'a>(&self, sys: &'a DeflatorSystem) -> Vec<&'a RowLabel> {
        self.y
            .iter()
            .zip(&sys.labels)
            .filter(|(y, _)| !y.is_zero())
            .map(|(_, l)| l)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Viable { deflator: Process },
    Arbitrage { certificate: Certificate },
}

impl OracleVerdict {
    pub fn is_viable(&self) -> bool {
        matches!(self, OracleVerdict::Viable { .. })
    }
}

pub fn lp_deflator_oracle(space: &SampleSpace, filt: &Filtration, s: &Process, horizon: &StoppingTime) -> OracleVerdict {
    let sys = DeflatorSystem::build(space, filt, s, horizon);
    decide(&sys, filt)
}

pub fn decide(sys: &DeflatorSystem, filt: &Filtration) -> OracleVerdict {
    match max_gap(sys) {
        Some(z) => OracleVerdict::Viable {
            deflator: sys.process_of(filt, &z),
        },
        None => OracleVerdict::Arbitrage {
            certificate: stiemke_certificate(sys),
        },
    }
}

/// Independent acceptance test for a candidate deflator.
pub fn check_deflator(space: &SampleSpace, filt: &Filtration, s: &Process, horizon: &StoppingTime, z: &Process) -> bool {
    let sys = DeflatorSystem::build(space, filt, s, horizon);
    sys.unknowns_of(filt, z).is_some_and(|v| sys.accepts(&v))
}

/// maximize `t` over `A z = b`, `z - t >= 0`, `t <= 1`; `Some(z)` iff the
/// optimum gap is positive. Solved in the shifted unknowns `s = z - t`, and
/// stopped as soon as a feasible point with `t > 0` appears.
fn max_gap(sys: &DeflatorSystem) -> Option<Vec<Q>> {
    let nz = sys.num_vars;
    // columns: s (nz), t, u
    let cols = nz + 2;
    let t = nz;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, rhs) in sys.rows.iter().zip(&sys.rhs) {
        let mut r = vec![Q::zero(); cols];
        r[..nz].clone_from_slice(row);
        r[t] = row.iter().sum();
        a.push(r);
        b.push(rhs.clone());
    }
    let mut r = vec![Q::zero(); cols];
    r[t] = Q::one();
    r[t + 1] = Q::one();
    a.push(r);
    b.push(Q::one());
    let mut c = vec![Q::zero(); cols];
    c[t] = Q::one();
    let x = StandardForm { a, b, c }.maximize(Some(t))?;
    x[t].is_positive().then(|| x[..nz].iter().map(|v| v + &x[t]).collect())
}

fn stiemke_certificate(sys: &DeflatorSystem) -> Certificate {
    let m = sys.rows.len();
    let nz = sys.num_vars;
    // columns: y+ (m), y- (m), r (nz), sigma
    let cols = 2 * m + nz + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..nz {
        let mut r = vec![Q::zero(); cols];
        for i in 0..m {
            r[i] = sys.rows[i][j].clone();
            r[m + i] = -sys.rows[i][j].clone();
        }
        r[2 * m + j] = -Q::one();
        a.push(r);
        b.push(Q::zero());
    }
    let mut r = vec![Q::zero(); cols];
    for i in 0..m {
        r[i] = -sys.rhs[i].clone();
        r[m + i] = sys.rhs[i].clone();
    }
    r[cols - 1] = -Q::one();
    a.push(r);
    b.push(Q::zero());
    let mut r = vec![Q::zero(); cols];
    for v in r.iter_mut().skip(2 * m) {
        *v = Q::one();
    }
    a.push(r);
    b.push(Q::one());
    let x = StandardForm {
        a,
        b,
        c: vec![Q::zero(); cols],
    }
    .maximize(None)
    .expect("theorem of the alternative: a certificate exists when no deflator does");
    Certificate {
        y: (0..m).map(|i| &x[i] - &x[m + i]).collect(),
    }
}

/// `maximize cᵀx` s.t. `A x = b`, `x >= 0`. Returns `None` when infeasible.
/// Unboundedness cannot occur for the two programs built above.
struct StandardForm {
    a: Vec<Vec<Q>>,
    b: Vec<Q>,
    c: Vec<Q>,
}

/// Dense tableau `[A | I | b]` with its reduced-cost row.
struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cost: Vec<Q>,
}

impl StandardForm {
    /// With `early = Some(j)`, phase two stops once `x_j > 0`.
    fn maximize(mut self, early: Option<usize>) -> Option<Vec<Q>> {
        let m = self.a.len();
        let n = self.c.len();
        for i in 0..m {
            if self.b[i].is_negative() {
                self.b[i] = -&self.b[i];
                for v in self.a[i].iter_mut() {
                    *v = -&*v;
                }
            }
        }
        let width = n + m;
        let rows: Vec<Vec<Q>> = (0..m)
            .map(|i| {
                let mut row = std::mem::take(&mut self.a[i]);
                row.resize(width, Q::zero());
                row[n + i] = Q::one();
                row.push(self.b[i].clone());
                row
            })
            .collect();
        // phase one: maximize -Σ artificials
        let mut cost = vec![Q::zero(); width + 1];
        for row in &rows {
            for j in 0..n {
                cost[j] += &row[j];
            }
            cost[width] += &row[width];
        }
        let mut tab = Tableau {
            rows,
            basis: (n..n + m).collect(),
            cost,
        };
        tab.run(n + m, None);
        if tab.cost[width].is_positive() {
            return None;
        }
        // drive zero artificials out of the basis where possible
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                    tab.pivot(i, j);
                } else {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        let mut cost = self.c.clone();
        cost.resize(width + 1, Q::zero());
        for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
            if bv < n && !self.c[bv].is_zero() {
                for (cj, v) in cost.iter_mut().zip(row) {
                    *cj -= &self.c[bv] * v;
                }
            }
        }
        tab.cost = cost;
        if !tab.run(n, early) {
            return None;
        }
        Some(tab.solution(n))
    }
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.cost.len() - 1
    }

    fn solution(&self, n: usize) -> Vec<Q> {
        let mut x = vec![Q::zero(); n];
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            if bv < n {
                x[bv] = row[self.rhs()].clone();
            }
        }
        x
    }

    fn early_hit(&self, early: Option<usize>) -> bool {
        let Some(j) = early else { return false };
        let rhs = self.rhs();
        self.basis
            .iter()
            .zip(&self.rows)
            .any(|(&bv, row)| bv == j && row[rhs].is_positive())
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Q::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let prow = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nonzero {
                row[j] -= &f * &prow[j];
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &j in &nonzero {
                self.cost[j] -= &f * &prow[j];
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule over columns `< allowed`. Returns false if unbounded.
    fn run(&mut self, allowed: usize, early: Option<usize>) -> bool {
        let rhs = self.rhs();
        loop {
            if self.early_hit(early) {
                return true;
            }
            let Some(c) = (0..allowed).find(|&j| self.cost[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[rhs] / &row[c];
                    let take = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if take {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}
