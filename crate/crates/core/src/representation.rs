//! The canonical representation process `W″` and martingale representation
//! coefficients.
//!
//! At tick `k` every `F_{k-}` atom splits into at most `d + 1` children in
//! `F_k`. Children are labelled in order of their smallest outcome and the
//! list is padded with empty sets. Component `h` jumps by
//! `2^{-k} (1_{A_{k,h}} - p_{k,h})` with `p_{k,h} = P(A_{k,h} | F_{k-})`.

use num::Zero;

use crate::basis::{Filtration, SampleSpace};
use crate::calculus::martingale_defect;
use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm, Matrix};
use crate::process::Process;
use crate::rational::{dyadic, Q};

/// Children of one `F_{k-}` atom, padded to `d + 1` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSplit {
    pub children: Vec<Vec<usize>>,
    pub p: Vec<Q>,
}

impl AtomSplit {
    /// Number of nonempty children.
    pub fn arity(&self) -> usize {
        self.children.iter().filter(|c| !c.is_empty()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepresentationProcess {
    d: usize,
    /// `splits[k - 1][a]` for atom `a` of `F_{k-}`.
    splits: Vec<Vec<AtomSplit>>,
    /// `child[k - 1][ω]` is the label `h` of the child containing `ω`.
    child: Vec<Vec<usize>>,
    w: Process,
}

impl RepresentationProcess {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Dimension `d + 1` of `W″`.
    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn w(&self) -> &Process {
        &self.w
    }

    pub fn split(&self, k: usize, atom: usize) -> &AtomSplit {
        &self.splits[k - 1][atom]
    }

    pub fn child_label(&self, k: usize, w: usize) -> usize {
        self.child[k - 1][w]
    }

    /// `ΔW″` on child `h` of an atom at tick `k`, as a vector in `R^{d+1}`.
    pub fn jump_on_child(&self, k: usize, split: &AtomSplit, h: usize) -> Vec<Q> {
        let wk = dyadic(k);
        (0..self.dim())
            .map(|j| {
                let ind = if j == h { Q::from_integer(1.into()) } else { Q::zero() };
                &wk * (ind - &split.p[j])
            })
            .collect()
    }
}

/// Maximum number of `F_k` children of any `F_{k-}` atom (at least 1).
pub fn multiplicity(filt: &Filtration) -> usize {
    (1..=filt.horizon())
        .flat_map(|k| {
            let pre = filt.pre(k);
            (0..pre.num_blocks()).map(move |a| pre.children(a, filt.at(k)).len())
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

pub fn build_representation(space: &SampleSpace, filt: &Filtration) -> RepresentationProcess {
    let d = multiplicity(filt) - 1;
    let n = space.len();
    let big_k = filt.horizon();
    let mut splits = Vec::with_capacity(big_k);
    let mut child = Vec::with_capacity(big_k);
    let mut jumps = vec![vec![vec![Q::zero(); d + 1]; big_k]; n];
    for k in 1..=big_k {
        let (pre, at) = (filt.pre(k), filt.at(k));
        let wk = dyadic(k);
        let mut tick_splits = Vec::with_capacity(pre.num_blocks());
        let mut tick_child = vec![0; n];
        for a in 0..pre.num_blocks() {
            let mass = space.mass(pre.block(a));
            let mut children: Vec<Vec<usize>> = pre
                .children(a, at)
                .into_iter()
                .map(|c| at.block(c).to_vec())
                .collect();
            children.resize(d + 1, Vec::new());
            let p: Vec<Q> = children.iter().map(|c| space.mass(c) / &mass).collect();
            for (h, c) in children.iter().enumerate() {
                for &w in c {
                    tick_child[w] = h;
                    for (j, pj) in p.iter().enumerate() {
                        let ind = if j == h { Q::from_integer(1.into()) } else { Q::zero() };
                        jumps[w][k - 1][j] = &wk * (ind - pj);
                    }
                }
            }
            tick_splits.push(AtomSplit { children, p });
        }
        splits.push(tick_splits);
        child.push(tick_child);
    }
    RepresentationProcess {
        d,
        splits,
        child,
        w: Process::from_jumps(&jumps, d + 1),
    }
}

/// Minimum-norm predictable `H` with `Hᵀ·W″ = X - X_0` for a scalar
/// martingale `X`. `H_0 = 0`.
pub fn represent(space: &SampleSpace, filt: &Filtration, rep: &RepresentationProcess, x: &Process) -> Result<Process> {
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: x.dim(),
        });
    }
    if let Some(k) = martingale_defect(space, filt, x)? {
        return Err(Error::NotAMartingale { tick: k });
    }
    let mut h = Process::zeros(space.len(), filt.horizon(), rep.dim());
    for k in 1..=filt.horizon() {
        let pre = filt.pre(k);
        for a in 0..pre.num_blocks() {
            let coeff = atom_coefficient(rep, k, a, |w| x.jump(w, k)[0].clone())
                .ok_or(Error::NotAMartingale { tick: k })?;
            for &w in pre.block(a) {
                *h.value_mut(w, k) = coeff.clone();
            }
        }
    }
    Ok(h)
}

/// Solves `Hᵀ ΔW″ = ξ` over the children of one atom, minimum norm.
/// `xi` is evaluated at the first outcome of each child.
pub(crate) fn atom_coefficient(
    rep: &RepresentationProcess,
    k: usize,
    atom: usize,
    xi: impl Fn(usize) -> Q,
) -> Option<Vec<Q>> {
    let split = rep.split(k, atom);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (h, c) in split.children.iter().enumerate() {
        if let Some(&w) = c.first() {
            rows.push(rep.jump_on_child(k, split, h));
            rhs.push(xi(w));
        }
    }
    solve_min_norm(&Matrix::from_rows(rows), &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Partition, TickPartitions};
    use crate::rational::{q, qi};

    fn six_point() -> (SampleSpace, Filtration) {
        let f1 = Partition::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let filt = Filtration::new(
            Partition::trivial(6),
            vec![TickPartitions {
                pre: Partition::trivial(6),
                at: f1,
            }],
        )
        .unwrap();
        (SampleSpace::uniform(6), filt)
    }

    #[test]
    fn no_refinement_gives_zero() {
        let filt = Filtration::from_levels(Partition::trivial(3), vec![Partition::trivial(3)]).unwrap();
        let rep = build_representation(&SampleSpace::uniform(3), &filt);
        assert_eq!(rep.d(), 0);
        assert!(rep.w().is_zero());
        assert_eq!(multiplicity(&filt), 1);
    }

    #[test]
    fn six_point_representation() {
        let (s, f) = six_point();
        let rep = build_representation(&s, &f);
        assert_eq!(rep.d(), 1);
        assert_eq!(multiplicity(&f), 2);
        for w in 0..6 {
            let expect = if w < 3 {
                vec![q(1, 4), q(-1, 4)]
            } else {
                vec![q(-1, 4), q(1, 4)]
            };
            assert_eq!(rep.w().jump(w, 1), expect);
        }
        let x = Process::scalar((0..6).map(|w| vec![qi(0), if w < 3 { q(1, 2) } else { q(-1, 2) }]).collect());
        let h = represent(&s, &f, &rep, &x).unwrap();
        assert_eq!(h.value(0, 1), &[qi(1), qi(-1)]);
    }

    #[test]
    fn non_martingale_rejected() {
        let (s, f) = six_point();
        let rep = build_representation(&s, &f);
        let x = Process::scalar((0..6).map(|w| vec![qi(0), if w < 3 { qi(1) } else { qi(0) }]).collect());
        assert_eq!(represent(&s, &f, &rep, &x), Err(Error::NotAMartingale { tick: 1 }));
    }

    #[test]
    fn binary_tree_weights() {
        let n = 4;
        let l1 = Partition::new(n, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let filt = Filtration::from_levels(Partition::trivial(n), vec![l1, Partition::discrete(n)]).unwrap();
        let rep = build_representation(&SampleSpace::uniform(n), &filt);
        assert_eq!(rep.w().jump(0, 1), vec![q(1, 4), q(-1, 4)]);
        assert_eq!(rep.w().jump(0, 2), vec![q(1, 8), q(-1, 8)]);
    }
}
