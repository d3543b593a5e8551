//! Drift operator of an enlargement `F ⊆ G`, the drift-multiplier
//! factorization `Γ(X) = φᵀ·[N, X]^{F·p}` with `N = W″`, the support
//! condition and the positivity of `1 + φᵀΔN`.
//!
//! Hypothesis (H′) holds automatically on a finite space: every
//! F-martingale is a G-semimartingale with drift `Γ(X)`, whose increment at
//! tick `k` is `E[ΔX_k | G_{k-}]`.

use num::{One, Signed, Zero};

use crate::basis::{block_average, validate, Filtration, SampleSpace};
use crate::calculus::{bracket, compensator_unchecked, integral_unchecked, martingale_defect};
use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm, Matrix};
use crate::process::{Process, StoppingTime};
use crate::rational::{dot, Q};
use crate::representation::RepresentationProcess;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnlargedBasis {
    pub space: SampleSpace,
    pub f: Filtration,
    pub g: Filtration,
    /// The horizon `T`, a G-stopping time; `+∞` everywhere means the whole grid.
    pub horizon: StoppingTime,
}

impl EnlargedBasis {
    pub fn new(space: SampleSpace, f: Filtration, g: Filtration, horizon: StoppingTime) -> Result<Self> {
        validate(&space, &f)?;
        validate(&space, &g)?;
        if f.horizon() != g.horizon() {
            return Err(Error::DimensionMismatch {
                expected: f.horizon(),
                found: g.horizon(),
            });
        }
        if let Some(k) = (0..=f.horizon()).find(|&k| !g.at(k).refines(f.at(k)) || !g.pre(k).refines(f.pre(k))) {
            return Err(Error::BadPartition(format!("G does not contain F at tick {k}")));
        }
        horizon.check_stopping_time(&g)?;
        Ok(EnlargedBasis { space, f, g, horizon })
    }

    /// `G = F` on the whole grid.
    pub fn trivial(space: SampleSpace, f: Filtration) -> Result<Self> {
        let n = space.len();
        Self::new(space, f.clone(), f, StoppingTime::infinite(n))
    }

    pub fn ticks(&self) -> usize {
        self.f.horizon()
    }

    pub fn num_outcomes(&self) -> usize {
        self.space.len()
    }

    /// Whether the `G_{k-}` atom `block` lies inside `[0, T]` at tick `k`.
    /// `{T >= k}` is a `G_{k-}` event, so one outcome decides.
    pub fn active(&self, k: usize, block: &[usize]) -> bool {
        self.horizon.covers(block[0], k)
    }

    /// Index of the `F_{k-}` atom containing a `G_{k-}` atom.
    pub fn f_atom_of(&self, k: usize, block: &[usize]) -> usize {
        self.f.pre(k).block_of(block[0])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DriftFactors {
    /// The martingale factor, an F-martingale; here always `W″`.
    pub n: Process,
    /// G-predictable multiplier, zero outside `[0, T]`.
    pub phi: Process,
}

/// `Γ(X)` for an F-martingale `X` (any dimension), zero after the horizon.
pub fn drift_operator(eb: &EnlargedBasis, x: &Process) -> Result<Process> {
    if let Some(k) = martingale_defect(&eb.space, &eb.f, x)? {
        return Err(Error::NotFMartingale { tick: k });
    }
    Ok(g_compensator(eb, x))
}

/// `A^{G·p}` on `[0, T]`: increments `E[ΔA_k | G_{k-}]`, zero after the horizon.
pub fn g_compensator(eb: &EnlargedBasis, x: &Process) -> Process {
    let n = eb.num_outcomes();
    let mut incr = vec![vec![vec![Q::zero(); x.dim()]; eb.ticks()]; n];
    for k in 1..=eb.ticks() {
        for i in 0..x.dim() {
            let jumps = x.jump_slice(k, i);
            for c in eb.g.pre(k).blocks() {
                if !eb.active(k, c) {
                    continue;
                }
                let m = block_average(&eb.space, c, &jumps);
                for &w in c {
                    incr[w][k - 1][i] = m.clone();
                }
            }
        }
    }
    Process::from_jumps(&incr, x.dim())
}

/// `φᵀ·[N, X]^{F·p}`, one component per component of `X`.
pub fn factor_drift(eb: &EnlargedBasis, factors: &DriftFactors, x: &Process) -> Process {
    let m = x.dim();
    let cross = compensator_unchecked(&eb.space, &eb.f, &bracket(&factors.n, x));
    let parts: Vec<Process> = (0..m)
        .map(|j| {
            let col = Process::stack(&(0..factors.n.dim()).map(|i| cross.component(i * m + j)).collect::<Vec<_>>());
            integral_unchecked(&factors.phi, &col)
        })
        .collect();
    Process::stack(&parts)
}

fn check_factor_shape(eb: &EnlargedBasis, factors: &DriftFactors) -> Result<()> {
    let shape_ok = |p: &Process| p.num_outcomes() == eb.num_outcomes() && p.horizon() == eb.ticks();
    if !shape_ok(&factors.n) || !shape_ok(&factors.phi) || factors.n.dim() != factors.phi.dim() {
        return Err(Error::FactorsMissing);
    }
    Ok(())
}

/// `E[ΔW″ ΔW″ᵀ | F_{k-}]` on one atom.
pub fn f_covariance(rep: &RepresentationProcess, k: usize, atom: usize) -> Matrix {
    let split = rep.split(k, atom);
    let dim = rep.dim();
    let mut cov = Matrix::zeros(dim, dim);
    for (h, c) in split.children.iter().enumerate() {
        if c.is_empty() {
            continue;
        }
        let n = rep.jump_on_child(k, split, h);
        cov.add_assign_scaled(&Matrix::outer(&n, &n), &split.p[h]);
    }
    cov
}

/// Solves for the minimum-norm G-predictable `φ` with `N = W″`, then checks
/// the factorization against the drift operator on every `W″` component.
pub fn solve_factors(eb: &EnlargedBasis, rep: &RepresentationProcess) -> Result<DriftFactors> {
    let w = rep.w();
    let dim = rep.dim();
    let mut phi = Process::zeros(eb.num_outcomes(), eb.ticks(), dim);
    for k in 1..=eb.ticks() {
        let covs: Vec<Matrix> = (0..eb.f.pre(k).num_blocks()).map(|a| f_covariance(rep, k, a)).collect();
        for c in eb.g.pre(k).blocks() {
            if !eb.active(k, c) {
                continue;
            }
            let b: Vec<Q> = (0..dim)
                .map(|h| block_average(&eb.space, c, &w.jump_slice(k, h)))
                .collect();
            let sol = solve_min_norm(&covs[eb.f_atom_of(k, c)], &b).ok_or(Error::Unsolvable { tick: k })?;
            for &o in c {
                *phi.value_mut(o, k) = sol.clone();
            }
        }
    }
    let factors = DriftFactors { n: w.clone(), phi };
    if drift_operator(eb, w)? != factor_drift(eb, &factors, w) {
        return Err(Error::Internal("drift factorization does not reproduce Γ(W″)".into()));
    }
    Ok(factors)
}

/// Where two processes first disagree on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub tick: usize,
    pub outcome: usize,
}

/// Compensator transfer: `A^{G·p} = A^{F·p} + φᵀ·[N, A]^{F·p}`
/// on `[0, T]` for an F-adapted `A`. `None` when it holds.
pub fn compensator_transfer_check(eb: &EnlargedBasis, factors: &DriftFactors, a: &Process) -> Result<Option<Mismatch>> {
    check_factor_shape(eb, factors)?;
    a.check_adapted(&eb.f)?;
    let lhs = g_compensator(eb, a);
    let rhs = compensator_unchecked(&eb.space, &eb.f, a).add(&factor_drift(eb, factors, a));
    Ok(first_mismatch(eb, &lhs, &rhs))
}

fn first_mismatch(eb: &EnlargedBasis, x: &Process, y: &Process) -> Option<Mismatch> {
    for k in 1..=eb.ticks() {
        for w in 0..eb.num_outcomes() {
            if eb.horizon.covers(w, k) && x.jump(w, k) != y.jump(w, k) {
                return Some(Mismatch { tick: k, outcome: w });
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportWitness {
    pub tick: usize,
    /// The `G_{k-}` atom.
    pub g_atom: Vec<usize>,
    /// The `F_k` child of the enclosing `F_{k-}` atom that the G-atom misses.
    pub child: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportReport {
    pub holds: bool,
    pub witness: Option<SupportWitness>,
}

/// The support condition: for every tick `k <= T`, every `G_{k-}` atom `C`
/// and every `F_k` child `A` of the `F_{k-}` atom containing `C`,
/// `P(A | F_{k-}) > 0` iff `P(A | C) > 0`. Children always have positive
/// F-conditional mass, so this asks that `C` meets every child.
pub fn check_condition_support(eb: &EnlargedBasis) -> SupportReport {
    for k in 1..=eb.ticks() {
        let (fpre, fat) = (eb.f.pre(k), eb.f.at(k));
        for c in eb.g.pre(k).blocks() {
            if !eb.active(k, c) {
                continue;
            }
            let a = eb.f_atom_of(k, c);
            for child in fpre.children(a, fat) {
                let block = fat.block(child);
                if !c.iter().any(|&w| fat.block_of(w) == child) {
                    return SupportReport {
                        holds: false,
                        witness: Some(SupportWitness {
                            tick: k,
                            g_atom: c.clone(),
                            child: block.to_vec(),
                        }),
                    };
                }
            }
        }
    }
    SupportReport {
        holds: true,
        witness: None,
    }
}

/// Direct form of the support condition for one nonnegative `F_k`-measurable
/// `ξ`: the sets `{E[ξ|G_{k-}] > 0, k <= T}` and `{E[ξ|F_{k-}] > 0, k <= T}`
/// coincide.
pub fn support_sets_agree(eb: &EnlargedBasis, k: usize, xi: &[Q]) -> bool {
    let fpre = eb.f.pre(k);
    let fmean: Vec<Q> = fpre
        .blocks()
        .iter()
        .map(|b| block_average(&eb.space, b, xi))
        .collect();
    eb.g.pre(k).blocks().iter().all(|c| {
        !eb.active(k, c) || {
            let g_pos = block_average(&eb.space, c, xi).is_positive();
            let f_pos = fmean[eb.f_atom_of(k, c)].is_positive();
            g_pos == f_pos
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositivityReport {
    pub holds: bool,
    pub failure: Option<Mismatch>,
    /// `1 + φᵀΔN` at every `(ω, k)`, `k >= 1`.
    pub values: Vec<Vec<Q>>,
}

/// `1 + φ_kᵀ ΔN_k > 0` at every outcome and tick `k <= T`.
pub fn check_positivity(eb: &EnlargedBasis, factors: &DriftFactors) -> Result<PositivityReport> {
    check_factor_shape(eb, factors)?;
    let mut failure = None;
    let values: Vec<Vec<Q>> = (0..eb.num_outcomes())
        .map(|w| {
            (1..=eb.ticks())
                .map(|k| Q::one() + dot(factors.phi.value(w, k), &factors.n.jump(w, k)))
                .collect()
        })
        .collect();
    'outer: for k in 1..=eb.ticks() {
        for (w, row) in values.iter().enumerate() {
            if eb.horizon.covers(w, k) && !row[k - 1].is_positive() {
                failure = Some(Mismatch { tick: k, outcome: w });
                break 'outer;
            }
        }
    }
    Ok(PositivityReport {
        holds: failure.is_none(),
        failure,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Partition, TickPartitions};
    use crate::rational::{q, qi};
    use crate::representation::build_representation;

    fn six_point() -> EnlargedBasis {
        let a = Partition::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let c = Partition::new(6, vec![vec![0, 1, 3], vec![2, 4, 5]]).unwrap();
        let f = Filtration::new(
            Partition::trivial(6),
            vec![TickPartitions {
                pre: Partition::trivial(6),
                at: a.clone(),
            }],
        )
        .unwrap();
        let g = Filtration::new(
            Partition::trivial(6),
            vec![TickPartitions {
                pre: c.clone(),
                at: c.meet(&a),
            }],
        )
        .unwrap();
        EnlargedBasis::new(SampleSpace::uniform(6), f, g, StoppingTime::infinite(6)).unwrap()
    }

    fn centred_indicator() -> Process {
        Process::scalar((0..6).map(|w| vec![qi(0), if w < 3 { q(1, 2) } else { q(-1, 2) }]).collect())
    }

    #[test]
    fn drift_on_six_points() {
        let eb = six_point();
        let g = drift_operator(&eb, &centred_indicator()).unwrap();
        let c1 = [0, 1, 3];
        for w in 0..6 {
            let expect = if c1.contains(&w) { q(1, 6) } else { q(-1, 6) };
            assert_eq!(g.at(w, 1), &expect);
        }
        let trivial = EnlargedBasis::trivial(eb.space.clone(), eb.f.clone()).unwrap();
        assert!(drift_operator(&trivial, &centred_indicator()).unwrap().is_zero());
    }

    #[test]
    fn rejects_non_martingale() {
        let eb = six_point();
        let x = Process::scalar((0..6).map(|w| vec![qi(0), if w < 3 { qi(1) } else { qi(0) }]).collect());
        assert_eq!(drift_operator(&eb, &x), Err(Error::NotFMartingale { tick: 1 }));
    }

    #[test]
    fn factors_on_six_points() {
        let eb = six_point();
        let rep = build_representation(&eb.space, &eb.f);
        let factors = solve_factors(&eb, &rep).unwrap();
        for w in 0..6 {
            let expect = if [0, 1, 3].contains(&w) {
                vec![q(2, 3), q(-2, 3)]
            } else {
                vec![q(-2, 3), q(2, 3)]
            };
            assert_eq!(factors.phi.value(w, 1), expect.as_slice());
        }
        let pos = check_positivity(&eb, &factors).unwrap();
        assert!(pos.holds);
        let seen: Vec<Q> = pos.values.iter().map(|r| r[0].clone()).collect();
        assert!(seen.iter().all(|v| *v == q(4, 3) || *v == q(2, 3)));
        assert!(check_condition_support(&eb).holds);
    }

    #[test]
    fn transfer_on_indicator_jump() {
        let eb = six_point();
        let rep = build_representation(&eb.space, &eb.f);
        let factors = solve_factors(&eb, &rep).unwrap();
        let a = Process::scalar((0..6).map(|w| vec![qi(0), if w < 3 { qi(1) } else { qi(0) }]).collect());
        assert_eq!(compensator_transfer_check(&eb, &factors, &a).unwrap(), None);
        let wrong = DriftFactors {
            n: factors.n.clone(),
            phi: Process::zeros(6, 1, 2),
        };
        assert_eq!(
            compensator_transfer_check(&eb, &wrong, &a).unwrap(),
            Some(Mismatch { tick: 1, outcome: 0 })
        );
        let short = DriftFactors {
            n: factors.n.clone(),
            phi: Process::zeros(6, 1, 1),
        };
        assert_eq!(compensator_transfer_check(&eb, &short, &a), Err(Error::FactorsMissing));
    }

    #[test]
    fn hand_built_violating_phi() {
        let eb = six_point();
        let rep = build_representation(&eb.space, &eb.f);
        let phi = Process::from_fn(6, 1, 2, |_, k| if k == 1 { vec![qi(-8), qi(0)] } else { vec![qi(0), qi(0)] });
        let factors = DriftFactors {
            n: rep.w().clone(),
            phi,
        };
        let pos = check_positivity(&eb, &factors).unwrap();
        assert!(!pos.holds);
        assert_eq!(pos.failure, Some(Mismatch { tick: 1, outcome: 0 }));
    }

    #[test]
    fn four_point_support_failure() {
        let a = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let c = Partition::new(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        let f = Filtration::new(
            Partition::trivial(4),
            vec![TickPartitions {
                pre: Partition::trivial(4),
                at: a.clone(),
            }],
        )
        .unwrap();
        let g = Filtration::new(
            Partition::trivial(4),
            vec![TickPartitions {
                pre: c.clone(),
                at: c.meet(&a),
            }],
        )
        .unwrap();
        let eb = EnlargedBasis::new(SampleSpace::uniform(4), f, g, StoppingTime::infinite(4)).unwrap();
        let rep = SupportReport {
            holds: false,
            witness: Some(SupportWitness {
                tick: 1,
                g_atom: vec![3],
                child: vec![0, 1],
            }),
        };
        assert_eq!(check_condition_support(&eb), rep);
        let ind: Vec<Q> = (0..4).map(|w| if w < 2 { qi(1) } else { qi(0) }).collect();
        assert!(!support_sets_agree(&eb, 1, &ind));
    }

    #[test]
    fn quasi_left_continuous_f_passes() {
        let a = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let f = Filtration::new(
            Partition::trivial(4),
            vec![TickPartitions {
                pre: a.clone(),
                at: a.clone(),
            }],
        )
        .unwrap();
        let g = Filtration::new(
            Partition::trivial(4),
            vec![TickPartitions {
                pre: Partition::discrete(4),
                at: Partition::discrete(4),
            }],
        )
        .unwrap();
        let eb = EnlargedBasis::new(SampleSpace::uniform(4), f, g, StoppingTime::infinite(4)).unwrap();
        assert!(check_condition_support(&eb).holds);
    }
}
