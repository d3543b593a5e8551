//! Worked instances, seeded generators, and the initial/progressive
//! enlargement cross-checks.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use num::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{block_average, Filtration, Partition, SampleSpace, TickPartitions};
use crate::calculus::{compensator_unchecked, doleans_exp};
use crate::enlargement::{drift_operator, solve_factors, EnlargedBasis};
use crate::error::{Error, Result};
use crate::process::{Process, StoppingTime};
use crate::rational::{dot, q, Q};
use crate::representation::build_representation;

/// Uniform six points, `F_1 = {A, B}` with `A = {ω1, ω2, ω3}`, and
/// `G_{1-} = {C1, C2}` with `C1 = {ω1, ω2, ω4}`.
pub fn worked_six_point() -> EnlargedBasis {
    let a = blocks(6, &[&[0, 1, 2], &[3, 4, 5]]);
    let c = blocks(6, &[&[0, 1, 3], &[2, 4, 5]]);
    one_tick_enlargement(SampleSpace::uniform(6), a, c)
}

/// Uniform four points, `F_1 = {{ω1, ω2}, {ω3, ω4}}`,
/// `G_{1-} = {{ω1, ω2, ω3}, {ω4}}`: the support condition fails at `{ω4}`.
pub fn four_point_failing() -> EnlargedBasis {
    let a = blocks(4, &[&[0, 1], &[2, 3]]);
    let c = blocks(4, &[&[0, 1, 2], &[3]]);
    one_tick_enlargement(SampleSpace::uniform(4), a, c)
}

fn blocks(n: usize, b: &[&[usize]]) -> Partition {
    Partition::new(n, b.iter().map(|x| x.to_vec()).collect()).expect("static partition")
}

fn one_tick_enlargement(space: SampleSpace, f1: Partition, g_pre: Partition) -> EnlargedBasis {
    let n = space.len();
    let f = Filtration::new(
        Partition::trivial(n),
        vec![TickPartitions {
            pre: Partition::trivial(n),
            at: f1.clone(),
        }],
    )
    .expect("static filtration");
    let g = Filtration::new(
        Partition::trivial(n),
        vec![TickPartitions {
            pre: g_pre.clone(),
            at: g_pre.meet(&f1),
        }],
    )
    .expect("static filtration");
    EnlargedBasis::new(space, f, g, StoppingTime::infinite(n)).expect("static instance")
}

/// Uniform binary tree of depth `k`: `F_j` reveals the first `j` bits and
/// `F_{j-} = F_{j-1}`.
pub fn binary_tree(k: usize) -> (SampleSpace, Filtration) {
    let n = 1usize << k;
    let levels = (1..=k)
        .map(|j| Partition::from_key(n, |w| w >> (k - j)))
        .collect();
    let filt = Filtration::from_levels(Partition::trivial(n), levels).expect("tree levels refine");
    (SampleSpace::uniform(n), filt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnlargementKind {
    Random,
    Initial,
    Progressive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub outcomes: RangeInclusive<usize>,
    pub ticks: RangeInclusive<usize>,
    pub max_children: usize,
    pub enlargement_kind: EnlargementKind,
    pub force_condition_failure: bool,
}

impl GeneratorConfig {
    pub fn new(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            outcomes: 2..=12,
            ticks: 1..=4,
            max_children: 3,
            enlargement_kind: EnlargementKind::Random,
            force_condition_failure: false,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.outcomes.is_empty() || *self.outcomes.start() < 2 {
            return Err(Error::Schema("outcome range must be nonempty and start at 2 or more".into()));
        }
        if self.ticks.is_empty() || *self.ticks.start() < 1 {
            return Err(Error::Schema("tick range must be nonempty and start at 1 or more".into()));
        }
        if self.max_children < 2 {
            return Err(Error::Schema("max_children must be at least 2".into()));
        }
        Ok(())
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splits each block with probability `prob` into `2..=max_parts` pieces.
fn refine(part: &Partition, rng: &mut ChaCha8Rng, max_parts: usize, prob: f64) -> Partition {
    let n = part.len_outcomes();
    let mut out = Vec::new();
    for b in part.blocks() {
        if b.len() < 2 || !rng.gen_bool(prob) {
            out.push(b.clone());
            continue;
        }
        out.extend(split_block(b, rng, max_parts));
    }
    Partition::new(n, out).expect("refinement of a partition")
}

fn split_block(b: &[usize], rng: &mut ChaCha8Rng, max_parts: usize) -> Vec<Vec<usize>> {
    let parts = rng.gen_range(2..=max_parts.min(b.len()));
    let mut shuffled = b.to_vec();
    shuffled.shuffle(rng);
    let mut pieces = vec![Vec::new(); parts];
    for (i, &w) in shuffled.iter().enumerate() {
        let slot = if i < parts { i } else { rng.gen_range(0..parts) };
        pieces[slot].push(w);
    }
    pieces
}

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> SampleSpace {
    let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
    SampleSpace::from_weights(&weights).expect("positive weights")
}

/// A random single filtration. With `split_first` the first tick has
/// trivial `F_0 = F_{1-}` and at least two children.
pub fn gen_random_filtration(
    rng: &mut ChaCha8Rng,
    outcomes: &RangeInclusive<usize>,
    ticks: &RangeInclusive<usize>,
    max_children: usize,
    split_first: bool,
) -> (SampleSpace, Filtration) {
    let n = rng.gen_range(outcomes.clone());
    let big_k = rng.gen_range(ticks.clone());
    let space = random_space(rng, n);
    let initial = if split_first {
        Partition::trivial(n)
    } else {
        refine(&Partition::trivial(n), rng, 2, 0.2)
    };
    let mut prev = initial.clone();
    let mut tick_parts = Vec::with_capacity(big_k);
    for k in 1..=big_k {
        let (pre, at) = if split_first && k == 1 {
            let pre = Partition::trivial(n);
            let at = Partition::new(n, split_block(&(0..n).collect::<Vec<_>>(), rng, max_children)).expect("split");
            (pre, at)
        } else {
            let pre = refine(&prev, rng, 2, 0.25);
            let at = refine(&pre, rng, max_children, 0.75);
            (pre, at)
        };
        prev = at.clone();
        tick_parts.push(TickPartitions { pre, at });
    }
    let filt = Filtration::new(initial, tick_parts).expect("generated chain refines");
    (space, filt)
}

/// Splits every block of `part` into two pieces that each meet every block
/// of `children` inside it, when the children are large enough.
fn balanced_overlay(part: &Partition, children: &Partition, rng: &mut ChaCha8Rng, prob: f64) -> Partition {
    let n = part.len_outcomes();
    let mut out = Vec::new();
    for b in part.blocks() {
        let kids: BTreeSet<usize> = b.iter().map(|&w| children.block_of(w)).collect();
        let ok = kids
            .iter()
            .all(|&c| children.block(c).iter().filter(|w| b.contains(w)).count() >= 2);
        if !ok || !rng.gen_bool(prob) {
            out.push(b.clone());
            continue;
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &c in &kids {
            let mut members: Vec<usize> = children.block(c).iter().copied().filter(|w| b.contains(w)).collect();
            members.shuffle(rng);
            left.push(members[0]);
            right.push(members[1]);
            for &w in &members[2..] {
                if rng.gen_bool(0.5) {
                    left.push(w)
                } else {
                    right.push(w)
                }
            }
        }
        out.push(left);
        out.push(right);
    }
    Partition::new(n, out).expect("overlay of a partition")
}

pub fn gen_random_instance(cfg: &GeneratorConfig) -> Result<EnlargedBasis> {
    cfg.check()?;
    let mut rng = rng_for(cfg.seed);
    let force = cfg.force_condition_failure;
    let (space, f) = gen_random_filtration(&mut rng, &cfg.outcomes, &cfg.ticks, cfg.max_children, force);
    let n = space.len();
    match cfg.enlargement_kind {
        EnlargementKind::Random => {
            let gentle = rng.gen_bool(0.5);
            let g0 = refine(f.at(0), &mut rng, 2, if force { 0.0 } else { 0.15 });
            let mut prev = g0.clone();
            let mut ticks = Vec::with_capacity(f.horizon());
            for k in 1..=f.horizon() {
                let base = f.pre(k).meet(&prev);
                let mut pre = if gentle {
                    balanced_overlay(&base, f.at(k), &mut rng, 0.5)
                } else {
                    refine(&base, &mut rng, 2, 0.3)
                };
                if force && k == 1 {
                    pre = break_support(&pre, f.at(1));
                }
                let mut at = pre.meet(f.at(k));
                if !gentle {
                    at = refine(&at, &mut rng, 2, 0.15);
                }
                prev = at.clone();
                ticks.push(TickPartitions { pre, at });
            }
            let g = Filtration::new(g0, ticks)?;
            let horizon = if !force && rng.gen_bool(0.25) {
                StoppingTime::constant(n, rng.gen_range(1..=f.horizon()))
            } else {
                StoppingTime::infinite(n)
            };
            EnlargedBasis::new(space, f, g, horizon)
        }
        EnlargementKind::Initial => {
            let xi: Vec<i64> = if force {
                let a0 = f.at(1).block_of(0);
                (0..n).map(|w| i64::from(f.at(1).block_of(w) == a0)).collect()
            } else {
                let values = rng.gen_range(1..=3);
                (0..n).map(|_| rng.gen_range(0..values)).collect()
            };
            Ok(gen_initial_enlargement(space, f, xi)?.eb)
        }
        EnlargementKind::Progressive => {
            let big_k = f.horizon();
            let tau: Vec<Option<usize>> = if force {
                let a0 = f.at(1).block_of(0);
                (0..n).map(|w| if f.at(1).block_of(w) == a0 { Some(0) } else { None }).collect()
            } else {
                (0..n)
                    .map(|_| if rng.gen_bool(0.25) { None } else { Some(rng.gen_range(1..=big_k)) })
                    .collect()
            };
            Ok(gen_progressive_enlargement(space, f, tau)?.eb)
        }
    }
}

/// Splits the block of `pre` containing outcome 0 along the `at` child of
/// outcome 0, so the piece inside that child misses its siblings.
fn break_support(pre: &Partition, at: &Partition) -> Partition {
    let n = pre.len_outcomes();
    let target = pre.block_of(0);
    let child = at.block_of(0);
    let mut out = Vec::new();
    for (i, b) in pre.blocks().iter().enumerate() {
        if i != target {
            out.push(b.clone());
            continue;
        }
        let (inside, outside): (Vec<usize>, Vec<usize>) = b.iter().partition(|&&w| at.block_of(w) == child);
        out.push(inside);
        if !outside.is_empty() {
            out.push(outside);
        }
    }
    Partition::new(n, out).expect("split of a partition")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialEnlargement {
    pub eb: EnlargedBasis,
    pub xi: Vec<i64>,
    pub values: Vec<i64>,
}

/// `G_k = F_k ∨ σ(ξ)`, `G_{k-} = F_{k-} ∨ σ(ξ)`.
pub fn gen_initial_enlargement(space: SampleSpace, f: Filtration, xi: Vec<i64>) -> Result<InitialEnlargement> {
    let n = space.len();
    if xi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: xi.len(),
        });
    }
    let sx = Partition::from_key(n, |w| xi[w]);
    let ticks = f
        .ticks()
        .iter()
        .map(|t| TickPartitions {
            pre: t.pre.meet(&sx),
            at: t.at.meet(&sx),
        })
        .collect();
    let g = Filtration::new(f.initial().meet(&sx), ticks)?;
    let values: Vec<i64> = xi.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let eb = EnlargedBasis::new(space, f, g, StoppingTime::infinite(n))?;
    Ok(InitialEnlargement { eb, xi, values })
}

impl InitialEnlargement {
    fn indicator(&self, x: i64) -> Vec<Q> {
        self.xi.iter().map(|&v| if v == x { Q::one() } else { Q::zero() }).collect()
    }

    /// `q^x_k(ω) = P(ξ = x | F_k)(ω) / P(ξ = x)`.
    pub fn density(&self, x: i64, k: usize, w: usize) -> Q {
        self.density_on(self.eb.f.at(k), x, w)
    }

    /// `q^x_{k-}(ω) = P(ξ = x | F_{k-})(ω) / P(ξ = x)`.
    pub fn density_pre(&self, x: i64, k: usize, w: usize) -> Q {
        self.density_on(self.eb.f.pre(k), x, w)
    }

    fn density_on(&self, part: &Partition, x: i64, w: usize) -> Q {
        let ind = self.indicator(x);
        let total = self.eb.space.expectation(&ind);
        block_average(&self.eb.space, part.block(part.block_of(w)), &ind) / total
    }

    /// Density table `q^x_k` for every value, tick and outcome.
    pub fn density_table(&self) -> Vec<(i64, Vec<Vec<Q>>)> {
        self.values
            .iter()
            .map(|&x| {
                let rows = (0..self.eb.num_outcomes())
                    .map(|w| (0..=self.eb.ticks()).map(|k| self.density(x, k, w)).collect())
                    .collect();
                (x, rows)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossCheck {
    pub drift_ok: bool,
    pub ratio_ok: bool,
    /// `φᵀΔN` at every `(ω, k)`, `k >= 1`, zero off the checked region.
    pub phi_dn: Vec<Vec<Q>>,
}

impl CrossCheck {
    pub fn holds(&self) -> bool {
        self.drift_ok && self.ratio_ok
    }
}

/// Γ via the drift operator against `⟨q^x, X⟩ / q^x_-` with `x` frozen at
/// `ξ`, and the identities `φᵀΔN = Δq^ξ/q^ξ_-` and
/// `φᵀΔN/(1 + φᵀΔN) = Δq^ξ/q^ξ`, where `Δq = q_k - q_{k-}`.
pub fn jacod_phi_crosscheck(init: &InitialEnlargement) -> Result<CrossCheck> {
    let eb = &init.eb;
    for k in 1..=eb.ticks() {
        for &x in &init.values {
            for b in eb.f.pre(k).blocks() {
                if init.density_pre(x, k, b[0]).is_zero() {
                    return Err(Error::JacodDegenerate { tick: k });
                }
            }
        }
    }
    let rep = build_representation(&eb.space, &eb.f);
    let w = rep.w();
    let gamma = drift_operator(eb, w)?;
    let factors = solve_factors(eb, &rep)?;
    let n = eb.num_outcomes();
    let mut drift_ok = true;
    let mut ratio_ok = true;
    let mut phi_dn = vec![vec![Q::zero(); eb.ticks()]; n];
    for k in 1..=eb.ticks() {
        for o in 0..n {
            let x = init.xi[o];
            let q_pre = init.density_pre(x, k, o);
            let block = eb.f.pre(k).block(eb.f.pre(k).block_of(o));
            // E[ΔX Δq^x | F_{k-}] with x frozen at ξ(ω)
            let dq: Vec<Q> = (0..n).map(|v| init.density(x, k, v) - init.density_pre(x, k, v)).collect();
            for i in 0..rep.dim() {
                let prod: Vec<Q> = (0..n).map(|v| &w.jump(v, k)[i] * &dq[v]).collect();
                let formula = block_average(&eb.space, block, &prod) / &q_pre;
                if formula != gamma.jump(o, k)[i] {
                    drift_ok = false;
                }
            }
            let q_now = init.density(x, k, o);
            let fdn = dot(factors.phi.value(o, k), &factors.n.jump(o, k));
            let dq_o = &q_now - &q_pre;
            if fdn != &dq_o / &q_pre || &fdn / (Q::one() + &fdn) != &dq_o / &q_now {
                ratio_ok = false;
            }
            phi_dn[o][k - 1] = fdn;
        }
    }
    Ok(CrossCheck {
        drift_ok,
        ratio_ok,
        phi_dn,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressiveEnlargement {
    pub eb: EnlargedBasis,
    pub tau: StoppingTime,
}

/// `G_k = F_k ∨ σ({τ <= j}, j <= k)`, `G_{k-} = F_{k-} ∨ σ({τ <= j}, j < k)`,
/// horizon `τ`.
pub fn gen_progressive_enlargement(space: SampleSpace, f: Filtration, tau: Vec<Option<usize>>) -> Result<ProgressiveEnlargement> {
    let n = space.len();
    let tau = StoppingTime::new(tau);
    if tau.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    tau.check_random_time(f.horizon())?;
    // σ({τ <= j}, j <= k) is generated by τ ∧ (k + 1)
    let revealed = |k: usize| Partition::from_key(n, |w| tau.value(w).map_or(k + 1, |t| t.min(k + 1)));
    let initial = f.initial().meet(&revealed(0));
    let ticks = (1..=f.horizon())
        .map(|k| TickPartitions {
            pre: f.pre(k).meet(&revealed(k - 1)),
            at: f.at(k).meet(&revealed(k)),
        })
        .collect();
    let g = Filtration::new(initial, ticks)?;
    let eb = EnlargedBasis::new(space, f, g, tau.clone())?;
    Ok(ProgressiveEnlargement { eb, tau })
}

impl ProgressiveEnlargement {
    fn survival_on(&self, part: &Partition, k: usize, strict: bool, w: usize) -> Q {
        let ind: Vec<Q> = (0..self.eb.num_outcomes())
            .map(|v| {
                let alive = self.tau.value(v).is_none_or(|t| if strict { t > k } else { t >= k });
                if alive {
                    Q::one()
                } else {
                    Q::zero()
                }
            })
            .collect();
        block_average(&self.eb.space, part.block(part.block_of(w)), &ind)
    }

    /// Azéma supermartingale `Z_k = P(τ > k | F_k)`.
    pub fn azema(&self, k: usize, w: usize) -> Q {
        self.survival_on(self.eb.f.at(k), k, true, w)
    }

    /// `Z̃_k = P(τ >= k | F_k)`.
    pub fn azema_optional(&self, k: usize, w: usize) -> Q {
        self.survival_on(self.eb.f.at(k), k, false, w)
    }

    /// `Z_{k-} = P(τ >= k | F_{k-})`.
    pub fn azema_pre(&self, k: usize, w: usize) -> Q {
        self.survival_on(self.eb.f.pre(k), k, false, w)
    }

    /// Jumps `Z̃_k - Z_{k-}` of the martingale part used against `X`.
    pub fn azema_martingale(&self) -> Process {
        let n = self.eb.num_outcomes();
        let jumps: Vec<Vec<Vec<Q>>> = (0..n)
            .map(|w| {
                (1..=self.eb.ticks())
                    .map(|k| vec![self.azema_optional(k, w) - self.azema_pre(k, w)])
                    .collect()
            })
            .collect();
        Process::from_jumps(&jumps, 1)
    }
}

/// On `{k <= τ}` (where `Z_{k-} > 0`): `Γ(X) = (1/Z_-)·[N_Z, X]^{F·p}` for
/// every `W″` component, `φᵀΔN = ΔZ/Z_-` and `φᵀΔN/(1 + φᵀΔN) = ΔZ/Z̃`.
pub fn azema_phi_crosscheck(pe: &ProgressiveEnlargement) -> Result<CrossCheck> {
    let eb = &pe.eb;
    let n = eb.num_outcomes();
    let region = |w: usize, k: usize| pe.tau.covers(w, k);
    if !(1..=eb.ticks()).any(|k| (0..n).any(|w| region(w, k))) {
        return Err(Error::AzemaDegenerate);
    }
    let rep = build_representation(&eb.space, &eb.f);
    let w = rep.w();
    let gamma = drift_operator(eb, w)?;
    let factors = solve_factors(eb, &rep)?;
    let nz = pe.azema_martingale();
    let mut drift_ok = true;
    let mut ratio_ok = true;
    let mut phi_dn = vec![vec![Q::zero(); eb.ticks()]; n];
    for i in 0..rep.dim() {
        let wi = w.component(i);
        let prod = Process::from_jumps(
            &(0..n)
                .map(|o| (1..=eb.ticks()).map(|k| vec![nz.jump(o, k)[0].clone() * &wi.jump(o, k)[0]]).collect())
                .collect::<Vec<_>>(),
            1,
        );
        let cross = compensator_unchecked(&eb.space, &eb.f, &prod);
        for k in 1..=eb.ticks() {
            for o in 0..n {
                if !region(o, k) {
                    continue;
                }
                let zpre = pe.azema_pre(k, o);
                if !zpre.is_positive() {
                    continue;
                }
                if &cross.jump(o, k)[0] / &zpre != gamma.jump(o, k)[i] {
                    drift_ok = false;
                }
            }
        }
    }
    for k in 1..=eb.ticks() {
        for o in 0..n {
            if !region(o, k) {
                continue;
            }
            let (zpre, zopt) = (pe.azema_pre(k, o), pe.azema_optional(k, o));
            let fdn = dot(factors.phi.value(o, k), &factors.n.jump(o, k));
            let dz = &zopt - &zpre;
            if fdn != &dz / &zpre || &fdn / (Q::one() + &fdn) != &dz / &zopt {
                ratio_ok = false;
            }
            phi_dn[o][k - 1] = fdn;
        }
    }
    Ok(CrossCheck {
        drift_ok,
        ratio_ok,
        phi_dn,
    })
}

/// Initial enlargement on a product space `Ω_F × {0..m-1}` with a random
/// positive conditional law of `ξ` given the F-outcome, so every density is
/// positive.
pub fn gen_jacod_instance(seed: u64) -> InitialEnlargement {
    let mut rng = rng_for(seed);
    let (base, bf) = gen_random_filtration(&mut rng, &(2..=5), &(1..=3), 3, false);
    let m = rng.gen_range(2..=3usize);
    let n0 = base.len();
    let mut labels = Vec::with_capacity(n0 * m);
    let mut prob = Vec::with_capacity(n0 * m);
    let mut xi = Vec::with_capacity(n0 * m);
    for i in 0..n0 {
        let weights: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=4)).collect();
        let total: i64 = weights.iter().sum();
        for (x, wt) in weights.iter().enumerate() {
            labels.push(format!("{}x{x}", base.label(i)));
            prob.push(base.prob(i) * q(*wt, total));
            xi.push(x as i64);
        }
    }
    let space = SampleSpace::new(labels, prob).expect("product law is a probability");
    let lift = |p: &Partition| Partition::from_key(n0 * m, |w| p.block_of(w / m));
    let f = Filtration::new(
        lift(bf.initial()),
        bf.ticks()
            .iter()
            .map(|t| TickPartitions {
                pre: lift(&t.pre),
                at: lift(&t.at),
            })
            .collect(),
    )
    .expect("lifted chain refines");
    gen_initial_enlargement(space, f, xi).expect("product-space enlargement")
}

/// Progressive enlargement with a random time: either an arbitrary random
/// tick per outcome or the first tick at which a random martingale is
/// positive.
pub fn gen_azema_instance(seed: u64) -> ProgressiveEnlargement {
    let mut rng = rng_for(seed);
    let (space, f) = gen_random_filtration(&mut rng, &(2..=10), &(1..=4), 3, false);
    let n = space.len();
    let big_k = f.horizon();
    let tau: Vec<Option<usize>> = if rng.gen_bool(0.3) {
        let m = random_martingale(&space, &f, &mut rng);
        (0..n).map(|w| (1..=big_k).find(|&k| m.at(w, k).is_positive())).collect()
    } else {
        (0..n)
            .map(|_| if rng.gen_bool(0.2) { None } else { Some(rng.gen_range(1..=big_k)) })
            .collect()
    };
    gen_progressive_enlargement(space, f, tau).expect("progressive enlargement")
}

/// A random scalar martingale: per atom, small integer child values centred
/// by their conditional mean.
pub fn random_martingale(space: &SampleSpace, filt: &Filtration, rng: &mut ChaCha8Rng) -> Process {
    let n = space.len();
    let mut jumps = vec![vec![vec![Q::zero()]; filt.horizon()]; n];
    for k in 1..=filt.horizon() {
        let (pre, at) = (filt.pre(k), filt.at(k));
        for (a, block) in pre.blocks().iter().enumerate() {
            let kids = pre.children(a, at);
            let raw: Vec<Q> = kids.iter().map(|_| Q::from_integer(rng.gen_range(-4..=4).into())).collect();
            let mut vals = vec![Q::zero(); n];
            for (c, r) in kids.iter().zip(&raw) {
                for &w in at.block(*c) {
                    vals[w] = r.clone();
                }
            }
            let mean = block_average(space, block, &vals);
            for &w in block {
                jumps[w][k - 1][0] = &vals[w] - &mean;
            }
        }
    }
    Process::from_jumps(&jumps, 1)
}

fn max_abs_jump(x: &Process) -> Q {
    let mut m = Q::zero();
    for w in 0..x.num_outcomes() {
        for k in 1..=x.horizon() {
            for v in x.jump(w, k) {
                if v.abs() > m {
                    m = v.abs();
                }
            }
        }
    }
    m
}

/// Rescales so every jump is at most `bound` in absolute value.
fn scaled_to(x: &Process, bound: &Q) -> Process {
    let m = max_abs_jump(x);
    if m <= *bound {
        x.clone()
    } else {
        x.scale(&(bound / m))
    }
}

/// A random structure connector: a martingale with jumps in `[-1/2, 1/2]`.
pub fn random_connector(space: &SampleSpace, filt: &Filtration, rng: &mut ChaCha8Rng) -> Process {
    scaled_to(&random_martingale(space, filt, rng), &q(1, 2))
}

/// A strictly positive F-viable asset `S = s_0 ℰ(M + A)` with `M` a random
/// martingale and `ΔA_k = E[ΔD ΔM | F_{k-}]`, so `D` is a connector for
/// `S`. Returns `(S, D)`.
pub fn random_viable_asset(space: &SampleSpace, filt: &Filtration, rng: &mut ChaCha8Rng) -> (Process, Process) {
    let d = random_connector(space, filt, rng);
    let m = scaled_to(&random_martingale(space, filt, rng), &q(1, 4));
    let prod = Process::from_jumps(
        &(0..space.len())
            .map(|w| (1..=filt.horizon()).map(|k| vec![&d.jump(w, k)[0] * &m.jump(w, k)[0]]).collect())
            .collect::<Vec<_>>(),
        1,
    );
    let x = m.add(&compensator_unchecked(space, filt, &prod));
    let s0 = Q::from_integer(rng.gen_range(1..=5).into());
    (doleans_exp(&x).scale(&s0), d)
}

/// A random adapted asset with small integer values; often not viable.
pub fn random_adapted(space: &SampleSpace, filt: &Filtration, rng: &mut ChaCha8Rng) -> Process {
    let n = space.len();
    let mut values = vec![vec![Q::zero(); filt.horizon() + 1]; n];
    for k in 0..=filt.horizon() {
        for b in filt.at(k).blocks() {
            let v = Q::from_integer(rng.gen_range(-3..=3).into());
            for &w in b {
                values[w][k] = v.clone();
            }
        }
    }
    Process::scalar(values)
}
