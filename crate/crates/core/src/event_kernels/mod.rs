//! Per-event kernel formulas for the continuous and totally inaccessible
//! parts, which have no genuine process realization on a finite tick grid,
//! plus the accessible jump value and grid diagnostics for the
//! integrability condition.

mod series;

pub use series::{
    sample_levels, series_diagnostics, GridLevel, SeriesInput, SeriesReport, SeriesSummary, SeriesVerdict, Thresholds,
};

use num::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{Filtration, Partition, SampleSpace, TickPartitions};
use crate::enlargement::{solve_factors, EnlargedBasis};
use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm, Matrix};
use crate::process::{Process, StoppingTime};
use crate::rational::{dot, dyadic, q, Q};
use crate::representation::build_representation;
use crate::viability::{solve_accessible_k, w_tilde};

/// Data of one accessible jump time: F- and G-conditional branch laws, the
/// branch values of `ΔD` and `ΔN`, and `φ` there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessibleEventData {
    pub p: Vec<Q>,
    pub pbar: Vec<Q>,
    pub d_vals: Vec<Q>,
    /// `n_vals[h]` is the value of `ΔN` on branch `h`.
    pub n_vals: Vec<Vec<Q>>,
    pub phi: Vec<Q>,
    pub weight: Q,
}

/// Data of one totally inaccessible jump time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InaccessibleEventData {
    pub q: Vec<Q>,
    pub qbar: Vec<Q>,
    /// `l_vals[h]` is the value of `ΔN` on `B_h`.
    pub l_vals: Vec<Vec<Q>>,
    /// `E[ΔN | F_{S-}]`, taken as input.
    pub r: Vec<Q>,
    pub alpha: Vec<Q>,
    pub j3: Vec<Q>,
    /// `zeta3[h]` is the column `ζ‴_h`, of the same length as `phi`.
    pub zeta3: Vec<Vec<Q>>,
    pub phi: Vec<Q>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::DataInvariantViolated(msg.into())
}

fn check_law(v: &[Q], name: &str) -> Result<()> {
    if v.iter().any(Signed::is_negative) {
        return Err(bad(format!("{name} has a negative entry")));
    }
    if !v.iter().sum::<Q>().is_one() {
        return Err(bad(format!("{name} does not sum to 1")));
    }
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl AccessibleEventData {
    pub fn branches(&self) -> usize {
        self.p.len()
    }

    pub fn check(&self) -> Result<()> {
        let m = self.p.len();
        check_len(m, self.pbar.len())?;
        check_len(m, self.d_vals.len())?;
        check_len(m, self.n_vals.len())?;
        for n in &self.n_vals {
            check_len(self.phi.len(), n.len())?;
        }
        check_law(&self.p, "p")?;
        check_law(&self.pbar, "pbar")?;
        for h in 0..m {
            if (Q::one() + dot(&self.phi, &self.n_vals[h])) * &self.p[h] != self.pbar[h] {
                return Err(bad(format!("(1 + φᵀn)p ≠ p̄ on branch {h}")));
            }
            if self.p[h].is_positive() && self.d_vals[h] >= Q::one() {
                return Err(bad(format!("d ≥ 1 on branch {h}")));
            }
        }
        if !dot(&self.p, &self.d_vals).is_zero() {
            return Err(bad("ΔD is not centred under p"));
        }
        for i in 0..self.phi.len() {
            if !self.p.iter().zip(&self.n_vals).map(|(p, n)| p * &n[i]).sum::<Q>().is_zero() {
                return Err(bad("ΔN is not centred under p"));
            }
        }
        Ok(())
    }
}

impl InaccessibleEventData {
    pub fn branches(&self) -> usize {
        self.q.len()
    }

    pub fn check(&self) -> Result<()> {
        let m = self.q.len();
        let dn = self.phi.len();
        for len in [self.qbar.len(), self.l_vals.len(), self.alpha.len(), self.j3.len(), self.zeta3.len()] {
            check_len(m, len)?;
        }
        check_len(dn, self.r.len())?;
        for v in self.l_vals.iter().chain(&self.zeta3) {
            check_len(dn, v.len())?;
        }
        check_law(&self.q, "q")?;
        check_law(&self.qbar, "qbar")?;
        let one_r = Q::one() + dot(&self.phi, &self.r);
        if !one_r.is_positive() {
            return Err(bad("1 + φᵀR is not positive"));
        }
        for h in 0..m {
            let one_l = Q::one() + dot(&self.phi, &self.l_vals[h]);
            if &one_l * &self.q[h] != &one_r * &self.qbar[h] {
                return Err(bad(format!("(1 + φᵀl)q ≠ (1 + φᵀR)q̄ on branch {h}")));
            }
            if self.q[h].is_positive() {
                if !one_l.is_positive() {
                    return Err(bad(format!("1 + φᵀΔN is not positive on branch {h}")));
                }
                let zl: Vec<Q> = self.zeta3[h].iter().map(|z| z * &self.alpha[h]).collect();
                if zl != self.l_vals[h] {
                    return Err(bad(format!("l ≠ ζ‴α on branch {h}")));
                }
            }
        }
        Ok(())
    }
}

/// `K′ = J′ + ζ′ᵀφ`, with `ζ′` having one row per entry of `φ`.
pub fn k_prime(j1: &[Q], zeta1: &Matrix, phi: &[Q]) -> Result<Vec<Q>> {
    check_len(phi.len(), zeta1.rows())?;
    check_len(j1.len(), zeta1.cols())?;
    let zt = zeta1.transpose().mul_vec(phi);
    Ok(j1.iter().zip(zt).map(|(a, b)| a + b).collect())
}

/// `K‴_h = (J‴_h + φᵀζ‴_h) / (1 + φᵀζ‴_h α‴_h)`, zero where the
/// denominator vanishes.
pub fn k_triple_prime(data: &InaccessibleEventData, h: usize) -> Result<Q> {
    data.check()?;
    if h >= data.branches() {
        return Err(Error::DimensionMismatch {
            expected: data.branches(),
            found: h,
        });
    }
    let fz = dot(&data.phi, &data.zeta3[h]);
    let den = Q::one() + &fz * &data.alpha[h];
    if den.is_zero() {
        return Ok(Q::zero());
    }
    Ok((&data.j3[h] + fz) / den)
}

/// `(ΔD + φᵀΔN) / (1 + φᵀΔN)` on `B_h`, from `ΔD = J‴_h α‴_h`, `ΔN = l_h`.
pub fn inaccessible_jump_value(data: &InaccessibleEventData, h: usize) -> Q {
    let fl = dot(&data.phi, &data.l_vals[h]);
    (&data.j3[h] * &data.alpha[h] + &fl) / (Q::one() + fl)
}

/// `(d_h + φᵀn_h) / (1 + φᵀn_h)`.
pub fn accessible_jump_value(data: &AccessibleEventData, h: usize) -> Result<Q> {
    data.check()?;
    if !data.p[h].is_positive() || !data.pbar[h].is_positive() {
        return Err(Error::ZeroProbabilityBranch { branch: h });
    }
    let fn_ = dot(&data.phi, &data.n_vals[h]);
    Ok((&data.d_vals[h] + &fn_) / (Q::one() + fn_))
}

/// One-tick basis realizing accessible data: outcomes `(h, in)` and
/// `(h, out)`, `F_1` reveals `h`, `G_{1-} = {in, out}`, and
/// `P(h, in) = λ p̄_h` with `λ = min(p_h / p̄_h) / 2`, so that the law of
/// `h` given `in` is `p̄`. Returns the basis, `D` and the `in` atom.
pub fn synthetic_basis(data: &AccessibleEventData) -> Result<(EnlargedBasis, Process, Vec<usize>)> {
    data.check()?;
    let live: Vec<usize> = (0..data.branches()).filter(|&h| data.p[h].is_positive()).collect();
    if let Some(&h) = live.iter().find(|&&h| !data.pbar[h].is_positive()) {
        return Err(Error::ZeroProbabilityBranch { branch: h });
    }
    let lambda = live
        .iter()
        .map(|&h| &data.p[h] / &data.pbar[h])
        .min()
        .expect("some branch has positive mass")
        / Q::from_integer(2.into());
    let mut labels = Vec::new();
    let mut prob = Vec::new();
    let mut djump = Vec::new();
    for &h in &live {
        let inside = &lambda * &data.pbar[h];
        let outside = &data.p[h] - &inside;
        labels.push(format!("b{h}in"));
        prob.push(inside);
        labels.push(format!("b{h}out"));
        prob.push(outside);
        djump.push(vec![vec![data.d_vals[h].clone()]]);
        djump.push(vec![vec![data.d_vals[h].clone()]]);
    }
    let n = labels.len();
    let space = SampleSpace::new(labels, prob)?;
    let by_branch = Partition::from_key(n, |w| w / 2);
    let side = Partition::from_key(n, |w| w % 2);
    let f = Filtration::new(
        Partition::trivial(n),
        vec![TickPartitions {
            pre: Partition::trivial(n),
            at: by_branch.clone(),
        }],
    )?;
    let g = Filtration::new(
        Partition::trivial(n),
        vec![TickPartitions {
            pre: side.clone(),
            at: side.meet(&by_branch),
        }],
    )?;
    let eb = EnlargedBasis::new(space, f, g, StoppingTime::infinite(n))?;
    let inside = (0..n).step_by(2).collect();
    Ok((eb, Process::from_jumps(&djump, 1), inside))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesIdentity {
    /// `K″ᵀ E[ΔW̃″ ΔW̃″ᵀ | G_{1-}] K″` on the `in` atom, via the
    /// pseudo-inverse route.
    pub k_side: Q,
    /// `Σ_h p̄_h ((d_h + φᵀn_h) / (1 + φᵀn_h))²`.
    pub closed_form: Q,
    /// Pointwise `K″ᵀΔW̃″` on each live branch of the `in` atom.
    pub k_jumps: Vec<Q>,
}

impl SeriesIdentity {
    pub fn holds(&self) -> bool {
        self.k_side == self.closed_form
    }
}

/// Both sides of the accessible series identity at one jump time.
pub fn series_identity(data: &AccessibleEventData) -> Result<SeriesIdentity> {
    let (eb, d, inside) = synthetic_basis(data)?;
    let rep = build_representation(&eb.space, &eb.f);
    let factors = solve_factors(&eb, &rep)?;
    let kproc = solve_accessible_k(&eb, &factors, &rep, &d)?;
    let wt = w_tilde(&eb, &rep)?;
    let mass = eb.space.mass(&inside);
    let kv = kproc.value(inside[0], 1);
    let mut k_side = Q::zero();
    let mut k_jumps = Vec::with_capacity(inside.len());
    for &w in &inside {
        let v = dot(kv, &wt.jump(w, 1));
        k_side += eb.space.prob(w) / &mass * &v * &v;
        k_jumps.push(v);
    }
    let mut closed_form = Q::zero();
    for h in 0..data.branches() {
        if data.p[h].is_positive() {
            let v = accessible_jump_value(data, h)?;
            closed_form += &data.pbar[h] * &v * &v;
        }
    }
    Ok(SeriesIdentity {
        k_side,
        closed_form,
        k_jumps,
    })
}

fn random_law(rng: &mut ChaCha8Rng, m: usize, allow_zero: bool) -> Vec<Q> {
    let lo = if allow_zero { 0 } else { 1 };
    let mut w: Vec<i64> = (0..m).map(|_| rng.gen_range(lo..=6)).collect();
    if w.iter().all(|&x| x == 0) {
        w[0] = 1;
    }
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| q(x, total)).collect()
}

fn small(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(-6..=6), rng.gen_range(1..=4))
}

/// Random accessible data with `ΔN` the representation jumps at weight
/// `1/2` and minimum-norm `φ`.
pub fn random_accessible_data(rng: &mut ChaCha8Rng) -> AccessibleEventData {
    let m = rng.gen_range(2..=4);
    let p = random_law(rng, m, false);
    let pbar = random_law(rng, m, false);
    let weight = dyadic(1);
    let n_vals: Vec<Vec<Q>> = (0..m)
        .map(|h| (0..m).map(|j| &weight * (if j == h { Q::one() } else { Q::zero() } - &p[j])).collect())
        .collect();
    let ratios: Vec<Q> = (0..m).map(|h| &pbar[h] / &p[h] - Q::one()).collect();
    let phi = solve_min_norm(&Matrix::from_rows(n_vals.clone()), &ratios).expect("ratios are p-centred");
    let raw: Vec<Q> = (0..m).map(|_| small(rng)).collect();
    let mean = dot(&p, &raw);
    let mut d_vals: Vec<Q> = raw.iter().map(|r| r - &mean).collect();
    let top = d_vals.iter().map(|v| v.abs()).max().unwrap_or_else(Q::zero);
    if top >= Q::one() {
        let s = Q::one() / (top * Q::from_integer(2.into()));
        d_vals.iter_mut().for_each(|v| *v *= &s);
    }
    AccessibleEventData {
        p,
        pbar,
        d_vals,
        n_vals,
        phi,
        weight,
    }
}

/// Random inaccessible data: `l_h = ζ‴_h α‴_h`, `φ` scaled so
/// `|φᵀl_h| <= 1/2`, `R` equal to `Σ q_h l_h` plus a part orthogonal to `φ`,
/// and `q̄` from the branch equation.
pub fn random_inaccessible_data(rng: &mut ChaCha8Rng) -> InaccessibleEventData {
    let m = rng.gen_range(2..=4);
    let dn = rng.gen_range(1..=3);
    let ql = random_law(rng, m, true);
    let alpha: Vec<Q> = (0..m)
        .map(|_| loop {
            let a = small(rng);
            if !a.is_zero() {
                break a;
            }
        })
        .collect();
    let zeta3: Vec<Vec<Q>> = (0..m).map(|_| (0..dn).map(|_| small(rng)).collect()).collect();
    let l_vals: Vec<Vec<Q>> = zeta3.iter().zip(&alpha).map(|(z, a)| z.iter().map(|v| v * a).collect()).collect();
    let mut phi: Vec<Q> = (0..dn).map(|_| small(rng)).collect();
    let top = l_vals.iter().map(|l| dot(&phi, l).abs()).max().unwrap_or_else(Q::zero);
    if top > q(1, 2) {
        let s = q(1, 2) / top;
        phi.iter_mut().for_each(|v| *v *= &s);
    }
    let mut r: Vec<Q> = (0..dn).map(|i| ql.iter().zip(&l_vals).map(|(qh, l)| qh * &l[i]).sum()).collect();
    // add a component orthogonal to φ
    let pp = dot(&phi, &phi);
    if dn > 1 && !pp.is_zero() {
        let v: Vec<Q> = (0..dn).map(|_| small(rng)).collect();
        let c = dot(&phi, &v) / &pp;
        for i in 0..dn {
            r[i] += &v[i] - &c * &phi[i];
        }
    }
    let one_r = Q::one() + dot(&phi, &r);
    let qbar = (0..m).map(|h| (Q::one() + dot(&phi, &l_vals[h])) * &ql[h] / &one_r).collect();
    let j3 = (0..m).map(|_| small(rng)).collect();
    InaccessibleEventData {
        q: ql,
        qbar,
        l_vals,
        r,
        alpha,
        j3,
        zeta3,
        phi,
    }
}
