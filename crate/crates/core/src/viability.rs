//! Structure connectors, deflators and the full-viability verdict.

use num::{One, Signed, Zero};

use crate::basis::{Filtration, SampleSpace};
use crate::calculus::{
    bracket, canonical_decomposition, compensator_unchecked, doleans_exp, integral_unchecked, martingale_defect,
};
use crate::enlargement::{
    check_condition_support, check_positivity, drift_operator, f_covariance, factor_drift, g_compensator,
    solve_factors, DriftFactors, EnlargedBasis, Mismatch, SupportWitness,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::oracle::{lp_deflator_oracle, Certificate, DeflatorSystem, OracleVerdict};
use crate::process::{Process, StoppingTime};
use crate::rational::{dot, Q};
use crate::representation::{atom_coefficient, build_representation, RepresentationProcess};

/// A scalar martingale `D` with `D_0 = 0`, `ΔD < 1` and
/// `S^v = [S^m, D]^{·p}` on the horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConnector {
    pub d: Process,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConnectorSearch {
    Found(StructureConnector),
    /// No admissible jump exists on this `F_{k-}` atom.
    Infeasible { tick: usize, atom: Vec<usize> },
}

impl ConnectorSearch {
    pub fn connector(&self) -> Option<&StructureConnector> {
        match self {
            ConnectorSearch::Found(c) => Some(c),
            ConnectorSearch::Infeasible { .. } => None,
        }
    }
}

/// Per atom, finds a mean-zero jump `x` on the children with
/// `E[ΔS^m_i x | F_{k-}] = ΔS^v_i` and `x < 1`. Writing `x = 1 - u`, the
/// strict bound becomes `u >= t` with the gap `t` maximised; the atom is
/// feasible iff the optimal gap is positive.
pub fn find_structure_connector(
    space: &SampleSpace,
    filt: &Filtration,
    s: &Process,
    horizon: &StoppingTime,
) -> Result<ConnectorSearch> {
    let dec = canonical_decomposition(space, filt, s)?;
    let n = space.len();
    let mut jumps = vec![vec![vec![Q::zero()]; filt.horizon()]; n];
    for k in 1..=filt.horizon() {
        let (pre, at) = (filt.pre(k), filt.at(k));
        for (a, block) in pre.blocks().iter().enumerate() {
            if !horizon.covers(block[0], k) {
                continue;
            }
            let mass = space.mass(block);
            let kids: Vec<&[usize]> = pre.children(a, at).into_iter().map(|c| at.block(c)).collect();
            let r = kids.len();
            let p: Vec<Q> = kids.iter().map(|c| space.mass(c) / &mass).collect();
            let drift = dec.drift_part.jump(block[0], k);
            // variables u_0..u_{r-1}, t
            let mut lp = LinearProgram::new(r + 1);
            lp.objective[r] = Q::one();
            let mut row = p.clone();
            row.push(Q::zero());
            lp.add(row, Relation::Eq, Q::one());
            for (i, v) in drift.iter().enumerate() {
                let mut row: Vec<Q> = kids
                    .iter()
                    .zip(&p)
                    .map(|(c, pj)| pj * &dec.martingale_part.jump(c[0], k)[i])
                    .collect();
                row.push(Q::zero());
                lp.add(row, Relation::Eq, -v.clone());
            }
            for j in 0..r {
                let mut row = vec![Q::zero(); r + 1];
                row[j] = Q::one();
                row[r] = -Q::one();
                lp.add(row, Relation::Ge, Q::zero());
            }
            let mut row = vec![Q::zero(); r + 1];
            row[r] = Q::one();
            lp.add(row, Relation::Le, Q::one());
            let u = match lp.solve() {
                LpOutcome::Optimal { x, value } if value.is_positive() => x,
                _ => {
                    return Ok(ConnectorSearch::Infeasible {
                        tick: k,
                        atom: block.clone(),
                    })
                }
            };
            for (c, uj) in kids.iter().zip(&u) {
                for &w in *c {
                    jumps[w][k - 1][0] = Q::one() - uj;
                }
            }
        }
    }
    Ok(ConnectorSearch::Found(StructureConnector {
        d: Process::from_jumps(&jumps, 1),
    }))
}

/// Checks every clause of the connector definition on `[0, T]`.
pub fn is_connector_for(
    space: &SampleSpace,
    filt: &Filtration,
    s: &Process,
    d: &Process,
    horizon: &StoppingTime,
) -> Result<bool> {
    let dec = canonical_decomposition(space, filt, s)?;
    if d.dim() != 1 || martingale_defect(space, filt, d)?.is_some() {
        return Ok(false);
    }
    if (0..space.len()).any(|w| !d.at(w, 0).is_zero()) {
        return Ok(false);
    }
    let cross = compensator_unchecked(space, filt, &bracket(&dec.martingale_part, d));
    for k in 1..=filt.horizon() {
        for w in 0..space.len() {
            if !horizon.covers(w, k) {
                continue;
            }
            if d.jump(w, k)[0] >= Q::one() || cross.jump(w, k) != dec.drift_part.jump(w, k) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `ℰ(-D)`, after checking that `D` is a martingale with `D_0 = 0` and
/// `ΔD < 1`.
pub fn deflator_from_connector(space: &SampleSpace, filt: &Filtration, d: &Process) -> Result<Process> {
    if d.dim() != 1 {
        return Err(Error::ConnectorInvalid(format!("dimension {}", d.dim())));
    }
    if (0..space.len()).any(|w| !d.at(w, 0).is_zero()) {
        return Err(Error::ConnectorInvalid("D_0 is not zero".into()));
    }
    if let Some(k) = martingale_defect(space, filt, d)? {
        return Err(Error::ConnectorInvalid(format!("not a martingale at tick {k}")));
    }
    for w in 0..space.len() {
        for k in 1..=filt.horizon() {
            if d.jump(w, k)[0] >= Q::one() {
                return Err(Error::ConnectorInvalid(format!("jump >= 1 at tick {k}")));
            }
        }
    }
    Ok(doleans_exp(&d.scale(&-Q::one())))
}

/// `W̃″ = W″ - Γ(W″)`.
pub fn w_tilde(eb: &EnlargedBasis, rep: &RepresentationProcess) -> Result<Process> {
    Ok(rep.w().sub(&drift_operator(eb, rep.w())?))
}

/// `K″` with `K″ = 𝖦 E[ΔW″ΔW″ᵀ | F_{k-}] (J″ + ζ″ᵀφ)` per `G_{k-}` atom,
/// where `𝖦` is the pseudo-inverse of the G-conditional covariance of
/// `ΔW̃″`, and `J″`, `ζ″` are the representation coefficients of `D` and
/// of `N = W″`. `D` must be an F-martingale.
pub fn solve_accessible_k(
    eb: &EnlargedBasis,
    factors: &DriftFactors,
    rep: &RepresentationProcess,
    d: &Process,
) -> Result<Process> {
    let support = check_condition_support(eb);
    if let Some(w) = support.witness {
        return Err(Error::SupportConditionFailed { tick: w.tick });
    }
    if let Some(k) = martingale_defect(&eb.space, &eb.f, d)? {
        return Err(Error::NotFMartingale { tick: k });
    }
    let wt = w_tilde(eb, rep)?;
    let dim = rep.dim();
    let mut kproc = Process::zeros(eb.num_outcomes(), eb.ticks(), dim);
    for k in 1..=eb.ticks() {
        let fpre = eb.f.pre(k);
        let mut coeffs = Vec::with_capacity(fpre.num_blocks());
        for a in 0..fpre.num_blocks() {
            let j = atom_coefficient(rep, k, a, |w| d.jump(w, k)[0].clone()).ok_or(Error::NotAMartingale { tick: k })?;
            let zeta: Vec<Vec<Q>> = (0..dim)
                .map(|i| {
                    atom_coefficient(rep, k, a, |w| rep.w().jump(w, k)[i].clone())
                        .expect("W″ components are representable")
                })
                .collect();
            coeffs.push((j, zeta, f_covariance(rep, k, a)));
        }
        for c in eb.g.pre(k).blocks() {
            if !eb.active(k, c) {
                continue;
            }
            let (j, zeta, cov_f) = &coeffs[eb.f_atom_of(k, c)];
            let phi = factors.phi.value(c[0], k);
            // x = J″ + ζ″ᵀ φ
            let x: Vec<Q> = (0..dim)
                .map(|h| &j[h] + (0..dim).map(|i| &phi[i] * &zeta[i][h]).sum::<Q>())
                .collect();
            let mass = eb.space.mass(c);
            let mut cov_g = Matrix::zeros(dim, dim);
            for &w in c {
                let v = wt.jump(w, k);
                cov_g.add_assign_scaled(&Matrix::outer(&v, &v), &(eb.space.prob(w) / &mass));
            }
            let kv = cov_g.pseudo_inverse().mul_vec(&cov_f.mul_vec(&x));
            for &w in c {
                *kproc.value_mut(w, k) = kv.clone();
            }
        }
    }
    Ok(kproc)
}

/// `K″ᵀΔW̃″ = (ΔD + φᵀΔN) / (1 + φᵀΔN)` at every `(ω, k)` on `[0, T]`.
pub fn jump_identity_check(
    eb: &EnlargedBasis,
    factors: &DriftFactors,
    rep: &RepresentationProcess,
    kproc: &Process,
    d: &Process,
) -> Result<Option<Mismatch>> {
    let wt = w_tilde(eb, rep)?;
    for k in 1..=eb.ticks() {
        for w in 0..eb.num_outcomes() {
            if !eb.horizon.covers(w, k) {
                continue;
            }
            let lhs = dot(kproc.value(w, k), &wt.jump(w, k));
            let fdn = dot(factors.phi.value(w, k), &factors.n.jump(w, k));
            let rhs = (&d.jump(w, k)[0] + &fdn) / (Q::one() + fdn);
            if lhs != rhs {
                return Ok(Some(Mismatch { tick: k, outcome: w }));
            }
        }
    }
    Ok(None)
}

/// The G-connector `Y = K″ᵀ·W̃″` built from an F-connector `D` of `S`.
/// Checks `ΔY < 1` and the compensated bracket identity
/// `[Y, M̃]^{G·p} = [D, M]^{F·p} + φᵀ·[N, M]^{F·p}` for `M = S^m`.
pub fn g_connector(
    eb: &EnlargedBasis,
    factors: &DriftFactors,
    rep: &RepresentationProcess,
    s: &Process,
    d: &Process,
) -> Result<StructureConnector> {
    let kproc = solve_accessible_k(eb, factors, rep, d)?;
    let y = integral_unchecked(&kproc, &w_tilde(eb, rep)?);
    for k in 1..=eb.ticks() {
        for w in 0..eb.num_outcomes() {
            if eb.horizon.covers(w, k) && y.jump(w, k)[0] >= Q::one() {
                return Err(Error::Internal(format!("ΔY >= 1 at tick {k}")));
            }
        }
    }
    let m = canonical_decomposition(&eb.space, &eb.f, s)?.martingale_part;
    let m_tilde = m.sub(&drift_operator(eb, &m)?);
    let lhs = g_compensator(eb, &bracket(&y, &m_tilde));
    let rhs = compensator_unchecked(&eb.space, &eb.f, &bracket(d, &m)).add(&factor_drift(eb, factors, &m));
    for k in 1..=eb.ticks() {
        for w in 0..eb.num_outcomes() {
            if eb.horizon.covers(w, k) && lhs.jump(w, k) != rhs.jump(w, k) {
                return Err(Error::Internal(format!("bracket identity fails at tick {k}")));
            }
        }
    }
    Ok(StructureConnector { d: y })
}

/// An F-martingale that cannot be deflated in G, with the oracle's proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArbitrageWitness {
    /// Index `h` of the `W″` component used as the asset.
    pub component: usize,
    pub tick: usize,
    pub atom: Vec<usize>,
    pub asset: Process,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViabilityReport {
    pub verdict: bool,
    pub condition_support: bool,
    pub positivity: bool,
    /// Always true on a finite basis: factors are solved, never assumed.
    pub drift_multiplier: bool,
    /// Both finiteness conditions on `φ` hold automatically on a finite basis.
    pub integrability_auto: bool,
    pub support_witness: Option<SupportWitness>,
    pub factors: DriftFactors,
    pub connector: Option<StructureConnector>,
    pub deflator: Option<Process>,
    pub witness: Option<ArbitrageWitness>,
}

pub fn full_viability_verdict(eb: &EnlargedBasis) -> Result<ViabilityReport> {
    let rep = build_representation(&eb.space, &eb.f);
    let factors = solve_factors(eb, &rep)?;
    let support = check_condition_support(eb);
    let positivity = check_positivity(eb, &factors)?.holds;
    let mut report = ViabilityReport {
        verdict: support.holds,
        condition_support: support.holds,
        positivity,
        drift_multiplier: true,
        integrability_auto: true,
        support_witness: support.witness.clone(),
        factors,
        connector: None,
        deflator: None,
        witness: None,
    };
    if support.holds {
        let zero = Process::zeros(eb.num_outcomes(), eb.ticks(), 1);
        let kproc = solve_accessible_k(eb, &report.factors, &rep, &zero)?;
        let y = integral_unchecked(&kproc, &w_tilde(eb, &rep)?);
        report.deflator = Some(doleans_exp(&y.scale(&-Q::one())));
        report.connector = Some(StructureConnector { d: y });
    } else {
        let sw = support.witness.expect("failing support check carries a witness");
        report.witness = Some(arbitrage_witness(eb, &rep, &sw)?);
    }
    Ok(report)
}

/// The `W″` component labelled by the missed child jumps by a constant
/// negative amount on the offending G-atom, so it cannot be deflated there.
fn arbitrage_witness(eb: &EnlargedBasis, rep: &RepresentationProcess, sw: &SupportWitness) -> Result<ArbitrageWitness> {
    let h = rep.child_label(sw.tick, sw.child[0]);
    let asset = rep.w().component(h);
    match lp_deflator_oracle(&eb.space, &eb.g, &asset, &eb.horizon) {
        OracleVerdict::Arbitrage { certificate } => {
            let sys = DeflatorSystem::build(&eb.space, &eb.g, &asset, &eb.horizon);
            if !certificate.verify(&sys) {
                return Err(Error::Internal("oracle certificate does not verify".into()));
            }
            Ok(ArbitrageWitness {
                component: h,
                tick: sw.tick,
                atom: sw.g_atom.clone(),
                asset,
                certificate,
            })
        }
        OracleVerdict::Viable { .. } => Err(Error::Internal("support failure without arbitrage".into())),
    }
}
