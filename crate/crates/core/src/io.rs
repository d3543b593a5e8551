//! JSON exchange format. Rationals travel as `"p/q"` strings, outcomes are
//! referred to by label, processes are `[outcome][tick][component]`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::basis::{Filtration, Partition, SampleSpace, TickPartitions};
use crate::enlargement::{EnlargedBasis, SupportWitness};
use crate::error::{Error, Result};
use crate::event_kernels::{AccessibleEventData, InaccessibleEventData};
use crate::process::{Process, StoppingTime};
use crate::rational::{format, parse, Q};
use crate::viability::ViabilityReport;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickJson {
    pub pre: Vec<Vec<String>>,
    pub at: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationJson {
    pub initial: Vec<Vec<String>>,
    pub ticks: Vec<TickJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub outcomes: Vec<String>,
    pub prob: Vec<String>,
    pub filtration: FiltrationJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enlarged: Option<FiltrationJson>,
    /// Horizon tick per outcome, `null` for infinity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Vec<Option<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<Vec<Vec<Vec<String>>>>,
}

/// A parsed instance. `g` and `horizon` are present for enlarged bases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub space: SampleSpace,
    pub f: Filtration,
    pub g: Option<Filtration>,
    pub horizon: Option<StoppingTime>,
    pub asset: Option<Process>,
}

impl Instance {
    /// The enlarged basis, with `G = F` and an infinite horizon by default.
    pub fn enlarged_basis(&self) -> Result<EnlargedBasis> {
        let n = self.space.len();
        EnlargedBasis::new(
            self.space.clone(),
            self.f.clone(),
            self.g.clone().unwrap_or_else(|| self.f.clone()),
            self.horizon.clone().unwrap_or_else(|| StoppingTime::infinite(n)),
        )
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn partition_from(space: &SampleSpace, blocks: &[Vec<String>]) -> Result<Partition> {
    let idx = blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|l| space.index_of(l).ok_or_else(|| schema(format!("unknown outcome label {l:?}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Partition::new(space.len(), idx)
}

fn partition_to(space: &SampleSpace, p: &Partition) -> Vec<Vec<String>> {
    p.blocks()
        .iter()
        .map(|b| b.iter().map(|&w| space.label(w).to_string()).collect())
        .collect()
}

fn filtration_from(space: &SampleSpace, fj: &FiltrationJson) -> Result<Filtration> {
    let ticks = fj
        .ticks
        .iter()
        .map(|t| {
            Ok(TickPartitions {
                pre: partition_from(space, &t.pre)?,
                at: partition_from(space, &t.at)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Filtration::new(partition_from(space, &fj.initial)?, ticks)
}

pub fn filtration_to_json(space: &SampleSpace, f: &Filtration) -> FiltrationJson {
    FiltrationJson {
        initial: partition_to(space, f.initial()),
        ticks: f
            .ticks()
            .iter()
            .map(|t| TickJson {
                pre: partition_to(space, &t.pre),
                at: partition_to(space, &t.at),
            })
            .collect(),
    }
}

pub fn parse_rationals(v: &[String]) -> Result<Vec<Q>> {
    v.iter().map(|s| parse(s)).collect()
}

pub fn format_rationals(v: &[Q]) -> Vec<String> {
    v.iter().map(format).collect()
}

pub fn process_from_json(rows: &[Vec<Vec<String>>]) -> Result<Process> {
    let dim = rows.first().and_then(|r| r.first()).map_or(1, Vec::len);
    let values = rows
        .iter()
        .map(|r| r.iter().map(|v| parse_rationals(v)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Process::try_new(dim, values)
}

pub fn process_to_json(x: &Process) -> Vec<Vec<Vec<String>>> {
    x.values()
        .iter()
        .map(|r| r.iter().map(|v| format_rationals(v)).collect())
        .collect()
}

/// Scalar process as `[outcome][tick]`.
pub fn scalar_to_json(x: &Process) -> Vec<Vec<String>> {
    x.values().iter().map(|r| r.iter().map(|v| format(&v[0])).collect()).collect()
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let ij: InstanceJson = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    instance_from_json(&ij)
}

pub fn instance_from_json(ij: &InstanceJson) -> Result<Instance> {
    if ij.outcomes.len() != ij.prob.len() {
        return Err(schema("outcomes and prob differ in length"));
    }
    let space = SampleSpace::new(ij.outcomes.clone(), parse_rationals(&ij.prob)?)?;
    let f = filtration_from(&space, &ij.filtration)?;
    let g = ij.enlarged.as_ref().map(|g| filtration_from(&space, g)).transpose()?;
    let horizon = match &ij.horizon {
        Some(h) if h.len() != space.len() => return Err(schema("horizon length differs from outcome count")),
        Some(h) => Some(StoppingTime::new(h.clone())),
        None => None,
    };
    let asset = ij.asset.as_ref().map(|a| process_from_json(a)).transpose()?;
    if let Some(a) = &asset {
        if a.num_outcomes() != space.len() || a.horizon() != f.horizon() {
            return Err(schema("asset shape differs from the basis"));
        }
    }
    Ok(Instance {
        space,
        f,
        g,
        horizon,
        asset,
    })
}

pub fn instance_to_json(
    space: &SampleSpace,
    f: &Filtration,
    g: Option<&Filtration>,
    horizon: Option<&StoppingTime>,
    asset: Option<&Process>,
) -> InstanceJson {
    InstanceJson {
        outcomes: space.labels().to_vec(),
        prob: format_rationals(space.probs()),
        filtration: filtration_to_json(space, f),
        enlarged: g.map(|g| filtration_to_json(space, g)),
        horizon: horizon.map(|h| h.values().to_vec()),
        asset: asset.map(process_to_json),
    }
}

pub fn enlarged_to_json(eb: &EnlargedBasis) -> InstanceJson {
    instance_to_json(&eb.space, &eb.f, Some(&eb.g), Some(&eb.horizon), None)
}

fn labels_of(space: &SampleSpace, set: &[usize]) -> Vec<String> {
    set.iter().map(|&w| space.label(w).to_string()).collect()
}

pub fn support_witness_json(space: &SampleSpace, sw: &SupportWitness) -> Value {
    json!({
        "tick": sw.tick,
        "g_atom": labels_of(space, &sw.g_atom),
        "missed_child": labels_of(space, &sw.child),
    })
}

pub fn report_to_json(eb: &EnlargedBasis, r: &ViabilityReport) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "component": w.component,
            "tick": w.tick,
            "atom": labels_of(&eb.space, &w.atom),
            "asset": scalar_to_json(&w.asset),
            "certificate": format_rationals(&w.certificate.y),
        })
    });
    json!({
        "verdict": r.verdict,
        "condition_support": r.condition_support,
        "positivity": r.positivity,
        "drift_multiplier": r.drift_multiplier,
        "integrability_auto": r.integrability_auto,
        "phi": process_to_json(&r.factors.phi),
        "connector": r.connector.as_ref().map(|c| scalar_to_json(&c.d)),
        "deflator": r.deflator.as_ref().map(scalar_to_json),
        "support_witness": r.support_witness.as_ref().map(|s| support_witness_json(&eb.space, s)),
        "witness": witness,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelJson {
    Accessible {
        p: Vec<String>,
        pbar: Vec<String>,
        d_vals: Vec<String>,
        n_vals: Vec<Vec<String>>,
        phi: Vec<String>,
        weight: String,
    },
    Inaccessible {
        q: Vec<String>,
        qbar: Vec<String>,
        l_vals: Vec<Vec<String>>,
        r: Vec<String>,
        alpha: Vec<String>,
        j3: Vec<String>,
        zeta3: Vec<Vec<String>>,
        phi: Vec<String>,
    },
    Continuous {
        j1: Vec<String>,
        zeta1: Vec<Vec<String>>,
        phi: Vec<String>,
    },
}

pub enum KernelData {
    Accessible(AccessibleEventData),
    Inaccessible(InaccessibleEventData),
    Continuous {
        j1: Vec<Q>,
        zeta1: Vec<Vec<Q>>,
        phi: Vec<Q>,
    },
}

fn matrix(rows: &[Vec<String>]) -> Result<Vec<Vec<Q>>> {
    rows.iter().map(|r| parse_rationals(r)).collect()
}

pub fn parse_kernel(text: &str) -> Result<KernelData> {
    let kj: KernelJson = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    Ok(match kj {
        KernelJson::Accessible {
            p,
            pbar,
            d_vals,
            n_vals,
            phi,
            weight,
        } => KernelData::Accessible(AccessibleEventData {
            p: parse_rationals(&p)?,
            pbar: parse_rationals(&pbar)?,
            d_vals: parse_rationals(&d_vals)?,
            n_vals: matrix(&n_vals)?,
            phi: parse_rationals(&phi)?,
            weight: parse(&weight)?,
        }),
        KernelJson::Inaccessible {
            q,
            qbar,
            l_vals,
            r,
            alpha,
            j3,
            zeta3,
            phi,
        } => KernelData::Inaccessible(InaccessibleEventData {
            q: parse_rationals(&q)?,
            qbar: parse_rationals(&qbar)?,
            l_vals: matrix(&l_vals)?,
            r: parse_rationals(&r)?,
            alpha: parse_rationals(&alpha)?,
            j3: parse_rationals(&j3)?,
            zeta3: matrix(&zeta3)?,
            phi: parse_rationals(&phi)?,
        }),
        KernelJson::Continuous { j1, zeta1, phi } => KernelData::Continuous {
            j1: parse_rationals(&j1)?,
            zeta1: matrix(&zeta1)?,
            phi: parse_rationals(&phi)?,
        },
    })
}

fn rows_to(m: &[Vec<Q>]) -> Vec<Vec<String>> {
    m.iter().map(|r| format_rationals(r)).collect()
}

pub fn inaccessible_to_json(d: &InaccessibleEventData) -> KernelJson {
    KernelJson::Inaccessible {
        q: format_rationals(&d.q),
        qbar: format_rationals(&d.qbar),
        l_vals: rows_to(&d.l_vals),
        r: format_rationals(&d.r),
        alpha: format_rationals(&d.alpha),
        j3: format_rationals(&d.j3),
        zeta3: rows_to(&d.zeta3),
        phi: format_rationals(&d.phi),
    }
}

pub fn accessible_to_json(d: &AccessibleEventData) -> KernelJson {
    KernelJson::Accessible {
        p: format_rationals(&d.p),
        pbar: format_rationals(&d.pbar),
        d_vals: format_rationals(&d.d_vals),
        n_vals: rows_to(&d.n_vals),
        phi: format_rationals(&d.phi),
        weight: format(&d.weight),
    }
}
