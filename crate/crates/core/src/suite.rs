//! The seeded property suite behind `verify-theorems`. Every property is
//! checked by exact equality; engine outputs are re-verified through routes
//! that do not share code with the solver being checked.

use std::collections::BTreeMap;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::basis::SampleSpace;
use crate::calculus::{freeze, is_martingale};
use crate::enlargement::{
    check_condition_support, compensator_transfer_check, drift_operator, factor_drift, solve_factors, EnlargedBasis,
};
use crate::error::{Error, Result};
use crate::event_kernels::{
    inaccessible_jump_value, k_triple_prime, random_accessible_data, random_inaccessible_data, series_identity,
};
use crate::io::enlarged_to_json;
use crate::models::{
    azema_phi_crosscheck, gen_azema_instance, gen_jacod_instance, gen_random_filtration, gen_random_instance,
    jacod_phi_crosscheck, random_adapted, random_martingale, random_viable_asset, rng_for, EnlargementKind,
    GeneratorConfig,
};
use crate::oracle::{check_deflator, lp_deflator_oracle, DeflatorSystem, OracleVerdict};
use crate::process::{Process, StoppingTime};
use crate::rational::{dot, Q};
use crate::representation::build_representation;
use crate::viability::{
    deflator_from_connector, find_structure_connector, full_viability_verdict, g_connector, is_connector_for,
    jump_identity_check, solve_accessible_k,
};

/// Minimum number of test assets per enlarged instance.
pub const ASSETS_PER_INSTANCE: usize = 20;

/// Independent sub-seed `tag` of `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng: ChaCha8Rng = rng_for(seed);
    rng.set_stream(tag);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub property: String,
    pub detail: String,
}

/// Tally of checks run, with the first failure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Checks {
    pub tallies: BTreeMap<String, usize>,
    pub failure: Option<Failure>,
}

impl Checks {
    pub fn record(&mut self, property: &str, ok: bool, detail: impl FnOnce() -> String) {
        *self.tallies.entry(property.to_string()).or_default() += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(Failure {
                property: property.to_string(),
                detail: detail(),
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn engine_error(&mut self, e: Error) {
        self.record("engine_error", false, || e.to_string());
    }

    fn absorb<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.engine_error(e);
                None
            }
        }
    }
}

fn product(a: &Process, b: &Process) -> Process {
    a.zip_with(b, |x, y| x * y)
}

/// One single-filtration asset: the connector search and the deflator LP
/// agree, and a found connector yields a deflator that passes direct
/// martingale checks.
pub fn check_single_asset(space: &SampleSpace, filt: &crate::basis::Filtration, s: &Process, checks: &mut Checks) -> bool {
    let horizon = StoppingTime::infinite(space.len());
    let Some(search) = checks.absorb(find_structure_connector(space, filt, s, &horizon)) else {
        return false;
    };
    let oracle = lp_deflator_oracle(space, filt, s, &horizon);
    let found = search.connector().is_some();
    checks.record("connector_iff_deflator", found == oracle.is_viable(), || {
        format!("connector found = {found}, oracle viable = {}", oracle.is_viable())
    });
    if let Some(c) = search.connector() {
        checks.record("connector_is_valid", is_connector_for(space, filt, s, &c.d, &horizon).unwrap_or(false), || {
            "search returned a process failing the connector clauses".into()
        });
        if let Some(z) = checks.absorb(deflator_from_connector(space, filt, &c.d)) {
            let ok = is_martingale(space, filt, &z).unwrap_or(false)
                && is_martingale(space, filt, &product(&z, s)).unwrap_or(false);
            checks.record("connector_deflator_martingale", ok, || "ℰ(-D) or ℰ(-D)S is not a martingale".into());
        }
    }
    match &oracle {
        OracleVerdict::Viable { deflator } => {
            checks.record("oracle_deflator_valid", check_deflator(space, filt, s, &horizon, deflator), || {
                "oracle deflator fails the acceptance test".into()
            });
        }
        OracleVerdict::Arbitrage { certificate } => {
            let sys = DeflatorSystem::build(space, filt, s, &horizon);
            checks.record("oracle_certificate_valid", certificate.verify(&sys), || {
                "infeasibility certificate does not verify".into()
            });
        }
    }
    found
}

pub fn single_filtration_checks(seed: u64, checks: &mut Checks) {
    let mut rng = rng_for(seed);
    let (space, f) = gen_random_filtration(&mut rng, &(2..=12), &(1..=4), 3, false);
    for j in 0..4 {
        let s = if j % 2 == 0 {
            random_viable_asset(&space, &f, &mut rng).0
        } else {
            random_adapted(&space, &f, &mut rng)
        };
        check_single_asset(&space, &f, &s, checks);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EnlargedSummary {
    pub verdict: bool,
    pub condition_support: bool,
    pub assets: usize,
}

/// F-viable test assets: `ℰ(W″_h)` for every component, then random
/// positive viable assets up to `ASSETS_PER_INSTANCE`, each with an
/// F-connector.
pub fn test_assets(eb: &EnlargedBasis, rng: &mut ChaCha8Rng) -> Vec<(Process, Process)> {
    let rep = build_representation(&eb.space, &eb.f);
    let n = eb.num_outcomes();
    let zero = Process::zeros(n, eb.ticks(), 1);
    let mut assets: Vec<(Process, Process)> = (0..rep.dim())
        .map(|h| (crate::calculus::doleans_exp(&rep.w().component(h)), zero.clone()))
        .collect();
    while assets.len() < ASSETS_PER_INSTANCE {
        assets.push(random_viable_asset(&eb.space, &eb.f, rng));
    }
    assets
}

pub fn enlarged_checks(eb: &EnlargedBasis, forced: bool, rng: &mut ChaCha8Rng, checks: &mut Checks) -> EnlargedSummary {
    let mut summary = EnlargedSummary::default();
    let rep = build_representation(&eb.space, &eb.f);
    let Some(factors) = checks.absorb(solve_factors(eb, &rep)) else {
        return summary;
    };
    let Some(report) = checks.absorb(full_viability_verdict(eb)) else {
        return summary;
    };
    summary.verdict = report.verdict;
    summary.condition_support = report.condition_support;
    checks.record("positivity", report.positivity, || "1 + φᵀΔN is not positive".into());
    checks.record("verdict_is_support", report.verdict == check_condition_support(eb).holds, || {
        "verdict differs from the support condition".into()
    });

    // drift operator against G-martingality and the factorization
    let mut martingales = vec![rep.w().clone()];
    martingales.push(random_martingale(&eb.space, &eb.f, rng));
    martingales.push(random_martingale(&eb.space, &eb.f, rng));
    for x in &martingales {
        let Some(gamma) = checks.absorb(drift_operator(eb, x)) else {
            continue;
        };
        let xt = freeze(&x.sub(&gamma), &eb.horizon);
        checks.record("drift_removes_g_drift", is_martingale(&eb.space, &eb.g, &xt).unwrap_or(false), || {
            "X - Γ(X) stopped at T is not a G-martingale".into()
        });
        checks.record("drift_factorization", factor_drift(eb, &factors, x) == gamma, || {
            "φᵀ·[N, X]^{F·p} differs from Γ(X)".into()
        });
    }
    let a = random_adapted(&eb.space, &eb.f, rng);
    if let Some(m) = checks.absorb(compensator_transfer_check(eb, &factors, &a)) {
        checks.record("compensator_transfer", m.is_none(), || format!("{m:?}"));
    }

    // the verdict against the test assets
    let assets = test_assets(eb, rng);
    summary.assets = assets.len();
    let mut all_viable = true;
    for (s, d) in &assets {
        let viable = lp_deflator_oracle(&eb.space, &eb.g, s, &eb.horizon).is_viable();
        all_viable &= viable;
        // the common deflator covers the F-martingale assets
        if let (Some(z), true) = (&report.deflator, d.is_zero()) {
            checks.record("common_deflator_martingales", check_deflator(&eb.space, &eb.g, s, &eb.horizon, z), || {
                "ℰ(-Y_0) does not deflate an F-martingale asset".into()
            });
        }
        if report.condition_support {
            let Some(kproc) = checks.absorb(solve_accessible_k(eb, &factors, &rep, d)) else {
                continue;
            };
            if let Some(m) = checks.absorb(jump_identity_check(eb, &factors, &rep, &kproc, d)) {
                checks.record("accessible_jump_identity", m.is_none(), || format!("{m:?}"));
            }
            if let Some(y) = checks.absorb(g_connector(eb, &factors, &rep, s, d)) {
                let ok = deflator_from_connector(&eb.space, &eb.g, &y.d)
                    .map(|z| check_deflator(&eb.space, &eb.g, s, &eb.horizon, &z))
                    .unwrap_or(false);
                checks.record("g_connector_deflates", ok, || "ℰ(-Y) does not deflate the asset".into());
            }
        }
    }
    checks.record("verdict_iff_assets_viable", report.verdict == all_viable, || {
        format!("verdict {} but all assets viable = {all_viable}", report.verdict)
    });
    if let Some(z) = &report.deflator {
        for h in 0..rep.dim() {
            let wh = rep.w().component(h);
            checks.record("one_deflator_all_components", check_deflator(&eb.space, &eb.g, &wh, &eb.horizon, z), || {
                format!("ℰ(-Y_0) does not deflate W″ component {h}")
            });
        }
    }
    if !report.verdict {
        let ok = report.witness.as_ref().is_some_and(|w| {
            let sys = DeflatorSystem::build(&eb.space, &eb.g, &w.asset, &eb.horizon);
            w.certificate.verify(&sys)
        });
        checks.record("witness_certificate", ok, || "missing or invalid arbitrage witness".into());
    }
    if forced {
        checks.record("forced_failure_detected", !report.verdict, || "forced support failure gave verdict true".into());
    }
    summary
}

pub fn kernel_checks(rng: &mut ChaCha8Rng, checks: &mut Checks) {
    let acc = random_accessible_data(rng);
    if let Some(si) = checks.absorb(series_identity(&acc)) {
        checks.record("accessible_series_identity", si.holds(), || format!("{} ≠ {}", si.k_side, si.closed_form));
    }
    let data = random_inaccessible_data(rng);
    inaccessible_kernel_check(&data, checks);
}

/// The reduced branch equation and the quotient jump identity for every
/// branch of one inaccessible event.
pub fn inaccessible_kernel_check(data: &crate::event_kernels::InaccessibleEventData, checks: &mut Checks) {
    let one_r = Q::from_integer(1.into()) + dot(&data.phi, &data.r);
    for h in 0..data.branches() {
        let Some(k) = checks.absorb(k_triple_prime(data, h)) else {
            return;
        };
        let lhs = &one_r * &k * &data.qbar[h];
        let rhs = (&data.j3[h] + dot(&data.phi, &data.zeta3[h])) * &data.q[h];
        checks.record("inaccessible_reduced_equation", lhs == rhs, || format!("branch {h}: {lhs} ≠ {rhs}"));
        let jump = &k * &data.alpha[h];
        checks.record("inaccessible_jump_quotient", jump == inaccessible_jump_value(data, h), || {
            format!("branch {h}")
        });
    }
}

pub fn enlargement_model_checks(seed: u64, checks: &mut Checks) {
    let init = gen_jacod_instance(derive_seed(seed, 1));
    if let Some(cc) = checks.absorb(jacod_phi_crosscheck(&init)) {
        checks.record("initial_enlargement_density", cc.holds(), || format!("{cc:?}"));
    }
    let pe = gen_azema_instance(derive_seed(seed, 2));
    match azema_phi_crosscheck(&pe) {
        Ok(cc) => checks.record("progressive_enlargement_azema", cc.holds(), || format!("{cc:?}")),
        Err(Error::AzemaDegenerate) => checks.record("progressive_enlargement_degenerate", true, String::new),
        Err(e) => checks.engine_error(e),
    }
}

pub fn instance_config(index: u64, seed: u64) -> GeneratorConfig {
    let kind = match index % 3 {
        0 => EnlargementKind::Random,
        1 => EnlargementKind::Initial,
        _ => EnlargementKind::Progressive,
    };
    GeneratorConfig {
        enlargement_kind: kind,
        force_condition_failure: index % 4 == 3,
        ..GeneratorConfig::new(seed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceOutcome {
    pub index: u64,
    pub seed: u64,
    pub config: GeneratorConfig,
    pub summary: EnlargedSummary,
    pub checks: Checks,
    pub instance: Option<EnlargedBasis>,
}

pub fn run_instance(suite_seed: u64, index: u64) -> InstanceOutcome {
    let seed = derive_seed(suite_seed, index);
    let config = instance_config(index, seed);
    let mut checks = Checks::default();
    single_filtration_checks(derive_seed(seed, 3), &mut checks);
    let mut rng = rng_for(derive_seed(seed, 4));
    let mut summary = EnlargedSummary::default();
    let instance = checks.absorb(gen_random_instance(&config));
    if let Some(eb) = &instance {
        summary = enlarged_checks(eb, config.force_condition_failure, &mut rng, &mut checks);
    }
    kernel_checks(&mut rng, &mut checks);
    enlargement_model_checks(seed, &mut checks);
    InstanceOutcome {
        index,
        seed,
        config,
        summary,
        checks,
        instance,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteRun {
    pub config: SuiteConfig,
    pub outcomes: Vec<InstanceOutcome>,
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let outcomes = pool.install(|| (0..cfg.instances).into_par_iter().map(|i| run_instance(cfg.seed, i)).collect());
    Ok(SuiteRun {
        config: cfg.clone(),
        outcomes,
    })
}

impl SuiteRun {
    pub fn first_violation(&self) -> Option<&InstanceOutcome> {
        self.outcomes.iter().find(|o| !o.checks.passed())
    }

    pub fn tallies(&self) -> BTreeMap<String, usize> {
        let mut t = BTreeMap::new();
        for o in &self.outcomes {
            for (k, v) in &o.checks.tallies {
                *t.entry(k.clone()).or_default() += v;
            }
        }
        t
    }

    /// The report, independent of the worker count.
    pub fn report(&self) -> Value {
        let rows: Vec<Value> = self
            .outcomes
            .iter()
            .map(|o| {
                serde_json::json!({
                    "index": o.index,
                    "seed": o.seed,
                    "kind": format!("{:?}", o.config.enlargement_kind).to_lowercase(),
                    "forced": o.config.force_condition_failure,
                    "verdict": o.summary.verdict,
                    "condition_support": o.summary.condition_support,
                    "assets": o.summary.assets,
                    "passed": o.checks.passed(),
                })
            })
            .collect();
        let violation = self.first_violation().map(|o| {
            serde_json::json!({
                "index": o.index,
                "seed": o.seed,
                "failure": o.checks.failure,
                "instance": o.instance.as_ref().map(enlarged_to_json),
            })
        });
        let verdict_true = self.outcomes.iter().filter(|o| o.summary.verdict).count();
        serde_json::json!({
            "seed": self.config.seed,
            "instances": self.config.instances,
            "passed": violation.is_none(),
            "verdicts": {"true": verdict_true, "false": self.outcomes.len() - verdict_true},
            "checks": self.tallies(),
            "results": rows,
            "violation": violation,
        })
    }
}
