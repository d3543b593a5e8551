//! One pass/fail line per acceptance criterion. Run with
//! `cargo test -p filtrex-core --test acceptance -- --nocapture`.

use std::io::Write;
use std::time::Instant;

use num::{One, Signed, Zero};

use filtrex::basis::block_average;
use filtrex::enlargement::{check_condition_support, solve_factors, EnlargedBasis};
use filtrex::event_kernels::{random_inaccessible_data, sample_levels, series_diagnostics, SeriesInput, SeriesVerdict, Thresholds};
use filtrex::models::{
    azema_phi_crosscheck, gen_azema_instance, gen_jacod_instance, gen_random_instance, jacod_phi_crosscheck,
    random_viable_asset, rng_for, worked_six_point,
};
use filtrex::oracle::{check_deflator, lp_deflator_oracle};
use filtrex::process::Process;
use filtrex::representation::build_representation;
use filtrex::suite::{
    derive_seed, enlarged_checks, inaccessible_kernel_check, instance_config, run_suite, single_filtration_checks,
    Checks, SuiteConfig,
};
use filtrex::viability::{full_viability_verdict, jump_identity_check, solve_accessible_k};
use filtrex::{Error, Q};

const SEED: u64 = 20_240_601;
const INSTANCES: u64 = 1000;

struct Line {
    id: u8,
    pass: bool,
    text: String,
}

/// Written to stdout directly so the lines survive the harness's capture.
fn say(msg: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{msg}");
    let _ = out.flush();
}

fn line(id: u8, pass: bool, text: String) -> Line {
    say(format!("criterion {id}: {} | {text}", if pass { "PASS" } else { "FAIL" }));
    Line { id, pass, text }
}

fn failure_note(c: &Checks) -> String {
    c.failure
        .as_ref()
        .map_or(String::new(), |f| format!(" first failure {}: {}", f.property, f.detail))
}

fn count(c: &Checks, key: &str) -> usize {
    c.tallies.get(key).copied().unwrap_or(0)
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let mut checks = Checks::default();
    for i in 0..INSTANCES {
        single_filtration_checks(derive_seed(SEED, i), &mut checks);
    }
    let secs = start.elapsed().as_secs_f64();
    let pairs = count(&checks, "connector_iff_deflator");
    let pass = checks.passed() && pairs >= INSTANCES as usize && secs < 60.0;
    line(
        1,
        pass,
        format!(
            "{INSTANCES} filtrations, {pairs} assets, connector iff LP deflator, {} deflator martingale checks, \
             tolerance 0 (exact), runtime {secs:.1}s < 60s{}",
            count(&checks, "connector_deflator_martingale"),
            failure_note(&checks)
        ),
    )
}

/// Criteria 2 and 5 from one pass over the enlarged instances.
fn criteria_2_and_5() -> (Line, Line, Vec<EnlargedBasis>) {
    let mut checks = Checks::default();
    let (mut forced, mut forced_false, mut min_assets) = (0, 0, usize::MAX);
    let mut holding = Vec::new();
    let mut true_verdicts = 0;
    for i in 0..INSTANCES {
        let seed = derive_seed(SEED ^ 0xe2, i);
        let cfg = instance_config(i, seed);
        let Ok(eb) = gen_random_instance(&cfg) else {
            checks.record("generator", false, || format!("instance {i}"));
            continue;
        };
        let mut rng = rng_for(derive_seed(seed, 4));
        let s = enlarged_checks(&eb, cfg.force_condition_failure, &mut rng, &mut checks);
        min_assets = min_assets.min(s.assets);
        if cfg.force_condition_failure {
            forced += 1;
            forced_false += usize::from(!s.verdict);
        }
        if s.verdict {
            true_verdicts += 1;
        }
        if s.condition_support {
            holding.push(eb);
        }
    }
    let c2 = checks.passed() && min_assets >= 20 && forced_false == forced && forced > 0;
    let l2 = line(
        2,
        c2,
        format!(
            "{INSTANCES} enlarged instances, >= {min_assets} assets each, verdict iff all assets G-viable, \
             {forced_false}/{forced} forced failures false with {} verified certificates, tolerance 0 (exact){}",
            count(&checks, "witness_certificate"),
            failure_note(&checks)
        ),
    );
    let components = count(&checks, "one_deflator_all_components");
    let c5 = checks.passed() && true_verdicts > 0 && components > 0;
    let l5 = line(
        5,
        c5,
        format!(
            "{true_verdicts} verdict-true instances, one deflator checked on {components} W″ components, \
             tolerance 0 (exact){}",
            failure_note(&checks)
        ),
    );
    (l2, l5, holding)
}

fn criterion_3(mut holding: Vec<EnlargedBasis>) -> Line {
    let mut i = 0;
    while holding.len() < INSTANCES as usize {
        let mut cfg = instance_config(i, derive_seed(SEED ^ 0xe3, i));
        cfg.force_condition_failure = false;
        if let Ok(eb) = gen_random_instance(&cfg) {
            if check_condition_support(&eb).holds {
                holding.push(eb);
            }
        }
        i += 1;
    }
    let mut checks = Checks::default();
    let (mut zero_d, mut random_d) = (0, 0);
    for (j, eb) in holding.iter().enumerate() {
        let rep = build_representation(&eb.space, &eb.f);
        let Ok(factors) = solve_factors(eb, &rep) else {
            checks.record("solve_factors", false, || format!("instance {j}"));
            continue;
        };
        let mut rng = rng_for(derive_seed(SEED ^ 0x33, j as u64));
        let mut ds = vec![Process::zeros(eb.num_outcomes(), eb.ticks(), 1)];
        ds.extend((0..3).map(|_| random_viable_asset(&eb.space, &eb.f, &mut rng).1));
        for (n, d) in ds.iter().enumerate() {
            let ok = solve_accessible_k(eb, &factors, &rep, d)
                .and_then(|k| jump_identity_check(eb, &factors, &rep, &k, d))
                .is_ok_and(|m| m.is_none());
            checks.record("jump_identity", ok, || format!("instance {j}, connector {n}"));
            if n == 0 {
                zero_d += 1;
            } else {
                random_d += 1;
            }
        }
    }
    line(
        3,
        checks.passed() && holding.len() >= INSTANCES as usize,
        format!(
            "{} support-holding instances, {zero_d} with D = 0 and {random_d} random F-connectors, \
             K″ᵀΔW̃″ = (ΔD + φᵀΔN)/(1 + φᵀΔN) at every jump, tolerance 0 (exact){}",
            holding.len(),
            failure_note(&checks)
        ),
    )
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Goldens for the six-point instance. The expected values are derived
/// here by counting outcomes; the engine output is then compared against
/// them and the LP oracle is asked to confirm the deflator.
fn criterion_4() -> Line {
    let eb = worked_six_point();
    let n = eb.num_outcomes();
    let mut notes = Vec::new();
    let mut ok = true;

    // P(A | F_{1-}) and P(A | G_{1-}) for the F_1 cell A of each outcome
    let ind = |set: &[usize]| -> Vec<Q> { (0..n).map(|w| if set.contains(&w) { Q::one() } else { Q::zero() }).collect() };
    let cell = |w: usize| eb.f.at(1).block(eb.f.at(1).block_of(w)).to_vec();
    let ratio: Vec<Q> = (0..n)
        .map(|w| {
            let a = ind(&cell(w));
            let pf = block_average(&eb.space, eb.f.pre(1).block(eb.f.pre(1).block_of(w)), &a);
            let pg = block_average(&eb.space, eb.g.pre(1).block(eb.g.pre(1).block_of(w)), &a);
            pg / pf
        })
        .collect();
    // with D = 0 the jump is 1 - P(A|F_{1-}) / P(A|G_{1-}) and Z_1 = 1 - ΔY
    let dy: Vec<Q> = ratio.iter().map(|r| Q::one() - r.recip()).collect();
    let z1: Vec<Q> = dy.iter().map(|d| Q::one() - d).collect();
    let expect_dy = [q(1, 4), q(1, 4), q(-1, 2), q(-1, 2), q(1, 4), q(1, 4)];
    let expect_z = [q(3, 4), q(3, 4), q(3, 2), q(3, 2), q(3, 4), q(3, 4)];
    if dy != expect_dy || z1 != expect_z {
        ok = false;
        notes.push("derived values differ from the goldens".to_string());
    }

    let report = match full_viability_verdict(&eb) {
        Ok(r) => r,
        Err(e) => return line(4, false, format!("engine error {e}")),
    };
    let rep = build_representation(&eb.space, &eb.f);
    // φ: ±(2/3, -2/3), orthogonal to the constants, opposite on the two atoms,
    // and φᵀΔW″ = P(A|G_{1-}) / P(A|F_{1-}) - 1
    let phi0 = report.factors.phi.value(0, 1).to_vec();
    let phi2 = report.factors.phi.value(2, 1).to_vec();
    let golden_phi = [vec![q(2, 3), q(-2, 3)], vec![q(-2, 3), q(2, 3)]];
    ok &= golden_phi.contains(&phi0) && phi2.iter().zip(&phi0).all(|(a, b)| *a == -b.clone());
    for w in 0..n {
        let phi = report.factors.phi.value(w, 1);
        let fdn: Q = phi.iter().zip(rep.w().jump(w, 1)).map(|(a, b)| a * b).sum();
        ok &= fdn == &ratio[w] - Q::one();
    }

    let y = report.connector.as_ref().map(|c| (0..n).map(|w| c.d.jump(w, 1)[0].clone()).collect::<Vec<_>>());
    let z = report.deflator.as_ref().map(|z| (0..n).map(|w| z.at(w, 1).clone()).collect::<Vec<_>>());
    if y.as_deref() != Some(&expect_dy[..]) || z.as_deref() != Some(&expect_z[..]) {
        ok = false;
        notes.push(format!("engine ΔY {y:?}, Z_1 {z:?}"));
    }

    // E[Z_1 | G_{1-}] = 1 and E[Z_1 ΔX | G_{1-}] = 0 for every W″ component
    for c in eb.g.pre(1).blocks() {
        ok &= block_average(&eb.space, c, &z1).is_one();
        for h in 0..rep.dim() {
            let zx: Vec<Q> = (0..n).map(|w| &z1[w] * &rep.w().jump(w, 1)[h]).collect();
            ok &= block_average(&eb.space, c, &zx).is_zero();
        }
    }
    // the LP oracle finds every component viable in G and accepts Z
    let zproc = Process::scalar((0..n).map(|w| vec![Q::one(), z1[w].clone()]).collect());
    for h in 0..rep.dim() {
        let wh = rep.w().component(h);
        ok &= lp_deflator_oracle(&eb.space, &eb.g, &wh, &eb.horizon).is_viable();
        ok &= check_deflator(&eb.space, &eb.g, &wh, &eb.horizon, &zproc);
    }
    ok &= z1.iter().all(Signed::is_positive) && report.verdict;
    line(
        4,
        ok,
        format!(
            "six-point instance: φ = ±(2/3, -2/3), ΔY ∈ {{1/4, -1/2}}, Z_1 ∈ {{3/4, 3/2}}, E[Z_1|G_1-] = 1, \
             E[Z_1ΔX|G_1-] = 0, tolerance 0 (exact){}",
            notes.join("; ")
        ),
    )
}

fn criterion_6() -> Line {
    let mut checks = Checks::default();
    let (mut jacod, mut azema, mut degenerate) = (0, 0, 0);
    let mut i = 0u64;
    while jacod < 200 {
        match jacod_phi_crosscheck(&gen_jacod_instance(derive_seed(SEED ^ 0x6a, i))) {
            Ok(cc) => {
                checks.record("jacod", cc.holds(), || format!("seed index {i}: {cc:?}"));
                jacod += 1;
            }
            Err(e) => checks.record("jacod", false, || e.to_string()),
        }
        i += 1;
    }
    i = 0;
    while azema < 200 {
        match azema_phi_crosscheck(&gen_azema_instance(derive_seed(SEED ^ 0x6b, i))) {
            Ok(cc) => {
                checks.record("azema", cc.holds(), || format!("seed index {i}: {cc:?}"));
                azema += 1;
            }
            Err(Error::AzemaDegenerate) => degenerate += 1,
            Err(e) => checks.record("azema", false, || e.to_string()),
        }
        i += 1;
    }
    line(
        6,
        checks.passed(),
        format!(
            "{jacod} initial enlargements (φᵀΔN/(1+φᵀΔN) = Δq/q), {azema} progressive enlargements \
             (= ΔZ/Z), {degenerate} degenerate draws skipped, tolerance 0 (exact){}",
            failure_note(&checks)
        ),
    )
}

fn criterion_7() -> Line {
    let mut checks = Checks::default();
    let mut rng = rng_for(SEED ^ 0x77);
    let mut invalid = 0;
    for _ in 0..10_000 {
        let data = random_inaccessible_data(&mut rng);
        if data.check().is_err() {
            invalid += 1;
        }
        inaccessible_kernel_check(&data, &mut checks);
    }
    line(
        7,
        checks.passed() && invalid == 0,
        format!(
            "10000 inaccessible events ({invalid} invalid), reduced equation on {} branches and jump quotient \
             on {} branches, tolerance 0 (exact){}",
            count(&checks, "inaccessible_reduced_equation"),
            count(&checks, "inaccessible_jump_quotient"),
            failure_note(&checks)
        ),
    )
}

fn criterion_8() -> Line {
    let th = Thresholds::default();
    let one = |_: f64| vec![vec![1.0]];
    // base grid plus 4 dyadic refinements
    let blow = sample_levels(one, |t| vec![1.0 / (1.0 - t)], 0.0, 1.0, 4, 5);
    let flat = sample_levels(one, |_| vec![1.0], 0.0, 1.0, 4, 5);
    let blow = series_diagnostics(&SeriesInput { levels: blow, jumps: vec![] }, &th);
    let flat = series_diagnostics(&SeriesInput { levels: flat, jumps: vec![] }, &th);
    let (Ok(blow), Ok(flat)) = (blow, flat) else {
        return line(8, false, "diagnostics returned an error".into());
    };
    let value = flat.integral.as_ref().and_then(|s| s.values.last().copied()).unwrap_or(f64::NAN);
    let pass = blow.verdict == SeriesVerdict::Divergent
        && flat.verdict == SeriesVerdict::Finite
        && (value - 1.0).abs() <= 1e-6;
    line(
        8,
        pass,
        format!(
            "approximate: ∫dt/(1-t)² {:?}, ∫dt {:?} = {value:.9} (|v - 1| <= 1e-6), 4 dyadic refinements",
            blow.verdict, flat.verdict
        ),
    )
}

fn criterion_9() -> Line {
    let report = |workers| {
        run_suite(&SuiteConfig {
            seed: SEED,
            instances: 24,
            workers,
        })
        .map(|r| serde_json::to_string_pretty(&r.report()).expect("report serializes"))
    };
    let runs: Vec<String> = [1, 4, 1, 4].into_iter().filter_map(|w| report(w).ok()).collect();
    let pass = runs.len() == 4 && runs.iter().all(|r| *r == runs[0]);
    line(
        9,
        pass,
        format!(
            "suite report for seed {SEED}: {} bytes, identical across 2 runs each with 1 and 4 workers (byte equality)",
            runs.first().map_or(0, String::len)
        ),
    )
}

#[test]
fn acceptance() {
    let mut lines = vec![criterion_1()];
    let (l2, l5, holding) = criteria_2_and_5();
    lines.push(l2);
    lines.push(criterion_3(holding));
    lines.push(criterion_4());
    lines.push(l5);
    lines.push(criterion_6());
    lines.push(criterion_7());
    lines.push(criterion_8());
    lines.push(criterion_9());
    lines.sort_by_key(|l| l.id);
    say("---- acceptance summary".into());
    for l in &lines {
        say(format!("criterion {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }));
    }
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| format!("{}: {}", l.id, l.text)).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
