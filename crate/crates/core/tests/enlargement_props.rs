use num::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

use filtrex::basis::block_average;
use filtrex::calculus::{freeze, is_martingale, stoch_integral};
use filtrex::enlargement::{
    check_condition_support, check_positivity, drift_operator, solve_factors, support_sets_agree, EnlargedBasis,
};
use filtrex::models::{gen_random_instance, random_martingale, rng_for, EnlargementKind, GeneratorConfig};
use filtrex::process::Process;
use filtrex::representation::build_representation;
use filtrex::Q;

fn instance(seed: u64, kind: EnlargementKind) -> EnlargedBasis {
    gen_random_instance(&GeneratorConfig {
        outcomes: 2..=9,
        ticks: 1..=3,
        enlargement_kind: kind,
        ..GeneratorConfig::new(seed)
    })
    .unwrap()
}

fn kind_of(i: u8) -> EnlargementKind {
    match i % 3 {
        0 => EnlargementKind::Random,
        1 => EnlargementKind::Initial,
        _ => EnlargementKind::Progressive,
    }
}

/// A random F-predictable scalar integrand.
fn predictable(eb: &EnlargedBasis, rng: &mut rand_chacha::ChaCha8Rng) -> Process {
    let mut h = Process::zeros(eb.num_outcomes(), eb.ticks(), 1);
    for k in 1..=eb.ticks() {
        for b in eb.f.pre(k).blocks() {
            let v = Q::from_integer(rng.gen_range(-3..=3).into());
            for &w in b {
                h.value_mut(w, k)[0] = v.clone();
            }
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn drift_leaves_a_g_martingale(seed in any::<u64>(), k in any::<u8>()) {
        let eb = instance(seed, kind_of(k));
        let mut rng = rng_for(seed ^ 0x5eed);
        let x = random_martingale(&eb.space, &eb.f, &mut rng);
        let gamma = drift_operator(&eb, &x).unwrap();
        prop_assert!(gamma.check_predictable(&eb.g).is_ok());
        prop_assert!(is_martingale(&eb.space, &eb.g, &freeze(&x.sub(&gamma), &eb.horizon)).unwrap());
    }

    #[test]
    fn drift_commutes_with_integration(seed in any::<u64>(), k in any::<u8>()) {
        let eb = instance(seed, kind_of(k));
        let mut rng = rng_for(seed ^ 0xd1f7);
        let x = random_martingale(&eb.space, &eb.f, &mut rng);
        let h = predictable(&eb, &mut rng);
        let hx = stoch_integral(&eb.f, &h, &x).unwrap();
        let lhs = drift_operator(&eb, &hx).unwrap();
        let rhs = stoch_integral(&eb.g, &h, &drift_operator(&eb, &x).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn support_condition_matches_direct_form(seed in any::<u64>(), k in any::<u8>()) {
        let eb = instance(seed, kind_of(k));
        let mut all = true;
        for t in 1..=eb.ticks() {
            for b in eb.f.at(t).blocks() {
                let ind: Vec<Q> = (0..eb.num_outcomes())
                    .map(|w| if b.contains(&w) { Q::one() } else { Q::zero() })
                    .collect();
                all &= support_sets_agree(&eb, t, &ind);
            }
        }
        prop_assert_eq!(check_condition_support(&eb).holds, all);
    }

    #[test]
    fn factors_reproduce_the_g_law(seed in any::<u64>(), k in any::<u8>()) {
        let eb = instance(seed, kind_of(k));
        let rep = build_representation(&eb.space, &eb.f);
        let factors = solve_factors(&eb, &rep).unwrap();
        if check_condition_support(&eb).holds {
            prop_assert!(check_positivity(&eb, &factors).unwrap().holds);
        }
        // (1 + φᵀΔN) P(A | F_{k-}) = P(A | G_{k-}) on every active G-atom
        for t in 1..=eb.ticks() {
            for c in eb.g.pre(t).blocks() {
                if !eb.active(t, c) {
                    continue;
                }
                let fa = eb.f.pre(t).block(eb.f.pre(t).block_of(c[0]));
                for child in eb.f.at(t).blocks().iter().filter(|b| fa.contains(&b[0])) {
                    let ind: Vec<Q> = (0..eb.num_outcomes())
                        .map(|w| if child.contains(&w) { Q::one() } else { Q::zero() })
                        .collect();
                    let pf = block_average(&eb.space, fa, &ind);
                    let pg = block_average(&eb.space, c, &ind);
                    let fdn: Q = factors
                        .phi
                        .value(c[0], t)
                        .iter()
                        .zip(factors.n.jump(child[0], t))
                        .map(|(a, b)| a * b)
                        .sum();
                    prop_assert_eq!((Q::one() + fdn) * pf, pg);
                }
            }
        }
    }

    #[test]
    fn drift_vanishes_without_enlargement(seed in any::<u64>()) {
        let eb = instance(seed, EnlargementKind::Random);
        let trivial = EnlargedBasis::trivial(eb.space.clone(), eb.f.clone()).unwrap();
        let mut rng = rng_for(seed);
        let x = random_martingale(&eb.space, &eb.f, &mut rng);
        prop_assert!(drift_operator(&trivial, &x).unwrap().is_zero());
        prop_assert!(check_condition_support(&trivial).holds);
    }
}

#[test]
fn positivity_values_are_strictly_positive_on_worked_instance() {
    let eb = filtrex::models::worked_six_point();
    let rep = build_representation(&eb.space, &eb.f);
    let f = solve_factors(&eb, &rep).unwrap();
    let pos = check_positivity(&eb, &f).unwrap();
    assert!(pos.values.iter().flatten().all(Signed::is_positive));
    assert!(pos.values.iter().flatten().all(|v| !v.is_zero()));
}
