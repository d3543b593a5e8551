use num::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

use filtrex::basis::{cond_expect, Filtration, Partition, SampleSpace};
use filtrex::calculus::{bracket, canonical_decomposition, compensator, doleans_exp, is_martingale, stoch_integral};
use filtrex::models::{gen_random_filtration, random_adapted, random_martingale, rng_for};
use filtrex::process::Process;
use filtrex::representation::{build_representation, represent};
use filtrex::Q;

fn basis(seed: u64) -> (SampleSpace, Filtration, rand_chacha::ChaCha8Rng) {
    let mut rng = rng_for(seed);
    let (s, f) = gen_random_filtration(&mut rng, &(2..=9), &(1..=3), 3, false);
    (s, f, rng)
}

/// Conditional expectation by brute force over pairs of outcomes.
fn brute_cond(space: &SampleSpace, part: &Partition, xi: &[Q]) -> Vec<Q> {
    (0..space.len())
        .map(|w| {
            let mut num = Q::zero();
            let mut den = Q::zero();
            for v in 0..space.len() {
                if part.block_of(v) == part.block_of(w) {
                    num += space.prob(v) * &xi[v];
                    den += space.prob(v);
                }
            }
            num / den
        })
        .collect()
}

/// `H_k = X_{k-1}`, which is F_{k-}-measurable.
fn left_limit(x: &Process) -> Process {
    Process::from_fn(x.num_outcomes(), x.horizon(), x.dim(), |w, k| {
        if k == 0 {
            vec![Q::zero(); x.dim()]
        } else {
            x.value(w, k - 1).to_vec()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tower_property(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let xi: Vec<Q> = (0..s.len()).map(|_| Q::from_integer(rng.gen_range(-5..=5).into())).collect();
        for k in 1..=f.horizon() {
            let inner = cond_expect(&s, f.at(k), &xi);
            prop_assert_eq!(cond_expect(&s, f.pre(k), &inner), brute_cond(&s, f.pre(k), &xi));
            prop_assert_eq!(cond_expect(&s, f.pre(k), &xi), brute_cond(&s, f.pre(k), &xi));
        }
    }

    #[test]
    fn decomposition_is_unique_and_exact(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let x = random_adapted(&s, &f, &mut rng);
        let dec = canonical_decomposition(&s, &f, &x).unwrap();
        prop_assert_eq!(dec.martingale_part.add(&dec.drift_part), x.minus_initial());
        prop_assert!(is_martingale(&s, &f, &dec.martingale_part).unwrap());
        prop_assert!(dec.drift_part.check_predictable(&f).is_ok());
        // a martingale has no drift
        let m = random_martingale(&s, &f, &mut rng);
        prop_assert!(compensator(&s, &f, &m).unwrap().is_zero());
    }

    #[test]
    fn integration_by_parts(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let x = random_adapted(&s, &f, &mut rng);
        let y = random_adapted(&s, &f, &mut rng);
        let xy = x.zip_with(&y, |a, b| a * b);
        let lhs = xy.minus_initial();
        let rhs = stoch_integral(&f, &left_limit(&x), &y)
            .unwrap()
            .add(&stoch_integral(&f, &left_limit(&y), &x).unwrap())
            .add(&bracket(&x, &y));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn yor_formula(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let x = random_adapted(&s, &f, &mut rng).minus_initial();
        let y = random_adapted(&s, &f, &mut rng).minus_initial();
        let lhs = doleans_exp(&x).zip_with(&doleans_exp(&y), |a, b| a * b);
        let rhs = doleans_exp(&x.add(&y).add(&bracket(&x, &y)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn representation_is_complete(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let rep = build_representation(&s, &f);
        let x = random_martingale(&s, &f, &mut rng);
        let h = represent(&s, &f, &rep, &x).unwrap();
        prop_assert_eq!(stoch_integral(&f, &h, rep.w()).unwrap(), x.minus_initial());
        prop_assert!(is_martingale(&s, &f, rep.w()).unwrap());
    }

    #[test]
    fn single_jump_coefficient(seed in any::<u64>(), pick in any::<usize>()) {
        // ξ at a fixed tick, compensated: the coefficient lives on that tick
        // and reproduces ξ - E[ξ | F_{k-}]
        let (s, f, mut rng) = basis(seed);
        let k = 1 + pick % f.horizon();
        let mut xi = vec![Q::zero(); s.len()];
        for b in f.at(k).blocks() {
            let v = Q::from_integer(rng.gen_range(-4..=4).into());
            for &w in b {
                xi[w] = v.clone();
            }
        }
        let centred: Vec<Q> = xi.iter().zip(brute_cond(&s, f.pre(k), &xi)).map(|(a, b)| a - b).collect();
        let x = Process::from_fn(s.len(), f.horizon(), 1, |w, j| {
            vec![if j >= k { centred[w].clone() } else { Q::zero() }]
        });
        let rep = build_representation(&s, &f);
        let h = represent(&s, &f, &rep, &x).unwrap();
        for w in 0..s.len() {
            for j in 1..=f.horizon() {
                let hw: Q = h.value(w, j).iter().zip(rep.w().jump(w, j)).map(|(a, b)| a * b).sum();
                if j == k {
                    prop_assert_eq!(&hw, &centred[w]);
                } else {
                    prop_assert!(h.value(w, j).iter().all(Zero::is_zero));
                }
            }
        }
    }

    #[test]
    fn exponential_of_martingale_is_martingale(seed in any::<u64>()) {
        let (s, f, mut rng) = basis(seed);
        let m = random_martingale(&s, &f, &mut rng);
        let e = doleans_exp(&m);
        prop_assert!(is_martingale(&s, &f, &e).unwrap());
        prop_assert!((0..s.len()).all(|w| e.at(w, 0).is_one()));
    }
}
