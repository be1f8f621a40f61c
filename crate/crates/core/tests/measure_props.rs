use cms_core::io::MeasureSpec;
use cms_core::measures::{convex_combo, Measure};
use cms_core::num::{rat, Mass};
use cms_core::symbol::{BarSymbol, Symbol};
use cms_core::ShiftPresentation;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn bar_symbol() -> impl Strategy<Value = BarSymbol> {
    prop_oneof![
        6 => (1u64..5).prop_map(BarSymbol::Fin),
        1 => Just(BarSymbol::Inf),
    ]
}

fn periodic() -> impl Strategy<Value = Measure> {
    prop::collection::vec(bar_symbol(), 1..9)
        .prop_map(|w| Measure::periodic(&ShiftPresentation::FullShift, &w).unwrap())
}

/// Two-state chain on `{1, 2}` with flip probabilities `a` and `b`.
fn two_state() -> impl Strategy<Value = Measure> {
    (1i64..8, 1i64..8).prop_map(|(a, b)| {
        let (a, b) = (rat(a, 8), rat(b, 8));
        let s = &a + &b;
        let one = BigRational::one();
        Measure::markov_exact(
            vec![1, 2],
            vec![&b / &s, &a / &s],
            vec![vec![&one - &a, a.clone()], vec![b.clone(), &one - &b]],
        )
        .unwrap()
    })
}

fn bernoulli() -> impl Strategy<Value = Measure> {
    (1i64..10)
        .prop_map(|k| Measure::bernoulli(vec![1, 3], vec![rat(k, 10), rat(10 - k, 10)]).unwrap())
}

fn any_measure() -> impl Strategy<Value = Measure> {
    prop_oneof![periodic(), two_state(), bernoulli()]
}

fn exact(m: Mass) -> BigRational {
    m.exact().expect("exact mass").clone()
}

fn words(alphabet: &[BarSymbol], len: usize) -> Vec<Vec<BarSymbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

fn alphabet_of(m: &Measure) -> Vec<BarSymbol> {
    m.finite_support()
        .expect("finite support")
        .into_iter()
        .collect()
}

proptest! {
    #[test]
    fn periodic_masses_are_multiples_of_the_period(w in prop::collection::vec(bar_symbol(), 1..9)) {
        let m = Measure::periodic(&ShiftPresentation::FullShift, &w).unwrap();
        let Measure::Periodic { cycle } = &m else { unreachable!() };
        let p = cycle.len() as i64;
        let mut total = BigRational::zero();
        for s in alphabet_of(&m) {
            let mass = exact(m.mass(&[s]));
            prop_assert!((&mass * rat(p, 1)).is_integer());
            total += mass;
        }
        prop_assert_eq!(total, BigRational::one());
    }

    #[test]
    fn shift_invariance_is_exact(m in any_measure(), depth in 1usize..4) {
        let alphabet = alphabet_of(&m);
        for c in words(&alphabet, depth) {
            let pre: BigRational = alphabet
                .iter()
                .map(|&a| {
                    let mut ac = vec![a];
                    ac.extend_from_slice(&c);
                    exact(m.mass(&ac))
                })
                .sum();
            prop_assert_eq!(pre, exact(m.mass(&c)));
            prop_assert_eq!(exact(m.preimage_mass(&c, &alphabet)), exact(m.mass(&c)));
        }
    }

    #[test]
    fn markov_mass_is_a_path_probability(a in 1i64..8, b in 1i64..8, w in prop::collection::vec(1u64..3, 1..7)) {
        let (qa, qb) = (rat(a, 8), rat(b, 8));
        let s = &qa + &qb;
        let one = BigRational::one();
        let p = [&qb / &s, &qa / &s];
        let tr = [[&one - &qa, qa.clone()], [qb.clone(), &one - &qb]];
        let m = Measure::markov_exact(vec![1, 2], p.to_vec(), tr.iter().map(|r| r.to_vec()).collect()).unwrap();
        let idx = |s: Symbol| (s - 1) as usize;
        let mut expected = p[idx(w[0])].clone();
        for pair in w.windows(2) {
            expected *= &tr[idx(pair[0])][idx(pair[1])];
        }
        prop_assert_eq!(exact(m.mass_word(&w)), expected);
    }

    #[test]
    fn entropy_is_affine(parts in prop::collection::vec(any_measure(), 1..4), raw in prop::collection::vec(1i64..20, 4)) {
        let weights: Vec<BigRational> = raw[..parts.len()].iter().map(|&k| rat(k, 60)).collect();
        let Ok(combo) = convex_combo(weights.clone(), parts.clone()) else {
            return Ok(());
        };
        let direct: f64 = weights
            .iter()
            .zip(&parts)
            .map(|(w, m)| cms_core::num::to_f64(w) * m.entropy())
            .sum();
        prop_assert!((combo.entropy() - direct).abs() < 1e-12, "{} vs {}", combo.entropy(), direct);
    }

    #[test]
    fn json_round_trip(m in any_measure()) {
        let text = serde_json::to_string(&m).unwrap();
        let spec: MeasureSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(spec.build(&ShiftPresentation::FullShift).unwrap(), m);
    }
}

#[test]
fn combo_masses_add_up() {
    let full = ShiftPresentation::FullShift;
    let a = Measure::periodic(&full, &[BarSymbol::Fin(1), BarSymbol::Inf]).unwrap();
    let b = Measure::periodic(&full, &[BarSymbol::Fin(2)]).unwrap();
    let c = convex_combo(vec![rat(1, 3), rat(2, 3)], vec![a, b]).unwrap();
    assert_eq!(exact(c.mass(&[BarSymbol::Fin(1)])), rat(1, 6));
    assert_eq!(exact(c.mass_at_infinity()), rat(1, 6));
    assert_eq!(exact(c.mass(&[BarSymbol::Fin(2)])), rat(2, 3));
}
