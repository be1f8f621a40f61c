use std::collections::BTreeSet;

use cms_core::loops::{LoopCount, LoopSystem, LoopTail};
use cms_core::num::rat;
use cms_core::shift::{metric_d, metric_d_rho};
use cms_core::symbol::{BarSymbol, Symbol};
use cms_core::ShiftPresentation;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn bar_symbol() -> impl Strategy<Value = BarSymbol> {
    prop_oneof![
        8 => (1u64..40).prop_map(BarSymbol::Fin),
        1 => Just(BarSymbol::Inf),
    ]
}

fn word_pair() -> impl Strategy<Value = (Vec<BarSymbol>, Vec<BarSymbol>)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(bar_symbol(), n),
            prop::collection::vec(bar_symbol(), n),
        )
    })
}

/// Transitive matrix on `1..=n`: a Hamiltonian cycle plus random extra edges.
fn finite_matrix() -> impl Strategy<Value = ShiftPresentation> {
    (2u64..5).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), (n * n) as usize).prop_map(move |bits| {
            let mut edges: Vec<(Symbol, Symbol)> = (1..=n).map(|a| (a, a % n + 1)).collect();
            for (i, b) in bits.iter().enumerate() {
                if *b {
                    edges.push((i as u64 / n + 1, i as u64 % n + 1));
                }
            }
            ShiftPresentation::finite_matrix(1..=n, edges).unwrap()
        })
    })
}

fn presentations() -> Vec<ShiftPresentation> {
    vec![
        ShiftPresentation::golden_mean(),
        ShiftPresentation::FullShift,
        ShiftPresentation::loop_system(
            LoopSystem::from_counts(&[(1, LoopCount::Finite(1)), (2, LoopCount::Infinite)])
                .unwrap(),
        ),
        ShiftPresentation::loop_system(
            LoopSystem::new(Default::default(), LoopTail::Constant(1)).unwrap(),
        ),
        ShiftPresentation::rule("renewal").unwrap(),
        ShiftPresentation::rule("loops2_plus_random_walk").unwrap(),
    ]
}

fn brute_force(
    shift: &ShiftPresentation,
    alphabet: &[Symbol],
    n: usize,
    first: Symbol,
    last: Symbol,
) -> Vec<Vec<Symbol>> {
    let mut words: Vec<Vec<Symbol>> = vec![vec![first]];
    for _ in 1..n {
        words = words
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .filter(|w| shift.is_admissible(w))
            .collect();
    }
    words.retain(|w| *w.last().unwrap() == last);
    words
}

proptest! {
    #[test]
    fn rho_metric_is_dominated_by_d((x, y) in word_pair()) {
        let r = metric_d_rho(&x, &y).unwrap();
        prop_assert!(r.partial.to_f64().unwrap() <= metric_d(&x, &y) + 1e-15);
    }

    #[test]
    fn cylinders_are_clopen_balls(a in 1u64..60, (x, y) in word_pair()) {
        let mut x = x;
        let mut y = y;
        x[0] = BarSymbol::Fin(a);
        if y[0] == BarSymbol::Fin(a) {
            y[0] = BarSymbol::Fin(a + 1);
        }
        let r = metric_d_rho(&x, &y).unwrap();
        let radius = rat(1, (2 * a * (a + 1)) as i64);
        prop_assert!(r.partial >= radius - r.tail_bound);
    }

    #[test]
    fn bar_admissibility_extends_admissibility(w in prop::collection::vec(0u64..12, 1..7)) {
        for shift in presentations() {
            let lifted: Vec<BarSymbol> = w.iter().map(|&s| BarSymbol::Fin(s)).collect();
            prop_assert_eq!(shift.is_bar_admissible(&lifted).unwrap(), shift.is_admissible(&w));
        }
    }

    #[test]
    fn enumeration_matches_brute_force(shift in finite_matrix(), n in 1usize..=8, a in 1u64..5, b in 1u64..5) {
        let (alphabet, _) = shift.finite_graph().unwrap();
        prop_assume!(alphabet.contains(&a) && alphabet.contains(&b));
        let got = shift.enumerate_words(n, a, b, 1 << 20).unwrap();
        prop_assert!(got.exhaustive);
        let words: Vec<Vec<Symbol>> = got.items.iter().map(|w| w.symbols().to_vec()).collect();
        prop_assert_eq!(words, brute_force(&shift, &alphabet, n, a, b));
    }

    #[test]
    fn connect_is_admissible(shift in finite_matrix(), a in 1u64..5, b in 1u64..5) {
        let (alphabet, _) = shift.finite_graph().unwrap();
        prop_assume!(alphabet.contains(&a) && alphabet.contains(&b));
        let w = shift.connect(a, b, 16).unwrap();
        prop_assert_eq!(w.first(), a);
        prop_assert_eq!(w.last(), b);
        prop_assert!(shift.is_admissible(w.symbols()));
        prop_assert!(w.len() <= alphabet.len());
    }
}

#[test]
fn connect_on_infinite_presentations() {
    for shift in presentations() {
        let symbols: BTreeSet<Symbol> = shift.first_symbols(6).items.into_iter().collect();
        for &a in &symbols {
            for &b in &symbols {
                let w = shift.connect(a, b, 64).unwrap();
                assert_eq!((w.first(), w.last()), (a, b));
                assert!(shift.is_admissible(w.symbols()), "{shift:?}: {w:?}");
            }
        }
    }
}
