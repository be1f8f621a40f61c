//! The F-property and finite uniform Romes.
//!
//! Both are decided exactly for loop systems, finite matrices and the full
//! shift. Rule graphs answer from their shipped facts or report `Unknown`.
//!
//! A finite set `F` is a uniform Rome with bound `N` when every path that
//! leaves `F` comes back within `N` steps, i.e. no `N` consecutive vertices
//! of a path avoid `F`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::PropertyError;
use crate::loops::{GrowthRate, LoopCount, LoopSystem, BASE};
use crate::shift::{Rule, ShiftPresentation};
use crate::symbol::{BarSymbol, BarWord, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FProperty {
    Holds {
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    /// Infinitely many admissible words of `length` symbols start and end at `symbol`.
    Fails {
        symbol: Symbol,
        length: usize,
    },
    Unknown {
        cap: usize,
    },
}

impl FProperty {
    pub fn holds(&self) -> Option<bool> {
        match self {
            FProperty::Holds { .. } => Some(true),
            FProperty::Fails { .. } => Some(false),
            FProperty::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RomeStatus {
    Holds { f: Vec<Symbol>, n: usize },
    Fails { witness: String },
    Unknown { cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl From<Option<bool>> for TriState {
    fn from(b: Option<bool>) -> Self {
        match b {
            Some(true) => TriState::Yes,
            Some(false) => TriState::No,
            None => TriState::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub f_property: FProperty,
    pub finite_uniform_rome: RomeStatus,
    pub finite_entropy: TriState,
    pub locally_compact: TriState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RomeSearch {
    Found { f: Vec<Symbol>, n: usize },
    NoneWithinCaps { note: String },
}

impl RomeSearch {
    pub fn is_found(&self) -> bool {
        matches!(self, RomeSearch::Found { .. })
    }
}

pub fn check_f_property(shift: &ShiftPresentation, cap: usize) -> FProperty {
    match shift {
        ShiftPresentation::FiniteMatrix(_) => FProperty::Holds {
            note: Some("finite alphabet: the shift space is compact".into()),
        },
        ShiftPresentation::FullShift => FProperty::Fails {
            symbol: 1,
            length: 3,
        },
        ShiftPresentation::LoopSystem(l) => loop_f_property(l),
        ShiftPresentation::RuleGraph(r) => match r.f_property_fact() {
            Some(Ok(())) => FProperty::Holds { note: None },
            Some(Err((symbol, length))) => FProperty::Fails { symbol, length },
            None => FProperty::Unknown { cap },
        },
    }
}

fn loop_f_property(l: &LoopSystem) -> FProperty {
    match l.infinite_length() {
        // the loops of that length are infinitely many base-to-base words
        Some(m) => FProperty::Fails {
            symbol: BASE,
            length: m as usize + 1,
        },
        None => FProperty::Holds { note: None },
    }
}

/// Whether some path of `n` vertices avoids `f`. `None` when undecided.
fn has_avoiding_path(shift: &ShiftPresentation, f: &BTreeSet<Symbol>, n: usize) -> Option<bool> {
    match shift {
        ShiftPresentation::FullShift => Some(true),
        ShiftPresentation::RuleGraph(r) => r.has_finite_rome().map(|rome| !rome),
        ShiftPresentation::FiniteMatrix(_) => Some(finite_avoiding_path(shift, f, n)),
        ShiftPresentation::LoopSystem(l) => {
            if !f.contains(&BASE) {
                if l.is_finite() {
                    return Some(finite_avoiding_path(shift, f, n));
                }
                // only finitely many loops meet F, any other closes a cycle off F
                return Some(true);
            }
            Some(match longest_interior_run(l, f) {
                None => true,
                Some(run) => run >= n as u64,
            })
        }
    }
}

fn finite_avoiding_path(shift: &ShiftPresentation, f: &BTreeSet<Symbol>, n: usize) -> bool {
    let (verts, edges) = shift.finite_graph().expect("finite alphabet");
    let mut layer: BTreeSet<Symbol> = verts.into_iter().filter(|v| !f.contains(v)).collect();
    for _ in 1..n {
        let next: BTreeSet<Symbol> = edges
            .iter()
            .filter(|(a, b)| layer.contains(a) && !f.contains(b))
            .map(|&(_, b)| b)
            .collect();
        if next.is_empty() {
            return false;
        }
        layer = next;
    }
    !layer.is_empty()
}

/// Longest run of consecutive loop-interior symbols outside `f`, with the
/// base in `f`. `None` when runs are unbounded.
fn longest_interior_run(l: &LoopSystem, f: &BTreeSet<Symbol>) -> Option<u64> {
    let max_len = l.max_length()?;
    let max_f = f.iter().next_back().copied().unwrap_or(0);
    let mut best = 0u64;
    let mut seen = vec![0u64; max_len as usize + 1];
    for lp in l.loops() {
        if lp.first > max_f {
            break;
        }
        seen[lp.length as usize] += 1;
        let mut run = 0u64;
        for s in lp.interior() {
            if f.contains(&s) {
                run = 0;
            } else {
                run += 1;
                best = best.max(run);
            }
        }
    }
    // loops beyond max F avoid F entirely
    for n in 1..=max_len {
        let more = match l.count(n) {
            LoopCount::Infinite => true,
            LoopCount::Finite(c) => c > seen[n as usize],
        };
        if more {
            best = best.max(n as u64 - 1);
        }
    }
    Some(best)
}

/// Whether `f` is a uniform Rome with return bound `n`. `None` when undecided.
pub fn check_uniform_rome(
    shift: &ShiftPresentation,
    f: &BTreeSet<Symbol>,
    n: usize,
) -> Result<Option<bool>, PropertyError> {
    if f.is_empty() || n == 0 {
        return Err(PropertyError::PreconditionViolated(
            "F must be nonempty and N at least 1".into(),
        ));
    }
    Ok(has_avoiding_path(shift, f, n).map(|p| !p))
}

/// First `(F, N)` in order of `|F|`, then lexicographic `F`, then smallest `N`.
pub fn find_finite_rome(shift: &ShiftPresentation, symbol_cap: usize, n_cap: usize) -> RomeSearch {
    let none = |note: &str| RomeSearch::NoneWithinCaps { note: note.into() };
    match shift {
        ShiftPresentation::FullShift => {
            return none("every finite set misses arbitrarily long constant paths")
        }
        ShiftPresentation::RuleGraph(r) => {
            return match r.has_finite_rome() {
                Some(false) => none("the graph contains a ray escaping every finite set"),
                _ => none("no Rome fact is known for this rule graph"),
            }
        }
        ShiftPresentation::LoopSystem(l) if l.has_unbounded_lengths() => {
            return none("loop lengths are unbounded, long loop interiors avoid any finite set")
        }
        _ => {}
    }
    let symbols = shift.first_symbols(symbol_cap.min(20)).items;
    let k = symbols.len();
    for size in 1..=k {
        for subset in subsets_of_size(k, size) {
            let f: BTreeSet<Symbol> = subset.iter().map(|&i| symbols[i]).collect();
            for n in 1..=n_cap {
                if has_avoiding_path(shift, &f, n) == Some(false) {
                    return RomeSearch::Found {
                        f: f.into_iter().collect(),
                        n,
                    };
                }
            }
        }
    }
    none("no candidate within the symbol and bound caps")
}

/// Index subsets of `0..k` with `size` elements in lexicographic order.
fn subsets_of_size(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    if size > k {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = size;
        while i > 0 && cur[i - 1] == k - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

pub fn classify_loop_system(l: &LoopSystem) -> Result<PropertyReport, PropertyError> {
    let shift = ShiftPresentation::LoopSystem(l.clone());
    let finite_counts = l.infinite_length().is_none();
    let finite_entropy = finite_counts
        && match l.growth_rate() {
            GrowthRate::NoTerms | GrowthRate::Finite(_) => true,
            GrowthRate::Infinite => false,
        };
    let rome = match find_finite_rome(&shift, 8, 64) {
        RomeSearch::Found { f, n } => RomeStatus::Holds { f, n },
        RomeSearch::NoneWithinCaps { note } if l.has_unbounded_lengths() => {
            RomeStatus::Fails { witness: note }
        }
        RomeSearch::NoneWithinCaps { .. } => RomeStatus::Unknown { cap: 64 },
    };
    Ok(PropertyReport {
        f_property: loop_f_property(l),
        finite_uniform_rome: rome,
        finite_entropy: Some(finite_entropy).into(),
        locally_compact: Some(l.total_loops().is_some()).into(),
    })
}

/// Report for any presentation, filled as far as the presentation class allows.
pub fn classify(shift: &ShiftPresentation, cap: usize) -> Result<PropertyReport, PropertyError> {
    match shift {
        ShiftPresentation::LoopSystem(l) => classify_loop_system(l),
        ShiftPresentation::FiniteMatrix(_) => {
            let rome = match find_finite_rome(shift, cap.max(1), cap.max(1)) {
                RomeSearch::Found { f, n } => RomeStatus::Holds { f, n },
                RomeSearch::NoneWithinCaps { .. } => RomeStatus::Unknown { cap },
            };
            Ok(PropertyReport {
                f_property: check_f_property(shift, cap),
                finite_uniform_rome: rome,
                finite_entropy: TriState::Yes,
                locally_compact: TriState::Yes,
            })
        }
        ShiftPresentation::FullShift => Ok(PropertyReport {
            f_property: check_f_property(shift, cap),
            finite_uniform_rome: RomeStatus::Fails {
                witness: "constant paths (k, k, ...) avoid any finite set".into(),
            },
            finite_entropy: TriState::No,
            locally_compact: TriState::No,
        }),
        ShiftPresentation::RuleGraph(r) => {
            let rome = match r.has_finite_rome() {
                Some(false) => RomeStatus::Fails {
                    witness: "the graph contains a ray".into(),
                },
                _ => RomeStatus::Unknown { cap },
            };
            let (entropy, compact) = match r {
                // symbol 0 has infinitely many successors in both
                Rule::LoopsPlusRandomWalk => (TriState::No, TriState::No),
                Rule::Renewal => (TriState::Yes, TriState::No),
                Rule::RenewalUncertified => (TriState::Unknown, TriState::No),
            };
            Ok(PropertyReport {
                f_property: check_f_property(shift, cap),
                finite_uniform_rome: rome,
                finite_entropy: entropy,
                locally_compact: compact,
            })
        }
    }
}

/// Patterns `(a, ∞^r, b)` over the first `symbol_cap` symbols with `r ≤ max_run`.
pub fn sandwich_patterns(
    shift: &ShiftPresentation,
    symbol_cap: usize,
    max_run: usize,
) -> Vec<BarWord> {
    let symbols = shift.first_symbols(symbol_cap).items;
    let mut out = Vec::new();
    for &a in &symbols {
        for &b in &symbols {
            for r in 1..=max_run {
                let mut w = vec![BarSymbol::Fin(a)];
                w.extend(std::iter::repeat_n(BarSymbol::Inf, r));
                w.push(BarSymbol::Fin(b));
                out.push(BarWord::new(w).unwrap());
            }
        }
    }
    out
}

/// With the F-property no admissible limit word has a finite symbol, a block of
/// `∞`, then a finite symbol. Returns whether every sample is rejected.
pub fn f_property_word_restriction_check(
    shift: &ShiftPresentation,
    samples: &[BarWord],
) -> Result<bool, PropertyError> {
    match check_f_property(shift, 1).holds() {
        Some(true) => {}
        Some(false) => {
            return Err(PropertyError::PreconditionViolated(
                "the shift lacks the F-property".into(),
            ))
        }
        None => {
            return Err(PropertyError::PreconditionViolated(
                "the F-property is undecided for this shift".into(),
            ))
        }
    }
    for w in samples {
        let s = w.symbols();
        let well_formed = s.len() >= 3
            && !s[0].is_inf()
            && !s[s.len() - 1].is_inf()
            && s[1..s.len() - 1].iter().all(|x| x.is_inf());
        if !well_formed {
            return Err(PropertyError::PreconditionViolated(format!(
                "sample {w} is not of the form (a, inf, ..., inf, b)"
            )));
        }
        if shift.is_bar_admissible(s)? {
            return Ok(false);
        }
    }
    Ok(true)
}
