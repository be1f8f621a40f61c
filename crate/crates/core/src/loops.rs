//! Loop systems: bouquets of simple loops glued at a base vertex.
//!
//! The base vertex is symbol `0`. Loops are listed along diagonals of the
//! (length, index) grid, ordered by `(length + index, length)`, and the
//! interior vertices of each loop take the next free symbols in that order.
//! With `a_2 = ∞` and nothing else this puts the loop midpoints at `1, 2, 3, …`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ShiftError;
use crate::symbol::Symbol;

pub const BASE: Symbol = 0;

/// Number of simple loops of a given length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoopCount {
    Finite(u64),
    Infinite,
}

impl LoopCount {
    pub fn is_positive(self) -> bool {
        !matches!(self, LoopCount::Finite(0))
    }

    fn admits(self, index: u64) -> bool {
        match self {
            LoopCount::Finite(c) => index <= c,
            LoopCount::Infinite => true,
        }
    }
}

/// Loop counts for lengths beyond the explicit head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopTail {
    Zero,
    /// `a_n = c` for every length past the head.
    Constant(u64),
    /// `a_n = ∞` at exactly this length, zero elsewhere past the head.
    InfiniteAt(u32),
    /// `a_n = b^n`.
    Exponential(u64),
    /// `a_n = 2^(2^n)`, saturating.
    DoubleExponential,
}

/// Exponential growth rate `limsup (1/n) log a_n` of a tail rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GrowthRate {
    /// Only finitely many nonzero terms.
    NoTerms,
    Finite(f64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSystem {
    head: BTreeMap<u32, LoopCount>,
    head_len: u32,
    tail: LoopTail,
}

/// One simple loop: its length, its index among loops of that length and the
/// symbol of its first interior vertex (meaningless for length one).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoopInfo {
    pub length: u32,
    pub index: u64,
    pub first: Symbol,
}

impl LoopInfo {
    pub fn interior(&self) -> impl Iterator<Item = Symbol> {
        let first = self.first;
        (0..self.length.saturating_sub(1) as u64).map(move |k| first + k)
    }

    /// Full cyclic word of the loop, starting at the base.
    pub fn cycle(&self) -> Vec<Symbol> {
        std::iter::once(BASE).chain(self.interior()).collect()
    }

    fn last(&self) -> Symbol {
        self.first + self.length as u64 - 2
    }
}

/// Position of a symbol inside the loop system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    Base,
    /// Interior vertex at position `pos` (1-based) of the loop.
    Interior {
        lp: LoopInfo,
        pos: u32,
    },
}

impl LoopSystem {
    pub fn new(head: BTreeMap<u32, LoopCount>, tail: LoopTail) -> Result<Self, ShiftError> {
        if head.contains_key(&0) {
            return Err(ShiftError::InvalidPresentation(
                "loop lengths start at 1".into(),
            ));
        }
        let head_len = head.keys().next_back().copied().unwrap_or(0);
        if let LoopTail::InfiniteAt(n) = tail {
            if n <= head_len {
                return Err(ShiftError::InvalidPresentation(format!(
                    "tail infinite-at {n} overlaps the head (up to {head_len})"
                )));
            }
        }
        let sys = LoopSystem {
            head,
            head_len,
            tail,
        };
        match sys.count(1) {
            LoopCount::Finite(0) | LoopCount::Finite(1) => {}
            _ => {
                return Err(ShiftError::InvalidPresentation(
                    "at most one loop of length 1 fits a 0/1 transition matrix".into(),
                ))
            }
        }
        if sys.loops().next().is_none() {
            return Err(ShiftError::InvalidPresentation(
                "loop system without loops".into(),
            ));
        }
        Ok(sys)
    }

    /// Convenience constructor from `(length, count)` pairs with a zero tail.
    pub fn from_counts(counts: &[(u32, LoopCount)]) -> Result<Self, ShiftError> {
        Self::new(counts.iter().copied().collect(), LoopTail::Zero)
    }

    pub fn head(&self) -> &BTreeMap<u32, LoopCount> {
        &self.head
    }

    pub fn tail(&self) -> LoopTail {
        self.tail
    }

    pub fn head_len(&self) -> u32 {
        self.head_len
    }

    /// `a_n`.
    pub fn count(&self, n: u32) -> LoopCount {
        if n == 0 {
            return LoopCount::Finite(0);
        }
        if n <= self.head_len {
            return self.head.get(&n).copied().unwrap_or(LoopCount::Finite(0));
        }
        match self.tail {
            LoopTail::Zero => LoopCount::Finite(0),
            LoopTail::Constant(c) => LoopCount::Finite(c),
            LoopTail::InfiniteAt(m) if m == n => LoopCount::Infinite,
            LoopTail::InfiniteAt(_) => LoopCount::Finite(0),
            LoopTail::Exponential(b) => LoopCount::Finite(b.saturating_pow(n)),
            LoopTail::DoubleExponential => {
                if n >= 6 {
                    LoopCount::Finite(u64::MAX)
                } else {
                    LoopCount::Finite(1u64 << (1u32 << n))
                }
            }
        }
    }

    fn tail_is_unbounded(&self) -> bool {
        match self.tail {
            LoopTail::Zero | LoopTail::InfiniteAt(_) => false,
            LoopTail::Constant(c) => c > 0,
            LoopTail::Exponential(b) => b > 0,
            LoopTail::DoubleExponential => true,
        }
    }

    /// Largest loop length, `None` when lengths are unbounded.
    pub fn max_length(&self) -> Option<u32> {
        if self.tail_is_unbounded() {
            return None;
        }
        let head_max = self
            .head
            .iter()
            .filter(|(_, c)| c.is_positive())
            .map(|(&n, _)| n)
            .max()
            .unwrap_or(0);
        Some(match self.tail {
            LoopTail::InfiniteAt(m) => head_max.max(m),
            _ => head_max,
        })
    }

    pub fn has_unbounded_lengths(&self) -> bool {
        self.max_length().is_none()
    }

    /// Whether some length carries infinitely many loops.
    pub fn infinite_length(&self) -> Option<u32> {
        self.head
            .iter()
            .find(|(_, c)| **c == LoopCount::Infinite)
            .map(|(&n, _)| n)
            .or(match self.tail {
                LoopTail::InfiniteAt(m) => Some(m),
                _ => None,
            })
    }

    /// Whether there are infinitely many loops of length at least `n`.
    pub fn infinitely_many_loops_from(&self, n: u32) -> bool {
        if self.has_unbounded_lengths() {
            return true;
        }
        let head_inf = self
            .head
            .iter()
            .any(|(&m, c)| m >= n && *c == LoopCount::Infinite);
        let tail_inf = matches!(self.tail, LoopTail::InfiniteAt(m) if m >= n);
        head_inf || tail_inf
    }

    pub fn is_finite(&self) -> bool {
        self.infinite_length().is_none() && !self.has_unbounded_lengths()
    }

    /// Finite sum `Σ a_n`, if it is finite.
    pub fn total_loops(&self) -> Option<u64> {
        if !self.is_finite() {
            return None;
        }
        let mut total = 0u64;
        for c in self.head.values() {
            if let LoopCount::Finite(c) = c {
                total = total.saturating_add(*c);
            }
        }
        Some(total)
    }

    /// `limsup (1/n) log a_n`.
    pub fn growth_rate(&self) -> GrowthRate {
        match self.tail {
            LoopTail::Zero | LoopTail::InfiniteAt(_) => GrowthRate::NoTerms,
            LoopTail::Constant(0) | LoopTail::Exponential(0) => GrowthRate::NoTerms,
            LoopTail::Constant(_) => GrowthRate::Finite(0.0),
            LoopTail::Exponential(b) => GrowthRate::Finite((b as f64).ln()),
            LoopTail::DoubleExponential => GrowthRate::Infinite,
        }
    }

    /// All loops in symbol order. Infinite unless the system is finite.
    pub fn loops(&self) -> LoopIter<'_> {
        LoopIter {
            sys: self,
            diagonal: 2,
            length: 1,
            next_symbol: 1,
            finite_limit: self.finite_diagonal_limit(),
        }
    }

    fn finite_diagonal_limit(&self) -> Option<u64> {
        if !self.is_finite() {
            return None;
        }
        let mut limit = 2u64;
        for (&n, c) in &self.head {
            if let LoopCount::Finite(c) = c {
                if *c > 0 {
                    limit = limit.max(n as u64 + c);
                }
            }
        }
        Some(limit)
    }

    pub fn place(&self, s: Symbol) -> Option<Place> {
        if s == BASE {
            return Some(Place::Base);
        }
        for lp in self.loops() {
            if lp.length < 2 {
                continue;
            }
            if lp.first > s {
                return None;
            }
            if s <= lp.last() {
                return Some(Place::Interior {
                    lp,
                    pos: (s - lp.first) as u32 + 1,
                });
            }
        }
        None
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.place(s).is_some()
    }

    /// The loop with the given length and index, if it exists.
    pub fn find_loop(&self, length: u32, index: u64) -> Option<LoopInfo> {
        if !self.count(length).admits(index) || index == 0 {
            return None;
        }
        self.loops()
            .find(|lp| lp.length == length && lp.index == index)
    }

    pub fn successor_in_loop(lp: &LoopInfo, pos: u32) -> Symbol {
        if pos + 1 < lp.length {
            lp.first + pos as u64
        } else {
            BASE
        }
    }

    pub fn has_edge(&self, a: Symbol, b: Symbol) -> bool {
        match self.place(a) {
            None => false,
            Some(Place::Base) => {
                if b == BASE {
                    return self.count(1) == LoopCount::Finite(1);
                }
                matches!(self.place(b), Some(Place::Interior { pos: 1, .. }))
            }
            Some(Place::Interior { lp, pos }) => Self::successor_in_loop(&lp, pos) == b,
        }
    }

    /// Successors in increasing order, at most `cap` of them and none above `max_symbol`.
    pub fn successors(&self, a: Symbol, max_symbol: Symbol, cap: usize) -> (Vec<Symbol>, bool) {
        match self.place(a) {
            None => (Vec::new(), true),
            Some(Place::Interior { lp, pos }) => {
                let s = Self::successor_in_loop(&lp, pos);
                if s <= max_symbol {
                    (vec![s], true)
                } else {
                    (Vec::new(), false)
                }
            }
            Some(Place::Base) => {
                let mut out = Vec::new();
                if self.count(1) == LoopCount::Finite(1) {
                    out.push(BASE);
                }
                for lp in self.loops() {
                    if lp.length < 2 {
                        continue;
                    }
                    if lp.first > max_symbol || out.len() >= cap {
                        return (out, false);
                    }
                    out.push(lp.first);
                }
                (out, true)
            }
        }
    }
}

pub struct LoopIter<'a> {
    sys: &'a LoopSystem,
    diagonal: u64,
    length: u32,
    next_symbol: Symbol,
    finite_limit: Option<u64>,
}

impl Iterator for LoopIter<'_> {
    type Item = LoopInfo;

    fn next(&mut self) -> Option<LoopInfo> {
        loop {
            if let Some(limit) = self.finite_limit {
                if self.diagonal > limit {
                    return None;
                }
            }
            if self.length as u64 >= self.diagonal {
                self.diagonal += 1;
                self.length = 1;
                continue;
            }
            let n = self.length;
            let j = self.diagonal - n as u64;
            self.length += 1;
            if self.sys.count(n).admits(j) {
                let info = LoopInfo {
                    length: n,
                    index: j,
                    first: self.next_symbol,
                };
                self.next_symbol += n.saturating_sub(1) as u64;
                return Some(info);
            }
        }
    }
}

/// JSON form of a loop count: an integer or `"inf"`.
impl Serialize for LoopCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LoopCount::Finite(c) => s.serialize_u64(*c),
            LoopCount::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LoopCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(c) => Ok(LoopCount::Finite(c)),
            Raw::Text(t) if t == "inf" || t == "∞" => Ok(LoopCount::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "loop count must be an integer or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LoopCount::*;

    fn golden() -> LoopSystem {
        LoopSystem::from_counts(&[(1, Finite(1)), (2, Finite(1))]).unwrap()
    }

    #[test]
    fn golden_mean_layout() {
        let g = golden();
        let loops: Vec<_> = g.loops().collect();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops[1].cycle(), vec![0, 1]);
        assert!(g.has_edge(0, 0) && g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(!g.has_edge(1, 1));
        assert!(!g.contains(2));
    }

    #[test]
    fn infinitely_many_two_loops_have_consecutive_midpoints() {
        let sys = LoopSystem::from_counts(&[(1, Finite(1)), (2, Infinite)]).unwrap();
        let mids: Vec<_> = sys.loops().skip(1).take(4).map(|l| l.first).collect();
        assert_eq!(mids, vec![1, 2, 3, 4]);
        assert_eq!(
            sys.place(3),
            Some(Place::Interior {
                lp: sys.find_loop(2, 3).unwrap(),
                pos: 1
            })
        );
        let (succ, exhaustive) = sys.successors(0, 5, 100);
        assert_eq!(succ, vec![0, 1, 2, 3, 4, 5]);
        assert!(!exhaustive);
    }

    #[test]
    fn one_loop_of_every_length() {
        let sys = LoopSystem::new(BTreeMap::new(), LoopTail::Constant(1)).unwrap();
        let firsts: Vec<_> = sys.loops().take(5).map(|l| (l.length, l.first)).collect();
        assert_eq!(firsts, vec![(1, 1), (2, 1), (3, 2), (4, 4), (5, 7)]);
        let lp = sys.find_loop(4, 1).unwrap();
        assert_eq!(lp.cycle(), vec![0, 4, 5, 6]);
        assert!(sys.has_edge(6, 0));
        assert!(sys.has_unbounded_lengths());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(LoopSystem::from_counts(&[(1, Finite(2))]).is_err());
        assert!(LoopSystem::from_counts(&[(0, Finite(1))]).is_err());
        assert!(LoopSystem::from_counts(&[(3, Finite(0))]).is_err());
    }
}
