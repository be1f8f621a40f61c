//! Presentations of countable Markov shifts, admissibility over ℕ and ℕ∪{∞},
//! word enumeration, and the two metrics on sequence space.
//!
//! Infinite alphabets are never materialized. Successor lists are streamed in
//! increasing order and every enumeration carries an explicit cap together
//! with an exhaustiveness flag.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::ShiftError;
use crate::loops::{LoopCount, LoopSystem, Place, BASE};
use crate::symbol::{BarSymbol, Symbol, Word};

/// Per-node successor cap used by searches over infinitely branching graphs.
pub const BRANCH_CAP: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphabetKind {
    Finite,
    CountablyInfinite,
}

/// Built-in graphs given by a successor rule, each shipped with hand-proved facts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Infinitely many 2-loops at `0` plus a nearest-neighbour walk on ℤ through `0`.
    /// Symbols: `0` is the base, odd symbols are loop midpoints, and `2m`
    /// encodes the integer `(m+1)/2` for odd `m` and `-m/2` for even `m`.
    LoopsPlusRandomWalk,
    /// Renewal graph on `1, 2, …`: `1 → k` for every `k`, and `k → k-1`.
    Renewal,
    /// The renewal graph presented without its F-property certificate.
    RenewalUncertified,
}

impl Rule {
    pub fn from_name(name: &str) -> Result<Rule, ShiftError> {
        match name {
            "loops2_plus_random_walk" => Ok(Rule::LoopsPlusRandomWalk),
            "renewal" => Ok(Rule::Renewal),
            "renewal_uncertified" => Ok(Rule::RenewalUncertified),
            other => Err(ShiftError::UnknownRule(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::LoopsPlusRandomWalk => "loops2_plus_random_walk",
            Rule::Renewal => "renewal",
            Rule::RenewalUncertified => "renewal_uncertified",
        }
    }

    /// Shipped F-property fact: `Some((holds, witness))`, `None` when not certified.
    pub fn f_property_fact(self) -> Option<Result<(), (Symbol, usize)>> {
        match self {
            Rule::LoopsPlusRandomWalk => Some(Err((0, 3))),
            Rule::Renewal => Some(Ok(())),
            Rule::RenewalUncertified => None,
        }
    }

    /// Shipped finite-uniform-Rome fact. Both graphs contain a ray escaping to infinity.
    pub fn has_finite_rome(self) -> Option<bool> {
        match self {
            Rule::LoopsPlusRandomWalk | Rule::Renewal => Some(false),
            Rule::RenewalUncertified => None,
        }
    }

    fn contains(self, s: Symbol) -> bool {
        match self {
            Rule::LoopsPlusRandomWalk => true,
            Rule::Renewal | Rule::RenewalUncertified => s >= 1,
        }
    }

    fn has_edge(self, a: Symbol, b: Symbol) -> bool {
        match self {
            Rule::LoopsPlusRandomWalk => {
                if a == 0 {
                    b % 2 == 1 || b == walk_symbol(1) || b == walk_symbol(-1)
                } else if a % 2 == 1 {
                    b == 0
                } else {
                    let z = walk_integer(a);
                    b == walk_symbol(z - 1) || b == walk_symbol(z + 1)
                }
            }
            Rule::Renewal | Rule::RenewalUncertified => a >= 1 && b >= 1 && (a == 1 || b + 1 == a),
        }
    }

    fn successors(self, a: Symbol, max_symbol: Symbol, cap: usize) -> (Vec<Symbol>, bool) {
        match self {
            Rule::LoopsPlusRandomWalk => {
                if a == 0 {
                    stream_upto(
                        (1..).filter(|&b| b % 2 == 1 || b == 2 || b == 4),
                        max_symbol,
                        cap,
                    )
                } else if a % 2 == 1 {
                    (vec![0], true)
                } else {
                    let z = walk_integer(a);
                    let mut v = vec![walk_symbol(z - 1), walk_symbol(z + 1)];
                    v.sort_unstable();
                    let all = v.len();
                    v.retain(|&s| s <= max_symbol);
                    let exhaustive = v.len() == all;
                    (v, exhaustive)
                }
            }
            Rule::Renewal | Rule::RenewalUncertified => {
                if a == 1 {
                    stream_upto(1.., max_symbol, cap)
                } else if a >= 2 && a - 1 <= max_symbol {
                    (vec![a - 1], true)
                } else {
                    (Vec::new(), a < 2)
                }
            }
        }
    }

    /// Exact bar-admissibility by the structure of large symbols in each graph.
    fn bar_admissible(self, runs: &[Run]) -> bool {
        runs.iter().all(|run| match *run {
            Run::Finite => true,
            Run::Infinite { len, left, right } => match self {
                Rule::LoopsPlusRandomWalk => match (left, right) {
                    // far walk vertices only neighbour far walk vertices
                    (None, None) => true,
                    (l, r) => len == 1 && l.is_none_or(|s| s == 0) && r.is_none_or(|s| s == 0),
                },
                Rule::Renewal | Rule::RenewalUncertified => {
                    right.is_none() && left.is_none_or(|s| s == 1)
                }
            },
        })
    }
}

/// Symbol encoding an integer vertex of the walk in [`Rule::LoopsPlusRandomWalk`].
pub fn walk_symbol(z: i64) -> Symbol {
    match z.cmp(&0) {
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 2 * (2 * z as u64 - 1),
        std::cmp::Ordering::Less => 2 * (2 * z.unsigned_abs()),
    }
}

fn walk_integer(s: Symbol) -> i64 {
    debug_assert!(s.is_multiple_of(2));
    let m = s / 2;
    if m == 0 {
        0
    } else if m % 2 == 1 {
        m.div_ceil(2) as i64
    } else {
        -((m / 2) as i64)
    }
}

fn stream_upto(
    it: impl Iterator<Item = Symbol>,
    max_symbol: Symbol,
    cap: usize,
) -> (Vec<Symbol>, bool) {
    let mut out = Vec::new();
    for s in it {
        if s > max_symbol || out.len() >= cap {
            return (out, false);
        }
        out.push(s);
    }
    (out, true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMatrix {
    alphabet: BTreeSet<Symbol>,
    succ: BTreeMap<Symbol, BTreeSet<Symbol>>,
}

impl FiniteMatrix {
    pub fn alphabet(&self) -> &BTreeSet<Symbol> {
        &self.alphabet
    }

    pub fn edges(&self) -> impl Iterator<Item = (Symbol, Symbol)> + '_ {
        self.succ
            .iter()
            .flat_map(|(&a, bs)| bs.iter().map(move |&b| (a, b)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShiftPresentation {
    FiniteMatrix(FiniteMatrix),
    LoopSystem(LoopSystem),
    FullShift,
    RuleGraph(Rule),
}

/// Result list that may have been cut short by a cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Capped<T> {
    pub items: Vec<T>,
    pub exhaustive: bool,
}

/// Maximal run inside a bar-word together with its finite neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Run {
    Finite,
    Infinite {
        len: usize,
        left: Option<Symbol>,
        right: Option<Symbol>,
    },
}

fn runs_of(symbols: &[BarSymbol]) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < symbols.len() {
        if symbols[i].is_inf() {
            let start = i;
            while i < symbols.len() && symbols[i].is_inf() {
                i += 1;
            }
            runs.push(Run::Infinite {
                len: i - start,
                left: start.checked_sub(1).and_then(|j| symbols[j].finite()),
                right: symbols.get(i).and_then(|s| s.finite()),
            });
        } else {
            runs.push(Run::Finite);
            i += 1;
        }
    }
    runs
}

impl ShiftPresentation {
    pub fn finite_matrix(
        alphabet: impl IntoIterator<Item = Symbol>,
        edges: impl IntoIterator<Item = (Symbol, Symbol)>,
    ) -> Result<Self, ShiftError> {
        let alphabet: BTreeSet<Symbol> = alphabet.into_iter().collect();
        if alphabet.is_empty() {
            return Err(ShiftError::InvalidPresentation("empty alphabet".into()));
        }
        let mut succ: BTreeMap<Symbol, BTreeSet<Symbol>> =
            alphabet.iter().map(|&a| (a, BTreeSet::new())).collect();
        let mut pred: BTreeMap<Symbol, BTreeSet<Symbol>> = succ.clone();
        for (a, b) in edges {
            if !alphabet.contains(&a) || !alphabet.contains(&b) {
                return Err(ShiftError::InvalidPresentation(format!(
                    "edge ({a},{b}) leaves the alphabet"
                )));
            }
            succ.get_mut(&a).unwrap().insert(b);
            pred.get_mut(&b).unwrap().insert(a);
        }
        for a in &alphabet {
            if succ[a].is_empty() || pred[a].is_empty() {
                return Err(ShiftError::InvalidPresentation(format!(
                    "symbol {a} has an all-zero row or column"
                )));
            }
        }
        let root = *alphabet.iter().next().unwrap();
        for (map, forward) in [(&succ, true), (&pred, false)] {
            let mut seen = BTreeSet::from([root]);
            let mut queue = VecDeque::from([root]);
            while let Some(a) = queue.pop_front() {
                for &b in &map[&a] {
                    if seen.insert(b) {
                        queue.push_back(b);
                    }
                }
            }
            if let Some(&missing) = alphabet.iter().find(|a| !seen.contains(a)) {
                let (from, to) = if forward {
                    (root, missing)
                } else {
                    (missing, root)
                };
                return Err(ShiftError::NotTransitive { from, to });
            }
        }
        Ok(ShiftPresentation::FiniteMatrix(FiniteMatrix {
            alphabet,
            succ,
        }))
    }

    /// Golden-mean shift on `{1, 2}` with `2 → 2` forbidden.
    pub fn golden_mean() -> Self {
        Self::finite_matrix([1, 2], [(1, 1), (1, 2), (2, 1)]).expect("golden mean is valid")
    }

    pub fn loop_system(sys: LoopSystem) -> Self {
        ShiftPresentation::LoopSystem(sys)
    }

    pub fn rule(name: &str) -> Result<Self, ShiftError> {
        Rule::from_name(name).map(ShiftPresentation::RuleGraph)
    }

    pub fn alphabet_kind(&self) -> AlphabetKind {
        match self {
            ShiftPresentation::FiniteMatrix(_) => AlphabetKind::Finite,
            ShiftPresentation::LoopSystem(l) if l.is_finite() => AlphabetKind::Finite,
            _ => AlphabetKind::CountablyInfinite,
        }
    }

    pub fn contains(&self, s: Symbol) -> bool {
        match self {
            ShiftPresentation::FiniteMatrix(m) => m.alphabet.contains(&s),
            ShiftPresentation::LoopSystem(l) => l.contains(s),
            ShiftPresentation::FullShift => s >= 1,
            ShiftPresentation::RuleGraph(r) => r.contains(s),
        }
    }

    pub fn has_edge(&self, a: Symbol, b: Symbol) -> bool {
        match self {
            ShiftPresentation::FiniteMatrix(m) => m.succ.get(&a).is_some_and(|s| s.contains(&b)),
            ShiftPresentation::LoopSystem(l) => l.has_edge(a, b),
            ShiftPresentation::FullShift => a >= 1 && b >= 1,
            ShiftPresentation::RuleGraph(r) => r.contains(a) && r.contains(b) && r.has_edge(a, b),
        }
    }

    /// Successors of `a` in increasing order, cut at `max_symbol` and at `cap` entries.
    pub fn successors(&self, a: Symbol, max_symbol: Symbol, cap: usize) -> Capped<Symbol> {
        let (items, exhaustive) = match self {
            ShiftPresentation::FiniteMatrix(m) => match m.succ.get(&a) {
                None => (Vec::new(), true),
                Some(s) => stream_upto(s.iter().copied(), max_symbol, cap),
            },
            ShiftPresentation::LoopSystem(l) => l.successors(a, max_symbol, cap),
            ShiftPresentation::FullShift => {
                if a == 0 {
                    (Vec::new(), true)
                } else {
                    stream_upto(1.., max_symbol, cap)
                }
            }
            ShiftPresentation::RuleGraph(r) => {
                if r.contains(a) {
                    r.successors(a, max_symbol, cap)
                } else {
                    (Vec::new(), true)
                }
            }
        };
        Capped { items, exhaustive }
    }

    /// The `cap` smallest symbols of the alphabet.
    pub fn first_symbols(&self, cap: usize) -> Capped<Symbol> {
        match self {
            ShiftPresentation::FiniteMatrix(m) => {
                let (items, exhaustive) = stream_upto(m.alphabet.iter().copied(), Symbol::MAX, cap);
                Capped { items, exhaustive }
            }
            _ => {
                let start = if self.contains(0) { 0 } else { 1 };
                let mut items = Vec::new();
                let mut s = start;
                // symbols of the remaining presentations are contiguous
                while items.len() < cap && self.contains(s) {
                    items.push(s);
                    s += 1;
                }
                let exhaustive = !self.contains(s);
                Capped { items, exhaustive }
            }
        }
    }

    /// Finite vertex and edge lists when the alphabet is finite.
    pub fn finite_graph(&self) -> Option<(Vec<Symbol>, Vec<(Symbol, Symbol)>)> {
        if self.alphabet_kind() != AlphabetKind::Finite {
            return None;
        }
        let verts = self.first_symbols(usize::MAX).items;
        let mut edges = Vec::new();
        for &a in &verts {
            for &b in &verts {
                if self.has_edge(a, b) {
                    edges.push((a, b));
                }
            }
        }
        Some((verts, edges))
    }

    pub fn is_admissible(&self, symbols: &[Symbol]) -> bool {
        !symbols.is_empty()
            && symbols.iter().all(|&s| self.contains(s))
            && symbols.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// Admissible including the wrap-around transition.
    pub fn is_cyclically_admissible(&self, symbols: &[Symbol]) -> bool {
        self.is_admissible(symbols) && self.has_edge(*symbols.last().unwrap(), symbols[0])
    }

    /// All admissible words of length `n` from `first` to `last`, in lexicographic order.
    pub fn enumerate_words(
        &self,
        n: usize,
        first: Symbol,
        last: Symbol,
        cap: usize,
    ) -> Result<Capped<Word>, ShiftError> {
        if cap == 0 {
            return Err(ShiftError::CapZero);
        }
        let mut out = Capped {
            items: Vec::new(),
            exhaustive: true,
        };
        if n == 0 || !self.contains(first) || !self.contains(last) {
            return Ok(out);
        }
        if n == 1 {
            if first == last {
                out.items.push(Word::new(vec![first]).unwrap());
            }
            return Ok(out);
        }
        let mut prefix = vec![first];
        self.extend_words(n, last, cap, &mut prefix, &mut out);
        Ok(out)
    }

    fn extend_words(
        &self,
        n: usize,
        last: Symbol,
        cap: usize,
        prefix: &mut Vec<Symbol>,
        out: &mut Capped<Word>,
    ) -> bool {
        let tip = *prefix.last().unwrap();
        if prefix.len() + 1 == n {
            if self.has_edge(tip, last) {
                if out.items.len() >= cap {
                    out.exhaustive = false;
                    return false;
                }
                let mut w = prefix.clone();
                w.push(last);
                out.items.push(Word::new(w).unwrap());
            }
            return true;
        }
        let succ = self.successors(tip, Symbol::MAX, BRANCH_CAP);
        if !succ.exhaustive {
            out.exhaustive = false;
        }
        for s in succ.items {
            prefix.push(s);
            let go_on = self.extend_words(n, last, cap, prefix, out);
            prefix.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    /// Shortest admissible word from `a` to `b` of length at most `max_len`,
    /// ties broken lexicographically. `connect(a, a)` is the one-letter word.
    pub fn connect(&self, a: Symbol, b: Symbol, max_len: usize) -> Result<Word, ShiftError> {
        let not_found = ShiftError::NotFoundWithinBound {
            from: a,
            to: b,
            max_len,
        };
        if max_len == 0 || !self.contains(a) || !self.contains(b) {
            return Err(not_found);
        }
        if a == b {
            return Ok(Word::new(vec![a]).unwrap());
        }
        self.shortest_path(a, b, max_len).ok_or(not_found)
    }

    /// Shortest path from `a` to `b` using at least one transition.
    pub fn bridge(&self, a: Symbol, b: Symbol, max_len: usize) -> Result<Word, ShiftError> {
        let not_found = ShiftError::NotFoundWithinBound {
            from: a,
            to: b,
            max_len,
        };
        if max_len < 2 || !self.contains(a) || !self.contains(b) {
            return Err(not_found);
        }
        self.shortest_path(a, b, max_len).ok_or(not_found)
    }

    /// Breadth-first search processing paths in lexicographic order within each
    /// layer, so the first path reaching `b` is the lexicographically least shortest one.
    fn shortest_path(&self, a: Symbol, b: Symbol, max_len: usize) -> Option<Word> {
        let bound = a.max(b).saturating_add(64);
        let mut parent: BTreeMap<Symbol, Symbol> = BTreeMap::new();
        let mut layer = vec![a];
        let mut seen = BTreeSet::from([a]);
        for _len in 2..=max_len {
            let mut next = Vec::new();
            for &u in &layer {
                if self.has_edge(u, b) {
                    let mut path = vec![b, u];
                    let mut cur = u;
                    while cur != a {
                        cur = parent[&cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Word::new(path);
                }
            }
            for &u in &layer {
                for v in self.successors(u, bound, BRANCH_CAP).items {
                    if v != b && seen.insert(v) {
                        parent.insert(v, u);
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            layer = next;
        }
        None
    }

    /// Whether the word is a coordinatewise limit of admissible words.
    pub fn is_bar_admissible(&self, symbols: &[BarSymbol]) -> Result<bool, ShiftError> {
        if symbols.is_empty() {
            return Err(ShiftError::EmptyWord);
        }
        // finite stretches must be admissible in any presentation
        let finite_ok = symbols
            .split(|s| s.is_inf())
            .filter(|seg| !seg.is_empty())
            .all(|seg| {
                let w: Vec<Symbol> = seg.iter().map(|s| s.finite().unwrap()).collect();
                self.is_admissible(&w)
            });
        if !finite_ok {
            return Ok(false);
        }
        let runs = runs_of(symbols);
        Ok(match self {
            ShiftPresentation::FullShift => true,
            ShiftPresentation::FiniteMatrix(_) => symbols.iter().all(|s| !s.is_inf()),
            ShiftPresentation::LoopSystem(l) => runs.iter().all(|run| match *run {
                Run::Finite => true,
                Run::Infinite { len, left, right } => {
                    let len = len as u32;
                    if left.is_some_and(|s| s != BASE) || right.is_some_and(|s| s != BASE) {
                        return false;
                    }
                    match (left, right) {
                        (Some(_), Some(_)) => l.count(len + 1) == LoopCount::Infinite,
                        _ => l.infinitely_many_loops_from(len + 1),
                    }
                }
            }),
            ShiftPresentation::RuleGraph(r) => r.bar_admissible(&runs),
        })
    }

    /// Bar-admissibility of the periodic point with the given period block.
    pub fn is_cyclically_bar_admissible(&self, symbols: &[BarSymbol]) -> Result<bool, ShiftError> {
        if symbols.iter().all(|s| s.is_inf()) {
            return self.is_bar_admissible(&[BarSymbol::Inf, BarSymbol::Inf]);
        }
        let doubled: Vec<BarSymbol> = symbols.iter().chain(symbols).copied().collect();
        self.is_bar_admissible(&doubled)
    }

    /// Where the symbol sits inside a loop system, if this is one.
    pub fn loop_place(&self, s: Symbol) -> Option<Place> {
        match self {
            ShiftPresentation::LoopSystem(l) => l.place(s),
            _ => None,
        }
    }
}

/// `2^{-(m-1)}` at the first disagreement `m`; 0 when one word is a prefix of the other.
pub fn metric_d<T: PartialEq>(x: &[T], y: &[T]) -> f64 {
    match x.iter().zip(y).position(|(a, b)| a != b) {
        Some(i) => 0.5f64.powi(i as i32),
        None => 0.0,
    }
}

/// Partial sum of the ρ-weighted metric over the common prefix, plus a bound on
/// what the unseen coordinates can still add.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoDistance {
    pub partial: BigRational,
    pub tail_bound: BigRational,
}

/// `ι(n) = 1/n`, `ι(∞) = 0`. The loop base label `0` is placed at `ι(0) = 2`.
fn inverse_label(s: BarSymbol) -> BigRational {
    match s {
        BarSymbol::Inf => BigRational::zero(),
        BarSymbol::Fin(0) => BigRational::from_integer(BigInt::from(2)),
        BarSymbol::Fin(n) => BigRational::new(BigInt::one(), BigInt::from(n)),
    }
}

/// `ρ̄(a, b) = |ι(a) − ι(b)|`.
pub fn rho_bar(a: BarSymbol, b: BarSymbol) -> BigRational {
    (inverse_label(a) - inverse_label(b)).abs()
}

pub fn metric_d_rho(x: &[BarSymbol], y: &[BarSymbol]) -> Result<RhoDistance, ShiftError> {
    if x.len() != y.len() {
        return Err(ShiftError::LengthMismatch(x.len(), y.len()));
    }
    let mut partial = BigRational::zero();
    let mut weight = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for (&a, &b) in x.iter().zip(y) {
        weight *= &half;
        partial += &weight * rho_bar(a, b);
    }
    let zero_label = x.iter().chain(y).any(|&s| s == BarSymbol::Fin(0));
    let diameter = if zero_label { 2 } else { 1 };
    Ok(RhoDistance {
        partial,
        tail_bound: weight * BigRational::from_integer(BigInt::from(diameter)),
    })
}
