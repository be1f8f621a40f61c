//! Periodic approximations: orbit gluing, compactified approximants with
//! `∞`-blocks, escaping sequences and the dichotomy report.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::ApproxError;
use crate::loops::LoopCount;
use crate::measures::{Markov, Measure, Slot};
use crate::num::Mass;
use crate::properties::{
    check_f_property, f_property_word_restriction_check, find_finite_rome, sandwich_patterns,
    FProperty, RomeSearch,
};
use crate::shift::{walk_symbol, Rule, ShiftPresentation};
use crate::symbol::{lift, BarSymbol, BarWord, Symbol, Word};
use crate::topology::{weakstar_distance, MetricConfig};

/// A finite word sampled from a stationary Markov chain.
#[derive(Clone, Debug, Serialize)]
pub struct TypicalWord {
    pub word: Vec<Symbol>,
    pub frequencies: BTreeMap<Symbol, f64>,
    /// Largest total-variation deviation of the empirical one- and two-blocks from the chain.
    pub max_error: f64,
}

fn sample_chain(markov: &Markov, len: usize, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    let symbols = markov.symbols();
    let p = markov.stationary_f64();
    let tr = markov.transition_f64();
    let rows: Vec<Option<WeightedIndex<f64>>> =
        tr.iter().map(|row| WeightedIndex::new(row).ok()).collect();
    let mut state = WeightedIndex::new(&p)
        .expect("stationary vector")
        .sample(rng);
    let mut out = Vec::with_capacity(len);
    out.push(symbols[state]);
    while out.len() < len {
        state = rows[state].as_ref().expect("stochastic row").sample(rng);
        out.push(symbols[state]);
    }
    out
}

fn chain_mass(markov: &Markov, pos: &BTreeMap<Symbol, usize>, w: &[Symbol]) -> f64 {
    let p = markov.stationary_f64();
    let tr = markov.transition_f64();
    let mut m = p[pos[&w[0]]];
    for pair in w.windows(2) {
        m *= tr[pos[&pair[0]]][pos[&pair[1]]];
    }
    m
}

/// Depth-one frequencies and the largest total-variation distance between the
/// empirical and the chain's distributions of `d`-blocks over `d ≤ depth`.
fn empirical_error(markov: &Markov, word: &[Symbol], depth: usize) -> (BTreeMap<Symbol, f64>, f64) {
    let pos: BTreeMap<Symbol, usize> = markov
        .symbols()
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let mut frequencies = BTreeMap::new();
    let mut err: f64 = 0.0;
    for d in 1..=depth.min(word.len()) {
        let mut counts: BTreeMap<&[Symbol], usize> = BTreeMap::new();
        for w in word.windows(d) {
            *counts.entry(w).or_insert(0) += 1;
        }
        let total = (word.len() + 1 - d) as f64;
        let mut seen_mass = 0.0;
        let mut tv = 0.0;
        for (w, &c) in &counts {
            let m = chain_mass(markov, &pos, w);
            seen_mass += m;
            tv += (c as f64 / total - m).abs();
            if d == 1 {
                frequencies.insert(w[0], c as f64 / total);
            }
        }
        tv += (1.0 - seen_mass).max(0.0);
        err = err.max(tv);
    }
    (frequencies, err)
}

pub fn typical_word(markov: &Markov, len: usize, seed: u64) -> TypicalWord {
    assert!(len >= 1, "typical words have positive length");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = sample_chain(markov, len, &mut rng);
    let (frequencies, max_error) = empirical_error(markov, &word, 2);
    TypicalWord {
        word,
        frequencies,
        max_error,
    }
}

#[derive(Clone, Debug)]
pub struct GlueParams {
    /// Candidate samples per Markov target; the most typical one is kept.
    pub samples: usize,
    pub typicality: Typicality,
    pub max_connector: usize,
}

/// How a sampled segment is scored against its target.
#[derive(Clone, Debug)]
pub enum Typicality {
    /// Largest total-variation deviation of the block distributions up to this length.
    Blocks(usize),
    /// Weak* distance from the segment's cyclic orbit measure to the target.
    Metric(MetricConfig),
}

impl Default for GlueParams {
    fn default() -> Self {
        GlueParams {
            samples: 32,
            typicality: Typicality::Blocks(2),
            max_connector: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Segment {
    pub target: usize,
    pub length: usize,
    /// Empirical deviation of the segment; zero for periodic targets.
    pub empirical_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingPlan {
    pub segment_length: usize,
    /// Segment lengths are taken in `[n, n + 2m)`.
    pub window: (usize, usize),
    pub segments: Vec<Segment>,
    /// `w_i` joins segment `i` to segment `i+1` (cyclically).
    pub connectors: Vec<Vec<Symbol>>,
    /// Longest connector.
    pub l0: usize,
    /// Start of each segment in the assembled word.
    pub offsets: Vec<usize>,
    pub word: Vec<Symbol>,
}

enum Target<'a> {
    Cycle(Vec<Symbol>),
    Chain(&'a Markov),
}

/// Shortest `w` with `a w b` admissible and every symbol of `w` in `allowed`.
fn connector(
    shift: &ShiftPresentation,
    allowed: &BTreeSet<Symbol>,
    a: Symbol,
    b: Symbol,
    max_len: usize,
) -> Option<Vec<Symbol>> {
    if shift.has_edge(a, b) {
        return Some(Vec::new());
    }
    let mut prev: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    let mut queue = VecDeque::from([(a, 0usize)]);
    let mut seen = BTreeSet::from([a]);
    while let Some((s, d)) = queue.pop_front() {
        if d >= max_len {
            continue;
        }
        for &t in allowed {
            if seen.contains(&t) || !shift.has_edge(s, t) {
                continue;
            }
            seen.insert(t);
            prev.insert(t, s);
            if shift.has_edge(t, b) {
                let mut path = vec![t];
                let mut cur = t;
                while let Some(&p) = prev.get(&cur) {
                    if p == a {
                        break;
                    }
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back((t, d + 1));
        }
    }
    None
}

/// Glues typical segments of each target, joined by short connectors, into one
/// periodic orbit approximating the average of the targets.
pub fn glue_periodic_approximation(
    shift: &ShiftPresentation,
    targets: &[Measure],
    n: usize,
    seed: u64,
    params: &GlueParams,
) -> Result<(Measure, GluingPlan), ApproxError> {
    if targets.is_empty() || n == 0 {
        return Err(ApproxError::InvalidArgument(
            "need at least one target and a positive segment length".into(),
        ));
    }
    let mut allowed = BTreeSet::new();
    let mut kinds = Vec::new();
    for t in targets {
        match t {
            Measure::Periodic { cycle } => {
                let word: Option<Vec<Symbol>> = cycle.iter().map(|s| s.finite()).collect();
                let word = word.ok_or(ApproxError::TargetsNotFinitelySupported)?;
                allowed.extend(word.iter().copied());
                kinds.push(Target::Cycle(word));
            }
            Measure::FiniteMarkov(m) => {
                let p = m.stationary_f64();
                allowed.extend(
                    m.symbols()
                        .iter()
                        .zip(&p)
                        .filter(|(_, &x)| x > 0.0)
                        .map(|(&s, _)| s),
                );
                kinds.push(Target::Chain(m));
            }
            _ => return Err(ApproxError::TargetsNotFinitelySupported),
        }
        t.validate_on(shift)?;
    }
    let period_max = kinds
        .iter()
        .map(|k| match k {
            Target::Cycle(w) => w.len(),
            Target::Chain(_) => 1,
        })
        .max()
        .unwrap_or(1);
    let m = allowed.len().max(period_max);
    let window = (n, n + 2 * m);

    let mut rngs: Vec<ChaCha8Rng> = (0..kinds.len())
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect();
    // one draw per target, of length n + 2m - 1 for chains so that trimming stays in the window
    let mut draw = |depth: usize| -> Vec<(Vec<Symbol>, f64)> {
        kinds
            .iter()
            .zip(rngs.iter_mut())
            .map(|(kind, rng)| match kind {
                Target::Cycle(w) => {
                    let len = n.div_ceil(w.len()) * w.len();
                    (w.iter().copied().cycle().take(len).collect(), 0.0)
                }
                Target::Chain(chain) => {
                    let word = sample_chain(chain, window.1 - 1, rng);
                    let err = empirical_error(chain, &word[..n], depth).1;
                    (word, err)
                }
            })
            .collect()
    };
    let has_chain = kinds.iter().any(|k| matches!(k, Target::Chain(_)));
    let rounds = if has_chain { params.samples.max(1) } else { 1 };
    match &params.typicality {
        Typicality::Blocks(depth) => {
            let mut best: Vec<Option<(Vec<Symbol>, f64)>> = vec![None; kinds.len()];
            for _ in 0..rounds {
                for (slot, cand) in best.iter_mut().zip(draw(*depth)) {
                    if slot.as_ref().is_none_or(|(_, e)| cand.1 < *e) {
                        *slot = Some(cand);
                    }
                }
            }
            let raw: Vec<(Vec<Symbol>, f64)> = best.into_iter().map(Option::unwrap).collect();
            assemble(shift, &allowed, &kinds, &raw, n, window, params)
        }
        Typicality::Metric(config) => {
            let cylinders = config.bar_cylinders();
            let goal: Vec<f64> = cylinders
                .iter()
                .map(|c| {
                    targets
                        .iter()
                        .map(|t| t.pattern_mass(c).to_f64())
                        .sum::<f64>()
                        / targets.len() as f64
                })
                .collect();
            let mut best: Option<(f64, Vec<(Vec<Symbol>, f64)>)> = None;
            for _ in 0..rounds {
                let raw = draw(2);
                let (_, word) = assemble_word(shift, &allowed, &kinds, &raw, n, window, params)?;
                let d: f64 = cylinders
                    .iter()
                    .zip(&goal)
                    .enumerate()
                    .map(|(i, (c, g))| {
                        0.5f64.powi(i as i32 + 1) * (cyclic_frequency(&word, c) - g).abs()
                    })
                    .sum();
                if best.as_ref().is_none_or(|(e, _)| d < *e) {
                    best = Some((d, raw));
                }
            }
            let (_, raw) = best.expect("at least one round");
            assemble(shift, &allowed, &kinds, &raw, n, window, params)
        }
    }
}

/// Fraction of cyclic positions of `word` where `pattern` matches.
fn cyclic_frequency(word: &[Symbol], pattern: &[Slot]) -> f64 {
    let len = word.len();
    let hits = (0..len)
        .filter(|&i| {
            pattern
                .iter()
                .enumerate()
                .all(|(k, slot)| slot.matches(BarSymbol::Fin(word[(i + k) % len])))
        })
        .count();
    hits as f64 / len as f64
}

struct Assembly {
    segments: Vec<Segment>,
    connectors: Vec<Vec<Symbol>>,
    offsets: Vec<usize>,
}

fn assemble_word(
    shift: &ShiftPresentation,
    allowed: &BTreeSet<Symbol>,
    kinds: &[Target<'_>],
    raw: &[(Vec<Symbol>, f64)],
    n: usize,
    window: (usize, usize),
    params: &GlueParams,
) -> Result<(Assembly, Vec<Symbol>), ApproxError> {
    let count = kinds.len();
    let mut pieces: Vec<Vec<Symbol>> = Vec::new();
    let mut segments = Vec::new();
    for i in 0..count {
        let next_first = raw[(i + 1) % count].0[0];
        let (word, err) = &raw[i];
        let len = match kinds[i] {
            Target::Cycle(_) => word.len(),
            Target::Chain(_) => (n..window.1)
                .min_by_key(|&l| {
                    let cost = connector(
                        shift,
                        allowed,
                        word[l - 1],
                        next_first,
                        params.max_connector,
                    )
                    .map_or(usize::MAX, |c| c.len());
                    (cost, l)
                })
                .unwrap_or(n),
        };
        pieces.push(word[..len].to_vec());
        segments.push(Segment {
            target: i,
            length: len,
            empirical_error: *err,
        });
    }
    let mut connectors = Vec::new();
    for i in 0..count {
        let a = *pieces[i].last().unwrap();
        let b = pieces[(i + 1) % count][0];
        let c = connector(shift, allowed, a, b, params.max_connector)
            .ok_or(ApproxError::ConnectorNotFound { from: a, to: b })?;
        connectors.push(c);
    }
    let mut word = Vec::new();
    let mut offsets = Vec::new();
    for i in 0..count {
        offsets.push(word.len());
        word.extend_from_slice(&pieces[i]);
        word.extend_from_slice(&connectors[i]);
    }
    Ok((
        Assembly {
            segments,
            connectors,
            offsets,
        },
        word,
    ))
}

fn assemble(
    shift: &ShiftPresentation,
    allowed: &BTreeSet<Symbol>,
    kinds: &[Target<'_>],
    raw: &[(Vec<Symbol>, f64)],
    n: usize,
    window: (usize, usize),
    params: &GlueParams,
) -> Result<(Measure, GluingPlan), ApproxError> {
    let (a, word) = assemble_word(shift, allowed, kinds, raw, n, window, params)?;
    let l0 = a.connectors.iter().map(Vec::len).max().unwrap_or(0);
    debug_assert!(a.offsets.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(shift.is_cyclically_admissible(&word));
    let measure = Measure::periodic(shift, &lift(&word))?;
    Ok((
        measure,
        GluingPlan {
            segment_length: n,
            window,
            segments: a.segments,
            connectors: a.connectors,
            l0,
            offsets: a.offsets,
            word,
        },
    ))
}

/// Periodic measure of `x^k w` where `w` carries at least one `∞`.
pub fn compactified_periodic_approximant(
    shift: &ShiftPresentation,
    x: &Word,
    w: &BarWord,
    k: usize,
) -> Result<Measure, ApproxError> {
    if let FProperty::Holds { .. } = check_f_property(shift, 64) {
        return Err(ApproxError::FPropertyHolds);
    }
    if k == 0 {
        return Err(ApproxError::InvalidArgument("k must be positive".into()));
    }
    if w.infinity_count() == 0 {
        return Err(ApproxError::BlockNotAdmissible(format!("{w} has no ∞")));
    }
    let mut cycle: Vec<BarSymbol> = Vec::with_capacity(k * x.len() + w.len());
    for _ in 0..k {
        cycle.extend(x.symbols().iter().map(|&s| BarSymbol::Fin(s)));
    }
    cycle.extend_from_slice(w.symbols());
    if !shift.is_cyclically_bar_admissible(&cycle)? {
        return Err(ApproxError::BlockNotAdmissible(format!(
            "x^{k} followed by {w} is not cyclically admissible"
        )));
    }
    Ok(Measure::cycle(&cycle))
}

/// `(|w| + depth − 1) / (k|x| + |w|)` times the total cylinder weight, which
/// bounds the weak* distance between the approximant and the periodic measure of `x`.
pub fn displacement_bound(x_len: usize, w_len: usize, k: usize, config: &MetricConfig) -> f64 {
    let period = (k * x_len + w_len) as f64;
    let moved = (w_len + config.depth() - 1) as f64;
    (moved / period).min(1.0) * config.bar_weight_total()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refusal {
    FiniteUniformRome { f: Vec<Symbol>, n: usize },
    NoConstruction { note: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroSequence {
    Measures(Vec<Measure>),
    Refused(Refusal),
}

/// Periodic measures whose mass on every fixed cylinder tends to zero, built
/// from the structure of the shift; refused when a finite uniform Rome exists.
pub fn zero_measure_sequence(
    shift: &ShiftPresentation,
    n_list: &[usize],
) -> Result<ZeroSequence, ApproxError> {
    if let RomeSearch::Found { f, n } = find_finite_rome(shift, 12, 12) {
        return Ok(ZeroSequence::Refused(Refusal::FiniteUniformRome { f, n }));
    }
    if n_list.iter().any(|&n| n < 2) {
        return Err(ApproxError::InvalidArgument(
            "sizes must be at least 2".into(),
        ));
    }
    let mut out = Vec::new();
    for &n in n_list {
        let word: Vec<Symbol> = match shift {
            ShiftPresentation::LoopSystem(l) => {
                let len = (n as u32..n as u32 + 100_000)
                    .find(|&len| !matches!(l.count(len), LoopCount::Finite(0)));
                let Some(len) = len else {
                    return Ok(ZeroSequence::Refused(Refusal::NoConstruction {
                        note: format!("no loop of length at least {n} found"),
                    }));
                };
                l.find_loop(len, 1).expect("counted loop exists").cycle()
            }
            ShiftPresentation::FullShift => (n as Symbol..2 * n as Symbol).collect(),
            ShiftPresentation::RuleGraph(Rule::Renewal | Rule::RenewalUncertified) => {
                std::iter::once(1).chain((2..=n as Symbol).rev()).collect()
            }
            ShiftPresentation::RuleGraph(Rule::LoopsPlusRandomWalk) => {
                let up = (n as i64..2 * n as i64).map(walk_symbol);
                let down = (n as i64 + 1..2 * n as i64 - 1).rev().map(walk_symbol);
                up.chain(down).collect()
            }
            ShiftPresentation::FiniteMatrix(_) => {
                return Ok(ZeroSequence::Refused(Refusal::NoConstruction {
                    note: "finite alphabet".into(),
                }))
            }
        };
        out.push(Measure::periodic(shift, &lift(&word))?);
    }
    Ok(ZeroSequence::Measures(out))
}

#[derive(Clone, Debug)]
pub struct DichotomyParams {
    pub targets: usize,
    pub tau: f64,
    pub depth: usize,
    pub alphabet: usize,
    pub seed: u64,
    /// Largest number of copies of the target block.
    pub k_max: usize,
    pub symbol_cap: usize,
    pub max_run: usize,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            targets: 5,
            tau: 0.05,
            depth: 6,
            alphabet: 8,
            seed: 7,
            k_max: 1024,
            symbol_cap: 6,
            max_run: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetRow {
    pub target: Vec<Symbol>,
    pub block: Vec<BarSymbol>,
    pub k: usize,
    pub distance: f64,
    pub bound: f64,
    pub mass_at_infinity: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum DichotomyReport {
    /// `δ_∞̄` is the only new ergodic measure; every `(a, ∞…, b)` sample is rejected.
    FHolds { samples: usize, all_rejected: bool },
    /// Measures charging `∞` approximate every tested periodic target.
    FFails {
        witness: (Symbol, usize),
        tau: f64,
        rows: Vec<TargetRow>,
        max_distance: f64,
        all_within: bool,
    },
}

fn random_cycle(
    shift: &ShiftPresentation,
    symbols: &[Symbol],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Symbol>, ApproxError> {
    let start = symbols[rng.gen_range(0..symbols.len())];
    let len = rng.gen_range(1..=3);
    let mut path = vec![start];
    for _ in 1..len {
        let last = *path.last().unwrap();
        let next: Vec<Symbol> = symbols
            .iter()
            .copied()
            .filter(|&s| shift.has_edge(last, s))
            .collect();
        if next.is_empty() {
            break;
        }
        path.push(next[rng.gen_range(0..next.len())]);
    }
    let back = shift.bridge(*path.last().unwrap(), start, 64)?;
    let inner = back.symbols();
    path.extend_from_slice(&inner[1..inner.len() - 1]);
    Ok(path)
}

pub fn dichotomy_report(
    shift: &ShiftPresentation,
    params: &DichotomyParams,
) -> Result<DichotomyReport, ApproxError> {
    match check_f_property(shift, 64) {
        FProperty::Unknown { cap } => Err(ApproxError::FPropertyUndecided(cap)),
        FProperty::Holds { .. } => {
            let samples = sandwich_patterns(shift, params.symbol_cap, params.max_run);
            let all_rejected = f_property_word_restriction_check(shift, &samples)?;
            Ok(DichotomyReport::FHolds {
                samples: samples.len(),
                all_rejected,
            })
        }
        FProperty::Fails { symbol: a, length } => {
            let config = MetricConfig::new(shift, params.alphabet, params.depth);
            let symbols = shift.first_symbols(params.symbol_cap).items;
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut rows = Vec::new();
            for _ in 0..params.targets {
                let x = random_cycle(shift, &symbols, &mut rng)?;
                let target = Measure::periodic(shift, &lift(&x))?;
                let to_a = shift.bridge(*x.last().unwrap(), a, 64)?;
                let from_a = shift.bridge(a, x[0], 64)?;
                let mut w: Vec<BarSymbol> = to_a.symbols()[1..]
                    .iter()
                    .map(|&s| BarSymbol::Fin(s))
                    .collect();
                w.extend(std::iter::repeat_n(
                    BarSymbol::Inf,
                    length.saturating_sub(2).max(1),
                ));
                w.push(BarSymbol::Fin(a));
                let f = from_a.symbols();
                w.extend(f[1..f.len() - 1].iter().map(|&s| BarSymbol::Fin(s)));
                let block = BarWord::new(w).expect("nonempty block");
                let xw = Word::new(x.clone()).expect("nonempty target");
                let mut k = 4;
                let row = loop {
                    let mu = compactified_periodic_approximant(shift, &xw, &block, k)?;
                    let d = weakstar_distance(&mu, &target, &config).value;
                    let bound = displacement_bound(x.len(), block.len(), k, &config);
                    if d <= params.tau || 2 * k > params.k_max {
                        let inf = match mu.mass_at_infinity() {
                            Mass::Exact(r) => crate::num::to_f64(&r),
                            Mass::Approx(v) => v,
                        };
                        break TargetRow {
                            target: x.clone(),
                            block: block.symbols().to_vec(),
                            k,
                            distance: d,
                            bound,
                            mass_at_infinity: inf,
                            within_tolerance: d <= params.tau,
                        };
                    }
                    k *= 2;
                };
                rows.push(row);
            }
            let max_distance = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
            let all_within = rows.iter().all(|r| r.within_tolerance);
            Ok(DichotomyReport::FFails {
                witness: (a, length),
                tau: params.tau,
                rows,
                max_distance,
                all_within,
            })
        }
    }
}
