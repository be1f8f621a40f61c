//! Invariant measures with exact cylinder masses.
//!
//! Cylinder queries go through [`Slot`] patterns so that the same code answers
//! Σ-cylinders, Σ̄-cylinders (with `∞`) and the "any symbol outside a finite
//! set" slots used by the weak* metric.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::MeasureError;
use crate::num::{rat, to_f64, KahanSum, Mass};
use crate::potential::{Potential, TailRule};
use crate::shift::ShiftPresentation;
use crate::symbol::{BarSymbol, Symbol, Word};

/// One coordinate of a cylinder-like pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Is(BarSymbol),
    Any,
    /// Any symbol outside the set, `∞` included.
    NotIn(BTreeSet<Symbol>),
}

impl Slot {
    pub fn matches(&self, s: BarSymbol) -> bool {
        match self {
            Slot::Is(t) => *t == s,
            Slot::Any => true,
            Slot::NotIn(set) => match s {
                BarSymbol::Inf => true,
                BarSymbol::Fin(x) => !set.contains(&x),
            },
        }
    }
}

pub fn cylinder(symbols: &[BarSymbol]) -> Vec<Slot> {
    symbols.iter().map(|&s| Slot::Is(s)).collect()
}

#[derive(Clone, Debug, PartialEq)]
enum MarkovData {
    Exact {
        p: Vec<BigRational>,
        tr: Vec<Vec<BigRational>>,
    },
    Approx {
        p: Vec<f64>,
        tr: Vec<Vec<f64>>,
    },
}

/// Stationary Markov chain on a finite set of symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Markov {
    symbols: Vec<Symbol>,
    data: MarkovData,
}

impl Markov {
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.data, MarkovData::Exact { .. })
    }

    /// Stationary vector and transition matrix when both are rational.
    pub fn exact_data(&self) -> Option<(&[BigRational], &[Vec<BigRational>])> {
        match &self.data {
            MarkovData::Exact { p, tr } => Some((p, tr)),
            MarkovData::Approx { .. } => None,
        }
    }

    pub fn stationary_f64(&self) -> Vec<f64> {
        match &self.data {
            MarkovData::Exact { p, .. } => p.iter().map(to_f64).collect(),
            MarkovData::Approx { p, .. } => p.clone(),
        }
    }

    pub fn transition_f64(&self) -> Vec<Vec<f64>> {
        match &self.data {
            MarkovData::Exact { tr, .. } => tr
                .iter()
                .map(|row| row.iter().map(to_f64).collect())
                .collect(),
            MarkovData::Approx { tr, .. } => tr.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    /// Orbit average over the cyclic shifts of a word. Stored as the primitive
    /// root rotated to its least rotation.
    Periodic {
        cycle: Vec<BarSymbol>,
    },
    FiniteMarkov(Markov),
    /// Bernoulli measure on `1, 2, …` with `p_n = (1-q) q^{n-1}`.
    BernoulliGeometric {
        ratio: BigRational,
    },
    /// `Σ w_i μ_i` with `Σ w_i ≤ 1`.
    Combo {
        weights: Vec<BigRational>,
        parts: Vec<Measure>,
    },
    DiracInfinity,
}

/// Value of an integral that may diverge to `-∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integral {
    Finite(f64),
    MinusInfinity,
}

impl Integral {
    pub fn value(self) -> f64 {
        match self {
            Integral::Finite(x) => x,
            Integral::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Integral::Finite(_))
    }
}

/// Depth-one marginal: finitely many atoms plus weighted geometric laws.
#[derive(Clone, Debug, Default)]
pub struct Marginal {
    pub atoms: BTreeMap<Symbol, f64>,
    pub geometric: Vec<(f64, f64)>,
}

impl Marginal {
    pub fn mass(&self, n: Symbol) -> f64 {
        let mut m = self.atoms.get(&n).copied().unwrap_or(0.0);
        if n >= 1 {
            for &(w, q) in &self.geometric {
                m += w * (1.0 - q) * q.powi(n as i32 - 1);
            }
        }
        m
    }
}

fn canonical_cycle(word: &[BarSymbol]) -> Vec<BarSymbol> {
    let n = word.len();
    let period = (1..=n)
        .find(|&p| n.is_multiple_of(p) && (0..n).all(|i| word[i] == word[i % p]))
        .unwrap_or(n);
    let root = &word[..period];
    let mut best = 0;
    for r in 1..period {
        let later = (0..period)
            .map(|k| (root[(r + k) % period], root[(best + k) % period]))
            .find(|(a, b)| a != b)
            .is_some_and(|(a, b)| a < b);
        if later {
            best = r;
        }
    }
    root[best..].iter().chain(&root[..best]).copied().collect()
}

fn check_stochastic_exact(p: &[BigRational], tr: &[Vec<BigRational>]) -> Result<(), MeasureError> {
    let n = p.len();
    let bad = |m: &str| Err(MeasureError::InvalidMarkov(m.into()));
    if tr.len() != n || tr.iter().any(|r| r.len() != n) {
        return bad("matrix shape does not match the stationary vector");
    }
    if p.iter().chain(tr.iter().flatten()).any(|x| x.is_negative()) {
        return bad("negative entry");
    }
    if p.iter().sum::<BigRational>() != BigRational::one() {
        return bad("stationary vector does not sum to 1");
    }
    if tr
        .iter()
        .any(|r| r.iter().sum::<BigRational>() != BigRational::one())
    {
        return bad("a row does not sum to 1");
    }
    for j in 0..n {
        let col: BigRational = (0..n).map(|i| &p[i] * &tr[i][j]).sum();
        if col != p[j] {
            return bad("p is not stationary for P");
        }
    }
    Ok(())
}

fn check_stochastic_f64(p: &[f64], tr: &[Vec<f64>]) -> Result<(), MeasureError> {
    const TOL: f64 = 1e-9;
    let n = p.len();
    let bad = |m: &str| Err(MeasureError::InvalidMarkov(m.into()));
    if tr.len() != n || tr.iter().any(|r| r.len() != n) {
        return bad("matrix shape does not match the stationary vector");
    }
    if p.iter().chain(tr.iter().flatten()).any(|x| !(*x >= 0.0)) {
        return bad("negative or NaN entry");
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > TOL {
        return bad("stationary vector does not sum to 1");
    }
    if tr.iter().any(|r| (r.iter().sum::<f64>() - 1.0).abs() > TOL) {
        return bad("a row does not sum to 1");
    }
    for j in 0..n {
        let col: f64 = (0..n).map(|i| p[i] * tr[i][j]).sum();
        if (col - p[j]).abs() > TOL {
            return bad("p is not stationary for P");
        }
    }
    Ok(())
}

/// Path-sum over a Markov chain restricted by per-coordinate symbol masks.
fn markov_pattern<T>(p: &[T], tr: &[Vec<T>], masks: &[Vec<bool>]) -> T
where
    T: Clone + Zero + std::ops::Mul<Output = T>,
{
    let n = p.len();
    let mut v: Vec<T> = (0..n)
        .map(|i| if masks[0][i] { p[i].clone() } else { T::zero() })
        .collect();
    for mask in &masks[1..] {
        let mut next = vec![T::zero(); n];
        for i in 0..n {
            if v[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if mask[j] && !tr[i][j].is_zero() {
                    next[j] = next[j].clone() + v[i].clone() * tr[i][j].clone();
                }
            }
        }
        v = next;
    }
    v.into_iter().fold(T::zero(), |a, b| a + b)
}

impl Measure {
    /// Periodic measure of a word, checked for cyclic admissibility in Σ̄.
    pub fn periodic(
        shift: &ShiftPresentation,
        word: &[BarSymbol],
    ) -> Result<Measure, MeasureError> {
        let ok = !word.is_empty()
            && shift
                .is_cyclically_bar_admissible(word)
                .map_err(|e| MeasureError::PreconditionViolated(e.to_string()))?;
        if !ok {
            let shown: Vec<String> = word.iter().map(|s| s.to_string()).collect();
            return Err(MeasureError::NotCyclicallyAdmissible(format!(
                "({})",
                shown.join(",")
            )));
        }
        Ok(Self::cycle(word))
    }

    pub fn periodic_word(shift: &ShiftPresentation, word: &Word) -> Result<Measure, MeasureError> {
        Self::periodic(shift, word.to_bar().symbols())
    }

    /// Periodic measure without an admissibility check.
    pub fn cycle(word: &[BarSymbol]) -> Measure {
        assert!(!word.is_empty(), "periodic measure of the empty word");
        Measure::Periodic {
            cycle: canonical_cycle(word),
        }
    }

    pub fn markov_exact(
        symbols: Vec<Symbol>,
        p: Vec<BigRational>,
        tr: Vec<Vec<BigRational>>,
    ) -> Result<Measure, MeasureError> {
        if symbols.len() != p.len() {
            return Err(MeasureError::InvalidMarkov("symbol count mismatch".into()));
        }
        check_stochastic_exact(&p, &tr)?;
        Ok(Measure::FiniteMarkov(Markov {
            symbols,
            data: MarkovData::Exact { p, tr },
        }))
    }

    pub fn markov_approx(
        symbols: Vec<Symbol>,
        p: Vec<f64>,
        tr: Vec<Vec<f64>>,
    ) -> Result<Measure, MeasureError> {
        if symbols.len() != p.len() {
            return Err(MeasureError::InvalidMarkov("symbol count mismatch".into()));
        }
        check_stochastic_f64(&p, &tr)?;
        Ok(Measure::FiniteMarkov(Markov {
            symbols,
            data: MarkovData::Approx { p, tr },
        }))
    }

    /// I.i.d. measure on finitely many symbols.
    pub fn bernoulli(
        symbols: Vec<Symbol>,
        probs: Vec<BigRational>,
    ) -> Result<Measure, MeasureError> {
        let tr = vec![probs.clone(); probs.len()];
        Self::markov_exact(symbols, probs, tr)
    }

    pub fn bernoulli_geometric(ratio: BigRational) -> Result<Measure, MeasureError> {
        if !(ratio.is_positive() && ratio < BigRational::one()) {
            return Err(MeasureError::InvalidMarkov(
                "ratio must lie in (0,1)".into(),
            ));
        }
        Ok(Measure::BernoulliGeometric { ratio })
    }

    /// Checks the support against the transitions of `shift`.
    pub fn validate_on(&self, shift: &ShiftPresentation) -> Result<(), MeasureError> {
        match self {
            Measure::Periodic { cycle } => {
                if shift.is_cyclically_bar_admissible(cycle).unwrap_or(false) {
                    Ok(())
                } else {
                    Err(MeasureError::NotCyclicallyAdmissible(format!("{cycle:?}")))
                }
            }
            Measure::FiniteMarkov(m) => {
                let tr = m.transition_f64();
                for (i, &a) in m.symbols.iter().enumerate() {
                    for (j, &b) in m.symbols.iter().enumerate() {
                        if tr[i][j] > 0.0 && !shift.has_edge(a, b) {
                            return Err(MeasureError::InvalidMarkov(format!(
                                "transition {a} -> {b} is not allowed by the shift"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Measure::BernoulliGeometric { .. } => match shift {
                ShiftPresentation::FullShift => Ok(()),
                _ => Err(MeasureError::PreconditionViolated(
                    "Bernoulli measures on ℕ live on the full shift".into(),
                )),
            },
            Measure::Combo { parts, .. } => parts.iter().try_for_each(|p| p.validate_on(shift)),
            Measure::DiracInfinity => Ok(()),
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            Measure::FiniteMarkov(m) => m.is_exact(),
            Measure::Combo { parts, .. } => parts.iter().all(|p| p.is_exact()),
            _ => true,
        }
    }

    pub fn total_weight(&self) -> BigRational {
        match self {
            Measure::Combo { weights, parts } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| w * p.total_weight())
                .sum(),
            _ => BigRational::one(),
        }
    }

    /// `λ μ` as a one-part combination.
    pub fn scaled(&self, lambda: BigRational) -> Result<Measure, MeasureError> {
        convex_combo(vec![lambda], vec![self.clone()])
    }

    pub fn pattern_mass(&self, pattern: &[Slot]) -> Mass {
        if pattern.is_empty() {
            return Mass::Exact(self.total_weight());
        }
        match self {
            Measure::Periodic { cycle } => {
                let p = cycle.len();
                let hits = (0..p)
                    .filter(|&i| {
                        pattern
                            .iter()
                            .enumerate()
                            .all(|(j, slot)| slot.matches(cycle[(i + j) % p]))
                    })
                    .count();
                Mass::Exact(rat(hits as i64, p as i64))
            }
            Measure::FiniteMarkov(m) => {
                let masks: Vec<Vec<bool>> = pattern
                    .iter()
                    .map(|slot| {
                        m.symbols
                            .iter()
                            .map(|&s| slot.matches(BarSymbol::Fin(s)))
                            .collect()
                    })
                    .collect();
                match &m.data {
                    MarkovData::Exact { p, tr } => Mass::Exact(markov_pattern(p, tr, &masks)),
                    MarkovData::Approx { p, tr } => Mass::Approx(markov_pattern(p, tr, &masks)),
                }
            }
            Measure::BernoulliGeometric { ratio } => {
                let one = BigRational::one();
                let mut total = one.clone();
                for slot in pattern {
                    let factor = match slot {
                        Slot::Any => one.clone(),
                        Slot::Is(BarSymbol::Inf) | Slot::Is(BarSymbol::Fin(0)) => {
                            BigRational::zero()
                        }
                        Slot::Is(BarSymbol::Fin(n)) => geometric_atom(ratio, *n),
                        Slot::NotIn(set) => {
                            &one - set
                                .iter()
                                .map(|&n| geometric_atom(ratio, n))
                                .sum::<BigRational>()
                        }
                    };
                    total *= factor;
                    if total.is_zero() {
                        break;
                    }
                }
                Mass::Exact(total)
            }
            Measure::Combo { weights, parts } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| p.pattern_mass(pattern) * w)
                .fold(Mass::zero(), |a, b| a + b),
            Measure::DiracInfinity => {
                let hit = pattern.iter().all(|s| s.matches(BarSymbol::Inf));
                Mass::Exact(if hit {
                    BigRational::one()
                } else {
                    BigRational::zero()
                })
            }
        }
    }

    pub fn mass(&self, cyl: &[BarSymbol]) -> Mass {
        self.pattern_mass(&cylinder(cyl))
    }

    pub fn mass_word(&self, word: &[Symbol]) -> Mass {
        let bar: Vec<BarSymbol> = word.iter().map(|&s| BarSymbol::Fin(s)).collect();
        self.mass(&bar)
    }

    pub fn mass_at_infinity(&self) -> Mass {
        self.mass(&[BarSymbol::Inf])
    }

    /// `Σ_a μ([a] C)` over the listed predecessors.
    pub fn preimage_mass(&self, cyl: &[BarSymbol], predecessors: &[BarSymbol]) -> Mass {
        predecessors
            .iter()
            .map(|&a| {
                let mut w = vec![a];
                w.extend_from_slice(cyl);
                self.mass(&w)
            })
            .fold(Mass::zero(), |a, b| a + b)
    }

    /// Symbols carrying positive mass when there are finitely many, else `None`.
    pub fn finite_support(&self) -> Option<BTreeSet<BarSymbol>> {
        match self {
            Measure::Periodic { cycle } => Some(cycle.iter().copied().collect()),
            Measure::FiniteMarkov(m) => {
                let p = m.stationary_f64();
                Some(
                    m.symbols
                        .iter()
                        .zip(p)
                        .filter(|(_, x)| *x > 0.0)
                        .map(|(&s, _)| BarSymbol::Fin(s))
                        .collect(),
                )
            }
            Measure::BernoulliGeometric { .. } => None,
            Measure::Combo { parts, .. } => {
                let mut all = BTreeSet::new();
                for p in parts {
                    all.extend(p.finite_support()?);
                }
                Some(all)
            }
            Measure::DiracInfinity => Some(BTreeSet::from([BarSymbol::Inf])),
        }
    }

    /// Kolmogorov–Sinai entropy. The Dirac measure at the point at infinity has entropy 0.
    pub fn entropy(&self) -> f64 {
        match self {
            Measure::Periodic { .. } | Measure::DiracInfinity => 0.0,
            Measure::FiniteMarkov(m) => {
                let p = m.stationary_f64();
                let tr = m.transition_f64();
                let mut h = KahanSum::default();
                for i in 0..p.len() {
                    for &x in &tr[i] {
                        if x > 0.0 {
                            h.add(-p[i] * x * x.ln());
                        }
                    }
                }
                h.value()
            }
            Measure::BernoulliGeometric { ratio } => geometric_entropy(to_f64(ratio)),
            Measure::Combo { weights, parts } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| to_f64(w) * p.entropy())
                .sum(),
        }
    }

    pub fn marginal(&self) -> Marginal {
        let mut out = Marginal::default();
        self.add_marginal(1.0, &mut out);
        out
    }

    fn add_marginal(&self, w: f64, out: &mut Marginal) {
        match self {
            Measure::Periodic { cycle } => {
                let p = cycle.len() as f64;
                for s in cycle.iter().filter_map(|s| s.finite()) {
                    *out.atoms.entry(s).or_insert(0.0) += w / p;
                }
            }
            Measure::FiniteMarkov(m) => {
                for (&s, x) in m.symbols.iter().zip(m.stationary_f64()) {
                    if x > 0.0 {
                        *out.atoms.entry(s).or_insert(0.0) += w * x;
                    }
                }
            }
            Measure::BernoulliGeometric { ratio } => out.geometric.push((w, to_f64(ratio))),
            Measure::Combo { weights, parts } => {
                for (v, p) in weights.iter().zip(parts) {
                    p.add_marginal(w * to_f64(v), out);
                }
            }
            Measure::DiracInfinity => {}
        }
    }

    /// `H_μ(𝓑) = −Σ_n μ([n]) log μ([n])` over the partition into depth-one cylinders.
    pub fn partition_entropy(&self) -> Result<f64, MeasureError> {
        let marg = self.marginal();
        let plogp = |m: f64| if m > 0.0 { -m * m.ln() } else { 0.0 };
        if marg.atoms.is_empty() && marg.geometric.len() == 1 && marg.geometric[0].0 == 1.0 {
            return Ok(geometric_entropy(marg.geometric[0].1));
        }
        let mut h = KahanSum::default();
        let mut cutoff: Symbol = 0;
        for &(_, q) in &marg.geometric {
            if !(q > 0.0 && q < 1.0) {
                return Err(MeasureError::SeriesUndecidable(
                    "geometric ratio outside (0,1)".into(),
                ));
            }
            let n = (-46.0 / q.log10()).ceil() as Symbol + 2;
            cutoff = cutoff.max(n);
        }
        if cutoff > 10_000_000 {
            return Err(MeasureError::SeriesUndecidable(
                "geometric tail too slow".into(),
            ));
        }
        for n in 1..=cutoff {
            h.add(plogp(marg.mass(n)));
        }
        for (&s, _) in marg.atoms.iter().filter(|(&s, _)| s == 0 || s > cutoff) {
            h.add(plogp(marg.mass(s)));
        }
        Ok(h.value())
    }

    pub fn integrate(&self, phi: &Potential) -> Result<Integral, MeasureError> {
        let k = phi.depth();
        match self {
            Measure::Periodic { cycle } => {
                let fin: Option<Vec<Symbol>> = cycle.iter().map(|s| s.finite()).collect();
                let fin = fin.ok_or_else(|| {
                    MeasureError::PreconditionViolated(
                        "potentials are not defined at the symbol infinity".into(),
                    )
                })?;
                let p = fin.len();
                let mut sum = KahanSum::default();
                for i in 0..p {
                    let window: Vec<Symbol> = (0..k).map(|j| fin[(i + j) % p]).collect();
                    let v = phi.value(&window);
                    if v == f64::NEG_INFINITY {
                        return Ok(Integral::MinusInfinity);
                    }
                    sum.add(v);
                }
                Ok(Integral::Finite(sum.value() / p as f64))
            }
            Measure::FiniteMarkov(m) => {
                let p = m.stationary_f64();
                let tr = m.transition_f64();
                let mut sum = KahanSum::default();
                let mut minus_inf = false;
                let mut path = Vec::with_capacity(k);
                for i in 0..p.len() {
                    markov_paths(&m.symbols, &tr, i, p[i], k, &mut path, &mut |w, mass| {
                        let v = phi.value(w);
                        if v == f64::NEG_INFINITY {
                            minus_inf = true;
                        } else {
                            sum.add(mass * v);
                        }
                    });
                }
                Ok(if minus_inf {
                    Integral::MinusInfinity
                } else {
                    Integral::Finite(sum.value())
                })
            }
            Measure::BernoulliGeometric { ratio } => {
                let q = to_f64(ratio);
                let base = geometric_series(q, phi.tail())?;
                let Integral::Finite(mut total) = base else {
                    return Ok(base);
                };
                for (w, &v) in phi.head() {
                    let m = to_f64(&self.mass_word(w).exact().cloned().unwrap_or_default());
                    if m > 0.0 {
                        if v == f64::NEG_INFINITY {
                            return Ok(Integral::MinusInfinity);
                        }
                        total += m * (v - phi.tail().eval(w[0]));
                    }
                }
                Ok(Integral::Finite(total))
            }
            Measure::Combo { weights, parts } => {
                let mut sum = KahanSum::default();
                for (w, part) in weights.iter().zip(parts) {
                    match part.integrate(phi)? {
                        Integral::MinusInfinity => return Ok(Integral::MinusInfinity),
                        Integral::Finite(x) => sum.add(to_f64(w) * x),
                    }
                }
                Ok(Integral::Finite(sum.value()))
            }
            Measure::DiracInfinity => Err(MeasureError::PreconditionViolated(
                "potentials are not defined at the point at infinity".into(),
            )),
        }
    }

    /// A return time `k ∈ [h, h+2m)` with `μ(A ∩ σ^{-k}A) > 2^{-2m}`, and that mass.
    pub fn return_time_witness(
        &self,
        a: &[BarSymbol],
        m: u32,
        h: usize,
    ) -> Result<(usize, Mass), MeasureError> {
        if a.is_empty() || m == 0 {
            return Err(MeasureError::PreconditionViolated(
                "need a cylinder and m ≥ 1".into(),
            ));
        }
        let ma = self.mass(a);
        let above = match ma.exact() {
            Some(r) => *r > rat(1, m as i64),
            None => ma.to_f64() > 1.0 / m as f64,
        };
        if !above {
            return Err(MeasureError::PreconditionViolated(format!(
                "μ(A) = {ma} is not above 1/{m}"
            )));
        }
        let threshold = BigRational::new(1.into(), num_bigint::BigInt::from(2).pow(2 * m));
        for k in h..h + 2 * m as usize {
            let Some(pattern) = overlap_pattern(a, k) else {
                continue;
            };
            let mass = self.pattern_mass(&pattern);
            let ok = match mass.exact() {
                Some(r) => *r > threshold,
                None => mass.to_f64() > to_f64(&threshold),
            };
            if ok {
                return Ok((k, mass));
            }
        }
        Err(MeasureError::PreconditionViolated(
            "no return time in the window; the measure is not invariant".into(),
        ))
    }
}

/// Pattern for `A ∩ σ^{-k} A`, `None` when the two copies conflict.
fn overlap_pattern(a: &[BarSymbol], k: usize) -> Option<Vec<Slot>> {
    let len = a.len().max(k + a.len());
    let mut slots = vec![Slot::Any; len];
    for (i, &s) in a.iter().enumerate() {
        slots[i] = Slot::Is(s);
    }
    for (i, &s) in a.iter().enumerate() {
        match &slots[k + i] {
            Slot::Is(t) if *t != s => return None,
            _ => slots[k + i] = Slot::Is(s),
        }
    }
    Some(slots)
}

fn markov_paths(
    symbols: &[Symbol],
    tr: &[Vec<f64>],
    i: usize,
    mass: f64,
    k: usize,
    path: &mut Vec<Symbol>,
    f: &mut impl FnMut(&[Symbol], f64),
) {
    if mass <= 0.0 {
        return;
    }
    path.push(symbols[i]);
    if path.len() == k {
        f(path, mass);
    } else {
        for j in 0..symbols.len() {
            markov_paths(symbols, tr, j, mass * tr[i][j], k, path, f);
        }
    }
    path.pop();
}

fn geometric_atom(ratio: &BigRational, n: Symbol) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let mut p = BigRational::one() - ratio;
    for _ in 1..n {
        p *= ratio;
    }
    p
}

fn geometric_entropy(q: f64) -> f64 {
    -(1.0 - q).ln() - q / (1.0 - q) * q.ln()
}

/// `Σ_{n≥1} (1−q) q^{n−1} f(n)`.
pub fn geometric_series(q: f64, f: TailRule) -> Result<Integral, MeasureError> {
    let mean = 1.0 / (1.0 - q);
    match f {
        TailRule::Constant { c } => return Ok(Integral::Finite(c)),
        TailRule::Affine { intercept, slope } => {
            return Ok(Integral::Finite(intercept + slope * mean))
        }
        TailRule::Geometric { coeff, ratio } => {
            if coeff == 0.0 {
                return Ok(Integral::Finite(0.0));
            }
            if q * ratio.abs() < 1.0 {
                return Ok(Integral::Finite(
                    coeff * (1.0 - q) * ratio / (1.0 - q * ratio),
                ));
            }
            if ratio < 0.0 {
                return Err(MeasureError::SeriesUndecidable(
                    "oscillating divergent series".into(),
                ));
            }
            return if coeff < 0.0 {
                Ok(Integral::MinusInfinity)
            } else {
                Err(MeasureError::UnboundedAbove)
            };
        }
        TailRule::Log { .. } | TailRule::Poly { .. } => {}
    }
    let mut sum = KahanSum::default();
    let mut w = 1.0 - q;
    for n in 1..5_000_000u64 {
        let term = w * f.eval(n);
        sum.add(term);
        if n > 20 && term.abs() < 1e-20 * sum.value().abs().max(1e-300) {
            return Ok(Integral::Finite(sum.value()));
        }
        w *= q;
        if w == 0.0 {
            return Ok(Integral::Finite(sum.value()));
        }
    }
    Err(MeasureError::SeriesUndecidable(
        "series did not settle".into(),
    ))
}

/// `Σ w_i μ_i`; weights positive with sum at most 1, parts pairwise distinct.
pub fn convex_combo(
    weights: Vec<BigRational>,
    parts: Vec<Measure>,
) -> Result<Measure, MeasureError> {
    if weights.len() != parts.len() {
        return Err(MeasureError::ArityMismatch(weights.len(), parts.len()));
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(MeasureError::NonPositiveWeight);
    }
    let total: BigRational = weights.iter().sum();
    if total > BigRational::one() {
        return Err(MeasureError::WeightSum(crate::num::format_rational(&total)));
    }
    for i in 0..parts.len() {
        for j in 0..i {
            if parts[i] == parts[j] {
                return Err(MeasureError::PreconditionViolated(
                    "convex combination parts must be distinct".into(),
                ));
            }
        }
    }
    Ok(Measure::Combo { weights, parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::{LoopCount, LoopSystem};
    use crate::num::int;
    use crate::symbol::{bar, lift, INF};

    fn full() -> ShiftPresentation {
        ShiftPresentation::FullShift
    }

    fn per(w: &[i64]) -> Measure {
        Measure::periodic(&full(), &bar(w)).unwrap()
    }

    fn exact(m: Mass) -> BigRational {
        m.exact().cloned().expect("exact mass")
    }

    fn golden_parry() -> Measure {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let p1 = g * g / (1.0 + g * g);
        Measure::markov_approx(
            vec![1, 2],
            vec![p1, 1.0 - p1],
            vec![vec![1.0 / g, 1.0 / (g * g)], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn periodic_masses() {
        let m = per(&[1]);
        assert_eq!(exact(m.mass_word(&[1])), int(1));
        assert_eq!(m.entropy(), 0.0);
        let m = per(&[1, 2]);
        for w in [&[1][..], &[2], &[1, 2], &[2, 1]] {
            assert_eq!(exact(m.mass_word(w)), rat(1, 2));
        }
        assert_eq!(exact(m.mass_word(&[1, 1])), int(0));
        assert_eq!(exact(m.mass_word(&[1, 2, 1])), rat(1, 2));
        assert_eq!(per(&[1, 2]), per(&[2, 1, 2, 1]));
        let m = per(&[1, INF]);
        assert_eq!(exact(m.mass_at_infinity()), rat(1, 2));
    }

    #[test]
    fn periodic_rejects_inadmissible() {
        let g = ShiftPresentation::golden_mean();
        assert!(matches!(
            Measure::periodic(&g, &lift(&[2, 2])),
            Err(MeasureError::NotCyclicallyAdmissible(_))
        ));
        let sys = ShiftPresentation::loop_system(
            LoopSystem::from_counts(&[(1, LoopCount::Finite(1)), (2, LoopCount::Infinite)])
                .unwrap(),
        );
        assert!(Measure::periodic(&sys, &bar(&[0, INF])).is_ok());
    }

    #[test]
    fn markov_masses_match_path_sums() {
        let m = golden_parry();
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((m.mass_word(&[1]).to_f64() - g * g / (1.0 + g * g)).abs() < 1e-12);
        assert!(!m.mass_word(&[1]).is_exact());
        // brute force over {1,2}^6 agrees with the pattern DP
        let p = [g * g / (1.0 + g * g), 1.0 / (1.0 + g * g)];
        let tr = [[1.0 / g, 1.0 / (g * g)], [1.0, 0.0]];
        for code in 0..64u32 {
            let w: Vec<Symbol> = (0..6).map(|i| 1 + ((code >> i) & 1) as Symbol).collect();
            let mut brute = p[(w[0] - 1) as usize];
            for pair in w.windows(2) {
                brute *= tr[(pair[0] - 1) as usize][(pair[1] - 1) as usize];
            }
            assert!((m.mass_word(&w).to_f64() - brute).abs() < 1e-14);
        }
        assert!((m.entropy() - g.ln()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_entropy_and_masses() {
        let b = Measure::bernoulli(vec![1, 2], vec![rat(1, 2), rat(1, 2)]).unwrap();
        assert!((b.entropy() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(exact(b.mass_word(&[1, 2, 1])), rat(1, 8));
        let geo = Measure::bernoulli_geometric(rat(1, 2)).unwrap();
        assert_eq!(exact(geo.mass_word(&[3])), rat(1, 8));
        assert_eq!(exact(geo.mass_word(&[1, 2])), rat(1, 8));
        assert!((geo.partition_entropy().unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn integrals() {
        let ind =
            Potential::from_symbol_values(&[(1, 1.0)], TailRule::Constant { c: 0.0 }).unwrap();
        assert_eq!(per(&[1, 2]).integrate(&ind).unwrap(), Integral::Finite(0.5));
        let geo = Measure::bernoulli_geometric(rat(1, 2)).unwrap();
        let log2n = Potential::first_symbol(TailRule::Affine {
            intercept: 0.0,
            slope: -(2f64.ln()),
        });
        let v = geo.integrate(&log2n).unwrap().value();
        assert!((v + 2.0 * 2f64.ln()).abs() < 1e-15);
        let sq = Potential::first_symbol(TailRule::Poly {
            coeff: -1.0,
            power: 2.0,
        });
        assert!((geo.integrate(&sq).unwrap().value() + 6.0).abs() < 1e-12);
        let blow = Potential::first_symbol(TailRule::Geometric {
            coeff: -1.0,
            ratio: 4.0,
        });
        assert_eq!(geo.integrate(&blow).unwrap(), Integral::MinusInfinity);
        let up = Potential::first_symbol(TailRule::Geometric {
            coeff: 1.0,
            ratio: 4.0,
        });
        assert_eq!(geo.integrate(&up), Err(MeasureError::UnboundedAbove));
    }

    #[test]
    fn partition_entropy_examples() {
        assert!((per(&[1, 2]).partition_entropy().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(per(&[1]).partition_entropy().unwrap(), 0.0);
    }

    #[test]
    fn combos() {
        let c = convex_combo(
            vec![rat(1, 2), rat(1, 2)],
            vec![per(&[1]), Measure::DiracInfinity],
        )
        .unwrap();
        assert_eq!(exact(c.mass_word(&[1])), rat(1, 2));
        assert_eq!(exact(c.mass_at_infinity()), rat(1, 2));
        let half = convex_combo(vec![rat(1, 2)], vec![per(&[1])]).unwrap();
        assert_eq!(half.total_weight(), rat(1, 2));
        assert!(matches!(
            convex_combo(vec![rat(2, 3), rat(1, 2)], vec![per(&[1]), per(&[2])]),
            Err(MeasureError::WeightSum(_))
        ));
        let c = convex_combo(vec![rat(3, 10), rat(7, 10)], vec![per(&[1]), per(&[1, 2])]).unwrap();
        assert_eq!(exact(c.mass_word(&[1])), rat(3, 10) + rat(7, 20));
    }

    #[test]
    fn return_times() {
        let (k, m) = per(&[1, 2]).return_time_witness(&lift(&[1]), 3, 1).unwrap();
        assert_eq!((k, exact(m)), (2, rat(1, 2)));
        let (k, _) = per(&[1]).return_time_witness(&lift(&[1]), 2, 5).unwrap();
        assert_eq!(k, 5);
        let b = Measure::bernoulli(vec![1, 2], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let (k, m) = b.return_time_witness(&lift(&[1]), 3, 1).unwrap();
        assert_eq!((k, exact(m)), (1, rat(1, 4)));
        assert!(per(&[1, 2]).return_time_witness(&lift(&[1]), 2, 1).is_err());
    }
}
