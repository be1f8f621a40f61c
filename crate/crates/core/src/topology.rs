//! Metrics for the cylinder topology on sub-probability measures and the weak*
//! topology on measures of the compactification, plus convergence diagnosis.
//!
//! Both metrics are `Σ_i 2^{-i} |μ(C_i) − ν(C_i)|` over a fixed enumeration of
//! cylinders: admissible words over the first `S` symbols, by length and then
//! lexicographically. The weak* enumeration adds one extra letter after the
//! symbol cap which stands for every symbol beyond the cap together with `∞`.
//! Weights below the smallest positive double contribute nothing, so at most
//! [`MAX_CYLINDERS`] cylinders are listed and the rest goes into the tail bound.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::TopologyError;
use crate::measures::{Measure, Slot};
use crate::num::{to_f64, Mass};
use crate::shift::ShiftPresentation;
use crate::symbol::{BarSymbol, Symbol};

pub const MAX_CYLINDERS: usize = 1074;
pub const DEFAULT_ALPHABET: usize = 16;

#[derive(Clone, Debug)]
pub struct MetricConfig {
    alphabet: Vec<Symbol>,
    depth: usize,
    cylinders: Vec<Vec<Slot>>,
    bar_cylinders: Vec<Vec<Slot>>,
    cylinder_tail: f64,
    bar_tail: f64,
    has_tail_slot: bool,
}

/// A truncated distance and a bound on what the unlisted cylinders can add.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    pub tail_bound: f64,
}

impl MetricConfig {
    /// Enumeration over the first `alphabet_size` symbols of `shift` up to `depth`.
    pub fn new(shift: &ShiftPresentation, alphabet_size: usize, depth: usize) -> Self {
        let first = shift.first_symbols(alphabet_size.max(1));
        let alphabet = first.items;
        let has_tail_slot = !first.exhaustive;
        let tail = Slot::NotIn(alphabet.iter().copied().collect());
        let mut letters: Vec<Slot> = alphabet
            .iter()
            .map(|&s| Slot::Is(BarSymbol::Fin(s)))
            .collect();
        let (cylinders, cylinder_tail) = enumerate(shift, &letters, depth);
        if has_tail_slot {
            letters.push(tail);
        }
        let (bar_cylinders, bar_tail) = enumerate(shift, &letters, depth);
        MetricConfig {
            alphabet,
            depth,
            cylinders,
            bar_cylinders,
            cylinder_tail,
            bar_tail,
            has_tail_slot,
        }
    }

    pub fn with_depth(shift: &ShiftPresentation, depth: usize) -> Self {
        Self::new(shift, DEFAULT_ALPHABET, depth)
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cylinders(&self) -> &[Vec<Slot>] {
        &self.cylinders
    }

    pub fn bar_cylinders(&self) -> &[Vec<Slot>] {
        &self.bar_cylinders
    }

    pub fn has_tail_slot(&self) -> bool {
        self.has_tail_slot
    }

    /// `Σ_i w_i` over the listed Σ̄-cylinders, the scale of any weak* distance.
    pub fn bar_weight_total(&self) -> f64 {
        weight_total(self.bar_cylinders.len())
    }
}

fn weight(i: usize) -> f64 {
    0.5f64.powi(i as i32 + 1)
}

fn weight_total(n: usize) -> f64 {
    1.0 - 0.5f64.powi(n as i32)
}

fn slot_finite(s: &Slot) -> Option<Symbol> {
    match s {
        Slot::Is(BarSymbol::Fin(x)) => Some(*x),
        _ => None,
    }
}

/// Length-ascending, lexicographic list of letter words whose finite
/// neighbours are admissible transitions.
fn enumerate(shift: &ShiftPresentation, letters: &[Slot], depth: usize) -> (Vec<Vec<Slot>>, f64) {
    let mut out: Vec<Vec<Slot>> = Vec::new();
    let mut layer: Vec<Vec<Slot>> = vec![Vec::new()];
    'outer: for _ in 0..depth {
        let mut next = Vec::new();
        for w in &layer {
            for l in letters {
                let ok = match (w.last().and_then(slot_finite), slot_finite(l)) {
                    (Some(a), Some(b)) => shift.has_edge(a, b),
                    _ => true,
                };
                if ok {
                    let mut v = w.clone();
                    v.push(l.clone());
                    next.push(v);
                }
            }
        }
        for w in &next {
            if out.len() >= MAX_CYLINDERS {
                break 'outer;
            }
            out.push(w.clone());
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    let tail = 0.5f64.powi(out.len() as i32);
    (out, tail)
}

fn mass_gap(a: &Mass, b: &Mass) -> f64 {
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => to_f64(&(x - y)).abs(),
        _ => (a.to_f64() - b.to_f64()).abs(),
    }
}

fn weighted_distance(mu: &Measure, nu: &Measure, cyls: &[Vec<Slot>], tail: f64) -> Distance {
    let mut value = 0.0;
    for (i, c) in cyls.iter().enumerate() {
        let d = mass_gap(&mu.pattern_mass(c), &nu.pattern_mass(c));
        value += weight(i) * d;
    }
    Distance {
        value,
        tail_bound: tail,
    }
}

pub fn cylinder_distance(mu: &Measure, nu: &Measure, config: &MetricConfig) -> Distance {
    weighted_distance(mu, nu, &config.cylinders, config.cylinder_tail)
}

pub fn weakstar_distance(mu: &Measure, nu: &Measure, config: &MetricConfig) -> Distance {
    weighted_distance(mu, nu, &config.bar_cylinders, config.bar_tail)
}

/// The zero measure, limit of sequences that lose all their mass.
pub fn zero_measure() -> Measure {
    Measure::Combo {
        weights: Vec::new(),
        parts: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitClass {
    /// Converges on cylinders to a probability measure.
    Probability,
    /// Converges on cylinders to `λ μ` with `0 < λ < 1`; weak* to `λ μ + (1−λ) δ_∞̄`.
    Escape { lambda: f64 },
    /// All mass escapes; the weak* limit is `δ_∞̄`.
    TotalEscape,
    /// Fitted cylinder limits are not countably additive; no invariant limit on Σ.
    FinitelyAdditive { defect: f64, symbol: Symbol },
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceRow {
    pub index: usize,
    pub cylinder_to_candidate: Option<f64>,
    pub weakstar_to_candidate: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub classification: LimitClass,
    /// Fitted limits `m([a])` over the configured alphabet.
    pub depth1_limits: Vec<(Symbol, f64)>,
    /// `max_a (m([a]) − Σ_s m([a,s]))` over the alphabet.
    pub additivity_defect: f64,
    /// Largest `|x_last − limit|` over all fitted columns.
    pub residual: f64,
    pub table: Vec<DistanceRow>,
    pub metric_note: String,
}

#[derive(Clone, Debug)]
pub struct DiagnoseOptions {
    pub cauchy_tol: f64,
    pub additivity_tol: f64,
    /// Normalised limit `μ` used to build the candidates `λμ` and `λμ + (1−λ)δ_∞̄`.
    pub candidate: Option<Measure>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            cauchy_tol: 1e-6,
            additivity_tol: 1e-3,
            candidate: None,
        }
    }
}

/// Limit of a sequence by Aitken's Δ² on the last three terms, falling back to
/// the last term when the differences do not shrink geometrically.
pub fn extrapolate(xs: &[f64]) -> f64 {
    let n = xs.len();
    let last = xs[n - 1];
    if n < 3 {
        return last;
    }
    let (a, b, c) = (xs[n - 3], xs[n - 2], last);
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    if d1.abs() < 1e-300 || d2.abs() < 1e-300 || denom.abs() < 1e-300 {
        return last;
    }
    let r = d2 / d1;
    if !(0.0..1.0).contains(&r) {
        return last;
    }
    c - d2 * d2 / denom
}

/// Whether the distances to `limit` shrink along the last three terms.
fn cauchy_ok(xs: &[f64], limit: f64, tol: f64) -> bool {
    let n = xs.len();
    let dev: Vec<f64> = xs[n.saturating_sub(3)..]
        .iter()
        .map(|x| (x - limit).abs())
        .collect();
    dev.windows(2).all(|w| w[1] <= 0.99 * w[0] + tol)
}

fn rational_of(x: f64) -> BigRational {
    let scale = 1_000_000_000_000i64;
    BigRational::new(
        BigInt::from((x.clamp(0.0, 1.0) * scale as f64).round() as i64),
        BigInt::from(scale),
    )
}

/// `λμ + (1−λ)δ_∞̄` with the degenerate endpoints collapsed.
pub fn compactified_candidate(lambda: f64, mu: Option<&Measure>) -> Measure {
    let l = rational_of(lambda);
    let rest = BigRational::one() - &l;
    match mu {
        None => Measure::DiracInfinity,
        Some(_) if l.is_zero() => Measure::DiracInfinity,
        Some(m) if rest.is_zero() => m.clone(),
        Some(m) => Measure::Combo {
            weights: vec![l, rest],
            parts: vec![m.clone(), Measure::DiracInfinity],
        },
    }
}

/// `λμ` on Σ.
pub fn cylinder_candidate(lambda: f64, mu: Option<&Measure>) -> Measure {
    let l = rational_of(lambda);
    match mu {
        Some(m) if !l.is_zero() => Measure::Combo {
            weights: vec![l],
            parts: vec![m.clone()],
        },
        _ => zero_measure(),
    }
}

pub fn diagnose_convergence(
    seq: &[Measure],
    config: &MetricConfig,
    opts: &DiagnoseOptions,
) -> Result<ConvergenceReport, TopologyError> {
    if seq.len() < 3 {
        return Err(TopologyError::TooShort {
            needed: 3,
            got: seq.len(),
        });
    }
    let column = |slots: Vec<Slot>| -> Vec<f64> {
        seq.iter()
            .map(|m| m.pattern_mass(&slots).to_f64())
            .collect()
    };
    let mut residual: f64 = 0.0;
    let mut fit = |xs: Vec<f64>, label: String| -> Result<f64, TopologyError> {
        let l = extrapolate(&xs);
        if !cauchy_ok(&xs, l, opts.cauchy_tol) {
            return Err(TopologyError::NotConverged(format!(
                "column {label}: last values {:?} do not settle",
                &xs[xs.len().saturating_sub(3)..]
            )));
        }
        residual = residual.max((xs[xs.len() - 1] - l).abs());
        Ok(l)
    };
    let fin = |s: Symbol| Slot::Is(BarSymbol::Fin(s));
    let mut depth1 = Vec::new();
    let mut defect = 0.0f64;
    let mut worst = config.alphabet[0];
    for &a in &config.alphabet {
        let la = fit(column(vec![fin(a)]), format!("[{a}]"))?.max(0.0);
        let mut sum = 0.0;
        for &s in &config.alphabet {
            sum += fit(column(vec![fin(a), fin(s)]), format!("[{a},{s}]"))?.max(0.0);
        }
        if la - sum > defect {
            defect = la - sum;
            worst = a;
        }
        depth1.push((a, la));
    }
    let lambda = depth1.iter().map(|(_, l)| l).sum::<f64>().clamp(0.0, 1.0);
    let tol = opts.cauchy_tol;
    let classification = if defect > opts.additivity_tol {
        LimitClass::FinitelyAdditive {
            defect,
            symbol: worst,
        }
    } else if lambda >= 1.0 - tol {
        LimitClass::Probability
    } else if lambda <= tol {
        LimitClass::TotalEscape
    } else {
        LimitClass::Escape { lambda }
    };
    let mu = match classification {
        LimitClass::TotalEscape => None,
        _ => opts.candidate.as_ref(),
    };
    let have_candidate = mu.is_some() || matches!(classification, LimitClass::TotalEscape);
    let table = seq
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if !have_candidate {
                return DistanceRow {
                    index: i,
                    cylinder_to_candidate: None,
                    weakstar_to_candidate: None,
                };
            }
            let cyl = cylinder_candidate(lambda, mu);
            let bar = compactified_candidate(lambda, mu);
            DistanceRow {
                index: i,
                cylinder_to_candidate: Some(cylinder_distance(m, &cyl, config).value),
                weakstar_to_candidate: Some(weakstar_distance(m, &bar, config).value),
            }
        })
        .collect();
    Ok(ConvergenceReport {
        lambda,
        classification,
        depth1_limits: depth1,
        additivity_defect: defect,
        residual,
        table,
        metric_note: format!(
            "distances use weights 2^-i over {} cylinders on the first {} symbols up to depth {}; rates are artifacts of this choice",
            config.cylinders.len(),
            config.alphabet.len(),
            config.depth
        ),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeRow {
    pub m: Symbol,
    pub masses: Vec<f64>,
    /// Minimum over the second half of the sequence.
    pub tail_infimum: f64,
}

/// Masses of `K_M = ⋃_{i ≤ M} [i]` along the sequence.
pub fn mass_escape_profile(seq: &[Measure], m_list: &[Symbol]) -> Vec<EscapeRow> {
    m_list
        .iter()
        .map(|&m| {
            let masses: Vec<f64> = seq
                .iter()
                .map(|mu| {
                    (0..=m)
                        .map(|i| mu.mass(&[BarSymbol::Fin(i)]))
                        .fold(Mass::zero(), |a, b| a + b)
                        .to_f64()
                })
                .collect();
            let half = masses.len() / 2;
            let tail_infimum = masses[half..].iter().copied().fold(f64::INFINITY, f64::min);
            EscapeRow {
                m,
                masses,
                tail_infimum,
            }
        })
        .collect()
}

/// Symbols of the configured alphabet as a set.
pub fn alphabet_set(config: &MetricConfig) -> BTreeSet<Symbol> {
    config.alphabet.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::{LoopSystem, LoopTail};
    use crate::num::rat;
    use crate::symbol::{bar, INF};

    fn full() -> ShiftPresentation {
        ShiftPresentation::FullShift
    }

    fn per(w: &[i64]) -> Measure {
        Measure::periodic(&full(), &bar(w)).unwrap()
    }

    #[test]
    fn enumeration_order() {
        let g = ShiftPresentation::golden_mean();
        let cfg = MetricConfig::new(&g, 8, 2);
        let fin = |s| Slot::Is(BarSymbol::Fin(s));
        assert_eq!(
            cfg.cylinders(),
            &[
                vec![fin(1)],
                vec![fin(2)],
                vec![fin(1), fin(1)],
                vec![fin(1), fin(2)],
                vec![fin(2), fin(1)]
            ]
        );
        assert!(!cfg.has_tail_slot());
        let cfg = MetricConfig::new(&full(), 2, 1);
        assert_eq!(cfg.bar_cylinders().len(), 3);
        assert_eq!(
            cfg.bar_cylinders()[2],
            vec![Slot::NotIn(BTreeSet::from([1, 2]))]
        );
    }

    #[test]
    fn distance_examples() {
        let cfg = MetricConfig::new(&full(), 4, 3);
        let a = per(&[1, 2]);
        assert_eq!(cylinder_distance(&a, &per(&[2, 1]), &cfg).value, 0.0);
        let half = a.scaled(rat(1, 2)).unwrap();
        assert!(
            cylinder_distance(&per(&[1]), &per(&[1]).scaled(rat(1, 2)).unwrap(), &cfg).value > 0.0
        );
        assert!(cylinder_distance(&a, &half, &cfg).value > 0.0);
        let d = weakstar_distance(&per(&[1]), &Measure::DiracInfinity, &cfg).value;
        assert!(d >= 0.5);
        assert_eq!(
            weakstar_distance(&Measure::DiracInfinity, &Measure::DiracInfinity, &cfg).value,
            0.0
        );
        let lim = per(&[1, INF]);
        let mut last = f64::INFINITY;
        for n in [2, 3, 4, 6] {
            let d = weakstar_distance(&per(&[1, n]), &lim, &cfg).value;
            assert!(d <= last);
            last = d;
        }
        assert_eq!(weakstar_distance(&per(&[1, 5]), &lim, &cfg).value, 0.0);
    }

    #[test]
    fn aitken_is_exact_on_geometric_sequences() {
        let xs = [0.125, 0.0625, 0.03125];
        assert!(extrapolate(&xs).abs() < 1e-15);
        assert_eq!(extrapolate(&[0.5, 0.5, 0.5]), 0.5);
    }

    #[test]
    fn classifies_escape_examples() {
        let cfg = MetricConfig::new(&full(), 8, 2);
        let seq: Vec<Measure> = [16, 32, 64, 128].iter().map(|&n| per(&[1, n])).collect();
        let rep = diagnose_convergence(&seq, &cfg, &DiagnoseOptions::default()).unwrap();
        assert!(matches!(
            rep.classification,
            LimitClass::FinitelyAdditive { symbol: 1, .. }
        ));
        assert!((rep.lambda - 0.5).abs() < 1e-12);

        let sys = ShiftPresentation::loop_system(
            LoopSystem::new(Default::default(), LoopTail::Constant(1)).unwrap(),
        );
        let cfg = MetricConfig::new(&sys, 8, 2);
        let l = match &sys {
            ShiftPresentation::LoopSystem(l) => l.clone(),
            _ => unreachable!(),
        };
        let seq: Vec<Measure> = [8, 16, 32]
            .iter()
            .map(|&n| Measure::cycle(&crate::symbol::lift(&l.find_loop(n, 1).unwrap().cycle())))
            .collect();
        let rep = diagnose_convergence(&seq, &cfg, &DiagnoseOptions::default()).unwrap();
        assert_eq!(rep.classification, LimitClass::TotalEscape);
        assert!(rep.lambda.abs() < 1e-6);

        let seq = vec![per(&[1, 2]); 3];
        let rep = diagnose_convergence(&seq, &cfg, &DiagnoseOptions::default());
        assert!(rep.is_ok());
        let cfg = MetricConfig::new(&full(), 4, 2);
        let rep = diagnose_convergence(&seq, &cfg, &DiagnoseOptions::default()).unwrap();
        assert_eq!(rep.classification, LimitClass::Probability);
        assert!(matches!(
            diagnose_convergence(&seq[..2], &cfg, &DiagnoseOptions::default()),
            Err(TopologyError::TooShort { .. })
        ));
    }

    #[test]
    fn rejects_oscillation() {
        let cfg = MetricConfig::new(&full(), 4, 2);
        let seq = vec![per(&[1]), per(&[2]), per(&[1]), per(&[2])];
        assert!(matches!(
            diagnose_convergence(&seq, &cfg, &DiagnoseOptions::default()),
            Err(TopologyError::NotConverged(_))
        ));
    }

    #[test]
    fn escape_profile() {
        let seq: Vec<Measure> = [4, 8, 16].iter().map(|&n| per(&[1, n])).collect();
        let rows = mass_escape_profile(&seq, &[1]);
        assert_eq!(rows[0].masses, vec![0.5, 0.5, 0.5]);
        let rows = mass_escape_profile(&[per(&[1])], &[1]);
        assert_eq!(rows[0].tail_infimum, 1.0);
    }
}
