//! Pressure by truncation, loop generating functions, closed forms and
//! periodic-point partition sums, and the finiteness threshold `s∞`.

use serde::Serialize;

use crate::error::ThermoError;
use crate::loops::{GrowthRate, LoopCount, LoopSystem, LoopTail, BASE};
use crate::measures::{Integral, Measure};
use crate::num::KahanSum;
use crate::potential::{Potential, TailRule};
use crate::shift::{AlphabetKind, ShiftPresentation};
use crate::symbol::Symbol;
use crate::thermo::transfer::{build_transfer, spectral_radius};
use crate::topology::{
    diagnose_convergence, extrapolate, DiagnoseOptions, LimitClass, MetricConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMethod {
    Auto,
    Truncation,
    LoopGeneratingFunction,
    PartitionSum,
    /// `log Σ_n e^{φ(n)}` for depth-one potentials on the full shift.
    ClosedForm,
}

impl PressureMethod {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "auto" => PressureMethod::Auto,
            "truncation" => PressureMethod::Truncation,
            "loop" | "loop_generating_function" => PressureMethod::LoopGeneratingFunction,
            "partition" | "partition_sum" => PressureMethod::PartitionSum,
            "closed_form" => PressureMethod::ClosedForm,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorBound {
    /// Absolute error at most this.
    Declared { bound: f64 },
    /// The value is a lower bound for the pressure.
    OneSidedLower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureStep {
    pub size: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub method: PressureMethod,
    pub steps: Vec<PressureStep>,
    pub bound: ErrorBound,
}

#[derive(Clone, Debug)]
pub struct PressureParams {
    /// Largest truncation size.
    pub max_symbols: usize,
    pub cauchy_tol: f64,
    pub ceiling: f64,
    /// Period used by the partition-sum method.
    pub period: usize,
    /// Symbol cap for partition sums on infinite alphabets.
    pub symbol_cap: usize,
}

impl Default for PressureParams {
    fn default() -> Self {
        PressureParams {
            max_symbols: 256,
            cauchy_tol: 1e-9,
            ceiling: 50.0,
            period: 30,
            symbol_cap: 256,
        }
    }
}

pub fn pressure(
    shift: &ShiftPresentation,
    phi: &Potential,
    method: PressureMethod,
    params: &PressureParams,
) -> Result<PressureEstimate, ThermoError> {
    match method {
        PressureMethod::Auto => {
            if let ShiftPresentation::FullShift = shift {
                if phi.depth() == 1 {
                    return full_shift_closed_form(phi);
                }
            }
            if let ShiftPresentation::LoopSystem(l) = shift {
                match loop_pressure(l, phi) {
                    Err(ThermoError::MethodUnsupported(_)) => {}
                    other => return other,
                }
            }
            truncation_pressure(shift, phi, params)
        }
        PressureMethod::Truncation => truncation_pressure(shift, phi, params),
        PressureMethod::LoopGeneratingFunction => match shift {
            ShiftPresentation::LoopSystem(l) => loop_pressure(l, phi),
            _ => Err(ThermoError::MethodUnsupported(
                "generating functions need a loop system".into(),
            )),
        },
        PressureMethod::ClosedForm => match shift {
            ShiftPresentation::FullShift if phi.depth() == 1 => full_shift_closed_form(phi),
            _ => Err(ThermoError::MethodUnsupported(
                "closed form only for depth-one potentials on the full shift".into(),
            )),
        },
        PressureMethod::PartitionSum => partition_pressure(shift, phi, params),
    }
}

/// Spectral radii on the first `K` symbols for `K = 2, 4, …`.
pub fn truncation_pressure(
    shift: &ShiftPresentation,
    phi: &Potential,
    params: &PressureParams,
) -> Result<PressureEstimate, ThermoError> {
    let mut steps: Vec<PressureStep> = Vec::new();
    let mut k = 2usize;
    loop {
        let first = shift.first_symbols(k.min(params.max_symbols));
        let symbols = first.items;
        let t = build_transfer(shift, &symbols, phi.depth(), |w| phi.value(w));
        let rho = spectral_radius(&t.matrix);
        let value = if rho > 0.0 {
            rho.ln()
        } else {
            f64::NEG_INFINITY
        };
        if let Some(prev) = steps.last() {
            // a larger truncation carries more invariant measures
            assert!(
                value >= prev.value - 1e-9 * prev.value.abs().max(1.0),
                "truncation pressure decreased from {} to {value}",
                prev.value
            );
        }
        steps.push(PressureStep {
            size: symbols.len(),
            value,
        });
        if first.exhaustive {
            return Ok(PressureEstimate {
                value,
                method: PressureMethod::Truncation,
                steps,
                bound: ErrorBound::Declared { bound: 1e-12 },
            });
        }
        if value > params.ceiling {
            return Err(ThermoError::Diverged(format!(
                "truncation pressure {value} exceeds the ceiling {}",
                params.ceiling
            )));
        }
        let n = steps.len();
        if n >= 2 && (steps[n - 1].value - steps[n - 2].value).abs() < params.cauchy_tol {
            return Ok(PressureEstimate {
                value,
                method: PressureMethod::Truncation,
                steps,
                bound: ErrorBound::Declared {
                    bound: params.cauchy_tol,
                },
            });
        }
        if n >= 6 {
            let inc: Vec<f64> = steps[n - 6..]
                .windows(2)
                .map(|w| w[1].value - w[0].value)
                .collect();
            let steady = inc.iter().all(|&d| d > 0.0) && inc.windows(2).all(|w| w[1] >= 0.9 * w[0]);
            if steady {
                return Err(ThermoError::Diverged(format!(
                    "truncation pressure keeps growing at a steady rate (last value {value})"
                )));
            }
        }
        if symbols.len() >= params.max_symbols {
            return Ok(PressureEstimate {
                value,
                method: PressureMethod::Truncation,
                steps,
                bound: ErrorBound::OneSidedLower,
            });
        }
        k *= 2;
    }
}

/// `Σ_{n ∉ head} e^{tail(n)}` over `n ≥ 1`, or `None` when it diverges.
pub(crate) fn tail_exp_sum(tail: TailRule, head: &[Symbol]) -> Option<f64> {
    let skip = |n: Symbol| head.contains(&n);
    let head_part =
        |f: &dyn Fn(Symbol) -> f64| head.iter().filter(|&&n| n >= 1).map(|&n| f(n)).sum::<f64>();
    match tail {
        TailRule::Constant { .. } => None,
        TailRule::Affine { intercept, slope } => {
            if slope >= 0.0 {
                return None;
            }
            let r = slope.exp();
            let all = intercept.exp() * r / (1.0 - r);
            Some(all - head_part(&|n| (intercept + slope * n as f64).exp()))
        }
        TailRule::Log { coeff } => {
            if coeff >= -1.0 {
                return None;
            }
            let s = -coeff;
            Some(zeta(s) - head_part(&|n| (n as f64).powf(-s)))
        }
        _ => {
            if tail.limit() != f64::NEG_INFINITY {
                return None;
            }
            let mut sum = KahanSum::default();
            for n in 1..10_000_000u64 {
                let term = tail.eval(n).exp();
                if !skip(n) {
                    sum.add(term);
                }
                if n > 10 && term < 1e-18 * sum.value().max(1e-300) {
                    return Some(sum.value());
                }
            }
            None
        }
    }
}

/// Riemann zeta for `s > 1` by direct summation with an Euler–Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    let n = 1000u64;
    let mut sum = KahanSum::default();
    for k in 1..n {
        sum.add((k as f64).powf(-s));
    }
    let nf = n as f64;
    let tail = nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * nf.powf(-s - 3.0);
    sum.value() + tail
}

/// Whether `Σ_n e^{t·tail(n)}` converges, from the tail family alone.
fn tail_sum_finite(tail: TailRule, t: f64) -> bool {
    if t <= 0.0 {
        return false;
    }
    match tail {
        TailRule::Constant { .. } => false,
        TailRule::Log { coeff } => t * coeff < -1.0,
        TailRule::Affine { slope, .. } => slope < 0.0,
        TailRule::Poly { coeff, power } => coeff < 0.0 && power > 0.0,
        TailRule::Geometric { coeff, ratio } => coeff < 0.0 && ratio > 1.0,
    }
}

pub fn full_shift_closed_form(phi: &Potential) -> Result<PressureEstimate, ThermoError> {
    if phi.depth() != 1 {
        return Err(ThermoError::PotentialTooDeep(phi.depth()));
    }
    let head: Vec<Symbol> = phi
        .head()
        .keys()
        .map(|w| w[0])
        .filter(|&n| n >= 1)
        .collect();
    let rest = tail_exp_sum(phi.tail(), &head)
        .ok_or_else(|| ThermoError::Diverged("Σ exp φ(n) diverges".into()))?;
    let head_sum: f64 = head.iter().map(|&n| phi.value(&[n]).exp()).sum();
    let value = (head_sum + rest).ln();
    Ok(PressureEstimate {
        value,
        method: PressureMethod::ClosedForm,
        steps: vec![PressureStep { size: 0, value }],
        bound: ErrorBound::Declared { bound: 1e-12 },
    })
}

/// Sum of `e^{S_n φ}` over the loops of length `n`, evaluated on the loop cycle from the base.
fn loop_weight(l: &LoopSystem, phi: &Potential, n: u32) -> Option<f64> {
    match l.count(n) {
        LoopCount::Finite(0) => Some(0.0),
        LoopCount::Infinite => None,
        LoopCount::Finite(c) => {
            let constant = constant_value(phi);
            if let Some(v) = constant {
                return Some(c as f64 * (v * n as f64).exp());
            }
            let mut total = 0.0;
            for j in 1..=c {
                let lp = l.find_loop(n, j)?;
                let cycle = lp.cycle();
                let p = cycle.len();
                let birkhoff: f64 = (0..p)
                    .map(|i| {
                        let w: Vec<Symbol> = (0..phi.depth()).map(|k| cycle[(i + k) % p]).collect();
                        phi.value(&w)
                    })
                    .sum();
                total += birkhoff.exp();
            }
            Some(total)
        }
    }
}

fn constant_value(phi: &Potential) -> Option<f64> {
    match phi.tail() {
        TailRule::Constant { c } if phi.head().values().all(|&v| v == c) => Some(c),
        _ => None,
    }
}

/// `P = −log x*` where `Σ_n A_n x^n = 1`, with `A_n` the loop weights.
pub fn loop_pressure(l: &LoopSystem, phi: &Potential) -> Result<PressureEstimate, ThermoError> {
    if let Some(m) = l.infinite_length() {
        return Err(ThermoError::TailSeriesDiverges(format!(
            "infinitely many loops of length {m}"
        )));
    }
    let constant = constant_value(phi);
    if !l.is_finite() && constant.is_none() {
        return Err(ThermoError::MethodUnsupported(
            "infinite loop systems are handled for constant potentials only".into(),
        ));
    }
    let c = constant.unwrap_or(0.0);
    let head_len = l.head_len().max(1);
    let max_len = l.max_length();
    let last = max_len.unwrap_or(head_len);
    let mut weights = vec![0.0; last as usize + 1];
    for n in 1..=last {
        weights[n as usize] = loop_weight(l, phi, n).unwrap_or(f64::INFINITY);
    }
    // tail past the explicit part, as a function of x, with its radius of convergence
    let (radius, tail_fn): (f64, Box<dyn Fn(f64) -> f64>) = match (max_len, l.tail()) {
        (Some(_), _) => (f64::INFINITY, Box::new(|_| 0.0)),
        (None, LoopTail::Constant(k)) => {
            let r = (-c).exp();
            let from = last + 1;
            (
                r,
                Box::new(move |x: f64| {
                    let y = x * c.exp();
                    k as f64 * y.powi(from as i32) / (1.0 - y)
                }),
            )
        }
        (None, LoopTail::Exponential(b)) => {
            let r = (-c).exp() / b as f64;
            let from = last + 1;
            (
                r,
                Box::new(move |x: f64| {
                    let y = x * c.exp() * b as f64;
                    y.powi(from as i32) / (1.0 - y)
                }),
            )
        }
        (None, LoopTail::DoubleExponential) => {
            return Err(ThermoError::TailSeriesDiverges(
                "loop counts 2^(2^n) make the generating function diverge everywhere".into(),
            ))
        }
        (None, _) => unreachable!("unbounded lengths come from growing tails"),
    };
    let f = |x: f64| -> f64 {
        let mut s = KahanSum::default();
        let mut p = 1.0;
        for w in weights.iter().skip(1) {
            p *= x;
            s.add(w * p);
        }
        s.value() + tail_fn(x)
    };
    let mut lo = 0.0f64;
    let mut hi = if radius.is_finite() { radius } else { 1.0 };
    if radius.is_infinite() {
        while f(hi) < 1.0 {
            hi *= 2.0;
        }
    } else if f(radius * (1.0 - 1e-15)) < 1.0 {
        let value = -radius.ln();
        return Ok(PressureEstimate {
            value,
            method: PressureMethod::LoopGeneratingFunction,
            steps: vec![PressureStep { size: 0, value }],
            bound: ErrorBound::Declared { bound: 1e-12 },
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let value = -x.ln();
    Ok(PressureEstimate {
        value,
        method: PressureMethod::LoopGeneratingFunction,
        steps: vec![PressureStep { size: 0, value }],
        bound: ErrorBound::Declared {
            bound: 4.0 * f64::EPSILON * value.abs().max(1.0),
        },
    })
}

/// `(1/n) log Z_n`, where `Z_n` sums `e^{S_n φ}` over the points of period `n`
/// whose orbit visits the base symbol.
pub fn partition_pressure(
    shift: &ShiftPresentation,
    phi: &Potential,
    params: &PressureParams,
) -> Result<PressureEstimate, ThermoError> {
    let n = params.period.max(1);
    let z = match shift {
        ShiftPresentation::LoopSystem(l) => loop_partition_sum(l, phi, n, params.symbol_cap),
        _ => matrix_partition_sum(shift, phi, n, params.symbol_cap),
    };
    let value = z.ln() / n as f64;
    let exhaustive = shift.alphabet_kind() == AlphabetKind::Finite;
    Ok(PressureEstimate {
        value,
        method: PressureMethod::PartitionSum,
        steps: vec![PressureStep { size: n, value }],
        bound: if exhaustive {
            ErrorBound::Declared {
                bound: 2.0 / n as f64,
            }
        } else {
            ErrorBound::OneSidedLower
        },
    })
}

/// Periodic points of period `n` are concatenations of loops, counted with
/// the offset inside the first loop: `Z_n = Σ_l l·A_l·F(n−l)` where `F` sums
/// over loop sequences of total length `m`.
fn loop_partition_sum(l: &LoopSystem, phi: &Potential, n: usize, cap: usize) -> f64 {
    let weights: Vec<f64> = (0..=n as u32)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            match l.count(k) {
                LoopCount::Infinite => {
                    // only loops whose interior starts below the cap
                    let found = l
                        .loops()
                        .take_while(|lp| lp.first <= cap as Symbol || lp.length == 1)
                        .filter(|lp| lp.length == k)
                        .count();
                    let phi_n = constant_value(phi).unwrap_or(0.0) * k as f64;
                    found as f64 * phi_n.exp()
                }
                _ => loop_weight(l, phi, k).unwrap_or(0.0),
            }
        })
        .collect();
    let mut f = vec![0.0; n + 1];
    f[0] = 1.0;
    for m in 1..=n {
        let mut s = KahanSum::default();
        for k in 1..=m {
            s.add(weights[k] * f[m - k]);
        }
        f[m] = s.value();
    }
    let mut z = KahanSum::default();
    for k in 1..=n {
        z.add(k as f64 * weights[k] * f[n - k]);
    }
    z.value()
}

/// `tr(A^n) − tr(B^n)` on the first `cap` symbols, with `B` the matrix
/// without the base symbol (the smallest one).
fn matrix_partition_sum(shift: &ShiftPresentation, phi: &Potential, n: usize, cap: usize) -> f64 {
    let symbols = shift.first_symbols(cap).items;
    let t = build_transfer(shift, &symbols, phi.depth(), |w| phi.value(w));
    let base = symbols[0];
    let keep: Vec<usize> = (0..t.states.len())
        .filter(|&i| !t.states[i].contains(&base))
        .collect();
    let trace_pow = |m: &nalgebra::DMatrix<f64>| {
        let mut p = m.clone();
        for _ in 1..n {
            p = &p * m;
        }
        p.trace()
    };
    let full = trace_pow(&t.matrix);
    let sub = if keep.is_empty() {
        0.0
    } else {
        trace_pow(&t.matrix.select_rows(&keep).select_columns(&keep))
    };
    full - sub
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    ZeroEdge,
    OneEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SInfinity {
    /// `+∞` when `P(tφ)` is infinite for every `t` searched.
    pub value: f64,
    pub edge: Option<Edge>,
    /// The finiteness oracle was the truncation heuristic rather than a closed form.
    pub heuristic: bool,
    pub caveat: Option<String>,
}

/// Whether `P(tφ) < ∞`, with a flag telling if the answer is heuristic.
fn finite_pressure_oracle(shift: &ShiftPresentation, phi: &Potential, t: f64) -> (bool, bool) {
    let scaled = phi.scaled(t);
    match shift {
        ShiftPresentation::FiniteMatrix(_) => return (true, false),
        ShiftPresentation::LoopSystem(l) if l.is_finite() => return (true, false),
        ShiftPresentation::LoopSystem(l) => {
            let finite_entropy =
                l.infinite_length().is_none() && !matches!(l.growth_rate(), GrowthRate::Infinite);
            if finite_entropy
                && scaled.sup(BASE) < f64::INFINITY
                && scaled.tail().limit() > f64::NEG_INFINITY
            {
                return (true, false);
            }
            if let Ok(est) = loop_pressure(l, &scaled) {
                return (est.value.is_finite(), false);
            }
            if l.infinite_length().is_some() && constant_value(phi).is_some() {
                return (false, false);
            }
        }
        ShiftPresentation::FullShift if phi.depth() == 1 => {
            return (tail_sum_finite(phi.tail(), t), false);
        }
        _ => {}
    }
    let finite = truncation_pressure(shift, &scaled, &PressureParams::default()).is_ok();
    (finite, true)
}

/// `inf { t ≥ 0 : P(tφ) < ∞ }` by bisection on `[0, t_max]`.
pub fn s_infinity(shift: &ShiftPresentation, phi: &Potential, tol: f64) -> SInfinity {
    let t_max = 64.0;
    let mut heuristic = false;
    let mut oracle = |t: f64| {
        let (f, h) = finite_pressure_oracle(shift, phi, t);
        heuristic |= h;
        f
    };
    let value = if oracle(0.0) {
        0.0
    } else if !oracle(t_max) {
        f64::INFINITY
    } else {
        let (mut lo, mut hi) = (0.0, t_max);
        while hi - lo > tol / 4.0 {
            let mid = 0.5 * (lo + hi);
            if oracle(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let edge = if value <= tol {
        Some(Edge::ZeroEdge)
    } else if (value - 1.0).abs() <= tol {
        Some(Edge::OneEdge)
    } else {
        None
    };
    SInfinity {
        value,
        edge,
        heuristic,
        caveat: heuristic.then(|| {
            "finiteness decided by the truncation ceiling heuristic, not a closed form".into()
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfinityBound {
    /// Extrapolated `limsup (h(μ_n) + ∫φ dμ_n)`, a lower bound for `P_∞(φ)`.
    pub lower_bound: f64,
    pub values: Vec<f64>,
}

/// Lower bound for the pressure at infinity from a sequence escaping to `δ_∞̄`.
pub fn pressure_at_infinity_lower(
    seq: &[Measure],
    phi: &Potential,
    config: &MetricConfig,
) -> Result<InfinityBound, ThermoError> {
    let report = diagnose_convergence(seq, config, &DiagnoseOptions::default())?;
    if report.classification != LimitClass::TotalEscape {
        return Err(ThermoError::NotEscaping);
    }
    let mut values = Vec::with_capacity(seq.len());
    for m in seq {
        let v = match m.integrate(phi)? {
            Integral::Finite(v) => v,
            Integral::MinusInfinity => f64::NEG_INFINITY,
        };
        values.push(m.entropy() + v);
    }
    let tail = &values[values.len().saturating_sub(3)..];
    let lower_bound = if tail.iter().all(|v| v.is_finite()) {
        extrapolate(tail)
    } else {
        tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(InfinityBound {
        lower_bound,
        values,
    })
}
