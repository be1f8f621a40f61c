//! Numerical check of the dual variational principle on cylinder families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::ThermoError;
use crate::measures::{Integral, Measure};
use crate::potential::Potential;
use crate::shift::ShiftPresentation;
use crate::symbol::{BarSymbol, Symbol};
use crate::thermo::pressure::{pressure, s_infinity, PressureMethod, PressureParams};
use crate::thermo::transfer::{build_transfer, spectral_radius};

/// Span of the indicators of admissible depth-`depth` cylinders on the first `symbols` symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub depth: usize,
    pub symbols: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizerParams {
    pub seed: u64,
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Allowed negative slack before the inequality counts as violated.
    pub slack_tol: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            seed: 7,
            restarts: 3,
            max_sweeps: 200,
            slack_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub cylinder: Vec<Symbol>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    /// `h(μ) + ∫φ dμ`.
    pub target: f64,
    /// Smallest `P(φ+g) − ∫g dμ` found over the family.
    pub inf_value: f64,
    pub gap: f64,
    pub certificate: Vec<Coefficient>,
    pub evaluations: usize,
    /// Smallest `P(φ+g) − ∫g dμ − target` over every evaluated `g`.
    pub min_slack: f64,
    pub box_bound: f64,
    pub family_size: usize,
}

struct Objective {
    /// Per matrix entry: `φ` part and family index.
    entries: Vec<(usize, usize, f64, usize)>,
    n: usize,
    masses: Vec<f64>,
    target: f64,
    evaluations: usize,
    min_slack: f64,
}

impl Objective {
    fn eval(&mut self, c: &[f64]) -> f64 {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for &(i, j, base, k) in &self.entries {
            m[(i, j)] = (base + c[k]).exp();
        }
        let p = spectral_radius(&m).ln();
        let linear: f64 = c.iter().zip(&self.masses).map(|(a, b)| a * b).sum();
        let value = p - linear;
        self.evaluations += 1;
        self.min_slack = self.min_slack.min(value - self.target);
        value
    }
}

fn check_hypotheses(
    shift: &ShiftPresentation,
    phi: &Potential,
    mu: &Measure,
) -> Result<f64, ThermoError> {
    if phi.sup(0) == f64::INFINITY {
        return Err(ThermoError::HypothesisViolated("sup φ = ∞".into()));
    }
    match pressure(shift, phi, PressureMethod::Auto, &PressureParams::default()) {
        Ok(p) if p.value.is_finite() => {}
        Ok(_) | Err(ThermoError::Diverged(_)) | Err(ThermoError::TailSeriesDiverges(_)) => {
            return Err(ThermoError::HypothesisViolated("P=∞".into()))
        }
        Err(e) => return Err(e),
    }
    if s_infinity(shift, phi, 1e-6).value >= 1.0 {
        return Err(ThermoError::HypothesisViolated("s∞ ≥ 1".into()));
    }
    match mu.integrate(phi)? {
        Integral::Finite(v) => Ok(v),
        Integral::MinusInfinity => Err(ThermoError::HypothesisViolated("∫φ dμ = −∞".into())),
    }
}

/// Minimizes `P(φ+g) − ∫g dμ` over the family by coordinate descent with
/// golden-section line searches, from zero and from seeded random starts.
pub fn dual_vp_check(
    shift: &ShiftPresentation,
    phi: &Potential,
    mu: &Measure,
    family: FamilySpec,
    params: &OptimizerParams,
) -> Result<DualityReport, ThermoError> {
    if family.depth == 0 || family.symbols == 0 {
        return Err(ThermoError::MethodUnsupported(
            "empty cylinder family".into(),
        ));
    }
    let integral = check_hypotheses(shift, phi, mu)?;
    mu.validate_on(shift)?;
    let first = shift.first_symbols(family.symbols);
    if !first.exhaustive {
        let support = mu.finite_support().ok_or_else(|| {
            ThermoError::MethodUnsupported(
                "μ must be finitely supported on infinite alphabets".into(),
            )
        })?;
        if !support
            .iter()
            .all(|s| matches!(s, BarSymbol::Fin(a) if first.items.contains(a)))
        {
            return Err(ThermoError::MethodUnsupported(
                "μ is not supported on the truncation".into(),
            ));
        }
    }
    let symbols = first.items;
    let depth = phi.depth().max(family.depth);
    let t = build_transfer(shift, &symbols, depth, |_| 0.0);
    let word_len = if depth == 1 { 1 } else { depth };
    let mut cylinders: Vec<Vec<Symbol>> = Vec::new();
    let mut entries = Vec::new();
    for (i, u) in t.states.iter().enumerate() {
        for (j, v) in t.states.iter().enumerate() {
            if t.matrix[(i, j)] == 0.0 {
                continue;
            }
            let mut w = u.clone();
            w.push(*v.last().unwrap());
            w.truncate(word_len);
            let cyl = w[..family.depth.min(w.len())].to_vec();
            let k = match cylinders.iter().position(|c| *c == cyl) {
                Some(k) => k,
                None => {
                    cylinders.push(cyl);
                    cylinders.len() - 1
                }
            };
            entries.push((i, j, phi.value(&w), k));
        }
    }
    let masses: Vec<f64> = cylinders.iter().map(|c| mu.mass_word(c).to_f64()).collect();
    let target = mu.entropy() + integral;
    let mut obj = Objective {
        entries,
        n: t.states.len(),
        masses,
        target,
        evaluations: 0,
        min_slack: f64::INFINITY,
    };
    let dim = cylinders.len();
    let zero = vec![0.0; dim];
    let lambda = obj.eval(&zero).exp();
    let bound = 10.0 * (1.0 + lambda.ln().abs());

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut starts = vec![zero];
    for _ in 0..params.restarts {
        starts.push((0..dim).map(|_| rng.gen_range(-bound..=bound)).collect());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let (v, c) = descend(&mut obj, start, bound, params.max_sweeps);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    let (inf_value, c) = best.expect("at least one start");
    if obj.min_slack < -params.slack_tol {
        return Err(ThermoError::InequalityViolated(obj.min_slack));
    }
    Ok(DualityReport {
        target,
        inf_value,
        gap: inf_value - target,
        certificate: cylinders
            .into_iter()
            .zip(c)
            .map(|(cylinder, value)| Coefficient { cylinder, value })
            .collect(),
        evaluations: obj.evaluations,
        min_slack: obj.min_slack,
        box_bound: bound,
        family_size: dim,
    })
}

fn descend(obj: &mut Objective, mut c: Vec<f64>, bound: f64, max_sweeps: usize) -> (f64, Vec<f64>) {
    let mut value = obj.eval(&c);
    for _ in 0..max_sweeps {
        let before = value;
        for k in 0..c.len() {
            let (x, v) = golden_section(obj, &mut c, k, -bound, bound);
            if v < value {
                c[k] = x;
                value = v;
            }
        }
        if before - value < 1e-13 {
            break;
        }
    }
    let v = obj.eval(&c);
    (v, c)
}

fn golden_section(obj: &mut Objective, c: &mut [f64], k: usize, lo: f64, hi: f64) -> (f64, f64) {
    let keep = c[k];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let f_at = |obj: &mut Objective, c: &mut [f64], x: f64| {
        c[k] = x;
        obj.eval(c)
    };
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f_at(obj, c, x1);
    let mut f2 = f_at(obj, c, x2);
    while b - a > 1e-9 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f_at(obj, c, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f_at(obj, c, x2);
        }
    }
    let (x, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    c[k] = keep;
    (x, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::lift;
    use crate::thermo::transfer::parry_measure;

    #[test]
    fn parry_gap_closes() {
        let g = ShiftPresentation::golden_mean();
        let mu = parry_measure(&g).unwrap();
        let r = dual_vp_check(
            &g,
            &Potential::zero(),
            &mu,
            FamilySpec {
                depth: 2,
                symbols: 2,
            },
            &OptimizerParams::default(),
        )
        .unwrap();
        assert!(r.gap.abs() < 1e-3, "{r:?}");
        assert!(r.min_slack > -1e-10);
    }

    #[test]
    fn fixed_point_gap() {
        let g = ShiftPresentation::golden_mean();
        let mu = Measure::periodic(&g, &lift(&[1])).unwrap();
        let r = dual_vp_check(
            &g,
            &Potential::zero(),
            &mu,
            FamilySpec {
                depth: 2,
                symbols: 2,
            },
            &OptimizerParams::default(),
        )
        .unwrap();
        assert!(r.target.abs() < 1e-15);
        assert!(r.gap >= -1e-10 && r.gap < 5e-2, "{r:?}");
    }

    #[test]
    fn full_shift_refused() {
        let full = ShiftPresentation::FullShift;
        let mu = Measure::periodic(&full, &lift(&[1])).unwrap();
        let r = dual_vp_check(
            &full,
            &Potential::zero(),
            &mu,
            FamilySpec {
                depth: 1,
                symbols: 4,
            },
            &OptimizerParams::default(),
        );
        assert_eq!(
            r.unwrap_err(),
            ThermoError::HypothesisViolated("P=∞".into())
        );
    }
}
