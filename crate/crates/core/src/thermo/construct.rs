//! Potentials built from a measure's one-symbol marginal, and invariant
//! measures that are not equilibrium states.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::ThermoError;
use crate::measures::{convex_combo, Integral, Measure};
use crate::num::{format_rational, int};
use crate::potential::{Potential, TailRule};
use crate::symbol::Symbol;
use crate::thermo::pressure::{full_shift_closed_form, tail_exp_sum};
use crate::topology::extrapolate;

#[derive(Clone, Debug, Serialize)]
pub struct PsiConstruction {
    pub potential: Potential,
    /// `P(ψ)` on the full shift from the closed form.
    pub pressure: f64,
    /// `Σ a_n` over the symbols with `μ([n]) = 0`.
    pub null_sum: f64,
    pub integral: f64,
    /// `H_μ` of the partition into one-symbol cylinders.
    pub partition_entropy: f64,
}

/// `ψ|[n] = log μ([n])` on charged symbols and `log a_n` elsewhere, with
/// `log a_n` given as a tail rule.
pub fn construct_psi(
    mu: &Measure,
    log_null_weights: TailRule,
) -> Result<PsiConstruction, ThermoError> {
    let h = mu
        .partition_entropy()
        .map_err(|_| ThermoError::InfinitePartitionEntropy)?;
    if !h.is_finite() {
        return Err(ThermoError::InfinitePartitionEntropy);
    }
    let marg = mu.marginal();
    let (potential, null_sum) = match (marg.atoms.is_empty(), marg.geometric.as_slice()) {
        (true, [(w, q)]) if (*w - 1.0).abs() < 1e-15 => {
            let tail = TailRule::Affine {
                intercept: ((1.0 - q) / q).ln(),
                slope: q.ln(),
            };
            (Potential::first_symbol(tail), 0.0)
        }
        (false, []) => {
            if marg.atoms.contains_key(&0) {
                return Err(ThermoError::HypothesisViolated(
                    "the construction lives on the full shift over symbols ≥ 1".into(),
                ));
            }
            let charged: Vec<Symbol> = marg.atoms.keys().copied().collect();
            let values: Vec<(Symbol, f64)> =
                marg.atoms.iter().map(|(&n, &m)| (n, m.ln())).collect();
            let null_sum =
                tail_exp_sum(log_null_weights, &charged).ok_or(ThermoError::NullWeightsDiverge)?;
            (
                Potential::from_symbol_values(&values, log_null_weights)?,
                null_sum,
            )
        }
        _ => {
            return Err(ThermoError::MethodUnsupported(
                "marginal must be finitely supported or a single geometric law".into(),
            ))
        }
    };
    let pressure = full_shift_closed_form(&potential)?.value;
    let expected = null_sum.ln_1p();
    if (pressure - expected).abs() > 1e-12 * expected.abs().max(1.0) {
        return Err(ThermoError::CertificateInvalid(format!(
            "closed-form pressure {pressure} differs from log(1 + Σ a_n) = {expected}"
        )));
    }
    let integral = match mu.integrate(&potential)? {
        Integral::Finite(v) => v,
        Integral::MinusInfinity => return Err(ThermoError::InfinitePartitionEntropy),
    };
    Ok(PsiConstruction {
        potential,
        pressure,
        null_sum,
        integral,
        partition_entropy: h,
    })
}

/// `1/2, 1/4, …, 2^{-(n-1)}` followed by the lump `2^{-(n-1)}`, summing to one.
pub fn dyadic_weights(n: usize) -> Vec<BigRational> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let mut w = BigRational::one();
    for _ in 1..n {
        w /= int(2);
        out.push(w.clone());
    }
    let used: BigRational = out.iter().sum();
    out.push(BigRational::one() - used);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyCertificate {
    /// `lim h(μ_n)`, extrapolated from the supplied entropies.
    pub entropy_limit: f64,
    /// `h(ν)` of the weak* limit.
    pub limit_entropy: f64,
    pub gap: f64,
    pub entropies: Vec<f64>,
}

/// `Σ p_n μ_n` together with the entropy gap `h(ν) − lim h(μ_n)` that rules
/// it out as an equilibrium state.
pub fn non_equilibrium_measure(
    mus: &[Measure],
    weights: &[BigRational],
    nu: &Measure,
) -> Result<(Measure, EntropyCertificate), ThermoError> {
    if mus.is_empty() || mus.len() != weights.len() {
        return Err(ThermoError::HypothesisViolated(format!(
            "{} measures against {} weights",
            mus.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(ThermoError::HypothesisViolated(
            "weights must be positive".into(),
        ));
    }
    let total: BigRational = weights.iter().sum();
    if total != BigRational::one() {
        return Err(ThermoError::HypothesisViolated(format!(
            "weights sum to {}, not 1",
            format_rational(&total)
        )));
    }
    let entropies: Vec<f64> = mus.iter().map(Measure::entropy).collect();
    if entropies.iter().any(|h| !h.is_finite()) {
        return Err(ThermoError::HypothesisViolated(
            "entropies must be bounded".into(),
        ));
    }
    let entropy_limit = extrapolate(&entropies);
    let limit_entropy = nu.entropy();
    let gap = limit_entropy - entropy_limit;
    if gap <= 1e-9 {
        return Err(ThermoError::CertificateInvalid(format!(
            "entropy gap {gap} is not positive"
        )));
    }
    let mut merged_w: Vec<BigRational> = Vec::new();
    let mut merged_m: Vec<Measure> = Vec::new();
    for (w, m) in weights.iter().zip(mus) {
        match merged_m.iter().position(|x| x == m) {
            Some(i) => merged_w[i] += w,
            None => {
                merged_w.push(w.clone());
                merged_m.push(m.clone());
            }
        }
    }
    debug_assert!(!merged_w.iter().any(Zero::is_zero));
    let measure = convex_combo(merged_w, merged_m)?;
    Ok((
        measure,
        EntropyCertificate {
            entropy_limit,
            limit_entropy,
            gap,
            entropies,
        },
    ))
}
