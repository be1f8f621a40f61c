//! Weighted transfer matrices on finite symbol sets and their Perron data.

use nalgebra::DMatrix;

use crate::error::ThermoError;
use crate::measures::Measure;
use crate::potential::Potential;
use crate::shift::ShiftPresentation;
use crate::symbol::Symbol;

/// Higher-block transfer matrix of a potential reading `depth` coordinates.
///
/// States are admissible words of length `max(depth-1, 1)` over `symbols`.
/// For depth one the state is the current symbol and the weight of `i → j` is
/// `e^{φ(i)}`; otherwise the weight of `u → v` is `e^{φ(u ⊕ v_last)}`.
pub struct Transfer {
    pub states: Vec<Vec<Symbol>>,
    pub matrix: DMatrix<f64>,
}

pub fn build_transfer(
    shift: &ShiftPresentation,
    symbols: &[Symbol],
    depth: usize,
    value: impl Fn(&[Symbol]) -> f64,
) -> Transfer {
    let len = depth.saturating_sub(1).max(1);
    let mut states: Vec<Vec<Symbol>> = symbols.iter().map(|&s| vec![s]).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for w in &states {
            for &s in symbols {
                if shift.has_edge(*w.last().unwrap(), s) {
                    let mut v = w.clone();
                    v.push(s);
                    next.push(v);
                }
            }
        }
        states = next;
    }
    let index: std::collections::HashMap<&[Symbol], usize> = states
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_slice(), i))
        .collect();
    let n = states.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, u) in states.iter().enumerate() {
        for &b in symbols {
            if !shift.has_edge(*u.last().unwrap(), b) {
                continue;
            }
            let mut w = u.clone();
            w.push(b);
            let Some(&j) = index.get(&w[1..]) else {
                continue;
            };
            let weight_word: &[Symbol] = if depth == 1 { &w[..1] } else { &w };
            matrix[(i, j)] = value(weight_word).exp();
        }
    }
    Transfer { states, matrix }
}

/// Largest modulus among the eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Whether the positive entries form a strongly connected graph.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Perron eigenvalue with left and right eigenvectors, by power iteration on
/// `I + A` which is primitive whenever `A` is irreducible.
pub fn perron(m: &DMatrix<f64>) -> Result<(f64, Vec<f64>, Vec<f64>), ThermoError> {
    if !is_irreducible(m) {
        return Err(ThermoError::NotIrreducible);
    }
    let n = m.nrows();
    let scale = m.iter().copied().fold(0.0, f64::max).max(1e-300);
    let shifted = m / scale + DMatrix::identity(n, n);
    let iterate = |mat: &DMatrix<f64>| {
        let mut v = nalgebra::DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..100_000 {
            let mut w = mat * &v;
            let s = w.sum();
            w /= s;
            let diff = (&w - &v).amax();
            v = w;
            if diff < 1e-16 {
                break;
            }
        }
        v
    };
    let r = iterate(&shifted);
    let l = iterate(&shifted.transpose());
    let mr = m * &r;
    let lambda = mr.dot(&r) / r.dot(&r);
    Ok((
        lambda,
        l.iter().copied().collect(),
        r.iter().copied().collect(),
    ))
}

/// Result of [`equilibrium_finite`].
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub measure: Measure,
    pub pressure: f64,
    /// `h(μ) + ∫φ dμ − log λ`, zero up to rounding.
    pub identity_residual: f64,
}

/// Equilibrium state of a depth-one or depth-two potential on a finite alphabet.
pub fn equilibrium_finite(
    shift: &ShiftPresentation,
    phi: &Potential,
) -> Result<Equilibrium, ThermoError> {
    if phi.depth() > 2 {
        return Err(ThermoError::PotentialTooDeep(phi.depth()));
    }
    let (symbols, _) = shift.finite_graph().ok_or_else(|| {
        ThermoError::MethodUnsupported("equilibrium states need a finite alphabet".into())
    })?;
    let n = symbols.len();
    let mut a = DMatrix::zeros(n, n);
    for (i, &s) in symbols.iter().enumerate() {
        for (j, &t) in symbols.iter().enumerate() {
            if shift.has_edge(s, t) {
                a[(i, j)] = phi.value(&[s, t]).exp();
            }
        }
    }
    let (lambda, l, r) = perron(&a)?;
    let mut tr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            tr[i][j] = a[(i, j)] * r[j] / (lambda * r[i]);
        }
        let s: f64 = tr[i].iter().sum();
        tr[i].iter_mut().for_each(|x| *x /= s);
    }
    let mut p: Vec<f64> = (0..n).map(|i| l[i] * r[i]).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let measure = Measure::markov_approx(symbols.clone(), p.clone(), tr.clone())?;
    let pressure = lambda.ln();
    let mut integral = 0.0;
    for i in 0..n {
        for j in 0..n {
            if tr[i][j] > 0.0 {
                integral += p[i] * tr[i][j] * phi.value(&[symbols[i], symbols[j]]);
            }
        }
    }
    let identity_residual = measure.entropy() + integral - pressure;
    Ok(Equilibrium {
        measure,
        pressure,
        identity_residual,
    })
}

/// Measure of maximal entropy of a finite irreducible shift.
pub fn parry_measure(shift: &ShiftPresentation) -> Result<Measure, ThermoError> {
    Ok(equilibrium_finite(shift, &Potential::zero())?.measure)
}
