//! Locally constant potentials with an explicit head and a formula tail.
//!
//! A potential of depth `k` reads the first `k` coordinates. Words listed in
//! the head take their stored value, every other word takes `tail(x_1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MeasureError;
use crate::symbol::Symbol;

/// Value on cylinders `[n, …]` not covered by the head, as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    Constant {
        c: f64,
    },
    /// `coeff · log n`
    Log {
        coeff: f64,
    },
    /// `intercept + slope · n`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `coeff · n^power`
    Poly {
        coeff: f64,
        power: f64,
    },
    /// `coeff · ratio^n`
    Geometric {
        coeff: f64,
        ratio: f64,
    },
}

impl TailRule {
    pub fn eval(&self, n: Symbol) -> f64 {
        let x = n as f64;
        match *self {
            TailRule::Constant { c } => c,
            TailRule::Log { coeff } => {
                if coeff == 0.0 {
                    0.0
                } else {
                    coeff * x.ln()
                }
            }
            TailRule::Affine { intercept, slope } => intercept + slope * x,
            TailRule::Poly { coeff, power } => coeff * x.powf(power),
            TailRule::Geometric { coeff, ratio } => coeff * ratio.powf(x),
        }
    }

    /// `lim_{n→∞} tail(n)`. Every family is monotone in `n ≥ 1`.
    pub fn limit(&self) -> f64 {
        let signed_inf = |c: f64| {
            if c > 0.0 {
                f64::INFINITY
            } else if c < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        };
        match *self {
            TailRule::Constant { c } => c,
            TailRule::Log { coeff } => signed_inf(coeff),
            TailRule::Affine { intercept, slope } => {
                if slope == 0.0 {
                    intercept
                } else {
                    signed_inf(slope)
                }
            }
            TailRule::Poly { coeff, power } => {
                if power > 0.0 {
                    signed_inf(coeff)
                } else if power == 0.0 {
                    coeff
                } else {
                    0.0
                }
            }
            TailRule::Geometric { coeff, ratio } => {
                if ratio.abs() < 1.0 {
                    0.0
                } else if ratio == 1.0 {
                    coeff
                } else {
                    signed_inf(coeff)
                }
            }
        }
    }

    pub fn scaled(&self, t: f64) -> TailRule {
        match *self {
            TailRule::Constant { c } => TailRule::Constant { c: t * c },
            TailRule::Log { coeff } => TailRule::Log { coeff: t * coeff },
            TailRule::Affine { intercept, slope } => TailRule::Affine {
                intercept: t * intercept,
                slope: t * slope,
            },
            TailRule::Poly { coeff, power } => TailRule::Poly {
                coeff: t * coeff,
                power,
            },
            TailRule::Geometric { coeff, ratio } => TailRule::Geometric {
                coeff: t * coeff,
                ratio,
            },
        }
    }
}

/// Bound on `var_n(φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarBound {
    #[default]
    Zero,
    Geometric {
        #[serde(rename = "C")]
        c: f64,
        lambda: f64,
    },
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct Potential {
    depth: usize,
    head: BTreeMap<Vec<Symbol>, f64>,
    tail: TailRule,
    var_bound: VarBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSpec {
    depth: usize,
    #[serde(default)]
    head: BTreeMap<String, f64>,
    tail: TailRule,
    #[serde(default)]
    var_bound: VarBound,
}

impl TryFrom<PotentialSpec> for Potential {
    type Error = MeasureError;

    fn try_from(spec: PotentialSpec) -> Result<Self, MeasureError> {
        let mut head = BTreeMap::new();
        for (key, v) in spec.head {
            let word = key
                .split(',')
                .map(|t| t.trim().parse::<Symbol>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| MeasureError::InvalidPotential(format!("bad head key {key:?}")))?;
            head.insert(word, v);
        }
        Potential::new(spec.depth, head, spec.tail).map(|p| p.with_var_bound(spec.var_bound))
    }
}

impl From<Potential> for PotentialSpec {
    fn from(p: Potential) -> Self {
        PotentialSpec {
            depth: p.depth,
            head: p
                .head
                .into_iter()
                .map(|(w, v)| {
                    let key: Vec<String> = w.iter().map(|s| s.to_string()).collect();
                    (key.join(","), v)
                })
                .collect(),
            tail: p.tail,
            var_bound: p.var_bound,
        }
    }
}

impl Potential {
    pub fn new(
        depth: usize,
        head: BTreeMap<Vec<Symbol>, f64>,
        tail: TailRule,
    ) -> Result<Self, MeasureError> {
        if depth == 0 {
            return Err(MeasureError::InvalidPotential(
                "depth must be at least 1".into(),
            ));
        }
        if let Some(w) = head.keys().find(|w| w.len() != depth) {
            return Err(MeasureError::InvalidPotential(format!(
                "head word {w:?} does not have length {depth}"
            )));
        }
        if head.values().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(MeasureError::InvalidPotential(
                "head values must be below +infinity".into(),
            ));
        }
        let var_bound = if depth == 1 {
            VarBound::Zero
        } else {
            VarBound::Unknown
        };
        Ok(Potential {
            depth,
            head,
            tail,
            var_bound,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(1, BTreeMap::new(), TailRule::Constant { c }).unwrap()
    }

    /// Depth-one potential given by a formula in the first symbol.
    pub fn first_symbol(tail: TailRule) -> Self {
        Self::new(1, BTreeMap::new(), tail).unwrap()
    }

    /// Depth-one potential with explicit values on some symbols.
    pub fn from_symbol_values(
        values: &[(Symbol, f64)],
        tail: TailRule,
    ) -> Result<Self, MeasureError> {
        Self::new(1, values.iter().map(|&(s, v)| (vec![s], v)).collect(), tail)
    }

    pub fn with_var_bound(mut self, var_bound: VarBound) -> Self {
        self.var_bound = var_bound;
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn head(&self) -> &BTreeMap<Vec<Symbol>, f64> {
        &self.head
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    pub fn var_bound(&self) -> VarBound {
        self.var_bound
    }

    /// Value on the cylinder of the first `depth` symbols of `word`.
    pub fn value(&self, word: &[Symbol]) -> f64 {
        let key = &word[..self.depth.min(word.len())];
        match self.head.get(key) {
            Some(&v) => v,
            None => self.tail.eval(word[0]),
        }
    }

    pub fn scaled(&self, t: f64) -> Potential {
        Potential {
            depth: self.depth,
            head: self.head.iter().map(|(w, v)| (w.clone(), t * v)).collect(),
            tail: self.tail.scaled(t),
            var_bound: self.var_bound,
        }
    }

    /// `sup φ` over symbols `≥ min_symbol`; `+∞` when unbounded above.
    pub fn sup(&self, min_symbol: Symbol) -> f64 {
        let head_max = self
            .head
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let start = min_symbol.max(1);
        let tail_max = self.tail.eval(start).max(self.tail.limit());
        let tail_max = if min_symbol == 0 {
            tail_max.max(self.tail.eval(0))
        } else {
            tail_max
        };
        head_max.max(tail_max)
    }

    /// Whether the value of a word can differ from `tail(x_1)`.
    pub fn is_first_symbol_only(&self) -> bool {
        self.depth == 1 || self.head.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip() {
        let src = r#"{"depth":1,"head":{"1":0.0,"2":-1.5},"tail":{"kind":"log","coeff":-2.0},"var_bound":{"kind":"geometric","C":1.0,"lambda":0.5}}"#;
        let p: Potential = serde_json::from_str(src).unwrap();
        assert_eq!(p.value(&[2]), -1.5);
        assert!((p.value(&[3]) + 2.0 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(
            p.var_bound(),
            VarBound::Geometric {
                c: 1.0,
                lambda: 0.5
            }
        );
        let back: Potential = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn deeper_heads() {
        let p: Potential = serde_json::from_str(
            r#"{"depth":2,"head":{"1,2":3.0},"tail":{"kind":"constant","c":1.0}}"#,
        )
        .unwrap();
        assert_eq!(p.value(&[1, 2, 7]), 3.0);
        assert_eq!(p.value(&[1, 1]), 1.0);
        assert!(serde_json::from_str::<Potential>(
            r#"{"depth":2,"head":{"1":3.0},"tail":{"kind":"constant","c":1.0}}"#
        )
        .is_err());
    }

    #[test]
    fn suprema() {
        let p = Potential::first_symbol(TailRule::Log { coeff: -2.0 });
        assert_eq!(p.sup(1), 0.0);
        let q = Potential::first_symbol(TailRule::Affine {
            intercept: 0.0,
            slope: 1.0,
        });
        assert_eq!(q.sup(1), f64::INFINITY);
        assert_eq!(p.scaled(0.5).value(&[4]), -(4f64.ln()));
    }
}
