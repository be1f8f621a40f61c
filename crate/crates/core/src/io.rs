//! JSON forms of shift presentations, measures and measure sequences.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::approx::{zero_measure_sequence, ZeroSequence};
use crate::error::{ApproxError, MeasureError, ShiftError};
use crate::loops::{LoopCount, LoopSystem, LoopTail};
use crate::measures::{convex_combo, Measure};
use crate::num::ratio_str;
use crate::shift::ShiftPresentation;
use crate::symbol::{BarSymbol, Symbol};

/// Rational written as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ratio(#[serde(with = "ratio_str")] pub BigRational);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopTailSpec {
    Zero,
    Constant(u64),
    InfiniteAt(u32),
    Exponential(u64),
    DoubleExponential,
}

impl From<LoopTailSpec> for LoopTail {
    fn from(t: LoopTailSpec) -> Self {
        match t {
            LoopTailSpec::Zero => LoopTail::Zero,
            LoopTailSpec::Constant(c) => LoopTail::Constant(c),
            LoopTailSpec::InfiniteAt(n) => LoopTail::InfiniteAt(n),
            LoopTailSpec::Exponential(b) => LoopTail::Exponential(b),
            LoopTailSpec::DoubleExponential => LoopTail::DoubleExponential,
        }
    }
}

impl From<LoopTail> for LoopTailSpec {
    fn from(t: LoopTail) -> Self {
        match t {
            LoopTail::Zero => LoopTailSpec::Zero,
            LoopTail::Constant(c) => LoopTailSpec::Constant(c),
            LoopTail::InfiniteAt(n) => LoopTailSpec::InfiniteAt(n),
            LoopTail::Exponential(b) => LoopTailSpec::Exponential(b),
            LoopTail::DoubleExponential => LoopTailSpec::DoubleExponential,
        }
    }
}

fn zero_tail() -> LoopTailSpec {
    LoopTailSpec::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftSpec {
    FiniteMatrix {
        alphabet: Vec<Symbol>,
        edges: Vec<(Symbol, Symbol)>,
    },
    LoopSystem {
        /// Loop length (as a string key) to loop count.
        loops: BTreeMap<String, LoopCount>,
        #[serde(default = "zero_tail")]
        tail: LoopTailSpec,
    },
    FullShift,
    Rule {
        name: String,
    },
}

impl ShiftSpec {
    pub fn build(&self) -> Result<ShiftPresentation, ShiftError> {
        match self {
            ShiftSpec::FiniteMatrix { alphabet, edges } => {
                ShiftPresentation::finite_matrix(alphabet.iter().copied(), edges.iter().copied())
            }
            ShiftSpec::LoopSystem { loops, tail } => {
                let mut head = BTreeMap::new();
                for (k, c) in loops {
                    let n: u32 = k.trim().parse().map_err(|_| {
                        ShiftError::InvalidPresentation(format!(
                            "loop length {k:?} is not an integer"
                        ))
                    })?;
                    head.insert(n, *c);
                }
                LoopSystem::new(head, (*tail).into()).map(ShiftPresentation::LoopSystem)
            }
            ShiftSpec::FullShift => Ok(ShiftPresentation::FullShift),
            ShiftSpec::Rule { name } => ShiftPresentation::rule(name),
        }
    }
}

impl From<&ShiftPresentation> for ShiftSpec {
    fn from(s: &ShiftPresentation) -> Self {
        match s {
            ShiftPresentation::FiniteMatrix(m) => ShiftSpec::FiniteMatrix {
                alphabet: m.alphabet().iter().copied().collect(),
                edges: m.edges().collect(),
            },
            ShiftPresentation::LoopSystem(l) => ShiftSpec::LoopSystem {
                loops: l.head().iter().map(|(n, c)| (n.to_string(), *c)).collect(),
                tail: l.tail().into(),
            },
            ShiftPresentation::FullShift => ShiftSpec::FullShift,
            ShiftPresentation::RuleGraph(r) => ShiftSpec::Rule {
                name: r.name().to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Periodic {
        word: Vec<BarSymbol>,
    },
    Markov {
        symbols: Vec<Symbol>,
        stationary: Vec<Ratio>,
        transition: Vec<Vec<Ratio>>,
    },
    MarkovApprox {
        symbols: Vec<Symbol>,
        stationary: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    Bernoulli {
        symbols: Vec<Symbol>,
        probs: Vec<Ratio>,
    },
    BernoulliGeometric {
        ratio: Ratio,
    },
    Combo {
        weights: Vec<Ratio>,
        parts: Vec<MeasureSpec>,
    },
    DiracInfinity,
}

fn unwrap(v: &[Ratio]) -> Vec<BigRational> {
    v.iter().map(|r| r.0.clone()).collect()
}

fn wrap(v: &[BigRational]) -> Vec<Ratio> {
    v.iter().cloned().map(Ratio).collect()
}

impl MeasureSpec {
    /// Builds the measure, checking periodic words against `shift`.
    pub fn build(&self, shift: &ShiftPresentation) -> Result<Measure, MeasureError> {
        match self {
            MeasureSpec::Periodic { word } => Measure::periodic(shift, word),
            MeasureSpec::Markov {
                symbols,
                stationary,
                transition,
            } => Measure::markov_exact(
                symbols.clone(),
                unwrap(stationary),
                transition.iter().map(|row| unwrap(row)).collect(),
            ),
            MeasureSpec::MarkovApprox {
                symbols,
                stationary,
                transition,
            } => Measure::markov_approx(symbols.clone(), stationary.clone(), transition.clone()),
            MeasureSpec::Bernoulli { symbols, probs } => {
                Measure::bernoulli(symbols.clone(), unwrap(probs))
            }
            MeasureSpec::BernoulliGeometric { ratio } => {
                Measure::bernoulli_geometric(ratio.0.clone())
            }
            MeasureSpec::Combo { weights, parts } => {
                let parts = parts
                    .iter()
                    .map(|p| p.build(shift))
                    .collect::<Result<Vec<_>, _>>()?;
                convex_combo(unwrap(weights), parts)
            }
            MeasureSpec::DiracInfinity => Ok(Measure::DiracInfinity),
        }
    }
}

impl From<&Measure> for MeasureSpec {
    fn from(m: &Measure) -> Self {
        match m {
            Measure::Periodic { cycle } => MeasureSpec::Periodic {
                word: cycle.clone(),
            },
            Measure::FiniteMarkov(mk) => match mk.exact_data() {
                Some((p, tr)) => MeasureSpec::Markov {
                    symbols: mk.symbols().to_vec(),
                    stationary: wrap(p),
                    transition: tr.iter().map(|row| wrap(row)).collect(),
                },
                None => MeasureSpec::MarkovApprox {
                    symbols: mk.symbols().to_vec(),
                    stationary: mk.stationary_f64(),
                    transition: mk.transition_f64(),
                },
            },
            Measure::BernoulliGeometric { ratio } => MeasureSpec::BernoulliGeometric {
                ratio: Ratio(ratio.clone()),
            },
            Measure::Combo { weights, parts } => MeasureSpec::Combo {
                weights: wrap(weights),
                parts: parts.iter().map(MeasureSpec::from).collect(),
            },
            Measure::DiracInfinity => MeasureSpec::DiracInfinity,
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeasureSpec::from(self).serialize(s)
    }
}

/// Entry of a periodic word template: a symbol, `∞`, or the sequence index `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Token {
    Symbol(Symbol),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedMeasure {
    pub n: u64,
    pub measure: MeasureSpec,
}

/// A sequence of measures indexed by `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    List {
        measures: Vec<IndexedMeasure>,
    },
    /// `Periodic(word)` with each `"n"` token replaced by the index.
    PeriodicTemplate {
        n: Vec<u64>,
        word: Vec<Token>,
    },
    /// The built-in zero-measure construction of the shift.
    ZeroMeasure {
        n: Vec<u64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum SequenceError {
    #[error("bad template token {0:?}: expected a symbol, \"inf\" or \"n\"")]
    BadToken(String),
    #[error("the zero-measure construction was refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

impl SequenceSpec {
    pub fn indices(&self) -> Vec<u64> {
        match self {
            SequenceSpec::List { measures } => measures.iter().map(|m| m.n).collect(),
            SequenceSpec::PeriodicTemplate { n, .. } | SequenceSpec::ZeroMeasure { n } => n.clone(),
        }
    }

    pub fn build(&self, shift: &ShiftPresentation) -> Result<Vec<Measure>, SequenceError> {
        match self {
            SequenceSpec::List { measures } => Ok(measures
                .iter()
                .map(|m| m.measure.build(shift))
                .collect::<Result<_, _>>()?),
            SequenceSpec::PeriodicTemplate { n, word } => n
                .iter()
                .map(|&n| {
                    let w = word
                        .iter()
                        .map(|t| match t {
                            Token::Symbol(s) => Ok(BarSymbol::Fin(*s)),
                            Token::Name(x) if x == "n" => Ok(BarSymbol::Fin(n)),
                            Token::Name(x) if x == "inf" || x == "∞" => Ok(BarSymbol::Inf),
                            Token::Name(x) => Err(SequenceError::BadToken(x.clone())),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Measure::periodic(shift, &w)?)
                })
                .collect(),
            SequenceSpec::ZeroMeasure { n } => {
                let sizes: Vec<usize> = n.iter().map(|&k| k as usize).collect();
                match zero_measure_sequence(shift, &sizes)? {
                    ZeroSequence::Measures(ms) => Ok(ms),
                    ZeroSequence::Refused(r) => Err(SequenceError::Refused(format!("{r:?}"))),
                }
            }
        }
    }
}
