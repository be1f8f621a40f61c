//! Symbols over ℕ and ℕ∪{∞}, and the finite words built from them.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A letter of a countable alphabet.
pub type Symbol = u64;

/// A letter of the compactified alphabet ℕ∪{∞}.
///
/// `Fin` orders before `Inf`, so sorted bar-words put ∞ last within a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BarSymbol {
    Fin(Symbol),
    Inf,
}

impl BarSymbol {
    pub fn finite(self) -> Option<Symbol> {
        match self {
            BarSymbol::Fin(s) => Some(s),
            BarSymbol::Inf => None,
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, BarSymbol::Inf)
    }
}

impl From<Symbol> for BarSymbol {
    fn from(s: Symbol) -> Self {
        BarSymbol::Fin(s)
    }
}

impl fmt::Display for BarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BarSymbol::Fin(s) => write!(f, "{s}"),
            BarSymbol::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for BarSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            BarSymbol::Fin(s) => serializer.serialize_u64(*s),
            BarSymbol::Inf => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BarSymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct BarVisitor;

        impl Visitor<'_> for BarVisitor {
            type Value = BarSymbol;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or the string \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BarSymbol, E> {
                Ok(BarSymbol::Fin(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BarSymbol, E> {
                u64::try_from(v)
                    .map(BarSymbol::Fin)
                    .map_err(|_| E::custom("negative symbol"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BarSymbol, E> {
                match v {
                    "inf" | "∞" => Ok(BarSymbol::Inf),
                    other => other
                        .parse::<u64>()
                        .map(BarSymbol::Fin)
                        .map_err(|_| E::custom(format!("bad symbol {other:?}"))),
                }
            }
        }

        deserializer.deserialize_any(BarVisitor)
    }
}

/// Nonempty finite sequence over ℕ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Symbol>);

impl Word {
    /// Returns `None` for the empty sequence.
    pub fn new(symbols: Vec<Symbol>) -> Option<Self> {
        (!symbols.is_empty()).then_some(Word(symbols))
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Symbol {
        self.0[0]
    }

    pub fn last(&self) -> Symbol {
        self.0[self.0.len() - 1]
    }

    pub fn to_bar(&self) -> BarWord {
        BarWord(self.0.iter().map(|&s| BarSymbol::Fin(s)).collect())
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_seq(f, &self.0)
    }
}

/// Nonempty finite sequence over ℕ∪{∞}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BarWord(Vec<BarSymbol>);

impl BarWord {
    pub fn new(symbols: Vec<BarSymbol>) -> Option<Self> {
        (!symbols.is_empty()).then_some(BarWord(symbols))
    }

    pub fn symbols(&self) -> &[BarSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn infinity_count(&self) -> usize {
        self.0.iter().filter(|s| s.is_inf()).count()
    }

    /// The ∞-free word, if there is one.
    pub fn to_finite(&self) -> Option<Word> {
        self.0
            .iter()
            .map(|s| s.finite())
            .collect::<Option<Vec<_>>>()
            .and_then(Word::new)
    }

    pub fn into_inner(self) -> Vec<BarSymbol> {
        self.0
    }
}

impl From<Word> for BarWord {
    fn from(w: Word) -> Self {
        w.to_bar()
    }
}

impl fmt::Display for BarWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_seq(f, &self.0)
    }
}

fn write_seq<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    f.write_str("(")?;
    for (i, s) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{s}")?;
    }
    f.write_str(")")
}

/// Shorthand for building bar-words in code and tests: `bar(&[1, INF, 1])`.
pub const INF: i64 = -1;

pub fn bar(symbols: &[i64]) -> Vec<BarSymbol> {
    symbols
        .iter()
        .map(|&s| {
            if s < 0 {
                BarSymbol::Inf
            } else {
                BarSymbol::Fin(s as Symbol)
            }
        })
        .collect()
}

pub fn lift(symbols: &[Symbol]) -> Vec<BarSymbol> {
    symbols.iter().map(|&s| BarSymbol::Fin(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_symbol_json() {
        let w: Vec<BarSymbol> = serde_json::from_str(r#"[1, "inf", 3]"#).unwrap();
        assert_eq!(w, bar(&[1, INF, 3]));
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"[1,"inf",3]"#);
    }

    #[test]
    fn empty_words_rejected() {
        assert!(Word::new(vec![]).is_none());
        assert!(BarWord::new(vec![]).is_none());
    }

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(BarSymbol::Fin(u64::MAX) < BarSymbol::Inf);
    }
}
