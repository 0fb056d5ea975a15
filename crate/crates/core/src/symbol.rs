//! Relation symbols are finite binary strings ordered shortlex.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A binary string naming a relation or a colour.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Symbol(String);

/// Ordered set of symbols; iteration is shortlex.
pub type Vocabulary = BTreeSet<Symbol>;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid symbol {0:?}: expected a string over {{0,1}} or '-'")]
pub struct InvalidSymbol(pub String);

impl Symbol {
    pub fn empty() -> Self {
        Symbol(String::new())
    }

    /// Builds a symbol from raw bits; panics on characters other than 0/1.
    pub fn from_bits(bits: &str) -> Self {
        assert!(
            bits.bytes().all(|b| b == b'0' || b == b'1'),
            "not a bit string: {bits:?}"
        );
        Symbol(bits.to_string())
    }

    pub fn bits(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `index`-th string in shortlex order ("" is 0, "0" is 1, "1" is 2, ...).
    pub fn nth(index: u64) -> Self {
        let mut len = 0u32;
        let mut rest = index;
        while rest >= (1u64 << len) {
            rest -= 1u64 << len;
            len += 1;
        }
        let bits = (0..len)
            .rev()
            .map(|i| if rest >> i & 1 == 1 { '1' } else { '0' })
            .collect();
        Symbol(bits)
    }

    /// Shortlex-least symbol rejected by `taken`.
    pub fn first_free(taken: impl Fn(&Symbol) -> bool) -> Symbol {
        (0..)
            .map(Symbol::nth)
            .find(|s| !taken(s))
            .expect("unbounded enumeration")
    }

    /// The first `count` symbols, in shortlex order, rejected by `taken`.
    pub fn first_free_n(count: usize, taken: impl Fn(&Symbol) -> bool) -> Vec<Symbol> {
        (0..)
            .map(Symbol::nth)
            .filter(|s| !taken(s))
            .take(count)
            .collect()
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for Symbol {
    type Err = InvalidSymbol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-" {
            return Ok(Symbol::empty());
        }
        if s.is_empty() || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(InvalidSymbol(s.to_string()));
        }
        Ok(Symbol(s.to_string()))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&self.0)
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({self})")
    }
}
