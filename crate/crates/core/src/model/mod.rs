//! Asynchronous Boolean network domain types and their exact semantics.

mod enumerate;
mod formula;
mod network;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{enumerate_formulas, enumerate_functions, FunctionSpace};
pub use formula::{MonotoneFormula, UpdateFunction};
pub use network::{Network, Rule, TransitionSystem};

/// Largest number of genes a [`State`] can hold.
pub const MAX_GENES: usize = 64;

/// Ordered, duplicate-free list of gene names. Gene `i` is `names[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct GeneSet {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl GeneSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_GENES {
            return Err(Error::TooManyGenes {
                got: names.len(),
                max: MAX_GENES,
            });
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateGene(n.clone()));
            }
        }
        Ok(GeneSet { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownGene(name.to_string()))
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::GeneOutOfRange {
                index: i,
                width: self.len(),
            })
        }
    }

    /// Bit mask with one bit per gene.
    pub fn full_mask(&self) -> u64 {
        mask_of_width(self.len())
    }

    /// Render a state as `Gene=0/1` pairs.
    pub fn describe(&self, s: State) -> String {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{}={}", n, u8::from(s.get(i))))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl TryFrom<Vec<String>> for GeneSet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        GeneSet::new(v)
    }
}

impl From<GeneSet> for Vec<String> {
    fn from(g: GeneSet) -> Self {
        g.names
    }
}

pub(crate) fn mask_of_width(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// One Boolean state over a [`GeneSet`]; bit `i` holds gene `i`.
///
/// The width lives in the gene set, so two states are comparable only
/// within one run. Ordering is numeric on the packed bits, which is the
/// order used for every deterministic tie-break.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State(pub u64);

impl State {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v |= 1 << i;
            }
        }
        State(v)
    }

    pub fn get(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    pub fn with(self, i: usize, value: bool) -> Self {
        if value {
            State(self.0 | 1 << i)
        } else {
            State(self.0 & !(1 << i))
        }
    }

    pub fn flip(self, i: usize) -> Self {
        State(self.0 ^ 1 << i)
    }

    pub fn hamming(self, other: State) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    /// The single differing gene if the states are Hamming neighbours.
    pub fn differing_gene(self, other: State) -> Option<usize> {
        let x = self.0 ^ other.0;
        (x.count_ones() == 1).then(|| x.trailing_zeros() as usize)
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        u64::from_str_radix(s.trim_start_matches("0x"), 16)
            .map(State)
            .map_err(|e| Error::Parse {
                location: format!("state `{s}`"),
                message: e.to_string(),
            })
    }

    /// Bit string with gene 0 first.
    pub fn to_bit_string(self, width: usize) -> String {
        (0..width).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({:#x})", self.0)
    }
}

impl Serialize for State {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        State::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_set_rejects_duplicates() {
        assert!(matches!(
            GeneSet::new(["a", "b", "a"]),
            Err(Error::DuplicateGene(g)) if g == "a"
        ));
    }

    #[test]
    fn state_bits() {
        let s = State::from_bits(&[true, false, true]);
        assert_eq!(s.0, 0b101);
        assert!(s.get(2));
        assert_eq!(s.flip(1).0, 0b111);
        assert_eq!(s.differing_gene(s.flip(1)), Some(1));
        assert_eq!(s.differing_gene(s.flip(1).flip(0)), None);
        assert_eq!(s.to_bit_string(3), "101");
        assert_eq!(State::from_hex(&s.to_hex()).unwrap(), s);
    }
}
