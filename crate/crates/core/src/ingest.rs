//! Expression matrices, discretisation to Boolean states, and labelled
//! state sets.
//!
//! The CSV layout is `cell_id,time,<gene1>,...,<geneN>` with one row per
//! cell and non-negative decimal expression values.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeneSet, State};

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: String,
    pub time: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionMatrix {
    pub genes: GeneSet,
    pub cells: Vec<Cell>,
}

fn parse_err(row: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("row {row}, column {col}"),
        message: message.into(),
    }
}

impl ExpressionMatrix {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| parse_err(1, 1, e.to_string()))?
            .clone();
        if header.len() < 3 || &header[0] != "cell_id" || &header[1] != "time" {
            return Err(parse_err(
                1,
                1,
                "header must be `cell_id,time,<gene1>,...,<geneN>`",
            ));
        }
        let genes = GeneSet::new(header.iter().skip(2).map(str::to_string)).map_err(|e| {
            parse_err(1, 3, e.to_string())
        })?;
        let n = genes.len();
        let mut cells = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| parse_err(row, 1, e.to_string()))?;
            if rec.len() != n + 2 {
                return Err(parse_err(
                    row,
                    rec.len().min(n + 2) + 1,
                    format!("expected {} fields, found {}", n + 2, rec.len()),
                ));
            }
            let mut values = Vec::with_capacity(n);
            for (j, field) in rec.iter().skip(2).enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(row, j + 3, format!("`{field}` is not a number")))?;
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(parse_err(
                        row,
                        j + 3,
                        format!("expression value {field} must be a non-negative real"),
                    ));
                }
                values.push(v);
            }
            cells.push(Cell {
                id: rec[0].to_string(),
                time: rec[1].to_string(),
                values,
            });
        }
        if cells.is_empty() {
            return Err(parse_err(2, 1, "no data rows"));
        }
        Ok(ExpressionMatrix { genes, cells })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("<csv output>", e.into());
        let mut header = vec!["cell_id".to_string(), "time".to_string()];
        header.extend(self.genes.names().iter().cloned());
        w.write_record(&header).map_err(io)?;
        for c in &self.cells {
            let mut rec = vec![c.id.clone(), c.time.clone()];
            rec.extend(c.values.iter().map(|v| format!("{v}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn time_labels(&self) -> BTreeSet<&str> {
        self.cells.iter().map(|c| c.time.as_str()).collect()
    }
}

/// Deduplicated Boolean states with their time labels and the designated
/// initial and final sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledStateSet {
    pub genes: GeneSet,
    /// Every state with the set of time labels of the cells that map to it.
    pub labels: BTreeMap<State, BTreeSet<String>>,
    pub initial: BTreeSet<State>,
    pub final_states: BTreeSet<State>,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    state: State,
    bits: String,
    labels: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    genes: GeneSet,
    states: Vec<StateRecord>,
    initial: Vec<State>,
    #[serde(rename = "final")]
    final_states: Vec<State>,
}

/// Discretise a matrix: bit `i` is set iff the value exceeds `threshold`
/// (zero by default). Cells collapsing to one state merge their labels.
pub fn discretize(
    m: &ExpressionMatrix,
    initial_label: &str,
    final_label: &str,
    threshold: f64,
) -> Result<LabeledStateSet> {
    let known = m.time_labels();
    for l in [initial_label, final_label] {
        if !known.contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
    }
    let mut labels: BTreeMap<State, BTreeSet<String>> = BTreeMap::new();
    for c in &m.cells {
        let bits: Vec<bool> = c.values.iter().map(|&v| v > threshold).collect();
        labels
            .entry(State::from_bits(&bits))
            .or_default()
            .insert(c.time.clone());
    }
    let with = |l: &str| {
        labels
            .iter()
            .filter(|(_, ls)| ls.contains(l))
            .map(|(s, _)| *s)
            .collect::<BTreeSet<_>>()
    };
    Ok(LabeledStateSet {
        genes: m.genes.clone(),
        initial: with(initial_label),
        final_states: with(final_label),
        labels,
    })
}

impl LabeledStateSet {
    /// Unlabelled states with explicit initial and final sets.
    pub fn from_states(
        genes: GeneSet,
        states: impl IntoIterator<Item = State>,
        initial: impl IntoIterator<Item = State>,
        final_states: impl IntoIterator<Item = State>,
    ) -> Self {
        let labels = states.into_iter().map(|s| (s, BTreeSet::new())).collect();
        let mut set = LabeledStateSet {
            genes,
            labels,
            initial: initial.into_iter().collect(),
            final_states: final_states.into_iter().collect(),
        };
        for s in set.initial.clone().into_iter().chain(set.final_states.clone()) {
            set.labels.entry(s).or_default();
        }
        set
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        self.labels.keys().copied()
    }

    /// Restrict to `keep`, dropping initial/final states that are not kept.
    pub fn restrict(&self, keep: &BTreeSet<State>) -> Self {
        LabeledStateSet {
            genes: self.genes.clone(),
            labels: self
                .labels
                .iter()
                .filter(|(s, _)| keep.contains(s))
                .map(|(s, l)| (*s, l.clone()))
                .collect(),
            initial: self.initial.intersection(keep).copied().collect(),
            final_states: self.final_states.intersection(keep).copied().collect(),
        }
    }

    /// Uniform subsample without replacement keeping `round(fraction * n)`
    /// states (at least one). Deterministic for a given seed.
    pub fn bootstrap_sample(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!(
                "keep fraction {fraction} must lie in (0, 1]"
            )));
        }
        let n = self.len();
        let k = ((n as f64 * fraction).round() as usize).clamp(1.min(n), n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: Vec<State> = self.states().collect();
        let keep: BTreeSet<State> = sample(&mut rng, n, k).into_iter().map(|i| all[i]).collect();
        Ok(self.restrict(&keep))
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            genes: self.genes.clone(),
            states: self
                .labels
                .iter()
                .map(|(s, l)| StateRecord {
                    state: *s,
                    bits: s.to_bit_string(self.genes.len()),
                    labels: l.clone(),
                })
                .collect(),
            initial: self.initial.iter().copied().collect(),
            final_states: self.final_states.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&file).expect("state file serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let mask = file.genes.full_mask();
        let mut labels = BTreeMap::new();
        for r in file.states {
            if r.state.0 & !mask != 0 {
                return Err(Error::Parse {
                    location: format!("state {}", r.state.to_hex()),
                    message: "state has bits beyond the gene count".into(),
                });
            }
            labels.insert(r.state, r.labels);
        }
        let set = LabeledStateSet {
            genes: file.genes,
            labels,
            initial: file.initial.into_iter().collect(),
            final_states: file.final_states.into_iter().collect(),
        };
        if let Some(s) = set
            .initial
            .iter()
            .chain(&set.final_states)
            .find(|s| !set.labels.contains_key(s))
        {
            return Err(Error::Parse {
                location: format!("state {}", s.to_hex()),
                message: "initial/final state is not in the state list".into(),
            });
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "cell_id,time,a,b\nc1,t0,0.0,2.5\nc2,t0,0.0,7.1\nc3,t1,1.0,0\n";

    #[test]
    fn nonzero_values_collapse_to_one_state() {
        let m = ExpressionMatrix::from_reader(SMALL.as_bytes()).unwrap();
        assert_eq!(m.cells.len(), 3);
        let s = discretize(&m, "t0", "t1", 0.0).unwrap();
        assert_eq!(s.len(), 2);
        let st = State::from_bits(&[false, true]);
        assert!(s.labels.contains_key(&st));
        assert_eq!(s.initial, [st].into_iter().collect());
        assert_eq!(s.final_states, [State::from_bits(&[true, false])].into_iter().collect());
    }

    #[test]
    fn binary_input_is_a_fixed_point() {
        let csv = "cell_id,time,a,b,c\nx,t0,1,0,1\ny,t1,0,1,1\nz,t1,1,0,1\n";
        let m = ExpressionMatrix::from_reader(csv.as_bytes()).unwrap();
        let s = discretize(&m, "t0", "t1", 0.0).unwrap();
        let states: Vec<State> = s.states().collect();
        assert_eq!(states, vec![State(0b101), State(0b110)]);
        // labels union on collapse
        assert_eq!(s.labels[&State(0b101)].len(), 2);
        assert_eq!(s.initial.intersection(&s.final_states).count(), 1);
    }

    #[test]
    fn parse_errors_carry_locations() {
        let neg = "cell_id,time,a\nc1,t0,-1\n";
        match ExpressionMatrix::from_reader(neg.as_bytes()) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "row 2, column 3"),
            other => panic!("{other:?}"),
        }
        let empty = "cell_id,time,a\n";
        assert!(ExpressionMatrix::from_reader(empty.as_bytes()).is_err());
        let dup = "cell_id,time,a,a\nc,t,1,1\n";
        assert!(ExpressionMatrix::from_reader(dup.as_bytes()).is_err());
        let short = "cell_id,time,a,b\nc,t,1\n";
        assert!(ExpressionMatrix::from_reader(short.as_bytes()).is_err());
        let nan = "cell_id,time,a\nc,t,abc\n";
        assert!(ExpressionMatrix::from_reader(nan.as_bytes()).is_err());
    }

    #[test]
    fn unknown_label() {
        let m = ExpressionMatrix::from_reader(SMALL.as_bytes()).unwrap();
        assert!(matches!(discretize(&m, "t9", "t1", 0.0), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let genes = GeneSet::new(["a", "b", "c", "d"]).unwrap();
        let set = LabeledStateSet::from_states(genes, (0..16).map(State), [State(0)], [State(15)]);
        assert_eq!(set.bootstrap_sample(1.0, 3).unwrap(), set);
        let a = set.bootstrap_sample(2.0 / 3.0, 7).unwrap();
        let b = set.bootstrap_sample(2.0 / 3.0, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 11);
        assert!(set.bootstrap_sample(0.0, 1).is_err());
        assert!(set.bootstrap_sample(1.5, 1).is_err());
    }

    #[test]
    fn state_file_round_trip() {
        let m = ExpressionMatrix::from_reader(SMALL.as_bytes()).unwrap();
        let s = discretize(&m, "t0", "t1", 0.0).unwrap();
        assert_eq!(LabeledStateSet::from_json(&s.to_json()).unwrap(), s);
    }
}
