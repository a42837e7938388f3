//! Node decision functions as explicit lookup tables over (product) input
//! index spaces, plus the initialization recipes used by the experiments.
//!
//! Messages are stored 0-based internally; reports render them 1-based to
//! match the usual `{1, ..., 2^R}` convention.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::HypothesisModel;
use crate::topology::NodeId;

/// Ordered list of input-coordinate cardinalities with a mixed-radix
/// flat-index bijection; the first coordinate is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpace {
    dims: Vec<usize>,
}

impl InputSpace {
    pub fn new(dims: Vec<usize>) -> Self {
        debug_assert!(dims.iter().all(|&d| d >= 1));
        InputSpace { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of a coordinate vector.
    pub fn flatten(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dims.len() {
            return Err(Error::BadCoordinate(format!(
                "{} coordinates for {} dimensions",
                coords.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for (&c, &d) in coords.iter().zip(&self.dims) {
            if c >= d {
                return Err(Error::BadCoordinate(format!("coordinate {c} out of range 0..{d}")));
            }
            idx = idx * d + c;
        }
        Ok(idx)
    }

    /// Coordinate vector of a flat index.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            coords[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
        coords
    }
}

/// A deterministic scalar quantizer: a total lookup table from an input
/// space to `{0, ..., output_card - 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionFunction {
    input_space: InputSpace,
    output_card: usize,
    table: Vec<usize>,
}

impl DecisionFunction {
    pub fn from_table(input_space: InputSpace, output_card: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != input_space.size() {
            return Err(Error::DimensionMismatch(format!(
                "table of length {} for input space of size {}",
                table.len(),
                input_space.size()
            )));
        }
        if output_card == 0 {
            return Err(Error::DimensionMismatch("output cardinality must be >= 1".into()));
        }
        if let Some(&bad) = table.iter().find(|&&z| z >= output_card) {
            return Err(Error::DimensionMismatch(format!(
                "table entry {bad} exceeds output cardinality {output_card}"
            )));
        }
        Ok(DecisionFunction { input_space, output_card, table })
    }

    /// The constant function `y -> value`.
    pub fn constant(input_space: InputSpace, output_card: usize, value: usize) -> Result<Self> {
        let size = input_space.size();
        Self::from_table(input_space, output_card, vec![value; size])
    }

    /// Identity on a single-coordinate space.
    pub fn identity(card: usize) -> Self {
        DecisionFunction {
            input_space: InputSpace::new(vec![card]),
            output_card: card,
            table: (0..card).collect(),
        }
    }

    pub fn input_space(&self) -> &InputSpace {
        &self.input_space
    }

    pub fn output_card(&self) -> usize {
        self.output_card
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub(crate) fn table_mut(&mut self) -> &mut [usize] {
        &mut self.table
    }

    /// Look up the output message for a flat input index.
    pub fn apply(&self, input_index: usize) -> Result<usize> {
        self.table
            .get(input_index)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: input_index, size: self.table.len() })
    }

    /// All flat input indices consistent with a partial coordinate
    /// assignment that map to `output`. `fixed_coords` pairs a coordinate
    /// position with its pinned value.
    pub fn preimage(&self, fixed_coords: &[(usize, usize)], output: usize) -> Result<Vec<usize>> {
        let dims = self.input_space.dims();
        let mut pinned: Vec<Option<usize>> = vec![None; dims.len()];
        for &(pos, val) in fixed_coords {
            if pos >= dims.len() {
                return Err(Error::BadCoordinate(format!(
                    "coordinate position {pos} out of range 0..{}",
                    dims.len()
                )));
            }
            if val >= dims[pos] {
                return Err(Error::BadCoordinate(format!(
                    "value {val} out of range 0..{} at position {pos}",
                    dims[pos]
                )));
            }
            if pinned[pos].replace(val).is_some() {
                return Err(Error::BadCoordinate(format!("coordinate position {pos} pinned twice")));
            }
        }
        let mut out = Vec::new();
        for (idx, &z) in self.table.iter().enumerate() {
            if z != output {
                continue;
            }
            let coords = self.input_space.unflatten(idx);
            if pinned.iter().zip(&coords).all(|(p, &c)| p.map_or(true, |v| v == c)) {
                out.push(idx);
            }
        }
        Ok(out)
    }
}

/// Draw every table entry independently and uniformly from the output
/// alphabet. Same seed, same table.
pub fn init_random(input_space: InputSpace, output_card: usize, seed: u64) -> DecisionFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = (0..input_space.size()).map(|_| rng.random_range(0..output_card)).collect();
    DecisionFunction { input_space, output_card, table }
}

/// The leaf initialization recipe for binary hypotheses on an ordered
/// observation axis: for one-bit outputs, the single threshold minimizing
/// the leaf's own MAP error (found by scanning every cut point); for
/// `rate_bits > 1`, the two decision regions of the one-bit rule are each
/// split into `2^(rate_bits - 1)` contiguous equal-cardinality cells, with
/// remainder cells placed from the region's outer edge inward. Output labels
/// increase along the axis.
pub fn init_leaf_threshold(
    model: &HypothesisModel,
    leaf: NodeId,
    rate_bits: u32,
) -> Result<DecisionFunction> {
    if model.num_hypotheses() != 2 {
        return Err(Error::UnsupportedHypothesisCount {
            supported: 2,
            actual: model.num_hypotheses(),
        });
    }
    let pmf = model.leaf_pmf(leaf)?;
    let priors = model.priors();
    let obs = pmf[0].len();
    let space = InputSpace::new(vec![obs]);
    let cells_per_region = 1usize << (rate_bits - 1);

    // Best single cut: cells < t form the low region.
    let mut best = (f64::INFINITY, 1usize);
    let mut low = [0.0f64; 2];
    for t in 1..obs {
        low[0] += priors[0] * pmf[0][t - 1];
        low[1] += priors[1] * pmf[1][t - 1];
        let high = [priors[0] - low[0], priors[1] - low[1]];
        let pe = 1.0 - low[0].max(low[1]) - high[0].max(high[1]);
        if pe < best.0 {
            best = (pe, t);
        }
    }
    let threshold = if obs == 1 { 1 } else { best.1 };

    let mut table = vec![0usize; obs];
    let mut label = 0usize;
    // Low region pads outward (left), high region pads outward (right).
    for (region, pad_left) in [(0..threshold, true), (threshold..obs, false)] {
        let len = region.len();
        let base = len / cells_per_region;
        let rem = len % cells_per_region;
        let mut cell = region.start;
        for k in 0..cells_per_region {
            let extra = if pad_left { k < rem } else { k >= cells_per_region - rem };
            let width = base + usize::from(extra);
            for _ in 0..width {
                table[cell] = label;
                cell += 1;
            }
            label += 1;
        }
        debug_assert_eq!(cell, region.end);
    }
    DecisionFunction::from_table(space, 1usize << rate_bits, table)
}

/// The decision functions of all non-FC nodes of a network.
#[derive(Debug, Clone, Default)]
pub struct Strategies {
    map: BTreeMap<NodeId, DecisionFunction>,
}

impl Strategies {
    pub fn new() -> Self {
        Strategies { map: BTreeMap::new() }
    }

    pub fn get(&self, m: NodeId) -> Result<&DecisionFunction> {
        self.map.get(&m).ok_or(Error::MissingStrategy(m))
    }

    pub fn install(&mut self, m: NodeId, df: DecisionFunction) {
        self.map.insert(m, df);
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &DecisionFunction)> {
        self.map.iter().map(|(&id, df)| (id, df))
    }

    /// Table entries per node, for serialization.
    pub fn tables(&self) -> BTreeMap<String, Vec<usize>> {
        self.map.iter().map(|(id, df)| (id.0.to_string(), df.table().to_vec())).collect()
    }
}
