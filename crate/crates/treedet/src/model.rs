//! M-ary hypothesis structure: priors and per-leaf conditional observation
//! PMFs, plus the antipodal-Gaussian generator and centralized baselines used
//! by the experiments.
//!
//! Observations at the leaves are conditionally independent given the
//! hypothesis, so only per-leaf marginal tables are ever stored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};
use crate::PROB_TOL;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Gaussian tail function `Q(x) = 1 - Phi(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Priors and conditional observation PMFs for an M-ary testing problem.
#[derive(Debug, Clone)]
pub struct HypothesisModel {
    priors: Vec<f64>,
    /// Per leaf, an `M x obs_size` table; row `j` is `P(x | H_j)`.
    leaf_pmfs: BTreeMap<NodeId, Vec<Vec<f64>>>,
}

impl HypothesisModel {
    /// Validate and build a model whose leaf tables match `net`'s leaves and
    /// observation cardinalities.
    pub fn new(
        net: &TreeNetwork,
        priors: Vec<f64>,
        leaf_pmfs: BTreeMap<NodeId, Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if priors.len() < 2 {
            return Err(Error::BadProbabilityVector(format!(
                "need at least 2 hypotheses, got {}",
                priors.len()
            )));
        }
        check_probability_vector(&priors, "priors")?;

        let leaves = net.leaves();
        if leaf_pmfs.len() != leaves.len() || !leaves.iter().all(|l| leaf_pmfs.contains_key(l)) {
            return Err(Error::DimensionMismatch(format!(
                "model defines PMFs for {:?}, network leaves are {:?}",
                leaf_pmfs.keys().collect::<Vec<_>>(),
                leaves
            )));
        }
        for (&leaf, table) in &leaf_pmfs {
            let obs = net.leaf_obs_size(leaf)?;
            if table.len() != priors.len() {
                return Err(Error::DimensionMismatch(format!(
                    "leaf {leaf}: {} PMF rows for {} hypotheses",
                    table.len(),
                    priors.len()
                )));
            }
            for (j, row) in table.iter().enumerate() {
                if row.len() != obs {
                    return Err(Error::DimensionMismatch(format!(
                        "leaf {leaf}, hypothesis {j}: {} cells, observation space has {obs}",
                        row.len()
                    )));
                }
                check_probability_vector(row, &format!("P(x_{leaf} | H_{j})"))?;
            }
        }
        Ok(HypothesisModel { priors, leaf_pmfs })
    }

    pub fn num_hypotheses(&self) -> usize {
        self.priors.len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn leaf_pmf(&self, leaf: NodeId) -> Result<&Vec<Vec<f64>>> {
        self.leaf_pmfs.get(&leaf).ok_or(Error::UnknownNode(leaf))
    }

    /// Parse from the JSON document form
    /// `{"priors": [...], "leaves": {"<leaf id>": [[row H_0], [row H_1], ...]}}`.
    pub fn from_json(net: &TreeNetwork, text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let mut leaf_pmfs = BTreeMap::new();
        for (key, table) in file.leaves {
            let id = key.parse::<usize>().map_err(|_| {
                Error::InvalidConfig(format!("leaf id {key:?} is not an integer"))
            })?;
            leaf_pmfs.insert(NodeId(id), table);
        }
        HypothesisModel::new(net, file.priors, leaf_pmfs)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            priors: self.priors.clone(),
            leaves: self
                .leaf_pmfs
                .iter()
                .map(|(id, t)| (id.0.to_string(), t.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    priors: Vec<f64>,
    leaves: BTreeMap<String, Vec<Vec<f64>>>,
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::BadProbabilityVector(format!("{what} has a negative or NaN entry")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::BadProbabilityVector(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Discretize the binary antipodal-Gaussian observation model `x = ±a + n`,
/// `n ~ N(0,1)`, `a = 10^(snr_db/20)`, into `bins` cells: two unbounded tails
/// beyond `±half_range` and `bins - 2` equal-width interior cells. Returns
/// the 2-row table `[P(cell | H_0), P(cell | H_1)]`; row `H_0` has mean `-a`.
///
/// `bins == 2` degenerates to sign quantization (single cut at 0). Each row's
/// floating-point remainder is absorbed into its largest cell so the row sums
/// to 1 up to machine precision.
pub fn discretize_gaussian_antipodal(snr_db: f64, bins: usize, half_range: f64) -> Result<Vec<Vec<f64>>> {
    if bins < 2 {
        return Err(Error::BadBinCount(bins));
    }
    if !(half_range > 0.0) {
        return Err(Error::BadHalfRange(half_range));
    }
    let a = 10f64.powf(snr_db / 20.0);
    let edges: Vec<f64> = if bins == 2 {
        vec![0.0]
    } else {
        let width = 2.0 * half_range / (bins - 2) as f64;
        (0..bins - 1).map(|k| -half_range + k as f64 * width).collect()
    };

    let mut table = Vec::with_capacity(2);
    for mean in [-a, a] {
        let mut row = Vec::with_capacity(bins);
        row.push(normal_cdf(edges[0] - mean));
        for k in 1..bins - 1 {
            row.push((normal_cdf(edges[k] - mean) - normal_cdf(edges[k - 1] - mean)).max(0.0));
        }
        row.push(q_function(edges[bins - 2] - mean));
        let sum: f64 = row.iter().sum();
        let largest = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .expect("nonempty row");
        row[largest] += 1.0 - sum;
        table.push(row);
    }
    Ok(table)
}

/// Convenience constructor for the experiments: antipodal Gaussian
/// observations at every leaf (each discretized to the leaf's observation
/// cardinality) with equally likely hypotheses.
pub fn gaussian_model(net: &TreeNetwork, snr_db: f64, half_range: f64) -> Result<HypothesisModel> {
    gaussian_model_with_priors(net, snr_db, half_range, vec![0.5, 0.5])
}

pub fn gaussian_model_with_priors(
    net: &TreeNetwork,
    snr_db: f64,
    half_range: f64,
    priors: Vec<f64>,
) -> Result<HypothesisModel> {
    let mut leaf_pmfs = BTreeMap::new();
    for leaf in net.leaves() {
        let bins = net.leaf_obs_size(leaf)?;
        leaf_pmfs.insert(leaf, discretize_gaussian_antipodal(snr_db, bins, half_range)?);
    }
    HypothesisModel::new(net, priors, leaf_pmfs)
}

/// Error probability of the optimum unconstrained linear detector for
/// `n_leaves` antipodal-Gaussian observations with equal priors: the sum
/// statistic is `N(±n a, n)`, thresholded at zero, giving `Q(sqrt(n E))`
/// with per-channel SNR `E = 10^(snr_db/10)`.
pub fn centralized_linear_pe(snr_db: f64, n_leaves: usize) -> f64 {
    let energy = 10f64.powf(snr_db / 10.0);
    q_function((n_leaves as f64 * energy).sqrt())
}
