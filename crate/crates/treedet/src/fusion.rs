//! MAP fusion and exact error-probability evaluation, on the full network
//! and inside the restricted model.
//!
//! The FC is never stored as a strategy: it is the MAP rule over its joint
//! input distribution, recomputed on demand, so it is implicitly redesigned
//! together with whichever node is being optimized.

use crate::error::{Error, Result};
use crate::model::HypothesisModel;
use crate::propagation::{
    node_output_pmf_cached, ConditionalPmf, PmfCache, RestrictedModel,
};
use crate::quantizer::{DecisionFunction, InputSpace, Strategies};
use crate::topology::TreeNetwork;

/// The MAP decision of the FC for every joint input index.
#[derive(Debug, Clone)]
pub struct FusionTable {
    input_space: InputSpace,
    decision: Vec<usize>,
}

impl FusionTable {
    pub fn input_space(&self) -> &InputSpace {
        &self.input_space
    }

    pub fn decision(&self) -> &[usize] {
        &self.decision
    }
}

/// Joint PMF of conditionally independent FC inputs, mixed-radix with the
/// first input most significant: `rows[j][u_f]`.
fn joint_input_rows(priors_len: usize, inputs: &[ConditionalPmf]) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]; priors_len];
    for pmf in inputs {
        for (j, row) in rows.iter_mut().enumerate() {
            let mut next = Vec::with_capacity(row.len() * pmf.card());
            for &acc in row.iter() {
                for &p in &pmf.rows[j] {
                    next.push(acc * p);
                }
            }
            *row = next;
        }
    }
    rows
}

/// The MAP rule over the product of the FC's input PMFs; ties break toward
/// the smallest hypothesis index.
pub fn map_fusion_table(priors: &[f64], fc_input_pmfs: &[ConditionalPmf]) -> Result<FusionTable> {
    for pmf in fc_input_pmfs {
        if pmf.rows.len() != priors.len() {
            return Err(Error::DimensionMismatch(format!(
                "input PMF of {} has {} hypothesis rows, priors have {}",
                pmf.node,
                pmf.rows.len(),
                priors.len()
            )));
        }
    }
    let rows = joint_input_rows(priors.len(), fc_input_pmfs);
    let size = rows[0].len();
    let mut decision = Vec::with_capacity(size);
    for u in 0..size {
        let mut best = (0usize, priors[0] * rows[0][u]);
        for (j, prior) in priors.iter().enumerate().skip(1) {
            let score = prior * rows[j][u];
            if score > best.1 {
                best = (j, score);
            }
        }
        decision.push(best.0);
    }
    let dims = fc_input_pmfs.iter().map(|p| p.card()).collect();
    Ok(FusionTable { input_space: InputSpace::new(dims), decision })
}

/// Exact Bayes error of the MAP fusion center over the joint distribution of
/// its inputs.
pub fn network_error_probability(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
) -> Result<f64> {
    let mut cache = PmfCache::new();
    network_error_probability_cached(net, model, strategies, &mut cache)
}

pub fn network_error_probability_cached(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    cache: &mut PmfCache,
) -> Result<f64> {
    let fc = net.fusion_center();
    let preds = net.immediate_predecessors(fc)?.to_vec();
    let mut inputs = Vec::with_capacity(preds.len());
    for &p in &preds {
        inputs.push(node_output_pmf_cached(net, model, strategies, p, cache)?.clone());
    }
    let rows = joint_input_rows(model.num_hypotheses(), &inputs);
    let priors = model.priors();
    let mut correct = 0.0;
    for u in 0..rows[0].len() {
        let mut best = f64::NEG_INFINITY;
        for (j, prior) in priors.iter().enumerate() {
            best = best.max(prior * rows[j][u]);
        }
        correct += best;
    }
    Ok(1.0 - correct)
}

/// `P(w | H_j)` of the restricted model under a candidate decision function:
/// the source PMF pushed through the function and then the chain channel.
pub fn restricted_w_pmf(rm: &RestrictedModel, gamma_k: &DecisionFunction) -> Result<Vec<Vec<f64>>> {
    if gamma_k.input_space().size() != rm.y_card()
        || gamma_k.output_card() != rm.target_output_card
    {
        return Err(Error::DimensionMismatch(format!(
            "decision function maps {} -> {}, restricted model needs {} -> {}",
            gamma_k.input_space().size(),
            gamma_k.output_card(),
            rm.y_card(),
            rm.target_output_card,
        )));
    }
    let hyp = rm.priors.len();
    let w_card = rm.w_card();
    // First collapse y into z classes, then apply the channel once per class.
    let mut z_mass = vec![vec![0.0; rm.target_output_card]; hyp];
    for (y, &z) in gamma_k.table().iter().enumerate() {
        for j in 0..hyp {
            z_mass[j][z] += rm.y_pmf[j][y];
        }
    }
    let mut w = vec![vec![0.0; w_card]; hyp];
    for j in 0..hyp {
        for z in 0..rm.target_output_card {
            let mass = z_mass[j][z];
            if mass == 0.0 {
                continue;
            }
            for (out, w_j) in w[j].iter_mut().enumerate() {
                *w_j += mass * rm.channel.get(j, out, z);
            }
        }
    }
    Ok(w)
}

/// Exact Bayes error of the two-node restricted network under MAP fusion of
/// `(v, w)`.
pub fn restricted_error_probability(
    rm: &RestrictedModel,
    gamma_k: &DecisionFunction,
) -> Result<f64> {
    let w = restricted_w_pmf(rm, gamma_k)?;
    let hyp = rm.priors.len();
    let mut correct = 0.0;
    for v in 0..rm.v_card() {
        for u in 0..rm.w_card() {
            let mut best = f64::NEG_INFINITY;
            for j in 0..hyp {
                best = best.max(rm.priors[j] * rm.v_pmf[j][v] * w[j][u]);
            }
            correct += best;
        }
    }
    Ok(1.0 - correct)
}
