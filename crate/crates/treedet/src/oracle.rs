//! Brute-force ground truth for small instances: exact error probabilities
//! by full joint enumeration, and globally optimal strategies by exhaustive
//! search over every deterministic table assignment. No shortcuts on
//! purpose; the value of this module is its obviousness.

use crate::error::{Error, Result};
use crate::fusion::map_fusion_table;
use crate::model::HypothesisModel;
use crate::propagation::ConditionalPmf;
use crate::quantizer::{DecisionFunction, InputSpace, Strategies};
use crate::topology::{NodeId, TreeNetwork};

/// Caps on the enumeration sizes the oracle will attempt.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    /// Cap on the product over nodes of `card^(input size)` joint tables.
    pub max_total_tables: u128,
    /// Cap on the joint leaf-observation space.
    pub max_joint_outcomes: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_total_tables: 1 << 24, max_joint_outcomes: 1 << 20 }
    }
}

fn joint_outcomes(net: &TreeNetwork) -> Result<u128> {
    let mut total: u128 = 1;
    for leaf in net.leaves() {
        total = total.saturating_mul(net.leaf_obs_size(leaf)? as u128);
    }
    Ok(total)
}

/// Error probability computed without any factorization: enumerate every
/// joint leaf-observation tuple, push the messages through the tree, and
/// apply the MAP rule to the accumulated joint FC-input distribution.
pub fn joint_bruteforce_pe(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    budget: &OracleBudget,
) -> Result<f64> {
    let outcomes = joint_outcomes(net)?;
    if outcomes > budget.max_joint_outcomes {
        return Err(Error::BudgetExceeded(format!(
            "joint observation space has {outcomes} outcomes, cap is {}",
            budget.max_joint_outcomes
        )));
    }

    let hyp = model.num_hypotheses();
    let leaves = net.leaves();
    let obs_space = InputSpace::new(
        leaves.iter().map(|&l| net.leaf_obs_size(l)).collect::<Result<Vec<_>>>()?,
    );
    let fc = net.fusion_center();
    let fc_preds = net.immediate_predecessors(fc)?.to_vec();
    let fc_space = net.input_space(fc)?;

    // Joint FC-input distribution, accumulated outcome by outcome.
    let mut joint = vec![vec![0.0f64; fc_space.size()]; hyp];
    let mut message = vec![0usize; net.num_nodes()];
    for flat in 0..obs_space.size() {
        let obs = obs_space.unflatten(flat);
        for &m in net.evaluation_order() {
            if m == fc {
                continue;
            }
            let gamma = strategies.get(m)?;
            let input = if net.is_leaf(m) {
                let pos = leaves.iter().position(|&l| l == m).expect("leaf listed");
                obs[pos]
            } else {
                let coords: Vec<usize> = net
                    .immediate_predecessors(m)?
                    .iter()
                    .map(|&p| message[p.0])
                    .collect();
                net.input_space(m)?.flatten(&coords)?
            };
            message[m.0] = gamma.apply(input)?;
        }
        let fc_coords: Vec<usize> = fc_preds.iter().map(|&p| message[p.0]).collect();
        let u_f = fc_space.flatten(&fc_coords)?;
        for j in 0..hyp {
            let mut prob = 1.0;
            for (pos, &leaf) in leaves.iter().enumerate() {
                prob *= model.leaf_pmf(leaf)?[j][obs[pos]];
            }
            joint[j][u_f] += prob;
        }
    }

    let priors = model.priors();
    let mut correct = 0.0;
    for u in 0..fc_space.size() {
        let mut best = f64::NEG_INFINITY;
        for j in 0..hyp {
            best = best.max(priors[j] * joint[j][u]);
        }
        correct += best;
    }
    Ok(1.0 - correct)
}

/// Centralized MAP error on the same discretized observations: the
/// data-processing floor no rate-constrained design can beat.
pub fn centralized_map_pe(
    net: &TreeNetwork,
    model: &HypothesisModel,
    budget: &OracleBudget,
) -> Result<f64> {
    let outcomes = joint_outcomes(net)?;
    if outcomes > budget.max_joint_outcomes {
        return Err(Error::BudgetExceeded(format!(
            "joint observation space has {outcomes} outcomes, cap is {}",
            budget.max_joint_outcomes
        )));
    }
    let hyp = model.num_hypotheses();
    let leaves = net.leaves();
    let obs_space = InputSpace::new(
        leaves.iter().map(|&l| net.leaf_obs_size(l)).collect::<Result<Vec<_>>>()?,
    );
    let priors = model.priors();
    let mut correct = 0.0;
    for flat in 0..obs_space.size() {
        let obs = obs_space.unflatten(flat);
        let mut best = f64::NEG_INFINITY;
        for j in 0..hyp {
            let mut prob = priors[j];
            for (pos, &leaf) in leaves.iter().enumerate() {
                prob *= model.leaf_pmf(leaf)?[j][obs[pos]];
            }
            best = best.max(prob);
        }
        correct += best;
    }
    Ok(1.0 - correct)
}

fn decode_table(mut code: u128, size: usize, card: usize) -> Vec<usize> {
    // Most significant digit first, so ascending codes enumerate tables in
    // lexicographic order.
    let mut table = vec![0usize; size];
    for slot in table.iter_mut().rev() {
        *slot = (code % card as u128) as usize;
        code /= card as u128;
    }
    table
}

/// Global minimum of the network error probability over every joint
/// assignment of deterministic tables, with the lexicographically smallest
/// argmin. Exponential; guarded by the budget.
pub fn exhaustive_optimal(
    net: &TreeNetwork,
    model: &HypothesisModel,
    budget: &OracleBudget,
) -> Result<(f64, Strategies)> {
    let nodes: Vec<NodeId> = net.node_ids().filter(|&m| m != net.fusion_center()).collect();
    let mut table_counts: Vec<u128> = Vec::with_capacity(nodes.len());
    let mut total: u128 = 1;
    for &m in &nodes {
        let card = net.alphabet_size(m)? as u128;
        let size = net.input_space(m)?.size() as u32;
        let count = card
            .checked_pow(size)
            .ok_or_else(|| Error::BudgetExceeded(format!("table space of {m} overflows")))?;
        table_counts.push(count);
        total = total
            .checked_mul(count)
            .ok_or_else(|| Error::BudgetExceeded("joint strategy space overflows".into()))?;
    }
    if total > budget.max_total_tables {
        return Err(Error::BudgetExceeded(format!(
            "{total} joint strategy assignments, cap is {}",
            budget.max_total_tables
        )));
    }
    let outcomes = joint_outcomes(net)?;
    if outcomes > budget.max_joint_outcomes {
        return Err(Error::BudgetExceeded(format!(
            "joint observation space has {outcomes} outcomes, cap is {}",
            budget.max_joint_outcomes
        )));
    }

    let mut best: Option<(f64, Strategies)> = None;
    let mut codes = vec![0u128; nodes.len()];
    loop {
        let mut strategies = Strategies::new();
        for (k, &m) in nodes.iter().enumerate() {
            let space = net.input_space(m)?;
            let card = net.alphabet_size(m)?;
            let table = decode_table(codes[k], space.size(), card);
            strategies.install(m, DecisionFunction::from_table(space, card, table)?);
        }
        let pe = joint_bruteforce_pe(net, model, &strategies, budget)?;
        if best.as_ref().map_or(true, |(b, _)| pe < *b) {
            best = Some((pe, strategies));
        }
        // Odometer: last node's table code moves fastest.
        let mut k = nodes.len();
        loop {
            if k == 0 {
                return Ok(best.expect("at least one assignment"));
            }
            k -= 1;
            codes[k] += 1;
            if codes[k] < table_counts[k] {
                break;
            }
            codes[k] = 0;
        }
    }
}

/// MAP fusion table of the current strategies, for reports.
pub fn fusion_table_of(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
) -> Result<crate::fusion::FusionTable> {
    let fc = net.fusion_center();
    let mut inputs: Vec<ConditionalPmf> = Vec::new();
    for &p in net.immediate_predecessors(fc)? {
        inputs.push(crate::propagation::node_output_pmf(net, model, strategies, p)?);
    }
    map_fusion_table(model.priors(), &inputs)
}
