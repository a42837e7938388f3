//! Hypothesis-conditioned probability propagation through the tree:
//! output PMFs of every node, per-edge relay transition matrices, chain
//! products along the path to the FC, and assembly of the restricted model
//! used to redesign a single node.
//!
//! A relay behaves, conditioned on the hypothesis and one designated input,
//! as a Markov transition from that input to its output: the remaining
//! inputs are marginalized out using their (fixed) output PMFs. Multiplying
//! these per-edge matrices along a node's successor chain collapses
//! everything between the node and the FC into a single hypothesis-dependent
//! channel.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::HypothesisModel;
use crate::quantizer::Strategies;
use crate::topology::{NodeId, TreeNetwork};
use crate::PROB_TOL;

/// Output PMF of a node under every hypothesis: `rows[j][u] = P(u_m = u | H_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPmf {
    pub node: NodeId,
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalPmf {
    pub fn card(&self) -> usize {
        self.rows[0].len()
    }

    fn debug_check(&self) {
        debug_assert!(self.rows.iter().all(|row| {
            let s: f64 = row.iter().sum();
            (s - 1.0).abs() <= PROB_TOL && row.iter().all(|&p| p >= 0.0)
        }), "output PMF of {} is not row-stochastic", self.node);
    }
}

/// Hypothesis-conditioned column-stochastic transition matrices:
/// `get(j, m, n) = P(u_out = m | u_in = n, H_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    from_card: usize,
    to_card: usize,
    /// One row-major `to_card x from_card` matrix per hypothesis.
    mats: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(from_card: usize, to_card: usize, mats: Vec<Vec<f64>>) -> Self {
        let tm = TransitionMatrix { from_card, to_card, mats };
        tm.debug_check();
        tm
    }

    pub fn identity(card: usize, num_hypotheses: usize) -> Self {
        let mut mat = vec![0.0; card * card];
        for i in 0..card {
            mat[i * card + i] = 1.0;
        }
        TransitionMatrix { from_card: card, to_card: card, mats: vec![mat; num_hypotheses] }
    }

    pub fn from_card(&self) -> usize {
        self.from_card
    }

    pub fn to_card(&self) -> usize {
        self.to_card
    }

    pub fn num_hypotheses(&self) -> usize {
        self.mats.len()
    }

    pub fn get(&self, hypothesis: usize, to: usize, from: usize) -> f64 {
        self.mats[hypothesis][to * self.from_card + from]
    }

    /// Matrix product `later x self`, i.e. `self` acts first.
    pub fn then(&self, later: &TransitionMatrix) -> Result<TransitionMatrix> {
        if later.from_card != self.to_card || later.mats.len() != self.mats.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot chain a {}x{} transition after a {}x{} one",
                later.to_card, later.from_card, self.to_card, self.from_card
            )));
        }
        let mut mats = Vec::with_capacity(self.mats.len());
        for j in 0..self.mats.len() {
            let mut out = vec![0.0; later.to_card * self.from_card];
            for m in 0..later.to_card {
                for k in 0..self.to_card {
                    let l = later.get(j, m, k);
                    if l == 0.0 {
                        continue;
                    }
                    for n in 0..self.from_card {
                        out[m * self.from_card + n] += l * self.get(j, k, n);
                    }
                }
            }
            mats.push(out);
        }
        let composed =
            TransitionMatrix { from_card: self.from_card, to_card: later.to_card, mats };
        composed.debug_check();
        Ok(composed)
    }

    fn debug_check(&self) {
        debug_assert!((0..self.mats.len()).all(|j| {
            (0..self.from_card).all(|n| {
                let s: f64 = (0..self.to_card).map(|m| self.get(j, m, n)).sum();
                (s - 1.0).abs() <= PROB_TOL
                    && (0..self.to_card).all(|m| self.get(j, m, n) >= 0.0)
            })
        }), "transition matrix is not column-stochastic");
    }
}

/// The two-node surrogate for redesigning one node `m_0`: a source PMF over
/// the node's complete input `y`, the PMF of the FC side information `v`
/// (everything the FC hears that does not pass through `m_0`), and the
/// hypothesis-dependent channel from the node's output `z` to the FC input
/// `w` formed by the relays in between.
#[derive(Debug, Clone)]
pub struct RestrictedModel {
    pub priors: Vec<f64>,
    /// `M x |M_y|`; mixed-radix over the immediate predecessors if `m_0` is
    /// a relay, the observation axis if it is a leaf.
    pub y_pmf: Vec<Vec<f64>>,
    /// `M x |M_v|`; a single sure cell when the FC hears nothing else.
    pub v_pmf: Vec<Vec<f64>>,
    pub channel: TransitionMatrix,
    /// Output cardinality `|M_z|` the redesigned function must have.
    pub target_output_card: usize,
}

impl RestrictedModel {
    pub fn y_card(&self) -> usize {
        self.y_pmf[0].len()
    }

    pub fn v_card(&self) -> usize {
        self.v_pmf[0].len()
    }

    pub fn w_card(&self) -> usize {
        self.channel.to_card()
    }
}

/// Memoized per-session store of node output PMFs. Redesigning a node
/// invalidates exactly the PMFs along its successor chain.
#[derive(Debug, Default)]
pub struct PmfCache {
    map: HashMap<usize, ConditionalPmf>,
}

impl PmfCache {
    pub fn new() -> Self {
        PmfCache::default()
    }

    /// Drop the cached PMFs that depend on `m0`'s decision function: `m0`
    /// itself and every node on its successor chain.
    pub fn invalidate_chain(&mut self, net: &TreeNetwork, m0: NodeId) -> Result<()> {
        for m in net.successor_chain(m0)? {
            self.map.remove(&m.0);
        }
        Ok(())
    }
}

/// `P(u_m | H_j)` for every hypothesis, computed by the forward recursion
/// from the leaves of `m`'s sub-tree.
pub fn node_output_pmf(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m: NodeId,
) -> Result<ConditionalPmf> {
    let mut cache = PmfCache::new();
    node_output_pmf_cached(net, model, strategies, m, &mut cache).cloned()
}

pub fn node_output_pmf_cached<'a>(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m: NodeId,
    cache: &'a mut PmfCache,
) -> Result<&'a ConditionalPmf> {
    ensure_pmf(net, model, strategies, m, cache)?;
    Ok(cache.map.get(&m.0).expect("just ensured"))
}

fn ensure_pmf(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m: NodeId,
    cache: &mut PmfCache,
) -> Result<()> {
    if m == net.fusion_center() {
        return Err(Error::IsFusionCenter(m));
    }
    if cache.map.contains_key(&m.0) {
        return Ok(());
    }
    let hyp = model.num_hypotheses();
    let gamma = strategies.get(m)?;
    let card = net.alphabet_size(m)?;
    if gamma.output_card() != card || gamma.input_space() != &net.input_space(m)? {
        return Err(Error::DimensionMismatch(format!(
            "decision function of {m} does not match its input space or rate"
        )));
    }

    let rows = if net.is_leaf(m) {
        let pmf = model.leaf_pmf(m)?;
        let mut rows = vec![vec![0.0; card]; hyp];
        for (x, &z) in gamma.table().iter().enumerate() {
            for j in 0..hyp {
                rows[j][z] += pmf[j][x];
            }
        }
        rows
    } else {
        let preds = net.immediate_predecessors(m)?.to_vec();
        for &p in &preds {
            ensure_pmf(net, model, strategies, p, cache)?;
        }
        let pred_pmfs: Vec<&ConditionalPmf> =
            preds.iter().map(|p| cache.map.get(&p.0).expect("ensured")).collect();
        let joint = product_rows(&pred_pmfs, hyp);
        let mut rows = vec![vec![0.0; card]; hyp];
        for (idx, &z) in gamma.table().iter().enumerate() {
            for j in 0..hyp {
                rows[j][z] += joint[j][idx];
            }
        }
        rows
    };

    let pmf = ConditionalPmf { node: m, rows };
    pmf.debug_check();
    cache.map.insert(m.0, pmf);
    Ok(())
}

/// Joint PMF of independent inputs over their mixed-radix product space,
/// first input most significant.
fn product_rows(pmfs: &[&ConditionalPmf], hyp: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]; hyp];
    for pmf in pmfs {
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

/// The per-edge Markov transition of `relay` from the input sent by
/// `in_edge_from` to the relay's output, with all other inputs marginalized
/// out: `get(j, m, n) = P(u_relay = m | u_in = n, H_j)`.
pub fn relay_transition_matrix(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    relay: NodeId,
    in_edge_from: NodeId,
) -> Result<TransitionMatrix> {
    let mut cache = PmfCache::new();
    relay_transition_matrix_cached(net, model, strategies, relay, in_edge_from, &mut cache)
}

fn relay_transition_matrix_cached(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    relay: NodeId,
    in_edge_from: NodeId,
    cache: &mut PmfCache,
) -> Result<TransitionMatrix> {
    let preds = net.immediate_predecessors(relay)?.to_vec();
    let fixed_pos = preds
        .iter()
        .position(|&p| p == in_edge_from)
        .ok_or(Error::NotAPredecessor { claimed: in_edge_from, of: relay })?;
    let hyp = model.num_hypotheses();
    let gamma = strategies.get(relay)?;
    let space = net.input_space(relay)?;
    let from_card = net.alphabet_size(in_edge_from)?;
    let to_card = net.alphabet_size(relay)?;

    for (l, &p) in preds.iter().enumerate() {
        if l != fixed_pos {
            ensure_pmf(net, model, strategies, p, cache)?;
        }
    }

    let mut mats = vec![vec![0.0; to_card * from_card]; hyp];
    for idx in 0..space.size() {
        let coords = space.unflatten(idx);
        let n = coords[fixed_pos];
        let m = gamma.apply(idx)?;
        for j in 0..hyp {
            let mut weight = 1.0;
            for (l, &p) in preds.iter().enumerate() {
                if l != fixed_pos {
                    weight *= cache.map[&p.0].rows[j][coords[l]];
                }
            }
            mats[j][m * from_card + n] += weight;
        }
    }
    Ok(TransitionMatrix::new(from_card, to_card, mats))
}

/// Product of the per-edge transition matrices along `m0`'s successor chain:
/// the effective channel from `m0`'s output to the FC input it ultimately
/// produces. The identity when `m0` feeds the FC directly.
pub fn chain_matrix(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m0: NodeId,
) -> Result<TransitionMatrix> {
    let mut cache = PmfCache::new();
    chain_matrix_cached(net, model, strategies, m0, &mut cache)
}

fn chain_matrix_cached(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m0: NodeId,
    cache: &mut PmfCache,
) -> Result<TransitionMatrix> {
    let chain = net.successor_chain(m0)?;
    let mut matrix =
        TransitionMatrix::identity(net.alphabet_size(m0)?, model.num_hypotheses());
    for window in chain.windows(2) {
        let step =
            relay_transition_matrix_cached(net, model, strategies, window[1], window[0], cache)?;
        matrix = matrix.then(&step)?;
    }
    Ok(matrix)
}

/// Assemble the restricted model for redesigning `m0`. A decision function
/// for `m0` itself is not required.
pub fn build_restricted_model(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m0: NodeId,
) -> Result<RestrictedModel> {
    let mut cache = PmfCache::new();
    build_restricted_model_cached(net, model, strategies, m0, &mut cache)
}

pub fn build_restricted_model_cached(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    m0: NodeId,
    cache: &mut PmfCache,
) -> Result<RestrictedModel> {
    let hyp = model.num_hypotheses();
    if m0 == net.fusion_center() {
        return Err(Error::IsFusionCenter(m0));
    }

    let y_pmf = if net.is_leaf(m0) {
        model.leaf_pmf(m0)?.clone()
    } else {
        let preds = net.immediate_predecessors(m0)?.to_vec();
        for &p in &preds {
            ensure_pmf(net, model, strategies, p, cache)?;
        }
        let pred_pmfs: Vec<&ConditionalPmf> =
            preds.iter().map(|p| cache.map.get(&p.0).expect("ensured")).collect();
        product_rows(&pred_pmfs, hyp)
    };

    let channel = chain_matrix_cached(net, model, strategies, m0, cache)?;

    let last = net.last_successor(m0)?;
    let others: Vec<NodeId> = net
        .immediate_predecessors(net.fusion_center())?
        .iter()
        .copied()
        .filter(|&p| p != last)
        .collect();
    let v_pmf = if others.is_empty() {
        vec![vec![1.0]; hyp]
    } else {
        for &p in &others {
            ensure_pmf(net, model, strategies, p, cache)?;
        }
        let pmfs: Vec<&ConditionalPmf> =
            others.iter().map(|p| cache.map.get(&p.0).expect("ensured")).collect();
        product_rows(&pmfs, hyp)
    };

    Ok(RestrictedModel {
        priors: model.priors().to_vec(),
        y_pmf,
        v_pmf,
        channel,
        target_output_card: net.alphabet_size(m0)?,
    })
}

/// Shared fixtures for this module's and the fusion module's tests.
#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use crate::quantizer::{DecisionFunction, InputSpace};
    use crate::topology::NodeSpec;
    use std::collections::BTreeMap;

    /// Two binary leaves feeding an AND relay that feeds the FC together
    /// with a third, direct leaf.
    pub(crate) fn and_net() -> (TreeNetwork, HypothesisModel, Strategies) {
        let net = TreeNetwork::build(&[
            NodeSpec::leaf(2, 1, 2),
            NodeSpec::leaf(2, 1, 2),
            NodeSpec::relay(4, 1),
            NodeSpec::leaf(4, 1, 2),
            NodeSpec::fusion_center(),
        ])
        .unwrap();
        let mut pmfs = BTreeMap::new();
        // P_j(x = 1): 0.2 under H_0, 0.7 under H_1.
        pmfs.insert(NodeId(0), vec![vec![0.8, 0.2], vec![0.3, 0.7]]);
        pmfs.insert(NodeId(1), vec![vec![0.8, 0.2], vec![0.3, 0.7]]);
        pmfs.insert(NodeId(3), vec![vec![0.6, 0.4], vec![0.1, 0.9]]);
        let model = HypothesisModel::new(&net, vec![0.5, 0.5], pmfs).unwrap();
        let mut strategies = Strategies::new();
        for leaf in [NodeId(0), NodeId(1), NodeId(3)] {
            strategies.install(leaf, DecisionFunction::identity(2));
        }
        strategies.install(
            NodeId(2),
            DecisionFunction::from_table(InputSpace::new(vec![2, 2]), 2, vec![0, 0, 0, 1]).unwrap(),
        );
        (net, model, strategies)
    }

    /// A 3-deep tandem: leaf 0 -> relay 2 -> relay 4 -> FC, with side leaves.
    pub(crate) fn tandem_net() -> (TreeNetwork, HypothesisModel, Strategies) {
        let net = TreeNetwork::build(&[
            NodeSpec::leaf(2, 1, 2),
            NodeSpec::leaf(2, 2, 3),
            NodeSpec::relay(4, 2),
            NodeSpec::leaf(4, 1, 2),
            NodeSpec::relay(5, 1),
            NodeSpec::fusion_center(),
        ])
        .unwrap();
        let mut pmfs = BTreeMap::new();
        pmfs.insert(NodeId(0), vec![vec![0.8, 0.2], vec![0.3, 0.7]]);
        pmfs.insert(NodeId(1), vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.3, 0.6]]);
        pmfs.insert(NodeId(3), vec![vec![0.6, 0.4], vec![0.2, 0.8]]);
        let model = HypothesisModel::new(&net, vec![0.4, 0.6], pmfs).unwrap();
        let mut strategies = Strategies::new();
        strategies.install(NodeId(0), DecisionFunction::identity(2));
        strategies.install(
            NodeId(1),
            DecisionFunction::from_table(InputSpace::new(vec![3]), 4, vec![0, 2, 3]).unwrap(),
        );
        strategies.install(NodeId(3), DecisionFunction::identity(2));
        strategies.install(
            NodeId(2),
            DecisionFunction::from_table(
                InputSpace::new(vec![2, 4]),
                4,
                vec![0, 1, 1, 3, 2, 3, 0, 2],
            )
            .unwrap(),
        );
        strategies.install(
            NodeId(4),
            DecisionFunction::from_table(
                InputSpace::new(vec![4, 2]),
                2,
                vec![0, 1, 1, 0, 0, 1, 1, 1],
            )
            .unwrap(),
        );
        (net, model, strategies)
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::{and_net, tandem_net};
    use super::*;
    use crate::model::{discretize_gaussian_antipodal, HypothesisModel};
    use crate::quantizer::{DecisionFunction, InputSpace};
    use crate::topology::{NodeSpec, TreeNetwork};
    use std::collections::BTreeMap;

    const PHI_1: f64 = 0.841_344_746_068_542_9;
    const Q_1: f64 = 0.158_655_253_931_457_07;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identity_leaf_reproduces_observation_pmf() {
        let (net, model, strategies) = and_net();
        let pmf = node_output_pmf(&net, &model, &strategies, NodeId(0)).unwrap();
        assert_eq!(&pmf.rows, model.leaf_pmf(NodeId(0)).unwrap());
    }

    #[test]
    fn sign_quantized_gaussian_leaf_at_0db() {
        let net =
            TreeNetwork::build(&[NodeSpec::leaf(1, 1, 2), NodeSpec::fusion_center()]).unwrap();
        let mut pmfs = BTreeMap::new();
        pmfs.insert(NodeId(0), discretize_gaussian_antipodal(0.0, 2, 10.0).unwrap());
        let model = HypothesisModel::new(&net, vec![0.5, 0.5], pmfs).unwrap();
        let mut strategies = Strategies::new();
        strategies.install(NodeId(0), DecisionFunction::identity(2));
        let pmf = node_output_pmf(&net, &model, &strategies, NodeId(0)).unwrap();
        assert!(approx(pmf.rows[1][1], PHI_1));
        assert!(approx(pmf.rows[0][1], Q_1));
    }

    #[test]
    fn and_relay_squares_iid_input_probability() {
        let (net, model, strategies) = and_net();
        let pmf = node_output_pmf(&net, &model, &strategies, NodeId(2)).unwrap();
        assert!(approx(pmf.rows[0][1], 0.2 * 0.2));
        assert!(approx(pmf.rows[1][1], 0.7 * 0.7));
    }

    #[test]
    fn missing_strategy_is_reported() {
        let (net, model, mut strategies) = and_net();
        strategies = {
            let mut s = Strategies::new();
            for (id, df) in strategies.iter() {
                if id != NodeId(1) {
                    s.install(id, df.clone());
                }
            }
            s
        };
        let err = node_output_pmf(&net, &model, &strategies, NodeId(2)).unwrap_err();
        assert!(matches!(err, Error::MissingStrategy(NodeId(1))));
    }

    #[test]
    fn pass_through_relay_has_identity_transition() {
        let (net, model, mut strategies) = and_net();
        // Relay forwards its second input (node 1) regardless of the first.
        strategies.install(
            NodeId(2),
            DecisionFunction::from_table(InputSpace::new(vec![2, 2]), 2, vec![0, 1, 0, 1]).unwrap(),
        );
        let tm = relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(1)).unwrap();
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    assert!(approx(tm.get(j, m, n), if m == n { 1.0 } else { 0.0 }));
                }
            }
        }
    }

    #[test]
    fn and_relay_transition_columns() {
        let (net, model, strategies) = and_net();
        // Edge from node 1; the other input (node 0) has P_j(1) = 0.2 / 0.7.
        let tm = relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(1)).unwrap();
        for (j, p) in [(0usize, 0.2f64), (1, 0.7)] {
            // Input 0 can never produce output 1.
            assert!(approx(tm.get(j, 0, 0), 1.0));
            assert!(approx(tm.get(j, 1, 0), 0.0));
            // Input 1 produces output 1 exactly when the other input is 1.
            assert!(approx(tm.get(j, 0, 1), 1.0 - p));
            assert!(approx(tm.get(j, 1, 1), p));
        }
    }

    #[test]
    fn relay_ignoring_fixed_input_gives_equal_columns() {
        let (net, model, mut strategies) = and_net();
        // Output = first input only.
        strategies.install(
            NodeId(2),
            DecisionFunction::from_table(InputSpace::new(vec![2, 2]), 2, vec![0, 0, 1, 1]).unwrap(),
        );
        let tm = relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(1)).unwrap();
        for j in 0..2 {
            for m in 0..2 {
                assert!(approx(tm.get(j, m, 0), tm.get(j, m, 1)));
            }
        }
    }

    #[test]
    fn transition_requires_a_predecessor_edge() {
        let (net, model, strategies) = and_net();
        let err =
            relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(3)).unwrap_err();
        assert!(matches!(err, Error::NotAPredecessor { .. }));
    }

    #[test]
    fn chain_of_fc_adjacent_node_is_identity() {
        let (net, model, strategies) = and_net();
        let tm = chain_matrix(&net, &model, &strategies, NodeId(3)).unwrap();
        assert_eq!(tm, TransitionMatrix::identity(2, 2));
    }

    #[test]
    fn chain_through_and_relay_is_the_relay_matrix() {
        let (net, model, strategies) = and_net();
        let chain = chain_matrix(&net, &model, &strategies, NodeId(0)).unwrap();
        let step = relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(0)).unwrap();
        assert_eq!(chain, step);
    }

    /// Enumerating every intermediate message reproduces the chain product.
    #[test]
    fn chain_matrix_matches_exhaustive_marginalization() {
        let (net, model, strategies) = tandem_net();
        let chain = chain_matrix(&net, &model, &strategies, NodeId(0)).unwrap();
        let first =
            relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(0)).unwrap();
        let second =
            relay_transition_matrix(&net, &model, &strategies, NodeId(4), NodeId(2)).unwrap();
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let mut sum = 0.0;
                    for mid in 0..4 {
                        sum += second.get(j, m, mid) * first.get(j, mid, n);
                    }
                    assert!(approx(chain.get(j, m, n), sum));
                }
            }
        }
    }

    #[test]
    fn restricted_model_of_fc_adjacent_leaf() {
        let (net, model, strategies) = and_net();
        let rm = build_restricted_model(&net, &model, &strategies, NodeId(3)).unwrap();
        assert_eq!(&rm.y_pmf, model.leaf_pmf(NodeId(3)).unwrap());
        assert_eq!(rm.channel, TransitionMatrix::identity(2, 2));
        // v is the AND relay's output PMF.
        let relay_pmf = node_output_pmf(&net, &model, &strategies, NodeId(2)).unwrap();
        assert_eq!(rm.v_pmf, relay_pmf.rows);
    }

    #[test]
    fn restricted_model_of_relay_takes_product_inputs() {
        let (net, model, strategies) = and_net();
        let rm = build_restricted_model(&net, &model, &strategies, NodeId(2)).unwrap();
        assert_eq!(rm.y_card(), 4);
        // Product of the two identity-mapped leaves, first most significant.
        for j in 0..2 {
            let a = &model.leaf_pmf(NodeId(0)).unwrap()[j];
            let b = &model.leaf_pmf(NodeId(1)).unwrap()[j];
            for (u0, u1) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                assert!(approx(rm.y_pmf[j][2 * u0 + u1], a[u0] * b[u1]));
            }
        }
        let leaf_pmf = node_output_pmf(&net, &model, &strategies, NodeId(3)).unwrap();
        assert_eq!(rm.v_pmf, leaf_pmf.rows);
        assert_eq!(rm.channel, TransitionMatrix::identity(2, 2));
    }

    #[test]
    fn restricted_model_of_deep_leaf_uses_chain_channel() {
        let (net, model, strategies) = and_net();
        let rm = build_restricted_model(&net, &model, &strategies, NodeId(0)).unwrap();
        let step = relay_transition_matrix(&net, &model, &strategies, NodeId(2), NodeId(0)).unwrap();
        assert_eq!(rm.channel, step);
        let leaf_pmf = node_output_pmf(&net, &model, &strategies, NodeId(3)).unwrap();
        assert_eq!(rm.v_pmf, leaf_pmf.rows);
    }

    #[test]
    fn lone_fc_input_gets_sure_side_information() {
        let net = TreeNetwork::build(&[
            NodeSpec::leaf(1, 1, 2),
            NodeSpec::fusion_center(),
        ])
        .unwrap();
        let mut pmfs = BTreeMap::new();
        pmfs.insert(NodeId(0), vec![vec![0.8, 0.2], vec![0.3, 0.7]]);
        let model = HypothesisModel::new(&net, vec![0.5, 0.5], pmfs).unwrap();
        let strategies = Strategies::new();
        let rm = build_restricted_model(&net, &model, &strategies, NodeId(0)).unwrap();
        assert_eq!(rm.v_pmf, vec![vec![1.0], vec![1.0]]);
        assert_eq!(rm.target_output_card, 2);
    }

    #[test]
    fn cache_invalidation_tracks_successor_chain() {
        let (net, model, strategies) = tandem_net();
        let mut cache = PmfCache::new();
        for m in [NodeId(0), NodeId(1), NodeId(2), NodeId(3), NodeId(4)] {
            node_output_pmf_cached(&net, &model, &strategies, m, &mut cache).unwrap();
        }
        assert_eq!(cache.map.len(), 5);
        cache.invalidate_chain(&net, NodeId(0)).unwrap();
        // 0, 2 and 4 are on the chain; 1 and 3 stay cached.
        assert_eq!(cache.map.len(), 2);
        assert!(cache.map.contains_key(&1) && cache.map.contains_key(&3));
    }
}
