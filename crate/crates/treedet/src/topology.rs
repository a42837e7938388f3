//! Directed in-tree network structure and the structural queries used by the
//! design procedure.
//!
//! Edges point from a node to its immediate successor, so information flows
//! from the leaves toward the fusion center at the root. Every non-FC node
//! has exactly one outgoing edge and sends messages over an error-free link
//! of `rate_bits` bits, which fixes its output alphabet to `2^rate_bits`
//! symbols.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::InputSpace;

/// Dense node index, unique within a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Role of a node in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    Relay,
    #[serde(rename = "fc")]
    FusionCenter,
}

/// One node of a network under construction. `parent` is the immediate
/// successor; exactly one spec (the fusion center) has none.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub parent: Option<usize>,
    /// Link rate in bits; required for every non-FC node.
    pub rate_bits: Option<u32>,
    /// Cardinality of the observation space; required for leaves.
    pub obs_size: Option<usize>,
}

impl NodeSpec {
    pub fn leaf(parent: usize, rate_bits: u32, obs_size: usize) -> Self {
        NodeSpec { kind: NodeKind::Leaf, parent: Some(parent), rate_bits: Some(rate_bits), obs_size: Some(obs_size) }
    }

    pub fn relay(parent: usize, rate_bits: u32) -> Self {
        NodeSpec { kind: NodeKind::Relay, parent: Some(parent), rate_bits: Some(rate_bits), obs_size: None }
    }

    pub fn fusion_center() -> Self {
        NodeSpec { kind: NodeKind::FusionCenter, parent: None, rate_bits: None, obs_size: None }
    }
}

/// A validated tree network. Immutable after construction; safe to share
/// read-only across threads.
#[derive(Debug, Clone)]
pub struct TreeNetwork {
    kinds: Vec<NodeKind>,
    parents: Vec<Option<NodeId>>,
    /// Immediate predecessors, ascending by id. This order defines the
    /// input-vector coordinate order everywhere else.
    preds: Vec<Vec<NodeId>>,
    rate_bits: Vec<Option<u32>>,
    alphabet: Vec<usize>,
    obs_size: Vec<Option<usize>>,
    fc: NodeId,
    eval_order: Vec<NodeId>,
}

const MAX_RATE_BITS: u32 = 16;

impl TreeNetwork {
    /// Build and validate a network from per-node specs; the spec at list
    /// position `i` becomes node `i`.
    pub fn build(specs: &[NodeSpec]) -> Result<Self> {
        let n = specs.len();
        if n == 0 {
            return Err(Error::InvalidTopology("empty node list".into()));
        }

        let mut fc = None;
        for (i, spec) in specs.iter().enumerate() {
            let id = NodeId(i);
            match spec.parent {
                None => match fc {
                    None => fc = Some(id),
                    Some(first) => return Err(Error::MultipleRoots(first, id)),
                },
                Some(p) if p >= n => return Err(Error::DanglingParent { child: id, parent: p }),
                Some(_) => {}
            }
        }
        let fc = fc.ok_or(Error::CycleDetected(NodeId(0)))?;
        if specs[fc.0].kind != NodeKind::FusionCenter {
            return Err(Error::InvalidTopology(format!(
                "root node {} must have kind \"fc\"",
                fc
            )));
        }

        let mut kinds = Vec::with_capacity(n);
        let mut parents = Vec::with_capacity(n);
        let mut rate_bits = Vec::with_capacity(n);
        let mut alphabet = Vec::with_capacity(n);
        let mut obs_size = Vec::with_capacity(n);
        let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];

        for (i, spec) in specs.iter().enumerate() {
            let id = NodeId(i);
            match spec.kind {
                NodeKind::FusionCenter => {
                    if id != fc {
                        return Err(Error::InvalidTopology(format!(
                            "node {} has kind \"fc\" but is not the root",
                            id
                        )));
                    }
                    if spec.rate_bits.is_some() {
                        return Err(Error::InvalidTopology(format!("fc node {} must not carry a rate", id)));
                    }
                }
                NodeKind::Leaf | NodeKind::Relay => {
                    let rate = spec.rate_bits.ok_or_else(|| {
                        Error::InvalidTopology(format!("node {} is missing rate_bits", id))
                    })?;
                    if rate == 0 {
                        return Err(Error::ZeroRate(id));
                    }
                    if rate > MAX_RATE_BITS {
                        return Err(Error::RateTooLarge { node: id, rate });
                    }
                }
            }
            match spec.kind {
                NodeKind::Leaf => {
                    let obs = spec.obs_size.ok_or_else(|| {
                        Error::InvalidTopology(format!("leaf {} is missing obs_size", id))
                    })?;
                    if obs == 0 {
                        return Err(Error::InvalidTopology(format!("leaf {} has an empty observation space", id)));
                    }
                }
                NodeKind::Relay | NodeKind::FusionCenter => {
                    if spec.obs_size.is_some() {
                        return Err(Error::InvalidTopology(format!("non-leaf {} must not have obs_size", id)));
                    }
                }
            }

            kinds.push(spec.kind);
            parents.push(spec.parent.map(NodeId));
            rate_bits.push(spec.rate_bits);
            alphabet.push(spec.rate_bits.map_or(0, |r| 1usize << r));
            obs_size.push(spec.obs_size);
            if let Some(p) = spec.parent {
                preds[p].push(id);
            }
        }
        // preds were pushed in ascending child order already, but make the
        // contract explicit.
        for p in &mut preds {
            p.sort_unstable();
        }

        // Every node must reach the FC without revisiting anyone.
        for start in 0..n {
            let mut slow = NodeId(start);
            let mut steps = 0usize;
            loop {
                match parents[slow.0] {
                    None => break,
                    Some(next) => {
                        slow = next;
                        steps += 1;
                        if steps > n {
                            return Err(Error::CycleDetected(NodeId(start)));
                        }
                    }
                }
            }
        }

        for i in 0..n {
            let id = NodeId(i);
            match kinds[i] {
                NodeKind::Leaf if !preds[i].is_empty() => {
                    return Err(Error::LeafWithPredecessors(id));
                }
                NodeKind::Relay if preds[i].is_empty() => {
                    return Err(Error::RelayWithoutPredecessors(id));
                }
                NodeKind::FusionCenter if preds[i].is_empty() => {
                    return Err(Error::InvalidTopology("fusion center has no inputs".into()));
                }
                _ => {}
            }
        }

        let eval_order = evaluation_order_impl(&kinds, &preds, fc);
        Ok(TreeNetwork { kinds, parents, preds, rate_bits, alphabet, obs_size, fc, eval_order })
    }

    pub fn num_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn fusion_center(&self) -> NodeId {
        self.fc
    }

    pub fn kind(&self, m: NodeId) -> Result<NodeKind> {
        self.check(m)?;
        Ok(self.kinds[m.0])
    }

    pub fn is_leaf(&self, m: NodeId) -> bool {
        self.kinds.get(m.0) == Some(&NodeKind::Leaf)
    }

    pub fn is_relay(&self, m: NodeId) -> bool {
        self.kinds.get(m.0) == Some(&NodeKind::Relay)
    }

    /// Ids of all nodes, ascending.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.num_nodes()).map(NodeId)
    }

    /// Ids of all leaves, ascending.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&m| self.is_leaf(m)).collect()
    }

    /// Ids of all relays, ascending.
    pub fn relays(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&m| self.is_relay(m)).collect()
    }

    /// Output alphabet size `2^rate_bits` of a non-FC node.
    pub fn alphabet_size(&self, m: NodeId) -> Result<usize> {
        self.check_non_fc(m)?;
        Ok(self.alphabet[m.0])
    }

    pub fn rate_bits(&self, m: NodeId) -> Result<u32> {
        self.check_non_fc(m)?;
        Ok(self.rate_bits[m.0].expect("non-FC node has a rate"))
    }

    /// Observation-space cardinality of a leaf.
    pub fn leaf_obs_size(&self, m: NodeId) -> Result<usize> {
        self.check(m)?;
        self.obs_size[m.0]
            .ok_or_else(|| Error::InvalidTopology(format!("{} is not a leaf", m)))
    }

    /// Immediate successor (`None` for the FC).
    pub fn immediate_successor(&self, m: NodeId) -> Result<Option<NodeId>> {
        self.check(m)?;
        Ok(self.parents[m.0])
    }

    /// Immediate predecessors of `m`, ascending by id.
    pub fn immediate_predecessors(&self, m: NodeId) -> Result<&[NodeId]> {
        self.check(m)?;
        Ok(&self.preds[m.0])
    }

    /// The chain `(m, m_1, ..., m_K)` of `m` and its successors up to but
    /// excluding the FC.
    pub fn successor_chain(&self, m: NodeId) -> Result<Vec<NodeId>> {
        self.check_non_fc(m)?;
        let mut chain = vec![m];
        let mut cur = m;
        while let Some(next) = self.parents[cur.0] {
            if next == self.fc {
                break;
            }
            chain.push(next);
            cur = next;
        }
        Ok(chain)
    }

    /// The last node that messages from `m` pass through before the FC; an
    /// immediate predecessor of the FC.
    pub fn last_successor(&self, m: NodeId) -> Result<NodeId> {
        Ok(*self.successor_chain(m)?.last().expect("chain contains m"))
    }

    /// `m` together with all its predecessors (the sub-tree rooted at `m`),
    /// ascending by id.
    pub fn subtree_nodes(&self, m: NodeId) -> Result<Vec<NodeId>> {
        self.check(m)?;
        let mut out = Vec::new();
        let mut stack = vec![m];
        while let Some(cur) = stack.pop() {
            out.push(cur);
            stack.extend_from_slice(&self.preds[cur.0]);
        }
        out.sort_unstable();
        Ok(out)
    }

    /// All node ids ordered so that every node appears after its immediate
    /// predecessors: leaves first (ascending), then relays, FC last.
    pub fn evaluation_order(&self) -> &[NodeId] {
        &self.eval_order
    }

    /// The (product) input index space of a node: a leaf's observation space,
    /// or one coordinate per immediate predecessor for relays and the FC.
    pub fn input_space(&self, m: NodeId) -> Result<InputSpace> {
        self.check(m)?;
        if self.is_leaf(m) {
            Ok(InputSpace::new(vec![self.obs_size[m.0].expect("leaf has obs_size")]))
        } else {
            let dims = self.preds[m.0].iter().map(|&p| self.alphabet[p.0]).collect();
            Ok(InputSpace::new(dims))
        }
    }

    fn check(&self, m: NodeId) -> Result<()> {
        if m.0 < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::UnknownNode(m))
        }
    }

    fn check_non_fc(&self, m: NodeId) -> Result<()> {
        self.check(m)?;
        if m == self.fc {
            Err(Error::IsFusionCenter(m))
        } else {
            Ok(())
        }
    }
}

/// Topological order with all leaves first (ascending), then relays in
/// dependency order, FC last. Valid because leaves never have predecessors.
fn evaluation_order_impl(kinds: &[NodeKind], preds: &[Vec<NodeId>], fc: NodeId) -> Vec<NodeId> {
    let n = kinds.len();
    let mut order: Vec<NodeId> = (0..n)
        .map(NodeId)
        .filter(|&m| kinds[m.0] == NodeKind::Leaf)
        .collect();
    let mut placed = vec![false; n];
    for &m in &order {
        placed[m.0] = true;
    }
    // Relays, ascending id per round, until all are placed.
    loop {
        let mut progressed = false;
        for i in 0..n {
            if kinds[i] == NodeKind::Relay && !placed[i] && preds[i].iter().all(|p| placed[p.0]) {
                order.push(NodeId(i));
                placed[i] = true;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    order.push(fc);
    order
}

// ---------------------------------------------------------------------------
// Topology file (JSON)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    nodes: Vec<TopologyFileNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFileNode {
    id: usize,
    kind: NodeKind,
    parent: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    obs_size: Option<usize>,
}

impl TreeNetwork {
    /// Parse a network from its JSON document form: an array `nodes` of
    /// `{id, kind, parent, rate_bits, obs_size}` entries with dense ids.
    /// Unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TopologyFile = serde_json::from_str(text)?;
        let n = file.nodes.len();
        let mut slots: Vec<Option<NodeSpec>> = vec![None; n];
        for node in file.nodes {
            if node.id >= n {
                return Err(Error::InvalidTopology(format!(
                    "node id {} out of range for {} nodes (ids must be dense 0..N-1)",
                    node.id, n
                )));
            }
            if slots[node.id].is_some() {
                return Err(Error::InvalidTopology(format!("duplicate node id {}", node.id)));
            }
            slots[node.id] = Some(NodeSpec {
                kind: node.kind,
                parent: node.parent,
                rate_bits: node.rate_bits,
                obs_size: node.obs_size,
            });
        }
        let specs: Vec<NodeSpec> = slots.into_iter().map(|s| s.expect("dense ids")).collect();
        TreeNetwork::build(&specs)
    }

    /// Serialize to the JSON document form accepted by [`TreeNetwork::from_json`].
    pub fn to_json(&self) -> String {
        let nodes = (0..self.num_nodes())
            .map(|i| TopologyFileNode {
                id: i,
                kind: self.kinds[i],
                parent: self.parents[i].map(|p| p.0),
                rate_bits: self.rate_bits[i],
                obs_size: self.obs_size[i],
            })
            .collect();
        serde_json::to_string_pretty(&TopologyFile { nodes }).expect("serializable")
    }
}
