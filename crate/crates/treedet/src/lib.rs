//! Design of node decision functions in rate-constrained distributed-detection
//! tree networks.
//!
//! A set of sensor nodes is arranged as a directed in-tree rooted at a fusion
//! center (FC). Leaves quantize their own discrete observations into rate
//! limited messages; relays re-quantize the messages of their immediate
//! predecessors; the FC applies the MAP rule and decides among `M` hypotheses.
//! This crate designs the per-node quantizers (lookup tables) so as to
//! minimize the exact Bayesian error probability at the FC, using a cyclic
//! person-by-person procedure: each node is redesigned jointly with the
//! (implicit, always-MAP) fusion center while all other nodes stay fixed.
//!
//! The redesign of a single node reduces to a two-node surrogate problem — a
//! source PMF `P(y|H)`, a side-information PMF `P(v|H)` and a
//! hypothesis-dependent channel `P(w|z,H)` obtained by multiplying the
//! transition matrices of the relays between the node and the FC. The
//! [`propagation`] module assembles that surrogate, [`fusion`] evaluates error
//! probabilities on it and on the full network, and [`designer`] runs the
//! cyclic loop.
//!
//! ```
//! use treedet::experiment::{tree22, gaussian_model};
//! use treedet::designer::{cyclic_design, initial_strategies, DesignConfig};
//!
//! let net = tree22(1, 1, 400).unwrap();
//! let model = gaussian_model(&net, 0.0, 10.0).unwrap();
//! let cfg = DesignConfig::for_network(&net, 42).with_restarts(5);
//! let init = initial_strategies(&net, &model, cfg.seed).unwrap();
//! let result = cyclic_design(&net, &model, &init, &cfg).unwrap();
//! assert!(result.final_pe < 0.07); // ~10^-1.185 at 0 dB
//! ```

pub mod designer;
mod error;
pub mod experiment;
pub mod fusion;
pub mod model;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod propagation;
pub mod quantizer;
pub mod topology;
#[cfg(feature = "oracle")]
pub mod validation;

pub use error::{Error, Result};
pub use model::HypothesisModel;
pub use quantizer::{DecisionFunction, InputSpace, Strategies};
pub use topology::{NodeId, NodeKind, TreeNetwork};

/// Tolerance used for all internal stochasticity checks (row/column sums).
pub const PROB_TOL: f64 = 1e-12;
