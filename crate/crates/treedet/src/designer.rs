//! The cyclic person-by-person design loop and the AND/common-threshold
//! baseline.
//!
//! Each node in turn is rebuilt inside its restricted model by coordinate
//! descent over input cells: every input `y` is reassigned to whichever
//! output `z` minimizes the exact restricted error probability, which by the
//! restricted-model consistency equals the full-network error. Accepted
//! moves strictly decrease the error, so the procedure terminates and the
//! per-update error trace never increases. Like every person-by-person
//! scheme it converges to a local optimum that depends on initialization,
//! hence the restart machinery.

use crate::error::{Error, Result};
use crate::fusion::{network_error_probability_cached, restricted_w_pmf};
use crate::model::HypothesisModel;
use crate::propagation::{build_restricted_model_cached, PmfCache, RestrictedModel};
use crate::quantizer::{init_leaf_threshold, init_random, DecisionFunction, Strategies};
use crate::topology::{NodeId, NodeKind, TreeNetwork};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Parameters of one design session.
#[derive(Debug, Clone)]
pub struct DesignConfig {
    /// Non-FC nodes in redesign order; must cover each exactly once.
    pub node_schedule: Vec<NodeId>,
    pub max_cycles: usize,
    /// Stop when a full cycle improves the error by less than this.
    pub pe_tolerance: f64,
    /// Independent runs with re-randomized relay tables; best result wins.
    pub restarts: usize,
    pub seed: u64,
    /// Cap on coordinate-descent sweeps per node redesign.
    pub inner_max_passes: usize,
}

impl DesignConfig {
    /// Defaults: leaves in ascending id then relays in ascending id, 100
    /// cycles, tolerance 1e-12, one restart, 50 inner passes.
    pub fn for_network(net: &TreeNetwork, seed: u64) -> Self {
        let mut schedule = net.leaves();
        schedule.extend(net.relays());
        DesignConfig {
            node_schedule: schedule,
            max_cycles: 100,
            pe_tolerance: 1e-12,
            restarts: 1,
            seed,
            inner_max_passes: 50,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self, net: &TreeNetwork) -> Result<()> {
        let mut expected: Vec<NodeId> =
            net.node_ids().filter(|&m| m != net.fusion_center()).collect();
        let mut got = self.node_schedule.clone();
        expected.sort_unstable();
        got.sort_unstable();
        if expected != got {
            return Err(Error::InvalidConfig(
                "node schedule must cover every non-FC node exactly once".into(),
            ));
        }
        if self.max_cycles == 0 || self.restarts == 0 || self.inner_max_passes == 0 {
            return Err(Error::InvalidConfig(
                "max_cycles, restarts and inner_max_passes must be positive".into(),
            ));
        }
        if !(self.pe_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("pe_tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Outcome of a design session: the winning restart's strategies, its error
/// trace (initial error followed by the error after every node update), and
/// which restart won.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub strategies: Strategies,
    pub pe_trace: Vec<f64>,
    pub final_pe: f64,
    pub cycles_run: usize,
    pub restart_index: usize,
}

/// Deterministic per-(seed, restart, node) stream for relay randomization.
pub(crate) fn derive_seed(seed: u64, restart: u64, node: u64) -> u64 {
    let mut x = seed
        .wrapping_add(restart.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(node.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// The initialization recipe used in the experiments: leaves get the optimal
/// local threshold rule (binary hypotheses; the coarser regions split evenly
/// for multi-bit rates), relays get random tables drawn from `seed`.
pub fn initial_strategies(
    net: &TreeNetwork,
    model: &HypothesisModel,
    seed: u64,
) -> Result<Strategies> {
    let mut strategies = Strategies::new();
    for m in net.node_ids() {
        match net.kind(m)? {
            NodeKind::FusionCenter => {}
            NodeKind::Leaf => {
                let df = if model.num_hypotheses() == 2 {
                    init_leaf_threshold(model, m, net.rate_bits(m)?)?
                } else {
                    init_random(net.input_space(m)?, net.alphabet_size(m)?, derive_seed(seed, 0, m.0 as u64))
                };
                strategies.install(m, df);
            }
            NodeKind::Relay => {
                strategies.install(
                    m,
                    init_random(net.input_space(m)?, net.alphabet_size(m)?, derive_seed(seed, 0, m.0 as u64)),
                );
            }
        }
    }
    Ok(strategies)
}

// ---------------------------------------------------------------------------
// Restricted-model coordinate descent
// ---------------------------------------------------------------------------

/// Evaluates `1 - sum_v sum_w max_j pi_j P_j(v) W_j(w)` for candidate
/// `W` tables. For binary hypotheses the v-sum collapses, per `w`, to a
/// likelihood-ratio split over presorted prefix sums; the general case sums
/// directly.
struct VSideEvaluator {
    hyp: usize,
    /// Binary fast path: `(a, b) = (pi_0 P_0(v), pi_1 P_1(v))` sorted by
    /// ratio `b/a` ascending, zero-zero cells dropped.
    sorted: Vec<(f64, f64)>,
    prefix_a: Vec<f64>,
    suffix_b: Vec<f64>,
    /// General path: prior-scaled v rows.
    scaled: Vec<Vec<f64>>,
}

impl VSideEvaluator {
    fn new(priors: &[f64], v_pmf: &[Vec<f64>]) -> Self {
        let hyp = priors.len();
        let v_card = v_pmf[0].len();
        let scaled: Vec<Vec<f64>> = (0..hyp)
            .map(|j| v_pmf[j].iter().map(|&p| priors[j] * p).collect())
            .collect();
        let (sorted, prefix_a, suffix_b) = if hyp == 2 {
            let mut cells: Vec<(f64, f64)> = (0..v_card)
                .map(|v| (scaled[0][v], scaled[1][v]))
                .filter(|&(a, b)| a > 0.0 || b > 0.0)
                .collect();
            cells.sort_by(|x, y| (x.1 * y.0).total_cmp(&(y.1 * x.0)));
            let mut prefix_a = vec![0.0; cells.len() + 1];
            for (i, &(a, _)) in cells.iter().enumerate() {
                prefix_a[i + 1] = prefix_a[i] + a;
            }
            let mut suffix_b = vec![0.0; cells.len() + 1];
            for (i, &(_, b)) in cells.iter().enumerate().rev() {
                suffix_b[i] = suffix_b[i + 1] + b;
            }
            (cells, prefix_a, suffix_b)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };
        VSideEvaluator { hyp, sorted, prefix_a, suffix_b, scaled }
    }

    /// `sum_v max_j (scaled_v[j] * w_probs[j])` for one `w` column.
    fn score_column(&self, w_probs: &[f64]) -> f64 {
        if self.hyp == 2 {
            let (c0, c1) = (w_probs[0], w_probs[1]);
            // First sorted cell whose ratio b/a exceeds c0/c1 takes side 1.
            let k = self.sorted.partition_point(|&(a, b)| b * c1 <= a * c0);
            c0 * self.prefix_a[k] + c1 * self.suffix_b[k]
        } else {
            let v_card = self.scaled[0].len();
            let mut total = 0.0;
            for v in 0..v_card {
                let mut best = f64::NEG_INFINITY;
                for j in 0..self.hyp {
                    best = best.max(self.scaled[j][v] * w_probs[j]);
                }
                total += best;
            }
            total
        }
    }

    /// Error probability for a full `W[j][w]` table.
    fn pe(&self, w: &[Vec<f64>]) -> f64 {
        let w_card = w[0].len();
        let mut column = vec![0.0; self.hyp];
        let mut correct = 0.0;
        for u in 0..w_card {
            for j in 0..self.hyp {
                column[j] = w[j][u];
            }
            correct += self.score_column(&column);
        }
        1.0 - correct
    }
}

/// Coordinate descent over the inputs of the restricted model: sweep
/// `y = 0, 1, ...` in order, reassigning each to the output `z` of minimum
/// restricted error (ties keep the incumbent, otherwise the smallest `z`),
/// until a full sweep changes nothing or `inner_max_passes` is reached. The
/// returned function admits no single-input improvement.
pub fn optimize_node_in_restricted_model(
    rm: &RestrictedModel,
    gamma_init: &DecisionFunction,
    inner_max_passes: usize,
) -> Result<DecisionFunction> {
    if gamma_init.input_space().size() != rm.y_card()
        || gamma_init.output_card() != rm.target_output_card
    {
        return Err(Error::DimensionMismatch(format!(
            "initial decision function maps {} -> {}, restricted model needs {} -> {}",
            gamma_init.input_space().size(),
            gamma_init.output_card(),
            rm.y_card(),
            rm.target_output_card,
        )));
    }
    let mut gamma = gamma_init.clone();
    let hyp = rm.priors.len();
    let y_card = rm.y_card();
    let z_card = rm.target_output_card;
    let w_card = rm.w_card();
    let evaluator = VSideEvaluator::new(&rm.priors, &rm.v_pmf);

    let mut pes = vec![0.0f64; z_card];
    let mut candidate = vec![vec![0.0; w_card]; hyp];
    for _pass in 0..inner_max_passes {
        // Rebuild W from the table to keep incremental-update drift bounded
        // to a single sweep.
        let mut w = restricted_w_pmf(rm, &gamma)?;
        let mut changed = false;
        for y in 0..y_card {
            let current = gamma.table()[y];
            for z in 0..z_card {
                for j in 0..hyp {
                    let mass = rm.y_pmf[j][y];
                    for u in 0..w_card {
                        candidate[j][u] = w[j][u]
                            + mass * (rm.channel.get(j, u, z) - rm.channel.get(j, u, current));
                    }
                }
                pes[z] = evaluator.pe(&candidate);
            }
            let best = pes.iter().copied().fold(f64::INFINITY, f64::min);
            if pes[current] > best {
                let z = pes.iter().position(|&p| p == best).expect("min exists");
                for j in 0..hyp {
                    let mass = rm.y_pmf[j][y];
                    for u in 0..w_card {
                        w[j][u] += mass * (rm.channel.get(j, u, z) - rm.channel.get(j, u, current));
                    }
                }
                gamma.table_mut()[y] = z;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(gamma)
}

/// One audit sweep per node: true iff no single-input output reassignment in
/// any node's restricted model lowers the error beyond `tol`.
pub fn is_person_by_person_optimal(
    net: &TreeNetwork,
    model: &HypothesisModel,
    strategies: &Strategies,
    tol: f64,
) -> Result<bool> {
    let mut cache = PmfCache::new();
    for m0 in net.node_ids().filter(|&m| m != net.fusion_center()) {
        let rm = build_restricted_model_cached(net, model, strategies, m0, &mut cache)?;
        let current = strategies.get(m0)?;
        let before = crate::fusion::restricted_error_probability(&rm, current)?;
        let improved = optimize_node_in_restricted_model(&rm, current, 1)?;
        let after = crate::fusion::restricted_error_probability(&rm, &improved)?;
        if after < before - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Cyclic loop
// ---------------------------------------------------------------------------

struct RestartOutcome {
    strategies: Strategies,
    pe_trace: Vec<f64>,
    cycles_run: usize,
}

fn run_restart(
    net: &TreeNetwork,
    model: &HypothesisModel,
    init: &Strategies,
    cfg: &DesignConfig,
    restart: usize,
) -> Result<RestartOutcome> {
    let mut strategies = init.clone();
    if restart > 0 {
        // Relays carry the restart diversity; in relay-free (parallel)
        // networks the leaves must carry it instead, or every restart would
        // repeat the same deterministic run.
        let randomized = if net.relays().is_empty() { net.leaves() } else { net.relays() };
        for m in randomized {
            strategies.install(
                m,
                init_random(
                    net.input_space(m)?,
                    net.alphabet_size(m)?,
                    derive_seed(cfg.seed, restart as u64, m.0 as u64),
                ),
            );
        }
    }
    let mut cache = PmfCache::new();
    let mut pe = network_error_probability_cached(net, model, &strategies, &mut cache)?;
    let mut pe_trace = vec![pe];
    let mut cycles_run = 0;
    for _cycle in 0..cfg.max_cycles {
        let cycle_start = pe;
        for &m0 in &cfg.node_schedule {
            let rm = build_restricted_model_cached(net, model, &strategies, m0, &mut cache)?;
            let gamma =
                optimize_node_in_restricted_model(&rm, strategies.get(m0)?, cfg.inner_max_passes)?;
            strategies.install(m0, gamma);
            cache.invalidate_chain(net, m0)?;
            pe = network_error_probability_cached(net, model, &strategies, &mut cache)?;
            pe_trace.push(pe);
        }
        cycles_run += 1;
        if cycle_start - pe < cfg.pe_tolerance {
            break;
        }
    }
    Ok(RestartOutcome { strategies, pe_trace, cycles_run })
}

/// Run the cyclic person-by-person design: every cycle redesigns each
/// scheduled node inside its restricted model and installs the result,
/// until a full cycle improves the error by less than `pe_tolerance` or
/// `max_cycles` is hit. With `restarts > 1` the relays are re-randomized
/// per restart (leaf inits kept) and the best final error wins, ties going
/// to the lowest restart index.
pub fn cyclic_design(
    net: &TreeNetwork,
    model: &HypothesisModel,
    init: &Strategies,
    cfg: &DesignConfig,
) -> Result<DesignResult> {
    cfg.validate(net)?;
    for &m in &cfg.node_schedule {
        let df = init.get(m)?;
        if df.input_space() != &net.input_space(m)? || df.output_card() != net.alphabet_size(m)? {
            return Err(Error::DimensionMismatch(format!(
                "initial decision function of {m} does not fit its input space or rate"
            )));
        }
    }

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<RestartOutcome>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(net, model, init, cfg, r))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<RestartOutcome>> =
        (0..cfg.restarts).map(|r| run_restart(net, model, init, cfg, r)).collect();

    let mut best: Option<(usize, RestartOutcome)> = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        let final_pe = *outcome.pe_trace.last().expect("trace nonempty");
        let better = match &best {
            None => true,
            Some((_, incumbent)) => final_pe < *incumbent.pe_trace.last().expect("nonempty"),
        };
        if better {
            best = Some((r, outcome));
        }
    }
    let (restart_index, outcome) = best.expect("at least one restart");
    let final_pe = *outcome.pe_trace.last().expect("nonempty");
    Ok(DesignResult {
        strategies: outcome.strategies,
        pe_trace: outcome.pe_trace,
        final_pe,
        cycles_run: outcome.cycles_run,
        restart_index,
    })
}

// ---------------------------------------------------------------------------
// AND/common-threshold baseline
// ---------------------------------------------------------------------------

/// The asymptotically optimal recipe for the 2-symmetric 2-uniform tree at
/// rates (1, 1): relays AND their inputs, all leaves share one threshold,
/// and the best threshold is found by exhaustive search against the exact
/// MAP-fusion error. `threshold_grid = 0` sweeps every discretization cut
/// point; otherwise that many evenly spaced cuts are tried.
pub fn tay_baseline(
    net: &TreeNetwork,
    model: &HypothesisModel,
    threshold_grid: usize,
) -> Result<f64> {
    // Shape check: two rate-1 relays on the FC, two rate-1 leaves each, all
    // leaves with one common observation axis.
    let fc = net.fusion_center();
    let relays = net.immediate_predecessors(fc)?.to_vec();
    if relays.len() != 2 || !relays.iter().all(|&r| net.is_relay(r)) {
        return Err(Error::WrongTopology("the FC must be fed by exactly two relays".into()));
    }
    let mut obs_sizes = Vec::new();
    for &r in &relays {
        if net.alphabet_size(r)? != 2 {
            return Err(Error::WrongTopology(format!("relay {r} must have rate 1")));
        }
        let leaves = net.immediate_predecessors(r)?.to_vec();
        if leaves.len() != 2 || !leaves.iter().all(|&l| net.is_leaf(l)) {
            return Err(Error::WrongTopology(format!("relay {r} must be fed by exactly two leaves")));
        }
        for &l in &leaves {
            if net.alphabet_size(l)? != 2 {
                return Err(Error::WrongTopology(format!("leaf {l} must have rate 1")));
            }
            obs_sizes.push(net.leaf_obs_size(l)?);
        }
    }
    if obs_sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::WrongTopology("all leaves must share one observation axis".into()));
    }
    if model.num_hypotheses() != 2 {
        return Err(Error::UnsupportedHypothesisCount { supported: 2, actual: model.num_hypotheses() });
    }
    let obs = obs_sizes[0];

    let cuts: Vec<usize> = if threshold_grid == 0 {
        (1..obs).collect()
    } else {
        let mut cuts: Vec<usize> = (1..=threshold_grid)
            .map(|i| ((i * obs) as f64 / (threshold_grid + 1) as f64).round() as usize)
            .map(|t| t.clamp(1, obs - 1))
            .collect();
        cuts.dedup();
        cuts
    };

    let and_table = DecisionFunction::from_table(
        crate::quantizer::InputSpace::new(vec![2, 2]),
        2,
        vec![0, 0, 0, 1],
    )?;
    let mut best = f64::INFINITY;
    for cut in cuts {
        let mut strategies = Strategies::new();
        for leaf in net.leaves() {
            let table: Vec<usize> = (0..obs).map(|c| usize::from(c >= cut)).collect();
            strategies.install(
                leaf,
                DecisionFunction::from_table(net.input_space(leaf)?, 2, table)?,
            );
        }
        for &relay in &relays {
            strategies.install(relay, and_table.clone());
        }
        let pe = crate::fusion::network_error_probability(net, model, &strategies)?;
        best = best.min(pe);
    }
    Ok(best)
}
