//! Self-check suites behind the `validate` CLI command: brute-force
//! equivalence of the factorized error computation, restricted-model
//! consistency at every node, monotone descent of the design loop, and
//! person-by-person versus globally optimal strategies at toy scale.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::designer::{cyclic_design, initial_strategies, DesignConfig};
use crate::error::Result;
use crate::experiment::{gaussian_model_for, parallel, tree22};
use crate::fusion::{network_error_probability, restricted_error_probability};
use crate::model::HypothesisModel;
use crate::oracle::{exhaustive_optimal, joint_bruteforce_pe, OracleBudget};
use crate::propagation::{build_restricted_model, RestrictedModel, TransitionMatrix};
use crate::quantizer::{init_random, Strategies};
use crate::topology::{NodeKind, NodeSpec, TreeNetwork};

const CONSISTENCY_TOL: f64 = 1e-12;

/// Deliberate defects for negative-control runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    None,
    /// Swap two output rows of each restricted model's channel matrix, which
    /// must break the consistency checks.
    CorruptChain,
}

/// Sizes of the three suites; the defaults match the acceptance criteria.
#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub seed: u64,
    pub equivalence_networks: usize,
    pub descent_runs: usize,
    pub pbp_instances: usize,
    pub inject: FaultInjection,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            seed: 2024,
            equivalence_networks: 100,
            descent_runs: 50,
            pbp_instances: 20,
            inject: FaultInjection::None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub suites: Vec<SuiteResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail)?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

// ---------------------------------------------------------------------------
// Random instance corpus
// ---------------------------------------------------------------------------

/// A random tree with at most 4 leaves, observation spaces up to 4 cells,
/// depth up to 3 and rates up to 2 bits.
pub fn random_network(rng: &mut ChaCha8Rng) -> TreeNetwork {
    const FC_SLOT: usize = usize::MAX; // placeholder parent, patched below
    let n_leaves = rng.random_range(1..=4usize);
    let mut specs: Vec<NodeSpec> = Vec::new();
    let mut remaining = n_leaves;
    while remaining > 0 {
        // One FC child at a time: a direct leaf, or a relay (possibly a
        // chain of two) holding a batch of the remaining leaves.
        let relay_depth = rng.random_range(0..=2usize);
        if relay_depth == 0 {
            specs.push(NodeSpec::leaf(FC_SLOT, rng.random_range(1..=2), rng.random_range(2..=4)));
            remaining -= 1;
            continue;
        }
        let take = rng.random_range(1..=remaining);
        let mut parent = FC_SLOT;
        for _ in 0..relay_depth {
            let rate = rng.random_range(1..=2);
            specs.push(NodeSpec {
                kind: NodeKind::Relay,
                parent: Some(parent),
                rate_bits: Some(rate),
                obs_size: None,
            });
            parent = specs.len() - 1;
        }
        for _ in 0..take {
            specs.push(NodeSpec::leaf(parent, rng.random_range(1..=2), rng.random_range(2..=4)));
        }
        remaining -= take;
    }
    let fc_index = specs.len();
    for spec in specs.iter_mut() {
        if spec.parent == Some(FC_SLOT) {
            spec.parent = Some(fc_index);
        }
    }
    specs.push(NodeSpec::fusion_center());
    TreeNetwork::build(&specs).expect("generator produces valid trees")
}

/// Random priors and leaf tables (binary or ternary hypotheses).
pub fn random_model(rng: &mut ChaCha8Rng, net: &TreeNetwork) -> HypothesisModel {
    let hyp = if rng.random_range(0..4) == 0 { 3 } else { 2 };
    let mut priors: Vec<f64> = (0..hyp).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = priors.iter().sum();
    priors.iter_mut().for_each(|p| *p /= total);
    let mut leaf_pmfs = BTreeMap::new();
    for leaf in net.leaves() {
        let obs = net.leaf_obs_size(leaf).unwrap();
        let mut table = Vec::with_capacity(hyp);
        for _ in 0..hyp {
            let mut row: Vec<f64> = (0..obs).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            table.push(row);
        }
        leaf_pmfs.insert(leaf, table);
    }
    HypothesisModel::new(net, priors, leaf_pmfs).expect("valid by construction")
}

pub fn random_strategies(rng: &mut ChaCha8Rng, net: &TreeNetwork) -> Strategies {
    let mut strategies = Strategies::new();
    for m in net.node_ids().filter(|&m| m != net.fusion_center()) {
        strategies.install(
            m,
            init_random(net.input_space(m).unwrap(), net.alphabet_size(m).unwrap(), rng.random()),
        );
    }
    strategies
}

fn corrupt_channel(rm: &RestrictedModel) -> RestrictedModel {
    let w = rm.channel.to_card();
    let z = rm.channel.from_card();
    let hyp = rm.priors.len();
    debug_assert!(w >= 2);
    let mut mats = Vec::with_capacity(hyp);
    for j in 0..hyp {
        let mut mat = vec![0.0; w * z];
        for m in 0..w {
            // Swap output rows 0 and 1 under hypothesis 0 only; a swap under
            // every hypothesis would just relabel w, which MAP absorbs.
            let src = match m {
                0 if j == 0 => 1,
                1 if j == 0 => 0,
                other => other,
            };
            for n in 0..z {
                mat[m * z + n] = rm.channel.get(j, src, n);
            }
        }
        mats.push(mat);
    }
    RestrictedModel {
        priors: rm.priors.clone(),
        y_pmf: rm.y_pmf.clone(),
        v_pmf: rm.v_pmf.clone(),
        channel: TransitionMatrix::new(z, w, mats),
        target_output_card: rm.target_output_card,
    }
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Factorized vs brute-force error probability, plus restricted-model
/// consistency at every node, on random networks with random strategies.
pub fn oracle_equivalence_suite(cfg: &ValidationConfig, budget: &OracleBudget) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..cfg.equivalence_networks {
        let net = random_network(&mut rng);
        let model = random_model(&mut rng, &net);
        let strategies = random_strategies(&mut rng, &net);
        let pe = network_error_probability(&net, &model, &strategies)?;
        let brute = joint_bruteforce_pe(&net, &model, &strategies, budget)?;
        worst = worst.max((pe - brute).abs());
        if (pe - brute).abs() > CONSISTENCY_TOL {
            failures += 1;
        }
        for m0 in net.node_ids().filter(|&m| m != net.fusion_center()) {
            let mut rm = build_restricted_model(&net, &model, &strategies, m0)?;
            if cfg.inject == FaultInjection::CorruptChain {
                rm = corrupt_channel(&rm);
            }
            let pe_rm = restricted_error_probability(&rm, strategies.get(m0)?)?;
            worst = worst.max((pe - pe_rm).abs());
            if (pe - pe_rm).abs() > CONSISTENCY_TOL {
                failures += 1;
            }
        }
    }
    Ok(SuiteResult {
        name: "oracle-equivalence".into(),
        passed: failures == 0,
        detail: format!(
            "{} networks, worst deviation {:.3e}, {} failure(s)",
            cfg.equivalence_networks, worst, failures
        ),
    })
}

/// Every per-update error trace must be nonincreasing (1e-12 slack per
/// step), across the random corpus and the builtin experiment networks.
pub fn monotone_descent_suite(cfg: &ValidationConfig) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut violations = 0usize;
    let mut runs = 0usize;
    let mut check = |trace: &[f64]| {
        runs += 1;
        if trace.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            violations += 1;
        }
    };

    // Builtins: the experiment tree and the parallel network at a few SNRs.
    let builtin_runs = cfg.descent_runs.min(8);
    for i in 0..builtin_runs {
        let snr = [-5.0, 0.0, 5.0][i % 3];
        let net = if i % 2 == 0 { tree22(1, 1, 400)? } else { parallel(4, 1, 400)? };
        let model = gaussian_model_for(&net, snr, 10.0)?;
        let dc = DesignConfig::for_network(&net, cfg.seed + i as u64).with_restarts(2);
        let init = initial_strategies(&net, &model, dc.seed)?;
        let result = cyclic_design(&net, &model, &init, &dc)?;
        check(&result.pe_trace);
    }
    // Random corpus for the remainder.
    for i in builtin_runs..cfg.descent_runs {
        let net = random_network(&mut rng);
        let model = random_model(&mut rng, &net);
        let dc = DesignConfig::for_network(&net, cfg.seed + i as u64).with_restarts(2);
        let init = initial_strategies(&net, &model, dc.seed)?;
        let result = cyclic_design(&net, &model, &init, &dc)?;
        check(&result.pe_trace);
    }
    Ok(SuiteResult {
        name: "monotone-descent".into(),
        passed: violations == 0,
        detail: format!("{runs} designs, {violations} nonmonotone trace(s)"),
    })
}

/// Best-of-10-restart design vs the exhaustive optimum on random 2-leaf
/// parallel instances: exact in at least 90% of instances, within 0.01
/// absolute always.
pub fn pbp_vs_oracle_suite(cfg: &ValidationConfig, budget: &OracleBudget) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0bb5);
    let mut exact = 0usize;
    let mut worst_gap = 0.0f64;
    for i in 0..cfg.pbp_instances {
        let obs = rng.random_range(2..=4usize);
        let rate = rng.random_range(1..=2u32).min(obs.ilog2().max(1));
        let net = parallel(2, rate, obs)?;
        let model = random_model(&mut rng, &net);
        let (best, _) = exhaustive_optimal(&net, &model, budget)?;
        let dc = DesignConfig::for_network(&net, cfg.seed + 31 * i as u64).with_restarts(10);
        let init = initial_strategies(&net, &model, dc.seed)?;
        let result = cyclic_design(&net, &model, &init, &dc)?;
        let gap = result.final_pe - best;
        worst_gap = worst_gap.max(gap);
        if gap <= 1e-12 {
            exact += 1;
        }
    }
    let need = (cfg.pbp_instances * 9).div_ceil(10);
    Ok(SuiteResult {
        name: "pbp-vs-oracle".into(),
        passed: exact >= need && worst_gap <= 0.01,
        detail: format!(
            "{exact}/{} exact matches (need {need}), worst gap {worst_gap:.3e}",
            cfg.pbp_instances
        ),
    })
}

/// Run all suites and collect a printable report.
pub fn run_validation(cfg: &ValidationConfig, budget: &OracleBudget) -> Result<ValidationReport> {
    Ok(ValidationReport {
        suites: vec![
            oracle_equivalence_suite(cfg, budget)?,
            monotone_descent_suite(cfg)?,
            pbp_vs_oracle_suite(cfg, budget)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> ValidationConfig {
        ValidationConfig {
            seed: 7,
            equivalence_networks: 12,
            descent_runs: 6,
            pbp_instances: 4,
            inject: FaultInjection::None,
        }
    }

    #[test]
    fn random_networks_are_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let net = random_network(&mut rng);
            assert!(net.leaves().len() <= 4 && !net.leaves().is_empty());
            for leaf in net.leaves() {
                assert!(net.leaf_obs_size(leaf).unwrap() <= 4);
                assert!(net.successor_chain(leaf).unwrap().len() <= 3);
                assert!(net.rate_bits(leaf).unwrap() <= 2);
            }
        }
    }

    #[test]
    fn quick_validation_passes() {
        let report = run_validation(&quick_cfg(), &OracleBudget::default()).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn corrupted_chain_fails_the_consistency_suite() {
        let mut cfg = quick_cfg();
        cfg.inject = FaultInjection::CorruptChain;
        let suite = oracle_equivalence_suite(&cfg, &OracleBudget::default()).unwrap();
        assert!(!suite.passed, "negative control must fail: {}", suite.detail);
    }

    #[test]
    fn report_formats_one_line_per_suite() {
        let report = ValidationReport {
            suites: vec![
                SuiteResult { name: "a".into(), passed: true, detail: "ok".into() },
                SuiteResult { name: "b".into(), passed: false, detail: "bad".into() },
            ],
        };
        let text = report.to_string();
        assert!(text.contains("PASS a: ok"));
        assert!(text.contains("FAIL b: bad"));
        assert!(text.ends_with("overall: FAIL"));
        assert!(!report.passed());
    }
}
