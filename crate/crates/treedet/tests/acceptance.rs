//! Acceptance suite: reproduces the reference experiment results and runs
//! the machinery self-checks, one test (and one printed PASS line) per
//! criterion. Shared design curves are computed once.
//!
//! Run with `cargo test -p treedet --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use treedet::experiment::{run_sweep, ExperimentConfig};
use treedet::model::centralized_linear_pe;
use treedet::oracle::OracleBudget;
use treedet::validation::{
    monotone_descent_suite, oracle_equivalence_suite, pbp_vs_oracle_suite, FaultInjection,
    ValidationConfig,
};

const SNRS: [f64; 11] = [-5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0];

/// One designed curve: per SNR, (pe, log10 pe, tay log10 pe if present).
type Curve = Vec<(f64, f64, Option<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CurveKey {
    Tree(u32, u32),
    Parallel(u32),
}

fn curves() -> &'static BTreeMap<CurveKey, Curve> {
    static CURVES: OnceLock<BTreeMap<CurveKey, Curve>> = OnceLock::new();
    CURVES.get_or_init(|| {
        let mut out = BTreeMap::new();
        let configs = [
            CurveKey::Tree(1, 1),
            CurveKey::Tree(2, 1),
            CurveKey::Tree(1, 2),
            CurveKey::Tree(2, 2),
            CurveKey::Tree(3, 3),
            CurveKey::Parallel(1),
            CurveKey::Parallel(2),
            CurveKey::Parallel(3),
        ];
        for key in configs {
            let mut cfg = match key {
                CurveKey::Tree(rl, rr) => {
                    let mut c = ExperimentConfig::new("tree22");
                    c.rl = rl;
                    c.rr = rr;
                    c
                }
                CurveKey::Parallel(r) => {
                    let mut c = ExperimentConfig::new("parallel4");
                    c.rl = r;
                    c.rr = r;
                    c
                }
            };
            cfg.snr_db = SNRS.to_vec();
            cfg.bins = 400;
            cfg.half_range = 10.0;
            cfg.restarts = 10;
            cfg.seed = 1;
            let points = run_sweep(&cfg).expect("sweep succeeds");
            let curve = points
                .iter()
                .map(|p| (p.row.pe, p.row.log10_pe, p.row.baseline_tay_log10_pe))
                .collect();
            out.insert(key, curve);
        }
        out
    })
}

fn report(criterion: &str, passed: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{criterion}: {detail}");
}

/// Criterion 1: the designed tree at rates (1,1) reproduces the reference
/// curve at -5, 0 and 5 dB within 0.02 in log10.
#[test]
fn criterion_1_tree11_figure_points() {
    let curve = &curves()[&CurveKey::Tree(1, 1)];
    let targets = [(-5.0, -0.7065), (0.0, -1.1852), (5.0, -2.4055)];
    let mut worst = 0.0f64;
    for (snr, expected) in targets {
        let idx = SNRS.iter().position(|&s| s == snr).unwrap();
        worst = worst.max((curve[idx].1 - expected).abs());
    }
    report(
        "criterion 1 (tree (1,1) figure points)",
        worst <= 0.02,
        &format!("worst |log10 Pe - reference| = {worst:.4} (tol 0.02)"),
    );
}

/// Criterion 2: the AND/common-threshold baseline reproduces its reference
/// points, and the designed tree matches it within 0.01 log10 everywhere.
#[test]
fn criterion_2_tay_baseline_match() {
    let curve = &curves()[&CurveKey::Tree(1, 1)];
    let tay_at = |snr: f64| {
        let idx = SNRS.iter().position(|&s| s == snr).unwrap();
        curve[idx].2.expect("tay emitted for tree (1,1)")
    };
    let point_err =
        (tay_at(0.0) - (-1.1852)).abs().max((tay_at(5.0) - (-2.4057)).abs());
    let mut worst_gap = 0.0f64;
    for (idx, _) in SNRS.iter().enumerate() {
        let (_, log10_pe, tay) = curve[idx];
        worst_gap = worst_gap.max((log10_pe - tay.unwrap()).abs());
    }
    report(
        "criterion 2 (AND/common-threshold baseline)",
        point_err <= 0.02 && worst_gap <= 0.01,
        &format!("figure-point error {point_err:.4} (tol 0.02), worst |designed - baseline| = {worst_gap:.4} (tol 0.01)"),
    );
}

/// Criterion 3: the centralized linear detector is exactly Q(sqrt(n E)).
#[test]
fn criterion_3_centralized_exactness() {
    let pe = centralized_linear_pe(0.0, 4);
    let err = (pe - 0.0227501).abs();
    report(
        "criterion 3 (centralized linear detector)",
        err <= 1e-6,
        &format!("Pe(0 dB, 4 leaves) = {pe:.7} vs Q(2) = 0.0227501 (tol 1e-6), log10 = {:.4}", pe.log10()),
    );
}

/// Criterion 4: more link rate never hurts: Pe(2,1) and Pe(1,2) are at most
/// Pe(1,1) at every SNR.
#[test]
fn criterion_4_rate_ordering() {
    let t11 = &curves()[&CurveKey::Tree(1, 1)];
    let t21 = &curves()[&CurveKey::Tree(2, 1)];
    let t12 = &curves()[&CurveKey::Tree(1, 2)];
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..SNRS.len() {
        worst = worst.max(t21[idx].0 - t11[idx].0);
        worst = worst.max(t12[idx].0 - t11[idx].0);
    }
    report(
        "criterion 4 (rate ordering)",
        worst <= 1e-9,
        &format!("worst Pe(higher rate) - Pe(1,1) = {worst:.3e} (tol 1e-9)"),
    );
}

/// Criterion 5: (1,2) and (2,1) coincide for equal priors, and the (1,2)
/// tree matches the rate-1 parallel network.
#[test]
fn criterion_5_coincidence_and_parallel_equivalence() {
    let t21 = &curves()[&CurveKey::Tree(2, 1)];
    let t12 = &curves()[&CurveKey::Tree(1, 2)];
    let p1 = &curves()[&CurveKey::Parallel(1)];
    let mut worst_pair = 0.0f64;
    let mut worst_par = 0.0f64;
    for idx in 0..SNRS.len() {
        worst_pair = worst_pair.max((t12[idx].1 - t21[idx].1).abs());
        worst_par = worst_par.max((t12[idx].1 - p1[idx].1).abs());
    }
    report(
        "criterion 5 ((1,2)/(2,1) coincidence, parallel equivalence)",
        worst_pair <= 0.02 && worst_par <= 0.02,
        &format!("worst |(1,2)-(2,1)| = {worst_pair:.4}, worst |(1,2)-parallel| = {worst_par:.4} (tol 0.02)"),
    );
}

/// Criterion 6: the parallel network dominates the tree of equal rate, up to
/// 1e-3 of local-optimum noise.
#[test]
fn criterion_6_parallel_dominates_tree() {
    let mut worst = f64::NEG_INFINITY;
    for r in [1u32, 2, 3] {
        let tree = &curves()[&CurveKey::Tree(r, r)];
        let par = &curves()[&CurveKey::Parallel(r)];
        for idx in 0..SNRS.len() {
            worst = worst.max(par[idx].0 - tree[idx].0);
        }
    }
    report(
        "criterion 6 (parallel dominates tree)",
        worst <= 1e-3,
        &format!("worst Pe(parallel) - Pe(tree) = {worst:.3e} (tol 1e-3)"),
    );
}

fn acceptance_validation_cfg() -> ValidationConfig {
    ValidationConfig {
        seed: 2024,
        equivalence_networks: 100,
        descent_runs: 50,
        pbp_instances: 20,
        inject: FaultInjection::None,
    }
}

/// Criterion 7: on 100 random networks the factorized error equals the
/// brute-force joint enumeration, and every node's restricted model
/// evaluates to the full-network error, all to 1e-12.
#[test]
fn criterion_7_oracle_equivalence() {
    let suite =
        oracle_equivalence_suite(&acceptance_validation_cfg(), &OracleBudget::default()).unwrap();
    report("criterion 7 (oracle equivalence)", suite.passed, &suite.detail);
}

/// Criterion 8: 50 seeded designs, every error trace nonincreasing.
#[test]
fn criterion_8_monotone_descent() {
    let suite = monotone_descent_suite(&acceptance_validation_cfg()).unwrap();
    report("criterion 8 (monotone descent)", suite.passed, &suite.detail);
}

/// Criterion 9: best-of-10-restart design reaches the exhaustive optimum on
/// at least 18 of 20 toy instances and is never off by more than 0.01.
#[test]
fn criterion_9_design_vs_global_optimum() {
    let suite =
        pbp_vs_oracle_suite(&acceptance_validation_cfg(), &OracleBudget::default()).unwrap();
    report("criterion 9 (design vs global optimum)", suite.passed, &suite.detail);
}
