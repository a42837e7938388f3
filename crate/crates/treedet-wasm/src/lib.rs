//! Browser bindings for the interactive demo page: design a network at one
//! SNR, sweep a curve, or inspect a designed leaf quantizer. All functions
//! take and return JSON strings; errors come back as thrown JS strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use treedet::designer::{cyclic_design, initial_strategies, tay_baseline, DesignConfig};
use treedet::experiment::{gaussian_model_for, parallel, tree22};
use treedet::model::centralized_linear_pe;
use treedet::topology::TreeNetwork;
use treedet::{Error, HypothesisModel, Strategies};

#[derive(Deserialize)]
struct DemoConfig {
    topology: String,
    #[serde(default = "one")]
    rl: u32,
    #[serde(default = "one")]
    rr: u32,
    #[serde(default)]
    snr_db: f64,
    #[serde(default)]
    snr_list: Vec<f64>,
    #[serde(default = "default_bins")]
    bins: usize,
    #[serde(default = "default_half_range")]
    half_range: f64,
    #[serde(default = "default_restarts")]
    restarts: usize,
    #[serde(default = "one_u64")]
    seed: u64,
}

fn one() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn default_bins() -> usize {
    200
}
fn default_half_range() -> f64 {
    10.0
}
fn default_restarts() -> usize {
    4
}

#[derive(Serialize)]
struct NodeInfo {
    id: usize,
    kind: String,
    parent: Option<usize>,
}

#[derive(Serialize)]
struct DesignOutput {
    pe: f64,
    log10_pe: f64,
    pe_trace: Vec<f64>,
    cycles: usize,
    restart_best: usize,
    nodes: Vec<NodeInfo>,
    tables: std::collections::BTreeMap<String, Vec<usize>>,
    baseline_linear_log10_pe: f64,
    baseline_tay_log10_pe: Option<f64>,
}

#[derive(Serialize)]
struct SweepOutput {
    snr_db: Vec<f64>,
    log10_pe: Vec<f64>,
    baseline_linear_log10_pe: Vec<f64>,
    baseline_tay_log10_pe: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct QuantizerOutput {
    leaf: usize,
    /// Cell edges on the observation axis (finite ones only).
    edges: Vec<f64>,
    pmf_h0: Vec<f64>,
    pmf_h1: Vec<f64>,
    /// Designed output message per observation cell.
    cells: Vec<usize>,
    output_card: usize,
}

fn build(cfg: &DemoConfig) -> Result<TreeNetwork, Error> {
    match cfg.topology.as_str() {
        "tree22" => tree22(cfg.rl, cfg.rr, cfg.bins),
        "parallel4" => parallel(4, cfg.rl, cfg.bins),
        other => Err(Error::InvalidConfig(format!(
            "unknown topology {other:?}; the demo offers tree22 and parallel4"
        ))),
    }
}

fn design_at(
    net: &TreeNetwork,
    model: &HypothesisModel,
    cfg: &DemoConfig,
) -> Result<(treedet::designer::DesignResult, Strategies), Error> {
    let dc = DesignConfig::for_network(net, cfg.seed).with_restarts(cfg.restarts);
    let init = initial_strategies(net, model, cfg.seed)?;
    let result = cyclic_design(net, model, &init, &dc)?;
    let strategies = result.strategies.clone();
    Ok((result, strategies))
}

fn parse_cfg(config_json: &str) -> Result<DemoConfig, String> {
    serde_json::from_str(config_json).map_err(|e| format!("bad config: {e}"))
}

fn design_network_impl(config_json: &str) -> Result<String, String> {
    let cfg = parse_cfg(config_json)?;
    let net = build(&cfg).map_err(|e| e.to_string())?;
    let model =
        gaussian_model_for(&net, cfg.snr_db, cfg.half_range).map_err(|e| e.to_string())?;
    let (result, strategies) = design_at(&net, &model, &cfg).map_err(|e| e.to_string())?;

    let tay = (cfg.topology == "tree22" && cfg.rl == 1 && cfg.rr == 1)
        .then(|| tay_baseline(&net, &model, 0).map(|pe| pe.log10()))
        .transpose()
        .map_err(|e| e.to_string())?;
    let nodes = net
        .node_ids()
        .map(|m| NodeInfo {
            id: m.0,
            kind: match net.kind(m).unwrap() {
                treedet::NodeKind::Leaf => "leaf".into(),
                treedet::NodeKind::Relay => "relay".into(),
                treedet::NodeKind::FusionCenter => "fc".into(),
            },
            parent: net.immediate_successor(m).unwrap().map(|p| p.0),
        })
        .collect();
    let out = DesignOutput {
        pe: result.final_pe,
        log10_pe: result.final_pe.log10(),
        pe_trace: result.pe_trace,
        cycles: result.cycles_run,
        restart_best: result.restart_index,
        nodes,
        tables: strategies.tables(),
        baseline_linear_log10_pe: centralized_linear_pe(cfg.snr_db, net.leaves().len()).log10(),
        baseline_tay_log10_pe: tay,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn snr_sweep_impl(config_json: &str) -> Result<String, String> {
    let cfg = parse_cfg(config_json)?;
    if cfg.snr_list.is_empty() {
        return Err("snr_list must be nonempty".into());
    }
    let net = build(&cfg).map_err(|e| e.to_string())?;
    let n_leaves = net.leaves().len();
    let tay_applies = cfg.topology == "tree22" && cfg.rl == 1 && cfg.rr == 1;

    let mut log10_pe = Vec::new();
    let mut linear = Vec::new();
    let mut tay = Vec::new();
    for &snr in &cfg.snr_list {
        let model = gaussian_model_for(&net, snr, cfg.half_range).map_err(|e| e.to_string())?;
        let (result, _) = design_at(&net, &model, &cfg).map_err(|e| e.to_string())?;
        log10_pe.push(result.final_pe.log10());
        linear.push(centralized_linear_pe(snr, n_leaves).log10());
        if tay_applies {
            tay.push(tay_baseline(&net, &model, 0).map_err(|e| e.to_string())?.log10());
        }
    }
    let out = SweepOutput {
        snr_db: cfg.snr_list,
        log10_pe,
        baseline_linear_log10_pe: linear,
        baseline_tay_log10_pe: tay_applies.then_some(tay),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn leaf_quantizer_profile_impl(config_json: &str) -> Result<String, String> {
    let cfg = parse_cfg(config_json)?;
    let net = build(&cfg).map_err(|e| e.to_string())?;
    let model =
        gaussian_model_for(&net, cfg.snr_db, cfg.half_range).map_err(|e| e.to_string())?;
    let (_, strategies) = design_at(&net, &model, &cfg).map_err(|e| e.to_string())?;

    let leaf = net.leaves()[0];
    let pmf = model.leaf_pmf(leaf).map_err(|e| e.to_string())?;
    let df = strategies.get(leaf).map_err(|e| e.to_string())?;
    let edges: Vec<f64> = if cfg.bins == 2 {
        vec![0.0]
    } else {
        let width = 2.0 * cfg.half_range / (cfg.bins - 2) as f64;
        (0..cfg.bins - 1).map(|k| -cfg.half_range + k as f64 * width).collect()
    };
    let out = QuantizerOutput {
        leaf: leaf.0,
        edges,
        pmf_h0: pmf[0].clone(),
        pmf_h1: pmf[1].clone(),
        cells: df.table().to_vec(),
        output_card: df.output_card(),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

/// Design the configured network at one SNR point and return the result,
/// decision tables included, as JSON.
#[wasm_bindgen]
pub fn design_network(config_json: &str) -> Result<String, JsValue> {
    design_network_impl(config_json).map_err(|e| JsValue::from_str(&e))
}

/// Design the network at every SNR in `snr_list` and return the curve plus
/// baselines as JSON.
#[wasm_bindgen]
pub fn snr_sweep(config_json: &str) -> Result<String, JsValue> {
    snr_sweep_impl(config_json).map_err(|e| JsValue::from_str(&e))
}

/// Design the network and return one leaf's observation PMFs together with
/// its designed quantizer cells, for the region visualization.
#[wasm_bindgen]
pub fn leaf_quantizer_profile(config_json: &str) -> Result<String, JsValue> {
    leaf_quantizer_profile_impl(config_json).map_err(|e| JsValue::from_str(&e))
}
