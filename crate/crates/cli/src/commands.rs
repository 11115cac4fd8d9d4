use std::fs;
use std::path::{Path, PathBuf};

use activehne_core::alloop::{run_repeated, RepeatedOutcome};
use activehne_core::hingraph::{decompose_with, load_graph, synth_hin, write_graph, DecomposeOptions};
use activehne_core::{HinGraph, Strategy, SynthParams};
use serde_json::json;

use crate::config::{load_config, ExperimentConfig, Override};
use crate::error::CliError;
use crate::manifest::{digest_inputs, verify_inputs, InputDigest, RunManifest};
use crate::output::{
    create_run_dir, per_run_names, write_aggregate, write_atomic, write_audit, write_csv,
    write_results,
};
use crate::{ExperimentArgs, SynthArgs};

struct Prepared {
    config: ExperimentConfig,
    graph: HinGraph,
    inputs: Vec<InputDigest>,
    overrides: Vec<String>,
}

fn prepare(args: &ExperimentArgs) -> Result<Prepared, CliError> {
    let mut overrides = args
        .set
        .iter()
        .map(|s| Override::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = args.seed {
        overrides.push(Override::new("loop.seed", json!(seed)));
    }
    if let Some(s) = &args.strategy {
        overrides.push(Override::new("loop.strategy", json!(s)));
    }
    if let Some(p) = args.parallel_runs {
        overrides.push(Override::new("parallel_runs", json!(p)));
    }
    let loaded = load_config(&args.config, &overrides)?;
    let mut config = loaded.config;

    let (graph, inputs) = if let Some(data) = config.data.as_mut() {
        let graph = load_graph(&data.files(), data.load_options())?;
        // absolute paths keep the manifest usable from any directory
        for p in [Some(&mut data.nodes), Some(&mut data.edges), data.features.as_mut()]
            .into_iter()
            .flatten()
        {
            if let Ok(abs) = fs::canonicalize(&*p) {
                *p = abs;
            }
        }
        let mut paths: Vec<&Path> = vec![&data.nodes, &data.edges];
        paths.extend(data.features.as_deref());
        (graph, digest_inputs(&paths)?)
    } else {
        let params = config.synth.expect("validated");
        (synth_hin(&params)?, Vec::new())
    };
    if let Some(expected) = &loaded.expected_inputs {
        verify_inputs(expected, &inputs)?;
    }
    Ok(Prepared {
        config,
        graph,
        inputs,
        overrides: overrides.iter().map(Override::describe).collect(),
    })
}

fn run_outputs(prefix: &Path, runs: usize) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = (0..runs)
        .flat_map(|i| {
            let (r, a) = per_run_names(i);
            [prefix.join(r), prefix.join(a)]
        })
        .collect();
    out.push(prefix.join("aggregate.csv"));
    out
}

fn execute(graph: &HinGraph, cfg: &ExperimentConfig, dir: &Path) -> Result<RepeatedOutcome, CliError> {
    eprintln!(
        "activehne: {} run(s), strategy {}, b = {}, R = {}",
        cfg.runs, cfg.active.strategy, cfg.active.batch_size, cfg.active.iterations
    );
    let rep = run_repeated(graph, &cfg.active, cfg.runs, cfg.parallel_runs)?;
    for (i, run) in rep.runs.iter().enumerate() {
        let (results, audit) = per_run_names(i);
        write_results(&dir.join(results), &run.records)?;
        write_audit(&dir.join(audit), &run.audit)?;
    }
    write_aggregate(&dir.join("aggregate.csv"), &rep.aggregate)?;
    Ok(rep)
}

pub fn cmd_run(args: &ExperimentArgs) -> Result<PathBuf, CliError> {
    let p = prepare(args)?;
    let dir = create_run_dir(&args.out, "run")?;
    let outputs = run_outputs(Path::new(""), p.config.runs);
    RunManifest::new("run", &p.config, p.overrides, p.inputs, outputs).write(&dir)?;
    execute(&p.graph, &p.config, &dir)?;
    Ok(dir)
}

pub fn cmd_ablate(args: &ExperimentArgs) -> Result<PathBuf, CliError> {
    let p = prepare(args)?;
    let dir = create_run_dir(&args.out, "ablate")?;
    let mut outputs: Vec<PathBuf> = Strategy::ALL
        .iter()
        .flat_map(|s| run_outputs(Path::new(s.name()), p.config.runs))
        .collect();
    outputs.push("comparison.csv".into());
    RunManifest::new("ablate", &p.config, p.overrides, p.inputs, outputs).write(&dir)?;

    let mut curves = Vec::new();
    for strategy in Strategy::ALL {
        let mut cfg = p.config.clone();
        cfg.active.strategy = strategy;
        let rep = execute(&p.graph, &cfg, &dir.join(strategy.name()))?;
        curves.push(rep.aggregate);
    }
    let longest = curves.iter().map(Vec::len).max().unwrap_or(0);
    let rows: Vec<Vec<String>> = (0..longest)
        .map(|i| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(
                curves
                    .iter()
                    .map(|c| c.get(i).map(|a| a.mean_accuracy.to_string()).unwrap_or_default()),
            );
            row
        })
        .collect();
    let mut header = vec!["iteration"];
    header.extend(Strategy::ALL.iter().map(|s| s.name()));
    write_csv(&dir.join("comparison.csv"), &header, &rows)?;
    Ok(dir)
}

/// Multiply-adds spent in sparse propagation per forward pass at order `k`.
pub fn propagation_cost(graph: &HinGraph, cfg: &ExperimentConfig, k: usize) -> f64 {
    let dhne = &cfg.active.dhne;
    let subnets = decompose_with(graph, DecomposeOptions { self_loops: dhne.self_loops });
    let nnz: usize = subnets.iter().map(|s| s.transition().nnz()).sum();
    let widths = dhne.hidden + dhne.output_width_for(graph.num_classes());
    k as f64 * nnz as f64 * widths as f64
}

pub fn cmd_ksweep(args: &ExperimentArgs, orders: Option<&[usize]>) -> Result<PathBuf, CliError> {
    let mut p = prepare(args)?;
    if let Some(k) = orders {
        p.config.ksweep.orders = k.to_vec();
    }
    let orders = p.config.ksweep.orders.clone();
    if orders.is_empty() {
        return Err(CliError::Config("ksweep needs at least one K".into()));
    }
    for &k in &orders {
        if k == 0 {
            return Err(CliError::Config("every K must be >= 1".into()));
        }
        let cost = propagation_cost(&p.graph, &p.config, k);
        if cost > p.config.ksweep.max_propagation_cost {
            return Err(CliError::Config(format!(
                "K = {k}: estimated propagation cost {cost:.3e} exceeds ksweep.max_propagation_cost {:.3e}",
                p.config.ksweep.max_propagation_cost
            )));
        }
    }
    let dir = create_run_dir(&args.out, "ksweep")?;
    let mut outputs: Vec<PathBuf> = orders
        .iter()
        .flat_map(|k| run_outputs(Path::new(&format!("k{k}")), p.config.runs))
        .collect();
    outputs.push("ksweep.csv".into());
    RunManifest::new("ksweep", &p.config, p.overrides, p.inputs, outputs).write(&dir)?;

    let mut rows = Vec::new();
    for &k in &orders {
        let mut cfg = p.config.clone();
        cfg.active.dhne.order = k;
        let rep = execute(&p.graph, &cfg, &dir.join(format!("k{k}")))?;
        let last = rep.aggregate.last().expect("at least one iteration");
        let curve_mean =
            rep.aggregate.iter().map(|a| a.mean_accuracy).sum::<f64>() / rep.aggregate.len() as f64;
        rows.push(vec![
            k.to_string(),
            last.mean_accuracy.to_string(),
            last.std_accuracy.to_string(),
            curve_mean.to_string(),
        ]);
    }
    write_csv(
        &dir.join("ksweep.csv"),
        &["k", "final_mean_accuracy", "final_std_accuracy", "mean_accuracy"],
        &rows,
    )?;
    Ok(dir)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf, CliError> {
    let params = SynthParams {
        types: args.types,
        classes: args.classes,
        nodes_per_class: args.nodes_per_class,
        p_in: args.p_in,
        p_out: args.p_out,
        feature_noise: args.noise,
        seed: args.seed,
    };
    params.validate()?;
    let graph = synth_hin(&params)?;
    write_graph(&graph, &args.out).map_err(|e| CliError::Output(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&params).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write_atomic(&args.out.join("params.json"), text.as_bytes())?;
    Ok(args.out.clone())
}
