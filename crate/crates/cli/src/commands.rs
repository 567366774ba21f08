use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use commselect_core::graph::{parse_edge_list, write_edge_list, write_partition};
use commselect_core::harness::{
    detail_csv, fmt9, parse_detail_csv, report_selection, run_sweep, selection_csv, summarize, summary_csv, train_eval,
    Algorithm, NetworkRecord, SweepConfig, TrainEvalConfig,
};
use commselect_core::selector::{extract_features, ClassLabel, SelectorModel, SvmHyper};
use commselect_core::{generate, modularity, GenParams};

use crate::config::{unit_interval, usage, Settings};
use crate::{Cli, Command, GenArgs, GenerateArgs, PredictArgs, ReportArgs, SweepArgs, TrainArgs};

const SEED_ENV: &str = "COMMSELECT_SEED";

pub fn run(cli: Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, &settings),
        Command::Sweep(a) => cmd_sweep(&a, &settings),
        Command::Train(a) => cmd_train(&a, &settings),
        Command::Predict(a) => cmd_predict(&a, &settings),
        Command::Report(a) => cmd_report(&a),
    }
}

/// Seed precedence: flag, then `COMMSELECT_SEED`, then the config file.
fn master_seed(flag: Option<u64>, settings: &Settings, key: &str) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        return raw.trim().parse().map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}")));
    }
    Ok(settings.pick(None, key)?.unwrap_or(0))
}

fn gen_params(a: &GenArgs, s: &Settings) -> Result<GenParams> {
    let d = GenParams::default();
    Ok(GenParams {
        n: s.pick(a.n, "n")?.unwrap_or(d.n),
        tau1: s.pick(a.tau1, "tau1")?.unwrap_or(d.tau1),
        tau2: s.pick(a.tau2, "tau2")?.unwrap_or(d.tau2),
        avg_k: s.pick(a.avg_k, "avg-k")?.unwrap_or(d.avg_k),
        k_max: s.pick(a.k_max, "k-max")?.or(d.k_max),
        beta: s.pick(a.beta, "beta")?.unwrap_or(d.beta),
        s_min: s.pick(a.s_min, "s-min")?.or(d.s_min),
        s_max: s.pick(a.s_max, "s-max")?.or(d.s_max),
        mix_tolerance: s.pick(a.mix_tolerance, "mix-tolerance")?.unwrap_or(d.mix_tolerance),
        max_rewire_sweeps: s.pick(a.max_rewire_sweeps, "max-rewire-sweeps")?.unwrap_or(d.max_rewire_sweeps),
        weight_tolerance: s.pick(a.weight_tolerance, "weight-tolerance")?.unwrap_or(d.weight_tolerance),
        max_weight_sweeps: s.pick(a.max_weight_sweeps, "max-weight-sweeps")?.unwrap_or(d.max_weight_sweeps),
        ..d
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_generate(a: &GenerateArgs, s: &Settings) -> Result<()> {
    let mut params = gen_params(&a.gen, s)?;
    params.mu_t = unit_interval("mu-t", s.pick(a.mu_t, "mu-t")?.unwrap_or(params.mu_t))?;
    params.mu_w = unit_interval("mu-w", s.pick(a.mu_w, "mu-w")?.unwrap_or(params.mu_w))?;
    params.seed = master_seed(a.seed, s, "seed")?;
    params.validate().map_err(|e| usage(e.to_string()))?;

    let net = generate(&params).context("generation failed")?;
    let k_max = params.k_max.map_or("auto".to_string(), |k| k.to_string());
    let s_min = params.s_min.map_or("auto".to_string(), |k| k.to_string());
    let s_max = params.s_max.map_or("auto".to_string(), |k| k.to_string());
    let mut text = String::from("# commselect generate\n");
    text += &format!(
        "# n={} tau1={} tau2={} avg_k={} k_max={k_max} beta={} s_min={s_min} s_max={s_max} seed={}\n",
        params.n, params.tau1, params.tau2, params.avg_k, params.beta, params.seed
    );
    text += &format!("# mu_t={} mu_w={}\n", params.mu_t, params.mu_w);
    text += &format!("# achieved_mu_t={} achieved_mu_w={}\n", net.achieved_mu_t, net.achieved_mu_w);
    text += &write_edge_list(&net.graph);
    write(&a.edges, &text)?;
    write(&a.partition, &write_partition(&net.truth))?;
    println!(
        "{} nodes, {} edges, {} communities, achieved mu_t {} mu_w {}",
        net.graph.node_count(),
        net.graph.edge_count(),
        net.truth.community_count(),
        fmt9(net.achieved_mu_t),
        fmt9(net.achieved_mu_w)
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, s: &Settings) -> Result<()> {
    let d = SweepConfig::default();
    let algorithms = match s.pick(a.algorithms.clone(), "algorithms")? {
        None => d.algorithms.clone(),
        Some(list) => list.0.iter().map(|x| x.parse::<Algorithm>().map_err(usage)).collect::<Result<Vec<_>>>()?,
    };
    let cfg = SweepConfig {
        base: gen_params(&a.gen, s)?,
        mu_t_grid: s.pick(a.mu_t_grid.clone(), "mu-t-grid")?.map_or(d.mu_t_grid.clone(), |l| l.0),
        mu_w_grid: s.pick(a.mu_w_grid.clone(), "mu-w-grid")?.map_or(d.mu_w_grid.clone(), |l| l.0),
        reps: s.pick(a.reps, "reps")?.unwrap_or(d.reps),
        algorithms,
        master_seed: master_seed(a.master_seed, s, "master-seed")?,
        workers: s
            .pick(a.workers, "workers")?
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    for x in cfg.mu_t_grid.iter().chain(&cfg.mu_w_grid) {
        unit_interval("mixing grid value", *x)?;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let records = run_sweep(&cfg)?;
    write(&a.out, &detail_csv(&records, &cfg.algorithms)?)?;
    let summary_path = sibling(&a.out, "summary.csv");
    write(&summary_path, &summary_csv(&summarize(&records, &cfg.algorithms))?)?;
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "{} networks ({failed} failed), detail {}, summary {}",
        records.len(),
        a.out.display(),
        summary_path.display()
    );
    Ok(())
}

fn load_results(path: &Path) -> Result<Vec<NetworkRecord>> {
    parse_detail_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_train(a: &TrainArgs, s: &Settings) -> Result<()> {
    let d = TrainEvalConfig::default();
    let hyper = SvmHyper {
        c: s.pick(a.svm_c, "svm-c")?.unwrap_or(d.hyper.c),
        epochs: s.pick(a.epochs, "epochs")?.unwrap_or(d.hyper.epochs),
        seed: s.pick(a.svm_seed, "svm-seed")?.unwrap_or(d.hyper.seed),
    };
    let cfg = TrainEvalConfig {
        train_fraction: s.pick(a.train_fraction, "train-fraction")?.unwrap_or(d.train_fraction),
        seed: master_seed(a.split_seed, s, "split-seed")?,
        threshold: unit_interval("threshold", s.pick(a.threshold, "threshold")?.unwrap_or(d.threshold))?,
        hyper,
    };
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(usage("train-fraction must lie strictly between 0 and 1"));
    }
    let records = load_results(&a.results)?;
    let (model, report) = train_eval(&records, &cfg)?;
    write(&a.model, &model.to_text())?;
    write(&a.report, &report.to_text())?;
    println!("accuracy {} on {} test networks", fmt9(report.accuracy), report.test_count);
    Ok(())
}

fn load_model(path: &Path) -> Result<SelectorModel> {
    SelectorModel::from_text(&read(path)?).with_context(|| format!("parsing model {}", path.display()))
}

fn cmd_predict(a: &PredictArgs, s: &Settings) -> Result<()> {
    let model = load_model(&a.model)?;
    let graph = parse_edge_list(&read(&a.graph)?).with_context(|| format!("parsing graph {}", a.graph.display()))?;
    let f = extract_features(&graph);
    let p = model.predict_with_margins(&f);
    println!("class {}", p.label);
    println!("c_uw {}", fmt9(f.c_uw));
    println!("c_w {}", fmt9(f.c_w));
    for (c, m) in model.classifiers.iter().zip(p.margins) {
        println!("margin {}/{} {}", c.positive, c.negative, fmt9(m));
    }
    if let Some(out) = &a.partition {
        let weighted = p.label == ClassLabel::Weighted;
        let seed = master_seed(a.seed, s, "seed")?;
        // the class's candidates, judged by modularity since no truth is known
        let mut best = None;
        for alg in Algorithm::ALL.into_iter().filter(|x| x.weighted() == weighted) {
            let part = alg.run(&graph, seed);
            let q = modularity(&graph, &part).unwrap_or(0.0);
            if best.as_ref().is_none_or(|(bq, _, _)| q > *bq) {
                best = Some((q, alg, part));
            }
        }
        let Some((q, alg, part)) = best else { bail!("no detector for class {}", p.label) };
        write(out, &write_partition(&part))?;
        println!("algorithm {} modularity {} communities {}", alg.name(), fmt9(q), part.community_count());
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let records = load_results(&a.results)?;
    let rows = report_selection(&records, &model)?;
    write(&a.out, &selection_csv(&rows)?)?;
    let present: Vec<Algorithm> = Algorithm::ALL
        .into_iter()
        .filter(|alg| records.iter().any(|r| r.outcome.as_ref().is_ok_and(|m| m.nmi.iter().any(|(b, _)| b == alg))))
        .collect();
    let curves = sibling(&a.out, "curves.csv");
    write(&curves, &summary_csv(&summarize(&records, &present))?)?;
    println!("{} cells, selection {}, curves {}", rows.len(), a.out.display(), curves.display());
    Ok(())
}
