//! Experiment pipeline: mixing-parameter sweeps, CSV results, selector
//! training and evaluation, and selection-versus-oracle comparison.
//!
//! Detail CSV columns, in order:
//! `mu_t,mu_w,rep,seed,algorithm,status,nmi,c_uw,c_w,achieved_mu_t,achieved_mu_w`.
//! Rows for networks that could not be generated carry `status` of the form
//! `failed:<stage>` and empty numeric fields.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::copra::{self, CopraConfig};
use crate::graph::{Graph, Partition};
use crate::infomap::{self, InfomapConfig};
use crate::lfr::{generate, GenParams};
use crate::metrics::nmi;
use crate::seed;
use crate::selector::{
    extract_features, label_network, train_selector, AlgorithmScore, ClassLabel, FeatureVector, SelectorError,
    SelectorModel, SvmHyper,
};

pub const DETAIL_COLUMNS: [&str; 11] =
    ["mu_t", "mu_w", "rep", "seed", "algorithm", "status", "nmi", "c_uw", "c_w", "achieved_mu_t", "achieved_mu_w"];
pub const SUMMARY_COLUMNS: [&str; 7] = ["mu_t", "mu_w", "algorithm", "networks", "failed", "mean_nmi", "std_nmi"];
pub const SELECTION_COLUMNS: [&str; 7] =
    ["mu_t", "mu_w", "networks", "best_weighted", "best_unweighted", "selected", "none_predictions"];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("results file: {0}")]
    Results(String),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    CopraUw,
    CopraW,
    InfomapUw,
    InfomapW,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::CopraUw, Algorithm::CopraW, Algorithm::InfomapUw, Algorithm::InfomapW];

    /// Stable identifier used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Algorithm::CopraUw => 1,
            Algorithm::CopraW => 2,
            Algorithm::InfomapUw => 3,
            Algorithm::InfomapW => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CopraUw => "copra_uw",
            Algorithm::CopraW => "copra_w",
            Algorithm::InfomapUw => "infomap_uw",
            Algorithm::InfomapW => "infomap_w",
        }
    }

    pub fn weighted(self) -> bool {
        matches!(self, Algorithm::CopraW | Algorithm::InfomapW)
    }

    /// Runs the detector with its default configuration.
    pub fn run(self, g: &Graph, seed: u64) -> Partition {
        match self {
            Algorithm::CopraUw => copra::detect(g, &CopraConfig::unweighted(seed)),
            Algorithm::CopraW => copra::detect(g, &CopraConfig::weighted(seed)),
            Algorithm::InfomapUw => return infomap::detect(g, &InfomapConfig::unweighted(seed)).expect("default config"),
            Algorithm::InfomapW => return infomap::detect(g, &InfomapConfig::weighted(seed)).expect("default config"),
        }
        .expect("default config")
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected one of copra_uw, copra_w, infomap_uw, infomap_w)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: GenParams,
    pub mu_t_grid: Vec<f64>,
    pub mu_w_grid: Vec<f64>,
    pub reps: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        Self {
            base: GenParams::default(),
            mu_t_grid: grid.clone(),
            mu_w_grid: grid,
            reps: 25,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 0,
            workers: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.mu_t_grid.is_empty() || self.mu_w_grid.is_empty() {
            return bad("mixing grids must be non-empty");
        }
        if let Some(x) = self.mu_t_grid.iter().chain(&self.mu_w_grid).find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(HarnessError::Config(format!("mixing value {x} outside [0, 1]")));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        self.base.validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn network_count(&self) -> usize {
        self.mu_t_grid.len() * self.mu_w_grid.len() * self.reps
    }
}

pub fn network_seed(master: u64, mu_t_index: usize, mu_w_index: usize, rep: usize) -> u64 {
    seed::derive(master, &[mu_t_index as u64, mu_w_index as u64, rep as u64])
}

pub fn algorithm_seed(master: u64, mu_t_index: usize, mu_w_index: usize, rep: usize, alg: Algorithm) -> u64 {
    seed::derive(master, &[mu_t_index as u64, mu_w_index as u64, rep as u64, alg.id()])
}

/// Everything measured on one successfully generated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Measures {
    pub features: FeatureVector,
    pub achieved_mu_t: f64,
    pub achieved_mu_w: f64,
    pub nmi: Vec<(Algorithm, f64)>,
}

impl Measures {
    pub fn scores(&self) -> Vec<AlgorithmScore> {
        self.nmi.iter().map(|&(a, s)| AlgorithmScore { weighted: a.weighted(), nmi: s }).collect()
    }

    fn best(&self, weighted: bool) -> Option<f64> {
        self.nmi.iter().filter(|(a, _)| a.weighted() == weighted).map(|&(_, s)| s).reduce(f64::max)
    }

    pub fn best_weighted(&self) -> Option<f64> {
        self.best(true)
    }

    pub fn best_unweighted(&self) -> Option<f64> {
        self.best(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRecord {
    pub mu_t: f64,
    pub mu_w: f64,
    pub rep: usize,
    pub seed: u64,
    /// Measurements, or the generator stage that failed.
    pub outcome: Result<Measures, String>,
}

/// Generates one network of the sweep and scores every configured algorithm.
pub fn evaluate_network(cfg: &SweepConfig, mu_t_index: usize, mu_w_index: usize, rep: usize) -> NetworkRecord {
    let mu_t = cfg.mu_t_grid[mu_t_index];
    let mu_w = cfg.mu_w_grid[mu_w_index];
    let seed = network_seed(cfg.master_seed, mu_t_index, mu_w_index, rep);
    let params = cfg.base.clone().with_mixing(mu_t, mu_w).with_seed(seed);
    let outcome = generate(&params).map_err(|e| e.stage().to_string()).map(|net| {
        let nmi = cfg
            .algorithms
            .iter()
            .map(|&a| {
                let found = a.run(&net.graph, algorithm_seed(cfg.master_seed, mu_t_index, mu_w_index, rep, a));
                (a, nmi(&net.truth, &found).expect("partitions cover the same nodes"))
            })
            .collect();
        Measures {
            features: extract_features(&net.graph),
            achieved_mu_t: net.achieved_mu_t,
            achieved_mu_w: net.achieved_mu_w,
            nmi,
        }
    });
    NetworkRecord { mu_t, mu_w, rep, seed, outcome }
}

/// All networks of the sweep in grid order (`mu_t`, then `mu_w`, then rep),
/// computed on `cfg.workers` threads.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<NetworkRecord>, HarnessError> {
    cfg.validate()?;
    let mut tasks = Vec::with_capacity(cfg.network_count());
    for it in 0..cfg.mu_t_grid.len() {
        for iw in 0..cfg.mu_w_grid.len() {
            for rep in 0..cfg.reps {
                tasks.push((it, iw, rep));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(pool.install(|| tasks.par_iter().map(|&(it, iw, rep)| evaluate_network(cfg, it, iw, rep)).collect()))
}

/// Formats with at most 9 significant digits.
pub fn fmt9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Results(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One detail row per network and algorithm; failed networks get one flagged
/// row per algorithm.
pub fn detail_csv(records: &[NetworkRecord], algorithms: &[Algorithm]) -> Result<String, HarnessError> {
    let mut rows = Vec::new();
    for r in records {
        let lead = [fmt9(r.mu_t), fmt9(r.mu_w), r.rep.to_string(), r.seed.to_string()];
        match &r.outcome {
            Ok(m) => {
                for &(a, score) in &m.nmi {
                    let mut row = lead.to_vec();
                    row.extend([
                        a.name().to_string(),
                        "ok".to_string(),
                        fmt9(score),
                        fmt9(m.features.c_uw),
                        fmt9(m.features.c_w),
                        fmt9(m.achieved_mu_t),
                        fmt9(m.achieved_mu_w),
                    ]);
                    rows.push(row);
                }
            }
            Err(stage) => {
                for a in algorithms {
                    let mut row = lead.to_vec();
                    row.extend([a.name().to_string(), format!("failed:{stage}")]);
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    rows.push(row);
                }
            }
        }
    }
    csv_string(&DETAIL_COLUMNS, rows)
}

#[derive(Debug, Deserialize)]
struct DetailRow {
    mu_t: f64,
    mu_w: f64,
    rep: usize,
    seed: u64,
    algorithm: String,
    status: String,
    nmi: Option<f64>,
    c_uw: Option<f64>,
    c_w: Option<f64>,
    achieved_mu_t: Option<f64>,
    achieved_mu_w: Option<f64>,
}

/// Reads a detail CSV back into per-network records, in first-seen order.
pub fn parse_detail_csv(text: &str) -> Result<Vec<NetworkRecord>, HarnessError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != DETAIL_COLUMNS {
        return Err(HarnessError::Results(format!("unexpected header {header:?}")));
    }
    let mut records: Vec<NetworkRecord> = Vec::new();
    let mut index: HashMap<(u64, u64, usize, u64), usize> = HashMap::new();
    for (line, row) in reader.deserialize::<DetailRow>().enumerate() {
        let row = row?;
        let at = |m: &str| HarnessError::Results(format!("data row {}: {m}", line + 1));
        let key = (row.mu_t.to_bits(), row.mu_w.to_bits(), row.rep, row.seed);
        let slot = *index.entry(key).or_insert_with(|| {
            records.push(NetworkRecord {
                mu_t: row.mu_t,
                mu_w: row.mu_w,
                rep: row.rep,
                seed: row.seed,
                outcome: Err(String::new()),
            });
            records.len() - 1
        });
        let algorithm: Algorithm = row.algorithm.parse().map_err(|e: String| at(&e))?;
        let rec = &mut records[slot];
        if let Some(stage) = row.status.strip_prefix("failed:") {
            rec.outcome = Err(stage.to_string());
            continue;
        }
        if row.status != "ok" {
            return Err(at(&format!("unknown status {:?}", row.status)));
        }
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| at(&format!("missing {name}")));
        let score = need(row.nmi, "nmi")?;
        let fresh = Measures {
            features: FeatureVector { c_uw: need(row.c_uw, "c_uw")?, c_w: need(row.c_w, "c_w")? },
            achieved_mu_t: need(row.achieved_mu_t, "achieved_mu_t")?,
            achieved_mu_w: need(row.achieved_mu_w, "achieved_mu_w")?,
            nmi: Vec::new(),
        };
        match &mut rec.outcome {
            Ok(m) => {
                if m.nmi.iter().any(|(a, _)| *a == algorithm) {
                    return Err(at(&format!("duplicate {} row", algorithm.name())));
                }
                m.nmi.push((algorithm, score));
            }
            Err(_) => {
                rec.outcome = Ok(Measures { nmi: vec![(algorithm, score)], ..fresh });
            }
        }
    }
    Ok(records)
}

/// Mean and spread of one algorithm (or best-of-class) over a grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mu_t: f64,
    pub mu_w: f64,
    /// Algorithm name, or `best_w` / `best_uw` for the per-network best of
    /// each class.
    pub algorithm: String,
    pub networks: usize,
    pub failed: usize,
    pub mean_nmi: f64,
    pub std_nmi: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups records by cell in first-seen order.
fn cells(records: &[NetworkRecord]) -> Vec<((f64, f64), Vec<&NetworkRecord>)> {
    let mut out: Vec<((f64, f64), Vec<&NetworkRecord>)> = Vec::new();
    let mut index = HashMap::new();
    for r in records {
        let slot = *index.entry((r.mu_t.to_bits(), r.mu_w.to_bits())).or_insert_with(|| {
            out.push(((r.mu_t, r.mu_w), Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(r);
    }
    out
}

/// Per cell: one row per algorithm, then `best_w` and `best_uw` rows for the
/// classes present. The sample standard deviation is used.
pub fn summarize(records: &[NetworkRecord], algorithms: &[Algorithm]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for ((mu_t, mu_w), group) in cells(records) {
        let ok: Vec<&Measures> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let failed = group.len() - ok.len();
        let mut push = |name: String, xs: Vec<f64>| {
            let (mean_nmi, std_nmi) = mean_std(&xs);
            out.push(SummaryRow { mu_t, mu_w, algorithm: name, networks: xs.len(), failed, mean_nmi, std_nmi });
        };
        for &a in algorithms {
            let xs = ok.iter().filter_map(|m| m.nmi.iter().find(|(b, _)| *b == a).map(|&(_, s)| s)).collect();
            push(a.name().to_string(), xs);
        }
        if algorithms.iter().any(|a| a.weighted()) {
            push("best_w".into(), ok.iter().filter_map(|m| m.best_weighted()).collect());
        }
        if algorithms.iter().any(|a| !a.weighted()) {
            push("best_uw".into(), ok.iter().filter_map(|m| m.best_unweighted()).collect());
        }
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, HarnessError> {
    csv_string(
        &SUMMARY_COLUMNS,
        rows.iter().map(|r| {
            vec![
                fmt9(r.mu_t),
                fmt9(r.mu_w),
                r.algorithm.clone(),
                r.networks.to_string(),
                r.failed.to_string(),
                fmt9(r.mean_nmi),
                fmt9(r.std_nmi),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainEvalConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
    pub hyper: SvmHyper,
}

impl Default for TrainEvalConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, threshold: crate::selector::DEFAULT_THRESHOLD, hyper: SvmHyper::default() }
    }
}

/// True and predicted class counts of the test networks in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellClasses {
    pub mu_t: f64,
    pub mu_w: f64,
    pub truth: [usize; 3],
    pub predicted: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub threshold: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub skipped: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`, classes ordered weighted, unweighted, none.
    pub confusion: [[usize; 3]; 3],
    pub cells: Vec<CellClasses>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "networks train {} test {} skipped {}", self.train_count, self.test_count, self.skipped);
        let _ = writeln!(s, "threshold {}", fmt9(self.threshold));
        let _ = writeln!(s, "accuracy {}", fmt9(self.accuracy));
        let _ = writeln!(s);
        let _ = writeln!(s, "confusion matrix (rows true, columns predicted)");
        let _ = writeln!(s, "true\\predicted,weighted,unweighted,none");
        for c in ClassLabel::ALL {
            let row = self.confusion[c.index()];
            let _ = writeln!(s, "{},{},{},{}", c, row[0], row[1], row[2]);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "test classes per cell");
        let _ = writeln!(
            s,
            "mu_t,mu_w,true_weighted,true_unweighted,true_none,predicted_weighted,predicted_unweighted,predicted_none"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt9(c.mu_t),
                fmt9(c.mu_w),
                c.truth[0],
                c.truth[1],
                c.truth[2],
                c.predicted[0],
                c.predicted[1],
                c.predicted[2]
            );
        }
        s
    }
}

/// A successfully measured network with its class label.
fn labelled(records: &[NetworkRecord], threshold: f64) -> Result<Vec<(&NetworkRecord, &Measures, ClassLabel)>, HarnessError> {
    records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r, m)))
        .map(|(r, m)| Ok((r, m, label_network(&m.scores(), threshold)?)))
        .collect()
}

/// Labels every measured network, splits them with a seeded shuffle, trains
/// a selector on the training part and evaluates it on the rest.
pub fn train_eval(records: &[NetworkRecord], cfg: &TrainEvalConfig) -> Result<(SelectorModel, EvalReport), HarnessError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(HarnessError::Config("train fraction must lie strictly between 0 and 1".into()));
    }
    let items = labelled(records, cfg.threshold)?;
    let skipped = records.len() - items.len();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut seed::rng(cfg.seed));
    let n_train = (cfg.train_fraction * items.len() as f64).round() as usize;
    let (train_idx, test_idx) = order.split_at(n_train);
    let train: Vec<(FeatureVector, ClassLabel)> = train_idx.iter().map(|&i| (items[i].1.features, items[i].2)).collect();
    let model = train_selector(&train, &cfg.hyper, cfg.threshold)?;

    let mut test_idx = test_idx.to_vec();
    test_idx.sort_unstable();
    let mut confusion = [[0usize; 3]; 3];
    let mut grid: Vec<CellClasses> = Vec::new();
    let mut grid_index = HashMap::new();
    for &i in &test_idx {
        let (r, m, truth) = items[i];
        let predicted = model.predict(&m.features);
        confusion[truth.index()][predicted.index()] += 1;
        let slot = *grid_index.entry((r.mu_t.to_bits(), r.mu_w.to_bits())).or_insert_with(|| {
            grid.push(CellClasses { mu_t: r.mu_t, mu_w: r.mu_w, truth: [0; 3], predicted: [0; 3] });
            grid.len() - 1
        });
        grid[slot].truth[truth.index()] += 1;
        grid[slot].predicted[predicted.index()] += 1;
    }
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let accuracy = if test_idx.is_empty() { f64::NAN } else { correct as f64 / test_idx.len() as f64 };
    let report = EvalReport {
        threshold: cfg.threshold,
        train_count: train.len(),
        test_count: test_idx.len(),
        skipped,
        accuracy,
        confusion,
        cells: grid,
    };
    Ok((model, report))
}

/// Mean NMI per cell of the best weighted detector, the best unweighted
/// detector, and the class the model picks for each network.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub mu_t: f64,
    pub mu_w: f64,
    pub networks: usize,
    pub best_weighted: f64,
    pub best_unweighted: f64,
    pub selected: f64,
    /// Networks predicted `None`; these are scored with the unweighted class.
    pub none_predictions: usize,
}

pub fn report_selection(records: &[NetworkRecord], model: &SelectorModel) -> Result<Vec<SelectionRow>, HarnessError> {
    let mut out = Vec::new();
    for ((mu_t, mu_w), group) in cells(records) {
        let mut w = Vec::new();
        let mut uw = Vec::new();
        let mut sel = Vec::new();
        let mut none_predictions = 0;
        for m in group.iter().filter_map(|r| r.outcome.as_ref().ok()) {
            let (Some(bw), Some(bu)) = (m.best_weighted(), m.best_unweighted()) else {
                return Err(HarnessError::Results(format!(
                    "network at mu_t={mu_t}, mu_w={mu_w} lacks a weighted or an unweighted score"
                )));
            };
            w.push(bw);
            uw.push(bu);
            sel.push(match model.predict(&m.features) {
                ClassLabel::Weighted => bw,
                ClassLabel::Unweighted => bu,
                ClassLabel::None => {
                    none_predictions += 1;
                    bu
                }
            });
        }
        out.push(SelectionRow {
            mu_t,
            mu_w,
            networks: sel.len(),
            best_weighted: mean_std(&w).0,
            best_unweighted: mean_std(&uw).0,
            selected: mean_std(&sel).0,
            none_predictions,
        });
    }
    Ok(out)
}

pub fn selection_csv(rows: &[SelectionRow]) -> Result<String, HarnessError> {
    csv_string(
        &SELECTION_COLUMNS,
        rows.iter().map(|r| {
            vec![
                fmt9(r.mu_t),
                fmt9(r.mu_w),
                r.networks.to_string(),
                fmt9(r.best_weighted),
                fmt9(r.best_unweighted),
                fmt9(r.selected),
                r.none_predictions.to_string(),
            ]
        }),
    )
}
