//! Algorithm-class selection from the two mean clustering coefficients.
//!
//! Three linear SVMs, one per pair of classes, are trained on standardised
//! features and combined by majority vote.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::graph::Graph;
use crate::metrics::mean_clustering;
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 0.6;
const HEADER: &str = "commselect-svm v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    #[error("no scores to label")]
    EmptyScores,
    #[error("score {0} outside [0, 1]")]
    ScoreRange(f64),
    #[error("training data needs both classes; only {0} present")]
    SingleClass(ClassLabel),
    #[error("training data has no {0} examples")]
    MissingClass(ClassLabel),
    #[error("training data is empty")]
    EmptyData,
    #[error("invalid hyperparameters: {0}")]
    Hyper(&'static str),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Class of detector recommended for a network. `None` means no detector is
/// expected to recover the communities well.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Weighted,
    Unweighted,
    None,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Weighted, ClassLabel::Unweighted, ClassLabel::None];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Weighted => "weighted",
            ClassLabel::Unweighted => "unweighted",
            ClassLabel::None => "none",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "weighted" | "w" => Ok(ClassLabel::Weighted),
            "unweighted" | "uw" | "u" => Ok(ClassLabel::Unweighted),
            "none" | "n" => Ok(ClassLabel::None),
            _ => Err(format!("unknown class {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub c_uw: f64,
    pub c_w: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 2] {
        [self.c_uw, self.c_w]
    }
}

pub fn extract_features(g: &Graph) -> FeatureVector {
    let s = mean_clustering(g);
    FeatureVector { c_uw: s.mean_c_uw, c_w: s.mean_c_w }
}

/// NMI achieved by one detector, tagged by whether it uses weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmScore {
    pub weighted: bool,
    pub nmi: f64,
}

/// Class of the best-scoring detector, or `None` if even the best is below
/// `threshold`. An exact tie between the classes goes to `Unweighted`.
pub fn label_network(scores: &[AlgorithmScore], threshold: f64) -> Result<ClassLabel, SelectorError> {
    if scores.is_empty() {
        return Err(SelectorError::EmptyScores);
    }
    let mut best_w = f64::NEG_INFINITY;
    let mut best_uw = f64::NEG_INFINITY;
    for s in scores {
        if !(0.0..=1.0).contains(&s.nmi) {
            return Err(SelectorError::ScoreRange(s.nmi));
        }
        let slot = if s.weighted { &mut best_w } else { &mut best_uw };
        *slot = slot.max(s.nmi);
    }
    Ok(if best_w.max(best_uw) < threshold {
        ClassLabel::None
    } else if best_uw >= best_w {
        ClassLabel::Unweighted
    } else {
        ClassLabel::Weighted
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyper {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self { c: 1.0, epochs: 200, seed: 0 }
    }
}

/// Linear classifier `w . x + b`; a non-negative margin votes for `positive`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySVM {
    pub weights: [f64; 2],
    pub bias: f64,
    pub positive: ClassLabel,
    pub negative: ClassLabel,
}

impl BinarySVM {
    pub fn margin(&self, x: [f64; 2]) -> f64 {
        self.weights[0] * x[0] + self.weights[1] * x[1] + self.bias
    }

    pub fn vote(&self, x: [f64; 2]) -> ClassLabel {
        if self.margin(x) >= 0.0 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// Soft-margin linear SVM by stochastic subgradient descent on
/// `lambda/2 |w|^2 + mean hinge` with `lambda = 1 / (C n)` and step
/// `1 / (lambda t)`. The bias is an extra constant feature. Labels in `data`
/// are `+1.0` for `positive` and `-1.0` for `negative`. Returns the average of
/// the iterates over the final epoch.
pub fn train_binary(
    data: &[([f64; 2], f64)],
    positive: ClassLabel,
    negative: ClassLabel,
    hyper: &SvmHyper,
) -> Result<BinarySVM, SelectorError> {
    if !(hyper.c > 0.0 && hyper.c.is_finite()) {
        return Err(SelectorError::Hyper("C must be positive"));
    }
    if hyper.epochs == 0 {
        return Err(SelectorError::Hyper("epochs must be at least 1"));
    }
    if positive == negative {
        return Err(SelectorError::Hyper("class pair must be distinct"));
    }
    if data.is_empty() {
        return Err(SelectorError::EmptyData);
    }
    let has_pos = data.iter().any(|d| d.1 > 0.0);
    let has_neg = data.iter().any(|d| d.1 < 0.0);
    if !has_pos {
        return Err(SelectorError::SingleClass(negative));
    }
    if !has_neg {
        return Err(SelectorError::SingleClass(positive));
    }

    let n = data.len();
    let lambda = 1.0 / (hyper.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = [0.0f64; 3];
    let mut avg = [0.0f64; 3];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(hyper.seed);
    let mut t = 0u64;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (x, y) = data[i];
            let xa = [x[0], x[1], 1.0];
            let eta = 1.0 / (lambda * t as f64);
            let score = w[0] * xa[0] + w[1] * xa[1] + w[2];
            let shrink = 1.0 - eta * lambda;
            for d in 0..3 {
                w[d] *= shrink;
            }
            if y * score < 1.0 {
                for d in 0..3 {
                    w[d] += eta * y * xa[d];
                }
            }
            let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            if norm > radius {
                for d in w.iter_mut() {
                    *d *= radius / norm;
                }
            }
            if epoch + 1 == hyper.epochs {
                for d in 0..3 {
                    avg[d] += w[d] / n as f64;
                }
            }
        }
    }
    Ok(BinarySVM { weights: [avg[0], avg[1]], bias: avg[2], positive, negative })
}

/// Outcome of a prediction together with each classifier's vote and margin,
/// in the order of [`SelectorModel::classifiers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    pub votes: [ClassLabel; 3],
    pub margins: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorModel {
    /// Weighted vs unweighted, weighted vs none, unweighted vs none.
    pub classifiers: [BinarySVM; 3],
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub threshold: f64,
    pub hyper: SvmHyper,
}

const PAIRS: [(ClassLabel, ClassLabel); 3] = [
    (ClassLabel::Weighted, ClassLabel::Unweighted),
    (ClassLabel::Weighted, ClassLabel::None),
    (ClassLabel::Unweighted, ClassLabel::None),
];

/// Standardises with statistics of the full dataset and trains one SVM per
/// class pair; pair `i` uses seed `derive(hyper.seed, [i])`. A feature with
/// zero spread keeps unit scale.
pub fn train_selector(
    dataset: &[(FeatureVector, ClassLabel)],
    hyper: &SvmHyper,
    threshold: f64,
) -> Result<SelectorModel, SelectorError> {
    for class in ClassLabel::ALL {
        if !dataset.iter().any(|d| d.1 == class) {
            return Err(SelectorError::MissingClass(class));
        }
    }
    let n = dataset.len() as f64;
    let mut mean = [0.0; 2];
    let mut std = [0.0; 2];
    for d in 0..2 {
        mean[d] = dataset.iter().map(|(f, _)| f.as_array()[d]).sum::<f64>() / n;
        let var = dataset.iter().map(|(f, _)| (f.as_array()[d] - mean[d]).powi(2)).sum::<f64>() / n;
        std[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let scale = |f: &FeatureVector| standardize(f.as_array(), &mean, &std);
    let mut classifiers = Vec::with_capacity(3);
    for (i, &(pos, neg)) in PAIRS.iter().enumerate() {
        let subset: Vec<([f64; 2], f64)> = dataset
            .iter()
            .filter(|(_, l)| *l == pos || *l == neg)
            .map(|(f, l)| (scale(f), if *l == pos { 1.0 } else { -1.0 }))
            .collect();
        let h = SvmHyper { seed: seed::derive(hyper.seed, &[i as u64]), ..*hyper };
        classifiers.push(train_binary(&subset, pos, neg, &h)?);
    }
    Ok(SelectorModel {
        classifiers: [classifiers[0], classifiers[1], classifiers[2]],
        mean,
        std,
        threshold,
        hyper: *hyper,
    })
}

fn standardize(x: [f64; 2], mean: &[f64; 2], std: &[f64; 2]) -> [f64; 2] {
    [(x[0] - mean[0]) / std[0], (x[1] - mean[1]) / std[1]]
}

impl SelectorModel {
    pub fn predict(&self, f: &FeatureVector) -> ClassLabel {
        self.predict_with_margins(f).label
    }

    /// Majority of the three votes; with one vote each, the classifier with
    /// the largest absolute margin decides.
    pub fn predict_with_margins(&self, f: &FeatureVector) -> Prediction {
        let x = standardize(f.as_array(), &self.mean, &self.std);
        let margins = self.classifiers.map(|c| c.margin(x));
        let votes = [0, 1, 2].map(|i| self.classifiers[i].vote(x));
        Prediction { label: tally(&votes, &margins), votes, margins }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        out += &format!("mean {} {}\n", self.mean[0], self.mean[1]);
        out += &format!("std {} {}\n", self.std[0], self.std[1]);
        for c in &self.classifiers {
            out += &format!("pair {} {} {} {} {}\n", c.positive, c.negative, c.weights[0], c.weights[1], c.bias);
        }
        out += &format!("hyper {} {} {}\n", self.hyper.c, self.hyper.epochs, self.hyper.seed);
        out += &format!("threshold {}\n", self.threshold);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SelectorError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, msg: &str| SelectorError::Format { line: line + 1, msg: msg.to_string() };
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            Some((i, _)) => return Err(err(i, "missing header")),
            None => return Err(err(0, "empty model file")),
        }
        let mut mean = None;
        let mut std = None;
        let mut classifiers = Vec::new();
        let mut hyper = None;
        let mut threshold = None;
        for (i, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64, SelectorError> {
                let v: f64 = s.parse().map_err(|_| err(i, &format!("bad number {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(i, "non-finite value"))
                }
            };
            match fields.as_slice() {
                ["mean", a, b] => mean = Some([num(a)?, num(b)?]),
                ["std", a, b] => {
                    let s = [num(a)?, num(b)?];
                    if s.iter().any(|&v| v <= 0.0) {
                        return Err(err(i, "standard deviations must be positive"));
                    }
                    std = Some(s);
                }
                ["pair", p, q, w0, w1, b] => {
                    let positive: ClassLabel = p.parse().map_err(|e: String| err(i, &e))?;
                    let negative: ClassLabel = q.parse().map_err(|e: String| err(i, &e))?;
                    classifiers.push(BinarySVM { weights: [num(w0)?, num(w1)?], bias: num(b)?, positive, negative });
                }
                ["hyper", c, e, s] => {
                    hyper = Some(SvmHyper {
                        c: num(c)?,
                        epochs: e.parse().map_err(|_| err(i, "bad epochs"))?,
                        seed: s.parse().map_err(|_| err(i, "bad seed"))?,
                    })
                }
                ["threshold", t] => threshold = Some(num(t)?),
                _ => return Err(err(i, &format!("unrecognised line {line:?}"))),
            }
        }
        let pairs: Vec<_> = classifiers.iter().map(|c| (c.positive, c.negative)).collect();
        if pairs != PAIRS {
            return Err(err(0, "expected exactly the three class pairs in order"));
        }
        Ok(SelectorModel {
            classifiers: [classifiers[0], classifiers[1], classifiers[2]],
            mean: mean.ok_or_else(|| err(0, "missing mean"))?,
            std: std.ok_or_else(|| err(0, "missing std"))?,
            threshold: threshold.ok_or_else(|| err(0, "missing threshold"))?,
            hyper: hyper.ok_or_else(|| err(0, "missing hyper"))?,
        })
    }
}

fn tally(votes: &[ClassLabel; 3], margins: &[f64; 3]) -> ClassLabel {
    let mut counts = [0usize; 3];
    for v in votes {
        counts[v.index()] += 1;
    }
    if let Some(c) = ClassLabel::ALL.into_iter().find(|c| counts[c.index()] >= 2) {
        return c;
    }
    let mut best = 0;
    for i in 1..3 {
        if margins[i].abs() > margins[best].abs() {
            best = i;
        }
    }
    votes[best]
}
