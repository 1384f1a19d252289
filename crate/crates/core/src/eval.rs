//! Experiment harness: splits, confusion matrices, ROC curves, angle-binned
//! and polarimetric experiments, and report serialization.

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::persist::Model;
use crate::classify::{
    build_observation_matrix, cgbc_classify, cgbc_train, md_pcann_classify, md_pcann_train, pcann_classify,
    pcann_train, variance_fraction, CgbcModel, ClassifierKind, Decision, MdPcannModel, PcannModel,
};
use crate::config::{ClassifierConfig, RunConfig};
use crate::dataset::{in_bin, regenerate_equal_support, CollectionMode, Dataset, DatasetClip};
use crate::error::{Error, Result};
use crate::imaging::{ClipMeta, ImageClip};
use crate::polarimetry::{FeatureCube, Parameter};

/// Elevations closer than this are considered equal, degrees.
const ELEVATION_TOLERANCE: f64 = 1e-9;

/// Anything carrying clip metadata.
pub trait Tagged {
    fn meta(&self) -> &ClipMeta;
}

impl Tagged for ImageClip {
    fn meta(&self) -> &ClipMeta {
        &self.meta
    }
}

impl Tagged for FeatureCube {
    fn meta(&self) -> &ClipMeta {
        &self.meta
    }
}

impl Tagged for DatasetClip {
    fn meta(&self) -> &ClipMeta {
        &self.clip().meta
    }
}

impl<T: Tagged> Tagged for &T {
    fn meta(&self) -> &ClipMeta {
        (*self).meta()
    }
}

/// Partitions by receiver elevation. Items at other elevations are dropped.
pub fn split_train_test<T: Tagged>(items: &[T], train_elevation: f64, test_elevation: f64) -> Result<(Vec<&T>, Vec<&T>)> {
    let near = |a: f64, b: f64| (a - b).abs() <= ELEVATION_TOLERANCE;
    let train: Vec<&T> = items.iter().filter(|c| near(c.meta().rx_elevation, train_elevation)).collect();
    let test: Vec<&T> = items.iter().filter(|c| near(c.meta().rx_elevation, test_elevation)).collect();
    if train.is_empty() {
        return Err(Error::EmptySplit(format!("no clips at training elevation {train_elevation}°")));
    }
    if test.is_empty() {
        return Err(Error::EmptySplit(format!("no clips at test elevation {test_elevation}°")));
    }
    Ok((train, test))
}

/// A trained classifier over samples of one kind.
pub trait Classifier: Sync {
    type Sample: Tagged + Sync;
    fn classes(&self) -> &[String];
    fn decide(&self, sample: &Self::Sample) -> Result<Decision>;
}

impl Classifier for PcannModel {
    type Sample = ImageClip;
    fn classes(&self) -> &[String] {
        &self.classes
    }
    fn decide(&self, sample: &ImageClip) -> Result<Decision> {
        pcann_classify(self, sample)
    }
}

impl Classifier for CgbcModel {
    type Sample = ImageClip;
    fn classes(&self) -> &[String] {
        &self.classes
    }
    fn decide(&self, sample: &ImageClip) -> Result<Decision> {
        cgbc_classify(self, sample)
    }
}

impl Classifier for MdPcannModel {
    type Sample = FeatureCube;
    fn classes(&self) -> &[String] {
        &self.classes
    }
    fn decide(&self, sample: &FeatureCube) -> Result<Decision> {
        md_pcann_classify(self, sample)
    }
}

impl Classifier for Model {
    type Sample = DatasetClip;
    fn classes(&self) -> &[String] {
        Model::classes(self)
    }
    fn decide(&self, sample: &DatasetClip) -> Result<Decision> {
        match self {
            Model::Pcann(m) => pcann_classify(m, sample.clip()),
            Model::Cgbc(m) => cgbc_classify(m, sample.clip()),
            Model::MdPcann(m) => {
                let cube = sample
                    .cube
                    .as_ref()
                    .ok_or_else(|| Error::ShapeMismatch("md-PCANN needs feature cubes".into()))?;
                md_pcann_classify(m, &cube.select(&m.selected)?)
            }
        }
    }
}

/// Counts with rows indexed by true class and columns by prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let c = classes.len();
        Self {
            classes,
            counts: vec![vec![0; c]; c],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total; zero when empty.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }

    /// Per-class recall; `None` for classes absent from the test set.
    pub fn class_accuracy(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }
}

fn class_of(classes: &[String], label: &str) -> Result<usize> {
    classes
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| Error::Validation(format!("test label `{label}` is not a model class")))
}

/// Classifies every sample in parallel; decisions come back in input order.
pub fn decide_all<C: Classifier>(model: &C, samples: &[&C::Sample]) -> Result<Vec<Decision>> {
    samples.par_iter().map(|s| model.decide(s)).collect()
}

pub fn evaluate_confusion<C: Classifier>(model: &C, samples: &[&C::Sample]) -> Result<ConfusionMatrix> {
    Ok(confusion_from(model.classes(), samples, &decide_all(model, samples)?)?)
}

fn confusion_from<T: Tagged>(classes: &[String], samples: &[&T], decisions: &[Decision]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(classes.to_vec());
    for (s, d) in samples.iter().zip(decisions) {
        cm.record(class_of(classes, &s.meta().class_label)?, d.class_index);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub target: String,
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps the decision threshold over every distinct score, highest first,
/// predicting the target when `score >= threshold`. The curve starts at
/// `(+inf, 0, 0)` and ends at `(1, 1)`; the area uses the trapezoid rule.
pub fn roc_curve(scores: &[(f64, bool)], target: &str) -> Result<RocCurve> {
    if let Some(bad) = scores.iter().find(|(s, _)| s.is_nan()) {
        return Err(Error::Validation(format!("score {} is not a number", bad.0)));
    }
    let pos = scores.iter().filter(|(_, t)| *t).count() as u64;
    let neg = scores.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "`{target}` needs positive and negative examples, got {pos} and {neg}"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of one positive times one negative.
    let mut twice_area = 0u128;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp0) as u128 * (tp + tp0) as u128;
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve {
        target: target.to_string(),
        points,
        auc,
    })
}

/// One-vs-rest curve per class from decision scores.
pub fn class_rocs<T: Tagged>(classes: &[String], samples: &[&T], decisions: &[Decision]) -> Result<Vec<RocCurve>> {
    let truth = samples
        .iter()
        .map(|s| class_of(classes, &s.meta().class_label))
        .collect::<Result<Vec<_>>>()?;
    classes
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let scores: Vec<(f64, bool)> = decisions.iter().zip(&truth).map(|(d, &t)| (d.one_vs_rest(c), t == c)).collect();
            roc_curve(&scores, name)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub configuration: String,
    pub bin: Option<[f64; 2]>,
    pub equal_support: bool,
    pub classifier: String,
    /// Parameter names for polarimetric rows.
    pub parameters: Option<Vec<String>>,
    pub n_train: usize,
    pub confusion: ConfusionMatrix,
}

impl AccuracyRow {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<AccuracyRow>,
    pub rocs: Vec<RocCurve>,
}

impl ExperimentReport {
    pub fn new(dataset: &Dataset) -> Self {
        Self {
            config_hash: dataset.config_hash(),
            seed: dataset.config.seed,
            rows: Vec::new(),
            rocs: Vec::new(),
        }
    }

    /// Largest minus smallest accuracy over the rows.
    pub fn spread(&self) -> f64 {
        let acc = self.rows.iter().map(|r| r.accuracy());
        acc.clone().fold(f64::MIN, f64::max) - acc.fold(f64::MAX, f64::min)
    }
}

/// A trained model together with its training summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: Model,
    /// Variance captured by the retained components (PCANN only).
    pub variance_fraction: Option<f64>,
}

pub fn train_model(cfg: &RunConfig, kind: ClassifierKind, train: &[&DatasetClip]) -> Result<Trained> {
    let clips: Vec<ImageClip> = train.iter().map(|c| c.clip().clone()).collect();
    let c = &cfg.classifier;
    match kind {
        ClassifierKind::Pcann => {
            let obs = build_observation_matrix(&clips, c.pixel_mode, c.normalization)?;
            let m = pcann_train(&obs, c.n)?;
            let vf = variance_fraction(&m, c.n);
            Ok(Trained {
                model: Model::Pcann(m),
                variance_fraction: Some(vf),
            })
        }
        ClassifierKind::Cgbc => Ok(Trained {
            model: Model::Cgbc(cgbc_train(&clips, c.bin_width, c.sigma_floor)?),
            variance_fraction: None,
        }),
    }
}

fn cubes_of(clips: &[&DatasetClip], selected: &[Parameter]) -> Result<Vec<FeatureCube>> {
    clips
        .iter()
        .map(|c| {
            c.cube
                .as_ref()
                .ok_or_else(|| Error::ShapeMismatch(format!("clip {} has no feature cube", c.spec.index)))?
                .select(selected)
        })
        .collect()
}

pub fn train_md_model(cfg: &RunConfig, train: &[&DatasetClip], selected: &[Parameter]) -> Result<Trained> {
    let cubes = cubes_of(train, selected)?;
    let n_par = cfg.polarimetry.n_par.min(selected.len());
    Ok(Trained {
        model: Model::MdPcann(md_pcann_train(&cubes, cfg.polarimetry.n_pix, n_par)?),
        variance_fraction: None,
    })
}

fn kind_name(kind: ClassifierKind) -> &'static str {
    match kind {
        ClassifierKind::Pcann => "pcann",
        ClassifierKind::Cgbc => "cgbc",
    }
}

/// Train and test clips of the dataset collected in `mode`.
pub fn mode_split(dataset: &Dataset, mode: CollectionMode) -> Result<(Vec<&DatasetClip>, Vec<&DatasetClip>)> {
    let clips = dataset.filter(|c| c.spec.mode == mode);
    let cfg = &dataset.config;
    let (train, test) = split_train_test(&clips, cfg.train_elevation, cfg.test_elevation)?;
    Ok((train.into_iter().copied().collect(), test.into_iter().copied().collect()))
}

fn run_row(
    cfg: &RunConfig,
    configuration: String,
    kind: ClassifierKind,
    train: &[&DatasetClip],
    test: &[&DatasetClip],
) -> Result<(AccuracyRow, Vec<Decision>)> {
    let trained = train_model(cfg, kind, train)?;
    let decisions = decide_all(&trained.model, test)?;
    let confusion = confusion_from(trained.model.classes(), test, &decisions)?;
    Ok((
        AccuracyRow {
            configuration,
            bin: None,
            equal_support: false,
            classifier: kind_name(kind).to_string(),
            parameters: None,
            n_train: train.len(),
            confusion,
        },
        decisions,
    ))
}

/// Trains on all training clips of `mode` and tests on all test clips;
/// attaches one-vs-rest ROC curves.
pub fn plain_experiment(dataset: &Dataset, mode: CollectionMode, kind: ClassifierKind) -> Result<ExperimentReport> {
    let (train, test) = mode_split(dataset, mode)?;
    let name = match mode {
        CollectionMode::Monostatic => "monostatic",
        CollectionMode::Bistatic => "bistatic",
    };
    let (row, decisions) = run_row(&dataset.config, name.to_string(), kind, &train, &test)?;
    let rocs = class_rocs(&row.confusion.classes, &test, &decisions)?;
    let mut report = ExperimentReport::new(dataset);
    report.rows.push(row);
    report.rocs = rocs;
    Ok(report)
}

/// Restricts both splits to bistatic clips whose mean bistatic angle falls
/// in `bins[index]`.
pub fn bin_split<'a>(dataset: &'a Dataset, bins: &[[f64; 2]], index: usize) -> Result<(Vec<&'a DatasetClip>, Vec<&'a DatasetClip>)> {
    let bin = bins[index];
    let last = index + 1 == bins.len();
    let (train, test) = mode_split(dataset, CollectionMode::Bistatic)?;
    let keep = |v: Vec<&'a DatasetClip>| -> Vec<&'a DatasetClip> {
        v.into_iter().filter(|c| in_bin(c.mean_bistatic_angle(), bin, last)).collect()
    };
    let (train, test) = (keep(train), keep(test));
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyBin(format!(
            "[{}°, {}°] holds {} training and {} test clips",
            bin[0],
            bin[1],
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

/// One accuracy row per bin; each row's result is reported separately so a
/// failing bin does not hide the others. Classifiers are trained with the
/// hyperparameters in `classifier`.
pub fn angle_binned_rows(
    dataset: &Dataset,
    classifier: &ClassifierConfig,
    bins: &[[f64; 2]],
    equal_support: bool,
    kind: ClassifierKind,
) -> Result<Vec<Result<AccuracyRow>>> {
    let regenerated;
    let cfg = RunConfig {
        classifier: classifier.clone(),
        ..dataset.config.clone()
    };
    let data = if equal_support {
        regenerated = regenerate_equal_support(dataset)?;
        &regenerated
    } else {
        dataset
    };
    Ok((0..bins.len())
        .into_par_iter()
        .map(|i| {
            let (train, test) = bin_split(data, bins, i)?;
            let name = format!("bin {}-{}", bins[i][0], bins[i][1]);
            let (mut row, _) = run_row(&cfg, name, kind, &train, &test)?;
            row.bin = Some(bins[i]);
            row.equal_support = equal_support;
            Ok(row)
        })
        .collect())
}

pub fn angle_binned_experiment(
    dataset: &Dataset,
    bins: &[[f64; 2]],
    equal_support: bool,
    kind: ClassifierKind,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(dataset);
    for row in angle_binned_rows(dataset, &dataset.config.classifier, bins, equal_support, kind)? {
        report.rows.push(row?);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// The first `p` parameters for `p = 1..=16`.
    Prefix,
    /// The first eight plus each bistatic parameter in turn.
    Ninth,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix" => Ok(SweepMode::Prefix),
            "ninth" => Ok(SweepMode::Ninth),
            other => Err(Error::Validation(format!("unknown sweep `{other}`, expected prefix or ninth"))),
        }
    }
}

/// Parameter selections visited by a sweep.
pub fn sweep_selections(mode: SweepMode) -> Vec<Vec<Parameter>> {
    match mode {
        SweepMode::Prefix => (1..=Parameter::ALL.len()).map(Parameter::first).collect(),
        SweepMode::Ninth => Parameter::BISTATIC
            .iter()
            .map(|&p| {
                let mut sel = Parameter::first(8);
                sel.push(p);
                sel.sort();
                sel
            })
            .collect(),
    }
}

/// md-PCANN accuracy per parameter selection on the bistatic clips.
pub fn polarimetric_ablation(dataset: &Dataset, mode: SweepMode) -> Result<ExperimentReport> {
    let (train, test) = mode_split(dataset, CollectionMode::Bistatic)?;
    let rows = sweep_selections(mode)
        .into_par_iter()
        .map(|sel| {
            let trained = train_md_model(&dataset.config, &train, &sel)?;
            let names: Vec<String> = sel.iter().map(|p| p.name().to_string()).collect();
            Ok(AccuracyRow {
                configuration: format!("p={} {}", sel.len(), names.join("+")),
                bin: None,
                equal_support: false,
                classifier: "md-pcann".to_string(),
                parameters: Some(names),
                n_train: train.len(),
                confusion: evaluate_confusion(&trained.model, &test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new(dataset);
    report.rows = rows;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_text(records: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

/// One row per configuration with per-class and pooled accuracy columns.
pub fn accuracy_csv(report: &ExperimentReport) -> String {
    let classes: Vec<String> = report.rows.first().map(|r| r.confusion.classes.clone()).unwrap_or_default();
    let mut header: Vec<String> = [
        "config_hash",
        "configuration",
        "bin_low",
        "bin_high",
        "equal_support",
        "classifier",
        "parameters",
        "n_train",
        "n_test",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(classes.iter().map(|c| format!("accuracy_{c}")));
    header.push("accuracy".into());
    let mut records = vec![header];
    for r in &report.rows {
        let mut rec = vec![
            report.config_hash.clone(),
            r.configuration.clone(),
            opt(r.bin.map(|b| b[0])),
            opt(r.bin.map(|b| b[1])),
            r.equal_support.to_string(),
            r.classifier.clone(),
            r.parameters.as_ref().map(|p| p.join("+")).unwrap_or_default(),
            r.n_train.to_string(),
            r.confusion.total().to_string(),
        ];
        rec.extend(r.confusion.class_accuracy().into_iter().map(opt));
        rec.push(r.accuracy().to_string());
        records.push(rec);
    }
    csv_text(records)
}

/// Rows are true classes, columns predictions.
pub fn confusion_csv(config_hash: &str, cm: &ConfusionMatrix) -> String {
    let mut header = vec!["config_hash".to_string(), "true_class".to_string()];
    header.extend(cm.classes.iter().cloned());
    let mut records = vec![header];
    for (name, row) in cm.classes.iter().zip(&cm.counts) {
        let mut rec = vec![config_hash.to_string(), name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        records.push(rec);
    }
    csv_text(records)
}

pub fn roc_csv(config_hash: &str, roc: &RocCurve) -> String {
    let mut records = vec![["config_hash", "target", "threshold", "fpr", "tpr"].map(String::from).to_vec()];
    for p in &roc.points {
        records.push(vec![
            config_hash.to_string(),
            roc.target.clone(),
            p.threshold.to_string(),
            p.fpr.to_string(),
            p.tpr.to_string(),
        ]);
    }
    csv_text(records)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    configuration: &'a str,
    classifier: &'a str,
    bin: Option<[f64; 2]>,
    equal_support: bool,
    parameters: Option<&'a [String]>,
    accuracy: f64,
    class_accuracy: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    seed: u64,
    classes: Vec<String>,
    rows: Vec<SummaryRow<'a>>,
    auc: Vec<(&'a str, f64)>,
    errors: &'a [String],
}

/// JSON summary with the config hash, seed, accuracies, AUCs and any
/// per-configuration errors.
pub fn summary_json(report: &ExperimentReport, errors: &[String]) -> String {
    let summary = Summary {
        config_hash: &report.config_hash,
        seed: report.seed,
        classes: report.rows.first().map(|r| r.confusion.classes.clone()).unwrap_or_default(),
        rows: report
            .rows
            .iter()
            .map(|r| SummaryRow {
                configuration: &r.configuration,
                classifier: &r.classifier,
                bin: r.bin,
                equal_support: r.equal_support,
                parameters: r.parameters.as_deref(),
                accuracy: r.accuracy(),
                class_accuracy: r.confusion.class_accuracy(),
            })
            .collect(),
        auc: report.rocs.iter().map(|r| (r.target.as_str(), r.auc)).collect(),
        errors,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
}
