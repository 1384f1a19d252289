use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bisar::classify::persist::{load_model, save_model, Model, ModelFile};
use bisar::classify::ClassifierKind;
use bisar::clipio::{read_file, ClipFile};
use bisar::config::{ClassifierConfig, RunConfig};
use bisar::dataset::{generate, load_dataset, write_dataset, CollectionMode, Dataset, DatasetClip, MANIFEST_FILE};
use bisar::eval::{
    accuracy_csv, angle_binned_rows, class_rocs, confusion_csv, decide_all, mode_split, polarimetric_ablation,
    roc_csv, summary_json, train_md_model, train_model, AccuracyRow, ConfusionMatrix, ExperimentReport, SweepMode,
};
use bisar::imaging::{mainlobe_width, Axis, ImageClip};
use bisar::Error;

/// Bistatic SAR dataset generation and target recognition experiments.
#[derive(Parser)]
#[command(name = "bisar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bistatic,
    Monostatic,
}

impl From<Mode> for CollectionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Bistatic => CollectionMode::Bistatic,
            Mode::Monostatic => CollectionMode::Monostatic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pcann,
    Cgbc,
    #[value(name = "md-pcann")]
    MdPcann,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Prefix,
    Ninth,
}

impl From<Sweep> for SweepMode {
    fn from(s: Sweep) -> Self {
        match s {
            Sweep::Prefix => SweepMode::Prefix,
            Sweep::Ninth => SweepMode::Ninth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write clip files plus a manifest.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on the training split of a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the kind named in the dataset config.
        #[arg(long, value_enum)]
        classifier: Option<Kind>,
        #[arg(long, value_enum, default_value = "bistatic")]
        mode: Mode,
        /// Retained principal components (PCANN).
        #[arg(long)]
        n: Option<usize>,
        /// Receiver azimuth bin width in degrees (CGBC).
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Score a model on the test split and run the requested experiments.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "bistatic")]
        mode: Mode,
        /// Write one-vs-rest ROC curves per target class.
        #[arg(long)]
        roc: bool,
        /// Retrain and test inside each configured bistatic angle bin.
        #[arg(long)]
        angle_bins: bool,
        /// Add angle-bin rows on equal k-space support; implies --angle-bins.
        #[arg(long)]
        equal_support: bool,
        /// md-PCANN accuracy per polarimetric parameter selection.
        #[arg(long, value_enum)]
        polar_sweep: Option<Sweep>,
    },
    /// Summarize a clip or feature-cube file.
    Inspect { file: PathBuf },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("BISAR_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("BISAR_THREADS must be a non-negative integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn hint(err: &Error) -> Option<&'static str> {
    match err {
        Error::RankDeficient(_) => Some("lower classifier.n or generate more clips per class"),
        Error::EmptySplit(_) => Some("the dataset needs clips at both the train and the test elevation"),
        Error::TooFewClips(_) => Some("generate more clips per class"),
        Error::HashMismatch { .. } => Some("the model was trained on a different dataset; retrain it"),
        _ => None,
    }
}

fn with_hint(err: Error) -> anyhow::Error {
    match hint(&err) {
        Some(h) => anyhow::anyhow!("{err}\nhint: {h}"),
        None => err.into(),
    }
}

fn cmd_generate(config: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::load(config).map_err(anyhow::Error::new)?;
    let dataset = generate(&cfg)?;
    let manifest = write_dataset(&dataset, out)?;
    let files: usize = manifest
        .clips
        .iter()
        .map(|c| c.files.len() + usize::from(c.cube.is_some()))
        .sum();
    println!(
        "wrote {} clips ({files} files) to {}, config hash {}",
        manifest.clips.len(),
        out.display(),
        manifest.config_hash
    );
    println!("theoretical monostatic resolution {:.4} m", manifest.theoretical_resolution_m);
    Ok(())
}

fn training_split(dataset: &Dataset, mode: CollectionMode) -> Result<Vec<&DatasetClip>> {
    Ok(mode_split(dataset, mode).map_err(with_hint)?.0)
}

fn cmd_train(
    data: &Path,
    out: &Path,
    classifier: Option<Kind>,
    mode: Mode,
    n: Option<usize>,
    bin_width: Option<f64>,
) -> Result<()> {
    let dataset = load_dataset(data)?;
    let hash = dataset.config_hash();
    let mut cfg = dataset.config.clone();
    if let Some(n) = n {
        cfg.classifier.n = n;
    }
    if let Some(w) = bin_width {
        cfg.classifier.bin_width = w;
    }
    let train = training_split(&dataset, mode.into())?;
    let kind = classifier.unwrap_or(match cfg.classifier.kind {
        ClassifierKind::Pcann => Kind::Pcann,
        ClassifierKind::Cgbc => Kind::Cgbc,
    });
    let trained = match kind {
        Kind::Pcann => train_model(&cfg, ClassifierKind::Pcann, &train),
        Kind::Cgbc => train_model(&cfg, ClassifierKind::Cgbc, &train),
        Kind::MdPcann => train_md_model(&cfg, &train, &cfg.polarimetry.selected),
    }
    .map_err(with_hint)?;
    println!("trained {} on {} clips", trained.model.kind_name(), train.len());
    if let Some(vf) = trained.variance_fraction {
        println!("variance_fraction(n={}) = {vf:.6}", cfg.classifier.n);
    }
    if let Model::Cgbc(m) = &trained.model {
        println!("class\tbin\tazimuth\tclips");
        for t in &m.templates {
            let lo = t.bin as f64 * m.bin_width;
            println!("{}\t{}\t{lo}-{}\t{}", m.classes[t.class_index], t.bin, lo + m.bin_width, t.count);
        }
    }
    if let Model::MdPcann(m) = &trained.model {
        let names: Vec<&str> = m.selected.iter().map(|p| p.name()).collect();
        println!("parameters {}", names.join(","));
    }
    save_model(
        &ModelFile {
            config_hash: hash,
            model: trained.model,
        },
        out,
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Classifier kind and hyperparameters recovered from a trained model.
fn model_settings(model: &Model, base: &ClassifierConfig) -> Option<(ClassifierKind, ClassifierConfig)> {
    let mut c = base.clone();
    match model {
        Model::Pcann(m) => {
            c.n = m.components();
            c.pixel_mode = m.preprocessing.mode;
            Some((ClassifierKind::Pcann, c))
        }
        Model::Cgbc(m) => {
            c.bin_width = m.bin_width;
            Some((ClassifierKind::Cgbc, c))
        }
        Model::MdPcann(_) => None,
    }
}

struct EvaluateFlags {
    mode: Mode,
    roc: bool,
    angle_bins: bool,
    equal_support: bool,
    polar_sweep: Option<Sweep>,
}

/// Returns the number of configurations that failed.
fn cmd_evaluate(data: &Path, model_path: &Path, out: &Path, flags: EvaluateFlags) -> Result<usize> {
    let dataset = load_dataset(data)?;
    let file = load_model(model_path)?;
    let hash = dataset.config_hash();
    if file.config_hash != hash {
        return Err(with_hint(Error::HashMismatch {
            expected: hash,
            found: file.config_hash,
        }));
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut errors = Vec::new();

    let (_, test) = mode_split(&dataset, flags.mode.into()).map_err(with_hint)?;
    let decisions = decide_all(&file.model, &test)?;
    let classes = file.model.classes().to_vec();
    let mut confusion = ConfusionMatrix::new(classes.clone());
    for (clip, d) in test.iter().zip(&decisions) {
        let truth = classes
            .iter()
            .position(|c| *c == clip.clip().meta.class_label)
            .with_context(|| format!("test class {} is unknown to the model", clip.clip().meta.class_label))?;
        confusion.record(truth, d.class_index);
    }
    let mut report = ExperimentReport::new(&dataset);
    report.rows.push(AccuracyRow {
        configuration: match flags.mode {
            Mode::Bistatic => "bistatic".into(),
            Mode::Monostatic => "monostatic".into(),
        },
        bin: None,
        equal_support: false,
        classifier: file.model.kind_name().into(),
        parameters: None,
        n_train: match &file.model {
            Model::Pcann(m) => m.labels.len(),
            Model::Cgbc(m) => m.templates.iter().map(|t| t.count).sum(),
            Model::MdPcann(m) => m.labels.len(),
        },
        confusion: confusion.clone(),
    });
    println!("accuracy {:.4} on {} test clips", confusion.accuracy(), confusion.total());
    write(&out.join("confusion.csv"), confusion_csv(&hash, &confusion))?;
    write(&out.join("accuracy.csv"), accuracy_csv(&report))?;

    if flags.roc {
        match class_rocs(&classes, &test, &decisions) {
            Ok(rocs) => {
                for roc in &rocs {
                    write(&out.join(format!("roc_{}.csv", roc.target)), roc_csv(&hash, roc))?;
                    println!("auc {} {:.4}", roc.target, roc.auc);
                }
                report.rocs = rocs;
            }
            Err(e) => errors.push(format!("roc: {e}")),
        }
    }

    if flags.angle_bins || flags.equal_support {
        let mut binned = ExperimentReport::new(&dataset);
        match model_settings(&file.model, &dataset.config.classifier) {
            None => errors.push("angle bins: md-pcann models are not supported, use pcann or cgbc".into()),
            Some((kind, classifier)) => {
                let mut passes = vec![false];
                if flags.equal_support {
                    passes.push(true);
                }
                for eq in passes {
                    match angle_binned_rows(&dataset, &classifier, &dataset.config.angle_bins, eq, kind) {
                        Ok(rows) => {
                            for row in rows {
                                match row {
                                    Ok(row) => binned.rows.push(row),
                                    Err(e) => errors.push(format!("angle bins (equal_support={eq}): {e}")),
                                }
                            }
                        }
                        Err(e) => errors.push(format!("angle bins (equal_support={eq}): {e}")),
                    }
                }
            }
        }
        for row in &binned.rows {
            println!("{} equal_support={} accuracy {:.4}", row.configuration, row.equal_support, row.accuracy());
        }
        write(&out.join("angle_bins.csv"), accuracy_csv(&binned))?;
        report.rows.extend(binned.rows);
    }

    if let Some(sweep) = flags.polar_sweep {
        let name = match sweep {
            Sweep::Prefix => "prefix",
            Sweep::Ninth => "ninth",
        };
        match polarimetric_ablation(&dataset, sweep.into()) {
            Ok(polar) => {
                write(&out.join(format!("polar_{name}.csv")), accuracy_csv(&polar))?;
                for row in &polar.rows {
                    println!("{} accuracy {:.4}", row.configuration, row.accuracy());
                }
                report.rows.extend(polar.rows);
            }
            Err(e) => errors.push(format!("polar sweep {name}: {e}")),
        }
    }

    write(&out.join("summary.json"), summary_json(&report, &errors))?;
    for e in &errors {
        eprintln!("error: {e}");
    }
    Ok(errors.len())
}

fn print_meta(clip: &ImageClip) {
    let m = &clip.meta;
    println!("size {0}x{0}", clip.size());
    println!("pixel spacing {} m", clip.pixel_spacing);
    println!("mean bistatic angle {}°", m.mean_bistatic_angle);
    println!("receiver elevation {}°", m.rx_elevation);
    println!("receiver azimuth center {}°", m.rx_azimuth_center);
}

fn cmd_inspect(file: &Path) -> Result<()> {
    match read_file(file)? {
        ClipFile::Clip { class_id, clip } => {
            println!("clip file {}", file.display());
            println!("class id {class_id}");
            if let Some(ch) = clip.meta.channel {
                println!("channel {ch}");
            }
            print_meta(&clip);
            let (r, c, peak) = clip.peak();
            println!("peak ({r}, {c}) magnitude {peak:.6e}");
            println!("energy {:.6e}", clip.energy());
            println!(
                "-3 dB width {:.4} m along columns, {:.4} m along rows",
                mainlobe_width(&clip, Axis::Columns),
                mainlobe_width(&clip, Axis::Rows)
            );
        }
        ClipFile::Cube {
            class_id,
            pixel_spacing,
            cube,
        } => {
            println!("feature cube file {}", file.display());
            println!("class id {class_id}");
            println!("size {0}x{0}", cube.size());
            println!("pixel spacing {pixel_spacing} m");
            println!("mean bistatic angle {}°", cube.meta.mean_bistatic_angle);
            println!("receiver elevation {}°", cube.meta.rx_elevation);
            println!("receiver azimuth center {}°", cube.meta.rx_azimuth_center);
            let names: Vec<&str> = cube.selected.iter().map(|p| p.name()).collect();
            println!("P = {}", cube.parameter_count());
            println!("parameters {}", names.join(","));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<usize> {
    configure_threads()?;
    match cli.command {
        Command::Generate { config, out } => cmd_generate(&config, &out).map(|_| 0),
        Command::Train {
            data,
            out,
            classifier,
            mode,
            n,
            bin_width,
        } => cmd_train(&data, &out, classifier, mode, n, bin_width).map(|_| 0),
        Command::Evaluate {
            data,
            model,
            out,
            mode,
            roc,
            angle_bins,
            equal_support,
            polar_sweep,
        } => {
            if !data.join(MANIFEST_FILE).exists() {
                bail!("{} has no {MANIFEST_FILE}", data.display());
            }
            cmd_evaluate(
                &data,
                &model,
                &out,
                EvaluateFlags {
                    mode,
                    roc,
                    angle_bins,
                    equal_support,
                    polar_sweep,
                },
            )
        }
        Command::Inspect { file } => cmd_inspect(&file).map(|_| 0),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
