//! The `passrate` command line.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::classifier::{nonzero_predictors, predict_all, train, write_model, read_model, Norm, RiskKind};
use crate::config::RunConfig;
use crate::dominant::{agreement, dominant_subdivision_on, grid_dominant_on, render_svg};
use crate::error::{Error, Result};
use crate::evaluation::{
    confusion, cross_validate, geometric_grid, kappa_matrix, majority_baseline, metrics, stratified_split,
};
use crate::features::{feature_matrix, standardize, FeatureMatrix, CATALOG};
use crate::labels::{
    check_class_counts, ground_truth, read_class_counts, read_labels, write_labels, LabelSet, Scheme,
};
use crate::match_data::{load_match_dir, write_match};
use crate::motion::MotionKind;
use crate::synthetic::{generate_labels, generate_match};

pub const LABEL_FILE: &str = "labels.csv";

#[derive(Debug, Parser)]
#[command(name = "passrate", version, about = "Rate football passes from tracking and event data")]
struct Cli {
    /// `key = value` settings file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic match and two observers' labels into a directory.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        duration_steps: Option<u32>,
        #[arg(long)]
        pass_rate: Option<f64>,
    },
    /// Load and check a match directory.
    Validate { dir: PathBuf },
    /// Draw the dominant regions at one step as SVG.
    Render {
        dir: PathBuf,
        #[arg(long)]
        step: u32,
        #[arg(long)]
        model: Option<MotionKind>,
        #[arg(long)]
        out: PathBuf,
        /// Overlay cells where the grid computation disagrees.
        #[arg(long)]
        grid_oracle: bool,
        #[arg(long, default_value_t = 0.5)]
        cell: f64,
    },
    /// Compute the feature matrix of every pass in a match.
    Featurize {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<MotionKind>,
    },
    /// Fit a classifier on the training part of a labelled feature matrix.
    Train {
        features: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        risk: Option<RiskKind>,
        #[arg(long)]
        norm: Option<Norm>,
        /// Fixed penalty weight; cross-validated over a grid when omitted.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        holdout_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on the held-out part of a labelled feature matrix.
    Evaluate {
        model: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        holdout_seed: Option<u64>,
        /// Also write confusion.csv, metrics.csv and summary.txt here.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
    /// Pairwise Cohen's kappa between label files.
    Agree {
        labels: Vec<PathBuf>,
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Check a `class,relative_frequency,count` table.
        #[arg(long)]
        class_counts: Option<PathBuf>,
        #[arg(long)]
        expected_total: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            other => Failure::Run(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 when data fails validation or processing, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            let code = if matches!(e.kind(), DisplayHelp | DisplayVersion) { 0 } else { 2 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
            let mut cfg = RunConfig::default();
            cfg.apply_text(&text)
                .map_err(|e| Failure::Usage(format!("--config {}: {}", path.display(), message(&e))))?;
            cfg
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate {
            seed,
            out: dir,
            noise,
            duration_steps,
            pass_rate,
        } => {
            override_with(&mut cfg.seed, seed);
            override_with(&mut cfg.noise, noise);
            override_with(&mut cfg.duration_steps, duration_steps);
            override_with(&mut cfg.pass_rate, pass_rate);
            cfg.validate()?;
            generate(&cfg, &dir, out)
        }
        Command::Validate { dir } => {
            let ds = load_match_dir(&dir)?;
            let passes = ds.extract_passes();
            writeln!(
                out,
                "ok: {} players, {} steps, {} events, {} passes ({} completed)",
                ds.team_map.len(),
                ds.clock.max_step + 1,
                ds.events.len(),
                passes.len(),
                passes.iter().filter(|p| p.completed).count()
            )?;
            Ok(())
        }
        Command::Render {
            dir,
            step,
            model,
            out: file,
            grid_oracle,
            cell,
        } => {
            override_with(&mut cfg.model, model);
            cfg.validate()?;
            if !(cell > 0.0) {
                return Err(Failure::Usage(format!("--cell must be positive, got {cell}")));
            }
            render(&cfg, &dir, step, &file, grid_oracle.then_some(cell), out)
        }
        Command::Featurize { dir, out: file, model } => {
            override_with(&mut cfg.model, model);
            cfg.validate()?;
            featurize(&cfg, &dir, &file, out)
        }
        Command::Train {
            features,
            labels,
            risk,
            norm,
            lambda,
            scheme,
            holdout_seed,
            out: file,
        } => {
            override_with(&mut cfg.risk, risk);
            override_with(&mut cfg.norm, norm);
            override_with(&mut cfg.scheme, scheme);
            override_with(&mut cfg.holdout_seed, holdout_seed);
            if lambda.is_some() {
                cfg.lambda = lambda;
            }
            cfg.validate()?;
            train_cmd(&cfg, &features, &labels, &file, out)
        }
        Command::Evaluate {
            model,
            features,
            labels,
            holdout_seed,
            report_dir,
        } => {
            override_with(&mut cfg.holdout_seed, holdout_seed);
            cfg.validate()?;
            evaluate_cmd(&cfg, &model, &features, &labels, report_dir.as_deref(), out)
        }
        Command::Agree {
            labels,
            scheme,
            class_counts,
            expected_total,
        } => {
            override_with(&mut cfg.scheme, scheme);
            if labels.is_empty() && class_counts.is_none() {
                return Err(Failure::Usage("agree needs label files or --class-counts".into()));
            }
            agree(&cfg, &labels, class_counts.as_deref(), expected_total, out)
        }
    }
}

fn override_with<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn message(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn generate(cfg: &RunConfig, dir: &Path, out: &mut dyn Write) -> CliResult {
    let ds = generate_match(&cfg.synth())?;
    write_match(&ds, dir)?;
    // labels are computed from the files as written so that they match what
    // featurize will see
    let ds = load_match_dir(dir)?;
    let passes = ds.extract_passes();
    let (a, b) = generate_labels(&ds, &passes, cfg.noise, cfg.seed)?;
    write_labels(&[a, b], &dir.join(LABEL_FILE))?;
    writeln!(
        out,
        "wrote {}: {} players, {} steps, {} events, {} passes",
        dir.display(),
        ds.team_map.len(),
        ds.clock.max_step + 1,
        ds.events.len(),
        passes.len()
    )?;
    Ok(())
}

fn render(
    cfg: &RunConfig,
    dir: &Path,
    step: u32,
    file: &Path,
    oracle_cell: Option<f64>,
    out: &mut dyn Write,
) -> CliResult {
    let ds = load_match_dir(dir)?;
    if step > ds.clock.max_step {
        return Err(Failure::Usage(format!(
            "--step {step} is past the last step {}",
            ds.clock.max_step
        )));
    }
    let states = ds.states_at(step, cfg.facing);
    let model = cfg.motion_model()?;
    let grid = cfg.time_grid()?;
    let mut sub = dominant_subdivision_on(&states, &model, &grid, cfg.n_sides, &ds.pitch)?;
    sub.step = Some(step);
    let oracle = match oracle_cell {
        Some(cell) => Some(grid_dominant_on(&states, &model, &grid, cell, cfg.n_sides, &ds.pitch)?),
        None => None,
    };
    let positions = states.iter().map(|(&id, s)| (id, s.position)).collect();
    std::fs::write(file, render_svg(&sub, &positions, &ds.team_map, oracle.as_ref()))?;
    write!(out, "wrote {} ({} regions", file.display(), sub.regions.len())?;
    if let Some(g) = &oracle {
        write!(out, ", grid agreement {:.4}", agreement(&sub, g))?;
    }
    writeln!(out, ")")?;
    Ok(())
}

fn featurize(cfg: &RunConfig, dir: &Path, file: &Path, out: &mut dyn Write) -> CliResult {
    let ds = load_match_dir(dir)?;
    let passes = ds.extract_passes();
    let fm = feature_matrix(&ds, &passes, &cfg.motion_model()?, &cfg.time_grid()?, &cfg.feature_config())?;
    fm.write_csv(file)?;
    writeln!(out, "wrote {}: {} passes x {} features", file.display(), fm.n_rows(), fm.n_cols())?;
    for (entry, rate) in CATALOG.iter().zip(fm.mask_rates()) {
        if rate > 0.0 {
            writeln!(out, "  masked {:<34} {:.3}", entry.name, rate)?;
        }
    }
    Ok(())
}

/// Feature rows and class codes of the labelled passes, in row order.
fn labelled(fm: &FeatureMatrix, truth: &LabelSet, scheme: Scheme) -> Result<Vec<usize>> {
    fm.rows
        .iter()
        .map(|r| {
            truth
                .ratings
                .get(&r.pass_index)
                .map(|&rating| scheme.class_of(rating))
                .ok_or_else(|| Error::Coverage(format!("pass {} has no label", r.pass_index)))
        })
        .collect()
}

fn subset(fm: &FeatureMatrix, idx: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        rows: idx.iter().map(|&i| fm.rows[i].clone()).collect(),
        catalog_version: fm.catalog_version.clone(),
        standardization: None,
    }
}

fn train_cmd(cfg: &RunConfig, features: &Path, labels: &Path, file: &Path, out: &mut dyn Write) -> CliResult {
    let fm = FeatureMatrix::read_csv(features)?;
    let truth = ground_truth(&read_labels(labels)?)?;
    let y = labelled(&fm, &truth, cfg.scheme)?;
    let k = cfg.scheme.k();
    let (train_idx, test_idx) = stratified_split(&y, cfg.test_fraction, cfg.holdout_seed)?;
    let train_m = standardize(&subset(&fm, &train_idx))?;
    let x = train_m.to_rows();
    let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let options = cfg.training_options();
    writeln!(
        out,
        "{} labelled passes: {} for training, {} held out",
        y.len(),
        train_idx.len(),
        test_idx.len()
    )?;

    let lambda = match cfg.lambda {
        Some(l) => l,
        None => {
            let grid = geometric_grid(cfg.lambda_min, cfg.lambda_max, cfg.lambda_count);
            let cv = cross_validate(&x, &yt, k, cfg.risk, cfg.norm, &grid, cfg.folds, cfg.seed, &options)?;
            writeln!(out, "{}-fold cross-validation:", cfg.folds)?;
            writeln!(out, "  {:>12} {:>9} {:>9}", "lambda", "accuracy", "macro_f1")?;
            for ((l, a), f) in cv.lambdas.iter().zip(&cv.mean_accuracy).zip(&cv.mean_macro_f1) {
                writeln!(out, "  {l:>12.6e} {a:>9.4} {f:>9.4}")?;
            }
            writeln!(out, "selected lambda {:.6e}", cv.best_lambda)?;
            cv.best_lambda
        }
    };

    let (mut model, report) = train(&x, &yt, k, cfg.risk, cfg.norm, lambda, &options)?;
    model.catalog_version = fm.catalog_version.clone();
    model.standardization = train_m.standardization.clone();
    write_model(&model, file)?;
    writeln!(
        out,
        "trained {} risk, l{} penalty, lambda {:.6e}: objective {:.6}, {} iterations{}",
        cfg.risk,
        cfg.norm.p(),
        lambda,
        report.objective,
        report.iterations,
        if report.converged { "" } else { " (not converged; best iterate kept)" }
    )?;
    if !report.empty_classes.is_empty() {
        writeln!(out, "classes without training examples: {:?}", report.empty_classes)?;
    }
    let nz = nonzero_predictors(&model, 1e-8);
    writeln!(out, "{} non-zero predictors", nz.len())?;
    if cfg.norm == Norm::L1 {
        for (name, w) in nz {
            writeln!(out, "  {name:<34} {w:.4}")?;
        }
    }
    writeln!(out, "wrote {}", file.display())?;
    Ok(())
}

fn evaluate_cmd(
    cfg: &RunConfig,
    model_path: &Path,
    features: &Path,
    labels: &Path,
    report_dir: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let model = read_model(model_path)?;
    let scheme = match model.k {
        6 => Scheme::Six,
        3 => Scheme::Three,
        k => return Err(Failure::Run(Error::Integrity(format!("model has {k} classes; expected 3 or 6")))),
    };
    let fm = FeatureMatrix::read_csv(features)?;
    if fm.catalog_version != model.catalog_version {
        return Err(Failure::Run(Error::Integrity(format!(
            "features use catalog {} but the model was trained on {}",
            fm.catalog_version, model.catalog_version
        ))));
    }
    let truth = ground_truth(&read_labels(labels)?)?;
    let y = labelled(&fm, &truth, scheme)?;
    let (_, test_idx) = stratified_split(&y, cfg.test_fraction, cfg.holdout_seed)?;
    if test_idx.is_empty() {
        return Err(Failure::Run(Error::TooFewExamples("held-out set is empty".into())));
    }
    let rows: Vec<Vec<f64>> = test_idx
        .iter()
        .map(|&i| model.prepare(&fm.rows[i].values))
        .collect::<Result<_>>()?;
    let y_test: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();
    let pred = predict_all(&model, &rows)?;
    let cm = confusion(&y_test, &pred, model.k)?;
    let report = metrics(&cm)?;
    let names = scheme.class_names();
    let title = format!(
        "MLR ({} risk, l{} penalty, lambda {:.3e}) on {} held-out passes",
        model.risk_kind,
        model.norm.p(),
        model.lambda,
        y_test.len()
    );
    let mut summary = report.summary(&names, &title);
    summary.push_str(&format!("{:<14} {:>9.3}\n", "Majority", majority_baseline(&y_test)));
    write!(out, "{summary}")?;
    if let Some(dir) = report_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("confusion.csv"), cm.to_csv(&names))?;
        std::fs::write(dir.join("metrics.csv"), report.to_csv(&names))?;
        std::fs::write(dir.join("summary.txt"), &summary)?;
        writeln!(out, "wrote reports to {}", dir.display())?;
    }
    Ok(())
}

fn agree(
    cfg: &RunConfig,
    files: &[PathBuf],
    class_counts: Option<&Path>,
    expected_total: Option<usize>,
    out: &mut dyn Write,
) -> CliResult {
    if !files.is_empty() {
        let mut labelings = Vec::new();
        let mut passes: Option<BTreeSet<usize>> = None;
        for (i, f) in files.iter().enumerate() {
            let stem = f.file_stem().map_or_else(|| format!("file{i}"), |s| s.to_string_lossy().into_owned());
            for set in read_labels(f)? {
                let keys: BTreeSet<usize> = set.ratings.keys().copied().collect();
                match &passes {
                    None => passes = Some(keys),
                    Some(p) if *p != keys => {
                        return Err(Failure::Run(Error::Coverage(format!(
                            "{stem}:{} rates a different set of passes",
                            set.observer
                        ))))
                    }
                    Some(_) => {}
                }
                let codes = set.ratings.values().map(|&r| cfg.scheme.class_of(r)).collect();
                labelings.push((format!("{stem}:{}", set.observer), codes));
            }
        }
        let table = kappa_matrix(&labelings)?;
        writeln!(out, "Cohen's kappa ({} classes)", cfg.scheme.k())?;
        write!(out, "{}", table.render())?;
    }
    if let Some(path) = class_counts {
        let check = check_class_counts(&read_class_counts(path)?, expected_total)?;
        writeln!(out, "class counts in {} check out", path.display())?;
        write!(out, "{}", check.render())?;
    }
    Ok(())
}
