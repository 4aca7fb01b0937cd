//! Command-line entry points.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use namefair_core::synthetic::{self, SyntheticConfig};
use namefair_core::{kmeans, BiasReport, KMeansConfig};
use serde::Serialize;

use crate::error::{CliError, Context, Result};
use crate::io::cache::write_cache;
use crate::io::clusters::{write_assignments, write_centroids};
use crate::io::embeddings::write_embeddings;
use crate::io::model::{read_model, write_model, SavedModel};
use crate::io::tables::{
    mean_values, summary_values, write_bias_cells, write_csv, write_history, write_summary, SummaryRow,
};
use crate::io::write_with;
use crate::pipeline::{self, Prepared};
use crate::spec::ExperimentSpec;

#[derive(Debug, Parser)]
#[command(name = "namefair", version, about = "Train and audit classifiers with name-embedding fairness penalties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train once per seed; write models, histories, bias reports and a summary.
    Train(SpecArgs),
    /// Evaluate a saved model on the test split of the data.
    Evaluate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train over every (lambda, seed) pair and summarize each lambda.
    Sweep(SpecArgs),
    /// Cluster the name vectors and count group labels per cluster.
    ClusterReport(SpecArgs),
    /// List one class's weights, sorted, optionally for chosen features only.
    WeightsReport {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        class: String,
        /// Comma-separated feature names.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        /// Output directory; the table goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode the data once and write it as a dataset cache.
    Prepare(SpecArgs),
    /// Write the constructed fairness benchmark: dataset cache, name vectors
    /// and a ready-to-run experiment file.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SyntheticConfig::default().seed)]
        seed: u64,
    },
}

/// Experiment settings; each flag overrides the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub names_demographics: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated lambda values for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seeds; metrics are averaged over them.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Remove first names and gendered words from text before vectorizing.
    #[arg(long)]
    pub scrub: bool,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub top_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub name_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let mut s = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    s.$field = v.clone().into();
                }
            )*};
        }
        set!(data, test_data, schema, embeddings, names_demographics, out);
        set!(variant, lambda, lambdas, k, seeds, epochs, batch_size, lr, l2, min_count, top_fraction, split_seed, name_seed);
        if let Some(seed) = self.seed {
            s.seeds = vec![seed];
        }
        if self.scrub {
            s.scrub = true;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    spec: &'a ExperimentSpec,
}

fn write_manifest(out: &Path, command: &str, spec: &ExperimentSpec) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        spec,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_with(&out.join("manifest.json"), |w| {
        use std::io::Write;
        writeln!(w, "{json}")
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args.resolve()?),
        Command::Evaluate { spec, model } => cmd_evaluate(&spec.resolve()?, &model),
        Command::Sweep(args) => cmd_sweep(&args.resolve()?),
        Command::ClusterReport(args) => {
            let k = args.k;
            let mut spec = args.resolve()?;
            spec.k = k.unwrap_or(KMeansConfig::default().k);
            cmd_cluster_report(&spec)
        }
        Command::WeightsReport {
            model,
            class,
            features,
            out,
        } => cmd_weights_report(&model, &class, &features, out.as_deref()),
        Command::Prepare(args) => cmd_prepare(&args.resolve()?),
        Command::Synth { out, seed } => cmd_synth(&out, seed),
    }
}

fn attribute_names(data: &Prepared) -> Vec<String> {
    data.dataset.groups.attributes().iter().map(|a| a.name.clone()).collect()
}

fn summary_row(run: String, spec: &ExperimentSpec, lambda: f64, report: &BiasReport, attrs: &[String]) -> SummaryRow {
    SummaryRow {
        run,
        variant: spec.variant.clone(),
        lambda,
        values: summary_values(report, attrs),
    }
}

fn with_mean(mut rows: Vec<SummaryRow>, spec: &ExperimentSpec, lambda: f64) -> Vec<SummaryRow> {
    let values = mean_values(&rows.iter().collect::<Vec<_>>());
    rows.push(SummaryRow {
        run: "mean".into(),
        variant: spec.variant.clone(),
        lambda,
        values,
    });
    rows
}

pub fn cmd_train(spec: &ExperimentSpec) -> Result<()> {
    let out = spec.out_dir()?;
    let data = pipeline::load(spec)?;
    let embeddings = pipeline::load_embeddings(spec, &data.dataset)?;
    let attrs = attribute_names(&data);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &seed in &spec.seeds {
        let run = pipeline::run(spec, &data, &embeddings, seed, spec.lambda)?;
        let saved = SavedModel {
            params: run.outcome.params.clone(),
            class_names: data.dataset.class_names.clone(),
            feature_names: data.dataset.feature_names.clone(),
        };
        write_model(&out.join(format!("model_seed{seed}.txt")), &saved)?;
        write_history(&out.join(format!("history_seed{seed}.csv")), &run.outcome.history)?;
        if let Some(clusters) = &run.outcome.clusters {
            write_centroids(&out.join(format!("centroids_seed{seed}.txt")), clusters)?;
            write_assignments(&out.join(format!("assignments_seed{seed}.csv")), &run.outcome.record_clusters)?;
        }
        rows.push(summary_row(seed.to_string(), spec, spec.lambda, &run.report, &attrs));
        reports.push((seed.to_string(), run.report));
    }
    let labelled: Vec<(String, &BiasReport)> = reports.iter().map(|(s, r)| (s.clone(), r)).collect();
    write_bias_cells(&out.join("bias_report.csv"), &labelled, &data.dataset.class_names)?;
    write_summary(&out.join("summary.csv"), &attrs, &with_mean(rows, spec, spec.lambda))?;
    write_manifest(out, "train", spec)?;
    info!("wrote results to {}", out.display());
    Ok(())
}

pub fn cmd_evaluate(spec: &ExperimentSpec, model_path: &Path) -> Result<()> {
    let out = spec.out_dir()?;
    let model = read_model(model_path)?;
    let data = pipeline::load(spec)?;
    if model.feature_names != data.dataset.feature_names || model.class_names != data.dataset.class_names {
        return Err(CliError::validation(format!(
            "{}: features or classes do not match the data",
            model_path.display()
        )));
    }
    let report = pipeline::evaluate(&model.params, &data.test_set())?;
    let attrs = attribute_names(&data);
    write_bias_cells(&out.join("bias_report.csv"), &[("eval".into(), &report)], &data.dataset.class_names)?;
    write_summary(&out.join("summary.csv"), &attrs, &[summary_row("eval".into(), spec, spec.lambda, &report, &attrs)])?;
    write_manifest(out, "evaluate", spec)
}

pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<()> {
    if spec.lambdas.len() < 2 {
        return Err(CliError::validation("a sweep needs at least two lambdas (--lambdas)"));
    }
    let out = spec.out_dir()?;
    let data = pipeline::load(spec)?;
    let embeddings = pipeline::load_embeddings(spec, &data.dataset)?;
    let attrs = attribute_names(&data);
    let mut raw = Vec::new();
    let mut means = Vec::new();
    for &lambda in &spec.lambdas {
        let mut rows = Vec::new();
        for &seed in &spec.seeds {
            let run = pipeline::run(spec, &data, &embeddings, seed, lambda)?;
            rows.push(summary_row(seed.to_string(), spec, lambda, &run.report, &attrs));
        }
        let mut with = with_mean(rows, spec, lambda);
        means.push(with.pop().expect("mean row"));
        raw.extend(with);
    }
    raw.extend(means);
    write_summary(&out.join("sweep.csv"), &attrs, &raw)?;
    write_manifest(out, "sweep", spec)
}

pub fn cmd_cluster_report(spec: &ExperimentSpec) -> Result<()> {
    let out = spec.out_dir()?;
    let data = pipeline::load(spec)?;
    let embeddings = pipeline::load_embeddings(spec, &data.dataset)?;
    let ds = &data.dataset;
    let vectors = ds.name_vectors(&embeddings);
    let members: Vec<usize> = (0..ds.len()).filter(|&i| vectors[i].is_included()).collect();
    let points: Vec<Vec<f64>> = members.iter().map(|&i| vectors[i].vector.clone()).collect();
    let config = KMeansConfig::new(spec.k, spec.seeds[0]);
    let model = kmeans(&points, &config).context("clustering name vectors")?;
    let mut per_record: Vec<Option<usize>> = vec![None; ds.len()];
    for (&i, &c) in members.iter().zip(&model.assignments) {
        per_record[i] = Some(c);
    }

    let mut rows = Vec::new();
    for attr in ds.groups.attributes() {
        // (cluster or unassigned, value) -> count
        let mut counts: BTreeMap<(Option<usize>, &str), usize> = BTreeMap::new();
        for (cluster, value) in per_record.iter().zip(&attr.values) {
            let value = match value {
                Some(true) => attr.positive.as_str(),
                Some(false) => attr.negative.as_str(),
                None => "unknown",
            };
            *counts.entry((*cluster, value)).or_default() += 1;
        }
        // clusters in order, unassigned last
        let mut keys: Vec<_> = counts.keys().copied().collect();
        keys.sort_by_key(|(c, v)| (c.is_none(), *c, *v));
        for key in keys {
            let cluster = key.0.map_or("unassigned".to_string(), |c| c.to_string());
            rows.push(vec![cluster, attr.name.clone(), key.1.to_string(), counts[&key].to_string()]);
        }
    }
    let header: Vec<String> = ["cluster", "attribute", "value", "count"].iter().map(|s| s.to_string()).collect();
    write_csv(&out.join("cluster_report.csv"), &header, &rows)?;
    write_centroids(&out.join("centroids.txt"), &model)?;
    write_assignments(&out.join("assignments.csv"), &per_record)?;
    write_manifest(out, "cluster-report", spec)
}

/// Rows of `(feature, weight)` for `class`, by descending weight.
pub fn weights_table(model: &SavedModel, class: &str, features: &[String]) -> Result<Vec<(String, f64)>> {
    let c = model
        .class_index(class)
        .ok_or_else(|| CliError::validation(format!("unknown class {class:?}")))?;
    let row = model.params.class_weights_row(c);
    let selected: Vec<usize> = if features.is_empty() {
        (0..model.feature_names.len()).collect()
    } else {
        features
            .iter()
            .map(|f| model.feature_index(f).ok_or_else(|| CliError::validation(format!("unknown feature {f:?}"))))
            .collect::<Result<_>>()?
    };
    let mut table: Vec<(String, f64)> = selected.into_iter().map(|j| (model.feature_names[j].clone(), row[j])).collect();
    table.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(table)
}

pub fn cmd_weights_report(model_path: &Path, class: &str, features: &[String], out: Option<&Path>) -> Result<()> {
    let model = read_model(model_path)?;
    let table = weights_table(&model, class, features)?;
    let rows: Vec<Vec<String>> = table.iter().map(|(f, w)| vec![f.clone(), w.to_string()]).collect();
    let header = vec!["feature".to_string(), "weight".to_string()];
    match out {
        Some(dir) => write_csv(&dir.join("weights.csv"), &header, &rows),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let fail = |e: csv::Error| CliError::Io(format!("cannot write to stdout: {e}"));
            w.write_record(&header).map_err(fail)?;
            for r in &rows {
                w.write_record(r).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn cmd_prepare(spec: &ExperimentSpec) -> Result<()> {
    let out = spec.out_dir()?;
    let data = pipeline::load(spec)?;
    match &spec.test_data {
        None => write_cache(&out.join("dataset.cache"), &data.dataset)?,
        Some(_) => {
            let n_main = data.split.train.len() + data.split.validation.len();
            let main: Vec<usize> = (0..n_main).collect();
            write_cache(&out.join("train.cache"), &data.dataset.subset(&main))?;
            write_cache(&out.join("test.cache"), &data.test_set())?;
        }
    }
    write_manifest(out, "prepare", spec)
}

/// The benchmark's experiment file, matching the calibrated training settings.
pub fn synthetic_spec(seed: u64) -> ExperimentSpec {
    let t = synthetic::train_config(namefair_core::Variant::Cocl, 12, 2.0, 0);
    ExperimentSpec {
        data: Some("benchmark.cache".into()),
        embeddings: Some("names.vec".into()),
        variant: "cocl".into(),
        lambda: t.lambda,
        k: t.k,
        epochs: t.epochs,
        batch_size: t.batch_size,
        lr: t.learning_rate,
        l2: t.l2_coeff,
        seeds: vec![1, 2, 3, 4],
        lambdas: vec![0.0, 1.0, 2.0],
        split_seed: seed,
        out: Some("results".into()),
        ..ExperimentSpec::default()
    }
}

pub fn cmd_synth(out: &Path, seed: u64) -> Result<()> {
    let bench = synthetic::generate(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
    .context("synthetic benchmark")?;
    write_cache(&out.join("benchmark.cache"), &bench.dataset)?;
    write_embeddings(&out.join("names.vec"), &bench.embeddings)?;
    let spec = synthetic_spec(seed);
    write_with(&out.join("experiment.toml"), |w| {
        use std::io::Write;
        write!(w, "{}", spec.to_toml())
    })?;
    info!("wrote benchmark to {}", out.display());
    Ok(())
}
