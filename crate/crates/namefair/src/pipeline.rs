//! Loading datasets in any supported input format, splitting them, and
//! running seeded train/evaluate cycles.

use std::path::{Path, PathBuf};

use log::info;
use namefair_core::data::names::{assign_synthetic_names, infer_race_labels, partition_names, NameDemographics};
use namefair_core::data::tabular::{TabularEncoder, TabularSchema};
use namefair_core::data::text::{scrub, vectorize_text};
use namefair_core::data::{default_split, infer_gender_from_pronouns, split_indices, Split};
use namefair_core::{
    bias_report, train, BiasReport, Dataset, EmbeddingTable, FeatureMatrix, GroupAttribute, GroupLabels, ModelParams,
    TrainOutcome,
};

use crate::error::{CliError, Context, Result};
use crate::io::cache::{is_cache, read_cache};
use crate::io::embeddings::read_embeddings;
use crate::io::read_to_string;
use crate::spec::ExperimentSpec;

/// Attribute names used for the inferred or declared race and gender labels.
pub const RACE: &str = "race";
pub const GENDER: &str = "gender";

/// Header expected on biography files.
pub const TEXT_HEADER: [&str; 4] = ["label", "first_name", "last_name", "text"];

/// Class probability threshold for partitioning demographic name tables.
const NAME_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// All records, training file first, then any separate test file.
    pub dataset: Dataset,
    pub split: Split,
}

impl Prepared {
    pub fn train_set(&self) -> Dataset {
        self.dataset.subset(&self.split.train)
    }

    pub fn validation_set(&self) -> Dataset {
        self.dataset.subset(&self.split.validation)
    }

    pub fn test_set(&self) -> Dataset {
        self.dataset.subset(&self.split.test)
    }
}

enum Format {
    Tabular(PathBuf),
    Text,
    Cache,
}

fn detect(spec: &ExperimentSpec, path: &Path) -> Result<Format> {
    if let Some(schema) = &spec.schema {
        return Ok(Format::Tabular(schema.clone()));
    }
    let text = read_to_string(path)?;
    if is_cache(&text) {
        return Ok(Format::Cache);
    }
    let header: Vec<&str> = text.lines().next().unwrap_or("").split('\t').map(str::trim).collect();
    if header == TEXT_HEADER {
        return Ok(Format::Text);
    }
    Err(CliError::validation(format!(
        "{}: unrecognized format; pass --schema for CSV, or start the file with the tab-separated header {:?}",
        path.display(),
        TEXT_HEADER.join("\t")
    )))
}

/// Loads and encodes the spec's data and computes the split: a seeded
/// 80/10/10 split of one file, or a 90/10 train/validation split of `data`
/// with `test_data` as the test set.
pub fn load(spec: &ExperimentSpec) -> Result<Prepared> {
    let path = spec.data_path()?;
    let format = detect(spec, path)?;
    let (rows_main, rows_test) = match &format {
        Format::Cache => {
            let main = read_cache(path)?;
            let n_main = main.len();
            let dataset = match &spec.test_data {
                Some(t) => concat(main, read_cache(t)?, t)?,
                None => main,
            };
            let split = make_split(spec, n_main, dataset.len())?;
            return Ok(Prepared { dataset, split });
        }
        Format::Tabular(_) => (read_csv(path, b',')?, spec.test_data.as_deref().map(|t| read_csv(t, b',')).transpose()?),
        Format::Text => (read_csv(path, b'\t')?, spec.test_data.as_deref().map(|t| read_csv(t, b'\t')).transpose()?),
    };
    let (header, mut rows) = rows_main;
    let n_main = rows.len();
    if let Some((test_header, test_rows)) = rows_test {
        if test_header != header {
            return Err(CliError::validation(format!(
                "{}: header differs from {}",
                spec.test_data.as_ref().unwrap().display(),
                path.display()
            )));
        }
        rows.extend(test_rows);
    }
    let split = make_split(spec, n_main, rows.len())?;
    let ctx = path.display();
    let mut dataset = match format {
        Format::Tabular(schema_path) => {
            let schema = TabularSchema::parse(&read_to_string(&schema_path)?).context(schema_path.display())?;
            let encoder = TabularEncoder::fit(&header, &rows, &split.train, &schema).context(&ctx)?;
            let (ds, stats) = encoder.transform(&rows).context(&ctx)?;
            if stats.unseen_categories + stats.clamped_values > 0 {
                info!(
                    "{} unseen categories and {} clamped values outside the training rows",
                    stats.unseen_categories, stats.clamped_values
                );
            }
            ds
        }
        Format::Text => encode_text(spec, &rows, &ctx)?,
        Format::Cache => unreachable!("handled above"),
    };
    attach_demographics(spec, &mut dataset)?;
    info!("loaded {} records, {} features, {} classes", dataset.len(), dataset.num_features(), dataset.num_classes());
    Ok(Prepared { dataset, split })
}

fn make_split(spec: &ExperimentSpec, n_main: usize, n_total: usize) -> Result<Split> {
    if n_main == n_total {
        return Ok(default_split(n_main, spec.split_seed));
    }
    let mut split = split_indices(n_main, spec.split_seed, 0.9, 0.1).context("split")?;
    split.test = (n_main..n_total).collect();
    Ok(split)
}

type Rows = (Vec<String>, Vec<Vec<String>>);

fn read_csv(path: &Path, delimiter: u8) -> Result<Rows> {
    let file = std::fs::File::open(path).map_err(|e| CliError::read(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quoting(delimiter == b',')
        .trim(csv::Trim::All)
        .from_reader(file);
    let bad = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        CliError::validation(format!("{}:{line}: {e}", path.display()))
    };
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(bad)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn concat(mut a: Dataset, b: Dataset, b_path: &Path) -> Result<Dataset> {
    if a.feature_names != b.feature_names || a.class_names != b.class_names {
        return Err(CliError::validation(format!(
            "{}: features or classes differ from the training cache",
            b_path.display()
        )));
    }
    let mut features = FeatureMatrix::new(a.num_features());
    for m in [&a.features, &b.features] {
        for i in 0..m.num_rows() {
            let row = m.row(i);
            let entries: Vec<(usize, f64)> = row.iter().collect();
            features.push_sparse(&entries).context("dataset")?;
        }
    }
    let mut groups = Vec::new();
    for attr in a.groups.attributes() {
        let other = b.groups.get(&attr.name).ok_or_else(|| {
            CliError::validation(format!("{}: missing group attribute {:?}", b_path.display(), attr.name))
        })?;
        let mut merged = attr.clone();
        merged.values.extend(&other.values);
        groups.push(merged);
    }
    a.features = features;
    a.labels.extend(b.labels);
    a.first_names.extend(b.first_names);
    a.last_names.extend(b.last_names);
    a.groups = GroupLabels::new(groups).context("dataset")?;
    a.validate().context("dataset")?;
    Ok(a)
}

fn encode_text(spec: &ExperimentSpec, rows: &[Vec<String>], ctx: &impl std::fmt::Display) -> Result<Dataset> {
    let mut classes: Vec<String> = rows.iter().map(|r| r[0].clone()).collect();
    classes.sort();
    classes.dedup();
    let labels: Vec<usize> = rows.iter().map(|r| classes.binary_search(&r[0]).expect("collected above")).collect();
    let name = |s: &String| (!s.is_empty()).then(|| s.clone());
    let first: Vec<Option<String>> = rows.iter().map(|r| name(&r[1])).collect();
    let last: Vec<Option<String>> = rows.iter().map(|r| name(&r[2])).collect();
    let raw: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();

    // vocabulary statistics come from the raw text
    let (raw_features, vocab) = vectorize_text(&raw, spec.min_count, spec.top_fraction).context(ctx)?;
    let features = if spec.scrub {
        let scrubbed: Vec<String> = raw.iter().zip(&first).map(|(d, f)| scrub(d, f.as_deref())).collect();
        vocab.transform(&scrubbed)
    } else {
        raw_features
    };
    let gender: Vec<Option<bool>> = raw.iter().map(|d| infer_gender_from_pronouns(d)).collect();
    let mut ds = Dataset::new(features, labels, vocab.tokens().to_vec(), classes).context(ctx)?;
    ds.first_names = first;
    ds.last_names = last;
    ds.groups.set(GroupAttribute::new(GENDER, "male", "female", gender));
    Ok(ds)
}

fn demographics(dir: &Path, file: &str) -> Result<Option<NameDemographics>> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(None);
    }
    let text = read_to_string(&path)?;
    Ok(Some(NameDemographics::parse_str(&text).context(path.display())?))
}

/// Gives name-less records synthetic first names drawn by race and gender,
/// and infers race labels for named records lacking them, from whichever
/// demographic tables the directory provides.
fn attach_demographics(spec: &ExperimentSpec, ds: &mut Dataset) -> Result<()> {
    let Some(dir) = &spec.names_demographics else {
        return Ok(());
    };
    if !dir.is_dir() {
        return Err(CliError::Io(format!("cannot read {}: not a directory", dir.display())));
    }
    let has_names = ds.first_names.iter().chain(&ds.last_names).any(Option::is_some);
    if !has_names {
        let (Some(white), Some(male)) = (demographics(dir, "first_white.tsv")?, demographics(dir, "first_male.tsv")?) else {
            return Err(CliError::Io(format!(
                "{}: synthetic names need first_white.tsv and first_male.tsv",
                dir.display()
            )));
        };
        let partition = partition_names(&white, &male, NAME_THRESHOLD).context(dir.display())?;
        assign_synthetic_names(ds, &partition, RACE, GENDER, spec.name_seed).context("synthetic names")?;
        info!("assigned synthetic first names from {} candidates", partition.len());
    } else if ds.groups.get(RACE).is_none() {
        let first = demographics(dir, "first_white.tsv")?.unwrap_or_default();
        let last = demographics(dir, "last_white.tsv")?.unwrap_or_default();
        if first.is_empty() && last.is_empty() {
            return Err(CliError::Io(format!(
                "{}: race inference needs first_white.tsv or last_white.tsv",
                dir.display()
            )));
        }
        let race = infer_race_labels(&ds.first_names, &ds.last_names, &first, &last, spec.name_seed);
        ds.groups.set(GroupAttribute::new(RACE, "white", "non-white", race));
    }
    Ok(())
}

/// Loads the vectors for every name token in `dataset`.
pub fn load_embeddings(spec: &ExperimentSpec, dataset: &Dataset) -> Result<EmbeddingTable> {
    let path = spec.embeddings_path()?;
    let table = read_embeddings(path, Some(&dataset.name_tokens()))?;
    info!("loaded {} name vectors of dimension {}", table.len(), table.dimension());
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub seed: u64,
    pub lambda: f64,
    pub outcome: TrainOutcome,
    pub report: BiasReport,
}

pub fn evaluate(params: &ModelParams, test: &Dataset) -> Result<BiasReport> {
    if params.num_features() != test.num_features() || params.num_classes() != test.num_classes() {
        return Err(CliError::validation(format!(
            "model has {} features and {} classes, data has {} and {}",
            params.num_features(),
            params.num_classes(),
            test.num_features(),
            test.num_classes()
        )));
    }
    let predicted = params.predict_classes(&test.features);
    bias_report(&predicted, &test.labels, test.num_classes(), &test.groups).context("bias report")
}

/// Trains on the training split and evaluates on the test split.
pub fn run(spec: &ExperimentSpec, data: &Prepared, embeddings: &EmbeddingTable, seed: u64, lambda: f64) -> Result<Run> {
    let config = spec.train_config(seed, lambda)?;
    let (train_set, val_set, test_set) = (data.train_set(), data.validation_set(), data.test_set());
    info!("training {} lambda={lambda} seed={seed}", config.variant.as_str());
    let validation = (!val_set.is_empty()).then_some(&val_set);
    let outcome = train(&train_set, embeddings, &config, validation).context(format!("training (seed {seed})"))?;
    let report = evaluate(&outcome.params, &test_set)?;
    Ok(Run {
        seed,
        lambda,
        outcome,
        report,
    })
}
