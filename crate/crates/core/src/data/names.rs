//! Name demographics: partitioning names by thresholded proportions,
//! synthetic name assignment, and seeded group-label inference. Everything
//! here produces evaluation labels or penalty inputs, never features.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::text::tokenize;
use crate::data::Dataset;
use crate::embeddings::normalize_token;
use crate::{Error, Result};

/// Token to proportion map, e.g. the proportion of people with a given name
/// who are white, or who are male.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NameDemographics {
    table: BTreeMap<String, f64>,
}

impl NameDemographics {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut table = BTreeMap::new();
        for (name, p) in pairs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "proportion for {:?} must lie in [0, 1], got {p}",
                    name.as_ref()
                )));
            }
            let key = normalize_token(name.as_ref());
            if !key.is_empty() {
                table.entry(key).or_insert(p);
            }
        }
        Ok(Self { table })
    }

    /// Parses `name<TAB>probability` lines; blank lines and `#` comments
    /// are skipped.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (name, p) = line
                .split_once('\t')
                .ok_or_else(|| err("expected name<TAB>probability".to_string()))?;
            let p: f64 = p.trim().parse().map_err(|_| err(format!("invalid probability {p:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(format!("probability {p} outside [0, 1]")));
            }
            pairs.push((name.to_string(), p));
        }
        Self::from_pairs(pairs)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.table.get(&normalize_token(name)).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.table.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Names split four ways by thresholded race and gender proportions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NamePartition {
    pub white_male: Vec<String>,
    pub white_female: Vec<String>,
    pub nonwhite_male: Vec<String>,
    pub nonwhite_female: Vec<String>,
}

impl NamePartition {
    pub fn category(&self, white: bool, male: bool) -> &[String] {
        match (white, male) {
            (true, true) => &self.white_male,
            (true, false) => &self.white_female,
            (false, true) => &self.nonwhite_male,
            (false, false) => &self.nonwhite_female,
        }
    }

    pub fn len(&self) -> usize {
        self.white_male.len() + self.white_female.len() + self.nonwhite_male.len() + self.nonwhite_female.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Names present in both tables, split by `p > threshold` on each. A
/// proportion exactly at the threshold falls on the non-white / female side.
pub fn partition_names(white: &NameDemographics, male: &NameDemographics, threshold: f64) -> Result<NamePartition> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let mut out = NamePartition::default();
    for (name, pw) in white.iter() {
        let Some(pm) = male.get(name) else { continue };
        let bucket = match (pw > threshold, pm > threshold) {
            (true, true) => &mut out.white_male,
            (true, false) => &mut out.white_female,
            (false, true) => &mut out.nonwhite_male,
            (false, false) => &mut out.nonwhite_female,
        };
        bucket.push(name.to_string());
    }
    if out.is_empty() {
        return Err(Error::Empty("intersection of the name tables"));
    }
    Ok(out)
}

/// Gives every record a first name drawn uniformly from the partition
/// category matching its race and gender labels (the positive value of the
/// race attribute is read as white, of the gender attribute as male). Last
/// names are cleared.
pub fn assign_synthetic_names(
    dataset: &mut Dataset,
    partition: &NamePartition,
    race_attribute: &str,
    gender_attribute: &str,
    seed: u64,
) -> Result<()> {
    let race = dataset
        .groups
        .get(race_attribute)
        .ok_or_else(|| Error::Missing(format!("group attribute {race_attribute:?}")))?;
    let gender = dataset
        .groups
        .get(gender_attribute)
        .ok_or_else(|| Error::Missing(format!("group attribute {gender_attribute:?}")))?;
    for (white, male) in [(true, true), (true, false), (false, true), (false, false)] {
        if partition.category(white, male).is_empty() {
            return Err(Error::Empty("name partition category"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = Vec::with_capacity(dataset.len());
    for (i, (r, g)) in race.values.iter().zip(&gender.values).enumerate() {
        let (Some(white), Some(male)) = (r, g) else {
            return Err(Error::Missing(format!("race or gender label for record {i}")));
        };
        let pool = partition.category(*white, *male);
        names.push(Some(pool[rng.random_range(0..pool.len())].clone()));
    }
    dataset.first_names = names;
    dataset.last_names = alloc::vec![None; dataset.len()];
    Ok(())
}

/// Samples a binary race label per record from a Bernoulli whose
/// probability is the mean of the available first- and last-name
/// proportions. Records with neither name in its table get `None` and draw
/// nothing from the generator.
pub fn infer_race_labels(
    first_names: &[Option<String>],
    last_names: &[Option<String>],
    first_white: &NameDemographics,
    last_white: &NameDemographics,
    seed: u64,
) -> Vec<Option<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    first_names
        .iter()
        .zip(last_names)
        .map(|(f, l)| {
            let pf = f.as_deref().and_then(|t| first_white.get(t));
            let pl = l.as_deref().and_then(|t| last_white.get(t));
            let p = match (pf, pl) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => return None,
            };
            Some(rng.random::<f64>() < p)
        })
        .collect()
}

const MALE_PRONOUNS: [&str; 5] = ["he", "him", "his", "himself", "mr"];
const FEMALE_PRONOUNS: [&str; 6] = ["she", "her", "hers", "herself", "mrs", "ms"];

/// Gender read from gendered pronoun counts in third-person text: `Some(true)`
/// for male, `Some(false)` for female, `None` on a tie (including none).
pub fn infer_gender_from_pronouns(document: &str) -> Option<bool> {
    let (mut male, mut female) = (0usize, 0usize);
    for token in tokenize(document) {
        if MALE_PRONOUNS.contains(&token.as_str()) {
            male += 1;
        } else if FEMALE_PRONOUNS.contains(&token.as_str()) {
            female += 1;
        }
    }
    match male.cmp(&female) {
        core::cmp::Ordering::Greater => Some(true),
        core::cmp::Ordering::Less => Some(false),
        core::cmp::Ordering::Equal => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::metrics::{GroupAttribute, GroupLabels};
    use alloc::vec;

    fn demo(pairs: &[(&str, f64)]) -> NameDemographics {
        NameDemographics::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn partition_rules() {
        let white = demo(&[("ann", 0.9), ("bo", 0.5), ("cy", 0.1), ("dee", 0.8)]);
        let male = demo(&[("ann", 0.8), ("bo", 0.9), ("cy", 0.2), ("eve", 0.0)]);
        let p = partition_names(&white, &male, 0.5).unwrap();
        assert_eq!(p.white_male, vec!["ann"]);
        assert_eq!(p.nonwhite_male, vec!["bo"]);
        assert_eq!(p.nonwhite_female, vec!["cy"]);
        assert!(p.white_female.is_empty());
        // dee and eve are each missing from one table
        assert_eq!(p.len(), 3);
        assert!(partition_names(&demo(&[("x", 0.1)]), &demo(&[("y", 0.1)]), 0.5).is_err());
        assert!(partition_names(&white, &male, 1.0).is_err());
    }

    #[test]
    fn parses_tab_separated_tables() {
        let t = NameDemographics::parse_str("# first names\nAnna\t0.25\nBob\t1\n\n").unwrap();
        assert_eq!(t.get("anna"), Some(0.25));
        assert_eq!(t.get("BOB"), Some(1.0));
        assert!(NameDemographics::parse_str("anna 0.2\n").is_err());
        assert!(NameDemographics::parse_str("anna\t1.2\n").is_err());
    }

    fn labelled(n: usize) -> Dataset {
        let x = FeatureMatrix::from_dense_rows(1, &vec![[0.0]; n]).unwrap();
        let mut ds = Dataset::new(x, vec![0; n], vec!["f".into()], vec!["c".into()]).unwrap();
        let race = (0..n).map(|i| Some(i % 2 == 0)).collect();
        let gender = (0..n).map(|i| Some(i % 3 == 0)).collect();
        ds.groups = GroupLabels::new(vec![
            GroupAttribute::new("race", "white", "non-white", race),
            GroupAttribute::new("gender", "male", "female", gender),
        ])
        .unwrap();
        ds
    }

    fn partition() -> NamePartition {
        NamePartition {
            white_male: vec!["wm1".into(), "wm2".into()],
            white_female: vec!["wf1".into(), "wf2".into(), "wf3".into()],
            nonwhite_male: vec!["nm1".into()],
            nonwhite_female: vec!["nf1".into(), "nf2".into()],
        }
    }

    #[test]
    fn synthetic_names_follow_categories() {
        let mut ds = labelled(60);
        let p = partition();
        assign_synthetic_names(&mut ds, &p, "race", "gender", 9).unwrap();
        for i in 0..ds.len() {
            let pool = p.category(i % 2 == 0, i % 3 == 0);
            assert!(pool.contains(ds.first_names[i].as_ref().unwrap()));
            assert!(ds.last_names[i].is_none());
        }
        let mut again = labelled(60);
        assign_synthetic_names(&mut again, &p, "race", "gender", 9).unwrap();
        assert_eq!(again.first_names, ds.first_names);
    }

    #[test]
    fn synthetic_names_need_labels() {
        let mut ds = labelled(4);
        let mut attrs = ds.groups.attributes().to_vec();
        attrs[0].values[1] = None;
        ds.groups = GroupLabels::new(attrs).unwrap();
        assert!(matches!(
            assign_synthetic_names(&mut ds, &partition(), "race", "gender", 1),
            Err(Error::Missing(_))
        ));
        assert!(assign_synthetic_names(&mut labelled(2), &partition(), "nope", "gender", 1).is_err());
        let mut empty = partition();
        empty.nonwhite_male.clear();
        assert!(assign_synthetic_names(&mut labelled(2), &empty, "race", "gender", 1).is_err());
    }

    #[test]
    fn race_inference_cases() {
        let first = demo(&[("ann", 1.0), ("bo", 0.6)]);
        let last = demo(&[("smith", 1.0), ("lee", 0.2)]);
        let f = vec![Some("ann".to_string()), Some("zed".to_string()), None];
        let l = vec![Some("smith".to_string()), Some("nobody".to_string()), Some("smith".to_string())];
        let labels = infer_race_labels(&f, &l, &first, &last, 3);
        assert_eq!(labels, vec![Some(true), None, Some(true)]);
    }

    #[test]
    fn pronoun_gender() {
        assert_eq!(infer_gender_from_pronouns("She is a surgeon. Her work..."), Some(false));
        assert_eq!(infer_gender_from_pronouns("He studied law; his firm"), Some(true));
        assert_eq!(infer_gender_from_pronouns("A surgeon."), None);
    }
}
