//! Columnar text cache of an encoded dataset, so preprocessing runs once.
//!
//! ```text
//! namefair-dataset 1
//! records <N>
//! features <F>
//! classes <C>
//! class<TAB><name>                            C lines
//! feature<TAB><name>                          F lines
//! attribute<TAB><name><TAB><pos><TAB><neg>    one line per group attribute
//! [labels]                                    N class indices
//! [first_names]                               N lines, empty when unknown
//! [last_names]                                N lines, empty when unknown
//! [group <name>]                              N lines of 1, 0 or ?, per attribute
//! [features]                                  N lines of sparse "col:value" pairs
//! ```

use std::io::Write;
use std::path::Path;

use namefair_core::{Dataset, FeatureMatrix, GroupAttribute, GroupLabels};

use super::{read_to_string, write_with};
use crate::error::{CliError, Result};

pub const MAGIC: &str = "namefair-dataset 1";

pub fn write_cache(path: &Path, ds: &Dataset) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "records {}", ds.len())?;
        writeln!(out, "features {}", ds.num_features())?;
        writeln!(out, "classes {}", ds.num_classes())?;
        for c in &ds.class_names {
            writeln!(out, "class\t{c}")?;
        }
        for f in &ds.feature_names {
            writeln!(out, "feature\t{f}")?;
        }
        for a in ds.groups.attributes() {
            writeln!(out, "attribute\t{}\t{}\t{}", a.name, a.positive, a.negative)?;
        }
        writeln!(out, "[labels]")?;
        for y in &ds.labels {
            writeln!(out, "{y}")?;
        }
        for (section, names) in [("first_names", &ds.first_names), ("last_names", &ds.last_names)] {
            writeln!(out, "[{section}]")?;
            for n in names {
                writeln!(out, "{}", n.as_deref().unwrap_or(""))?;
            }
        }
        for a in ds.groups.attributes() {
            writeln!(out, "[group {}]", a.name)?;
            for v in &a.values {
                writeln!(out, "{}", v.map_or("?", |b| if b { "1" } else { "0" }))?;
            }
        }
        writeln!(out, "[features]")?;
        for i in 0..ds.len() {
            let row = ds.features.row(i);
            let cells: Vec<String> = row.indices.iter().zip(row.values).map(|(j, v)| format!("{j}:{v}")).collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
        Ok(())
    })
}

/// True when `text` starts with the cache header.
pub fn is_cache(text: &str) -> bool {
    text.lines().next().map(str::trim) == Some(MAGIC)
}

pub fn read_cache(path: &Path) -> Result<Dataset> {
    let text = read_to_string(path)?;
    parse_cache(&text).map_err(|(line, msg)| CliError::validation(format!("{}:{line}: {msg}", path.display())))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> ParseResult<(usize, &'a str)> {
        let (i, line) = self
            .inner
            .next()
            .ok_or((self.last + 1, format!("unexpected end of file, expected {what}")))?;
        self.last = i + 1;
        Ok((i + 1, line))
    }

    fn count(&mut self, key: &str) -> ParseResult<usize> {
        let (no, line) = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|r| r.trim().parse().ok())
            .ok_or((no, format!("expected \"{key} <count>\"")))
    }

    fn section(&mut self, name: &str) -> ParseResult<()> {
        let (no, line) = self.next(name)?;
        if line.trim() != format!("[{name}]") {
            return Err((no, format!("expected section [{name}]")));
        }
        Ok(())
    }
}

pub fn parse_cache(text: &str) -> ParseResult<Dataset> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (no, magic) = lines.next("header")?;
    if magic.trim() != MAGIC {
        return Err((no, format!("expected {MAGIC:?}")));
    }
    let n = lines.count("records")?;
    let nf = lines.count("features")?;
    let nc = lines.count("classes")?;
    let mut class_names = Vec::with_capacity(nc);
    let mut feature_names = Vec::with_capacity(nf);
    let mut attributes = Vec::new();
    let next_section = loop {
        let (no, line) = lines.next("[labels]")?;
        let mut fields = line.split('\t');
        match fields.next() {
            Some("class") => class_names.push(fields.collect::<Vec<_>>().join("\t")),
            Some("feature") => feature_names.push(fields.collect::<Vec<_>>().join("\t")),
            Some("attribute") => {
                let f: Vec<&str> = fields.collect();
                if f.len() != 3 {
                    return Err((no, "expected attribute<TAB>name<TAB>positive<TAB>negative".into()));
                }
                attributes.push(GroupAttribute::new(f[0], f[1], f[2], Vec::with_capacity(n)));
            }
            _ => break (no, line),
        }
    };
    if class_names.len() != nc || feature_names.len() != nf {
        return Err((next_section.0, format!("expected {nc} class and {nf} feature lines")));
    }
    if next_section.1.trim() != "[labels]" {
        return Err((next_section.0, "expected section [labels]".into()));
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, line) = lines.next("label")?;
        let y: usize = line.trim().parse().map_err(|_| (no, format!("invalid label {line:?}")))?;
        if y >= nc {
            return Err((no, format!("label {y} out of range for {nc} classes")));
        }
        labels.push(y);
    }
    let mut names = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for (section, out) in ["first_names", "last_names"].into_iter().zip(names.iter_mut()) {
        lines.section(section)?;
        for _ in 0..n {
            let (_, line) = lines.next("name")?;
            out.push((!line.is_empty()).then(|| line.to_string()));
        }
    }
    for a in &mut attributes {
        lines.section(&format!("group {}", a.name))?;
        for _ in 0..n {
            let (no, line) = lines.next("group value")?;
            a.values.push(match line.trim() {
                "1" => Some(true),
                "0" => Some(false),
                "?" => None,
                other => return Err((no, format!("invalid group value {other:?}"))),
            });
        }
    }
    lines.section("features")?;
    let mut features = FeatureMatrix::new(nf);
    let mut entries = Vec::new();
    for _ in 0..n {
        let (no, line) = lines.next("feature row")?;
        entries.clear();
        for cell in line.split_whitespace() {
            let parsed = cell
                .split_once(':')
                .and_then(|(j, v)| Some((j.parse::<usize>().ok()?, v.parse::<f64>().ok()?)));
            entries.push(parsed.ok_or((no, format!("invalid feature cell {cell:?}")))?);
        }
        features.push_sparse(&entries).map_err(|e| (no, e.to_string()))?;
    }
    let end = lines.last;
    let mut ds = Dataset::new(features, labels, feature_names, class_names).map_err(|e| (end, e.to_string()))?;
    let [first, last] = names;
    ds.first_names = first;
    ds.last_names = last;
    ds.groups = GroupLabels::new(attributes).map_err(|e| (1, e.to_string()))?;
    Ok(ds)
}
