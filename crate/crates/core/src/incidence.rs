//! Binary incidence matrices: parsing, haplotype reduction and infinite-sites checks.
//!
//! Rows are sampled individuals, columns are polymorphic sites. A `0` is the
//! ancestral state and a `1` the mutant state; the ancestral state is assumed known.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Text encodings accepted by [`parse_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Comma separated cells, optional header row and optional label column.
    Csv,
    /// One row per line, no separators, optional `label<TAB>` prefix.
    Plain01,
}

/// An `n x m` binary matrix of individuals by sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: Vec<Vec<bool>>,
    individual_labels: Vec<String>,
    site_labels: Vec<String>,
}

fn default_individual_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("i{i}")).collect()
}

fn default_site_labels(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("s{j}")).collect()
}

fn first_duplicate(labels: &[String]) -> Option<(usize, &str)> {
    let mut seen = HashSet::new();
    labels
        .iter()
        .enumerate()
        .find(|(_, l)| !seen.insert(l.as_str()))
        .map(|(i, l)| (i, l.as_str()))
}

impl IncidenceMatrix {
    /// Builds a validated matrix. `None` labels are replaced by `i1..in` / `s1..sm`.
    pub fn new(
        rows: Vec<Vec<bool>>,
        individual_labels: Option<Vec<String>>,
        site_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "an incidence matrix needs at least 2 individuals, got {n}"
            )));
        }
        let m = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(Error::Invalid(format!(
                "row {} has {} sites, expected {m}",
                i + 1,
                r.len()
            )));
        }
        let individual_labels = individual_labels.unwrap_or_else(|| default_individual_labels(n));
        let site_labels = site_labels.unwrap_or_else(|| default_site_labels(m));
        if individual_labels.len() != n || site_labels.len() != m {
            return Err(Error::Invalid(
                "label count does not match matrix shape".into(),
            ));
        }
        if let Some((_, l)) = first_duplicate(&individual_labels) {
            return Err(Error::Invalid(format!("duplicate individual label {l:?}")));
        }
        if let Some((_, l)) = first_duplicate(&site_labels) {
            return Err(Error::Invalid(format!("duplicate site label {l:?}")));
        }
        Ok(Self {
            rows,
            individual_labels,
            site_labels,
        })
    }

    /// Convenience constructor from `0`/`1` strings, one per individual.
    pub fn from_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.as_ref()
                    .chars()
                    .enumerate()
                    .map(|(j, c)| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::parse(
                            i + 1,
                            j + 1,
                            format!("non-binary symbol {other:?}"),
                        )),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed, None, None)
    }

    pub fn n_individuals(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sites(&self) -> usize {
        self.site_labels.len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn get(&self, individual: usize, site: usize) -> bool {
        self.rows[individual][site]
    }

    pub fn individual_labels(&self) -> &[String] {
        &self.individual_labels
    }

    pub fn site_labels(&self) -> &[String] {
        &self.site_labels
    }

    /// Rows carrying the mutant state at `site`.
    pub fn carriers(&self, site: usize) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| self.rows[i][site])
            .collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_sites(&self, keep: &[usize]) -> IncidenceMatrix {
        IncidenceMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            individual_labels: self.individual_labels.clone(),
            site_labels: keep.iter().map(|&j| self.site_labels[j].clone()).collect(),
        }
    }

    /// CSV with a header row and a label column; parses back to the same matrix.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let header = std::iter::once("id").chain(self.site_labels.iter().map(String::as_str));
        let rows = self
            .individual_labels
            .iter()
            .zip(&self.rows)
            .map(|(label, row)| {
                std::iter::once(label.as_str())
                    .chain(row.iter().map(|&b| if b { "1" } else { "0" }))
                    .collect()
            });
        for record in std::iter::once(header.collect::<Vec<_>>()).chain(rows) {
            writer.write_record(&record).expect("writing to memory");
        }
        String::from_utf8(writer.into_inner().expect("writing to memory"))
            .expect("labels are UTF-8")
    }

    pub fn to_plain01(&self) -> String {
        let mut out = String::new();
        for (label, row) in self.individual_labels.iter().zip(&self.rows) {
            let _ = write!(out, "{label}\t");
            out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

fn is_binary_cell(cell: &str) -> bool {
    cell == "0" || cell == "1"
}

/// Non-empty physical lines with their 1-based line numbers, CR stripped.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

/// Decodes an incidence matrix, preserving row and column order.
pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<IncidenceMatrix> {
    match format {
        MatrixFormat::Csv => parse_csv(text),
        MatrixFormat::Plain01 => parse_plain01(text),
    }
}

fn csv_table(text: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    // The reader's line count and offsets ignore skipped blank lines, so count
    // newlines up to the first byte of the record itself.
    let bytes = text.as_bytes();
    let line_at = |p: Option<&csv::Position>| {
        let mut at = p.map_or(0, |p| p.byte() as usize);
        while at < bytes.len() && matches!(bytes[at], b'\r' | b'\n') {
            at += 1;
        }
        bytes[..at].iter().filter(|&&b| b == b'\n').count() + 1
    };
    let mut table = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(line_at(e.position()), 1, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = line_at(record.position());
        table.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(table)
}

fn parse_csv(text: &str) -> Result<IncidenceMatrix> {
    let table = csv_table(text)?;
    let Some((_, last)) = table.last() else {
        return Err(Error::parse(1, 1, "empty input"));
    };
    // A label column is present when data rows start with a non-binary cell; the
    // last row is always data, so it decides.
    let has_labels = !is_binary_cell(&last[0]);
    let start = usize::from(has_labels);
    let has_header = table[0].1[start..].iter().any(|c| !is_binary_cell(c))
        || (table.len() > 1 && !is_binary_cell(&table[0].1[0]) && !has_labels)
        // With no site columns only the conventional header name identifies a header.
        || (table.len() > 1 && table[0].1.len() == start && table[0].1[0].eq_ignore_ascii_case("id"));

    let width = table[0].1.len();
    let mut site_labels = None;
    let mut data = &table[..];
    if has_header {
        site_labels = Some(table[0].1[start..].to_vec());
        data = &table[1..];
    }
    let mut rows = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for (no, cells) in data {
        if cells.len() != width {
            return Err(Error::parse(
                *no,
                cells.len().min(width) + 1,
                format!("row has {} cells, expected {width}", cells.len()),
            ));
        }
        if has_labels {
            labels.push(cells[0].clone());
        }
        let row = cells[start..]
            .iter()
            .enumerate()
            .map(|(j, c)| match c.as_str() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(
                    *no,
                    start + j + 1,
                    format!("non-binary symbol {other:?}"),
                )),
            })
            .collect::<Result<Vec<bool>>>()?;
        rows.push(row);
    }
    check_labels(&labels, data, 1)?;
    if let Some(sl) = &site_labels {
        if let Some((j, l)) = first_duplicate(sl) {
            return Err(Error::parse(
                table[0].0,
                start + j + 1,
                format!("duplicate site label {l:?}"),
            ));
        }
    }
    IncidenceMatrix::new(rows, has_labels.then_some(labels), site_labels)
        .map_err(|e| relocate(e, data.first().map_or(1, |d| d.0)))
}

fn check_labels<T>(labels: &[String], data: &[(usize, T)], column: usize) -> Result<()> {
    if let Some((i, l)) = first_duplicate(labels) {
        return Err(Error::parse(
            data[i].0,
            column,
            format!("duplicate individual label {l:?}"),
        ));
    }
    Ok(())
}

fn relocate(e: Error, line: usize) -> Error {
    match e {
        Error::Invalid(message) => Error::Parse {
            line,
            column: 1,
            message,
        },
        other => other,
    }
}

fn parse_plain01(text: &str) -> Result<IncidenceMatrix> {
    let lines = content_lines(text);
    if lines.is_empty() {
        return Err(Error::parse(1, 1, "empty input"));
    }
    let mut rows = Vec::with_capacity(lines.len());
    let mut labels = Vec::new();
    let mut labelled = None;
    let mut width = None;
    for &(no, line) in &lines {
        let (label, body, offset) = match line.split_once('\t') {
            Some((l, b)) => (
                Some(l.trim().to_string()),
                b.trim_end(),
                l.chars().count() + 1,
            ),
            None => (None, line.trim_end(), 0),
        };
        match labelled {
            None => labelled = Some(label.is_some()),
            Some(expected) if expected != label.is_some() => {
                return Err(Error::parse(
                    no,
                    1,
                    "label prefix present on some rows only",
                ));
            }
            _ => {}
        }
        if let Some(l) = label {
            labels.push(l);
        }
        let row = body
            .chars()
            .enumerate()
            .map(|(j, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(
                    no,
                    offset + j + 1,
                    format!("non-binary symbol {other:?}"),
                )),
            })
            .collect::<Result<Vec<bool>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    no,
                    offset + row.len().min(w) + 1,
                    format!("row has {} sites, expected {w}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if let Some((i, l)) = first_duplicate(&labels) {
        return Err(Error::parse(
            lines[i].0,
            1,
            format!("duplicate individual label {l:?}"),
        ));
    }
    IncidenceMatrix::new(rows, labelled.unwrap_or(false).then_some(labels), None)
        .map_err(|e| relocate(e, lines[0].0))
}

/// Distinct rows of a matrix with their multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaplotypeData {
    haplotypes: Vec<Vec<bool>>,
    frequencies: Vec<usize>,
    groups: Vec<Vec<usize>>,
    individual_labels: Vec<String>,
    site_labels: Vec<String>,
}

impl HaplotypeData {
    /// Number of distinct haplotypes `k`.
    pub fn len(&self) -> usize {
        self.haplotypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.haplotypes.is_empty()
    }

    pub fn n_individuals(&self) -> usize {
        self.individual_labels.len()
    }

    pub fn haplotypes(&self) -> &[Vec<bool>] {
        &self.haplotypes
    }

    pub fn frequencies(&self) -> &[usize] {
        &self.frequencies
    }

    /// Individual indices carrying each haplotype, in input order.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Individual labels carrying haplotype `h`.
    pub fn group_labels(&self, h: usize) -> Vec<&str> {
        self.groups[h]
            .iter()
            .map(|&i| self.individual_labels[i].as_str())
            .collect()
    }

    pub fn individual_labels(&self) -> &[String] {
        &self.individual_labels
    }

    pub fn site_labels(&self) -> &[String] {
        &self.site_labels
    }

    /// Re-expands to one row per individual, in original individual order.
    pub fn expand(&self) -> Vec<Vec<bool>> {
        let mut rows = vec![Vec::new(); self.n_individuals()];
        for (h, group) in self.groups.iter().enumerate() {
            for &i in group {
                rows[i] = self.haplotypes[h].clone();
            }
        }
        rows
    }
}

/// Collapses identical rows, keeping haplotypes in first-occurrence order.
pub fn deduplicate(mat: &IncidenceMatrix) -> HaplotypeData {
    let mut index: HashMap<&[bool], usize> = HashMap::new();
    let mut haplotypes = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, row) in mat.rows.iter().enumerate() {
        let h = *index.entry(row.as_slice()).or_insert_with(|| {
            haplotypes.push(row.clone());
            groups.push(Vec::new());
            haplotypes.len() - 1
        });
        groups[h].push(i);
    }
    HaplotypeData {
        frequencies: groups.iter().map(Vec::len).collect(),
        haplotypes,
        groups,
        individual_labels: mat.individual_labels.clone(),
        site_labels: mat.site_labels.clone(),
    }
}

/// Fixed-width row set used for column comparisons.
#[derive(Clone, PartialEq, Eq, Hash)]
pub(crate) struct RowSet {
    words: Vec<u64>,
}

impl RowSet {
    pub(crate) fn from_column(rows: &[Vec<bool>], site: usize) -> Self {
        let mut words = vec![0u64; rows.len().div_ceil(64)];
        for (i, r) in rows.iter().enumerate() {
            if r[site] {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self { words }
    }

    pub(crate) fn len(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub(crate) fn intersection_len(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Whether two carrier sets overlap without one containing the other.
pub(crate) fn sets_conflict(a: &RowSet, b: &RowSet) -> bool {
    let inter = a.intersection_len(b);
    inter > 0 && inter < a.len() && inter < b.len()
}

fn conflict_index_pairs(rows: &[Vec<bool>], m: usize) -> Vec<(usize, usize)> {
    let sets: Vec<RowSet> = (0..m).map(|j| RowSet::from_column(rows, j)).collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if sets_conflict(&sets[i], &sets[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Every unordered site pair whose carrier sets are neither disjoint nor nested.
///
/// The list is empty exactly when the matrix admits a rooted perfect phylogeny.
pub fn ism_conflicts(mat: &IncidenceMatrix) -> Vec<(String, String)> {
    conflict_index_pairs(&mat.rows, mat.n_sites())
        .into_iter()
        .map(|(i, j)| (mat.site_labels[i].clone(), mat.site_labels[j].clone()))
        .collect()
}

/// Greedily drops the site involved in the most conflicts (lowest index on ties)
/// until the matrix is conflict-free. Returns the filtered matrix and removed site labels.
pub fn filter_to_ism(mat: &IncidenceMatrix) -> (IncidenceMatrix, Vec<String>) {
    let m = mat.n_sites();
    let mut pairs = conflict_index_pairs(&mat.rows, m);
    let mut removed = vec![false; m];
    let mut removed_labels = Vec::new();
    while !pairs.is_empty() {
        let mut degree = vec![0usize; m];
        for &(i, j) in &pairs {
            degree[i] += 1;
            degree[j] += 1;
        }
        // max_by_key keeps the last maximum, so scan in reverse for the lowest index.
        let worst = (0..m)
            .rev()
            .max_by_key(|&j| degree[j])
            .expect("m > 0 when conflicts exist");
        removed[worst] = true;
        removed_labels.push(mat.site_labels[worst].clone());
        pairs.retain(|&(i, j)| i != worst && j != worst);
    }
    let keep: Vec<usize> = (0..m).filter(|&j| !removed[j]).collect();
    (mat.select_sites(&keep), removed_labels)
}
