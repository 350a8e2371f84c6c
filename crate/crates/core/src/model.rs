//! Shared data model: datasets, coalitions, quantities of interest and
//! explanation vectors, plus the hybrid-item composition every payoff uses.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One item's feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "")]
pub struct FeatureRow<T: Scalar = f64>(pub Vec<T>);

impl<T: Scalar> FeatureRow<T> {
    pub fn new(values: Vec<T>) -> Self {
        FeatureRow(values)
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T: Scalar> Deref for FeatureRow<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> From<Vec<T>> for FeatureRow<T> {
    fn from(values: Vec<T>) -> Self {
        FeatureRow(values)
    }
}

/// An ordered, immutable collection of items with `d` numeric features each.
///
/// Row order is significant: it is the tie-break order of every ranking built
/// on the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar = f64> {
    values: Vec<T>,
    n: usize,
    d: usize,
    feature_names: Vec<String>,
    ids: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        rows: Vec<Vec<T>>,
        feature_names: Vec<String>,
        ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::validation("dataset needs at least one feature"));
        }
        if rows.is_empty() {
            return Err(Error::validation("dataset needs at least one item"));
        }
        let n = rows.len();
        let mut values = Vec::with_capacity(n * d);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::validation(format!(
                    "row {r} has {} values, expected {d}",
                    row.len()
                )));
            }
            for (j, x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::Cell {
                        row: r,
                        column: feature_names[j].clone(),
                        message: "value is not finite".into(),
                    });
                }
            }
            values.extend(row);
        }
        if let Some(ids) = &ids {
            if ids.len() != n {
                return Err(Error::validation(format!(
                    "{} ids for {n} items",
                    ids.len()
                )));
            }
            let mut seen = HashSet::new();
            for id in ids {
                if !seen.insert(id.as_str()) {
                    return Err(Error::validation(format!("duplicate id {id:?}")));
                }
            }
        }
        Ok(Dataset {
            values,
            n,
            d,
            feature_names,
            ids,
        })
    }

    /// Builds a dataset with generated feature names `x1..xd`.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Self::new(rows, names, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn feature_row(&self, i: usize) -> FeatureRow<T> {
        FeatureRow(self.row(i).to_vec())
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn id(&self, i: usize) -> Option<&str> {
        self.ids.as_ref().map(|ids| ids[i].as_str())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Resolves an item selector: an id when ids are present, otherwise (or as a
    /// fallback) a 0-based row index.
    pub fn resolve_item(&self, selector: &str) -> Result<usize> {
        if let Some(ids) = &self.ids {
            if let Some(i) = ids.iter().position(|id| id == selector) {
                return Ok(i);
            }
        }
        match selector.trim().parse::<usize>() {
            Ok(i) if i < self.n => Ok(i),
            _ => Err(Error::validation(format!("unresolved item {selector:?}"))),
        }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "item index {i} out of range for {} items",
                self.n
            )))
        }
    }

    /// Reads a CSV file (header row, `,` separator, `.` decimal point).
    pub fn read_csv(path: impl AsRef<Path>, has_ids: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(file);
        let mut table = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::validation(format!("malformed CSV: {other:?}")),
            })?;
            table.push(record.iter().map(str::to_string).collect::<Vec<_>>());
        }
        validate_dataset(&table, has_ids)
    }

    /// Writes the dataset as CSV. Values use the shortest representation that
    /// parses back to the same bits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = Vec::with_capacity(self.d + 1);
        if self.ids.is_some() {
            header.push("id");
        }
        header.extend(self.feature_names.iter().map(String::as_str));
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, row) in self.rows().enumerate() {
            let mut cells: Vec<String> = Vec::with_capacity(self.d + 1);
            if let Some(id) = self.id(i) {
                cells.push(id.to_string());
            }
            cells.extend(row.iter().map(|x| x.to_string()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Validates a raw text table (header row first) into a dataset.
///
/// When `has_ids` is set the first column holds item identifiers.
pub fn validate_dataset<T: Scalar>(raw: &[Vec<String>], has_ids: bool) -> Result<Dataset<T>> {
    let (header, body) = raw
        .split_first()
        .ok_or_else(|| Error::validation("missing header row"))?;
    if body.is_empty() {
        return Err(Error::validation("no data rows"));
    }
    let skip = usize::from(has_ids);
    if header.len() <= skip {
        return Err(Error::validation("header has no feature columns"));
    }
    let names: Vec<String> = header[skip..].iter().map(|h| h.trim().to_string()).collect();
    let width = header.len();
    let mut rows = Vec::with_capacity(body.len());
    let mut ids = has_ids.then(Vec::new);
    for (r, cells) in body.iter().enumerate() {
        if cells.len() != width {
            return Err(Error::validation(format!(
                "ragged row {}: {} cells, header has {width}",
                r + 1,
                cells.len()
            )));
        }
        if let Some(ids) = ids.as_mut() {
            ids.push(cells[0].trim().to_string());
        }
        let mut row = Vec::with_capacity(names.len());
        for (j, cell) in cells[skip..].iter().enumerate() {
            let x: T = cell.trim().parse().map_err(|_| Error::Cell {
                row: r + 1,
                column: names[j].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::Cell {
                    row: r + 1,
                    column: names[j].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            row.push(x);
        }
        rows.push(row);
    }
    Dataset::new(rows, names, ids)
}

/// A set of feature indices, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Coalition {
    members: Vec<usize>,
}

impl Coalition {
    pub fn empty() -> Self {
        Coalition::default()
    }

    pub fn full(d: usize) -> Self {
        Coalition {
            members: (0..d).collect(),
        }
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>, d: usize) -> Result<Self> {
        let mut members: Vec<usize> = indices.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&j) = members.last() {
            if j >= d {
                return Err(Error::validation(format!(
                    "feature index {j} out of range for {d} features"
                )));
            }
        }
        Ok(Coalition { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    pub fn with(&self, j: usize) -> Self {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&j) {
            members.insert(pos, j);
        }
        Coalition { members }
    }

    pub fn complement(&self, d: usize) -> Self {
        Coalition {
            members: (0..d).filter(|j| !self.contains(*j)).collect(),
        }
    }

    pub fn mask(&self, d: usize) -> Vec<bool> {
        let mut mask = vec![false; d];
        for &j in &self.members {
            mask[j] = true;
        }
        mask
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Builds the hybrid item that takes coalition features from `u` and the rest
/// from `v`.
pub fn compose_hybrid<T: Scalar>(v: &[T], u: &[T], s: &Coalition) -> Result<FeatureRow<T>> {
    if v.len() != u.len() {
        return Err(Error::validation(format!(
            "row length mismatch: {} vs {}",
            v.len(),
            u.len()
        )));
    }
    if s.members().last().is_some_and(|&j| j >= v.len()) {
        return Err(Error::validation("coalition references a missing feature"));
    }
    let mut out = v.to_vec();
    for &j in s.members() {
        out[j] = u[j];
    }
    Ok(FeatureRow(out))
}

/// Mask-based hybrid composition into a reusable buffer.
#[inline]
pub(crate) fn compose_into<T: Scalar>(buf: &mut [T], v: &[T], u: &[T], mask: &[bool]) {
    for j in 0..buf.len() {
        buf[j] = if mask[j] { u[j] } else { v[j] };
    }
}

/// Which payoff is being explained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QoiKind {
    Score,
    Rank,
    TopK(usize),
    PairwiseScore,
    PairwiseRank,
    PairwiseTopK(usize),
}

impl QoiKind {
    pub fn is_pairwise(self) -> bool {
        matches!(
            self,
            QoiKind::PairwiseScore | QoiKind::PairwiseRank | QoiKind::PairwiseTopK(_)
        )
    }

    pub fn k(self) -> Option<usize> {
        match self {
            QoiKind::TopK(k) | QoiKind::PairwiseTopK(k) => Some(k),
            _ => None,
        }
    }

    /// The single-item payoff underlying this kind.
    pub fn item_kind(self) -> QoiKind {
        match self {
            QoiKind::PairwiseScore => QoiKind::Score,
            QoiKind::PairwiseRank => QoiKind::Rank,
            QoiKind::PairwiseTopK(k) => QoiKind::TopK(k),
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QoiKind::Score => "score",
            QoiKind::Rank => "rank",
            QoiKind::TopK(_) => "topk",
            QoiKind::PairwiseScore => "pairwise-score",
            QoiKind::PairwiseRank => "pairwise-rank",
            QoiKind::PairwiseTopK(_) => "pairwise-topk",
        }
    }

    pub fn parse(name: &str, k: Option<usize>) -> Result<Self> {
        let need_k = || {
            k.ok_or_else(|| Error::validation(format!("qoi {name} requires k")))
        };
        let kind = match name {
            "score" => QoiKind::Score,
            "rank" => QoiKind::Rank,
            "topk" => QoiKind::TopK(need_k()?),
            "pairwise-score" => QoiKind::PairwiseScore,
            "pairwise-rank" => QoiKind::PairwiseRank,
            "pairwise-topk" => QoiKind::PairwiseTopK(need_k()?),
            other => return Err(Error::validation(format!("unknown qoi {other:?}"))),
        };
        if kind.k().is_none() && k.is_some() {
            return Err(Error::validation(format!("qoi {name} takes no k")));
        }
        Ok(kind)
    }

    pub fn validate(self, n: usize) -> Result<()> {
        match self.k() {
            Some(0) => Err(Error::validation("k must be positive")),
            Some(k) if k > n => Err(Error::validation(format!("k={k} exceeds n={n}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for QoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k() {
            Some(k) => write!(f, "{}(k={k})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QoiDescriptor {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl Serialize for QoiKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QoiDescriptor {
            kind: self.name().to_string(),
            k: self.k(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QoiKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = QoiDescriptor::deserialize(d)?;
        QoiKind::parse(&desc.kind, desc.k).map_err(serde::de::Error::custom)
    }
}

/// The item, or ordered pair of items, an explanation is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Subject {
    Item(usize),
    /// `item` is the explained item; features are switched toward `partner`.
    Pair { item: usize, partner: usize },
}

impl Subject {
    pub fn item(self) -> usize {
        match self {
            Subject::Item(i) | Subject::Pair { item: i, .. } => i,
        }
    }

    pub fn partner(self) -> Option<usize> {
        match self {
            Subject::Item(_) => None,
            Subject::Pair { partner, .. } => Some(partner),
        }
    }
}

/// Per-feature contributions for one item (or pair) under one QoI.
///
/// `reconstruction` always equals `baseline + Σ contributions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ExplanationVector<T: Scalar = f64> {
    pub contributions: Vec<T>,
    pub qoi: QoiKind,
    pub subject: Subject,
    pub baseline: T,
    pub reconstruction: T,
    pub options_fingerprint: String,
}

impl<T: Scalar> ExplanationVector<T> {
    pub fn new(
        contributions: Vec<T>,
        qoi: QoiKind,
        subject: Subject,
        baseline: T,
        options_fingerprint: String,
    ) -> Self {
        let reconstruction = baseline + contributions.iter().copied().sum::<T>();
        ExplanationVector {
            contributions,
            qoi,
            subject,
            baseline,
            reconstruction,
            options_fingerprint,
        }
    }

    pub fn total(&self) -> T {
        self.contributions.iter().copied().sum()
    }

    pub fn d(&self) -> usize {
        self.contributions.len()
    }

    /// Contributions with the sign flipped, for "positive = helpful" display of
    /// rank explanations.
    pub fn flipped(&self) -> Self {
        let contributions = self.contributions.iter().map(|&c| -c).collect();
        ExplanationVector {
            contributions,
            qoi: self.qoi,
            subject: self.subject,
            baseline: -self.baseline,
            reconstruction: -self.reconstruction,
            options_fingerprint: self.options_fingerprint.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|c| c.to_string()).collect())
            .collect()
    }

    #[test]
    fn minimal_dataset() {
        let ds: Dataset = validate_dataset(&table(&[&["x"], &["0"]]), false).unwrap();
        assert_eq!((ds.n(), ds.d()), (1, 1));
        assert_eq!(ds.row(0), &[0.0]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let err = validate_dataset::<f64>(&table(&[&["a", "b"], &["1", "2"], &["3", "abc"]]), false)
            .unwrap_err();
        match err {
            Error::Cell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_duplicate_ids_rejected() {
        assert!(validate_dataset::<f64>(&table(&[&["a", "b"], &["1"]]), false).is_err());
        let dup = table(&[&["id", "a"], &["x", "1"], &["x", "2"]]);
        assert!(matches!(
            validate_dataset::<f64>(&dup, true),
            Err(Error::Validation(_))
        ));
        assert!(validate_dataset::<f64>(&table(&[&["a"]]), false).is_err());
        assert!(validate_dataset::<f64>(&table(&[&["a"], &["inf"]]), false).is_err());
    }

    #[test]
    fn ids_resolve_before_indices() {
        let ds: Dataset =
            validate_dataset(&table(&[&["id", "a"], &["1", "5"], &["0", "6"]]), true).unwrap();
        assert_eq!(ds.resolve_item("0").unwrap(), 1);
        assert_eq!(ds.resolve_item("1").unwrap(), 0);
        assert!(ds.resolve_item("7").is_err());
    }

    #[test]
    fn hybrid_composition() {
        let bob = [4.0, 5.0, 5.0];
        let osi = [3.0, 3.0, 3.0];
        let essay = Coalition::from_indices([2], 3).unwrap();
        assert_eq!(compose_hybrid(&bob, &osi, &essay).unwrap().0, vec![4.0, 5.0, 3.0]);
        assert_eq!(compose_hybrid(&bob, &osi, &Coalition::empty()).unwrap().0, bob.to_vec());
        assert_eq!(compose_hybrid(&bob, &osi, &Coalition::full(3)).unwrap().0, osi.to_vec());
        assert!(compose_hybrid(&bob, &[1.0], &essay).is_err());
    }

    #[test]
    fn coalition_ops() {
        let s = Coalition::from_indices([3, 1, 1], 5).unwrap();
        assert_eq!(s.members(), &[1, 3]);
        assert_eq!(s.with(2).members(), &[1, 2, 3]);
        assert_eq!(s.complement(5).members(), &[0, 2, 4]);
        assert_eq!(s.to_string(), "{1,3}");
        assert!(Coalition::from_indices([5], 5).is_err());
    }

    #[test]
    fn qoi_parsing() {
        assert_eq!(QoiKind::parse("topk", Some(4)).unwrap(), QoiKind::TopK(4));
        assert!(QoiKind::parse("topk", None).is_err());
        assert!(QoiKind::parse("rank", Some(3)).is_err());
        assert!(QoiKind::TopK(0).validate(8).is_err());
        assert!(QoiKind::TopK(9).validate(8).is_err());
        let json = serde_json::to_string(&QoiKind::PairwiseTopK(3)).unwrap();
        assert_eq!(json, r#"{"kind":"pairwise-topk","k":3}"#);
        assert_eq!(serde_json::from_str::<QoiKind>(&json).unwrap(), QoiKind::PairwiseTopK(3));
    }

    #[test]
    fn reconstruction_is_baseline_plus_sum() {
        let e = ExplanationVector::new(vec![0.25, -1.0], QoiKind::Score, Subject::Item(0), 2.0, String::new());
        assert_eq!(e.reconstruction, 1.25);
        assert_eq!(e.flipped().reconstruction, -1.25);
    }
}
