//! Bundled example data.

use crate::model::{validate_dataset, Dataset};
use crate::scalar::Scalar;

/// The eight-applicant admissions table (`gpa`, `sat`, `essay`, ids in the
/// first column) as CSV text.
pub const ADMISSIONS_CSV: &str = include_str!("../data/admissions.csv");

pub fn admissions() -> Dataset<f64> {
    admissions_as()
}

pub fn admissions_as<T: Scalar>() -> Dataset<T> {
    let table: Vec<Vec<String>> = ADMISSIONS_CSV
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    validate_dataset(&table, true).expect("bundled fixture is valid")
}
