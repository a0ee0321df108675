use std::sync::Arc;

use super::schema::{FeatureSchema, Label};
use crate::error::{Error, Result};

/// Instances with black-box (oracle) labels and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<FeatureSchema>,
    values: Vec<f64>,
    oracle_labels: Vec<Label>,
    truth_labels: Option<Vec<Label>>,
}

impl Dataset {
    pub fn new(
        schema: Arc<FeatureSchema>,
        rows: Vec<Vec<f64>>,
        oracle_labels: Vec<Label>,
        truth_labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        if rows.len() != oracle_labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} oracle labels",
                rows.len(),
                oracle_labels.len()
            )));
        }
        if let Some(t) = &truth_labels {
            if t.len() != rows.len() {
                return Err(Error::invalid(format!("{} rows but {} truth labels", rows.len(), t.len())));
            }
        }
        let bad_label = |l: &Label| *l as usize >= schema.class_labels().len();
        if oracle_labels.iter().chain(truth_labels.iter().flatten()).any(bad_label) {
            return Err(Error::invalid("label outside the schema's class labels"));
        }
        let mut values = Vec::with_capacity(rows.len() * schema.len());
        for row in &rows {
            schema.check_row(row)?;
            values.extend_from_slice(row);
        }
        Ok(Dataset { schema, values, oracle_labels, truth_labels })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.oracle_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oracle_labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.schema.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let m = self.schema.len();
        (0..self.len()).map(move |i| &self.values[i * m..(i + 1) * m])
    }

    pub fn oracle_labels(&self) -> &[Label] {
        &self.oracle_labels
    }

    pub fn truth_labels(&self) -> Option<&[Label]> {
        self.truth_labels.as_deref()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let m = self.schema.len();
        let mut values = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            schema: Arc::clone(&self.schema),
            values,
            oracle_labels: indices.iter().map(|&i| self.oracle_labels[i]).collect(),
            truth_labels: self.truth_labels.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Same instances relabelled with `oracle_labels`.
    pub fn with_oracle_labels(&self, oracle_labels: Vec<Label>) -> Result<Dataset> {
        let rows = self.rows().map(<[f64]>::to_vec).collect();
        Dataset::new(Arc::clone(&self.schema), rows, oracle_labels, self.truth_labels.clone())
    }

    /// Majority oracle label; ties go to label 0.
    pub fn majority_label(&self) -> Label {
        let ones = self.oracle_labels.iter().filter(|&&l| l == 1).count();
        if ones * 2 > self.len() {
            1
        } else {
            0
        }
    }
}
