use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a class label inside [`FeatureSchema::class_labels`].
pub type Label = u8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous {
        /// Closed value domain; premises are clamped to it on normalization.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<(f64, f64)>,
    },
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn continuous(name: impl Into<String>) -> Self {
        Feature { name: name.into(), kind: FeatureKind::Continuous { domain: None } }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical { categories: categories.into_iter().map(Into::into).collect() },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn categories(&self) -> &[String] {
        match &self.kind {
            FeatureKind::Categorical { categories } => categories,
            FeatureKind::Continuous { .. } => &[],
        }
    }

    pub fn category_index(&self, token: &str) -> Option<u32> {
        self.categories().iter().position(|c| c == token).map(|i| i as u32)
    }
}

/// Ordered feature list plus the two class labels.
///
/// Instances are stored as `f64` rows: continuous values verbatim, categorical
/// values as the index of their category in [`Feature::categories`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct FeatureSchema {
    features: Vec<Feature>,
    class_labels: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    features: Vec<Feature>,
    class_labels: Vec<String>,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::new(raw.features, raw.class_labels)
    }
}

impl From<FeatureSchema> for RawSchema {
    fn from(s: FeatureSchema) -> Self {
        let [a, b] = s.class_labels;
        RawSchema { features: s.features, class_labels: vec![a, b] }
    }
}

impl FeatureSchema {
    pub fn new<S: Into<String>>(features: Vec<Feature>, class_labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = class_labels.into_iter().map(Into::into).collect();
        let class_labels: [String; 2] = labels.try_into().map_err(|l: Vec<String>| {
            Error::invalid(format!("exactly 2 class labels are supported, got {}", l.len()))
        })?;
        if class_labels[0] == class_labels[1] {
            return Err(Error::invalid("class labels must be distinct"));
        }
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{}`", f.name)));
            }
            match &f.kind {
                FeatureKind::Categorical { categories } => {
                    if categories.is_empty() {
                        return Err(Error::invalid(format!("categorical feature `{}` has no categories", f.name)));
                    }
                    let distinct: HashSet<_> = categories.iter().collect();
                    if distinct.len() != categories.len() {
                        return Err(Error::invalid(format!("feature `{}` lists a category twice", f.name)));
                    }
                }
                FeatureKind::Continuous { domain: Some((lo, hi)) } if lo.is_nan() || hi.is_nan() || lo > hi => {
                    return Err(Error::invalid(format!("feature `{}` has an empty domain", f.name)));
                }
                FeatureKind::Continuous { .. } => {}
            }
        }
        Ok(FeatureSchema { features, class_labels })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &Feature {
        &self.features[index]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_labels(&self) -> &[String; 2] {
        &self.class_labels
    }

    pub fn label_name(&self, label: Label) -> &str {
        &self.class_labels[label as usize]
    }

    /// Resolves a label token, accepting either a class name or its index.
    pub fn parse_label(&self, token: &str) -> Option<Label> {
        let token = token.trim();
        if let Some(i) = self.class_labels.iter().position(|c| c == token) {
            return Some(i as Label);
        }
        match token.parse::<u8>() {
            Ok(i) if (i as usize) < self.class_labels.len() => Some(i),
            _ => None,
        }
    }

    /// Checks that `row` has one value per feature and valid category codes.
    pub fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::invalid(format!(
                "instance has {} values, schema has {} features",
                row.len(),
                self.features.len()
            )));
        }
        for (f, &v) in self.features.iter().zip(row) {
            if let FeatureKind::Categorical { categories } = &f.kind {
                if v.fract() != 0.0 || v < 0.0 || v as usize >= categories.len() {
                    return Err(Error::invalid(format!("`{v}` is not a category code of `{}`", f.name)));
                }
            } else if v.is_nan() {
                return Err(Error::invalid(format!("NaN value for feature `{}`", f.name)));
            }
        }
        Ok(())
    }
}
