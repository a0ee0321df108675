//! Data-free mode: fit a Gaussian to (or take explicit parameters for) the
//! feature distribution, sample a surrogate training set, and label it by
//! querying an external oracle.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::TheoryClassifier;
use crate::error::{Error, Result};
use crate::model::{FeatureKind, FeatureSchema, Label};

/// Added to the covariance diagonal when fitting.
pub const COVARIANCE_RIDGE: f64 = 1e-6;

/// Joint Gaussian over the continuous features (schema order) and independent
/// marginals over the categorical ones (schema order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub categorical_marginals: Vec<Vec<f64>>,
}

fn split_kinds(schema: &FeatureSchema) -> (Vec<usize>, Vec<usize>) {
    (0..schema.len()).partition(|&f| !schema.feature(f).is_categorical())
}

impl GaussianModel {
    /// Maximum-likelihood fit, with [`COVARIANCE_RIDGE`] on the diagonal.
    pub fn fit<'a>(schema: &FeatureSchema, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        if rows.len() < 2 {
            return Err(Error::invalid("fitting needs at least 2 rows"));
        }
        for r in &rows {
            schema.check_row(r)?;
        }
        let (cont, cat) = split_kinds(schema);
        let n = rows.len() as f64;
        let mean: Vec<f64> = cont.iter().map(|&f| rows.iter().map(|r| r[f]).sum::<f64>() / n).collect();
        let mut covariance = vec![vec![0.0; cont.len()]; cont.len()];
        for r in &rows {
            for (a, &fa) in cont.iter().enumerate() {
                for (b, &fb) in cont.iter().enumerate().skip(a) {
                    covariance[a][b] += (r[fa] - mean[a]) * (r[fb] - mean[b]);
                }
            }
        }
        // only the upper triangle was accumulated
        let k = cont.len();
        let covariance: Vec<Vec<f64>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| covariance[a.min(b)][a.max(b)] / n + if a == b { COVARIANCE_RIDGE } else { 0.0 })
                    .collect()
            })
            .collect();
        let categorical_marginals = cat
            .iter()
            .map(|&f| {
                let mut counts = vec![0.0; schema.feature(f).categories().len()];
                for r in &rows {
                    counts[r[f] as usize] += 1.0;
                }
                counts.iter().map(|c| c / n).collect()
            })
            .collect();
        Ok(GaussianModel { mean, covariance, categorical_marginals })
    }

    /// Explicit parameters, validated against `schema` and kept as given.
    pub fn from_params(
        schema: &FeatureSchema,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        categorical_marginals: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let model = GaussianModel { mean, covariance, categorical_marginals };
        model.validate(schema)?;
        Ok(model)
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        let (cont, cat) = split_kinds(schema);
        let k = cont.len();
        if self.mean.len() != k || self.covariance.len() != k || self.covariance.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("model dimensions do not match the {k} continuous features")));
        }
        for a in 0..k {
            if self.covariance[a][a] < 0.0 {
                return Err(Error::invalid("covariance diagonal must be non-negative"));
            }
            for b in 0..a {
                if (self.covariance[a][b] - self.covariance[b][a]).abs() > 1e-9 {
                    return Err(Error::invalid("covariance must be symmetric"));
                }
            }
        }
        if self.categorical_marginals.len() != cat.len() {
            return Err(Error::invalid("one marginal per categorical feature is required"));
        }
        for (p, &f) in self.categorical_marginals.iter().zip(&cat) {
            let feat = schema.feature(f);
            if p.len() != feat.categories().len() || p.iter().any(|&x| x.is_nan() || x < 0.0) {
                return Err(Error::invalid(format!("bad marginal for feature `{}`", feat.name)));
            }
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("marginal of `{}` does not sum to 1", feat.name)));
            }
        }
        Ok(())
    }

    /// Lower factor `L` with `L·Lᵀ = covariance`. Falls back to an eigen
    /// decomposition for singular (but PSD) matrices.
    fn factor(&self) -> Result<DMatrix<f64>> {
        let k = self.mean.len();
        let cov = DMatrix::from_fn(k, k, |i, j| self.covariance[i][j]);
        if let Some(ch) = cov.clone().cholesky() {
            return Ok(ch.l());
        }
        let eig = SymmetricEigen::new(cov);
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if eig.eigenvalues.iter().any(|&v| v < -1e-9 * scale) {
            return Err(Error::Numeric("covariance is not positive semi-definite".into()));
        }
        let sqrt = DVector::from_iterator(k, eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()));
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
    }

    pub fn sample<R: Rng + ?Sized>(&self, schema: &FeatureSchema, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        self.validate(schema)?;
        let (cont, cat) = split_kinds(schema);
        let l = self.factor()?;
        let mean = DVector::from_column_slice(&self.mean);
        let pickers = self
            .categorical_marginals
            .iter()
            .map(|p| WeightedIndex::new(p).map_err(|e| Error::Numeric(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let z = DVector::from_iterator(cont.len(), (0..cont.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let x = &mean + &l * z;
            let mut row = vec![0.0; schema.len()];
            for (k, &f) in cont.iter().enumerate() {
                row[f] = x[k];
            }
            for (picker, &f) in pickers.iter().zip(&cat) {
                row[f] = picker.sample(rng) as f64;
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Something that labels instances on request, standing in for the black box.
pub trait Oracle {
    fn label(&mut self, schema: &FeatureSchema, rows: &[Vec<f64>]) -> Result<Vec<Label>>;
}

impl Oracle for TheoryClassifier {
    fn label(&mut self, _schema: &FeatureSchema, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
        Ok(rows.iter().map(|r| self.predict(r)).collect())
    }
}

/// Wraps a per-row labelling function.
pub struct FnOracle<F>(pub F);

impl<F: FnMut(&[f64]) -> Label> Oracle for FnOracle<F> {
    fn label(&mut self, _schema: &FeatureSchema, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
        Ok(rows.iter().map(|r| (self.0)(r)).collect())
    }
}

/// Formats a row as a headerless CSV record in schema order; categorical
/// values are written by name.
pub fn format_row(schema: &FeatureSchema, row: &[f64]) -> Vec<String> {
    schema
        .features()
        .iter()
        .zip(row)
        .map(|(f, &v)| match &f.kind {
            FeatureKind::Categorical { categories } => categories[v as usize].clone(),
            FeatureKind::Continuous { .. } => v.to_string(),
        })
        .collect()
}

/// An external executable: headerless CSV rows on stdin, one label token per
/// row on stdout. Run through `sh -c`.
#[derive(Debug, Clone)]
pub struct CommandOracle {
    pub command: String,
}

impl CommandOracle {
    pub fn new(command: impl Into<String>) -> Self {
        CommandOracle { command: command.into() }
    }
}

impl Oracle for CommandOracle {
    fn label(&mut self, schema: &FeatureSchema, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
        let oracle_err = |row: usize, message: String| Error::Oracle { row, message };
        let mut input = Vec::new();
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut input);
            for r in rows {
                w.write_record(format_row(schema, r)).map_err(|e| oracle_err(0, e.to_string()))?;
            }
            w.flush()?;
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| oracle_err(0, format!("cannot start `{}`: {e}", self.command)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            // the oracle may exit early; its output is checked below
            let _ = stdin.write_all(&input);
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let mut labels = Vec::with_capacity(rows.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| oracle_err(labels.len(), e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if labels.len() == rows.len() {
                return Err(oracle_err(labels.len(), "more labels than rows".into()));
            }
            let label = schema
                .parse_label(&line)
                .ok_or_else(|| oracle_err(labels.len(), format!("unknown label token `{}`", line.trim())))?;
            labels.push(label);
        }
        let _ = writer.join();
        let status = child.wait()?;
        if !status.success() {
            return Err(oracle_err(labels.len(), format!("oracle exited with {status}")));
        }
        if labels.len() != rows.len() {
            return Err(oracle_err(labels.len(), format!("expected {} labels, got {}", rows.len(), labels.len())));
        }
        Ok(labels)
    }
}

/// One label per row, in row order.
pub fn label_with_oracle(schema: &FeatureSchema, rows: &[Vec<f64>], oracle: &mut dyn Oracle) -> Result<Vec<Label>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let labels = oracle.label(schema, rows)?;
    if labels.len() != rows.len() {
        return Err(Error::Oracle { row: labels.len().min(rows.len()), message: "label count mismatch".into() });
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::Feature;

    fn schema2() -> FeatureSchema {
        FeatureSchema::new(vec![Feature::continuous("a"), Feature::continuous("b")], ["n", "p"]).unwrap()
    }

    #[test]
    fn fit_hand_computed() {
        let s = schema2();
        let rows = [vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 7.0]];
        let m = GaussianModel::fit(&s, rows.iter().map(Vec::as_slice)).unwrap();
        assert_abs_diff_eq!(m.mean[0], 3.0);
        assert_abs_diff_eq!(m.mean[1], 5.0);
        // var(a) = (4+0+4)/3, var(b) = (9+1+4)/3, cov = (6+0+4)/3
        assert_abs_diff_eq!(m.covariance[0][0], 8.0 / 3.0 + 1e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(m.covariance[1][1], 14.0 / 3.0 + 1e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(m.covariance[0][1], 10.0 / 3.0, epsilon = 1e-12);
        assert_eq!(m.covariance[0][1], m.covariance[1][0]);
    }

    #[test]
    fn constant_column_gets_ridge() {
        let s = schema2();
        let rows = [vec![1.0, 4.0], vec![1.0, 5.0]];
        let m = GaussianModel::fit(&s, rows.iter().map(Vec::as_slice)).unwrap();
        assert_abs_diff_eq!(m.covariance[0][0], 1e-6, epsilon = 1e-15);
    }

    #[test]
    fn fit_needs_two_rows() {
        let s = schema2();
        let rows = [vec![1.0, 4.0]];
        assert!(GaussianModel::fit(&s, rows.iter().map(Vec::as_slice)).is_err());
    }

    #[test]
    fn params_passthrough_and_zero_covariance() {
        let s = schema2();
        let ident = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = GaussianModel::from_params(&s, vec![0.0, 0.0], ident.clone(), vec![]).unwrap();
        assert_eq!(m.covariance, ident);
        let zero = GaussianModel::from_params(&s, vec![2.0, -1.0], vec![vec![0.0; 2]; 2], vec![]).unwrap();
        let rows = zero.sample(&s, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(rows.iter().all(|r| r == &vec![2.0, -1.0]));
    }

    #[test]
    fn rejects_non_psd() {
        let s = schema2();
        let m = GaussianModel::from_params(&s, vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![]).unwrap();
        assert!(matches!(m.sample(&s, 3, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::Numeric(_))));
    }

    #[test]
    fn sampling_is_seeded_and_schema_conforming() {
        let s = FeatureSchema::new(vec![Feature::continuous("a"), Feature::categorical("c", ["x", "y", "z"])], ["n", "p"]).unwrap();
        let m = GaussianModel::from_params(&s, vec![1.0], vec![vec![4.0]], vec![vec![0.2, 0.0, 0.8]]).unwrap();
        let a = m.sample(&s, 200, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = m.sample(&s, 200, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        for r in &a {
            s.check_row(r).unwrap();
            assert_ne!(r[1], 1.0);
        }
    }

    #[test]
    fn fn_oracle_and_empty_input() {
        let s = schema2();
        let mut o = FnOracle(|_: &[f64]| 1);
        assert_eq!(label_with_oracle(&s, &[vec![0.0, 0.0], vec![1.0, 1.0]], &mut o).unwrap(), vec![1, 1]);
        assert!(label_with_oracle(&s, &[], &mut o).unwrap().is_empty());
    }

    #[test]
    fn command_oracle_protocol() {
        let s = schema2();
        let rows = vec![vec![0.5, 1.0], vec![2.0, 3.0], vec![-1.0, 0.0]];
        // label by the sign of the first column
        let mut o = CommandOracle::new("awk -F, '{ print ($1 > 0) ? \"p\" : \"n\" }'");
        assert_eq!(label_with_oracle(&s, &rows, &mut o).unwrap(), vec![1, 1, 0]);

        let mut short = CommandOracle::new("head -n 1 >/dev/null; echo p");
        match label_with_oracle(&s, &rows, &mut short) {
            Err(Error::Oracle { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        let mut junk = CommandOracle::new("cat >/dev/null; echo p; echo what; echo n");
        match label_with_oracle(&s, &rows, &mut junk) {
            Err(Error::Oracle { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        let mut failing = CommandOracle::new("exit 4");
        assert!(matches!(label_with_oracle(&s, &rows, &mut failing), Err(Error::Oracle { .. })));
    }
}
