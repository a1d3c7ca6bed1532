//! CSV data files and the level dictionary.
//!
//! Categorical columns are stored as 1-based level codes on disk and 0-based
//! codes in memory. Continuous columns are optionally standardized; the shift
//! and scale are kept in the dictionary so exports return to the raw scale.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use mixgm::{Dataset, FeatureMatrix, Schema, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousColumn {
    pub name: String,
    /// Stored value is `(raw - mean) / scale`.
    pub mean: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    /// `levels[k]` is the label of code `k + 1`.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub continuous: Vec<ContinuousColumn>,
    pub categorical: Vec<CategoricalColumn>,
    pub standardized: bool,
}

impl Dictionary {
    pub fn schema(&self) -> Result<Schema> {
        let levels = self.categorical.iter().map(|c| c.levels.len()).collect();
        Ok(Schema::new(self.continuous.len(), levels)?.with_names(self.names())?)
    }

    /// Continuous names first, then categorical.
    pub fn names(&self) -> Vec<String> {
        self.continuous
            .iter()
            .map(|c| c.name.clone())
            .chain(self.categorical.iter().map(|c| c.name.clone()))
            .collect()
    }

    pub fn variable(&self, name: &str) -> Option<Variable> {
        if let Some(s) = self.continuous.iter().position(|c| c.name == name) {
            return Some(Variable::Continuous(s));
        }
        self.categorical
            .iter()
            .position(|c| c.name == name)
            .map(Variable::Categorical)
    }

    pub fn name_of(&self, v: Variable) -> &str {
        match v {
            Variable::Continuous(s) => &self.continuous[s].name,
            Variable::Categorical(r) => &self.categorical[r].name,
        }
    }

    /// Plain names `x1..xp`, `y1..yq` with levels `1..L` and no standardization.
    pub fn generic(schema: &Schema) -> Self {
        Self {
            continuous: (0..schema.p())
                .map(|s| ContinuousColumn {
                    name: format!("x{}", s + 1),
                    mean: 0.0,
                    scale: 1.0,
                })
                .collect(),
            categorical: schema
                .levels()
                .iter()
                .enumerate()
                .map(|(r, &l)| CategoricalColumn {
                    name: format!("y{}", r + 1),
                    levels: (1..=l).map(|k| k.to_string()).collect(),
                })
                .collect(),
            standardized: false,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Names of the categorical columns; every other column is continuous.
    pub categorical: Vec<String>,
    pub standardize: bool,
    /// Existing dictionary to encode against (column kinds, levels and scaling
    /// are taken from it and `categorical`/`standardize` are ignored).
    pub dictionary: Option<Dictionary>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset,
    pub dictionary: Dictionary,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

enum Slot {
    Continuous(usize),
    Categorical(usize),
}

pub fn read_csv<R: Read>(reader: R, options: &IngestOptions) -> Result<Ingested> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();

    let given = options.dictionary.as_ref();
    let slots: Vec<Slot> = match given {
        Some(dict) => headers
            .iter()
            .map(|h| match dict.variable(h) {
                Some(Variable::Continuous(s)) => Ok(Slot::Continuous(s)),
                Some(Variable::Categorical(r)) => Ok(Slot::Categorical(r)),
                None => Err(CliError::UnknownColumn(h.clone())),
            })
            .collect::<Result<_>>()?,
        None => {
            for name in &options.categorical {
                if !headers.contains(name) {
                    return Err(CliError::UnknownColumn(name.clone()));
                }
            }
            let (mut p, mut q) = (0, 0);
            headers
                .iter()
                .map(|h| {
                    if options.categorical.contains(h) {
                        q += 1;
                        Slot::Categorical(q - 1)
                    } else {
                        p += 1;
                        Slot::Continuous(p - 1)
                    }
                })
                .collect()
        }
    };
    let p = slots.iter().filter(|s| matches!(s, Slot::Continuous(_))).count();
    let q = slots.len() - p;
    if let Some(dict) = given {
        if p != dict.continuous.len() || q != dict.categorical.len() {
            return Err(CliError::Invalid("columns do not match the dictionary".into()));
        }
    }

    let mut names_c = vec![String::new(); p];
    let mut names_d = vec![String::new(); q];
    for (h, slot) in headers.iter().zip(&slots) {
        match *slot {
            Slot::Continuous(s) => names_c[s] = h.clone(),
            Slot::Categorical(r) => names_d[r] = h.clone(),
        }
    }
    let mut levels: Vec<Vec<String>> = match given {
        Some(dict) => dict.categorical.iter().map(|c| c.levels.clone()).collect(),
        None => vec![vec![]; q],
    };
    let mut lookup: Vec<HashMap<String, usize>> = levels
        .iter()
        .map(|l| l.iter().enumerate().map(|(k, v)| (v.clone(), k)).collect())
        .collect();

    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut row_x = vec![0.0; p];
    let mut row_y = vec![0usize; q];
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for ((field, slot), header) in record.iter().zip(&slots).zip(&headers) {
            if is_missing(field) {
                return Err(CliError::Missing {
                    row,
                    column: header.clone(),
                });
            }
            match *slot {
                Slot::Continuous(s) => {
                    row_x[s] = field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| CliError::Parse {
                            row,
                            column: header.clone(),
                            value: field.to_owned(),
                        })?;
                }
                Slot::Categorical(r) => {
                    row_y[r] = match lookup[r].get(field) {
                        Some(&k) => k,
                        None if given.is_some() => {
                            return Err(CliError::UnseenLevel {
                                row,
                                column: header.clone(),
                                level: field.to_owned(),
                            })
                        }
                        None => {
                            let k = levels[r].len();
                            levels[r].push(field.to_owned());
                            lookup[r].insert(field.to_owned(), k);
                            k
                        }
                    };
                }
            }
        }
        x.extend_from_slice(&row_x);
        y.extend_from_slice(&row_y);
    }
    let n = x.len().checked_div(p).unwrap_or(y.len() / q.max(1));

    for (r, l) in levels.iter().enumerate() {
        if l.len() < 2 {
            return Err(CliError::SingleLevel {
                column: names_d[r].clone(),
                level: l.first().cloned().unwrap_or_default(),
            });
        }
    }

    let continuous: Vec<ContinuousColumn> = match given {
        Some(dict) => dict.continuous.clone(),
        None => (0..p)
            .map(|s| {
                let (mean, scale) = if options.standardize {
                    column_moments(&x, p, s, n)
                } else {
                    (0.0, 1.0)
                };
                ContinuousColumn {
                    name: names_c[s].clone(),
                    mean,
                    scale,
                }
            })
            .collect(),
    };
    for (i, v) in x.iter_mut().enumerate() {
        let c = &continuous[i % p];
        *v = (*v - c.mean) / c.scale;
    }
    let dictionary = Dictionary {
        continuous,
        categorical: names_d
            .into_iter()
            .zip(levels)
            .map(|(name, levels)| CategoricalColumn { name, levels })
            .collect(),
        standardized: given.map_or(options.standardize, |d| d.standardized),
    };
    let data = Dataset::new(dictionary.schema()?, x, y)?;
    Ok(Ingested { data, dictionary })
}

/// Mean and sample standard deviation; constant columns keep scale 1.
fn column_moments(x: &[f64], p: usize, s: usize, n: usize) -> (f64, f64) {
    let mean = (0..n).map(|i| x[i * p + s]).sum::<f64>() / n.max(1) as f64;
    let ss: f64 = (0..n).map(|i| (x[i * p + s] - mean).powi(2)).sum();
    let sd = (ss / n.saturating_sub(1).max(1) as f64).sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

pub fn read_csv_path(path: &Path, options: &IngestOptions) -> Result<Ingested> {
    read_csv(File::open(path)?, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoricalOutput {
    Labels,
    /// 1-based level codes
    Codes,
}

/// Writes continuous columns (on the raw scale) followed by categorical columns.
pub fn write_csv<W: Write>(
    writer: W,
    data: &Dataset,
    dictionary: &Dictionary,
    output: CategoricalOutput,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(dictionary.names())?;
    let mut record = Vec::with_capacity(dictionary.names().len());
    for row in data.rows() {
        record.clear();
        for (v, c) in row.x.iter().zip(&dictionary.continuous) {
            record.push((v * c.scale + c.mean).to_string());
        }
        for (&k, c) in row.y.iter().zip(&dictionary.categorical) {
            record.push(match output {
                CategoricalOutput::Labels => c.levels[k].clone(),
                CategoricalOutput::Codes => (k + 1).to_string(),
            });
        }
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_csv_path(path: &Path, data: &Dataset, dictionary: &Dictionary, output: CategoricalOutput) -> Result<()> {
    write_csv(File::create(path)?, data, dictionary, output)
}

/// Variables kept in the model and the feature matrix built from the rest.
#[derive(Debug, Clone)]
pub struct ConditionalSplit {
    pub data: Dataset,
    pub features: FeatureMatrix,
    pub dictionary: Dictionary,
    pub feature_names: Vec<String>,
}

/// Moves the named columns into a feature matrix. Continuous features are
/// copied; categorical features become indicators of every level but the
/// first.
pub fn split_features(data: &Dataset, dictionary: &Dictionary, features: &[String]) -> Result<ConditionalSplit> {
    let mut as_feature = Vec::with_capacity(features.len());
    for name in features {
        as_feature.push(
            dictionary
                .variable(name)
                .ok_or_else(|| CliError::UnknownColumn(name.clone()))?,
        );
    }
    let schema = data.schema();
    let keep_c: Vec<usize> = (0..schema.p())
        .filter(|&s| !as_feature.contains(&Variable::Continuous(s)))
        .collect();
    let keep_d: Vec<usize> = (0..schema.q())
        .filter(|&r| !as_feature.contains(&Variable::Categorical(r)))
        .collect();
    if keep_c.is_empty() && keep_d.is_empty() {
        return Err(CliError::Invalid("every variable was moved to the features".into()));
    }
    let mut feature_names = Vec::new();
    for v in &as_feature {
        match *v {
            Variable::Continuous(s) => feature_names.push(dictionary.continuous[s].name.clone()),
            Variable::Categorical(r) => {
                let c = &dictionary.categorical[r];
                for level in &c.levels[1..] {
                    feature_names.push(format!("{}={}", c.name, level));
                }
            }
        }
    }
    let (mut x, mut y, mut f) = (Vec::new(), Vec::new(), Vec::new());
    for row in data.rows() {
        x.extend(keep_c.iter().map(|&s| row.x[s]));
        y.extend(keep_d.iter().map(|&r| row.y[r]));
        for v in &as_feature {
            match *v {
                Variable::Continuous(s) => f.push(row.x[s]),
                Variable::Categorical(r) => {
                    for k in 1..schema.levels()[r] {
                        f.push(if row.y[r] == k { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }
    let sub = Dictionary {
        continuous: keep_c.iter().map(|&s| dictionary.continuous[s].clone()).collect(),
        categorical: keep_d.iter().map(|&r| dictionary.categorical[r].clone()).collect(),
        standardized: dictionary.standardized,
    };
    let features = FeatureMatrix::new(data.n(), feature_names.len(), f)?;
    Ok(ConditionalSplit {
        data: Dataset::new(sub.schema()?, x, y)?,
        features,
        dictionary: sub,
        feature_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "height,smoker\n1.5,yes\n2.5,no\n3.5,yes\n";

    fn options(standardize: bool) -> IngestOptions {
        IngestOptions {
            categorical: vec!["smoker".into()],
            standardize,
            dictionary: None,
        }
    }

    #[test]
    fn toy_file() {
        let ingested = read_csv(TOY.as_bytes(), &options(false)).unwrap();
        assert_eq!(ingested.data.n(), 3);
        assert_eq!(ingested.data.schema().levels(), &[2]);
        assert_eq!(ingested.data.y(), &[0, 1, 0]);
        assert_eq!(ingested.dictionary.categorical[0].levels, vec!["yes", "no"]);
        assert_eq!(ingested.data.x(), &[1.5, 2.5, 3.5]);
    }

    #[test]
    fn standardization_is_recorded() {
        let ingested = read_csv(TOY.as_bytes(), &options(true)).unwrap();
        let c = &ingested.dictionary.continuous[0];
        assert_eq!((c.mean, c.scale), (2.5, 1.0));
        assert_eq!(ingested.data.x(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn single_level_is_rejected() {
        let err = read_csv(
            "a,b\n1,k\n2,k\n".as_bytes(),
            &IngestOptions {
                categorical: vec!["b".into()],
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, CliError::SingleLevel { .. }));
    }

    #[test]
    fn missing_value_reports_position() {
        let err = read_csv("a,smoker\n1,k\n,j\n".as_bytes(), &options(false)).unwrap_err();
        match err {
            CliError::Missing { row, column } => assert_eq!((row, column.as_str()), (2, "a")),
            other => panic!("{other}"),
        }
        let err = read_csv("a,smoker\n1,yes\n2,NA\n".as_bytes(), &options(false)).unwrap_err();
        assert!(matches!(err, CliError::Missing { row: 2, .. }));
    }

    #[test]
    fn unseen_level_with_dictionary() {
        let dict = read_csv(TOY.as_bytes(), &options(true)).unwrap().dictionary;
        let again = IngestOptions {
            dictionary: Some(dict),
            ..Default::default()
        };
        let ok = read_csv("smoker,height\nno,2.5\n".as_bytes(), &again).unwrap();
        assert_eq!(ok.data.y(), &[1]);
        assert_eq!(ok.data.x(), &[0.0]);
        let err = read_csv("height,smoker\n1,maybe\n".as_bytes(), &again).unwrap_err();
        assert!(matches!(err, CliError::UnseenLevel { .. }));
    }

    #[test]
    fn round_trip() {
        for standardize in [false, true] {
            let first = read_csv(TOY.as_bytes(), &options(standardize)).unwrap();
            for output in [CategoricalOutput::Labels, CategoricalOutput::Codes] {
                let mut buf = Vec::new();
                write_csv(&mut buf, &first.data, &first.dictionary, output).unwrap();
                let second = read_csv(buf.as_slice(), &options(standardize)).unwrap();
                assert_eq!(second.data, first.data);
                if output == CategoricalOutput::Labels {
                    assert_eq!(second.dictionary, first.dictionary);
                }
            }
        }
    }

    #[test]
    fn features_are_split_off() {
        let text = "a,b,c\n1,u,p\n2,v,q\n3,w,p\n";
        let ingested = read_csv(
            text.as_bytes(),
            &IngestOptions {
                categorical: vec!["b".into(), "c".into()],
                ..Default::default()
            },
        )
        .unwrap();
        let split = split_features(&ingested.data, &ingested.dictionary, &["b".into()]).unwrap();
        assert_eq!(split.feature_names, vec!["b=v", "b=w"]);
        assert_eq!(split.features.values(), &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(split.data.schema().levels(), &[2]);
        assert_eq!(split.data.x(), &[1.0, 2.0, 3.0]);
    }
}
