//! Variable declarations and observed data.
//!
//! Level codes are 0-based everywhere in this crate. External formats use
//! 1-based codes and convert at the boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `p` continuous and `q` categorical variables, with `levels[r] >= 2`
/// states for categorical variable `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    p: usize,
    levels: Vec<usize>,
    names: Option<Vec<String>>,
}

impl Schema {
    pub fn new(p: usize, levels: Vec<usize>) -> Result<Self> {
        if p + levels.len() == 0 {
            return Err(Error::InvalidSchema("at least one variable is required".into()));
        }
        if let Some((r, &l)) = levels.iter().enumerate().find(|(_, &l)| l < 2) {
            return Err(Error::InvalidSchema(format!(
                "categorical variable {r} has {l} levels; at least 2 are required"
            )));
        }
        Ok(Self { p, levels, names: None })
    }

    /// Attaches labels: the `p` continuous names first, then the `q` categorical.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p + self.q() {
            return Err(Error::DimensionMismatch {
                what: "variable names",
                expected: self.p + self.q(),
                found: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn total_levels(&self) -> usize {
        self.levels.iter().sum()
    }

    /// Number of joint discrete states, `None` when it overflows `usize`.
    pub fn discrete_state_count(&self) -> Option<usize> {
        self.levels.iter().try_fold(1usize, |acc, &l| acc.checked_mul(l))
    }

    /// Fails with [`Error::EnumerationCap`] when enumeration over all joint
    /// discrete states would exceed `cap`.
    pub fn check_enumerable(&self, cap: usize) -> Result<usize> {
        match self.discrete_state_count() {
            None => Err(Error::StateSpaceOverflow),
            Some(states) if states > cap => Err(Error::EnumerationCap { states, cap }),
            Some(states) => Ok(states),
        }
    }

    pub fn check_row(&self, row: Observation<'_>) -> Result<()> {
        if row.x.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "continuous values",
                expected: self.p,
                found: row.x.len(),
            });
        }
        if row.y.len() != self.q() {
            return Err(Error::DimensionMismatch {
                what: "level codes",
                expected: self.q(),
                found: row.y.len(),
            });
        }
        for (r, (&code, &levels)) in row.y.iter().zip(&self.levels).enumerate() {
            if code >= levels {
                return Err(Error::LevelOutOfRange {
                    variable: r,
                    code,
                    levels,
                });
            }
        }
        Ok(())
    }
}

/// A borrowed mixed observation.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub x: &'a [f64],
    pub y: &'a [usize],
}

impl<'a> Observation<'a> {
    pub fn new(x: &'a [f64], y: &'a [usize]) -> Self {
        Self { x, y }
    }
}

/// An owned mixed observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRow {
    pub x: Vec<f64>,
    pub y: Vec<usize>,
}

impl MixedRow {
    pub fn as_obs(&self) -> Observation<'_> {
        Observation::new(&self.x, &self.y)
    }
}

/// Continuous values followed by one 0/1 indicator per level of each
/// categorical variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DummyEncodedRow {
    pub z: Vec<f64>,
}

pub fn encode(schema: &Schema, row: Observation<'_>) -> Result<DummyEncodedRow> {
    schema.check_row(row)?;
    let mut z = Vec::with_capacity(schema.p() + schema.total_levels());
    z.extend_from_slice(row.x);
    for (&code, &levels) in row.y.iter().zip(schema.levels()) {
        z.extend((0..levels).map(|a| if a == code { 1.0 } else { 0.0 }));
    }
    Ok(DummyEncodedRow { z })
}

pub fn decode(schema: &Schema, row: &DummyEncodedRow) -> Result<MixedRow> {
    let expected = schema.p() + schema.total_levels();
    if row.z.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "dummy-encoded row",
            expected,
            found: row.z.len(),
        });
    }
    let x = row.z[..schema.p()].to_vec();
    let mut y = Vec::with_capacity(schema.q());
    let mut offset = schema.p();
    for (r, &levels) in schema.levels().iter().enumerate() {
        let block = &row.z[offset..offset + levels];
        let ones: Vec<usize> = (0..levels).filter(|&a| block[a] == 1.0).collect();
        let all_binary = block.iter().all(|&v| v == 0.0 || v == 1.0);
        if ones.len() != 1 || !all_binary {
            return Err(Error::Invalid(format!(
                "indicators for categorical variable {r} must contain exactly one 1"
            )));
        }
        y.push(ones[0]);
        offset += levels;
    }
    Ok(MixedRow { x, y })
}

/// `n` rows of mixed data stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    n: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl Dataset {
    /// `x` is `n x p` and `y` is `n x q`, both row-major, with 0-based codes.
    pub fn new(schema: Schema, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        let (p, q) = (schema.p(), schema.q());
        let n = x.len().checked_div(p).or_else(|| y.len().checked_div(q)).unwrap_or(0);
        if x.len() != n * p {
            return Err(Error::DimensionMismatch {
                what: "continuous block",
                expected: n * p,
                found: x.len(),
            });
        }
        if y.len() != n * q {
            return Err(Error::DimensionMismatch {
                what: "categorical block",
                expected: n * q,
                found: y.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / p,
                column: pos % p,
            });
        }
        for (pos, &code) in y.iter().enumerate() {
            let r = pos % q;
            if code >= schema.levels()[r] {
                return Err(Error::LevelOutOfRange {
                    variable: r,
                    code,
                    levels: schema.levels()[r],
                });
            }
        }
        Ok(Self { schema, n, x, y })
    }

    pub fn from_rows(schema: Schema, rows: &[MixedRow]) -> Result<Self> {
        let mut x = Vec::with_capacity(rows.len() * schema.p());
        let mut y = Vec::with_capacity(rows.len() * schema.q());
        for row in rows {
            schema.check_row(row.as_obs())?;
            x.extend_from_slice(&row.x);
            y.extend_from_slice(&row.y);
        }
        let n = rows.len();
        let mut ds = Self::new(schema, x, y)?;
        ds.n = n;
        Ok(ds)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn row(&self, i: usize) -> Observation<'_> {
        let (p, q) = (self.schema.p(), self.schema.q());
        Observation::new(&self.x[i * p..(i + 1) * p], &self.y[i * q..(i + 1) * q])
    }

    pub fn rows(&self) -> impl Iterator<Item = Observation<'_>> {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn column_mean(&self, s: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.rows().map(|r| r.x[s]).sum::<f64>() / self.n as f64
    }

    /// Variance with denominator `n - ddof`.
    pub fn column_variance(&self, s: usize, ddof: usize) -> f64 {
        let mean = self.column_mean(s);
        let ss: f64 = self.rows().map(|r| (r.x[s] - mean) * (r.x[s] - mean)).sum();
        ss / (self.n.saturating_sub(ddof).max(1)) as f64
    }

    /// Empirical level frequencies of categorical variable `r`.
    pub fn level_frequencies(&self, r: usize) -> Vec<f64> {
        let levels = self.schema.levels()[r];
        let mut counts = alloc::vec![0.0; levels];
        for row in self.rows() {
            counts[row.y[r]] += 1.0;
        }
        let n = self.n.max(1) as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        counts
    }

    /// The rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let (p, q) = (self.schema.p(), self.schema.q());
        let mut x = Vec::with_capacity(indices.len() * p);
        let mut y = Vec::with_capacity(indices.len() * q);
        for &i in indices {
            let r = self.row(i);
            x.extend_from_slice(r.x);
            y.extend_from_slice(r.y);
        }
        Self {
            schema: self.schema.clone(),
            n: indices.len(),
            x,
            y,
        }
    }

    /// Same rows with continuous columns shifted and scaled to mean 0 and unit
    /// sample standard deviation (constant columns are only centered).
    pub fn standardized(&self) -> Self {
        let p = self.schema.p();
        let mut x = self.x.clone();
        for s in 0..p {
            let mean = self.column_mean(s);
            let sd = crate::math::sqrt(self.column_variance(s, 1));
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            for i in 0..self.n {
                x[i * p + s] = (x[i * p + s] - mean) * scale;
            }
        }
        Self {
            schema: self.schema.clone(),
            n: self.n,
            x,
            y: self.y.clone(),
        }
    }
}

/// Per-sample feature values for the conditional model, `n x F` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    f: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, f: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * f {
            return Err(Error::DimensionMismatch {
                what: "feature matrix",
                expected: n * f,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("feature matrix contains non-finite values".into()));
        }
        Ok(Self { n, f, values })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            f: 0,
            values: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.f
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.f..(i + 1) * self.f]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.f);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: indices.len(),
            f: self.f,
            values,
        }
    }

    /// Columns rescaled to mean 0 and unit sample standard deviation.
    pub fn standardized(&self) -> Self {
        let mut values = self.values.clone();
        for l in 0..self.f {
            let col: Vec<f64> = (0..self.n).map(|i| self.values[i * self.f + l]).collect();
            let mean = col.iter().sum::<f64>() / self.n.max(1) as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (self.n.saturating_sub(1).max(1)) as f64;
            let sd = crate::math::sqrt(var);
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            for i in 0..self.n {
                values[i * self.f + l] = (values[i * self.f + l] - mean) * scale;
            }
        }
        Self {
            n: self.n,
            f: self.f,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn schema_invariants() {
        assert!(Schema::new(0, vec![]).is_err());
        assert!(Schema::new(1, vec![1]).is_err());
        let s = Schema::new(2, vec![2, 3]).unwrap();
        assert_eq!(s.discrete_state_count(), Some(6));
        assert_eq!(s.total_levels(), 5);
        let huge = Schema::new(0, vec![1 << 20; 8]).unwrap();
        assert_eq!(huge.discrete_state_count(), None);
        assert_eq!(huge.check_enumerable(10), Err(Error::StateSpaceOverflow));
        assert!(matches!(
            s.check_enumerable(4),
            Err(Error::EnumerationCap { states: 6, cap: 4 })
        ));
    }

    #[test]
    fn encode_examples() {
        let s = Schema::new(0, vec![3]).unwrap();
        let z = encode(&s, Observation::new(&[], &[0])).unwrap();
        assert_eq!(z.z, vec![1.0, 0.0, 0.0]);

        let s = Schema::new(1, vec![2]).unwrap();
        // level 2 of 2 externally is code 1 internally
        let z = encode(&s, Observation::new(&[2.5], &[1])).unwrap();
        assert_eq!(z.z, vec![2.5, 0.0, 1.0]);
        let back = decode(&s, &z).unwrap();
        assert_eq!(
            back,
            MixedRow {
                x: vec![2.5],
                y: vec![1]
            }
        );
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let s = Schema::new(1, vec![2]).unwrap();
        assert!(matches!(
            encode(&s, Observation::new(&[0.0], &[2])),
            Err(Error::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            encode(&s, Observation::new(&[], &[0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn indicators_sum_to_one() {
        let s = Schema::new(1, vec![2, 4, 3]).unwrap();
        let z = encode(&s, Observation::new(&[0.3], &[1, 3, 0])).unwrap();
        let mut off = 1;
        for &l in s.levels() {
            assert_eq!(z.z[off..off + l].iter().sum::<f64>(), 1.0);
            off += l;
        }
    }

    #[test]
    fn dataset_validation() {
        let s = Schema::new(1, vec![2]).unwrap();
        assert!(Dataset::new(s.clone(), vec![1.0, 2.0], vec![0, 1]).is_ok());
        assert!(matches!(
            Dataset::new(s.clone(), vec![1.0, f64::NAN], vec![0, 1]),
            Err(Error::NonFinite { row: 1, column: 0 })
        ));
        assert!(matches!(
            Dataset::new(s, vec![1.0, 2.0], vec![0, 2]),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn encode_decode_round_trip(x in proptest::collection::vec(-10.0f64..10.0, 2),
                                    y0 in 0usize..2, y1 in 0usize..4) {
            let s = Schema::new(2, vec![2, 4]).unwrap();
            let row = MixedRow { x, y: vec![y0, y1] };
            let z = encode(&s, row.as_obs()).unwrap();
            proptest::prop_assert_eq!(decode(&s, &z).unwrap(), row);
        }
    }
}
