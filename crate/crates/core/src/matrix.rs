//! Author-by-feature matrices and their delimited-text form.

use std::io::{Read, Write};
use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub schema: Arc<FeatureSchema>,
    pub author_ids: Vec<String>,
    pub labels: Vec<Option<Label>>,
    pub values: Array2<T>,
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl<T: Real> FeatureMatrix<T> {
    pub fn from_rows(
        schema: Arc<FeatureSchema>,
        author_ids: Vec<String>,
        labels: Vec<Option<Label>>,
        rows: Vec<Vec<T>>,
    ) -> Result<Self> {
        let width = schema.width();
        let n = rows.len();
        if author_ids.len() != n || labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: author_ids.len().min(labels.len()),
            });
        }
        let mut flat = Vec::with_capacity(n * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    found: r.len(),
                });
            }
            flat.extend(r);
        }
        let values = Array2::from_shape_vec((n, width), flat)
            .map_err(|e| Error::Invariant(e.to_string()))?;
        Ok(FeatureMatrix {
            schema,
            author_ids,
            labels,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            schema: Arc::clone(&self.schema),
            author_ids: rows.iter().map(|&i| self.author_ids[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            values: self.values.select(Axis(0), rows),
        }
    }

    /// Labels of every row, failing on the first unlabeled author.
    pub fn require_labels(&self) -> Result<Vec<Label>> {
        self.labels
            .iter()
            .zip(&self.author_ids)
            .map(|(l, a)| l.ok_or_else(|| Error::Unlabeled(a.clone())))
            .collect()
    }

    /// Header `author_id,label,<features...>`, then one row per author.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Invariant(format!("csv write failed: {e}"));
        let header = ["author_id", "label"]
            .into_iter()
            .map(str::to_owned)
            .chain(self.schema.names().iter().cloned());
        w.write_record(header).map_err(csv_err)?;
        for (i, row) in self.values.rows().into_iter().enumerate() {
            let label = self.labels[i]
                .map(|l| l.index().to_string())
                .unwrap_or_default();
            let fields = [self.author_ids[i].clone(), label]
                .into_iter()
                .chain(row.iter().map(|v| format_float(v.as_f64())));
            w.write_record(fields).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::Invariant(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "feature matrix".into(),
            line,
            message,
        };
        let header = r
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if header.len() < 2 || &header[0] != "author_id" || &header[1] != "label" {
            return Err(parse_err(1, "expected `author_id,label,...` header".into()));
        }
        let schema = Arc::new(FeatureSchema::new(
            header.iter().skip(2).map(str::to_owned).collect(),
        ));
        let (mut ids, mut labels, mut rows) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            ids.push(rec[0].to_owned());
            labels.push(match &rec[1] {
                "" => None,
                s => Some(
                    s.parse::<i64>()
                        .ok()
                        .and_then(Label::from_int)
                        .ok_or_else(|| parse_err(line, format!("bad label `{s}`")))?,
                ),
            });
            let row = rec
                .iter()
                .skip(2)
                .map(|f| {
                    f.parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| parse_err(line, format!("bad number `{f}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(schema, ids, labels, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema(n: usize) -> Arc<FeatureSchema> {
        Arc::new(FeatureSchema::new(
            (0..n).map(|i| format!("f{i}")).collect(),
        ))
    }

    #[test]
    fn shape_checks() {
        let s = schema(2);
        assert!(FeatureMatrix::<f64>::from_rows(
            s.clone(),
            vec!["a".into()],
            vec![None],
            vec![vec![1.0]]
        )
        .is_err());
        let m = FeatureMatrix::from_rows(
            s,
            vec!["a".into(), "b,c".into()],
            vec![Some(Label::Troll), None],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        let sub = m.select(&[1]);
        assert_eq!(sub.author_ids, vec!["b,c"]);
        assert!(sub.require_labels().is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6)) {
            let m = FeatureMatrix::from_rows(
                schema(3),
                vec!["x".into(), "y \"q\"".into()],
                vec![Some(Label::NotTroll), None],
                vec![vals[..3].to_vec(), vals[3..].to_vec()],
            ).unwrap();
            let mut buf = Vec::new();
            m.write_csv(&mut buf).unwrap();
            let back = FeatureMatrix::<f64>::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.schema.fingerprint(), m.schema.fingerprint());
            prop_assert_eq!(&back.author_ids, &m.author_ids);
            prop_assert_eq!(&back.labels, &m.labels);
            for (a, b) in back.values.iter().zip(m.values.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
