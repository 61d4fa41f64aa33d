//! Per-column Yeo-Johnson de-skewing with maximum-likelihood λ, followed by
//! standardization to zero mean and unit variance.

use std::fmt::Write as _;

use log::warn;
use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const LAMBDA_MIN: f64 = -5.0;
pub const LAMBDA_MAX: f64 = 5.0;
pub const LAMBDA_TOLERANCE: f64 = 1e-6;

/// The Yeo-Johnson power transform.
pub fn yeo_johnson<T: Real>(x: T, lambda: T) -> T {
    let two = T::lit(2.0);
    if lambda == T::one() {
        return x;
    }
    if x >= T::zero() {
        let log1p = x.ln_1p();
        if lambda == T::zero() {
            log1p
        } else {
            (lambda * log1p).exp_m1() / lambda
        }
    } else {
        let log1p = (-x).ln_1p();
        if lambda == two {
            -log1p
        } else {
            -((two - lambda) * log1p).exp_m1() / (two - lambda)
        }
    }
}

fn population_variance<T: Real>(values: impl Iterator<Item = T> + Clone) -> (T, T) {
    let mut n = 0usize;
    let mut sum = T::zero();
    for v in values.clone() {
        sum = sum + v;
        n += 1;
    }
    let mean = sum / T::from_count(n);
    let ss: T = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / T::from_count(n))
}

/// Profile log-likelihood of λ under a normal model of the transformed
/// column.
pub fn log_likelihood<T: Real>(column: ArrayView1<'_, T>, lambda: T) -> T {
    let n = T::from_count(column.len());
    let (_, var) = population_variance(column.iter().map(|&x| yeo_johnson(x, lambda)));
    let jacobian: T = column.iter().map(|&x| x.signum() * x.abs().ln_1p()).sum();
    -n / T::lit(2.0) * var.ln() + (lambda - T::one()) * jacobian
}

fn is_constant<T: Real>(column: ArrayView1<'_, T>) -> bool {
    column.iter().all(|&x| x == column[0])
}

/// Maximum-likelihood λ by golden-section search over [-5, 5]. Constant
/// columns get λ = 1.
pub fn fit_lambda<T: Real>(column: ArrayView1<'_, T>) -> Result<T> {
    if column.is_empty() {
        return Err(Error::invalid("cannot fit λ on an empty column"));
    }
    if let Some(x) = column.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("column value {x}")));
    }
    if is_constant(column) {
        warn!("zero-variance column; using the identity transform");
        return Ok(T::one());
    }
    let ll = |l: f64| {
        let v = log_likelihood(column, T::lit(l)).as_f64();
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (LAMBDA_MIN, LAMBDA_MAX);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while (b - a).abs() > LAMBDA_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ll(d);
        }
    }
    let best = (a + b) / 2.0;
    // never worse than leaving the column untransformed
    Ok(if ll(best) >= ll(1.0) {
        T::lit(best)
    } else {
        T::one()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTransform<T> {
    pub lambda: T,
    pub mean: T,
    /// Post-transform standard deviation; 1 for degenerate columns.
    pub std: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTransform<T> {
    pub columns: Vec<ColumnTransform<T>>,
}

impl<T: Real> FeatureTransform<T> {
    pub fn identity(width: usize) -> Self {
        FeatureTransform {
            columns: vec![
                ColumnTransform {
                    lambda: T::one(),
                    mean: T::zero(),
                    std: T::one(),
                };
                width
            ],
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Fits one column transform per feature. Needs at least two rows.
    pub fn fit(matrix: &Array2<T>) -> Result<Self> {
        if matrix.nrows() < 2 {
            return Err(Error::invalid(format!(
                "transform fitting needs at least 2 rows, got {}",
                matrix.nrows()
            )));
        }
        let columns = (0..matrix.ncols())
            .into_par_iter()
            .map(|j| fit_column(matrix.column(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTransform { columns })
    }

    pub fn apply(&self, matrix: &Array2<T>) -> Result<Array2<T>> {
        if matrix.ncols() != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                found: matrix.ncols(),
            });
        }
        let mut out = matrix.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (v, c) in row.iter_mut().zip(&self.columns) {
                *v = c.apply(*v);
            }
        }
        Ok(out)
    }

    const HEADER: &'static str = "feature-transform v1";

    /// `index<TAB>lambda<TAB>mean<TAB>std` per column after a header.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\ncolumns\t{}\n", Self::HEADER, self.width());
        for (i, c) in self.columns.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i}\t{:e}\t{:e}\t{:e}",
                c.lambda.as_f64(),
                c.mean.as_f64(),
                c.std.as_f64()
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::Parse {
            path: "feature transform".into(),
            line,
            message: message.into(),
        };
        let mut lines = text.lines();
        if lines.next() != Some(Self::HEADER) {
            return Err(bad(1, "unsupported header"));
        }
        let width: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("columns\t"))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(2, "expected `columns<TAB>count`"))?;
        let mut columns = Vec::with_capacity(width);
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().ok().map(T::lit);
            match f.as_slice() {
                [idx, l, m, s] if idx.parse::<usize>().ok() == Some(i) => {
                    columns.push(ColumnTransform {
                        lambda: num(l).ok_or_else(|| bad(i + 3, "bad lambda"))?,
                        mean: num(m).ok_or_else(|| bad(i + 3, "bad mean"))?,
                        std: num(s).ok_or_else(|| bad(i + 3, "bad std"))?,
                    })
                }
                _ => return Err(bad(i + 3, "expected `index lambda mean std`")),
            }
        }
        if columns.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: columns.len(),
            });
        }
        Ok(FeatureTransform { columns })
    }
}

impl<T: Real> ColumnTransform<T> {
    pub fn apply(&self, x: T) -> T {
        (yeo_johnson(x, self.lambda) - self.mean) / self.std
    }
}

fn fit_column<T: Real>(column: ArrayView1<'_, T>) -> Result<ColumnTransform<T>> {
    let lambda = fit_lambda(column)?;
    let (mean, var) = population_variance(column.iter().map(|&x| yeo_johnson(x, lambda)));
    let std = var.sqrt();
    let std = if std > T::zero() && std.is_finite() {
        std
    } else {
        T::one()
    };
    Ok(ColumnTransform { lambda, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use std::f64::consts::E;

    #[test]
    fn closed_form_points() {
        for x in [0.0f64, 0.5, 3.0, 100.0] {
            assert!((yeo_johnson(x, 1.0) - x).abs() < 1e-12);
        }
        assert!((yeo_johnson(E - 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((yeo_johnson(-(E - 1.0), 2.0) + 1.0).abs() < 1e-15);
        assert!((yeo_johnson(3.0f64, 2.0) - 7.5).abs() < 1e-12);
        assert!((yeo_johnson(-3.0f64, 0.0) - (-7.5)).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_identity_and_zero() {
        let col = Array1::from(vec![0.0f64, 0.0, 0.0]);
        assert_eq!(fit_lambda(col.view()).unwrap(), 1.0);
        let m = array![[0.0], [0.0], [0.0]];
        let t = FeatureTransform::fit(&m).unwrap();
        assert_eq!(t.columns[0].std, 1.0);
        assert!(t.apply(&m).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fit_needs_two_rows() {
        assert!(FeatureTransform::<f64>::fit(&array![[1.0, 2.0]]).is_err());
        assert!(fit_lambda::<f64>(Array1::from(vec![]).view()).is_err());
    }

    #[test]
    fn apply_checks_width_and_is_deterministic() {
        let m = array![[1.0, 5.0], [2.0, 1.0], [4.0, 2.0], [9.0, 3.0]];
        let t = FeatureTransform::fit(&m).unwrap();
        let a = t.apply(&m).unwrap();
        let b = t.apply(&m).unwrap();
        assert_eq!(a, b);
        assert!(t.apply(&array![[1.0]]).is_err());
        // column 0 is strictly increasing and stays so
        let c0 = a.column(0);
        assert!(c0.windows(2).into_iter().all(|w| w[0] < w[1]));
    }

    #[test]
    fn identity_transform_is_noop() {
        let m = array![[1.5, -2.0], [0.0, 3.0]];
        assert_eq!(FeatureTransform::identity(2).apply(&m).unwrap(), m);
    }

    #[test]
    fn text_round_trip() {
        let m = array![[1.0, 5.0], [2.0, 1.0], [4.0, 2.0], [9.0, 3.0]];
        let t = FeatureTransform::fit(&m).unwrap();
        assert_eq!(FeatureTransform::from_text(&t.to_text()).unwrap(), t);
        assert!(FeatureTransform::<f64>::from_text(
            "feature-transform v1\ncolumns\t2\n0\t1\t0\t1\n"
        )
        .is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m: Array2<f32> = array![[1.0, 5.0], [2.0, 1.0], [4.0, 2.0], [9.0, 3.0]];
        let t = FeatureTransform::fit(&m).unwrap();
        let out = t.apply(&m).unwrap();
        let mean: f32 = out.column(0).sum() / 4.0;
        assert!(mean.abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_in_x(x in -50.0f64..50.0, dx in 1e-3f64..10.0, l in -5.0f64..5.0) {
                prop_assert!(yeo_johnson(x, l) < yeo_johnson(x + dx, l));
            }

            #[test]
            fn continuous_across_log_branches(x in -20.0f64..20.0, base in prop::sample::select(vec![0.0f64, 2.0]), sign in prop::sample::select(vec![-1.0f64, 1.0])) {
                let a = yeo_johnson(x, base);
                let b = yeo_johnson(x, base + sign * 1e-9);
                prop_assert!((a - b).abs() < 1e-6);
            }

            #[test]
            fn fit_never_worse_than_identity(v in proptest::collection::vec(-100.0f64..100.0, 3..40)) {
                let col = Array1::from(v);
                prop_assume!(!is_constant(col.view()));
                let l = fit_lambda(col.view()).unwrap();
                prop_assert!(log_likelihood(col.view(), l) >= log_likelihood(col.view(), 1.0));
            }
        }
    }
}
