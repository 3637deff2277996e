//! User-supplied schedules read from `t,A,B` tables.

use std::io::Read;

use crate::error::{Error, Result};
use crate::model::{ProblemSize, SchedulePoint};

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slope limiting.
/// Monotone data stays monotone between knots.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(Error::Config(
                "interpolation needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope.fill(secant[0]);
        } else {
            for i in 1..n - 1 {
                let (d0, d1) = (secant[i - 1], secant[i]);
                if d0 * d1 > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slope[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slope[0] = end_slope(h[0], h[1], secant[0], secant[1]);
            slope[n - 1] = end_slope(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
        }
        Ok(Self { x, y, slope })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Value and first derivative at `t` (clamped to the domain).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let i = self
            .x
            .partition_point(|&v| v <= t)
            .saturating_sub(1)
            .min(self.x.len() - 2);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let deriv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (value, deriv)
    }
}

// Three-point end formula, limited to keep the end interval monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Schedule interpolated from tabulated `(t, A, B)` rows.
#[derive(Debug, Clone)]
pub struct TabulatedSchedule {
    n: ProblemSize,
    a: MonotoneCubic,
    b: MonotoneCubic,
}

impl TabulatedSchedule {
    pub fn from_samples(n: ProblemSize, t: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if t.first() != Some(&0.0) {
            return Err(Error::Config(
                "tabulated schedule must start at t = 0".into(),
            ));
        }
        if t.len() < 2 {
            return Err(Error::Config(
                "tabulated schedule needs at least two rows".into(),
            ));
        }
        Ok(Self {
            n,
            a: MonotoneCubic::new(t.clone(), a)?,
            b: MonotoneCubic::new(t, b)?,
        })
    }

    /// Reads a CSV with header `t,A,B`. Extra columns after `B` are ignored,
    /// so schedule tables written by the CLI can be fed back directly.
    pub fn from_csv<R: Read>(n: ProblemSize, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().take(3).collect();
        if names != ["t", "A", "B"] {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "expected header `t,A,B`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let (mut t, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).ok_or_else(|| Error::Format {
                    line,
                    message: format!("missing column {}", i + 1),
                })?;
                raw.parse::<f64>().map_err(|e| Error::Format {
                    line,
                    message: format!("cannot parse `{raw}` as a number: {e}"),
                })
            };
            let (tv, av, bv) = (field(0)?, field(1)?, field(2)?);
            if let Some(&prev) = t.last() {
                if !(tv > prev) {
                    return Err(Error::Format {
                        line,
                        message: format!("t must be strictly increasing ({tv} after {prev})"),
                    });
                }
            } else if tv != 0.0 {
                return Err(Error::Format {
                    line,
                    message: format!("first row must have t = 0, found {tv}"),
                });
            }
            t.push(tv);
            a.push(av);
            b.push(bv);
        }
        Self::from_samples(n, t, a, b)
    }

    pub fn problem_size(&self) -> ProblemSize {
        self.n
    }

    pub fn t_f(&self) -> f64 {
        self.a.domain().1
    }

    pub(crate) fn point(&self, t: f64) -> Result<SchedulePoint> {
        let (a, da) = self.a.eval(t);
        let (b, db) = self.b.eval(t);
        Ok(SchedulePoint::new(a, b, da, db))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_linear_data_exactly() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = MonotoneCubic::new(x, y).unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let (v, d) = p.eval(t);
            assert!((v - (2.0 * t + 1.0)).abs() < 1e-13);
            assert!((d - 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(MonotoneCubic::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![0.0]).is_err());
        let n = ProblemSize::new(4).unwrap();
        let csv = "t,A,B\n0,1,0\n0.5,0.5,0.5\n0.4,0,1\n";
        match TabulatedSchedule::from_csv(n, csv.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let csv = "time,A,B\n0,1,0\n1,0,1\n";
        assert!(matches!(
            TabulatedSchedule::from_csv(n, csv.as_bytes()),
            Err(Error::Format { line: 1, .. })
        ));
        let csv = "t,A,B\n0.1,1,0\n1,0,1\n";
        assert!(TabulatedSchedule::from_csv(n, csv.as_bytes()).is_err());
        let csv = "t,A,B\n0,1,zero\n1,0,1\n";
        assert!(matches!(
            TabulatedSchedule::from_csv(n, csv.as_bytes()),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn reads_cli_schedule_tables() {
        let n = ProblemSize::new(2).unwrap();
        let csv = "t,A,B,dA,dB,Delta,theta,dtheta\n0,1,0,-1,1,1,1.5,1\n2,0,1,-1,1,1,3.1,1\n";
        let s = TabulatedSchedule::from_csv(n, csv.as_bytes()).unwrap();
        assert_eq!(s.t_f(), 2.0);
        let p = s.point(1.0).unwrap();
        assert!((p.a - 0.5).abs() < 1e-15 && (p.db - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(
            steps in prop::collection::vec((0.01f64..1.0, 0.0f64..1.0), 3..30),
            probe in 0.0f64..1.0,
        ) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let p = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
            let span = *x.last().unwrap();
            let t = probe * span;
            let (_, d) = p.eval(t);
            prop_assert!(d >= -1e-12);
            let (v0, _) = p.eval(t);
            let (v1, _) = p.eval((t + 1e-3 * span).min(span));
            prop_assert!(v1 >= v0 - 1e-12);
            for (xi, yi) in x.iter().zip(&y) {
                prop_assert!((p.eval(*xi).0 - yi).abs() < 1e-12);
            }
        }
    }
}
