//! Schedules under the quadratic constraint `A^2 + B^2 = 1`.
//!
//! With `A = cos(phi)`, `B = sin(phi)` both error functionals reduce to
//! `phi'^2 g(phi)`, whose geodesic runs at constant speed in the metric:
//! `t / t_f = int_0^phi sqrt(g) / int_0^{pi/2} sqrt(g)`. The integral is
//! tabulated once and inverted per evaluation.

use std::f64::consts::FRAC_PI_2;

use crate::error::Result;
use crate::model::{ProblemSize, SchedulePoint};
use crate::quadrature::simpson_panel;

/// Which error functional the metric comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Qab,
    Cd,
}

/// `g(phi)` for the chosen functional.
pub fn metric(kind: MetricKind, n: ProblemSize, phi: f64) -> f64 {
    let nf = n.as_f64();
    let s2 = (2.0 * phi).sin();
    let d = 1.0 - (1.0 - 2.0 / nf) * s2;
    match kind {
        MetricKind::Qab => (1.0 - s2 / nf) / (d * d),
        MetricKind::Cd => 1.0 / (d * d * d),
    }
}

/// Cumulative `int_0^phi sqrt(g)` on a uniform grid over `[0, pi/2]`.
#[derive(Debug, Clone)]
pub struct QuadratureTable {
    kind: MetricKind,
    n: ProblemSize,
    phi: Vec<f64>,
    cumulative: Vec<f64>,
}

impl QuadratureTable {
    /// Each of the `intervals` subintervals is integrated with a Simpson panel.
    pub fn build(kind: MetricKind, n: ProblemSize, intervals: usize) -> Self {
        let m = intervals.max(1);
        let h = FRAC_PI_2 / m as f64;
        let f = |p: f64| metric(kind, n, p).sqrt();
        let mut phi = Vec::with_capacity(m + 1);
        let mut cumulative = Vec::with_capacity(m + 1);
        phi.push(0.0);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..m {
            let lo = h * k as f64;
            let hi = if k + 1 == m {
                FRAC_PI_2
            } else {
                h * (k + 1) as f64
            };
            acc += simpson_panel(&f, lo, hi);
            phi.push(hi);
            cumulative.push(acc);
        }
        Self {
            kind,
            n,
            phi,
            cumulative,
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn problem_size(&self) -> ProblemSize {
        self.n
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("table is never empty")
    }

    /// `(phi, cumulative)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.phi
            .iter()
            .copied()
            .zip(self.cumulative.iter().copied())
    }

    pub fn sqrt_metric(&self, phi: f64) -> f64 {
        metric(self.kind, self.n, phi).sqrt()
    }

    /// Cumulative integral at an arbitrary `phi`, extending the table with a
    /// Simpson panel from the nearest lower node.
    pub fn cumulative_at(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, FRAC_PI_2);
        let i = self.segment(phi);
        let f = |p: f64| self.sqrt_metric(p);
        self.cumulative[i] + simpson_panel(&f, self.phi[i], phi)
    }

    /// Index `i` of the node with `phi[i] <= phi < phi[i + 1]`.
    fn segment(&self, phi: f64) -> usize {
        let idx = self.phi.partition_point(|&p| p <= phi);
        idx.saturating_sub(1).min(self.phi.len() - 2)
    }

    /// Solves `cumulative(phi) / total = fraction` for `phi`.
    ///
    /// Bisection over the table locates the bracketing segment, linear
    /// interpolation seeds the root and a safeguarded Newton iteration on the
    /// local panel integral refines it.
    pub fn invert(&self, fraction: f64) -> f64 {
        if fraction <= 0.0 {
            return 0.0;
        }
        if fraction >= 1.0 {
            return FRAC_PI_2;
        }
        let total = self.total();
        let target = fraction * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(self.cumulative.len() - 2);
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
        let f = |p: f64| self.sqrt_metric(p);
        let residual = |p: f64| c0 + simpson_panel(&f, p0, p) - target;

        let (mut lo, mut hi) = (p0, p1);
        let mut x = p0 + (p1 - p0) * (target - c0) / (c1 - c0);
        for _ in 0..60 {
            let r = residual(x);
            if r.abs() <= 1e-14 * total {
                break;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let next = x - r / f(x);
            x = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }
}

/// Constant-metric-speed schedule on the quarter circle.
#[derive(Debug, Clone)]
pub struct QuadraticSchedule {
    table: QuadratureTable,
    t_f: f64,
}

impl QuadraticSchedule {
    pub fn new(table: QuadratureTable, t_f: f64) -> Self {
        Self { table, t_f }
    }

    pub fn table(&self) -> &QuadratureTable {
        &self.table
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.table.invert(t / self.t_f)
    }

    pub(crate) fn point(&self, t: f64) -> Result<SchedulePoint> {
        let phi = self.angle(t);
        // Inverse-function rule: dphi/dt = total / (t_f sqrt(g(phi))).
        let rate = self.table.total() / (self.t_f * self.table.sqrt_metric(phi));
        let (a, b) = if phi >= FRAC_PI_2 {
            (0.0, 1.0)
        } else {
            (phi.cos(), phi.sin())
        };
        Ok(SchedulePoint::new(a, b, -b * rate, a * rate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn size(n: u64) -> ProblemSize {
        ProblemSize::new(n).unwrap()
    }

    #[test]
    fn n2_metrics_reduce() {
        for k in 0..=20 {
            let phi = FRAC_PI_2 * k as f64 / 20.0;
            assert_abs_diff_eq!(
                metric(MetricKind::Qab, size(2), phi),
                1.0 - (2.0 * phi).sin() / 2.0,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(metric(MetricKind::Cd, size(2), phi), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn n2_cd_table_inverts_linearly() {
        let table = QuadratureTable::build(MetricKind::Cd, size(2), 1024);
        assert_abs_diff_eq!(table.total(), FRAC_PI_2, epsilon = 1e-14);
        assert_abs_diff_eq!(table.invert(0.3), 0.15 * PI, epsilon = 1e-13);
        for k in 0..=10 {
            let tau = k as f64 / 10.0;
            assert_abs_diff_eq!(table.invert(tau), FRAC_PI_2 * tau, epsilon = 1e-13);
        }
    }

    #[test]
    fn boundaries_invert_exactly() {
        let table = QuadratureTable::build(MetricKind::Qab, size(37), 256);
        assert_eq!(table.invert(0.0), 0.0);
        assert_eq!(table.invert(1.0), FRAC_PI_2);
        let first = table.entries().next().unwrap();
        let last = table.entries().last().unwrap();
        assert_eq!(first, (0.0, 0.0));
        assert_eq!(last.0, FRAC_PI_2);
    }

    #[test]
    fn symmetric_midpoint_n16() {
        for kind in [MetricKind::Qab, MetricKind::Cd] {
            let table = QuadratureTable::build(kind, size(16), 1024);
            let mut prev = -1.0;
            for (_, c) in table.entries() {
                assert!(c > prev);
                prev = c;
            }
            let sched = QuadraticSchedule::new(table, 3.0);
            assert_abs_diff_eq!(sched.angle(1.5), PI / 4.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn doubling_grid_self_convergence() {
        for n in [2, 16, 64, 256, 1024] {
            for kind in [MetricKind::Qab, MetricKind::Cd] {
                let a = QuadratureTable::build(kind, size(n), 1024).total();
                let b = QuadratureTable::build(kind, size(n), 2048).total();
                assert!((a - b).abs() < 1e-10, "n={n} {kind:?} {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let sched =
            QuadraticSchedule::new(QuadratureTable::build(MetricKind::Cd, size(64), 1024), 2.0);
        for k in 1..20 {
            let t = 2.0 * k as f64 / 20.0;
            let p = sched.point(t).unwrap();
            let dt = 1e-6;
            let fd = (sched.point(t + dt).unwrap().b - sched.point(t - dt).unwrap().b) / (2.0 * dt);
            assert!(
                (p.db - fd).abs() < 1e-6 * p.db.abs().max(1.0),
                "t={t} {} {fd}",
                p.db
            );
        }
    }

    proptest! {
        #[test]
        fn inversion_hits_target(n in 2u64..5000, tau in 0.0f64..1.0, cd in any::<bool>()) {
            let kind = if cd { MetricKind::Cd } else { MetricKind::Qab };
            let table = QuadratureTable::build(kind, size(n), 1024);
            let phi = table.invert(tau);
            prop_assert!((table.cumulative_at(phi) / table.total() - tau).abs() < 1e-10);
        }
    }
}
