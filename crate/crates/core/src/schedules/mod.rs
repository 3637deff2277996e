//! Annealing schedule families `t -> (A, B, dA/dt, dB/dt)`.
//!
//! Linear-constraint families (`A + B = 1`) have closed forms. The
//! quadratic-constraint families (`A^2 + B^2 = 1`) come from inverting a
//! tabulated metric integral. Inverse-engineered schedules are built from a
//! [`BlochPlan`](crate::inverse::BlochPlan), and tabulated ones from user data.

mod quadratic;
mod tabulated;

use std::fmt;
use std::str::FromStr;

pub use quadratic::{metric, MetricKind, QuadraticSchedule, QuadratureTable};
pub use tabulated::{MonotoneCubic, TabulatedSchedule};

use crate::error::{Error, Result};
use crate::inverse::{default_plan, InverseSchedule};
use crate::model::{ProblemSize, SchedulePoint};

pub const DEFAULT_QUADRATURE_POINTS: usize = 1024;
pub const MIN_QUADRATURE_POINTS: usize = 64;

/// Schedule family identifiers, as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    LinearNaive,
    QabLinear,
    CdLinear,
    QabQuadratic,
    CdQuadratic,
    InverseEngineered,
    CustomTabulated,
}

/// Constraint manifold the optimized families live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Linear,
    Quadratic,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::LinearNaive,
        Family::QabLinear,
        Family::CdLinear,
        Family::QabQuadratic,
        Family::CdQuadratic,
        Family::InverseEngineered,
        Family::CustomTabulated,
    ];

    /// Families that can be built from a spec alone and need no plan or data.
    pub const BUILT_IN: [Family; 5] = [
        Family::LinearNaive,
        Family::QabLinear,
        Family::CdLinear,
        Family::QabQuadratic,
        Family::CdQuadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::LinearNaive => "linear-naive",
            Family::QabLinear => "qab-linear",
            Family::CdLinear => "cd-linear",
            Family::QabQuadratic => "qab-quadratic",
            Family::CdQuadratic => "cd-quadratic",
            Family::InverseEngineered => "inverse-engineered",
            Family::CustomTabulated => "custom-tabulated",
        }
    }

    pub fn constraint(self) -> Option<Constraint> {
        match self {
            Family::LinearNaive | Family::QabLinear | Family::CdLinear => Some(Constraint::Linear),
            Family::QabQuadratic | Family::CdQuadratic => Some(Constraint::Quadratic),
            Family::InverseEngineered | Family::CustomTabulated => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
                Error::Config(format!(
                    "unknown family `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub family: Family,
    pub n: ProblemSize,
    pub t_f: f64,
    pub quadrature_points: usize,
}

impl ScheduleSpec {
    pub fn new(family: Family, n: ProblemSize, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::Config(format!(
                "run time must be positive, got {t_f}"
            )));
        }
        Ok(Self {
            family,
            n,
            t_f,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        })
    }

    pub fn with_quadrature_points(mut self, points: usize) -> Result<Self> {
        if points < MIN_QUADRATURE_POINTS {
            return Err(Error::Config(format!(
                "quadrature needs at least {MIN_QUADRATURE_POINTS} points, got {points}"
            )));
        }
        self.quadrature_points = points;
        Ok(self)
    }
}

/// Anything that yields a schedule point for `t` in `[0, t_f]`.
pub trait ScheduleFn: Sync {
    fn problem_size(&self) -> ProblemSize;
    fn t_f(&self) -> f64;
    fn point(&self, t: f64) -> Result<SchedulePoint>;
}

/// Closed-form schedules under `A + B = 1`, parametrized by `s = B`.
#[derive(Debug, Clone, Copy)]
pub struct LinearSchedule {
    family: Family,
    n: ProblemSize,
    t_f: f64,
}

impl LinearSchedule {
    /// `s(tau)` and `ds/dtau`.
    pub fn progress(&self, tau: f64) -> (f64, f64) {
        let nf = self.n.as_f64();
        match self.family {
            Family::QabLinear => {
                let root = (nf - 1.0).sqrt();
                let alpha = root.atan();
                let arg = (1.0 - 2.0 * tau) * alpha;
                let c = arg.cos();
                (0.5 * (1.0 - arg.tan() / root), alpha / (root * c * c))
            }
            Family::CdLinear => {
                let u = 1.0 - 2.0 * tau;
                // u^2 + 4 N tau (1 - tau) = N - (N - 1) u^2
                let q = nf - (nf - 1.0) * u * u;
                (0.5 * (1.0 - u / q.sqrt()), nf / (q * q.sqrt()))
            }
            _ => (tau, 1.0),
        }
    }
}

/// A schedule built from a [`ScheduleSpec`] or from external data.
#[derive(Debug, Clone)]
pub enum Schedule {
    Linear(LinearSchedule),
    Quadratic {
        family: Family,
        n: ProblemSize,
        inner: QuadraticSchedule,
    },
    Inverse(Box<InverseSchedule>),
    Tabulated(TabulatedSchedule),
}

impl Schedule {
    /// Builds any family except `custom-tabulated`, which needs data
    /// (see [`Schedule::tabulated`]). The inverse-engineered family uses the
    /// default polynomial plan and fails if its schedule diverges.
    pub fn build(spec: &ScheduleSpec) -> Result<Self> {
        match spec.family {
            Family::LinearNaive | Family::QabLinear | Family::CdLinear => {
                Ok(Schedule::Linear(LinearSchedule {
                    family: spec.family,
                    n: spec.n,
                    t_f: spec.t_f,
                }))
            }
            Family::QabQuadratic | Family::CdQuadratic => {
                let table = build_quadrature_table(spec)?;
                Ok(Schedule::Quadratic {
                    family: spec.family,
                    n: spec.n,
                    inner: QuadraticSchedule::new(table, spec.t_f),
                })
            }
            Family::InverseEngineered => Ok(Schedule::Inverse(Box::new(InverseSchedule::new(
                default_plan(spec.n, spec.t_f)?,
            )?))),
            Family::CustomTabulated => Err(Error::Config(
                "custom-tabulated schedules are built from a table, not a spec".into(),
            )),
        }
    }

    pub fn tabulated(table: TabulatedSchedule) -> Self {
        Schedule::Tabulated(table)
    }

    pub fn family(&self) -> Family {
        match self {
            Schedule::Linear(l) => l.family,
            Schedule::Quadratic { family, .. } => *family,
            Schedule::Inverse(_) => Family::InverseEngineered,
            Schedule::Tabulated(_) => Family::CustomTabulated,
        }
    }
}

impl ScheduleFn for Schedule {
    fn problem_size(&self) -> ProblemSize {
        match self {
            Schedule::Linear(l) => l.n,
            Schedule::Quadratic { n, .. } => *n,
            Schedule::Inverse(inv) => inv.plan().problem_size(),
            Schedule::Tabulated(tab) => tab.problem_size(),
        }
    }

    fn t_f(&self) -> f64 {
        match self {
            Schedule::Linear(l) => l.t_f,
            Schedule::Quadratic { inner, .. } => inner.t_f(),
            Schedule::Inverse(inv) => inv.plan().t_f(),
            Schedule::Tabulated(tab) => tab.t_f(),
        }
    }

    fn point(&self, t: f64) -> Result<SchedulePoint> {
        let t = check_time(t, self.t_f())?;
        match self {
            Schedule::Linear(l) => {
                let (s, ds) = l.progress(t / l.t_f);
                let s = s.clamp(0.0, 1.0);
                let rate = ds / l.t_f;
                Ok(SchedulePoint::new(1.0 - s, s, -rate, rate))
            }
            Schedule::Quadratic { inner, .. } => inner.point(t),
            Schedule::Inverse(inv) => inv.point(t),
            Schedule::Tabulated(tab) => tab.point(t),
        }
    }
}

/// Accepts `t` in `[0, t_f]` up to a relative slack of `1e-12`, clamping it.
pub(crate) fn check_time(t: f64, t_f: f64) -> Result<f64> {
    let slack = 1e-12 * t_f;
    if !(t >= -slack && t <= t_f + slack) {
        return Err(Error::TimeOutOfRange { t, t_f });
    }
    Ok(t.clamp(0.0, t_f))
}

/// One-shot evaluation. Builds the schedule on every call, so prefer
/// [`Schedule::build`] when sampling many times.
pub fn eval_schedule(spec: &ScheduleSpec, t: f64) -> Result<SchedulePoint> {
    Schedule::build(spec)?.point(t)
}

pub fn build_quadrature_table(spec: &ScheduleSpec) -> Result<QuadratureTable> {
    let kind = match spec.family {
        Family::QabQuadratic => MetricKind::Qab,
        Family::CdQuadratic => MetricKind::Cd,
        other => {
            return Err(Error::Config(format!(
                "{other} is not a quadratic-constraint family"
            )))
        }
    };
    Ok(QuadratureTable::build(kind, spec.n, spec.quadrature_points))
}

pub fn invert_quadrature(table: &QuadratureTable, fraction: f64) -> f64 {
    table.invert(fraction)
}

/// Samples `samples` uniformly spaced points over `[0, t_f]`, endpoints included.
pub fn sample_times(t_f: f64, samples: usize) -> impl Iterator<Item = f64> {
    let m = samples.max(2) - 1;
    (0..=m).map(move |k| {
        if k == m {
            t_f
        } else {
            t_f * k as f64 / m as f64
        }
    })
}
