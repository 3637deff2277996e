//! Counterdiabatic term and the adiabatic-error functionals.
//!
//! For the Grover model the counterdiabatic Hamiltonian is
//! `(i/2) dtheta/dt (|0><phi| - |phi><0|) = -(dtheta/dt / 2) sigma_y`, which is
//! the spin-1/2 form `(n x dn/dt) . S` specialized to `n = (-sin theta, 0, cos theta)`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::model::{build_effective, ProblemSize, SchedulePoint};
use crate::quadrature::simpson;
use crate::schedules::ScheduleFn;

pub const DEFAULT_ACTION_SAMPLES: usize = 2048;

/// Counterdiabatic term `-coeff * sigma_y` with `coeff = (dtheta/dt) / 2`.
///
/// Only a `sigma_y` component is representable, so the term is off-diagonal
/// in the instantaneous eigenbasis by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdTerm {
    pub coeff: f64,
}

impl CdTerm {
    /// Matrix elements `(H_{0,phi}, H_{phi,0})` as `(re, im)` pairs.
    pub fn off_diagonal(&self) -> ((f64, f64), (f64, f64)) {
        ((0.0, self.coeff), (0.0, -self.coeff))
    }

    /// Field vector `h` with `H_CD = h . sigma`.
    pub fn field(&self) -> Vector3<f64> {
        Vector3::new(0.0, -self.coeff, 0.0)
    }
}

pub fn cd_coefficient(n: ProblemSize, p: &SchedulePoint) -> Result<CdTerm> {
    let h = build_effective(n, p)?;
    Ok(CdTerm {
        coeff: 0.5 * h.dtheta,
    })
}

/// `n x dn/dt` for a unit axis `n`. For a spin-1/2 the counterdiabatic
/// Hamiltonian is this vector dotted into `S = sigma / 2`.
pub fn cd_spin(n: &Vector3<f64>, dn: &Vector3<f64>) -> Result<Vector3<f64>> {
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitVector { norm });
    }
    let tangency = n.dot(dn);
    if tangency.abs() > 1e-8 {
        return Err(Error::Config(format!(
            "axis rate is not tangent to the unit sphere (n . dn = {tangency:e})"
        )));
    }
    Ok(n.cross(dn))
}

/// The three contributions to `L_QAB`: from `E0`, from the gap, and from the
/// axis direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalParts {
    pub offset: f64,
    pub gap: f64,
    pub direction: f64,
}

impl FunctionalParts {
    pub fn sum(&self) -> f64 {
        self.offset + self.gap + self.direction
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFunctionalSample {
    pub l_qab: f64,
    pub l_cd: f64,
    pub parts: FunctionalParts,
}

/// `L_QAB = (A'^2 + B'^2 + (2/N) A'B') / gap^4` and
/// `L_CD = Tr(H_CD^2) / gap^2 = theta'^2 / (2 gap^2)`.
///
/// Written in the schedule, `L_CD = (2(N-1)/N^2) (A B' - B A')^2 / gap^6`.
pub fn error_functionals(n: ProblemSize, p: &SchedulePoint) -> Result<ErrorFunctionalSample> {
    let h = build_effective(n, p)?;
    let nf = n.as_f64();
    let g2 = h.gap * h.gap;
    let g4 = g2 * g2;
    let l_qab = (p.da * p.da + p.db * p.db + 2.0 / nf * p.da * p.db) / g4;

    let de0 = 0.5 * (p.da + p.db);
    let dgap = ((p.a - p.b) * (p.da - p.db) + 2.0 / nf * (p.da * p.b + p.a * p.db)) / h.gap;
    let parts = FunctionalParts {
        offset: 2.0 * de0 * de0 / g4,
        gap: dgap * dgap / (2.0 * g4),
        direction: h.dtheta * h.dtheta / (2.0 * g2),
    };
    Ok(ErrorFunctionalSample {
        l_qab,
        l_cd: parts.direction,
        parts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Qab,
    Cd,
}

impl Functional {
    pub fn pick(self, sample: &ErrorFunctionalSample) -> f64 {
        match self {
            Functional::Qab => sample.l_qab,
            Functional::Cd => sample.l_cd,
        }
    }
}

/// Time integral of a functional along a schedule (composite Simpson).
pub fn action<S: ScheduleFn + ?Sized>(
    schedule: &S,
    functional: Functional,
    samples: usize,
) -> Result<f64> {
    if samples < 16 {
        return Err(Error::Config(format!(
            "action integration needs at least 16 samples, got {samples}"
        )));
    }
    let n = schedule.problem_size();
    simpson(
        |t| {
            let p = schedule.point(t)?;
            Ok(functional.pick(&error_functionals(n, &p)?))
        },
        0.0,
        schedule.t_f(),
        samples,
    )
}
