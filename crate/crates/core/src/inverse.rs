//! Invariant-based inverse engineering of the schedule.
//!
//! The two-level Lewis-Riesenfeld invariant is `F(t) = e(t) . sigma` with a
//! unit Bloch vector `e = (sin T cos P, sin T sin P, cos T)` obeying
//! `de/dt = gap n x e`. Choosing the angles `(T(t), P(t))` first and solving
//! that equation for the Hamiltonian gives
//!
//! ```text
//! A = N / (2 sqrt(N-1)) * T' / sin P
//! B = (1 - 2/N) A + T' cos T cos P / (sin T sin P) - P'
//! ```
//!
//! Both expressions are `0/0` at the endpoints of a plan satisfying the
//! boundary conditions. Those limits are taken by Richardson extrapolation
//! from offset samples.

use std::io::Read;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::dynamics::{evolve, EvolutionConfig, EvolutionResult};
use crate::error::{Error, Result};
use crate::model::{build_effective, ProblemSize, SchedulePoint};
use crate::schedules::{check_time, sample_times, Schedule};

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e4;
pub const DEFAULT_VALIDATION_SAMPLES: usize = 4096;
/// Boundary conditions are reported when violated by more than this.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Offset (in units of `t_f`) for the removable-singularity limits.
const LIMIT_OFFSET: f64 = 1e-3;
/// Step (in units of `t_f`) for central differences of `A` and `B`.
const DERIVATIVE_STEP: f64 = 1e-5;
/// Denominators below this are treated as singular.
const SINGULAR: f64 = 1e-7;

/// Polynomial in `tau = t / t_f`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }
}

/// Bloch angles and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
    pub dtheta: f64,
    pub dphi: f64,
}

/// Angle trajectory `(T(t), P(t))` of the invariant's Bloch vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochPlan {
    theta: Polynomial,
    phi: Polynomial,
    dtheta: Polynomial,
    dphi: Polynomial,
    n: ProblemSize,
    t_f: f64,
}

impl BlochPlan {
    pub fn new(n: ProblemSize, t_f: f64, theta: Polynomial, phi: Polynomial) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::Config(format!(
                "run time must be positive, got {t_f}"
            )));
        }
        Ok(Self {
            dtheta: theta.derivative(),
            dphi: phi.derivative(),
            theta,
            phi,
            n,
            t_f,
        })
    }

    /// Reads `which,power,coefficient` rows (`which` is `Theta` or `Phi`).
    /// Blank lines and `#` comments are skipped; a header row is optional.
    pub fn from_csv<R: Read>(n: ProblemSize, t_f: f64, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(reader);
        let mut theta: Vec<Option<f64>> = Vec::new();
        let mut phi: Vec<Option<f64>> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Format { line, message };
            if record.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", record.len())));
            }
            let which = &record[0];
            if which.eq_ignore_ascii_case("which") {
                continue;
            }
            let target = match which {
                "Theta" | "theta" | "Θ" => &mut theta,
                "Phi" | "phi" | "Φ" => &mut phi,
                other => {
                    return Err(bad(format!(
                        "unknown angle `{other}` (expected Theta or Phi)"
                    )))
                }
            };
            let power: usize = record[1].parse().map_err(|_| {
                bad(format!(
                    "power `{}` is not a nonnegative integer",
                    &record[1]
                ))
            })?;
            if power > 64 {
                return Err(bad(format!("power {power} exceeds 64")));
            }
            let coefficient: f64 = record[2]
                .parse()
                .map_err(|_| bad(format!("coefficient `{}` is not a number", &record[2])))?;
            if !coefficient.is_finite() {
                return Err(bad("coefficient must be finite".into()));
            }
            if target.len() <= power {
                target.resize(power + 1, None);
            }
            if target[power].replace(coefficient).is_some() {
                return Err(bad(format!(
                    "duplicate {which} coefficient for power {power}"
                )));
            }
        }
        if theta.is_empty() || phi.is_empty() {
            return Err(Error::Format {
                line: 0,
                message: "plan needs at least one Theta and one Phi coefficient".into(),
            });
        }
        let dense = |v: Vec<Option<f64>>| {
            Polynomial::new(v.into_iter().map(|c| c.unwrap_or(0.0)).collect())
        };
        Self::new(n, t_f, dense(theta), dense(phi))
    }

    pub fn problem_size(&self) -> ProblemSize {
        self.n
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn theta_polynomial(&self) -> &Polynomial {
        &self.theta
    }

    pub fn phi_polynomial(&self) -> &Polynomial {
        &self.phi
    }

    pub fn angles(&self, t: f64) -> Angles {
        let tau = t / self.t_f;
        Angles {
            theta: self.theta.eval(tau),
            phi: self.phi.eval(tau),
            dtheta: self.dtheta.eval(tau) / self.t_f,
            dphi: self.dphi.eval(tau) / self.t_f,
        }
    }

    pub fn bloch_vector(&self, t: f64) -> Vector3<f64> {
        let a = self.angles(t);
        let (st, ct) = a.theta.sin_cos();
        let (sp, cp) = a.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Analytic `de/dt`.
    pub fn bloch_rate(&self, t: f64) -> Vector3<f64> {
        let a = self.angles(t);
        let (st, ct) = a.theta.sin_cos();
        let (sp, cp) = a.phi.sin_cos();
        Vector3::new(
            a.dtheta * ct * cp - a.dphi * st * sp,
            a.dtheta * ct * sp + a.dphi * st * cp,
            -a.dtheta * st,
        )
    }

    pub fn boundary_report(&self) -> BoundaryReport {
        let start = self.angles(0.0);
        let end = self.angles(self.t_f);
        BoundaryReport {
            theta_start_error: start.theta - self.n.initial_angle(),
            sin_phi_start: start.phi.sin(),
            theta_rate_start: start.dtheta,
            sin_theta_end: end.theta.sin(),
            theta_rate_end: end.dtheta,
        }
    }

    /// Raw coefficient formulas; the flag marks a near-singular denominator.
    fn raw(&self, t: f64) -> (f64, f64, bool) {
        let a = self.angles(t);
        let (st, ct) = a.theta.sin_cos();
        let (sp, cp) = a.phi.sin_cos();
        let nf = self.n.as_f64();
        let coeff_a = nf / (2.0 * (nf - 1.0).sqrt()) * a.dtheta / sp;
        let coeff_b = (1.0 - 2.0 / nf) * coeff_a + a.dtheta * ct * cp / (st * sp) - a.dphi;
        let singular = sp.abs() < SINGULAR || st.abs() < SINGULAR;
        (coeff_a, coeff_b, singular)
    }

    /// `(A, B)` at `t`, with removable singularities resolved by polynomial
    /// extrapolation from offsets `eps, 2 eps, 4 eps, 8 eps` (one-sided near
    /// the endpoints, symmetric in the interior).
    pub fn coefficients(&self, t: f64) -> (f64, f64) {
        let (a, b, singular) = self.raw(t);
        if !singular {
            return (a, b);
        }
        let eps = LIMIT_OFFSET * self.t_f;
        let f = |x: f64| {
            let (a, b, _) = self.raw(x);
            (a, b)
        };
        let combine = |weights: &[f64], values: &[(f64, f64)]| {
            weights
                .iter()
                .zip(values)
                .fold((0.0, 0.0), |(sa, sb), (w, (a, b))| (sa + w * a, sb + w * b))
        };
        let offsets = [1.0, 2.0, 4.0, 8.0];
        if t - 8.0 * eps < 0.0 || t + 8.0 * eps > self.t_f {
            let dir = if t - 8.0 * eps < 0.0 { 1.0 } else { -1.0 };
            let values = offsets.map(|k| f(t + dir * k * eps));
            combine(&[64.0 / 21.0, -8.0 / 3.0, 2.0 / 3.0, -1.0 / 21.0], &values)
        } else {
            let values = offsets[..3].iter().map(|&k| {
                let (ap, bp) = f(t + k * eps);
                let (am, bm) = f(t - k * eps);
                (0.5 * (ap + am), 0.5 * (bp + bm))
            });
            let values: Vec<_> = values.collect();
            combine(&[64.0 / 45.0, -4.0 / 9.0, 1.0 / 45.0], &values)
        }
    }

    fn point_unchecked(&self, t: f64) -> SchedulePoint {
        let (a, b) = self.coefficients(t);
        let h = DERIVATIVE_STEP * self.t_f;
        let (ap, bp) = self.coefficients(t + h);
        let (am, bm) = self.coefficients(t - h);
        SchedulePoint::new(a, b, (ap - am) / (2.0 * h), (bp - bm) / (2.0 * h))
    }

    /// Sign changes of `sin P` or `sin T` between samples that hide a pole.
    fn find_pole(&self, t0: f64, t1: f64, bound: f64) -> Option<(f64, f64, f64)> {
        let sines = |t: f64| {
            let a = self.angles(t);
            (a.phi.sin(), a.theta.sin())
        };
        let (p0, q0) = sines(t0);
        let (p1, q1) = sines(t1);
        let crossings = [
            (p0 * p1 < 0.0).then_some(0usize),
            (q0 * q1 < 0.0).then_some(1usize),
        ];
        for which in crossings.into_iter().flatten() {
            let pick = |t: f64| if which == 0 { sines(t).0 } else { sines(t).1 };
            let (mut lo, mut hi) = (t0, t1);
            let s_lo = pick(lo);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if pick(mid) * s_lo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let delta = 1e-9 * self.t_f;
            for probe in [root - delta, root + delta] {
                let (a, b, _) = self.raw(probe);
                if !(a.abs() <= bound && b.abs() <= bound) {
                    return Some((probe, a, b));
                }
            }
        }
        None
    }
}

/// Residuals of the boundary conditions `T(0) = theta(0)`, `sin P(0) = 0`,
/// `T'(0) = 0`, `sin T(t_f) = 0`, `T'(t_f) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryReport {
    pub theta_start_error: f64,
    pub sin_phi_start: f64,
    pub theta_rate_start: f64,
    pub sin_theta_end: f64,
    pub theta_rate_end: f64,
}

impl BoundaryReport {
    /// Human-readable list of conditions violated beyond `tol`.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        [
            ("Theta(0) - theta(0)", self.theta_start_error),
            ("sin Phi(0)", self.sin_phi_start),
            ("dTheta/dt(0)", self.theta_rate_start),
            ("sin Theta(t_f)", self.sin_theta_end),
            ("dTheta/dt(t_f)", self.theta_rate_end),
        ]
        .into_iter()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(name, v)| format!("{name} = {v:e}"))
        .collect()
    }

    pub fn is_satisfied(&self) -> bool {
        self.violations(BOUNDARY_TOLERANCE).is_empty()
    }
}

/// Polynomial plan
/// `T = theta0 (1 - 4 tau^3 + 3 tau^4) + 4 pi tau^3 - 3 pi tau^4`,
/// `P = pi (1 - 2 tau^3 + 3/2 tau^4) + t_f/3 (tau^3 - tau^4)
///      + 6 N (theta0 - pi) / (sqrt(N-1) t_f) (tau^2 - 2 tau^3 + tau^4)`.
pub fn default_plan(n: ProblemSize, t_f: f64) -> Result<BlochPlan> {
    use std::f64::consts::PI;
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::Config(format!(
            "run time must be positive, got {t_f}"
        )));
    }
    let theta0 = n.initial_angle();
    let sweep = PI - theta0;
    let theta = Polynomial::new(vec![theta0, 0.0, 0.0, 4.0 * sweep, -3.0 * sweep]);
    let k = 6.0 * n.as_f64() * (theta0 - PI) / ((n.as_f64() - 1.0).sqrt() * t_f);
    let phi = Polynomial::new(vec![
        PI,
        0.0,
        k,
        -2.0 * PI + t_f / 3.0 - 2.0 * k,
        1.5 * PI - t_f / 3.0 + k,
    ]);
    BlochPlan::new(n, t_f, theta, phi)
}

/// Schedule extracted from a plan whose coefficients stay bounded.
#[derive(Debug, Clone)]
pub struct InverseSchedule {
    plan: BlochPlan,
    bound: f64,
}

impl InverseSchedule {
    pub fn new(plan: BlochPlan) -> Result<Self> {
        Self::with_options(plan, DEFAULT_DIVERGENCE_BOUND, DEFAULT_VALIDATION_SAMPLES)
    }

    /// Validates the extracted `(A, B)` on `samples + 1` uniform times and
    /// scans for poles between them.
    pub fn with_options(plan: BlochPlan, bound: f64, samples: usize) -> Result<Self> {
        let t_f = plan.t_f;
        let times: Vec<f64> = sample_times(t_f, samples.max(2) + 1).collect();
        for &t in &times {
            let (a, b) = plan.coefficients(t);
            if !(a.abs() <= bound && b.abs() <= bound) {
                return Err(Error::Divergence { t, a, b, bound });
            }
        }
        for w in times[1..times.len() - 1].windows(2) {
            if let Some((t, a, b)) = plan.find_pole(w[0], w[1], bound) {
                return Err(Error::Divergence { t, a, b, bound });
            }
        }
        Ok(Self { plan, bound })
    }

    pub fn plan(&self) -> &BlochPlan {
        &self.plan
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub(crate) fn point(&self, t: f64) -> Result<SchedulePoint> {
        Ok(self.plan.point_unchecked(t))
    }

    /// `(max |A|, max |B|)` over `samples + 1` uniform times.
    pub fn max_abs(&self, samples: usize) -> (f64, f64) {
        sample_times(self.plan.t_f, samples.max(2) + 1)
            .map(|t| self.plan.coefficients(t))
            .fold((0.0f64, 0.0f64), |(ma, mb), (a, b)| {
                (ma.max(a.abs()), mb.max(b.abs()))
            })
    }
}

/// Schedule point extracted from the plan at `t`; derivatives by central
/// differences.
pub fn plan_to_schedule(plan: &BlochPlan, t: f64) -> Result<SchedulePoint> {
    let t = check_time(t, plan.t_f)?;
    let p = plan.point_unchecked(t);
    let bound = DEFAULT_DIVERGENCE_BOUND;
    if !(p.a.abs() <= bound && p.b.abs() <= bound) {
        return Err(Error::Divergence {
            t,
            a: p.a,
            b: p.b,
            bound,
        });
    }
    Ok(p)
}

/// `gap n x e` from the extracted schedule at `t`.
fn driven_rate(plan: &BlochPlan, t: f64) -> Result<Vector3<f64>> {
    let (a, b) = plan.coefficients(t);
    let h = build_effective(plan.n, &SchedulePoint::new(a, b, 0.0, 0.0))?;
    let n = Vector3::from(h.axis());
    Ok(h.gap * n.cross(&plan.bloch_vector(t)))
}

/// `max_t |de/dt - gap n x e|` over `samples + 1` uniform times, with `de/dt`
/// from the plan's analytic derivatives and `(gap, n)` rebuilt from the
/// extracted schedule.
pub fn invariant_residual(plan: &BlochPlan, samples: usize) -> Result<f64> {
    InverseSchedule::new(plan.clone())?;
    let mut worst: f64 = 0.0;
    for t in sample_times(plan.t_f, samples.max(2) + 1) {
        worst = worst.max(invariant_residual_at(plan, t)?);
    }
    Ok(worst)
}

/// `|de/dt - gap n x e|` at a single time. Does not check for divergence.
pub fn invariant_residual_at(plan: &BlochPlan, t: f64) -> Result<f64> {
    Ok((plan.bloch_rate(t) - driven_rate(plan, t)?).norm())
}

/// Norms `|gap n x e|` of `[H, F]` at `t = 0` and `t = t_f`, with `H(0)` the
/// pure driver `A(0) (1 - |+><+|)` and `H(t_f)` the pure problem Hamiltonian
/// `B(t_f) (1 - |0><0|)`.
pub fn endpoint_commutators(plan: &BlochPlan) -> Result<(f64, f64)> {
    let n = plan.n;
    let (a0, _) = plan.coefficients(0.0);
    let (_, bf) = plan.coefficients(plan.t_f);
    let mut norms = [0.0; 2];
    for (slot, (t, p)) in [
        (0.0, SchedulePoint::new(a0, 0.0, 0.0, 0.0)),
        (plan.t_f, SchedulePoint::new(0.0, bf, 0.0, 0.0)),
    ]
    .into_iter()
    .enumerate()
    {
        let h = build_effective(n, &p)?;
        let axis = Vector3::from(h.axis());
        norms[slot] = (h.gap * axis.cross(&plan.bloch_vector(t))).norm();
    }
    Ok((norms[0], norms[1]))
}

#[derive(Debug, Clone)]
pub struct InverseEvolution {
    pub result: EvolutionResult,
    /// Smallest sampled `|<gs(t)|psi(t)>|^2`.
    pub min_adiabatic_overlap: f64,
    /// Sampled population of the invariant eigenstate the run started in.
    pub invariant_population: Vec<(f64, f64)>,
}

impl InverseEvolution {
    pub fn fidelity(&self) -> f64 {
        self.result.fidelity
    }

    pub fn min_invariant_population(&self) -> f64 {
        self.invariant_population
            .iter()
            .map(|&(_, p)| p)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Eigenvector of `e . sigma` with eigenvalue `sign` (`+1` or `-1`).
fn invariant_eigenstate(angles: &Angles, sign: f64) -> [Complex64; 2] {
    let (s, c) = (0.5 * angles.theta).sin_cos();
    let phase = Complex64::from_polar(1.0, angles.phi);
    if sign < 0.0 {
        [Complex64::new(s, 0.0), -phase * c]
    } else {
        [Complex64::new(c, 0.0), phase * s]
    }
}

/// Evolves under the extracted schedule (no counterdiabatic term).
pub fn evolve_inverse(plan: &BlochPlan, steps: Option<usize>) -> Result<InverseEvolution> {
    let schedule = Schedule::Inverse(Box::new(InverseSchedule::new(plan.clone())?));
    let config = EvolutionConfig {
        steps,
        trace_samples: 401,
        ..EvolutionConfig::default()
    };
    let result = evolve(&schedule, &config)?;

    let population = |t: f64, psi: &crate::model::QubitState, sign: f64| {
        let v = invariant_eigenstate(&plan.angles(t), sign);
        let amp = v[0].conj() * psi.c0 + v[1].conj() * psi.cphi;
        amp.norm_sqr() / psi.norm_sqr()
    };
    let (t0, psi0) = result.state_trace[0];
    let sign = if population(t0, &psi0, -1.0) >= 0.5 {
        -1.0
    } else {
        1.0
    };
    let invariant_population = result
        .state_trace
        .iter()
        .map(|(t, psi)| (*t, population(*t, psi, sign)))
        .collect();
    Ok(InverseEvolution {
        min_adiabatic_overlap: result.min_adiabatic_overlap(),
        invariant_population,
        result,
    })
}
