//! Effective two-level representation of the Grover Hamiltonian.
//!
//! The driver `A(t) (1 - |+><+|)` and problem `B(t) (1 - |0><0|)` terms only
//! ever act nontrivially on the plane spanned by the marked state `|0>` and the
//! uniform superposition of unmarked states `|phi>`. In that basis the
//! Hamiltonian is `E0 I + (gap / 2) n . sigma` with `n = (-sin theta, 0, cos theta)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gaps at or below this value are treated as degenerate.
pub const GAP_FLOOR: f64 = 1e-15;

/// Number of search states `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProblemSize(u64);

impl ProblemSize {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidProblemSize(n));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// `2 sqrt(N - 1) / N`, the prefactor shared by `tan theta` and `dtheta/dt`.
    pub fn mixing_factor(self) -> f64 {
        let n = self.as_f64();
        2.0 * (n - 1.0).sqrt() / n
    }

    /// Mixing angle of the initial Hamiltonian (`B = 0`), in `(0, pi/2]`.
    pub fn initial_angle(self) -> f64 {
        let n = self.as_f64();
        self.mixing_factor().atan2((n - 2.0) / n)
    }
}

impl std::fmt::Display for ProblemSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Schedule coefficients and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePoint {
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
}

impl SchedulePoint {
    pub fn new(a: f64, b: f64, da: f64, db: f64) -> Self {
        Self { a, b, da, db }
    }

    /// Both coefficients nonnegative and not simultaneously zero.
    pub fn is_admissible(&self) -> bool {
        self.a >= 0.0 && self.b >= 0.0 && (self.a > 0.0 || self.b > 0.0)
    }
}

/// Instantaneous two-level decomposition `E0 I + (gap/2) n . sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub e0: f64,
    pub gap: f64,
    pub theta: f64,
    pub dtheta: f64,
}

impl EffectiveHamiltonian {
    /// Unit axis `n = (-sin theta, 0, cos theta)`.
    pub fn axis(&self) -> [f64; 3] {
        [-self.theta.sin(), 0.0, self.theta.cos()]
    }

    /// Time derivative of the axis.
    pub fn axis_rate(&self) -> [f64; 3] {
        [
            -self.dtheta * self.theta.cos(),
            0.0,
            -self.dtheta * self.theta.sin(),
        ]
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.e0 - 0.5 * self.gap, self.e0 + 0.5 * self.gap)
    }
}

/// Normalized state in the `{|0>, |phi>}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub c0: Complex64,
    pub cphi: Complex64,
}

impl QubitState {
    pub fn new(c0: Complex64, cphi: Complex64) -> Self {
        Self { c0, cphi }
    }

    pub fn real(c0: f64, cphi: f64) -> Self {
        Self::new(Complex64::new(c0, 0.0), Complex64::new(cphi, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.cphi.norm_sqr()
    }

    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.c0.conj() * other.c0 + self.cphi.conj() * other.cphi
    }

    /// `|<self|other>|^2` normalized by both norms.
    pub fn overlap(&self, other: &QubitState) -> f64 {
        let denom = self.norm_sqr() * other.norm_sqr();
        (self.inner(other).norm_sqr() / denom).min(1.0)
    }

    /// Probability of the marked state `|0>`.
    pub fn marked_probability(&self) -> f64 {
        (self.c0.norm_sqr() / self.norm_sqr()).min(1.0)
    }
}

/// Gap `sqrt((A - B)^2 + 4AB/N)`.
pub fn gap(n: ProblemSize, a: f64, b: f64) -> f64 {
    let nf = n.as_f64();
    ((a - b) * (a - b) + 4.0 * a * b / nf).max(0.0).sqrt()
}

/// Two-level decomposition of the Grover Hamiltonian at one schedule point.
///
/// `theta` comes from a two-argument arctangent whose first argument is
/// `2 sqrt(N-1) A / N`, so it stays in `[0, pi]` for `A >= 0` and moves
/// continuously through the avoided crossing.
pub fn build_effective(n: ProblemSize, p: &SchedulePoint) -> Result<EffectiveHamiltonian> {
    let nf = n.as_f64();
    let gap = gap(n, p.a, p.b);
    if !(gap > GAP_FLOOR) {
        return Err(Error::DegenerateGap {
            gap,
            floor: GAP_FLOOR,
        });
    }
    let c = n.mixing_factor();
    let theta = (c * p.a).atan2((1.0 - 2.0 / nf) * p.a - p.b);
    let dtheta = c * (p.a * p.db - p.b * p.da) / (gap * gap);
    Ok(EffectiveHamiltonian {
        e0: 0.5 * (p.a + p.b),
        gap,
        theta,
        dtheta,
    })
}

/// The uniform superposition `|+>` expressed in the `{|0>, |phi>}` basis.
pub fn initial_ground_state(n: ProblemSize) -> QubitState {
    let nf = n.as_f64();
    QubitState::real(nf.recip().sqrt(), ((nf - 1.0) / nf).sqrt())
}

/// Lower eigenvector `(sin(theta/2), cos(theta/2))`, with `c0` real and nonnegative.
pub fn ground_state_of(h: &EffectiveHamiltonian) -> Result<QubitState> {
    if !(h.gap > GAP_FLOOR) {
        return Err(Error::DegenerateGap {
            gap: h.gap,
            floor: GAP_FLOOR,
        });
    }
    let (s, c) = (0.5 * h.theta).sin_cos();
    // For theta in [0, pi] both components are already nonnegative.
    let sign = if s < 0.0 { -1.0 } else { 1.0 };
    Ok(QubitState::real(sign * s, sign * c))
}
