//! Fixed-step RK4 integration of `i d/dt psi = H(t) psi`.
//!
//! Two representations are available: the effective two-level model in the
//! `{|0>, |phi>}` basis, and the dense `N x N` Grover Hamiltonian in the
//! computational basis. The dense one is an independent check on the
//! two-level reduction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::counterdiabatic::cd_coefficient;
use crate::error::{Error, Result};
use crate::model::{
    build_effective, ground_state_of, initial_ground_state, EffectiveHamiltonian, ProblemSize,
    QubitState, SchedulePoint,
};
use crate::schedules::{sample_times, Family, Schedule, ScheduleFn, ScheduleSpec};

pub const MIN_STEPS: usize = 100;
pub const DEFAULT_MIN_STEPS: usize = 2000;
/// Largest `N` accepted by the dense representation.
pub const MAX_FULL_DIMENSION: u64 = 4096;
/// `max(gap, |dtheta/dt|) * dt` must stay below this.
pub const RESOLUTION_LIMIT: f64 = 0.1;
/// Default step density: steps per unit of `t_f * max |eigenvalue|`.
const STEPS_PER_PHASE: f64 = 120.0;
const GUARD_SAMPLES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    TwoLevel,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    /// `None` picks a step count from the schedule's spectrum.
    pub steps: Option<usize>,
    pub with_cd: bool,
    pub representation: Representation,
    /// Constant added to `E0`; only moves the global phase.
    pub energy_offset: f64,
    /// Number of trace points recorded along the run (endpoints included).
    pub trace_samples: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            steps: None,
            with_cd: false,
            representation: Representation::TwoLevel,
            energy_offset: 0.0,
            trace_samples: 201,
        }
    }
}

impl EvolutionConfig {
    pub fn with_cd(mut self, on: bool) -> Self {
        self.with_cd = on;
        self
    }

    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn representation(mut self, r: Representation) -> Self {
        self.representation = r;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    TwoLevel(QubitState),
    Full(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: FinalState,
    /// `|<0|psi(t_f)>|^2 / ||psi(t_f)||^2`.
    pub fidelity: f64,
    /// `|1 - ||psi(t_f)||^2|`.
    pub norm_drift: f64,
    pub steps: usize,
    /// Sampled `(t, |<gs(t)|psi(t)>|^2)`.
    pub adiabatic_overlap_trace: Vec<(f64, f64)>,
    /// Sampled states projected onto the `{|0>, |phi>}` plane.
    pub state_trace: Vec<(f64, QubitState)>,
}

impl EvolutionResult {
    pub fn min_adiabatic_overlap(&self) -> f64 {
        self.adiabatic_overlap_trace
            .iter()
            .map(|&(_, o)| o)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Step count used when [`EvolutionConfig::steps`] is `None`:
/// `max(2000, 120 t_f L, 20 t_f R, 10 t_f V)` where `L` bounds the
/// Hamiltonian's eigenvalue magnitude, `R = max(gap, |dtheta/dt|)` and
/// `V = |d gap/dt| / gap`, all sampled.
pub fn default_steps<S: ScheduleFn + ?Sized>(
    schedule: &S,
    config: &EvolutionConfig,
) -> Result<usize> {
    let n = schedule.problem_size();
    let t_f = schedule.t_f();
    let mut spectral: f64 = 0.0;
    let mut rate: f64 = 0.0;
    let mut variation: f64 = 0.0;
    let nf = n.as_f64();
    for t in sample_times(t_f, GUARD_SAMPLES) {
        let p = schedule.point(t)?;
        let h = build_effective(n, &p)?;
        let dgap = ((p.a - p.b) * (p.da - p.db) + 2.0 / nf * (p.da * p.b + p.a * p.db)) / h.gap;
        variation = variation.max((dgap / h.gap).abs());
        let split = if config.with_cd {
            h.gap.hypot(h.dtheta)
        } else {
            h.gap
        };
        spectral = spectral.max((h.e0 + config.energy_offset).abs() + 0.5 * split);
        rate = rate.max(h.gap.max(h.dtheta.abs()));
    }
    let by_phase = (STEPS_PER_PHASE * t_f * spectral).ceil();
    let by_guard = (2.0 * t_f * rate / RESOLUTION_LIMIT).ceil();
    let by_variation = (10.0 * t_f * variation).ceil();
    Ok(DEFAULT_MIN_STEPS.max(by_phase.max(by_guard).max(by_variation) as usize))
}

trait Model {
    type Ham;
    fn dim(&self) -> usize;
    fn initial(&self) -> Vec<Complex64>;
    fn hamiltonian(&self, p: &SchedulePoint, eff: &EffectiveHamiltonian, cd: f64) -> Self::Ham;
    /// `out = -i H psi`
    fn apply(&self, h: &Self::Ham, psi: &[Complex64], out: &mut [Complex64]);
    fn project(&self, psi: &[Complex64]) -> QubitState;
}

struct TwoLevel {
    n: ProblemSize,
    offset: f64,
}

impl Model for TwoLevel {
    type Ham = [[Complex64; 2]; 2];

    fn dim(&self) -> usize {
        2
    }

    fn initial(&self) -> Vec<Complex64> {
        let s = initial_ground_state(self.n);
        vec![s.c0, s.cphi]
    }

    fn hamiltonian(&self, _p: &SchedulePoint, eff: &EffectiveHamiltonian, cd: f64) -> Self::Ham {
        let half = 0.5 * eff.gap;
        let [nx, _, nz] = eff.axis();
        let e0 = eff.e0 + self.offset;
        let off = Complex64::new(half * nx, cd);
        [
            [Complex64::new(e0 + half * nz, 0.0), off],
            [off.conj(), Complex64::new(e0 - half * nz, 0.0)],
        ]
    }

    fn apply(&self, h: &Self::Ham, psi: &[Complex64], out: &mut [Complex64]) {
        let minus_i = Complex64::new(0.0, -1.0);
        out[0] = minus_i * (h[0][0] * psi[0] + h[0][1] * psi[1]);
        out[1] = minus_i * (h[1][0] * psi[0] + h[1][1] * psi[1]);
    }

    fn project(&self, psi: &[Complex64]) -> QubitState {
        QubitState::new(psi[0], psi[1])
    }
}

/// Dense Grover Hamiltonian `A (1 - |+><+|) + B (1 - |0><0|)` on `N` states.
struct Full {
    n: ProblemSize,
    offset: f64,
}

struct DenseHam {
    matrix: Vec<f64>,
    cd: f64,
}

impl Model for Full {
    type Ham = DenseHam;

    fn dim(&self) -> usize {
        self.n.get() as usize
    }

    fn initial(&self) -> Vec<Complex64> {
        let amp = Complex64::new((self.n.as_f64()).recip().sqrt(), 0.0);
        vec![amp; self.dim()]
    }

    fn hamiltonian(&self, p: &SchedulePoint, _eff: &EffectiveHamiltonian, cd: f64) -> DenseHam {
        let nf = self.n.as_f64();
        let dim = self.dim();
        let (a, b) = (p.a, p.b);
        let mut matrix = vec![-a / nf; dim * dim];
        for i in 0..dim {
            let diag = a + if i == 0 { 0.0 } else { b } + self.offset;
            matrix[i * dim + i] += diag;
        }
        DenseHam { matrix, cd }
    }

    fn apply(&self, h: &DenseHam, psi: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim();
        let minus_i = Complex64::new(0.0, -1.0);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &h.matrix[i * dim..(i + 1) * dim];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, p) in row.iter().zip(psi) {
                acc += p * *m;
            }
            *o = acc;
        }
        if h.cd != 0.0 {
            // (i cd)(|0><phi| - |phi><0|) on the {|0>, |phi>} block.
            let inv_root = (self.n.as_f64() - 1.0).sqrt().recip();
            let phi_amp: Complex64 = psi[1..].iter().sum::<Complex64>() * inv_root;
            let i_cd = Complex64::new(0.0, h.cd);
            out[0] += i_cd * phi_amp;
            let back = -i_cd * psi[0] * inv_root;
            for o in &mut out[1..] {
                *o += back;
            }
        }
        for o in out.iter_mut() {
            *o *= minus_i;
        }
    }

    fn project(&self, psi: &[Complex64]) -> QubitState {
        let inv_root = (self.n.as_f64() - 1.0).sqrt().recip();
        QubitState::new(psi[0], psi[1..].iter().sum::<Complex64>() * inv_root)
    }
}

fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

fn run<S, M>(
    schedule: &S,
    config: &EvolutionConfig,
    model: &M,
    steps: usize,
) -> Result<EvolutionResult>
where
    S: ScheduleFn + ?Sized,
    M: Model,
{
    let n = schedule.problem_size();
    let t_f = schedule.t_f();
    let h = t_f / steps as f64;
    let time = |k: usize| {
        if k == steps {
            t_f
        } else {
            t_f * k as f64 / steps as f64
        }
    };

    let evaluate = |t: f64| -> Result<(M::Ham, EffectiveHamiltonian)> {
        let p = schedule.point(t)?;
        let eff = build_effective(n, &p)?;
        let cd = if config.with_cd {
            cd_coefficient(n, &p)?.coeff
        } else {
            0.0
        };
        Ok((model.hamiltonian(&p, &eff, cd), eff))
    };

    let trace_every: Vec<usize> = {
        let m = config.trace_samples.max(2) - 1;
        let mut v: Vec<usize> = (0..=m).map(|j| (j * steps + m / 2) / m).collect();
        v.dedup();
        v
    };
    let mut next_trace = 0;
    let mut overlap_trace = Vec::with_capacity(trace_every.len());
    let mut state_trace = Vec::with_capacity(trace_every.len());

    let dim = model.dim();
    let mut psi = model.initial();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
    );
    let mut tmp = vec![zero; dim];

    let (mut h_now, mut eff_now) = evaluate(0.0)?;
    for k in 0..=steps {
        let t = time(k);
        let product = eff_now.gap.max(eff_now.dtheta.abs()) * h;
        if product >= RESOLUTION_LIMIT {
            return Err(Error::Resolution { t, product });
        }
        if next_trace < trace_every.len() && trace_every[next_trace] == k {
            let proj = model.project(&psi);
            let gs = ground_state_of(&eff_now)?;
            let overlap = (gs.inner(&proj).norm_sqr() / norm_sqr(&psi)).min(1.0);
            overlap_trace.push((t, overlap));
            state_trace.push((t, proj));
            next_trace += 1;
        }
        if k == steps {
            break;
        }

        let (h_mid, _) = evaluate(t + 0.5 * h)?;
        let (h_end, eff_end) = evaluate(time(k + 1))?;

        model.apply(&h_now, &psi, &mut k1);
        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * (0.5 * h);
        }
        model.apply(&h_mid, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * (0.5 * h);
        }
        model.apply(&h_mid, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * h;
        }
        model.apply(&h_end, &tmp, &mut k4);
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }

        h_now = h_end;
        eff_now = eff_end;
    }

    let norm = norm_sqr(&psi);
    let fidelity = (psi[0].norm_sqr() / norm).min(1.0);
    let final_state = if dim == 2 && matches!(config.representation, Representation::TwoLevel) {
        FinalState::TwoLevel(QubitState::new(psi[0], psi[1]))
    } else {
        FinalState::Full(psi)
    };
    Ok(EvolutionResult {
        final_state,
        fidelity,
        norm_drift: (1.0 - norm).abs(),
        steps,
        adiabatic_overlap_trace: overlap_trace,
        state_trace,
    })
}

/// Integrates the Schrodinger equation from `|+>` over `[0, t_f]`.
pub fn evolve<S: ScheduleFn + ?Sized>(
    schedule: &S,
    config: &EvolutionConfig,
) -> Result<EvolutionResult> {
    let steps = match config.steps {
        Some(s) if s < MIN_STEPS => {
            return Err(Error::Config(format!(
                "at least {MIN_STEPS} steps required, got {s}"
            )))
        }
        Some(s) => s,
        None => default_steps(schedule, config)?,
    };
    let n = schedule.problem_size();
    match config.representation {
        Representation::TwoLevel => run(
            schedule,
            config,
            &TwoLevel {
                n,
                offset: config.energy_offset,
            },
            steps,
        ),
        Representation::Full => {
            if n.get() > MAX_FULL_DIMENSION {
                return Err(Error::Config(format!(
                    "dense evolution is limited to N <= {MAX_FULL_DIMENSION}, got {n}"
                )));
            }
            run(
                schedule,
                config,
                &Full {
                    n,
                    offset: config.energy_offset,
                },
                steps,
            )
        }
    }
}

/// `|F_two_level - F_full|` at a shared step count.
pub fn oracle_compare<S: ScheduleFn + ?Sized>(schedule: &S, steps: Option<usize>) -> Result<f64> {
    if schedule.problem_size().get() > MAX_FULL_DIMENSION {
        return Err(Error::Config(format!(
            "oracle comparison is limited to N <= {MAX_FULL_DIMENSION}"
        )));
    }
    let base = EvolutionConfig {
        trace_samples: 2,
        ..EvolutionConfig::default()
    };
    let steps = match steps {
        Some(s) => s,
        None => default_steps(schedule, &base)?,
    };
    let two = evolve(schedule, &base.steps(steps))?;
    let full = evolve(
        schedule,
        &base.steps(steps).representation(Representation::Full),
    )?;
    Ok((two.fidelity - full.fidelity).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub t_f: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub family: Family,
    pub n: ProblemSize,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// Smallest grid run time whose fidelity reaches `threshold`.
    pub fn first_reaching(&self, threshold: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.fidelity >= threshold)
            .map(|r| r.t_f)
    }
}

/// Final fidelity of a family across a grid of run times. Grid points run in
/// parallel; rows keep grid order.
pub fn scan_tf(
    family: Family,
    n: ProblemSize,
    grid: &[f64],
    config: &EvolutionConfig,
) -> Result<ScanResult> {
    if grid.is_empty() {
        return Err(Error::Config("run-time grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(
            "run-time grid must be strictly increasing".into(),
        ));
    }
    let config = EvolutionConfig {
        trace_samples: 2,
        ..*config
    };
    let rows = grid
        .par_iter()
        .map(|&t_f| {
            let schedule = Schedule::build(&ScheduleSpec::new(family, n, t_f)?)?;
            let result = evolve(&schedule, &config)?;
            Ok(ScanRow {
                t_f,
                fidelity: result.fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { family, n, rows })
}

/// `points` logarithmically spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::Config(format!(
            "log grid needs 0 < min <= max, got [{min}, {max}]"
        )));
    }
    if points == 0 {
        return Err(Error::Config("log grid needs at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    let m = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            if k == 0 {
                min
            } else if k == points - 1 {
                max
            } else {
                (lo + (hi - lo) * k as f64 / m).exp()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn schedule(family: Family, n: u64, t_f: f64) -> Schedule {
        Schedule::build(&ScheduleSpec::new(family, ProblemSize::new(n).unwrap(), t_f).unwrap())
            .unwrap()
    }

    #[test]
    fn sudden_limit_keeps_initial_state() {
        let s = schedule(Family::LinearNaive, 4, 1e-6);
        let r = evolve(&s, &EvolutionConfig::default()).unwrap();
        assert_abs_diff_eq!(r.fidelity, 0.25, epsilon = 1e-4);
    }

    #[test]
    fn slow_n2_sweep_is_adiabatic() {
        let f50 = evolve(
            &schedule(Family::LinearNaive, 2, 50.0),
            &EvolutionConfig::default(),
        )
        .unwrap()
        .fidelity;
        let f100 = evolve(
            &schedule(Family::LinearNaive, 2, 100.0),
            &EvolutionConfig::default(),
        )
        .unwrap()
        .fidelity;
        assert!(f50 >= 0.999, "{f50}");
        assert!(f100 >= f50);
    }

    #[test]
    fn counterdiabatic_run_is_exact() {
        for family in [Family::LinearNaive, Family::CdQuadratic] {
            for n in [2, 16, 256] {
                for t_f in [0.1, 1.0, 10.0] {
                    let r = evolve(
                        &schedule(family, n, t_f),
                        &EvolutionConfig::default().with_cd(true),
                    )
                    .unwrap();
                    assert!(
                        r.fidelity >= 1.0 - 1e-6,
                        "{family} n={n} t_f={t_f} {}",
                        r.fidelity
                    );
                    assert!(r.min_adiabatic_overlap() >= 1.0 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn too_few_steps_rejected() {
        let s = schedule(Family::QabLinear, 4, 1.0);
        assert!(matches!(
            evolve(&s, &EvolutionConfig::default().steps(50)),
            Err(Error::Config(_))
        ));
        let s = schedule(Family::LinearNaive, 4, 200.0);
        assert!(matches!(
            evolve(&s, &EvolutionConfig::default().steps(150)),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn dense_limit_enforced() {
        let s = schedule(Family::LinearNaive, MAX_FULL_DIMENSION + 1, 1.0);
        assert!(oracle_compare(&s, Some(200)).is_err());
    }

    #[test]
    fn n2_representations_coincide() {
        for family in [Family::LinearNaive, Family::CdLinear] {
            let d = oracle_compare(&schedule(family, 2, 3.0), None).unwrap();
            assert!(d < 1e-10, "{d}");
        }
    }

    #[test]
    fn full_representation_with_cd() {
        let s = schedule(Family::QabLinear, 8, 0.5);
        let cfg = EvolutionConfig::default().with_cd(true).steps(4000);
        let two = evolve(&s, &cfg).unwrap();
        let full = evolve(&s, &cfg.representation(Representation::Full)).unwrap();
        assert!((two.fidelity - full.fidelity).abs() < 1e-10);
        assert!(full.fidelity > 1.0 - 1e-6);
        match full.final_state {
            FinalState::Full(v) => assert_eq!(v.len(), 8),
            _ => panic!("expected dense state"),
        }
    }

    #[test]
    fn global_phase_invariance() {
        let s = schedule(Family::QabLinear, 16, 4.0);
        let base = evolve(&s, &EvolutionConfig::default().steps(20_000)).unwrap();
        let shifted = evolve(
            &s,
            &EvolutionConfig {
                energy_offset: 0.75,
                ..EvolutionConfig::default().steps(20_000)
            },
        )
        .unwrap();
        assert!((base.fidelity - shifted.fidelity).abs() < 1e-10);
    }

    #[test]
    fn scan_grid_validation_and_order() {
        let n = ProblemSize::new(8).unwrap();
        assert!(scan_tf(Family::CdLinear, n, &[], &EvolutionConfig::default()).is_err());
        assert!(scan_tf(
            Family::CdLinear,
            n,
            &[2.0, 1.0],
            &EvolutionConfig::default()
        )
        .is_err());
        let grid = log_grid(0.5, 40.0, 6).unwrap();
        let scan = scan_tf(Family::CdLinear, n, &grid, &EvolutionConfig::default()).unwrap();
        assert_eq!(scan.rows.len(), 6);
        for (row, t) in scan.rows.iter().zip(&grid) {
            assert_eq!(row.t_f, *t);
            assert!((0.0..=1.0).contains(&row.fidelity));
        }
        assert!(scan.rows.last().unwrap().fidelity > scan.rows[0].fidelity);
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1.0, 100.0, 3).unwrap();
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert_eq!(g[2], 100.0);
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 2.0, 0).is_err());
    }
}
