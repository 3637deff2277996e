use std::f64::consts::PI;

use grover_sta::{
    action, build_effective, cd_coefficient, error_functionals, evolve, log_grid, oracle_compare,
    sample_times, scan_tf, EvolutionConfig, Family, Functional, ProblemSize, Result, Schedule,
    ScheduleFn, SchedulePoint, ScheduleSpec,
};
use proptest::prelude::*;

fn size(n: u64) -> ProblemSize {
    ProblemSize::new(n).unwrap()
}

fn build(family: Family, n: u64, t_f: f64) -> Schedule {
    Schedule::build(&ScheduleSpec::new(family, size(n), t_f).unwrap()).unwrap()
}

/// Adds `eps sin(pi tau)` to the path parameter of an optimized schedule:
/// `s = B` on the linear constraint, `phi` on the quadratic one.
struct Perturbed {
    base: Schedule,
    eps: f64,
}

impl ScheduleFn for Perturbed {
    fn problem_size(&self) -> ProblemSize {
        self.base.problem_size()
    }
    fn t_f(&self) -> f64 {
        self.base.t_f()
    }
    fn point(&self, t: f64) -> Result<SchedulePoint> {
        let p = self.base.point(t)?;
        let t_f = self.t_f();
        let bump = self.eps * (PI * t / t_f).sin();
        let dbump = self.eps * PI / t_f * (PI * t / t_f).cos();
        Ok(match self.base.family().constraint().unwrap() {
            grover_sta::Constraint::Linear => {
                let (s, ds) = (p.b + bump, p.db + dbump);
                SchedulePoint::new(1.0 - s, s, -ds, ds)
            }
            grover_sta::Constraint::Quadratic => {
                let phi = p.b.atan2(p.a) + bump;
                let dphi = p.a * p.db - p.b * p.da + dbump;
                SchedulePoint::new(phi.cos(), phi.sin(), -phi.sin() * dphi, phi.cos() * dphi)
            }
        })
    }
}

#[test]
fn optimized_schedules_minimize_their_action() {
    for (family, functional) in [
        (Family::QabLinear, Functional::Qab),
        (Family::CdLinear, Functional::Cd),
        (Family::QabQuadratic, Functional::Qab),
        (Family::CdQuadratic, Functional::Cd),
    ] {
        for n in [4u64, 64] {
            let base = build(family, n, 2.0);
            let optimal = action(&base, functional, 8192).unwrap();
            for eps in [-0.05, -0.01, 0.01, 0.05] {
                let perturbed = Perturbed {
                    base: base.clone(),
                    eps,
                };
                let value = action(&perturbed, functional, 8192).unwrap();
                assert!(
                    value > optimal,
                    "{family} n={n} eps={eps}: {value} <= {optimal}"
                );
            }
        }
    }
}

#[test]
fn naive_schedule_is_not_optimal() {
    for n in [4u64, 64] {
        let naive = action(&build(Family::LinearNaive, n, 1.0), Functional::Qab, 4096).unwrap();
        let qab = action(&build(Family::QabLinear, n, 1.0), Functional::Qab, 4096).unwrap();
        let naive_cd = action(&build(Family::LinearNaive, n, 1.0), Functional::Cd, 4096).unwrap();
        let cd = action(&build(Family::CdLinear, n, 1.0), Functional::Cd, 4096).unwrap();
        assert!(qab < naive && cd < naive_cd);
    }
}

#[test]
fn lagrangian_is_conserved_along_geodesics() {
    for (family, functional) in [
        (Family::QabLinear, Functional::Qab),
        (Family::CdLinear, Functional::Cd),
        (Family::QabQuadratic, Functional::Qab),
        (Family::CdQuadratic, Functional::Cd),
    ] {
        for n in [2u64, 16, 256] {
            let s = build(family, n, 3.0);
            let values: Vec<f64> = sample_times(3.0, 1001)
                .map(|t| {
                    functional.pick(&error_functionals(size(n), &s.point(t).unwrap()).unwrap())
                })
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            for v in &values {
                assert!(
                    ((v - mean) / mean).abs() < 1e-6,
                    "{family} n={n}: {v} vs {mean}"
                );
            }
        }
    }
}

#[test]
fn cd_coefficient_matches_angle_derivative() {
    for family in Family::BUILT_IN {
        for n in [2u64, 16, 1024] {
            let t_f = 2.0;
            let s = build(family, n, t_f);
            let theta = |t: f64| {
                build_effective(size(n), &s.point(t).unwrap())
                    .unwrap()
                    .theta
            };
            for t in sample_times(t_f, 21).skip(1).take(19) {
                let h = 1e-5;
                let fd = (theta(t + h) - theta(t - h)) / (2.0 * h);
                let coeff = cd_coefficient(size(n), &s.point(t).unwrap()).unwrap().coeff;
                assert!(
                    (2.0 * coeff - fd).abs() <= 1e-5 * fd.abs().max(1e-3),
                    "{family} n={n} t={t}: {} vs {fd}",
                    2.0 * coeff
                );
            }
        }
    }
}

#[test]
fn oracle_examples() {
    assert!(oracle_compare(&build(Family::QabLinear, 64, 10.0), None).unwrap() < 1e-8);
    assert!(oracle_compare(&build(Family::CdQuadratic, 16, 1.0), None).unwrap() < 1e-8);
    assert!(oracle_compare(&build(Family::LinearNaive, 2, 3.0), None).unwrap() < 1e-10);
}

#[test]
fn naive_needs_longer_runs_than_optimized() {
    let grid = log_grid(1.0, 400.0, 40).unwrap();
    let config = EvolutionConfig::default();
    let naive = scan_tf(Family::LinearNaive, size(64), &grid, &config).unwrap();
    let cd = scan_tf(Family::CdLinear, size(64), &grid, &config).unwrap();
    let t_naive = naive.first_reaching(0.9).unwrap();
    let t_cd = cd.first_reaching(0.9).unwrap();
    assert!(t_naive > 3.0 * t_cd, "{t_naive} vs {t_cd}");
}

#[test]
fn scans_approach_the_adiabatic_limit() {
    let grid = log_grid(0.5, 200.0, 12).unwrap();
    for family in Family::BUILT_IN {
        let scan = scan_tf(family, size(8), &grid, &EvolutionConfig::default()).unwrap();
        let first = scan.rows.first().unwrap().fidelity;
        let last = scan.rows.last().unwrap().fidelity;
        assert!(last > first && last > 0.99, "{family}: {first} -> {last}");
        assert!(scan.rows.iter().all(|r| (0.0..=1.0).contains(&r.fidelity)));
    }
}

#[test]
fn adiabatic_limit_n2() {
    let f50 = evolve(
        &build(Family::LinearNaive, 2, 50.0),
        &EvolutionConfig::default(),
    )
    .unwrap();
    let f100 = evolve(
        &build(Family::LinearNaive, 2, 100.0),
        &EvolutionConfig::default(),
    )
    .unwrap();
    assert!(f50.fidelity >= 0.999);
    assert!(1.0 - f100.fidelity < 1.0 - f50.fidelity);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_offset_moves_only_the_phase(
        family_idx in 0usize..5,
        n in 2u64..300,
        t_f in 0.5f64..20.0,
        offset in -3.0f64..3.0,
    ) {
        let s = build(Family::BUILT_IN[family_idx], n, t_f);
        let config = EvolutionConfig::default().steps(40_000);
        let plain = evolve(&s, &config).unwrap();
        let shifted = evolve(&s, &EvolutionConfig { energy_offset: offset, ..config }).unwrap();
        prop_assert!((plain.fidelity - shifted.fidelity).abs() < 1e-10);
    }

    #[test]
    fn cd_tracks_the_ground_state(
        family_idx in 0usize..5,
        n in 2u64..1024,
        t_f in 0.1f64..10.0,
    ) {
        let s = build(Family::BUILT_IN[family_idx], n, t_f);
        let run = evolve(&s, &EvolutionConfig::default().with_cd(true)).unwrap();
        prop_assert!(run.min_adiabatic_overlap() >= 1.0 - 1e-6);
        prop_assert!(run.fidelity >= 1.0 - 1e-6);
    }
}
