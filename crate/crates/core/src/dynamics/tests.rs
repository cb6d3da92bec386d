use std::sync::Arc;

use super::*;
use crate::fields::{total_mass, total_momentum, DomainKind, Grid, ScalarField, State};
use crate::nonlocal::{ConvolutionMethod, ConvolutionPlan};
use crate::potentials::{AlignmentKernel, ConfinementSpec, KernelSpec};

fn plan(grid: &Arc<Grid<f64>>, p: &ModelParams<f64>) -> ConvolutionPlan<f64> {
    let psi = match &p.damping {
        Damping::Alignment(psi) => *psi,
        _ => AlignmentKernel::Zero,
    };
    ConvolutionPlan::new(grid, &p.kernel, &psi, ConvolutionMethod::Spectral).unwrap()
}

fn blob(grid: &Arc<Grid<f64>>, centre: f64) -> ScalarField<f64> {
    ScalarField::from_fn(grid, |x| (-(x[0] - centre).powi(2) * 2.0).exp())
}

#[test]
fn stable_dt_examples() {
    let g = Grid::line(64, 2.0).unwrap();
    let p = ModelParams::standard();
    let pl = plan(&g, &p);
    let ctl = StepControl { cfl: 0.5, dt_max: 1.0, dt_min: 1e-12 };
    let it = Integrator::new(&p, &pl, ctl).unwrap();
    let s = State::at_rest(0.0, ScalarField::from_fn(&g, |_| 1.0)).unwrap();
    let dt = it.stable_dt(&s).unwrap();
    assert!((dt.dt - 0.5 * g.h(0) / 2f64.sqrt()).abs() < 1e-15);
    assert!(!dt.floored);

    let vac = State::at_rest(0.0, ScalarField::zeros(&g)).unwrap();
    assert_eq!(it.stable_dt(&vac).unwrap().dt, 1.0);

    let g2 = Grid::line(128, 2.0).unwrap();
    let pl2 = plan(&g2, &p);
    let it2 = Integrator::new(&p, &pl2, ctl).unwrap();
    let s2 = State::at_rest(0.0, ScalarField::from_fn(&g2, |_| 1.0)).unwrap();
    assert!((it2.stable_dt(&s2).unwrap().dt * 2.0 - dt.dt).abs() < 1e-15);

    let tight = StepControl { cfl: 0.5, dt_max: 1.0, dt_min: 0.5 };
    let it3 = Integrator::new(&p, &pl, tight).unwrap();
    let c = it3.stable_dt(&s).unwrap();
    assert!(c.floored && c.dt == 0.5);
}

#[test]
fn uniform_rest_state_is_unchanged() {
    let g = Grid::line(32, 1.0).unwrap();
    let p = ModelParams::standard();
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let s = State::at_rest(0.0, ScalarField::from_fn(&g, |_| 0.8)).unwrap();
    let (next, report) = it.step(&s, 0.01).unwrap();
    assert_eq!(next.rho.values(), s.rho.values());
    assert!(next.mom.max_abs() == 0.0);
    assert!(report.dt > 0.0);
}

#[test]
fn ball_mode_conserves_mass() {
    let g = Grid::new(1, 128, 3.0, DomainKind::Ball { radius: 2.5 }).unwrap();
    let p = ModelParams {
        kernel: KernelSpec::gaussian_attractive(1.0),
        eps: 1e-3,
        ..ModelParams::standard()
    };
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let mut s = State::with_velocity(0.0, blob(&g, 0.5), |x| [x[0].sin(), 0.0]).unwrap();
    let m0 = total_mass(&s);
    for _ in 0..200 {
        let dt = it.stable_dt(&s).unwrap().dt;
        s = it.step(&s, dt).unwrap().0;
    }
    assert!(((total_mass(&s) - m0) / m0).abs() < 1e-13);
}

#[test]
fn alignment_conserves_momentum() {
    let g = Grid::line(256, 10.0).unwrap();
    let p = ModelParams {
        damping: Damping::Alignment(AlignmentKernel::Gaussian { strength: 1.0, length: 1.0 }),
        kernel: KernelSpec::gaussian_attractive(0.5),
        ..ModelParams::standard()
    };
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let mut s = State::with_velocity(0.0, blob(&g, 0.0), |x| [0.3 + 0.2 * x[0], 0.0]).unwrap();
    let p0 = total_momentum(&s)[0];
    for _ in 0..200 {
        let dt = it.stable_dt(&s).unwrap().dt;
        s = it.step(&s, dt).unwrap().0;
    }
    assert!((total_momentum(&s)[0] - p0).abs() < 1e-12);
}

#[test]
fn linear_damping_decays_momentum() {
    let g = Grid::line(128, 6.0).unwrap();
    let p = ModelParams::standard();
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl { cfl: 0.4, dt_max: 1e-3, dt_min: 1e-12 }).unwrap();
    let s = State::with_velocity(0.0, blob(&g, 0.0), |_| [0.2, 0.0]).unwrap();
    let p0 = total_momentum(&s)[0];
    let traj = it.run(&s, 1.0, &RunOptions::default()).unwrap();
    let p1 = total_momentum(&traj.final_state)[0];
    assert!((p1 - p0 * (-1f64).exp()).abs() < 1e-3 * p0);
}

#[test]
fn vacuum_cells_carry_no_momentum() {
    let g = Grid::line(64, 4.0).unwrap();
    let p = ModelParams::standard();
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let rho = ScalarField::from_fn(&g, |x| (1.0 - x[0] * x[0]).max(0.0));
    let mut s = State::with_velocity(0.0, rho, |_| [0.5, 0.0]).unwrap();
    for _ in 0..20 {
        let dt = it.stable_dt(&s).unwrap().dt;
        s = it.step(&s, dt).unwrap().0;
        let floor = vacuum_floor(&s);
        for (r, m) in s.rho.values().iter().zip(s.mom.values()) {
            if *r <= floor {
                assert_eq!(m[0], 0.0);
            }
        }
    }
}

#[test]
fn empty_run_and_output_times() {
    let g = Grid::line(64, 4.0).unwrap();
    let p = ModelParams {
        confinement: ConfinementSpec::quadratic(1.0),
        ..ModelParams::standard()
    };
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let s = State::at_rest(0.0, blob(&g, 0.5)).unwrap();
    let empty = it.run(&s, 0.0, &RunOptions::default()).unwrap();
    assert!(empty.is_empty() && empty.ledger.is_empty() && empty.snapshots.is_empty());
    assert!(it.run(&s, -1.0, &RunOptions::default()).is_err());

    let opts = RunOptions {
        ledger_every: Some(0.1),
        snapshot_every: Some(0.25),
        ..RunOptions::default()
    };
    let traj = it.run(&s, 1.0, &opts).unwrap();
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
    assert_eq!(times.len(), 5);
    for (k, t) in times.iter().enumerate() {
        assert!((t - 0.25 * k as f64).abs() < 1e-12);
    }
    assert_eq!(traj.ledger.len(), 11);
}

#[test]
fn two_dimensional_smoke() {
    let g = Grid::square(24, 3.0).unwrap();
    let p = ModelParams {
        kernel: KernelSpec::gaussian_attractive(1.0),
        confinement: ConfinementSpec::quadratic(1.0),
        lambda: 0.5,
        ..ModelParams::standard()
    };
    let pl = plan(&g, &p);
    let it = Integrator::new(&p, &pl, StepControl::default()).unwrap();
    let rho = ScalarField::from_fn(&g, |x| (-(x[0] - 0.5).powi(2) - x[1] * x[1]).exp());
    let s = State::with_velocity(0.0, rho, |x| [-x[1], x[0]]).unwrap();
    let m0 = total_mass(&s);
    let traj = it.run(&s, 0.5, &RunOptions::default()).unwrap();
    assert!(((total_mass(&traj.final_state) - m0) / m0).abs() < 1e-12);
    let rows = traj.ledger.rows();
    assert!(rows.last().unwrap().energy.total() < rows[0].energy.total());
    assert!(traj.final_state.rho.min() >= 0.0);
}
