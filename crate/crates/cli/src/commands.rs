use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use swarmhydro::dynamics::{Damping, Integrator, RunStatus, Trajectory};
use swarmhydro::energy::{
    energy_inequality_check, renormalized_residual, tail_mass_bound, AffineRenormalization, EnergyLedger,
    SmoothCapSquare, TestBasis, LEDGER_COLUMNS,
};
use swarmhydro::fields::{first_moment, lp_norm, total_mass, total_momentum, Grid, ScalarField, State};
use swarmhydro::nonlocal::ConvolutionPlan;
use swarmhydro::potentials::{check_hypotheses, ConfinementKind, ConfinementSpec, Potential, HypothesisOptions, KernelKind, QWindow};
use swarmhydro::snapshot::{write_scalar, write_vector};
use swarmhydro::steady::{
    com_trajectory, solve_fixed_point, solve_gradient_flow, Barenblatt, ComCase, SteadyProblem, SteadySolution,
};

use crate::config::RunConfig;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Ledger CSV with the columns of [`LEDGER_COLUMNS`].
pub fn write_ledger(path: &Path, ledger: &EnergyLedger<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(LEDGER_COLUMNS)?;
    for row in ledger.rows() {
        w.write_record(row.values().iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn write_state(dir: &Path, k: usize, s: &State<f64>) -> Result<()> {
    write_scalar(create(&dir.join(format!("rho_{k:04}.snap")))?, "rho", &s.rho, s.time)?;
    write_vector(create(&dir.join(format!("mom_{k:04}.snap")))?, "mom", &s.mom, s.time)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Norms {
    pub mass: f64,
    pub momentum: [f64; 2],
    pub first_moment: [f64; 2],
    pub l1: f64,
    pub l2: f64,
    pub lm: f64,
    pub max_density: f64,
}

fn norms(s: &State<f64>, m: f64) -> Result<Norms> {
    Ok(Norms {
        mass: total_mass(s),
        momentum: total_momentum(s),
        first_moment: first_moment(s),
        l1: lp_norm(&s.rho, 1.0)?,
        l2: lp_norm(&s.rho, 2.0)?,
        lm: lp_norm(&s.rho, m)?,
        max_density: s.rho.max(),
    })
}

/// Sup distance of the normalized first moment and momentum to the
/// centre-of-mass ODE, when the configuration has one.
#[derive(Clone, Debug, Serialize)]
pub struct ComComparison {
    pub case: String,
    pub sup_error_position: f64,
    pub sup_error_momentum: f64,
}

fn com_case(cfg: &RunConfig) -> Option<ComCase<f64>> {
    let conf = cfg.confinement().ok()?;
    match (&cfg.model_params().ok()?.damping, &conf.kind) {
        (Damping::Linear, ConfinementKind::Quadratic { stiffness }) => Some(ComCase::Quadratic { stiffness: *stiffness }),
        (Damping::Linear, ConfinementKind::Zero) => Some(ComCase::NoConfinement),
        (Damping::Alignment(_), ConfinementKind::Zero) => Some(ComCase::Alignment),
        _ => None,
    }
}

fn compare_com(cfg: &RunConfig, snapshots: &[State<f64>]) -> Result<Option<ComComparison>> {
    let (Some(case), Some(first)) = (com_case(cfg), snapshots.first()) else {
        return Ok(None);
    };
    let m0 = total_mass(first);
    let x0 = first_moment(first).map(|v| v / m0);
    let p0 = total_momentum(first).map(|v| v / m0);
    let (mut ex, mut ep) = (0.0f64, 0.0f64);
    for s in snapshots {
        let (x, p) = com_trajectory(case, x0, p0, s.time - first.time)?;
        let m = total_mass(s);
        let (xs, ps) = (first_moment(s), total_momentum(s));
        for a in 0..s.grid().dim() {
            ex = ex.max((xs[a] / m - x[a]).abs());
            ep = ep.max((ps[a] / m - p[a]).abs());
        }
    }
    Ok(Some(ComComparison {
        case: format!("{case:?}"),
        sup_error_position: ex,
        sup_error_momentum: ep,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub scenario: String,
    pub status: String,
    pub steady_time: Option<f64>,
    pub steps: usize,
    pub floored_steps: usize,
    pub initial_time: f64,
    pub final_time: f64,
    pub ledger_rows: usize,
    pub snapshots: usize,
    pub initial: Norms,
    pub final_state: Norms,
    pub relative_mass_drift: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub max_inequality_residual: f64,
    pub com: Option<ComComparison>,
}

/// A finished simulation kept in memory for the checks built on top of it.
pub struct Simulation {
    pub summary: SimulateSummary,
    pub trajectory: Trajectory<f64>,
    pub ledger: EnergyLedger<f64>,
}

/// Runs the scenario; writes `ledger.csv`, `snapshots/` and `summary.json` when `out` is given.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<Simulation> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let plan = ConvolutionPlan::new(&grid, &params.kernel, &cfg.plan_alignment(), cfg.convolution())
        .context("nonlocal: building the convolution plan")?;
    let it = Integrator::new(&params, &plan, cfg.step_control()).context("dynamics: integrator setup")?;
    let s0 = cfg.initial_state(&grid)?;
    let traj = it
        .run(&s0, s0.time + cfg.run.t_end, &cfg.run_options())
        .context("dynamics: run")?;
    let mut ledger = traj.ledger.clone();
    if ledger.is_empty() {
        ledger.push(it.initial_row(&s0)?)?;
    }
    let e0 = ledger.rows()[0].energy.total();
    let e1 = ledger.last().map_or(e0, |r| r.energy.total());
    let worst = energy_inequality_check(&ledger, 0.0)
        .iter()
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    let snapshots: &[State<f64>] = if traj.snapshots.is_empty() {
        std::slice::from_ref(&s0)
    } else {
        &traj.snapshots
    };
    let (status, steady_time) = match traj.status {
        RunStatus::Completed => ("completed", None),
        RunStatus::SteadyDetected { time } => ("steady-detected", Some(time)),
        RunStatus::StepLimit => ("step-limit", None),
    };
    let initial = norms(&s0, params.m)?;
    let final_state = norms(&traj.final_state, params.m)?;
    let summary = SimulateSummary {
        scenario: cfg.scenario.clone(),
        status: status.into(),
        steady_time,
        steps: traj.steps,
        floored_steps: traj.floored_steps,
        initial_time: s0.time,
        final_time: traj.final_state.time,
        ledger_rows: ledger.len(),
        snapshots: snapshots.len(),
        relative_mass_drift: (final_state.mass - initial.mass).abs() / initial.mass,
        initial,
        final_state,
        energy_initial: e0,
        energy_final: e1,
        max_inequality_residual: worst,
        com: compare_com(cfg, snapshots)?,
    };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        write_ledger(&out.join("ledger.csv"), &ledger)?;
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (k, s) in snapshots.iter().enumerate() {
            write_state(&dir, k, s)?;
        }
        write_json(&out.join("summary.json"), &summary)?;
    }
    Ok(Simulation {
        summary,
        trajectory: traj,
        ledger,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BarenblattComparison {
    pub peak_exact: f64,
    pub peak_error: f64,
    pub level_exact: f64,
    pub l1_error: f64,
    pub support_radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadySummary {
    pub scenario: String,
    pub solver: String,
    pub converged: bool,
    pub iterations: usize,
    pub mass: f64,
    /// Value of `a m/(m-1) ϱ^{m-1} + K∗ϱ + Φ` on the support.
    pub level: f64,
    pub peak_density: f64,
    pub level_residual: f64,
    pub obstacle_residual: f64,
    pub balance_residual: f64,
    pub support_cells: usize,
    pub components: usize,
    pub free_energy: f64,
    pub barenblatt: Option<BarenblattComparison>,
}

pub fn steady_problem(cfg: &RunConfig) -> Result<SteadyProblem<f64>> {
    let grid = cfg.grid()?;
    let mass = if cfg.initial.kind == "from_snapshot" {
        cfg.initial_state(&grid)?.rho.integral()
    } else {
        cfg.initial.mass
    };
    Ok(SteadyProblem {
        kernel: cfg.kernel()?,
        confinement: cfg.confinement()?,
        a: cfg.model.a,
        m: cfg.model.m,
        mass,
        centre: cfg.initial.center,
        grid,
    })
}

pub fn solve_steady(cfg: &RunConfig) -> Result<(SteadyProblem<f64>, SteadySolution<f64>)> {
    let prob = steady_problem(cfg)?;
    let opts = cfg.steady_options();
    let sol = if cfg.steady.solver == "gradient_flow" {
        solve_gradient_flow(&prob, &opts, None).context("steady: gradient flow")?
    } else {
        solve_fixed_point(&prob, &opts).context("steady: fixed point")?
    };
    Ok((prob, sol))
}

fn barenblatt_comparison(prob: &SteadyProblem<f64>, rho: &ScalarField<f64>) -> Result<Option<BarenblattComparison>> {
    let stiffness = match (&prob.kernel.kind, &prob.confinement.kind) {
        (KernelKind::Zero, ConfinementKind::Quadratic { stiffness }) => *stiffness,
        _ => return Ok(None),
    };
    let exact = Barenblatt::with_mass(prob.a, prob.m, stiffness, prob.grid.dim(), prob.mass)?;
    let sample = if prob.centre == [0.0, 0.0] {
        exact.sample(&prob.grid)
    } else {
        let c = prob.centre;
        ScalarField::from_fn(&prob.grid, |x| exact.eval([x[0] - c[0], x[1] - c[1]]))
    };
    Ok(Some(BarenblattComparison {
        peak_exact: exact.peak(),
        peak_error: (rho.max() - exact.peak()).abs(),
        level_exact: exact.level,
        l1_error: rho.l1_distance(&sample)?,
        support_radius: exact.support_radius(),
    }))
}

/// Solves for the stationary density; writes `steady_rho.snap`, `steady.csv`
/// and `summary.json` when `out` is given.
pub fn steady(cfg: &RunConfig, out: Option<&Path>) -> Result<(SteadySummary, SteadySolution<f64>)> {
    let (prob, sol) = solve_steady(cfg)?;
    let bar = barenblatt_comparison(&prob, &sol.rho)?;
    let summary = SteadySummary {
        scenario: cfg.scenario.clone(),
        solver: cfg.steady.solver.clone(),
        converged: sol.converged,
        iterations: sol.iterations,
        mass: sol.rho.integral(),
        level: sol.level,
        peak_density: prob.density_for_level(sol.level),
        level_residual: sol.level_residual,
        obstacle_residual: sol.obstacle_residual,
        balance_residual: sol.balance_residual,
        support_cells: sol.support_cells(),
        components: sol.components,
        free_energy: prob.free_energy(&sol.rho)?,
        barenblatt: bar,
    };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        write_scalar(create(&out.join("steady_rho.snap"))?, "rho", &sol.rho, 0.0)?;
        let mut w = csv::Writer::from_writer(create(&out.join("steady.csv"))?);
        w.write_record(["x", "y", "rho"])?;
        for c in 0..prob.grid.len() {
            let x = prob.grid.center(c);
            w.write_record([x[0], x[1], sol.rho.values()[c]].map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        write_json(&out.join("summary.json"), &summary)?;
    }
    Ok((summary, sol))
}

#[derive(Clone, Debug, Serialize)]
pub struct Window {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl From<&QWindow<f64>> for Window {
    fn from(w: &QWindow<f64>) -> Self {
        Window {
            lower: w.lower,
            upper: w.upper,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisSummary {
    pub theta: f64,
    pub q_window_kernel: Window,
    pub q_window_gradient: Window,
    pub windows_nonempty: bool,
    pub kernel_in_lq: String,
    pub gradient_in_lq: String,
    pub local_gradient: Option<String>,
    pub outer_radius: f64,
    pub hc_ratio_max: Option<f64>,
    pub hc_growth_ok: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergySummary {
    pub rows: usize,
    pub energy_initial: f64,
    pub max_residual: f64,
    pub max_residual_over_e0: f64,
    pub flagged_rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailSummary {
    pub radius: f64,
    pub tail_mass: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RenormalizedSummary {
    pub seed: u64,
    pub affine_residual: f64,
    pub capped_square_residual: f64,
}

/// What `verify` reports; only the requested checks are filled in.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifySummary {
    pub scenario: String,
    pub hypotheses: Option<HypothesisSummary>,
    pub energy: Option<EnergySummary>,
    pub com: Option<ComComparison>,
    pub tail: Option<TailSummary>,
    pub renormalized: Option<RenormalizedSummary>,
    /// Requested checks that could not be evaluated, with the reason.
    pub skipped: Vec<String>,
}

/// Smallest cell radius beyond which `Φ(x) >= |x|^{1+ν}` holds at every cell,
/// or `None` when the outermost cells still violate it.
fn tail_radius(grid: &Grid<f64>, c: &ConfinementSpec<f64>) -> Result<Option<f64>> {
    let power = 1.0 + c.growth_exponent;
    let mut radii = Vec::new();
    let mut last_bad = 0.0f64;
    for cell in 0..grid.len() {
        let r = grid.radius_of(cell);
        if c.value(grid.center(cell))? < r.powf(power) {
            last_bad = last_bad.max(r);
        }
        radii.push(r);
    }
    Ok(radii.into_iter().filter(|&r| r > last_bad).fold(None, |m: Option<f64>, r| {
        Some(m.map_or(r, |m| m.min(r)))
    }))
}

pub const CHECKS: [&str; 5] = ["hypotheses", "energy", "com", "tail", "renormalized"];

pub fn verify(cfg: &RunConfig, checks: &[String], out: Option<&Path>) -> Result<VerifySummary> {
    for c in checks {
        if !CHECKS.contains(&c.as_str()) {
            bail!("verify: unknown check `{c}`; available: {CHECKS:?}");
        }
    }
    let wanted = |name: &str| checks.is_empty() || checks.iter().any(|c| c == name);
    let mut summary = VerifySummary {
        scenario: cfg.scenario.clone(),
        ..VerifySummary::default()
    };
    let grid = cfg.grid()?;
    if wanted("hypotheses") {
        let r = check_hypotheses(
            &cfg.kernel()?,
            &cfg.confinement()?,
            cfg.model.m,
            &grid,
            &HypothesisOptions::default(),
        )
        .context("potentials: hypothesis check")?;
        summary.hypotheses = Some(HypothesisSummary {
            theta: r.theta,
            q_window_kernel: (&r.q_window_kernel).into(),
            q_window_gradient: (&r.q_window_gradient).into(),
            windows_nonempty: r.windows_nonempty(),
            kernel_in_lq: format!("{:?}", r.kernel_in_lq),
            gradient_in_lq: format!("{:?}", r.gradient_in_lq),
            local_gradient: r.local_gradient.as_ref().map(|l| format!("{:?}", l.numeric)),
            outer_radius: r.outer_radius,
            hc_ratio_max: r.hc_ratio_max,
            hc_growth_ok: format!("{:?}", r.hc_growth_ok),
        });
    }
    if wanted("tail") {
        let confinement = cfg.confinement()?;
        match tail_radius(&grid, &confinement)? {
            Some(radius) => {
                let s0 = cfg.initial_state(&grid)?;
                let t = tail_mass_bound(&s0, &confinement, radius).context("energy: tail bound")?;
                summary.tail = Some(TailSummary {
                    radius,
                    tail_mass: t.tail_mass,
                    bound: t.bound,
                    holds: t.holds,
                });
            }
            None => summary.skipped.push(format!(
                "tail: the confinement stays below |x|^{} out to the edge of the grid",
                1.0 + confinement.growth_exponent
            )),
        }
    }
    let dynamic = ["energy", "com", "renormalized"].iter().any(|c| wanted(c));
    if dynamic {
        let mut run_cfg = cfg.clone();
        if wanted("renormalized") && run_cfg.run.snapshot_every.is_none() {
            run_cfg.run.snapshot_every = Some((cfg.run.t_end / 40.0).max(1e-6));
        }
        let sim = simulate(&run_cfg, None)?;
        if wanted("energy") {
            let e0 = sim.summary.energy_initial;
            let flagged = energy_inequality_check(&sim.ledger, 1e-4 * e0.abs())
                .iter()
                .filter(|r| r.flagged)
                .count();
            summary.energy = Some(EnergySummary {
                rows: sim.ledger.len(),
                energy_initial: e0,
                max_residual: sim.summary.max_inequality_residual,
                max_residual_over_e0: sim.summary.max_inequality_residual / e0.abs(),
                flagged_rows: flagged,
            });
        }
        if wanted("com") {
            summary.com = sim.summary.com.clone();
        }
        if wanted("renormalized") {
            let snaps = &sim.trajectory.snapshots;
            if snaps.len() >= 2 {
                let (t0, t1) = (snaps[0].time, snaps[snaps.len() - 1].time);
                let basis = TestBasis::seeded(&grid, t0, t1, cfg.seed);
                let level = 0.5 * snaps[0].rho.max();
                let affine = renormalized_residual(snaps, &AffineRenormalization { slope: 1.0 }, &basis)?;
                let capped = renormalized_residual(snaps, &SmoothCapSquare::new(level, level)?, &basis)?;
                summary.renormalized = Some(RenormalizedSummary {
                    seed: cfg.seed,
                    affine_residual: affine,
                    capped_square_residual: capped,
                });
            }
        }
    }
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        write_json(&out.join("verify.json"), &summary)?;
    }
    Ok(summary)
}

/// One member of a sweep.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum MemberSummary {
    Simulate(SimulateSummary),
    Steady(SteadySummary),
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepMember {
    pub value: f64,
    pub dir: PathBuf,
    /// L¹ distance of the final density to the closed-form profile, when one exists.
    pub closed_form_l1: Option<f64>,
    pub summary: MemberSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairDistance {
    pub a: f64,
    pub b: f64,
    pub l1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub parameter: String,
    pub mode: String,
    pub members: Vec<SweepMember>,
    /// Distances between consecutive values; empty when the grids differ.
    pub successive_l1: Vec<PairDistance>,
    /// All pairs `i < j`; empty when the grids differ.
    pub pairwise_l1: Vec<PairDistance>,
    pub successive_decreasing: Option<bool>,
    pub closed_form_decreasing: Option<bool>,
    pub complete: bool,
    pub failure: Option<String>,
}

fn decreasing(v: &[f64]) -> Option<bool> {
    (v.len() >= 2).then(|| v.windows(2).all(|w| w[1] < w[0]))
}

/// Runs every value on a pool of `workers` threads. A failing member stops
/// members not yet started; the report lists whatever finished.
pub fn sweep(cfg: &RunConfig, parameter: &str, values: &[f64], workers: usize, out: &Path) -> Result<SweepReport> {
    if values.is_empty() {
        bail!("sweep: no values given for `{parameter}`");
    }
    let configs = values
        .iter()
        .map(|&v| cfg.with_parameter(parameter, v))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("sweep: worker pool")?;
    let failed = AtomicBool::new(false);
    let steady_mode = cfg.sweep.mode == "steady";
    let results: Vec<Option<Result<(SweepMember, ScalarField<f64>)>>> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(k, c)| {
                if failed.load(Ordering::SeqCst) {
                    return None;
                }
                let dir = out.join(format!("run_{k:02}"));
                let r = (|| -> Result<(SweepMember, ScalarField<f64>)> {
                    let (summary, rho) = if steady_mode {
                        let (s, sol) = steady(c, Some(&dir))?;
                        (MemberSummary::Steady(s), sol.rho)
                    } else {
                        let sim = simulate(c, Some(&dir))?;
                        (MemberSummary::Simulate(sim.summary), sim.trajectory.final_state.rho)
                    };
                    let prob = steady_problem(c)?;
                    let closed = barenblatt_comparison(&SteadyProblem { mass: rho.integral(), ..prob }, &rho)?
                        .map(|b| b.l1_error);
                    Ok((
                        SweepMember {
                            value: values[k],
                            dir,
                            closed_form_l1: closed,
                            summary,
                        },
                        rho,
                    ))
                })()
                .with_context(|| format!("sweep member {parameter} = {}", values[k]));
                if r.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                Some(r)
            })
            .collect()
    });

    let mut members = Vec::new();
    let mut finals = Vec::new();
    let mut failure = None;
    for r in results.into_iter().flatten() {
        match r {
            Ok((m, rho)) => {
                members.push(m);
                finals.push(rho);
            }
            Err(e) if failure.is_none() => failure = Some(format!("{e:#}")),
            Err(_) => {}
        }
    }
    let same_grid = finals.windows(2).all(|w| w[0].grid().same_as(w[1].grid()));
    let mut pairwise = Vec::new();
    let mut successive = Vec::new();
    if same_grid {
        for i in 0..finals.len() {
            for j in i + 1..finals.len() {
                let d = PairDistance {
                    a: members[i].value,
                    b: members[j].value,
                    l1: finals[i].l1_distance(&finals[j])?,
                };
                if j == i + 1 {
                    successive.push(d.clone());
                }
                pairwise.push(d);
            }
        }
    }
    let closed: Option<Vec<f64>> = members.iter().map(|m| m.closed_form_l1).collect();
    let report = SweepReport {
        scenario: cfg.scenario.clone(),
        parameter: parameter.into(),
        mode: cfg.sweep.mode.clone(),
        successive_decreasing: decreasing(&successive.iter().map(|d| d.l1).collect::<Vec<_>>()),
        closed_form_decreasing: closed.as_deref().and_then(decreasing),
        members,
        successive_l1: successive,
        pairwise_l1: pairwise,
        complete: failure.is_none(),
        failure: failure.clone(),
    };
    write_json(&out.join("sweep.json"), &report)?;
    if report.members.len() == 1 && values.len() == 1 {
        // A one-value sweep is just that run.
        match &report.members[0].summary {
            MemberSummary::Simulate(s) => write_json(&out.join("summary.json"), s)?,
            MemberSummary::Steady(s) => write_json(&out.join("summary.json"), s)?,
        }
    }
    if let Some(f) = failure {
        bail!("{f} (partial results in {})", out.join("sweep.json").display());
    }
    Ok(report)
}
