//! Protocol orchestration: shot ensembles, drive and detuning sweeps, phase
//! diagrams, basin maps and echo scans.
//!
//! Sweep cells and shots are independent and run on a work pool; results are
//! always reduced in index order, so output is bit-identical at any thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    analyze_phase_diagram, order_parameter, BasinMap, Estimator, PhaseDiagram, SweepResult,
    JUMP_THRESHOLD, PHASE_THRESHOLD,
};
use crate::bloch::{separatrix_classify_normalized, Phase};
use crate::engine::{build_model, BuildContext, InitSpec, ModelKind, Schedule, Stage};
use crate::ensemble::draw_shot_atom_number;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::trajectory::{ShotAverage, Trajectory};
use crate::units::rad_to_hz;

/// Shot-ensemble settings: repetitions with Gaussian atom-number draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub n_shots: u32,
    pub fluctuation_rms: f64,
    pub seed: u64,
}

impl ShotPlan {
    pub fn single(seed: u64) -> Self {
        ShotPlan {
            n_shots: 1,
            fluctuation_rms: 0.0,
            seed,
        }
    }

    /// The experiment's defaults: 12 repetitions, 5% rms atom-number spread.
    pub fn experiment(seed: u64) -> Self {
        ShotPlan {
            n_shots: 12,
            fluctuation_rms: 0.05,
            seed,
        }
    }
}

/// Set the pump amplitude (both angular and Hz mirrors).
pub fn set_pump(params: &mut ModelParams, omega_p: f64) {
    params.omega_p = omega_p;
    params.hz.omega_p_hz = rad_to_hz(omega_p);
}

/// Set the drive detuning δ (both angular and Hz mirrors).
pub fn set_delta_drive(params: &mut ModelParams, delta: f64) {
    params.delta_drive = delta;
    params.hz.delta_drive_hz = rad_to_hz(delta);
}

/// Retarget the transverse drive to `ratio`·χN at the current parameters.
pub fn retarget_drive(params: &mut ModelParams, ratio: f64) -> Result<()> {
    let chi_n = params.derived()?.chi_n;
    let omega_p = params.pump_for_target_omega(ratio * chi_n)?;
    set_pump(params, omega_p);
    Ok(())
}

/// Context adjusted to one shot's drawn atom number.
fn shot_context(base: &BuildContext, kind: ModelKind, n_phys: f64) -> BuildContext {
    let mut ctx = base.clone();
    match kind {
        ModelKind::Collective => {
            ctx.params.n_atoms = n_phys.round().max(1.0) as u64;
        }
        _ => {
            if let Some(sites) = &base.site_config {
                ctx.site_config = Some(std::sync::Arc::new(sites.with_n_phys(n_phys)));
            }
        }
    }
    ctx
}

/// Run a schedule `n_shots` times with per-shot atom-number draws; returns
/// the pointwise mean trajectory and z spread.
pub fn run_shots(
    base: &BuildContext,
    kind: ModelKind,
    schedule: &Schedule,
    dt_out: f64,
    plan: &ShotPlan,
) -> Result<ShotAverage> {
    if plan.n_shots < 1 {
        return Err(Error::Config("n_shots must be ≥ 1".into()));
    }
    let n_mean = base.params.n_atoms as f64;
    let shots: Vec<Result<(f64, Trajectory)>> = (0..plan.n_shots as u64)
        .into_par_iter()
        .map(|shot| {
            let n_phys = draw_shot_atom_number(plan.seed, shot, n_mean, plan.fluctuation_rms);
            let ctx = shot_context(base, kind, n_phys);
            let engine = build_model(kind, &ctx)?;
            Ok((n_phys, engine.run(schedule, dt_out)?))
        })
        .collect();
    let mut trajs = Vec::with_capacity(shots.len());
    let mut n_phys_shots = Vec::with_capacity(shots.len());
    for s in shots {
        let (n_phys, t) = s?;
        n_phys_shots.push(n_phys);
        trajs.push(t);
    }
    let n_samples = trajs[0].len();
    let n_shots = trajs.len();
    let mut mean = Trajectory::with_capacity(n_samples);
    mean.n_sim = trajs[0].n_sim;
    mean.n_phys = Some(n_phys_shots.iter().sum::<f64>() / n_shots as f64);
    let mut z_sd = vec![0.0; n_samples];
    for i in 0..n_samples {
        let mut acc = [0.0f64; 5];
        for t in &trajs {
            acc[0] += t.x[i];
            acc[1] += t.y[i];
            acc[2] += t.z[i];
            acc[3] += t.energy[i];
        }
        let inv = 1.0 / n_shots as f64;
        mean.push(
            trajs[0].t[i],
            acc[0] * inv,
            acc[1] * inv,
            acc[2] * inv,
            acc[3] * inv,
        );
        if plan.fluctuation_rms > 0.0 {
            let zm = acc[2] * inv;
            let var = trajs
                .iter()
                .map(|t| (t.z[i] - zm).powi(2))
                .sum::<f64>()
                / n_shots as f64;
            z_sd[i] = var.sqrt();
        }
    }
    Ok(ShotAverage {
        mean,
        z_sd,
        n_shots,
        n_phys_shots,
    })
}

/// Quench/PREP_QUENCH runner returning the shot mean trajectory.
pub fn run_protocol(
    base: &BuildContext,
    kind: ModelKind,
    schedule: &Schedule,
    dt_out: f64,
    plan: &ShotPlan,
) -> Result<ShotAverage> {
    run_shots(base, kind, schedule, dt_out, plan)
}

/// Order parameter of the shot-averaged quench at one drive setting.
fn jz_bar_at(
    base: &BuildContext,
    kind: ModelKind,
    schedule: &Schedule,
    dt_out: f64,
    plan: &ShotPlan,
    estimator: Estimator,
) -> Result<(f64, f64)> {
    let avg = run_shots(base, kind, schedule, dt_out, plan)?;
    let op = order_parameter(&avg.mean, estimator)?;
    // spread of the estimator across shots enters through the z spread at
    // the estimator's reference time (snapshot) or its window mean
    let spread = match estimator {
        Estimator::Snapshot { t_f } => {
            let idx = avg
                .mean
                .t
                .iter()
                .position(|&t| (t - t_f).abs() <= 1e-9 * t_f.max(1e-30))
                .unwrap_or(avg.z_sd.len() - 1);
            avg.z_sd[idx]
        }
        Estimator::Window { .. } => {
            avg.z_sd.iter().sum::<f64>() / avg.z_sd.len() as f64
        }
    };
    Ok((op.jz_bar, spread))
}

/// Sampling resolution: output samples per run used by sweeps.
const SWEEP_SAMPLES: usize = 400;

fn sweep_dt(t_final: f64) -> f64 {
    t_final / SWEEP_SAMPLES as f64
}

/// Drive sweep at fixed δ: J̄z against Ω/(χN).
pub fn sweep_drive(
    base: &BuildContext,
    kind: ModelKind,
    ratios: &[f64],
    estimator: Estimator,
    plan: &ShotPlan,
) -> Result<SweepResult> {
    let t_final = estimator.t_required();
    let dt_out = sweep_dt(t_final);
    let delta_ratio = {
        let d = base.params.derived()?;
        if d.chi_n != 0.0 {
            base.params.delta_drive / d.chi_n
        } else {
            0.0
        }
    };
    let values: Vec<Result<f64>> = ratios
        .par_iter()
        .map(|&ratio| {
            let mut ctx = base.clone();
            retarget_drive(&mut ctx.params, ratio)?;
            let (jz, _) = jz_bar_at(
                &ctx,
                kind,
                &Schedule::quench(t_final),
                dt_out,
                plan,
                estimator,
            )?;
            Ok(jz)
        })
        .collect();
    let jz: Result<Vec<f64>> = values.into_iter().collect();
    Ok(SweepResult::from_scan(
        ratios.to_vec(),
        delta_ratio,
        jz?,
        PHASE_THRESHOLD,
    ))
}

/// Drive sweep that also reports the shot spread per point.
pub fn sweep_drive_with_spread(
    base: &BuildContext,
    kind: ModelKind,
    ratios: &[f64],
    estimator: Estimator,
    plan: &ShotPlan,
) -> Result<(SweepResult, Vec<f64>)> {
    let t_final = estimator.t_required();
    let dt_out = sweep_dt(t_final);
    let values: Vec<Result<(f64, f64)>> = ratios
        .par_iter()
        .map(|&ratio| {
            let mut ctx = base.clone();
            retarget_drive(&mut ctx.params, ratio)?;
            jz_bar_at(
                &ctx,
                kind,
                &Schedule::quench(t_final),
                dt_out,
                plan,
                estimator,
            )
        })
        .collect();
    let mut jz = Vec::with_capacity(ratios.len());
    let mut spread = Vec::with_capacity(ratios.len());
    for v in values {
        let (z, s) = v?;
        jz.push(z);
        spread.push(s);
    }
    Ok((
        SweepResult::from_scan(ratios.to_vec(), 0.0, jz, PHASE_THRESHOLD),
        spread,
    ))
}

/// Detuning sweep at fixed drive ratio: J̄z against δ/(χN).
pub fn sweep_detuning(
    base: &BuildContext,
    kind: ModelKind,
    omega_ratio: f64,
    delta_ratios: &[f64],
    estimator: Estimator,
    plan: &ShotPlan,
) -> Result<SweepResult> {
    let t_final = estimator.t_required();
    let dt_out = sweep_dt(t_final);
    let chi_n = base.params.derived()?.chi_n;
    let values: Vec<Result<f64>> = delta_ratios
        .par_iter()
        .map(|&dr| {
            let mut ctx = base.clone();
            set_delta_drive(&mut ctx.params, dr * chi_n);
            retarget_drive(&mut ctx.params, omega_ratio)?;
            let (jz, _) = jz_bar_at(
                &ctx,
                kind,
                &Schedule::quench(t_final),
                dt_out,
                plan,
                estimator,
            )?;
            Ok(jz)
        })
        .collect();
    let jz: Result<Vec<f64>> = values.into_iter().collect();
    Ok(SweepResult::from_scan(
        delta_ratios.to_vec(),
        omega_ratio,
        jz?,
        PHASE_THRESHOLD,
    ))
}

/// Full (δ/(χN), Ω/(χN)) grid.
pub fn phase_diagram_run(
    base: &BuildContext,
    kind: ModelKind,
    delta_ratios: &[f64],
    omega_ratios: &[f64],
    estimator: Estimator,
    plan: &ShotPlan,
) -> Result<PhaseDiagram> {
    let t_final = estimator.t_required();
    let dt_out = sweep_dt(t_final);
    let chi_n = base.params.derived()?.chi_n;
    let cells: Vec<(usize, usize)> = (0..omega_ratios.len())
        .flat_map(|io| (0..delta_ratios.len()).map(move |id| (io, id)))
        .collect();
    let values: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(io, id)| {
            let mut ctx = base.clone();
            set_delta_drive(&mut ctx.params, delta_ratios[id] * chi_n);
            retarget_drive(&mut ctx.params, omega_ratios[io])?;
            let (jz, _) = jz_bar_at(
                &ctx,
                kind,
                &Schedule::quench(t_final),
                dt_out,
                plan,
                estimator,
            )?;
            Ok(jz)
        })
        .collect();
    let jz: Result<Vec<f64>> = values.into_iter().collect();
    analyze_phase_diagram(
        delta_ratios.to_vec(),
        omega_ratios.to_vec(),
        jz?,
        PHASE_THRESHOLD,
        JUMP_THRESHOLD,
    )
}

/// How basin-map initial states are prepared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PrepSpec {
    /// Place the Bloch vector at (r, Δφ) directly: the strong-drive
    /// rotation in its ideal limit.
    #[serde(rename = "EXACT")]
    Exact,
    /// Rotate with a strong drive for the required time, then jump the pump
    /// phase and amplitude simultaneously.
    #[serde(rename = "DRIVE")]
    Dynamic { omega_prep_over_chi_n: f64 },
}

/// Build the state-preparation + quench schedule for one basin cell.
pub fn basin_schedule(
    prep: PrepSpec,
    r: f64,
    delta_phi: f64,
    omega_run: f64,
    omega_ratio_run: f64,
    t_run: f64,
) -> Schedule {
    match prep {
        PrepSpec::Exact => Schedule::quench_from(InitSpec::from_polar(r, delta_phi), t_run),
        PrepSpec::Dynamic {
            omega_prep_over_chi_n,
        } => {
            let scale = (omega_prep_over_chi_n / omega_ratio_run).abs();
            let omega_prep = omega_run.abs() * scale;
            let t_prep = if omega_prep > 0.0 {
                r.asin() / omega_prep
            } else {
                0.0
            };
            // After rotating from the south pole about the drive axis the
            // Bloch vector sits at relative azimuth sgn(Ω)·π/2; shifting the
            // pump phase by ψ rotates the drive axis by −ψ, so the relative
            // azimuth becomes Δφ at ψ = Δφ − sgn(Ω)·π/2.
            let psi = delta_phi - omega_run.signum() * std::f64::consts::FRAC_PI_2;
            Schedule {
                init: InitSpec::SouthPole,
                stages: vec![
                    Stage {
                        pump_scale: scale,
                        pump_phase: 0.0,
                        duration: t_prep,
                    },
                    Stage {
                        pump_scale: 1.0,
                        pump_phase: psi,
                        duration: t_run,
                    },
                ],
            }
        }
    }
}

/// Map the basin of attraction over (r, Δφ) initial conditions.
///
/// Cells are classified paramagnetic iff the quench trajectory crosses the
/// equator within the run window (the trapped/circulating dichotomy). For
/// the collective model the analytic energy-shell basin is attached.
#[allow(clippy::too_many_arguments)]
pub fn basin_run(
    base: &BuildContext,
    kind: ModelKind,
    omega_ratio: f64,
    n_r: usize,
    n_phi: usize,
    prep: PrepSpec,
    t_run: f64,
    estimator: Estimator,
    plan: &ShotPlan,
) -> Result<BasinMap> {
    let mut ctx = base.clone();
    retarget_drive(&mut ctx.params, omega_ratio)?;
    let derived = ctx.params.derived()?;
    let omega_run = derived.omega_drive;
    let chi_n = derived.chi_n;
    let r_grid: Vec<f64> = (0..n_r)
        .map(|i| i as f64 / (n_r.max(2) - 1) as f64)
        .collect();
    let phi_grid: Vec<f64> = (0..n_phi)
        .map(|j| j as f64 * std::f64::consts::TAU / n_phi as f64)
        .collect();
    let dt_out = sweep_dt(t_run.max(estimator.t_required()));
    let t_total = t_run.max(estimator.t_required());

    let cells: Vec<(usize, usize)> = (0..n_r)
        .flat_map(|ir| (0..n_phi).map(move |ip| (ir, ip)))
        .collect();
    let results: Vec<Result<(f64, Phase)>> = cells
        .par_iter()
        .map(|&(ir, ip)| {
            let schedule = basin_schedule(
                prep,
                r_grid[ir],
                phi_grid[ip],
                omega_run,
                omega_ratio,
                t_total,
            );
            let avg = run_shots(&ctx, kind, &schedule, dt_out, plan)?;
            // classify on the quench segment only (skip the prep stage)
            let t_quench_start = avg.mean.t.last().copied().unwrap_or(0.0) - t_total;
            let crossed = avg
                .mean
                .t
                .iter()
                .zip(&avg.mean.z)
            .any(|(&t, &z)| t >= t_quench_start && z > 0.0);
            let t1 = *avg.mean.t.last().unwrap();
            let jz = match estimator {
                Estimator::Snapshot { t_f } => avg
                    .mean
                    .z_at((t1 - t_total + t_f).min(t1))
                    .unwrap_or(*avg.mean.z.last().unwrap()),
                Estimator::Window { t0, t1: w1 } => avg
                    .mean
                    .z_window_mean(t_quench_start + t0, (t_quench_start + w1).min(t1))
                    .unwrap_or(*avg.mean.z.last().unwrap()),
            };
            let label = if crossed {
                Phase::Paramagnetic
            } else {
                Phase::Ferromagnetic
            };
            Ok((jz, label))
        })
        .collect();

    let mut jz_bar = Vec::with_capacity(cells.len());
    let mut label = Vec::with_capacity(cells.len());
    for r in results {
        let (z, l) = r?;
        jz_bar.push(z);
        label.push(l);
    }

    let analytic = if kind == ModelKind::Collective {
        let mut a = Vec::with_capacity(cells.len());
        for &(ir, ip) in &cells {
            let (x, y, z) = InitSpec::from_polar(r_grid[ir], phi_grid[ip]).bloch_components();
            let _ = z;
            let v = separatrix_classify_normalized(x, y, z, chi_n, omega_run);
            a.push(v.phase);
        }
        Some(a)
    } else {
        None
    };

    let mut map = BasinMap {
        omega_over_chi_n: omega_ratio,
        r: r_grid,
        delta_phi: phi_grid,
        jz_bar,
        label,
        analytic,
        near_boundary: None,
    };
    map.mark_boundary();
    Ok(map)
}

/// Revival ⟨Ĵz⟩(2t_echo)/(N/2) over a grid of echo times.
pub fn echo_run(
    base: &BuildContext,
    kind: ModelKind,
    t_echoes: &[f64],
    samples_per_echo: usize,
) -> Result<Vec<(f64, f64)>> {
    let results: Vec<Result<f64>> = t_echoes
        .par_iter()
        .map(|&t_echo| {
            let engine = build_model(kind, base)?;
            let dt_out = if t_echo > 0.0 {
                2.0 * t_echo / samples_per_echo as f64
            } else {
                1.0
            };
            crate::motion::run_echo(engine.as_ref(), t_echo, dt_out)
        })
        .collect();
    let mut out = Vec::with_capacity(t_echoes.len());
    for (t, r) in t_echoes.iter().zip(results) {
        out.push((*t, r?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineOptions;
    use crate::params::params_from_targets;

    fn collective_ctx(omega_ratio: f64) -> BuildContext {
        let p = params_from_targets(100_000, 1e6, omega_ratio, 0.0, -50e6, 0.0, 0.0, 0.0).unwrap();
        BuildContext::new(p, EngineOptions::default())
    }

    #[test]
    fn zero_fluctuation_shots_are_identical() {
        let ctx = collective_ctx(0.3);
        let plan = ShotPlan {
            n_shots: 5,
            fluctuation_rms: 0.0,
            seed: 1,
        };
        let avg = run_shots(
            &ctx,
            ModelKind::Collective,
            &Schedule::quench(4e-6),
            1e-7,
            &plan,
        )
        .unwrap();
        for &sd in &avg.z_sd {
            assert_eq!(sd, 0.0);
        }
        assert_eq!(avg.n_shots, 5);
    }

    #[test]
    fn spread_peaks_at_the_critical_point() {
        // with 5% atom-number fluctuations the shot band is widest near the
        // transition (susceptibility peak): checked on a 3-point Ω grid
        let ctx = collective_ctx(0.3);
        let plan = ShotPlan {
            n_shots: 12,
            fluctuation_rms: 0.05,
            seed: 3,
        };
        let est = Estimator::Window {
            t0: 0.0,
            t1: 12e-6,
        };
        let (_, spread) = sweep_drive_with_spread(
            &ctx,
            ModelKind::Collective,
            &[0.2, 0.5, 0.8],
            est,
            &plan,
        )
        .unwrap();
        assert!(
            spread[1] > spread[0] && spread[1] > spread[2],
            "spreads {spread:?}"
        );
    }

    #[test]
    fn dynamic_prep_matches_exact_prep_in_strong_drive_limit() {
        // with Ω_prep ≫ χN the staged preparation approaches the ideal
        // rotation: quench classifications agree cell by cell
        let ctx = collective_ctx(0.3);
        let d = ctx.params.derived().unwrap();
        let t_run = 14.0 * crate::units::TWO_PI / d.chi_n.abs();
        for &(r, dphi) in &[
            (0.3, 0.7),
            (0.3, -0.7),
            (0.6, 2.4),
            (0.6, 3.9),
            (0.85, 0.3),
        ] {
            let exact = basin_schedule(PrepSpec::Exact, r, dphi, d.omega_drive, 0.3, t_run);
            let dynamic = basin_schedule(
                PrepSpec::Dynamic {
                    omega_prep_over_chi_n: 60.0,
                },
                r,
                dphi,
                d.omega_drive,
                0.3,
                t_run,
            );
            let engine = build_model(ModelKind::Collective, &ctx).unwrap();
            let te = engine.run(&exact, t_run / 300.0).unwrap();
            let td = engine.run(&dynamic, t_run / 300.0).unwrap();
            let ze = te.z_max();
            let zd = td.z_max();
            assert_eq!(
                ze > 0.0,
                zd > 0.0,
                "classification differs at (r={r}, Δφ={dphi}): exact z_max={ze}, dynamic z_max={zd}"
            );
        }
    }

    #[test]
    fn echo_grid_runs_on_collective() {
        // interaction-free collective echo revives exactly for every t_echo
        let mut ctx = collective_ctx(0.9);
        ctx.options.interactions_off = true;
        let out = echo_run(
            &ctx,
            ModelKind::Collective,
            &[0.0, 0.5e-6, 1.0e-6],
            64,
        )
        .unwrap();
        for &(t, z) in &out {
            assert!((z + 1.0).abs() < 1e-7, "t_echo={t}: revival {z}");
        }
    }
}
