//! Mean-field dynamics of the ideal collective XY model, with exact
//! conservation laws and the analytic separatrix classifier.
//!
//! Internally the Bloch vector is stored normalized to N/2, so the flow
//! depends on the couplings only through χN, Ω, Ω′ and δ:
//!
//! ```text
//! ẋ = (χN·z + δ)·y + Ω′·z
//! ẏ = −(χN·z + δ)·x − Ω·z
//! ż = Ω·y − Ω′·x
//! ```
//!
//! The flow conserves x²+y²+z² and the mean-field energy
//! (χN/2)(x²+y²) + Ωx + Ω′y − δz.

use serde::{Deserialize, Serialize};

use crate::engine::{
    run_staged, BuildContext, Engine, EngineOptions, InitSpec, Schedule, Stage, StagedDynamics,
};
use crate::error::{Error, Result};
use crate::ode::OdeSystem;
use crate::params::{drive_from_pump, ModelParams};
use crate::trajectory::Trajectory;

/// Collective spin state, components normalized to N/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Time (s).
    pub t: f64,
}

impl BlochState {
    pub fn south_pole() -> Self {
        BlochState {
            x: 0.0,
            y: 0.0,
            z: -1.0,
            t: 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Non-equilibrium phase labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "FERROMAGNETIC")]
    Ferromagnetic,
    #[serde(rename = "PARAMAGNETIC")]
    Paramagnetic,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Ferromagnetic => "FERROMAGNETIC",
            Phase::Paramagnetic => "PARAMAGNETIC",
        }
    }
}

/// Time derivative of the absolute Bloch vector (components of magnitude
/// ≤ N/2) under the collective XY flow:
/// (Ẋ, Ẏ, Ż) = ((2χZ+δ)Y + Ω′Z, −(2χZ+δ)X − ΩZ, ΩY − Ω′X).
pub fn bloch_rhs(
    x: f64,
    y: f64,
    z: f64,
    chi: f64,
    omega_drive: f64,
    omega_prime: f64,
    delta: f64,
) -> (f64, f64, f64) {
    let field = 2.0 * chi * z + delta;
    (
        field * y + omega_prime * z,
        -field * x - omega_drive * z,
        omega_drive * y - omega_prime * x,
    )
}

/// Mean-field energy χ(X²+Y²) + ΩX − δZ of an absolute Bloch vector
/// (Ω′ = 0 form).
pub fn collective_energy(x: f64, y: f64, z: f64, chi: f64, omega_drive: f64, delta: f64) -> f64 {
    chi * (x * x + y * y) + omega_drive * x - delta * z
}

/// Verdict of the analytic energy-shell classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixVerdict {
    pub phase: Phase,
    /// |Ω|N/2 − |e₀ − χ(N/2)²|, positive inside the paramagnetic region.
    /// Magnitudes below ~1e−6·|χ|(N/2)² sit on the separatrix band.
    pub margin: f64,
}

/// Classify an initial state by conservation of the mean-field energy:
/// a trajectory crosses the equator iff its energy shell intersects the
/// equator, i.e. |e₀ − χ(N/2)²| ≤ |Ω|N/2. Valid only for δ = 0 and
/// decoherence-free flow; the boundary uses the ≤ convention
/// (on-separatrix points classify paramagnetic).
pub fn separatrix_classify(
    initial_x: f64,
    initial_y: f64,
    _initial_z: f64,
    chi: f64,
    omega_drive: f64,
    delta: f64,
    n_atoms: f64,
) -> Result<SeparatrixVerdict> {
    if delta != 0.0 {
        return Err(Error::UnsupportedRegime(
            "analytic separatrix classifier requires δ = 0".into(),
        ));
    }
    let half_n = 0.5 * n_atoms;
    let e0 = chi * (initial_x * initial_x + initial_y * initial_y) + omega_drive * initial_x;
    let equator = chi * half_n * half_n;
    let margin = omega_drive.abs() * half_n - (e0 - equator).abs();
    let phase = if margin >= 0.0 {
        Phase::Paramagnetic
    } else {
        Phase::Ferromagnetic
    };
    Ok(SeparatrixVerdict { phase, margin })
}

/// Normalized-state classifier (components scaled to the unit ball).
pub fn separatrix_classify_normalized(
    x: f64,
    y: f64,
    z: f64,
    chi_n: f64,
    omega_drive: f64,
) -> SeparatrixVerdict {
    let _ = z;
    let e0 = 0.5 * chi_n * (x * x + y * y) + omega_drive * x;
    let margin = omega_drive.abs() - (e0 - 0.5 * chi_n).abs();
    SeparatrixVerdict {
        phase: if margin >= 0.0 {
            Phase::Paramagnetic
        } else {
            Phase::Ferromagnetic
        },
        margin,
    }
}

/// The normalized collective flow with stage-switchable drive.
#[derive(Debug, Clone)]
pub struct CollectiveDynamics {
    params: ModelParams,
    /// Interaction scale χN (rad/s); 0 when interactions are disabled.
    chi_n: f64,
    /// δ − (optional ordering shift χ).
    delta_eff: f64,
    omega: f64,
    omega_prime: f64,
}

impl CollectiveDynamics {
    pub fn new(ctx: &BuildContext) -> Result<Self> {
        let p = &ctx.params;
        let d = p.derived()?;
        let chi_n = if ctx.options.interactions_off {
            0.0
        } else {
            d.chi_n
        };
        let delta_eff = if ctx.options.ordering_correction {
            p.delta_drive - d.chi
        } else {
            p.delta_drive
        };
        Ok(CollectiveDynamics {
            params: p.clone(),
            chi_n,
            delta_eff,
            omega: d.omega_drive,
            omega_prime: d.omega_prime,
        })
    }

    /// Normalized mean-field energy of the current stage's fields.
    pub fn energy(&self, x: f64, y: f64, z: f64) -> f64 {
        0.5 * self.chi_n * (x * x + y * y) + self.omega * x + self.omega_prime * y
            - self.delta_eff * z
    }
}

impl OdeSystem for CollectiveDynamics {
    fn rhs(&mut self, _t: f64, s: &[f64], ds: &mut [f64]) {
        let (x, y, z) = (s[0], s[1], s[2]);
        let field = self.chi_n * z + self.delta_eff;
        ds[0] = field * y + self.omega_prime * z;
        ds[1] = -field * x - self.omega * z;
        ds[2] = self.omega * y - self.omega_prime * x;
    }
}

impl StagedDynamics for CollectiveDynamics {
    fn init_state(&self, init: &InitSpec) -> Result<Vec<f64>> {
        let (x, y, z) = init.bloch_components();
        Ok(vec![x, y, z])
    }

    fn enter_stage(&mut self, stage: &Stage) -> Result<()> {
        let p = &self.params;
        let (omega, omega_prime) = drive_from_pump(
            p.g,
            p.omega_p * stage.pump_scale,
            p.phi + stage.pump_phase,
            p.delta_cavity,
            p.delta_drive,
            p.kappa,
        )?;
        self.omega = omega;
        self.omega_prime = omega_prime;
        Ok(())
    }

    fn observe(&self, t: f64, s: &[f64], out: &mut Trajectory) -> Result<()> {
        out.push(t, s[0], s[1], s[2], self.energy(s[0], s[1], s[2]));
        Ok(())
    }
}

/// Mean-field engine for the ideal collective model.
pub struct CollectiveEngine {
    dynamics: CollectiveDynamics,
    options: EngineOptions,
    n_atoms: f64,
}

impl Engine for CollectiveEngine {
    fn name(&self) -> &'static str {
        "collective"
    }

    fn run(&self, schedule: &Schedule, dt_out: f64) -> Result<Trajectory> {
        let mut traj = run_staged(self.dynamics.clone(), schedule, dt_out, &self.options.ode())?;
        traj.n_phys = Some(self.n_atoms);
        Ok(traj)
    }
}

pub fn build_engine(ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    Ok(Box::new(CollectiveEngine {
        dynamics: CollectiveDynamics::new(ctx)?,
        options: ctx.options.clone(),
        n_atoms: ctx.params.n_atoms as f64,
    }))
}

/// Adaptive integration of a drive quench: from `initial`, evolve the
/// configured drive for `t_final`, sampling every `dt_out`.
pub fn integrate_quench(
    ctx: &BuildContext,
    initial: InitSpec,
    t_final: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    if t_final <= 0.0 {
        return Err(Error::Range("t_final must be positive".into()));
    }
    let engine = build_engine(ctx)?;
    engine.run(&Schedule::quench_from(initial, t_final), dt_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::TWO_PI;
    use rand::Rng;

    /// Context with direct control of χN, Ω/(χN) and δ/(χN); uses a clean
    /// dispersive configuration (κ = 0 keeps Ω′ = 0 exactly).
    fn ctx_for(chi_n_hz: f64, omega_ratio: f64, delta_ratio: f64) -> BuildContext {
        let p = crate::params::params_from_targets(
            100_000,
            chi_n_hz,
            omega_ratio,
            delta_ratio,
            -50e6, // Δ < 0 → χ > 0
            0.0,
            0.0,
            0.0,
        )
        .unwrap();
        BuildContext::new(p, EngineOptions::default())
    }

    #[test]
    fn south_pole_is_fixed_point_without_drive() {
        let (dx, dy, dz) = bloch_rhs(0.0, 0.0, -10.0, 1.0, 0.0, 0.0, 0.0);
        assert_eq!((dx, dy, dz), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pure_rabi_flopping() {
        // χ = δ = Ω′ = 0 → Z(t) = −(N/2)cos(Ωt)
        let ctx = ctx_for(1e6, 0.5, 0.0);
        let chi_n = ctx.params.derived().unwrap().chi_n;
        let omega = 0.5 * chi_n;
        let mut ctx = ctx;
        ctx.options.interactions_off = true; // kill χ, keep the drive
        let t_final = 3.0 * TWO_PI / omega.abs();
        let traj = integrate_quench(&ctx, InitSpec::SouthPole, t_final, t_final / 600.0).unwrap();
        for (i, &t) in traj.t.iter().enumerate() {
            let exact = -(omega * t).cos();
            assert!(
                (traj.z[i] - exact).abs() < 1e-8,
                "t={t}: z={} exact={exact}",
                traj.z[i]
            );
        }
    }

    #[test]
    fn detuned_rabi_matches_closed_form() {
        // χ = 0: z(t) = −δ²/W² + (δ²/W² − 1)cos(Wt), W = √(Ω²+δ²)
        let ctx0 = ctx_for(1e6, 0.4, 0.35);
        let d = ctx0.params.derived().unwrap();
        let (omega, delta) = (d.omega_drive, ctx0.params.delta_drive);
        let mut ctx = ctx0;
        ctx.options.interactions_off = true;
        let w = (omega * omega + delta * delta).sqrt();
        let t_final = 4.0 * TWO_PI / w;
        let traj = integrate_quench(&ctx, InitSpec::SouthPole, t_final, t_final / 400.0).unwrap();
        let r = delta * delta / (w * w);
        for (i, &t) in traj.t.iter().enumerate() {
            let exact = -r + (r - 1.0) * (w * t).cos();
            assert!((traj.z[i] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn no_drive_freezes_z() {
        let ctx = ctx_for(1e6, 0.0, 0.0);
        let traj = integrate_quench(
            &ctx,
            InitSpec::BlochPoint {
                x: 0.3,
                y: 0.4,
                z: -(1.0f64 - 0.25).sqrt(),
            },
            5e-6,
            1e-7,
        )
        .unwrap();
        let z0 = traj.z[0];
        for &z in &traj.z {
            assert!((z - z0).abs() < 1e-9);
        }
    }

    #[test]
    fn quench_phases_bracket_critical_drive() {
        // Ω/(χN) = 0.7 → circulation (z crosses 0); 0.3 → trapped below equator
        let t_per = 1e-6; // χN/2π = 1 MHz → interaction period 1 μs
        for (ratio, trapped) in [(0.3, true), (0.7, false)] {
            let ctx = ctx_for(1e6, ratio, 0.0);
            let traj =
                integrate_quench(&ctx, InitSpec::SouthPole, 20.0 * t_per, t_per / 40.0).unwrap();
            let zmax = traj.z_max();
            if trapped {
                assert!(zmax < 0.0, "ratio {ratio}: z_max = {zmax}");
            } else {
                assert!(zmax > 0.0, "ratio {ratio}: z_max = {zmax}");
            }
        }
    }

    #[test]
    fn conservation_of_length_and_energy() {
        let ctx = ctx_for(1e6, 0.42, -0.1);
        let chi_n = ctx.params.derived().unwrap().chi_n;
        let traj = integrate_quench(
            &ctx,
            InitSpec::BlochPoint {
                x: 0.1,
                y: -0.2,
                z: -(1.0f64 - 0.05).sqrt(),
            },
            20e-6,
            1e-7,
        )
        .unwrap();
        let e0 = traj.energy[0];
        let scale = e0.abs().max(0.5 * chi_n.abs());
        for i in 0..traj.len() {
            let len2 = traj.x[i].powi(2) + traj.y[i].powi(2) + traj.z[i].powi(2);
            assert!((len2 - 1.0).abs() < 1e-8, "length drift {}", len2 - 1.0);
            assert!(
                (traj.energy[i] - e0).abs() / scale < 1e-8,
                "energy drift {}",
                (traj.energy[i] - e0) / scale
            );
        }
    }

    #[test]
    fn separatrix_examples() {
        let n = 1000.0;
        let chi = 2.0;
        // south pole: boundary exactly at |Ω| = |χ|N/2
        let omega_c = chi * n / 2.0;
        let v = separatrix_classify(0.0, 0.0, -n / 2.0, chi, omega_c, 0.0, n).unwrap();
        assert_eq!(v.phase, Phase::Paramagnetic); // ≤ convention
        let v = separatrix_classify(0.0, 0.0, -n / 2.0, chi, omega_c * 0.999, 0.0, n).unwrap();
        assert_eq!(v.phase, Phase::Ferromagnetic);
        let v = separatrix_classify(0.0, 0.0, -n / 2.0, chi, omega_c * 1.001, 0.0, n).unwrap();
        assert_eq!(v.phase, Phase::Paramagnetic);
        // equatorial start anti-aligned with the drive: on-separatrix edge case
        let omega = 0.3 * chi * n;
        let x0 = -f64::signum(chi / omega) * n / 2.0;
        let v = separatrix_classify(x0, 0.0, 0.0, chi, omega, 0.0, n).unwrap();
        assert_eq!(v.phase, Phase::Paramagnetic);
        assert!(v.margin.abs() < 1e-9 * chi * (n / 2.0).powi(2));
        // huge drive: everything paramagnetic
        for x0 in [-0.5, 0.0, 0.4] {
            let v =
                separatrix_classify(x0 * n, 0.1 * n, -0.2 * n, chi, 100.0 * chi * n, 0.0, n)
                    .unwrap();
            assert_eq!(v.phase, Phase::Paramagnetic);
        }
        // δ ≠ 0 unsupported
        assert!(separatrix_classify(0.0, 0.0, -n / 2.0, chi, 1.0, 0.5, n).is_err());
    }

    #[test]
    fn classifier_agrees_with_trajectories() {
        // Random southern-hemisphere starts and random Ω/(χN) ∈ [0.05, 1.5]:
        // the analytic verdict must match whether max z over 20 interaction
        // periods exceeds 0, away from the separatrix band.
        let mut rng = crate::rng::keyed_rng(11, crate::rng::Purpose::InitialState, 0);
        let cases = 1000;
        let mut checked = 0;
        for _ in 0..cases {
            let ratio: f64 = rng.gen_range(0.05..1.5);
            let z0: f64 = rng.gen_range(-1.0..-0.02);
            let phi0: f64 = rng.gen_range(0.0..TWO_PI);
            let r = (1.0 - z0 * z0).sqrt();
            let (x0, y0) = (r * phi0.cos(), r * phi0.sin());
            let ctx = ctx_for(1e6, ratio, 0.0);
            let d = ctx.params.derived().unwrap();
            let verdict = separatrix_classify_normalized(x0, y0, z0, d.chi_n, d.omega_drive);
            // skip the measure-zero band around the separatrix
            if verdict.margin.abs() < 1e-6 * 0.5 * d.chi_n.abs() {
                continue;
            }
            let t_per = TWO_PI / d.chi_n.abs();
            let traj = integrate_quench(
                &ctx,
                InitSpec::BlochPoint {
                    x: x0,
                    y: y0,
                    z: z0,
                },
                20.0 * t_per,
                t_per / 16.0,
            )
            .unwrap();
            let crossed = traj.z_max() > 0.0;
            let expect = verdict.phase == Phase::Paramagnetic;
            assert_eq!(
                crossed, expect,
                "ratio={ratio} start=({x0},{y0},{z0}) margin={}",
                verdict.margin
            );
            checked += 1;
        }
        assert!(checked > 900, "only {checked} cases checked");
    }

    #[test]
    fn cavity_sign_flip_symmetry() {
        // Δ ↔ −Δ flips χ and Ω (and we flip δ): trajectories map by
        // (x, y, z) → (x, −y, z) with identical z(t).
        let ctx_a = ctx_for(1e6, 0.37, 0.12);
        let mut ctx_b = ctx_for(1e6, 0.37, 0.12);
        // flip the cavity: Δ → −Δ, δ → −δ, keep the same pump amplitude
        ctx_b.params.delta_cavity = -ctx_b.params.delta_cavity;
        ctx_b.params.delta_drive = -ctx_b.params.delta_drive;
        let init = InitSpec::BlochPoint {
            x: 0.2,
            y: 0.3,
            z: -(1.0f64 - 0.13).sqrt(),
        };
        let init_b = InitSpec::BlochPoint {
            x: 0.2,
            y: -0.3,
            z: -(1.0f64 - 0.13).sqrt(),
        };
        let ta = integrate_quench(&ctx_a, init, 6e-6, 2e-8).unwrap();
        let tb = integrate_quench(&ctx_b, init_b, 6e-6, 2e-8).unwrap();
        for i in 0..ta.len() {
            assert!((ta.z[i] - tb.z[i]).abs() < 1e-8);
            assert!((ta.x[i] - tb.x[i]).abs() < 1e-8);
            assert!((ta.y[i] + tb.y[i]).abs() < 1e-8);
        }
    }
}
