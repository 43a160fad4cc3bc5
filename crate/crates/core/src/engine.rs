//! Model-variant abstraction: every dynamical model implements [`Engine`]
//! and is registered by name, so the CLI and the protocol layer select the
//! variant at runtime from configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::SiteConfig;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeSystem};
use crate::params::ModelParams;
use crate::trajectory::Trajectory;

/// Initial collective state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitSpec {
    /// Every spin in |↓⟩.
    SouthPole,
    /// Normalized Bloch point; per-site models prepare the matching pure
    /// product state on every site.
    BlochPoint { x: f64, y: f64, z: f64 },
}

impl InitSpec {
    pub fn bloch_components(&self) -> (f64, f64, f64) {
        match *self {
            InitSpec::SouthPole => (0.0, 0.0, -1.0),
            InitSpec::BlochPoint { x, y, z } => (x, y, z),
        }
    }

    /// Point on the southern hemisphere from basin-map polar coordinates:
    /// radius r = √(1 − z²) and azimuth Δφ relative to the drive axis.
    pub fn from_polar(r: f64, delta_phi: f64) -> Self {
        let z = -(1.0 - r * r).max(0.0).sqrt();
        InitSpec::BlochPoint {
            x: r * delta_phi.cos(),
            y: r * delta_phi.sin(),
            z,
        }
    }
}

/// One interval of constant drive. The pump is described relative to the
/// configured Ω_p: an amplitude scale and a phase shift, which is how the
/// experiment itself manipulates the drive (EOM amplitude and phase jumps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Multiplier on |Ω_p| (≥ 0).
    pub pump_scale: f64,
    /// Phase added to the pump phase φ; π realizes Ω_p → −Ω_p.
    pub pump_phase: f64,
    /// Stage duration (s).
    pub duration: f64,
}

impl Stage {
    pub fn drive(duration: f64) -> Self {
        Stage {
            pump_scale: 1.0,
            pump_phase: 0.0,
            duration,
        }
    }
}

/// A staged protocol: initial state plus a sequence of drive intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub init: InitSpec,
    pub stages: Vec<Stage>,
}

impl Schedule {
    /// Plain quench: start at the south pole, drive on for `t_final`.
    pub fn quench(t_final: f64) -> Self {
        Schedule {
            init: InitSpec::SouthPole,
            stages: vec![Stage::drive(t_final)],
        }
    }

    /// Quench from an arbitrary Bloch point.
    pub fn quench_from(init: InitSpec, t_final: f64) -> Self {
        Schedule {
            init,
            stages: vec![Stage::drive(t_final)],
        }
    }

    /// Echo: drive for t_echo, flip the pump phase by π, drive for t_echo.
    pub fn echo(t_echo: f64) -> Self {
        Schedule {
            init: InitSpec::SouthPole,
            stages: vec![
                Stage::drive(t_echo),
                Stage {
                    pump_scale: 1.0,
                    pump_phase: std::f64::consts::PI,
                    duration: t_echo,
                },
            ],
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }
}

/// How a per-site model treats the site's own contribution to the
/// cavity-mediated field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelfInteraction {
    /// Keep the exact operator self-term −iχ_kk c_k (default). The j = k
    /// pair term is excluded from the factorized sum.
    Exact,
    /// Factorize the self-pair like any cross pair. Uniform couplings then
    /// reduce to the collective model with no parameter shift.
    Factorized,
}

/// Numerical and physical switches common to all engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Collective model: include the O(1/N) operator-ordering shift
    /// (δ → δ − χ in the transverse equations).
    pub ordering_correction: bool,
    /// Per-site models: self-interaction convention.
    pub self_interaction: SelfInteraction,
    /// Disable the cavity-mediated interaction entirely (single-particle
    /// dynamics; used by the single-body echo analysis).
    pub interactions_off: bool,
    /// Motion model: highest retained trap level.
    pub n_max: usize,
    /// Motion model: run per-sample trace checks at this tolerance.
    pub trace_tol: f64,
    /// Thermal initial occupation of trap levels (motion model); false
    /// starts every atom in the motional ground state.
    pub thermal_init: bool,
    /// Expensive per-sample state validation (Hermiticity, positivity);
    /// meant for tests.
    pub validate: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ordering_correction: false,
            self_interaction: SelfInteraction::Exact,
            interactions_off: false,
            n_max: 10,
            trace_tol: 1e-6,
            thermal_init: true,
            validate: false,
        }
    }
}

impl EngineOptions {
    pub fn ode(&self) -> OdeOptions {
        OdeOptions::with_tol(self.rtol, self.atol)
    }
}

/// Everything an engine constructor may need.
#[derive(Clone)]
pub struct BuildContext {
    pub params: ModelParams,
    pub options: EngineOptions,
    /// Sampled per-site couplings (required by the per-site models).
    pub site_config: Option<Arc<SiteConfig>>,
}

impl BuildContext {
    pub fn new(params: ModelParams, options: EngineOptions) -> Self {
        BuildContext {
            params,
            options,
            site_config: None,
        }
    }

    pub fn with_sites(mut self, sites: Arc<SiteConfig>) -> Self {
        self.site_config = Some(sites);
        self
    }

    pub fn require_sites(&self) -> Result<Arc<SiteConfig>> {
        self.site_config
            .clone()
            .ok_or_else(|| Error::Config("this model requires sampled site couplings".into()))
    }
}

/// A dynamical model able to execute staged drive protocols.
pub trait Engine: Send + Sync {
    fn name(&self) -> &'static str;
    /// Run the schedule, sampling collective observables every `dt_out`.
    fn run(&self, schedule: &Schedule, dt_out: f64) -> Result<Trajectory>;
}

/// The model variants this crate ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "COLLECTIVE")]
    Collective,
    #[serde(rename = "ENSEMBLE_ADIABATIC")]
    EnsembleAdiabatic,
    #[serde(rename = "ENSEMBLE_FULL_CAVITY")]
    EnsembleFullCavity,
    #[serde(rename = "MOTION")]
    Motion,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Collective => "collective",
            ModelKind::EnsembleAdiabatic => "ensemble-adiabatic",
            ModelKind::EnsembleFullCavity => "ensemble-full-cavity",
            ModelKind::Motion => "motion",
        }
    }
}

type Builder = fn(&BuildContext) -> Result<Box<dyn Engine>>;

/// Registered engine constructors, selected by name at runtime.
pub struct EngineEntry {
    pub name: &'static str,
    pub build: Builder,
}

pub static REGISTRY: &[EngineEntry] = &[
    EngineEntry {
        name: "collective",
        build: crate::bloch::build_engine,
    },
    EngineEntry {
        name: "ensemble-adiabatic",
        build: crate::ensemble::build_adiabatic_engine,
    },
    EngineEntry {
        name: "ensemble-full-cavity",
        build: crate::ensemble::build_full_cavity_engine,
    },
    EngineEntry {
        name: "motion",
        build: crate::motion::build_engine,
    },
];

/// Build an engine by registered name.
pub fn build_engine(name: &str, ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    for entry in REGISTRY {
        if entry.name == name {
            return (entry.build)(ctx);
        }
    }
    Err(Error::Config(format!(
        "unknown model '{name}'; available: {}",
        REGISTRY
            .iter()
            .map(|e| e.name)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Build an engine from the typed model kind.
pub fn build_model(kind: ModelKind, ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    build_engine(kind.as_str(), ctx)
}

/// Shared machinery for engines whose state is a flat f64 vector evolved
/// stage by stage.
pub trait StagedDynamics: OdeSystem + Sized {
    /// Prepare the state vector for the initial condition.
    fn init_state(&self, init: &InitSpec) -> Result<Vec<f64>>;
    /// Install a stage's drive fields before integrating it.
    fn enter_stage(&mut self, stage: &Stage) -> Result<()>;
    /// Read collective observables off the state.
    fn observe(&self, t: f64, y: &[f64], out: &mut Trajectory) -> Result<()>;
}

/// Run a schedule for any staged dynamics, sampling on the uniform grid.
pub fn run_staged<D: StagedDynamics>(
    mut dynamics: D,
    schedule: &Schedule,
    dt_out: f64,
    opts: &OdeOptions,
) -> Result<Trajectory> {
    if schedule.stages.is_empty() {
        return Err(Error::Config("schedule has no stages".into()));
    }
    let total = schedule.total_duration();
    let grid = ode::uniform_grid(0.0, total, dt_out);
    let mut traj = Trajectory::with_capacity(grid.len());
    let mut y = dynamics.init_state(&schedule.init)?;
    let mut t0 = 0.0;
    let mut gi = 0usize;

    // Sample at t = 0 with the first stage's fields installed.
    if !grid.is_empty() && grid[0] == 0.0 {
        dynamics.enter_stage(&schedule.stages[0])?;
        dynamics.observe(0.0, &y, &mut traj)?;
        gi = 1;
    }

    let slack = 1e-12 * total.max(1e-300);
    for (si, stage) in schedule.stages.iter().enumerate() {
        dynamics.enter_stage(stage)?;
        let t1 = t0 + stage.duration;
        // Grid samples inside (t0, t1]; the stage boundary is integrated to
        // exactly even when it is not a sample point.
        let mut samples: Vec<f64> = Vec::new();
        while gi < grid.len() && grid[gi] <= t1 + slack {
            samples.push(grid[gi].min(t1));
            gi += 1;
        }
        let n_report = samples.len();
        if si + 1 < schedule.stages.len() && samples.last() != Some(&t1) {
            samples.push(t1); // land on the boundary without reporting it
        }
        if samples.is_empty() {
            t0 = t1;
            continue;
        }
        y = ode::integrate_sampled(&mut dynamics, t0, &y, &samples, opts, |d, i, t, yy| {
            if i < n_report {
                d.observe(t, yy, &mut traj)?;
            }
            Ok(())
        })?;
        t0 = t1;
    }

    Ok(traj)
}
