//! Per-site inhomogeneous mean-field dynamics with decoherence.
//!
//! Each lattice site k carries a coherence c_k = ⟨σ̂ₖ⁻⟩ and an inversion
//! z_k = ⟨σ̂ₖᶻ⟩. Two cavity treatments are provided:
//!
//! * adiabatic — the cavity fluctuation field is eliminated, leaving direct
//!   exchange couplings χ_kj = −g_k g_j Δ/[Δ²+(κ/2)²];
//! * full cavity — the fluctuation amplitude β = ⟨â′⟩ stays dynamical,
//!   which validates the elimination.
//!
//! The exchange sum is evaluated through its rank-1 structure
//! (S = Σ_j g_j c_j once per call), so the right-hand side costs O(N_sim).

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{
    run_staged, BuildContext, Engine, EngineOptions, InitSpec, Schedule, SelfInteraction, Stage,
    StagedDynamics,
};
use crate::error::{Error, Result};
use crate::ode::OdeSystem;
use crate::params::{drive_from_pump, ModelParams};
use crate::rng::{keyed_rng, Purpose};
use crate::trajectory::Trajectory;

/// Sampled per-site couplings. The dimensionless `profile` (lattice phase ×
/// radial factor) is fixed by the seed; the physical atom number only
/// rescales the couplings, so shot-to-shot N fluctuations reuse one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    /// cos(k·j)·exp(−(r/w)²) per site, in [−1, 1].
    pub profile: Vec<f64>,
    /// cos(k·j) per site (lattice phase only).
    pub lattice_cos: Vec<f64>,
    /// sin(k·j) per site.
    pub lattice_sin: Vec<f64>,
    /// Radial coupling factor exp(−(r/w)²) per site.
    pub radial: Vec<f64>,
    /// Lattice site indices.
    pub site_index: Vec<u64>,
    /// Simulated site count.
    pub n_sim: usize,
    /// Physical atom count represented by the simulation.
    pub n_phys: f64,
    /// Peak coupling g (rad/s) used to build g_k.
    pub g_peak: f64,
    /// Per-site couplings g_k = g·profile·√(N_phys/N_sim) (rad/s).
    pub g_k: Vec<f64>,
}

impl SiteConfig {
    fn build(
        lattice_cos: Vec<f64>,
        lattice_sin: Vec<f64>,
        radial: Vec<f64>,
        site_index: Vec<u64>,
        g: f64,
        n_phys: f64,
    ) -> Self {
        let n_sim = lattice_cos.len();
        let rescale = (n_phys / n_sim as f64).sqrt();
        let profile: Vec<f64> = lattice_cos
            .iter()
            .zip(&radial)
            .map(|(c, r)| c * r)
            .collect();
        let g_k = profile.iter().map(|p| g * p * rescale).collect();
        SiteConfig {
            profile,
            lattice_cos,
            lattice_sin,
            radial,
            site_index,
            n_sim,
            n_phys,
            g_peak: g,
            g_k,
        }
    }

    /// Same positions, different represented atom number (shot redraws).
    pub fn with_n_phys(&self, n_phys: f64) -> Self {
        SiteConfig::build(
            self.lattice_cos.clone(),
            self.lattice_sin.clone(),
            self.radial.clone(),
            self.site_index.clone(),
            self.g_peak,
            n_phys,
        )
    }

    /// Uniform couplings at the collective-model value (g_k = g, N_phys =
    /// N_sim); the commensurate-lattice limit.
    pub fn uniform(n_sim: usize, g: f64) -> Self {
        SiteConfig::build(
            vec![1.0; n_sim],
            vec![0.0; n_sim],
            vec![1.0; n_sim],
            (0..n_sim as u64).collect(),
            g,
            n_sim as f64,
        )
    }

    /// √(N_sim/N_phys), the pump rescale that accompanies g → g√(N/N_sim).
    pub fn pump_rescale(&self) -> f64 {
        (self.n_sim as f64 / self.n_phys).sqrt()
    }
}

/// Draw site positions and radial coupling factors.
///
/// Site indices are uniform over the lattice, radial offsets Gaussian with
/// width σ_th, and couplings carry the √(N_phys/N_sim) rescale exactly once.
/// Identical seeds reproduce the configuration byte-for-byte.
pub fn sample_site_couplings(rng_seed: u64, n_sim: usize, params: &ModelParams) -> SiteConfig {
    assert!(n_sim >= 1);
    let mut rng = keyed_rng(rng_seed, Purpose::SiteCouplings, 0);
    let radial_dist = Normal::new(0.0, 1.0).expect("unit normal");
    let mut lattice_cos = Vec::with_capacity(n_sim);
    let mut lattice_sin = Vec::with_capacity(n_sim);
    let mut radial = Vec::with_capacity(n_sim);
    let mut site_index = Vec::with_capacity(n_sim);
    // ~10³ occupied sites in the experiment; any span ≫ 1 samples the
    // incommensurate phase uniformly.
    const LATTICE_SPAN: u64 = 100_000;
    let k = std::f64::consts::PI * params.lambda_l / params.lambda_c;
    for _ in 0..n_sim {
        let j: u64 = rng.gen_range(0..LATTICE_SPAN);
        let r = params.sigma_th * radial_dist.sample(&mut rng);
        let radial_factor = if params.waist > 0.0 {
            (-(r / params.waist).powi(2)).exp()
        } else {
            1.0
        };
        site_index.push(j);
        lattice_cos.push((k * j as f64).cos());
        lattice_sin.push((k * j as f64).sin());
        radial.push(radial_factor);
    }
    SiteConfig::build(
        lattice_cos,
        lattice_sin,
        radial,
        site_index,
        params.g,
        params.n_atoms as f64,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityMode {
    Adiabatic,
    FullCavity,
}

/// Per-site mean-field equations of motion with stage-switchable drive.
#[derive(Debug, Clone)]
pub struct EnsembleDynamics {
    params: ModelParams,
    sites: SiteConfig,
    mode: CavityMode,
    self_interaction: SelfInteraction,
    /// −Δ/(Δ²+(κ/2)²); χ_kj = chi_scale·g_k·g_j. Zero when interactions are off.
    chi_scale: f64,
    /// Disables all cavity-mediated coupling, including the explicit field
    /// coupling of the full-cavity variant.
    interactions_off: bool,
    /// Per-unit-g drive fields of the current stage: Ω_k = g_k·unit_omega.
    unit_omega: f64,
    unit_omega_prime: f64,
    gamma_coh: f64,
    gamma: f64,
    delta: f64,
}

impl EnsembleDynamics {
    pub fn new(ctx: &BuildContext, mode: CavityMode) -> Result<Self> {
        let sites = ctx.require_sites()?.as_ref().clone();
        Self::with_sites(&ctx.params, sites, mode, &ctx.options)
    }

    pub fn with_sites(
        params: &ModelParams,
        sites: SiteConfig,
        mode: CavityMode,
        options: &EngineOptions,
    ) -> Result<Self> {
        let chi_scale = if options.interactions_off {
            0.0
        } else {
            let d = params.delta_cavity;
            if d == 0.0 {
                return Err(Error::Domain("ensemble model requires Δ ≠ 0".into()));
            }
            -d / (d * d + (0.5 * params.kappa).powi(2))
        };
        Ok(EnsembleDynamics {
            params: params.clone(),
            sites,
            mode,
            self_interaction: options.self_interaction,
            chi_scale,
            interactions_off: options.interactions_off,
            unit_omega: 0.0,
            unit_omega_prime: 0.0,
            gamma_coh: 0.5 * params.gamma + params.gamma_el,
            gamma: params.gamma,
            delta: params.delta_drive,
        })
    }

    pub fn n_sim(&self) -> usize {
        self.sites.n_sim
    }

    pub fn mode(&self) -> CavityMode {
        self.mode
    }

    fn state_len(&self) -> usize {
        3 * self.sites.n_sim
            + if self.mode == CavityMode::FullCavity {
                2
            } else {
                0
            }
    }

    /// S = Σ_j g_j c_j over the state layout [re c | im c | z].
    fn coherence_sum(&self, s: &[f64]) -> C64 {
        let n = self.sites.n_sim;
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..n {
            re += self.sites.g_k[k] * s[k];
            im += self.sites.g_k[k] * s[n + k];
        }
        C64::new(re, im)
    }

    /// Mean-field energy per N/2 of the active convention.
    pub fn energy(&self, s: &[f64]) -> f64 {
        let n = self.sites.n_sim;
        let big_s = self.coherence_sum(s);
        let mut e = 0.0;
        match self.mode {
            CavityMode::Adiabatic => match self.self_interaction {
                SelfInteraction::Exact => {
                    let mut self_sq = 0.0;
                    for k in 0..n {
                        let c2 = s[k] * s[k] + s[n + k] * s[n + k];
                        self_sq += self.sites.g_k[k].powi(2) * c2;
                    }
                    e += self.chi_scale * (big_s.norm_sqr() - self_sq);
                }
                SelfInteraction::Factorized => {
                    e += self.chi_scale * big_s.norm_sqr();
                }
            },
            CavityMode::FullCavity => {
                let beta = C64::new(s[3 * n], s[3 * n + 1]);
                let dd = self.params.delta_cavity - self.params.delta_drive;
                e += dd * beta.norm_sqr();
                for k in 0..n {
                    let c = C64::new(s[k], s[n + k]);
                    e += 2.0 * self.sites.g_k[k] * (beta * c.conj()).re;
                }
            }
        }
        for k in 0..n {
            let gk = self.sites.g_k[k];
            let (x, y, z) = (2.0 * s[k], -2.0 * s[n + k], s[2 * n + k]);
            let omega_k = gk * self.unit_omega;
            let omega_pk = gk * self.unit_omega_prime;
            let delta_k = match (self.mode, self.self_interaction) {
                (CavityMode::Adiabatic, SelfInteraction::Exact) => {
                    self.delta - self.chi_scale * gk * gk
                }
                _ => self.delta,
            };
            e += 0.5 * (omega_k * x + omega_pk * y - delta_k * z);
        }
        e / (0.5 * n as f64)
    }

    /// Largest single-site purity 4|c_k|² + z_k².
    pub fn max_purity(&self, s: &[f64]) -> f64 {
        let n = self.sites.n_sim;
        let mut best = f64::NEG_INFINITY;
        for k in 0..n {
            let p = 4.0 * (s[k] * s[k] + s[n + k] * s[n + k]) + s[2 * n + k] * s[2 * n + k];
            best = best.max(p);
        }
        best
    }
}

impl OdeSystem for EnsembleDynamics {
    fn rhs(&mut self, _t: f64, s: &[f64], ds: &mut [f64]) {
        let n = self.sites.n_sim;
        let big_s = self.coherence_sum(s);
        let (beta, with_field) = match self.mode {
            CavityMode::FullCavity => (
                C64::new(s[3 * n], s[3 * n + 1]),
                !self.interactions_off,
            ),
            CavityMode::Adiabatic => (C64::new(0.0, 0.0), false),
        };
        for k in 0..n {
            let gk = self.sites.g_k[k];
            let c = C64::new(s[k], s[n + k]);
            let z = s[2 * n + k];
            let omega_k = gk * self.unit_omega;
            let omega_pk = gk * self.unit_omega_prime;

            // dc = iδc + (iΩ_k + Ω′_k)/2·z − (γ/2 + γ_el)c + interaction
            let mut dc = C64::new(0.0, self.delta) * c + 0.5 * C64::new(omega_pk, omega_k) * z
                - self.gamma_coh * c;
            // dz = −2Ω_k·Im c − 2Ω′_k·Re c − γ(z+1) + interaction
            let mut dz = -2.0 * omega_k * c.im - 2.0 * omega_pk * c.re - self.gamma * (z + 1.0);

            if with_field {
                // cavity-mediated terms through the fluctuation field
                dc += C64::i() * gk * beta * z;
                dz += -4.0 * gk * (beta.conj() * c).im;
            } else if self.chi_scale != 0.0 {
                match self.self_interaction {
                    SelfInteraction::Exact => {
                        let cross = big_s - gk * c;
                        dc += C64::i() * self.chi_scale * gk * (z * cross - gk * c);
                        dz += 4.0 * self.chi_scale * gk * (c.conj() * big_s).im;
                    }
                    SelfInteraction::Factorized => {
                        dc += C64::i() * self.chi_scale * gk * z * big_s;
                        dz += 4.0 * self.chi_scale * gk * (c.conj() * big_s).im;
                    }
                }
            }

            ds[k] = dc.re;
            ds[n + k] = dc.im;
            ds[2 * n + k] = dz;
        }
        if self.mode == CavityMode::FullCavity {
            let dd = self.params.delta_cavity - self.params.delta_drive;
            let source = if with_field { C64::i() * big_s } else { C64::new(0.0, 0.0) };
            let dbeta = -C64::new(0.5 * self.params.kappa, dd) * beta - source;
            ds[3 * n] = dbeta.re;
            ds[3 * n + 1] = dbeta.im;
        }
    }
}

impl StagedDynamics for EnsembleDynamics {
    fn init_state(&self, init: &InitSpec) -> Result<Vec<f64>> {
        let n = self.sites.n_sim;
        let (x, y, z) = init.bloch_components();
        let mut s = vec![0.0; self.state_len()];
        // c = ⟨σ⁻⟩ = (x − iy)/2 per site
        for k in 0..n {
            s[k] = 0.5 * x;
            s[n + k] = -0.5 * y;
            s[2 * n + k] = z;
        }
        Ok(s)
    }

    fn enter_stage(&mut self, stage: &Stage) -> Result<()> {
        let p = &self.params;
        let (uo, uop) = drive_from_pump(
            1.0,
            p.omega_p * stage.pump_scale * self.sites.pump_rescale(),
            p.phi + stage.pump_phase,
            p.delta_cavity,
            p.delta_drive,
            p.kappa,
        )?;
        self.unit_omega = uo;
        self.unit_omega_prime = uop;
        Ok(())
    }

    fn observe(&self, t: f64, s: &[f64], out: &mut Trajectory) -> Result<()> {
        let n = self.sites.n_sim;
        let inv = 1.0 / n as f64;
        let mut x = 0.0;
        let mut y = 0.0;
        let mut z = 0.0;
        for k in 0..n {
            x += 2.0 * s[k];
            y += -2.0 * s[n + k];
            z += s[2 * n + k];
        }
        out.push(t, x * inv, y * inv, z * inv, self.energy(s));
        let beta = match self.mode {
            CavityMode::FullCavity => C64::new(s[3 * n], s[3 * n + 1]),
            CavityMode::Adiabatic => C64::new(0.0, 0.0),
        };
        out.beta.get_or_insert_with(Vec::new).push(beta);
        out.site_purity_max
            .get_or_insert_with(Vec::new)
            .push(self.max_purity(s));
        Ok(())
    }
}

/// Per-site mean-field engine (either cavity treatment).
pub struct EnsembleEngine {
    dynamics: EnsembleDynamics,
    options: EngineOptions,
}

impl EnsembleEngine {
    pub fn new(ctx: &BuildContext, mode: CavityMode) -> Result<Self> {
        Ok(EnsembleEngine {
            dynamics: EnsembleDynamics::new(ctx, mode)?,
            options: ctx.options.clone(),
        })
    }
}

impl Engine for EnsembleEngine {
    fn name(&self) -> &'static str {
        match self.dynamics.mode {
            CavityMode::Adiabatic => "ensemble-adiabatic",
            CavityMode::FullCavity => "ensemble-full-cavity",
        }
    }

    fn run(&self, schedule: &Schedule, dt_out: f64) -> Result<Trajectory> {
        let mut traj = run_staged(self.dynamics.clone(), schedule, dt_out, &self.options.ode())?;
        traj.n_sim = Some(self.dynamics.sites.n_sim);
        traj.n_phys = Some(self.dynamics.sites.n_phys);
        Ok(traj)
    }
}

pub fn build_adiabatic_engine(ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    Ok(Box::new(EnsembleEngine::new(ctx, CavityMode::Adiabatic)?))
}

pub fn build_full_cavity_engine(ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    Ok(Box::new(EnsembleEngine::new(ctx, CavityMode::FullCavity)?))
}

/// Gaussian atom-number draw for one shot: N(1 + rms·ξ), ξ clamped to ±4σ,
/// result clamped to ≥ 1.
pub fn draw_shot_atom_number(seed: u64, shot: u64, n_mean: f64, fluctuation_rms: f64) -> f64 {
    if fluctuation_rms == 0.0 {
        return n_mean;
    }
    let mut rng = keyed_rng(seed, Purpose::ShotAtomNumber, shot);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let xi: f64 = normal.sample(&mut rng);
    let xi = xi.clamp(-4.0, 4.0);
    (n_mean * (1.0 + fluctuation_rms * xi)).max(1.0)
}
