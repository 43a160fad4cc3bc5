//! Axial-motion extension: harmonic trap levels at every lattice site,
//! level-changing photon couplings, thermal initialization, and the echo
//! protocol that certifies level-changing effects.
//!
//! Each site carries a single-particle density matrix over
//! (trap level 0..n_max) ⊗ (spin ↓,↑). The cavity enters through the
//! classical field α plus the adiabatically-eliminated fluctuation
//! amplitude β = −2Σ g_j^{nm}⟨b†_{m↓}b_{n↑}⟩/[2(Δ−δ) − iκ].

use num_complex::Complex64 as C64;

use crate::engine::{
    run_staged, BuildContext, Engine, EngineOptions, InitSpec, Schedule, Stage, StagedDynamics,
};
use crate::ensemble::SiteConfig;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::linalg::CMat;
use crate::ode::OdeSystem;
use crate::params::{classical_field, thermal_populations, trap_frequency, ModelParams};
use crate::trajectory::Trajectory;

/// Motional overlap matrices η_c^{nm} = ∫cos(k_c x)φ_n φ_m dx and
/// η_s^{nm} = ∫sin(k_c x)φ_n φ_m dx, (n_max+1)² each, symmetric, with the
/// parity selection rules η_c = 0 for odd n+m and η_s = 0 for even n+m.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCouplings {
    pub n_max: usize,
    pub eta_c: Vec<f64>,
    pub eta_s: Vec<f64>,
    /// Lamb-Dicke scale k_c·x₀ with x₀ = √(ħ/mω_T).
    pub lamb_dicke: f64,
}

impl LevelCouplings {
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn eta_c_at(&self, n: usize, m: usize) -> f64 {
        self.eta_c[n * self.levels() + m]
    }

    pub fn eta_s_at(&self, n: usize, m: usize) -> f64 {
        self.eta_s[n * self.levels() + m]
    }

    /// Identity η_c, zero η_s: the frozen-motion limit.
    pub fn frozen(n_max: usize) -> Self {
        let l = n_max + 1;
        let mut eta_c = vec![0.0; l * l];
        for n in 0..l {
            eta_c[n * l + n] = 1.0;
        }
        LevelCouplings {
            n_max,
            eta_c,
            eta_s: vec![0.0; l * l],
            lamb_dicke: 0.0,
        }
    }
}

/// Gauss–Hermite nodes and weights for ∫e^{−x²}f(x)dx (Newton refinement of
/// asymptotic root estimates on the orthonormal Hermite recurrence).
fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => {
                let a = (2 * n + 1) as f64;
                a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // orthonormal Hermite recurrence at z
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Orthonormal Hermite function values h̃_0..h̃_{n_max} at ξ (Gaussian weight
/// folded into the quadrature).
fn hermite_column(n_max: usize, xi: f64, out: &mut [f64]) {
    out[0] = std::f64::consts::PI.powf(-0.25);
    if n_max >= 1 {
        out[1] = xi * 2f64.sqrt() * out[0];
    }
    for j in 1..n_max {
        out[j + 1] = xi * (2.0 / (j as f64 + 1.0)).sqrt() * out[j]
            - (j as f64 / (j as f64 + 1.0)).sqrt() * out[j - 1];
    }
}

/// Closed-form ⟨n|e^{ik_c x}|m⟩ via associated Laguerre polynomials:
/// e^{−η²/2}·√(min!/max!)·(iη)^{|n−m|}·L^{|n−m|}_{min}(η²), η = k_c x₀/√2.
fn displacement_element(n: usize, m: usize, eta: f64) -> C64 {
    let (lo, hi) = if n < m { (n, m) } else { (m, n) };
    let d = hi - lo;
    let eta2 = eta * eta;
    // √(lo!/hi!) = 1/√(Π_{k=lo+1..hi} k)
    let mut fac = 1.0;
    for k in (lo + 1)..=hi {
        fac *= k as f64;
    }
    let ratio = 1.0 / fac.sqrt();
    // associated Laguerre L^d_lo(η²) by upward recurrence
    let alpha = d as f64;
    let mut l_prev = 1.0; // L_0
    let mut l_cur = 1.0 + alpha - eta2; // L_1
    let l_val = if lo == 0 {
        l_prev
    } else if lo == 1 {
        l_cur
    } else {
        let mut v = 0.0;
        for k in 1..lo {
            let kf = k as f64;
            v = ((2.0 * kf + 1.0 + alpha - eta2) * l_cur - (kf + alpha) * l_prev) / (kf + 1.0);
            l_prev = l_cur;
            l_cur = v;
        }
        v
    };
    let magnitude = (-0.5 * eta2).exp() * ratio * eta.powi(d as i32) * l_val;
    // (i)^d phase
    match d % 4 {
        0 => C64::new(magnitude, 0.0),
        1 => C64::new(0.0, magnitude),
        2 => C64::new(-magnitude, 0.0),
        _ => C64::new(0.0, -magnitude),
    }
}

/// Compute the motional overlap matrices by Gauss–Hermite quadrature of
/// order 2·n_max + 32, cross-checked against the closed-form Laguerre
/// expression to 1e−8 (an inconsistency is an internal error).
pub fn eta_coefficients(
    omega_t: f64,
    mass: f64,
    lambda_c: f64,
    n_max: usize,
) -> Result<LevelCouplings> {
    if omega_t <= 0.0 {
        return Err(Error::Domain("eta_coefficients: ω_T must be > 0".into()));
    }
    let x0 = (crate::units::HBAR / (mass * omega_t)).sqrt();
    let k_c = crate::units::TWO_PI / lambda_c;
    let a = k_c * x0; // cos(k_c x) = cos(a ξ) with x = x₀ ξ
    let l = n_max + 1;
    let order = 2 * n_max + 32;
    let (nodes, weights) = gauss_hermite(order);

    let mut eta_c = vec![0.0; l * l];
    let mut eta_s = vec![0.0; l * l];
    let mut col = vec![0.0; l];
    for (xi, wi) in nodes.iter().zip(&weights) {
        hermite_column(n_max, *xi, &mut col);
        let (c, s) = ((a * xi).cos(), (a * xi).sin());
        for n in 0..l {
            for m in n..l {
                let f = wi * col[n] * col[m];
                eta_c[n * l + m] += f * c;
                eta_s[n * l + m] += f * s;
            }
        }
    }
    for n in 0..l {
        for m in 0..n {
            eta_c[n * l + m] = eta_c[m * l + n];
            eta_s[n * l + m] = eta_s[m * l + n];
        }
    }

    // cross-check against the closed form
    let eta_ld = a / 2f64.sqrt();
    let mut worst = 0.0f64;
    for n in 0..l {
        for m in 0..l {
            let exact = displacement_element(n, m, eta_ld);
            worst = worst.max((eta_c[n * l + m] - exact.re).abs());
            worst = worst.max((eta_s[n * l + m] - exact.im).abs());
        }
    }
    if worst > 1e-8 {
        return Err(Error::Inconsistency(format!(
            "Gauss–Hermite vs Laguerre mismatch {worst:.2e} for η matrices (n_max = {n_max})"
        )));
    }
    Ok(LevelCouplings {
        n_max,
        eta_c,
        eta_s,
        lamb_dicke: a,
    })
}

/// Level-resolved coupling matrix of one site:
/// g^{nm}_j = g·cos(kj)·η_c^{nm} + g·sin(kj)·η_s^{nm}.
pub fn level_couplings(
    g: f64,
    lattice_cos: f64,
    lattice_sin: f64,
    eta: &LevelCouplings,
) -> Vec<f64> {
    let l = eta.levels();
    let mut out = vec![0.0; l * l];
    for i in 0..l * l {
        out[i] = g * (lattice_cos * eta.eta_c[i] + lattice_sin * eta.eta_s[i]);
    }
    out
}

/// Per-site density matrices over (trap level ⊗ spin) driven by the
/// classical field plus the eliminated cavity fluctuation.
///
/// Basis index within a site: d = σ·L + n with σ ∈ {0 = ↓, 1 = ↑} and
/// L = n_max + 1 trap levels.
#[derive(Debug, Clone)]
pub struct MotionDynamics {
    params: ModelParams,
    sites: SiteConfig,
    eta: LevelCouplings,
    omega_t: f64,
    /// Per-site coupling matrices G_j (L², row-major), including radial and
    /// √(N/N_sim) factors.
    g_site: Vec<Vec<f64>>,
    /// Thermal occupations for initialization.
    occupations: Vec<f64>,
    /// Classical intracavity field of the current stage.
    alpha: C64,
    delta: f64,
    gamma: f64,
    gamma_el: f64,
    /// β feedback on/off (single-particle mode when off).
    interactions_on: bool,
    /// −2/[2(Δ−δ) − iκ] prefactor of the adiabatic β.
    beta_prefactor: C64,
    trace_tol: f64,
    /// Validate Hermiticity/positivity at every sample (tests).
    validate: bool,
}

impl MotionDynamics {
    pub fn new(ctx: &BuildContext) -> Result<Self> {
        let p = &ctx.params;
        let trap = p.trap.ok_or_else(|| {
            Error::Config("motion model requires trap parameters (trap_freq_hz)".into())
        })?;
        let sites = ctx.require_sites()?.as_ref().clone();
        let omega_t = trap_frequency(trap.v0, trap.recoil_k, trap.mass)?;
        let eta = eta_coefficients(omega_t, trap.mass, p.lambda_c, trap.n_max)?;
        let (occupations, _lost) = thermal_populations(
            if ctx.options.thermal_init {
                p.temperature
            } else {
                0.0
            },
            omega_t,
            trap.n_max,
        )?;
        let rescale = (sites.n_phys / sites.n_sim as f64).sqrt();
        let g_site: Vec<Vec<f64>> = (0..sites.n_sim)
            .map(|j| {
                level_couplings(
                    p.g * rescale * sites.radial[j],
                    sites.lattice_cos[j],
                    sites.lattice_sin[j],
                    &eta,
                )
            })
            .collect();
        let dd = p.delta_cavity - p.delta_drive;
        if dd == 0.0 && p.kappa == 0.0 {
            return Err(Error::Domain(
                "motion model: resonant pump with zero linewidth".into(),
            ));
        }
        Ok(MotionDynamics {
            params: p.clone(),
            sites,
            eta,
            omega_t,
            g_site,
            occupations,
            alpha: C64::new(0.0, 0.0),
            delta: p.delta_drive,
            gamma: p.gamma,
            gamma_el: p.gamma_el,
            interactions_on: !ctx.options.interactions_off,
            beta_prefactor: -2.0 / C64::new(2.0 * dd, -p.kappa),
            trace_tol: ctx.options.trace_tol,
            validate: ctx.options.validate,
        })
    }

    pub fn levels(&self) -> usize {
        self.eta.levels()
    }

    fn site_dim(&self) -> usize {
        2 * self.levels()
    }

    fn state_len(&self) -> usize {
        2 * self.sites.n_sim * self.site_dim() * self.site_dim()
    }

    pub fn trap_frequency(&self) -> f64 {
        self.omega_t
    }

    /// S_j = Σ_nm G_j[n,m]·ρ_j[(↑,n),(↓,m)], then
    /// β = beta_prefactor·Σ_j S_j.
    fn beta(&self, s: &[f64]) -> C64 {
        if !self.interactions_on {
            return C64::new(0.0, 0.0);
        }
        let l = self.levels();
        let d = self.site_dim();
        let mut total = C64::new(0.0, 0.0);
        for j in 0..self.sites.n_sim {
            let base = 2 * j * d * d;
            let g = &self.g_site[j];
            let mut sj = C64::new(0.0, 0.0);
            for n in 0..l {
                for m in 0..l {
                    let idx = base + 2 * ((l + n) * d + m);
                    sj += g[n * l + m] * C64::new(s[idx], s[idx + 1]);
                }
            }
            total += sj;
        }
        self.beta_prefactor * total
    }
}

impl OdeSystem for MotionDynamics {
    fn rhs(&mut self, _t: f64, s: &[f64], ds: &mut [f64]) {
        let l = self.levels();
        let d = self.site_dim();
        let dd = d * d;
        let field = self.alpha + self.beta(s);
        let mut h = vec![C64::new(0.0, 0.0); dd];
        let mut rho = vec![C64::new(0.0, 0.0); dd];
        let mut m = vec![C64::new(0.0, 0.0); dd];

        for j in 0..self.sites.n_sim {
            let base = 2 * j * dd;
            let g = &self.g_site[j];

            // h = ω_T n̂⊗1 − (δ/2)σᶻ + Σ g^{nm}[A|↑n⟩⟨↓m| + h.c.]
            for v in h.iter_mut() {
                *v = C64::new(0.0, 0.0);
            }
            for n in 0..l {
                h[n * d + n] = C64::new(n as f64 * self.omega_t + 0.5 * self.delta, 0.0);
                h[(l + n) * d + (l + n)] =
                    C64::new(n as f64 * self.omega_t - 0.5 * self.delta, 0.0);
                for mm in 0..l {
                    let coupling = field * g[n * l + mm];
                    h[(l + n) * d + mm] = coupling;
                    h[mm * d + (l + n)] = coupling.conj();
                }
            }
            for (k, v) in rho.iter_mut().enumerate() {
                *v = C64::new(s[base + 2 * k], s[base + 2 * k + 1]);
            }
            // M = h·ρ; coherent part = −i(M − M†)
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for q in 0..d {
                        acc += h[r * d + q] * rho[q * d + c];
                    }
                    m[r * d + c] = acc;
                }
            }
            for r in 0..d {
                for c in 0..d {
                    let mut v = C64::new(0.0, -1.0) * (m[r * d + c] - m[c * d + r].conj());
                    // spin dephasing: spin-off-diagonal blocks decay at γ_el
                    let spin_r = r / l;
                    let spin_c = c / l;
                    if spin_r != spin_c {
                        v -= self.gamma_el * rho[r * d + c];
                        // spontaneous emission halves coherences
                        v -= 0.5 * self.gamma * rho[r * d + c];
                    } else if spin_r == 1 {
                        // ↑↑ block decays at γ
                        v -= self.gamma * rho[r * d + c];
                    } else {
                        // ↓↓ block gains the emitted population (level kept)
                        v += self.gamma * rho[(l + r % l) * d + (l + c % l)];
                    }
                    ds[base + 2 * (r * d + c)] = v.re;
                    ds[base + 2 * (r * d + c) + 1] = v.im;
                }
            }
        }
    }
}

impl StagedDynamics for MotionDynamics {
    fn init_state(&self, init: &InitSpec) -> Result<Vec<f64>> {
        let l = self.levels();
        let d = self.site_dim();
        let (x, y, z) = init.bloch_components();
        // spin density matrix entries: ρ_↓↓ = (1−z)/2, ρ_↑↑ = (1+z)/2,
        // ρ_↑↓ = (x − iy)/2
        let dn = 0.5 * (1.0 - z);
        let up = 0.5 * (1.0 + z);
        let coh = C64::new(0.5 * x, -0.5 * y);
        let mut s = vec![0.0; self.state_len()];
        for j in 0..self.sites.n_sim {
            let base = 2 * j * d * d;
            for n in 0..l {
                let p = self.occupations[n];
                s[base + 2 * (n * d + n)] = p * dn;
                s[base + 2 * ((l + n) * d + (l + n))] = p * up;
                let idx_up_dn = base + 2 * ((l + n) * d + n);
                s[idx_up_dn] = p * coh.re;
                s[idx_up_dn + 1] = p * coh.im;
                let idx_dn_up = base + 2 * (n * d + (l + n));
                s[idx_dn_up] = p * coh.re;
                s[idx_dn_up + 1] = -p * coh.im;
            }
        }
        Ok(s)
    }

    fn enter_stage(&mut self, stage: &Stage) -> Result<()> {
        let p = &self.params;
        let pump = C64::from_polar(
            p.omega_p * stage.pump_scale * self.sites.pump_rescale(),
            p.phi + stage.pump_phase,
        );
        self.alpha = classical_field(pump, p.delta_cavity, p.delta_drive, p.kappa)?;
        Ok(())
    }

    fn observe(&self, t: f64, s: &[f64], out: &mut Trajectory) -> Result<()> {
        let l = self.levels();
        let d = self.site_dim();
        let n_sites = self.sites.n_sim;
        let inv = 1.0 / n_sites as f64;
        let mut x = 0.0;
        let mut y = 0.0;
        let mut z = 0.0;
        let mut energy = 0.0;
        for j in 0..n_sites {
            let base = 2 * j * d * d;
            let mut up = 0.0;
            let mut dn = 0.0;
            let mut coh = C64::new(0.0, 0.0); // ⟨σ⁻⟩ = Σ_n ρ[(↑n),(↓n)]
            for n in 0..l {
                dn += s[base + 2 * (n * d + n)];
                up += s[base + 2 * ((l + n) * d + (l + n))];
                let idx = base + 2 * ((l + n) * d + n);
                coh += C64::new(s[idx], s[idx + 1]);
                energy += n as f64 * self.omega_t
                    * (s[base + 2 * (n * d + n)] + s[base + 2 * ((l + n) * d + (l + n))]);
            }
            let trace = up + dn;
            if (trace - 1.0).abs() > self.trace_tol {
                return Err(Error::Integration {
                    t,
                    reason: format!("site {j} trace drifted to {trace}"),
                    last_state: Vec::new(),
                });
            }
            if self.validate {
                let mut rho = CMat::zeros(d, d);
                for r in 0..d {
                    for c in 0..d {
                        let idx = base + 2 * (r * d + c);
                        rho[(r, c)] = C64::new(s[idx], s[idx + 1]);
                        let jdx = base + 2 * (c * d + r);
                        let herm_err =
                            (C64::new(s[idx], s[idx + 1]) - C64::new(s[jdx], -s[jdx + 1])).norm();
                        if herm_err > 1e-8 {
                            return Err(Error::Inconsistency(format!(
                                "site {j} density matrix not Hermitian ({herm_err:.1e})"
                            )));
                        }
                    }
                }
                let eigs = hermitian_eigenvalues(&rho);
                if eigs[0] < -1e-9 {
                    return Err(Error::Inconsistency(format!(
                        "site {j} density matrix has negative eigenvalue {:.2e}",
                        eigs[0]
                    )));
                }
            }
            z += up - dn;
            x += 2.0 * coh.re;
            y += -2.0 * coh.im;
        }
        let beta = self.beta(s);
        out.push(t, x * inv, y * inv, z * inv, energy * inv / 0.5);
        out.beta.get_or_insert_with(Vec::new).push(beta);
        Ok(())
    }
}

/// Axial-motion engine.
pub struct MotionEngine {
    dynamics: MotionDynamics,
    options: EngineOptions,
}

impl MotionEngine {
    pub fn new(ctx: &BuildContext) -> Result<Self> {
        Ok(MotionEngine {
            dynamics: MotionDynamics::new(ctx)?,
            options: ctx.options.clone(),
        })
    }

    /// Spin-up population plus |β|² (excitation bookkeeping diagnostic).
    pub fn dynamics(&self) -> &MotionDynamics {
        &self.dynamics
    }
}

impl Engine for MotionEngine {
    fn name(&self) -> &'static str {
        "motion"
    }

    fn run(&self, schedule: &Schedule, dt_out: f64) -> Result<Trajectory> {
        let mut traj = run_staged(self.dynamics.clone(), schedule, dt_out, &self.options.ode())?;
        traj.n_sim = Some(self.dynamics.sites.n_sim);
        traj.n_phys = Some(self.dynamics.sites.n_phys);
        Ok(traj)
    }
}

pub fn build_engine(ctx: &BuildContext) -> Result<Box<dyn Engine>> {
    Ok(Box::new(MotionEngine::new(ctx)?))
}

/// Run the echo protocol on any engine: evolve t_echo with the pump on,
/// flip the pump phase by π (Ω_p → −Ω_p), evolve another t_echo, and report
/// the normalized inversion at 2·t_echo.
pub fn run_echo(engine: &dyn Engine, t_echo: f64, dt_out: f64) -> Result<f64> {
    if t_echo < 0.0 {
        return Err(Error::Range("t_echo must be ≥ 0".into()));
    }
    if t_echo == 0.0 {
        return Ok(-1.0); // no evolution at all
    }
    let traj = engine.run(&Schedule::echo(t_echo), dt_out)?;
    traj.z
        .last()
        .copied()
        .ok_or_else(|| Error::Range("echo trajectory is empty".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{params_from_targets, sr88_mass, TrapParams};
    use crate::units::{HBAR, TWO_PI};
    use std::sync::Arc;

    fn eta_for(ld_target: f64, n_max: usize) -> LevelCouplings {
        // choose ω_T so that k_c·x₀ hits the requested Lamb-Dicke scale
        let lambda_c = 689e-9;
        let k_c = TWO_PI / lambda_c;
        let mass = sr88_mass();
        let omega_t = HBAR * k_c * k_c / (mass * ld_target * ld_target);
        eta_coefficients(omega_t, mass, lambda_c, n_max).unwrap()
    }

    #[test]
    fn eta_ground_state_matches_gaussian() {
        // η_c^{00} = exp(−(k_c x₀)²/4)
        let mass = sr88_mass();
        let omega_t = TWO_PI * 200e3;
        let eta = eta_coefficients(omega_t, mass, 689e-9, 10).unwrap();
        let x0 = (HBAR / (mass * omega_t)).sqrt();
        let k_c = TWO_PI / 689e-9;
        let expect = (-(k_c * x0).powi(2) / 4.0).exp();
        assert!(
            (eta.eta_c_at(0, 0) - expect).abs() < 1e-12,
            "{} vs {expect}",
            eta.eta_c_at(0, 0)
        );
    }

    #[test]
    fn eta_parity_selection_rules() {
        let eta = eta_for(0.4, 8);
        for n in 0..=8usize {
            for m in 0..=8usize {
                if (n + m) % 2 == 1 {
                    assert!(eta.eta_c_at(n, m).abs() < 1e-12);
                } else {
                    assert!(eta.eta_s_at(n, m).abs() < 1e-12);
                }
                // symmetry
                assert_eq!(eta.eta_c_at(n, m), eta.eta_c_at(m, n));
                assert_eq!(eta.eta_s_at(n, m), eta.eta_s_at(m, n));
            }
        }
    }

    #[test]
    fn eta_frozen_motion_limit() {
        // k_c → 0: η_c → identity, η_s → 0 (realized by a huge trap frequency)
        let eta = eta_for(1e-10, 6);
        for n in 0..=6usize {
            for m in 0..=6usize {
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((eta.eta_c_at(n, m) - expect).abs() < 1e-9);
                assert!(eta.eta_s_at(n, m).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eta_offdiagonal_grows_with_lamb_dicke() {
        // Level-changing coupling weight of the retained levels (rows
        // n ≤ 6, evaluated inside a deeper block so truncation leakage
        // cannot mask the growth) increases monotonically on k_c·x₀ ∈ [0, 1].
        let keep = 6;
        let mut prev = -1.0;
        for i in 1..=10 {
            let ld = 0.1 * i as f64;
            let eta = eta_for(ld, 14);
            let l = eta.levels();
            let mut fro = 0.0;
            for n in 0..=keep {
                for m in 0..l {
                    if n != m {
                        fro += eta.eta_c_at(n, m).powi(2) + eta.eta_s_at(n, m).powi(2);
                    }
                }
            }
            let fro = fro.sqrt();
            assert!(fro > prev, "ld={ld}: {fro} vs prev {prev}");
            prev = fro;
        }
    }

    #[test]
    fn level_couplings_limits() {
        let eta = eta_for(0.3, 4);
        let g = 2.0;
        // antinode: g_nm = g·η_c
        let at_antinode = level_couplings(g, 1.0, 0.0, &eta);
        for (v, e) in at_antinode.iter().zip(&eta.eta_c) {
            assert!((v - g * e).abs() < 1e-14);
        }
        // frozen motion: reduces to the scalar profile
        let frozen = LevelCouplings::frozen(4);
        let gm = level_couplings(g, 0.6, 0.8, &frozen);
        for n in 0..5usize {
            for m in 0..5usize {
                let expect = if n == m { g * 0.6 } else { 0.0 };
                assert!((gm[n * 5 + m] - expect).abs() < 1e-14);
            }
        }
    }

    fn motion_ctx(
        omega_ratio: f64,
        n_sim: usize,
        n_max: usize,
        interactions: bool,
        thermal: bool,
    ) -> BuildContext {
        motion_ctx_kappa(omega_ratio, n_sim, n_max, interactions, thermal, 153e3)
    }

    fn motion_ctx_kappa(
        omega_ratio: f64,
        n_sim: usize,
        n_max: usize,
        interactions: bool,
        thermal: bool,
        kappa_hz: f64,
    ) -> BuildContext {
        let mut p = params_from_targets(
            950_000,
            -2.26e6,
            omega_ratio,
            0.0,
            50e6,
            kappa_hz,
            0.0,
            0.0,
        )
        .unwrap();
        p.trap = Some(TrapParams::from_trap_frequency_hz(
            200e3,
            p.lambda_l,
            sr88_mass(),
            n_max,
        ));
        let mut opts = EngineOptions::default();
        opts.interactions_off = !interactions;
        opts.thermal_init = thermal;
        opts.rtol = 1e-9;
        opts.atol = 1e-11;
        let sites = Arc::new(crate::ensemble::sample_site_couplings(21, n_sim, &p));
        BuildContext::new(p, opts).with_sites(sites)
    }

    #[test]
    fn stationary_without_drive() {
        // drive off, thermal diagonal start → state stationary
        let mut ctx = motion_ctx(0.0, 3, 4, true, true);
        ctx.params.omega_p = 0.0;
        ctx.params.hz.omega_p_hz = 0.0;
        let engine = MotionEngine::new(&ctx).unwrap();
        let traj = engine.run(&Schedule::quench(2e-6), 1e-7).unwrap();
        for i in 0..traj.len() {
            assert!((traj.z[i] + 1.0).abs() < 1e-9);
            assert!(traj.x[i].abs() < 1e-12 && traj.y[i].abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_motion_matches_ensemble_factorized() {
        // η_c = I: each trap level evolves like a bare spin, so the motion
        // model must match the per-site ensemble with the factorized
        // self-pair convention (β sums over every site including itself).
        // κ = 0: the adiabatic β is then purely dispersive and matches the
        // ensemble's χ couplings exactly (at κ > 0 it additionally carries
        // the cavity-decay-induced collective dissipation that the
        // eliminated spin model drops).
        let n_sim = 12;
        let mut ctx = motion_ctx_kappa(0.4, n_sim, 3, true, true, 0.0);
        // freeze motion by hand
        let mut dynamics = MotionDynamics::new(&ctx).unwrap();
        let frozen = LevelCouplings::frozen(3);
        let rescale = (dynamics.sites.n_phys / dynamics.sites.n_sim as f64).sqrt();
        dynamics.eta = frozen.clone();
        for j in 0..n_sim {
            dynamics.g_site[j] = level_couplings(
                ctx.params.g * rescale * dynamics.sites.radial[j],
                dynamics.sites.lattice_cos[j],
                dynamics.sites.lattice_sin[j],
                &frozen,
            );
        }
        let motion_traj = run_staged(
            dynamics,
            &Schedule::quench(3e-6),
            5e-8,
            &crate::ode::OdeOptions::with_tol(1e-11, 1e-13),
        )
        .unwrap();

        ctx.options.self_interaction = crate::engine::SelfInteraction::Factorized;
        ctx.options.rtol = 1e-11;
        ctx.options.atol = 1e-13;
        let ens = crate::ensemble::EnsembleEngine::new(&ctx, crate::ensemble::CavityMode::Adiabatic)
            .unwrap();
        let ens_traj = ens.run(&Schedule::quench(3e-6), 5e-8).unwrap();
        for i in 0..motion_traj.len() {
            assert!(
                (motion_traj.z[i] - ens_traj.z[i]).abs() < 1e-6,
                "i={i}: motion {} vs ensemble {}",
                motion_traj.z[i],
                ens_traj.z[i]
            );
            assert!((motion_traj.x[i] - ens_traj.x[i]).abs() < 1e-6);
        }
    }

    fn freeze(dynamics: &mut MotionDynamics, g: f64) {
        let frozen = LevelCouplings::frozen(dynamics.eta.n_max);
        let rescale = (dynamics.sites.n_phys / dynamics.sites.n_sim as f64).sqrt();
        for j in 0..dynamics.sites.n_sim {
            dynamics.g_site[j] = level_couplings(
                g * rescale * dynamics.sites.radial[j],
                dynamics.sites.lattice_cos[j],
                dynamics.sites.lattice_sin[j],
                &frozen,
            );
        }
        dynamics.eta = frozen;
    }

    #[test]
    fn echo_revives_exactly_without_level_changes() {
        // Frozen motion, interactions and decoherence off: flipping the pump
        // phase time-reverses the drive exactly, so ⟨Ĵz⟩(2t_echo) = −1
        // whatever t_echo. The trap term survives the flip but commutes when
        // no level changes occur.
        let ctx = motion_ctx(0.9, 4, 2, false, true);
        let mut dynamics = MotionDynamics::new(&ctx).unwrap();
        freeze(&mut dynamics, ctx.params.g);
        for t_echo in [0.3e-6, 0.85e-6] {
            let traj = run_staged(
                dynamics.clone(),
                &Schedule::echo(t_echo),
                t_echo / 20.0,
                &crate::ode::OdeOptions::with_tol(1e-11, 1e-13),
            )
            .unwrap();
            let revival = *traj.z.last().unwrap();
            assert!(
                (revival + 1.0).abs() < 1e-6,
                "t_echo={t_echo}: revival {revival}"
            );
        }
        // t_echo = 0 short-circuits to −1
        let engine = MotionEngine::new(&ctx).unwrap();
        assert_eq!(run_echo(&engine, 0.0, 1e-8).unwrap(), -1.0);
    }

    #[test]
    fn echo_degrades_with_level_changes() {
        // With real level-changing couplings at Ω ≫ ω_T the revival is
        // imperfect and worsens with t_echo.
        let ctx = motion_ctx(0.94, 6, 8, false, true);
        let engine = MotionEngine::new(&ctx).unwrap();
        let r1 = run_echo(&engine, 0.5e-6, 2.5e-8).unwrap();
        let r2 = run_echo(&engine, 2.0e-6, 5e-8).unwrap();
        assert!(r1 > -1.0 + 1e-4, "short echo unexpectedly perfect: {r1}");
        assert!(r2 > r1, "revival did not degrade: {r1} vs {r2}");
    }
}
