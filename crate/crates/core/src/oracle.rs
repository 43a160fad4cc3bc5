//! Exact quantum reference evolutions at small scale. These anchor every
//! mean-field approximation in the crate: the Dicke-basis evolution checks
//! the collective model, small Lindblad master equations check the per-site
//! decoherence coefficients and the cavity elimination.

use num_complex::Complex64 as C64;

use crate::bloch::{separatrix_classify, SeparatrixVerdict};
use crate::error::{Error, Result};
use crate::linalg::{expm, krylov_propagate, CMat};
use crate::ode::{integrate_sampled, OdeOptions, OdeSystem};

/// State in the fully symmetric (Dicke) manifold |J = N/2, m⟩,
/// m = −J..J, indexed k = m + J.
#[derive(Debug, Clone)]
pub struct DickeState {
    pub amplitudes: Vec<C64>,
}

impl DickeState {
    /// All spins down: m = −J.
    pub fn south_pole(n_atoms: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_atoms + 1];
        amplitudes[0] = C64::new(1.0, 0.0);
        DickeState { amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Tridiagonal Dicke-manifold Hamiltonian
/// H = χ J⁺J⁻ + Ω Jx + Ω′ Jy − δ Jz.
struct DickeHamiltonian {
    /// Diagonal χ(J+m)(J−m+1) − δm.
    diag: Vec<f64>,
    /// ⟨m+1|H|m⟩ = (Ω − iΩ′)/2·√((J−m)(J+m+1)).
    lower: Vec<C64>,
}

impl DickeHamiltonian {
    fn new(n_atoms: usize, chi: f64, omega: f64, omega_prime: f64, delta: f64) -> Self {
        let j = 0.5 * n_atoms as f64;
        let dim = n_atoms + 1;
        let mut diag = Vec::with_capacity(dim);
        let mut lower = Vec::with_capacity(dim - 1);
        for k in 0..dim {
            let m = k as f64 - j;
            diag.push(chi * (j + m) * (j - m + 1.0) - delta * m);
            if k + 1 < dim {
                let s = ((j - m) * (j + m + 1.0)).sqrt();
                lower.push(0.5 * C64::new(omega, -omega_prime) * s);
            }
        }
        DickeHamiltonian { diag, lower }
    }

    fn matvec(&self, v: &[C64], out: &mut [C64]) {
        let n = v.len();
        for k in 0..n {
            let mut acc = self.diag[k] * v[k];
            if k > 0 {
                acc += self.lower[k - 1] * v[k - 1];
            }
            if k + 1 < n {
                acc += self.lower[k].conj() * v[k + 1];
            }
            out[k] = acc;
        }
    }

    fn dense(&self) -> CMat {
        let n = self.diag.len();
        let mut h = CMat::zeros(n, n);
        for k in 0..n {
            h[(k, k)] = C64::new(self.diag[k], 0.0);
            if k + 1 < n {
                h[(k + 1, k)] = self.lower[k];
                h[(k, k + 1)] = self.lower[k].conj();
            }
        }
        h
    }

    fn freq_scale(&self) -> f64 {
        let mut best = 0.0f64;
        for k in 0..self.diag.len() {
            let mut s = self.diag[k].abs();
            if k > 0 {
                s += self.lower[k - 1].norm();
            }
            if k + 1 < self.diag.len() {
                s += self.lower[k].norm();
            }
            best = best.max(s);
        }
        best
    }
}

/// Collective observables of an exact Dicke-manifold evolution.
#[derive(Debug, Clone)]
pub struct DickeEvolution {
    pub t: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub jz: Vec<f64>,
    /// ⟨H⟩ (rad/s).
    pub energy: Vec<f64>,
}

fn dicke_observables(state: &[C64], j: f64, h: &DickeHamiltonian) -> (f64, f64, f64, f64) {
    let n = state.len();
    let mut jz = 0.0;
    let mut jplus = C64::new(0.0, 0.0);
    for k in 0..n {
        let m = k as f64 - j;
        jz += m * state[k].norm_sqr();
        if k + 1 < n {
            let s = ((j - m) * (j + m + 1.0)).sqrt();
            jplus += state[k + 1].conj() * state[k] * s;
        }
    }
    let mut hv = vec![C64::new(0.0, 0.0); n];
    h.matvec(state, &mut hv);
    let energy: f64 = state
        .iter()
        .zip(&hv)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    (jplus.re, jplus.im, jz, energy)
}

/// Unitary evolution of the collective XY model in the (N+1)-dimensional
/// symmetric manifold. Dimensions up to 512 are propagated with a dense
/// matrix exponential per grid step; larger ones with Lanczos stepping.
pub fn dicke_exact_evolve(
    n_atoms: usize,
    chi: f64,
    omega: f64,
    omega_prime: f64,
    delta: f64,
    initial: &DickeState,
    t_grid: &[f64],
) -> Result<DickeEvolution> {
    dicke_exact_evolve_with(
        n_atoms,
        chi,
        omega,
        omega_prime,
        delta,
        initial,
        t_grid,
        512,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn dicke_exact_evolve_with(
    n_atoms: usize,
    chi: f64,
    omega: f64,
    omega_prime: f64,
    delta: f64,
    initial: &DickeState,
    t_grid: &[f64],
    expm_dim_cap: usize,
) -> Result<DickeEvolution> {
    if n_atoms > 10_000 {
        return Err(Error::Dimension(format!(
            "Dicke evolution limited to N ≤ 10⁴ (requested N = {n_atoms}, state dimension {})",
            n_atoms + 1
        )));
    }
    let dim = n_atoms + 1;
    if initial.amplitudes.len() != dim {
        return Err(Error::Range(
            "initial state dimension does not match N".into(),
        ));
    }
    let j = 0.5 * n_atoms as f64;
    let h = DickeHamiltonian::new(n_atoms, chi, omega, omega_prime, delta);
    let mut out = DickeEvolution {
        t: Vec::with_capacity(t_grid.len()),
        jx: Vec::with_capacity(t_grid.len()),
        jy: Vec::with_capacity(t_grid.len()),
        jz: Vec::with_capacity(t_grid.len()),
        energy: Vec::with_capacity(t_grid.len()),
    };
    let mut state = initial.amplitudes.clone();
    let mut t_now = 0.0;
    let use_expm = dim <= expm_dim_cap;

    let mut cached_dt = f64::NAN;
    let mut cached_u: Option<CMat> = None;
    let freq = h.freq_scale();

    for &t in t_grid {
        let dt = t - t_now;
        if dt < 0.0 {
            return Err(Error::Range("t_grid must be non-decreasing".into()));
        }
        if dt > 0.0 {
            if use_expm {
                if cached_u.is_none() || dt.to_bits() != cached_dt.to_bits() {
                    let mut gen = h.dense();
                    gen.scale(C64::new(0.0, -dt));
                    cached_u = Some(expm(&gen)?);
                    cached_dt = dt;
                }
                let u = cached_u.as_ref().unwrap();
                let mut next = vec![C64::new(0.0, 0.0); dim];
                u.matvec(&state, &mut next);
                state = next;
            } else {
                let mut apply = |x: &[C64], y: &mut [C64]| h.matvec(x, y);
                state = krylov_propagate(&mut apply, &state, dt, freq, 48)?;
            }
            t_now = t;
        }
        let (jx, jy, jz, energy) = dicke_observables(&state, j, &h);
        out.t.push(t);
        out.jx.push(jx);
        out.jy.push(jy);
        out.jz.push(jz);
        out.energy.push(energy);
    }
    Ok(out)
}

/// Analytic basin label for a spherical-angle initial condition
/// (θ measured from +z, φ from the drive axis). Ground truth for basin maps.
pub fn basin_boundary_exact(
    n_atoms: f64,
    chi: f64,
    omega_drive: f64,
    delta: f64,
    theta0: f64,
    phi0: f64,
) -> Result<SeparatrixVerdict> {
    let half_n = 0.5 * n_atoms;
    let x = half_n * theta0.sin() * phi0.cos();
    let y = half_n * theta0.sin() * phi0.sin();
    let z = half_n * theta0.cos();
    separatrix_classify(x, y, z, chi, omega_drive, delta, n_atoms)
}


// ---------------------------------------------------------------------------
// Lindblad master equation on a small Hilbert space
// ---------------------------------------------------------------------------

/// Hilbert space of `n_spins` two-level atoms, optionally ⊗ a cavity mode
/// truncated at `n_ph` Fock states (0 = no cavity). Spin k occupies bit k of
/// the spin index (bit set = ↑); the photon number is the fastest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    pub n_spins: usize,
    pub n_ph: usize,
}

impl HilbertSpace {
    pub fn spins(n_spins: usize) -> Result<Self> {
        let s = HilbertSpace { n_spins, n_ph: 0 };
        s.check()?;
        Ok(s)
    }

    pub fn spins_with_cavity(n_spins: usize, n_ph: usize) -> Result<Self> {
        let s = HilbertSpace { n_spins, n_ph };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let dim = self.dim();
        let cap = if self.n_ph > 0 {
            64 * self.n_ph // 2⁶ spins ⊗ photons
        } else {
            1024 // 2¹⁰
        };
        if dim > cap {
            return Err(Error::Dimension(format!(
                "Hilbert dimension {dim} exceeds the exact-solver cap {cap}; \
                 a density matrix at this size needs {:.1} MiB and O(dim³) per step",
                (dim * dim * 16) as f64 / (1024.0 * 1024.0)
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.n_ph.max(1)
    }

    pub fn dim(&self) -> usize {
        (1usize << self.n_spins) * self.levels()
    }

    fn spin_bit(&self, idx: usize, site: usize) -> bool {
        ((idx / self.levels()) >> site) & 1 == 1
    }

    fn flip_up(&self, idx: usize, site: usize) -> usize {
        idx + (1 << site) * self.levels()
    }

    /// Dense single-site operator embedded in the full space.
    fn embed_spin_op(&self, site: usize, op: [[C64; 2]; 2]) -> CMat {
        let dim = self.dim();
        CMat::from_fn(dim, dim, |i, j| {
            // all other coordinates must match
            let (si, mi) = (i / self.levels(), i % self.levels());
            let (sj, mj) = (j / self.levels(), j % self.levels());
            if mi != mj || (si ^ sj) & !(1 << site) != 0 {
                return C64::new(0.0, 0.0);
            }
            let bi = (si >> site) & 1;
            let bj = (sj >> site) & 1;
            op[bi][bj]
        })
    }

    pub fn sigma_minus(&self, site: usize) -> CMat {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        // σ⁻ = |↓⟩⟨↑|: row ↓(0), col ↑(1)
        self.embed_spin_op(site, [[z, o], [z, z]])
    }

    pub fn sigma_plus(&self, site: usize) -> CMat {
        self.sigma_minus(site).adjoint()
    }

    pub fn sigma_x(&self, site: usize) -> CMat {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        self.embed_spin_op(site, [[z, o], [o, z]])
    }

    pub fn sigma_y(&self, site: usize) -> CMat {
        // basis order (↓, ↑): ⟨↓|σʸ|↑⟩ = i, ⟨↑|σʸ|↓⟩ = −i
        let z = C64::new(0.0, 0.0);
        self.embed_spin_op(site, [[z, C64::new(0.0, 1.0)], [C64::new(0.0, -1.0), z]])
    }

    pub fn sigma_z(&self, site: usize) -> CMat {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        self.embed_spin_op(site, [[-o, z], [z, o]])
    }

    /// Cavity annihilation operator (requires a cavity).
    pub fn annihilation(&self) -> Result<CMat> {
        if self.n_ph == 0 {
            return Err(Error::Config("space has no cavity mode".into()));
        }
        let dim = self.dim();
        let l = self.levels();
        let mut a = CMat::zeros(dim, dim);
        for s in 0..(1usize << self.n_spins) {
            for m in 1..l {
                a[(s * l + m - 1, s * l + m)] = C64::new((m as f64).sqrt(), 0.0);
            }
        }
        Ok(a)
    }

    pub fn number_op(&self) -> Result<CMat> {
        let a = self.annihilation()?;
        Ok(a.adjoint().matmul(&a))
    }

    /// Product state: every spin at Bloch point (x, y, z), cavity (if any)
    /// in vacuum. Returns a density matrix.
    pub fn product_state(&self, x: f64, y: f64, z: f64) -> CMat {
        // single-spin density matrix: ρ = (I + xσˣ + yσʸ + zσᶻ)/2
        let up = C64::new(0.5 * (1.0 + z), 0.0);
        let dn = C64::new(0.5 * (1.0 - z), 0.0);
        let coh = C64::new(0.5 * x, -0.5 * y); // ⟨↑|ρ|↓⟩ = (x − iy)/2 = ⟨σ⁻⟩
        let single = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => dn,
            (1, 1) => up,
            (1, 0) => coh,
            (0, 1) => coh.conj(),
            _ => unreachable!(),
        });
        // spin index bit k with our packing: site 0 is the least significant
        // bit, photon fastest; build by kron over spins then photon vacuum
        let mut rho = CMat::eye(1);
        for _ in 0..self.n_spins {
            rho = single.kron(&rho);
        }
        if self.n_ph > 0 {
            let mut vac = CMat::zeros(self.levels(), self.levels());
            vac[(0, 0)] = C64::new(1.0, 0.0);
            rho = rho.kron(&vac);
        }
        rho
    }
}

/// Decoherence channels with their rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpOp {
    /// Spontaneous emission: γ·D[σ⁻_site].
    SpinLower { site: usize, rate: f64 },
    /// Elastic dephasing: (γ_el/2)·(σᶻρσᶻ − ρ).
    SpinDephase { site: usize, rate: f64 },
    /// Cavity photon loss: κ·D[â].
    CavityDecay { rate: f64 },
}

/// Master-equation generator dρ/dt = −i[H,ρ] + Σ dissipators, evolved with
/// the same adaptive integrator as the mean-field models on the vectorized
/// density matrix.
pub struct LindbladSystem {
    pub space: HilbertSpace,
    h_eff: CMat,
    jumps: Vec<JumpOp>,
    scratch_rho: CMat,
    scratch_m: CMat,
}

impl LindbladSystem {
    pub fn new(space: HilbertSpace, h: CMat, jumps: Vec<JumpOp>) -> Result<Self> {
        space.check()?;
        let dim = space.dim();
        if h.n_rows != dim || h.n_cols != dim {
            return Err(Error::Range("Hamiltonian dimension mismatch".into()));
        }
        // H_eff = H − (i/2)Σ L†L
        let mut h_eff = h;
        for j in &jumps {
            match *j {
                JumpOp::SpinLower { site, rate } => {
                    // L†L = rate·σ⁺σ⁻ = rate·P↑
                    for i in 0..dim {
                        if space.spin_bit(i, site) {
                            h_eff[(i, i)] += C64::new(0.0, -0.5 * rate);
                        }
                    }
                }
                JumpOp::SpinDephase { rate, .. } => {
                    // L†L = (rate/2)·I
                    for i in 0..dim {
                        h_eff[(i, i)] += C64::new(0.0, -0.25 * rate);
                    }
                }
                JumpOp::CavityDecay { rate } => {
                    let l = space.levels();
                    for i in 0..dim {
                        let m = (i % l) as f64;
                        h_eff[(i, i)] += C64::new(0.0, -0.5 * rate * m);
                    }
                }
            }
        }
        Ok(LindbladSystem {
            space,
            h_eff,
            jumps,
            scratch_rho: CMat::zeros(dim, dim),
            scratch_m: CMat::zeros(dim, dim),
        })
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl OdeSystem for LindbladSystem {
    fn rhs(&mut self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let dim = self.dim();
        let rho = &mut self.scratch_rho;
        for (k, v) in rho.a.iter_mut().enumerate() {
            *v = C64::new(y[2 * k], y[2 * k + 1]);
        }
        // M = H_eff·ρ ; coherent+damping part = −i(M − M†)
        let m = self.h_eff.matmul(rho);
        self.scratch_m = m;
        let m = &self.scratch_m;
        for i in 0..dim {
            for j in 0..dim {
                let v = C64::new(0.0, -1.0) * (m[(i, j)] - m[(j, i)].conj());
                dydt[2 * (i * dim + j)] = v.re;
                dydt[2 * (i * dim + j) + 1] = v.im;
            }
        }
        // sandwich terms L ρ L†, exploiting the operator structure
        let l = self.space.levels();
        for jop in &self.jumps {
            match *jop {
                JumpOp::SpinLower { site, rate } => {
                    for i in 0..dim {
                        if self.space.spin_bit(i, site) {
                            continue;
                        }
                        let iu = self.space.flip_up(i, site);
                        for j in 0..dim {
                            if self.space.spin_bit(j, site) {
                                continue;
                            }
                            let ju = self.space.flip_up(j, site);
                            let v = rate * rho[(iu, ju)];
                            dydt[2 * (i * dim + j)] += v.re;
                            dydt[2 * (i * dim + j) + 1] += v.im;
                        }
                    }
                }
                JumpOp::SpinDephase { site, rate } => {
                    for i in 0..dim {
                        let si = if self.space.spin_bit(i, site) { 1.0 } else { -1.0 };
                        for j in 0..dim {
                            let sj = if self.space.spin_bit(j, site) { 1.0 } else { -1.0 };
                            let v = 0.5 * rate * si * sj * rho[(i, j)];
                            dydt[2 * (i * dim + j)] += v.re;
                            dydt[2 * (i * dim + j) + 1] += v.im;
                        }
                    }
                }
                JumpOp::CavityDecay { rate } => {
                    for i in 0..dim {
                        let mi = i % l;
                        if mi + 1 >= l {
                            continue;
                        }
                        let fi = ((mi + 1) as f64).sqrt();
                        for j in 0..dim {
                            let mj = j % l;
                            if mj + 1 >= l {
                                continue;
                            }
                            let fj = ((mj + 1) as f64).sqrt();
                            let v = rate * fi * fj * rho[(i + 1, j + 1)];
                            dydt[2 * (i * dim + j)] += v.re;
                            dydt[2 * (i * dim + j) + 1] += v.im;
                        }
                    }
                }
            }
        }
    }
}

/// Evolve a density matrix and report tr(O·ρ) for each observable at each
/// grid time. The initial state is reported at `t_grid[0]` if it is 0.
pub fn lindblad_exact_evolve(
    sys: &mut LindbladSystem,
    rho0: &CMat,
    t_grid: &[f64],
    observables: &[&CMat],
    opts: &OdeOptions,
) -> Result<Vec<Vec<C64>>> {
    let dim = sys.dim();
    if rho0.n_rows != dim {
        return Err(Error::Range("initial state dimension mismatch".into()));
    }
    let mut y0 = vec![0.0; 2 * dim * dim];
    for (k, v) in rho0.a.iter().enumerate() {
        y0[2 * k] = v.re;
        y0[2 * k + 1] = v.im;
    }
    let mut series: Vec<Vec<C64>> = observables.iter().map(|_| Vec::new()).collect();
    integrate_sampled(sys, 0.0, &y0, t_grid, opts, |_, _, _, y| {
        for (obs, out) in observables.iter().zip(series.iter_mut()) {
            let mut acc = C64::new(0.0, 0.0);
            // tr(Oρ) = Σ_ij O[i,j]·ρ[j,i]
            for i in 0..dim {
                for j in 0..dim {
                    let rho_ji = C64::new(y[2 * (j * dim + i)], y[2 * (j * dim + i) + 1]);
                    acc += obs[(i, j)] * rho_ji;
                }
            }
            out.push(acc);
        }
        Ok(())
    })?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::Phase;
    use crate::units::TWO_PI;

    #[test]
    fn dicke_rabi_and_frozen_limits() {
        let n = 20;
        let omega = TWO_PI * 1e6;
        let t_grid: Vec<f64> = (0..=100).map(|i| i as f64 * 2e-8).collect();
        // χ = δ = 0: exact Rabi
        let ev = dicke_exact_evolve(
            n,
            0.0,
            omega,
            0.0,
            0.0,
            &DickeState::south_pole(n),
            &t_grid,
        )
        .unwrap();
        for (i, &t) in ev.t.iter().enumerate() {
            let exact = -(n as f64 / 2.0) * (omega * t).cos();
            assert!((ev.jz[i] - exact).abs() < 1e-8 * n as f64);
        }
        // Ω = Ω′ = 0: Jz conserved
        let ev = dicke_exact_evolve(
            n,
            TWO_PI * 100.0,
            0.0,
            0.0,
            TWO_PI * 30.0,
            &DickeState::south_pole(n),
            &t_grid,
        )
        .unwrap();
        for &jz in &ev.jz {
            assert!((jz + n as f64 / 2.0).abs() < 1e-10 * n as f64);
        }
    }

    #[test]
    fn dicke_energy_conserved() {
        let n = 40;
        let chi = TWO_PI * 1e6 / n as f64;
        let omega = 0.4 * chi * n as f64;
        let t_grid: Vec<f64> = (0..=60).map(|i| i as f64 * 3e-8).collect();
        let ev = dicke_exact_evolve(n, chi, omega, 0.0, 0.0, &DickeState::south_pole(n), &t_grid)
            .unwrap();
        let e0 = ev.energy[0];
        let j = 0.5 * n as f64;
        let scale = chi.abs() * j * j + omega.abs() * j;
        for &e in &ev.energy {
            assert!(
                (e - e0).abs() / scale < 1e-10,
                "energy drift {:.2e} (scale {scale:.2e})",
                e - e0
            );
        }
    }

    #[test]
    fn krylov_path_matches_dense_path() {
        let n = 60;
        let chi = TWO_PI * 1e6 / n as f64;
        let omega = 0.6 * chi * n as f64;
        let t_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 5e-8).collect();
        let init = DickeState::south_pole(n);
        let dense =
            dicke_exact_evolve_with(n, chi, omega, 0.0, 0.0, &init, &t_grid, 512).unwrap();
        let krylov =
            dicke_exact_evolve_with(n, chi, omega, 0.0, 0.0, &init, &t_grid, 1).unwrap();
        for i in 0..dense.t.len() {
            assert!(
                (dense.jz[i] - krylov.jz[i]).abs() < 1e-7 * n as f64,
                "i={i}: {} vs {}",
                dense.jz[i],
                krylov.jz[i]
            );
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let err = dicke_exact_evolve(
            10_001,
            1.0,
            1.0,
            0.0,
            0.0,
            &DickeState::south_pole(10_001),
            &[0.0],
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
        assert!(HilbertSpace::spins(11).is_err());
        assert!(HilbertSpace::spins_with_cavity(7, 4).is_err());
        assert!(HilbertSpace::spins_with_cavity(4, 6).is_ok());
    }

    #[test]
    fn single_spin_amplitude_damping() {
        // γ only, no drive: z(t) = −1 + (z0+1)e^{−γt}
        let space = HilbertSpace::spins(1).unwrap();
        let gamma = TWO_PI * 7.5e3;
        let h = CMat::zeros(2, 2);
        let mut sys = LindbladSystem::new(
            space,
            h,
            vec![JumpOp::SpinLower {
                site: 0,
                rate: gamma,
            }],
        )
        .unwrap();
        let z0 = 0.4;
        let rho0 = space.product_state(0.0, 0.0, z0);
        let sz = space.sigma_z(0);
        let t_grid: Vec<f64> = (0..=40).map(|i| i as f64 * 2e-6).collect();
        let series = lindblad_exact_evolve(
            &mut sys,
            &rho0,
            &t_grid,
            &[&sz],
            &OdeOptions::with_tol(1e-11, 1e-13),
        )
        .unwrap();
        for (i, &t) in t_grid.iter().enumerate() {
            let exact = -1.0 + (z0 + 1.0) * (-gamma * t).exp();
            assert!(
                (series[0][i].re - exact).abs() < 1e-9,
                "t={t}: {} vs {exact}",
                series[0][i].re
            );
            assert!(series[0][i].im.abs() < 1e-12);
        }
    }

    #[test]
    fn single_spin_dephasing_rate() {
        // γ_el only, no drive: ⟨σ⁻⟩(t) = ⟨σ⁻⟩(0)·e^{−γ_el·t}
        let space = HilbertSpace::spins(1).unwrap();
        let gamma_el = TWO_PI * 40e3;
        let mut sys = LindbladSystem::new(
            space,
            CMat::zeros(2, 2),
            vec![JumpOp::SpinDephase {
                site: 0,
                rate: gamma_el,
            }],
        )
        .unwrap();
        let rho0 = space.product_state(1.0, 0.0, 0.0); // +x polarized
        let sm = space.sigma_minus(0);
        let t_grid: Vec<f64> = (0..=30).map(|i| i as f64 * 5e-7).collect();
        let series = lindblad_exact_evolve(
            &mut sys,
            &rho0,
            &t_grid,
            &[&sm],
            &OdeOptions::with_tol(1e-11, 1e-13),
        )
        .unwrap();
        for (i, &t) in t_grid.iter().enumerate() {
            let exact = 0.5 * (-gamma_el * t).exp();
            assert!(
                (series[0][i].re - exact).abs() < 1e-9,
                "t={t}: {} vs {exact}",
                series[0][i].re
            );
        }
    }

    #[test]
    fn trace_preserved_under_full_master_equation() {
        let space = HilbertSpace::spins_with_cavity(2, 3).unwrap();
        let a = space.annihilation().unwrap();
        let g = TWO_PI * 1e5;
        // H = Δ a†a + g Σ(a σ⁺ + a† σ⁻)
        let mut h = space.number_op().unwrap();
        h.scale(C64::new(TWO_PI * 2e6, 0.0));
        for site in 0..2 {
            let term = a.matmul(&space.sigma_plus(site));
            let mut both = term.clone();
            both.add_assign_scaled(&term.adjoint(), C64::new(1.0, 0.0));
            both.scale(C64::new(g, 0.0));
            h.add_assign_scaled(&both, C64::new(1.0, 0.0));
        }
        let mut sys = LindbladSystem::new(
            space,
            h,
            vec![
                JumpOp::CavityDecay {
                    rate: TWO_PI * 153e3,
                },
                JumpOp::SpinLower {
                    site: 0,
                    rate: TWO_PI * 7.5e3,
                },
                JumpOp::SpinDephase {
                    site: 1,
                    rate: TWO_PI * 40e3,
                },
            ],
        )
        .unwrap();
        let mut rho0 = space.product_state(0.6, 0.0, -0.8);
        // plant a photon coherence
        rho0[(0, 1)] += C64::new(0.01, 0.0);
        rho0[(1, 0)] += C64::new(0.01, 0.0);
        let id = CMat::eye(space.dim());
        let t_grid: Vec<f64> = (0..=10).map(|i| i as f64 * 2e-7).collect();
        let series = lindblad_exact_evolve(
            &mut sys,
            &rho0,
            &t_grid,
            &[&id],
            &OdeOptions::with_tol(1e-10, 1e-12),
        )
        .unwrap();
        for v in &series[0] {
            assert!((v.re - 1.0).abs() < 1e-8 && v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn basin_oracle_matches_examples() {
        let n = 1000.0;
        let chi = 1.0;
        // θ = π (south pole), Ω/(χN) = 0.4 → ferromagnetic
        let v =
            basin_boundary_exact(n, chi, 0.4 * chi * n, 0.0, std::f64::consts::PI, 0.0).unwrap();
        assert_eq!(v.phase, Phase::Ferromagnetic);
        // θ = π/2 with e0 = χ(N/2)²: boundary case → paramagnetic by convention
        // e0 = χ(N/2)² + Ω X₀ with X₀ = 0 at φ₀ = π/2
        let v = basin_boundary_exact(
            n,
            chi,
            0.3 * chi * n,
            0.0,
            0.5 * std::f64::consts::PI,
            0.5 * std::f64::consts::PI,
        )
        .unwrap();
        assert_eq!(v.phase, Phase::Paramagnetic);
        assert!(v.margin.abs() <= 0.3 * chi * n * n / 2.0 + 1e-9);
        // Ω/(χN) = 2: everything paramagnetic
        for theta in [0.3, 1.2, 2.8] {
            for phi in [0.0, 1.0, 3.0] {
                let v = basin_boundary_exact(n, chi, 2.0 * chi * n, 0.0, theta, phi).unwrap();
                assert_eq!(v.phase, Phase::Paramagnetic);
            }
        }
        // δ ≠ 0 unsupported
        assert!(basin_boundary_exact(n, chi, 1.0, 0.1, 1.0, 0.0).is_err());
    }
}
