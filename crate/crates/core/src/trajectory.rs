//! Time-series containers shared by every model.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Collective observables sampled on a uniform time grid. Bloch components
/// are normalized to N/2, so every model reports in the same units.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sample times (s).
    pub t: Vec<f64>,
    /// ⟨Ĵx⟩/(N/2)
    pub x: Vec<f64>,
    /// ⟨Ĵy⟩/(N/2)
    pub y: Vec<f64>,
    /// ⟨Ĵz⟩/(N/2)
    pub z: Vec<f64>,
    /// Mean-field energy of the active model (rad/s, normalized to N/2).
    pub energy: Vec<f64>,
    /// Cavity fluctuation amplitude ⟨â′⟩, when the model tracks it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<Vec<C64>>,
    /// Simulated site count (per-site models).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_sim: Option<usize>,
    /// Physical atom number represented by this run (may differ per shot).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_phys: Option<f64>,
    /// Per-sample maximum over sites of the single-site purity
    /// 4|c_k|² + z_k² (per-site models only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub site_purity_max: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Trajectory {
            t: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            energy: Vec::with_capacity(n),
            beta: None,
            n_sim: None,
            n_phys: None,
            site_purity_max: None,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, t: f64, x: f64, y: f64, z: f64, energy: f64) {
        self.t.push(t);
        self.x.push(x);
        self.y.push(y);
        self.z.push(z);
        self.energy.push(energy);
    }

    /// Value of z at time `t` (must be a grid point up to 1 ulp-scale slack).
    pub fn z_at(&self, t: f64) -> Option<f64> {
        let tol = 1e-9 * self.t.last().copied().unwrap_or(1.0).abs().max(1e-30);
        self.t
            .iter()
            .position(|&ti| (ti - t).abs() <= tol)
            .map(|i| self.z[i])
    }

    /// Largest z over the whole record.
    pub fn z_max(&self) -> f64 {
        self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoidal mean of z over [t0, t1]; the window must be covered by
    /// grid points.
    pub fn z_window_mean(&self, t0: f64, t1: f64) -> Option<f64> {
        if self.t.is_empty() || t0 >= t1 {
            return None;
        }
        let tol = 1e-9 * (t1 - t0).abs();
        let i0 = self.t.iter().position(|&t| t >= t0 - tol)?;
        let i1 = self.t.iter().rposition(|&t| t <= t1 + tol)?;
        if i1 <= i0 || self.t[i0] > t0 + tol || self.t[i1] < t1 - tol {
            return None;
        }
        let mut acc = 0.0;
        for i in i0..i1 {
            let dt = self.t[i + 1] - self.t[i];
            acc += 0.5 * dt * (self.z[i] + self.z[i + 1]);
        }
        Some(acc / (self.t[i1] - self.t[i0]))
    }
}

/// Pointwise statistics over repeated shots of the same protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotAverage {
    /// Pointwise mean trajectory.
    pub mean: Trajectory,
    /// Pointwise standard deviation of z across shots.
    pub z_sd: Vec<f64>,
    /// Number of shots averaged.
    pub n_shots: usize,
    /// Physical atom numbers drawn per shot.
    pub n_phys_shots: Vec<f64>,
}
