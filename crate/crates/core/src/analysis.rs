//! Order parameters, phase classification, critical-point extraction and
//! figure-level composites (phase diagrams, basin maps).

use serde::{Deserialize, Serialize};

use crate::bloch::Phase;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Estimator of the time-averaged magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimator {
    /// ⟨Ĵz(t_f)⟩/(N/2): the experiment's proxy (freeze and image at t_f).
    #[serde(rename = "SNAPSHOT")]
    Snapshot { t_f: f64 },
    /// Trapezoidal mean of ⟨Ĵz⟩/(N/2) over [t0, t1]: the theory curve.
    #[serde(rename = "WINDOW")]
    Window { t0: f64, t1: f64 },
}

impl Estimator {
    /// Latest time the trajectory must cover.
    pub fn t_required(&self) -> f64 {
        match *self {
            Estimator::Snapshot { t_f } => t_f,
            Estimator::Window { t1, .. } => t1,
        }
    }
}

/// Normalized order parameter J̄z ∈ [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub jz_bar: f64,
    pub estimator: Estimator,
}

/// Evaluate the order parameter on a trajectory.
pub fn order_parameter(traj: &Trajectory, estimator: Estimator) -> Result<OrderParameter> {
    let jz_bar = match estimator {
        Estimator::Snapshot { t_f } => traj
            .z_at(t_f)
            .ok_or_else(|| Error::Range(format!("snapshot time {t_f:e} s not on the grid")))?,
        Estimator::Window { t0, t1 } => traj.z_window_mean(t0, t1).ok_or_else(|| {
            Error::Range(format!("window [{t0:e}, {t1:e}] s not covered by trajectory"))
        })?,
    };
    Ok(OrderParameter { jz_bar, estimator })
}

/// Default classification threshold on |J̄z|.
pub const PHASE_THRESHOLD: f64 = 0.1;

/// Ferromagnetic iff J̄z < −threshold.
pub fn classify_phase(order: &OrderParameter, threshold: f64) -> Phase {
    if order.jz_bar < -threshold {
        Phase::Ferromagnetic
    } else {
        Phase::Paramagnetic
    }
}

/// Critical-point extraction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalMethod {
    #[serde(rename = "JUMP")]
    Jump,
    #[serde(rename = "MAX_GRADIENT")]
    MaxGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// Control-parameter value at the transition.
    pub value: f64,
    pub method: CriticalMethod,
    /// Half the local grid spacing.
    pub uncertainty: f64,
}

/// Three-point central differences of y against x (endpoints one-sided).
pub fn gradient(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    if n < 2 {
        return g;
    }
    g[0] = (y[1] - y[0]) / (x[1] - x[0]);
    g[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    for i in 1..n - 1 {
        g[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
    }
    g
}

/// Locate the transition on a monotone control grid.
///
/// MAX_GRADIENT takes the interior grid point with the largest
/// |three-point central difference| (ties break toward the smallest
/// control value); JUMP takes the midpoint of the largest single step.
pub fn critical_drive(
    control: &[f64],
    jz_bar: &[f64],
    method: CriticalMethod,
) -> Result<CriticalPoint> {
    if control.len() != jz_bar.len() || control.len() < 3 {
        return Err(Error::Range(
            "critical point needs at least 3 grid points".into(),
        ));
    }
    match method {
        CriticalMethod::MaxGradient => {
            let mut best_i = 1;
            let mut best = -1.0;
            for i in 1..control.len() - 1 {
                let g = ((jz_bar[i + 1] - jz_bar[i - 1]) / (control[i + 1] - control[i - 1])).abs();
                if g > best {
                    best = g;
                    best_i = i;
                }
            }
            Ok(CriticalPoint {
                value: control[best_i],
                method,
                uncertainty: 0.25 * (control[best_i + 1] - control[best_i - 1]),
            })
        }
        CriticalMethod::Jump => {
            let mut best_i = 0;
            let mut best = -1.0;
            for i in 0..control.len() - 1 {
                let d = (jz_bar[i + 1] - jz_bar[i]).abs();
                if d > best {
                    best = d;
                    best_i = i;
                }
            }
            Ok(CriticalPoint {
                value: 0.5 * (control[best_i] + control[best_i + 1]),
                method,
                uncertainty: 0.5 * (control[best_i + 1] - control[best_i]),
            })
        }
    }
}

/// Max-gradient transition on each side of δ = 0 of a detuning scan.
/// Returns (negative-side, positive-side) critical points.
pub fn critical_detuning(delta: &[f64], jz_bar: &[f64]) -> Result<(CriticalPoint, CriticalPoint)> {
    if delta.len() != jz_bar.len() {
        return Err(Error::Range("grid length mismatch".into()));
    }
    let neg: Vec<usize> = (0..delta.len()).filter(|&i| delta[i] < 0.0).collect();
    let pos: Vec<usize> = (0..delta.len()).filter(|&i| delta[i] > 0.0).collect();
    if neg.len() < 3 || pos.len() < 3 {
        return Err(Error::Range(
            "detuning scan must span both signs of δ with ≥ 3 points each".into(),
        ));
    }
    let side = |idx: &[usize]| -> CriticalPoint {
        let c: Vec<f64> = idx.iter().map(|&i| delta[i]).collect();
        let z: Vec<f64> = idx.iter().map(|&i| jz_bar[i]).collect();
        critical_drive(&c, &z, CriticalMethod::MaxGradient).expect("side has ≥ 3 points")
    };
    Ok((side(&neg), side(&pos)))
}

/// One cell of a control sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub control_1: f64,
    pub control_2: f64,
    pub jz_bar: f64,
    pub label: Phase,
    pub gradient: f64,
}

/// A finished (control → order parameter) scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Assemble from raw values: gradients along control_1 and labels are
    /// filled here.
    pub fn from_scan(control_1: Vec<f64>, control_2: f64, jz_bar: Vec<f64>, threshold: f64) -> Self {
        let grads = gradient(&control_1, &jz_bar);
        let points = control_1
            .iter()
            .zip(&jz_bar)
            .zip(&grads)
            .map(|((&c, &z), &g)| SweepPoint {
                control_1: c,
                control_2,
                jz_bar: z,
                label: if z < -threshold {
                    Phase::Ferromagnetic
                } else {
                    Phase::Paramagnetic
                },
                gradient: g,
            })
            .collect();
        SweepResult { points }
    }

    pub fn controls(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.control_1).collect()
    }

    pub fn jz_bars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.jz_bar).collect()
    }
}

/// Phase diagram over (δ/(χN), Ω/(χN)) with first-order and crossover lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub delta_over_chi_n: Vec<f64>,
    pub omega_over_chi_n: Vec<f64>,
    /// Row-major [omega][delta].
    pub jz_bar: Vec<f64>,
    pub label: Vec<Phase>,
    /// ∂J̄z/∂δ within each row.
    pub gradient: Vec<f64>,
    /// First-order boundary per side: (δ, Ω) midpoints where the
    /// adjacent-cell jump exceeds the threshold.
    pub jump_line_neg: Vec<[f64; 2]>,
    pub jump_line_pos: Vec<[f64; 2]>,
    /// Max-|gradient| ridge along δ at fixed Ω, per side of δ = 0.
    pub ridge_neg: Vec<[f64; 2]>,
    pub ridge_pos: Vec<[f64; 2]>,
}

/// Threshold on the adjacent-cell jump that marks a first-order boundary.
pub const JUMP_THRESHOLD: f64 = 0.3;

/// Post-process a jz grid into a phase diagram. `jz_bar` is row-major
/// [omega][delta].
pub fn analyze_phase_diagram(
    deltas: Vec<f64>,
    omegas: Vec<f64>,
    jz_bar: Vec<f64>,
    classify_threshold: f64,
    jump_threshold: f64,
) -> Result<PhaseDiagram> {
    let (nd, no) = (deltas.len(), omegas.len());
    if jz_bar.len() != nd * no || nd < 3 || no < 1 {
        return Err(Error::Range("degenerate phase-diagram grid".into()));
    }
    let mut label = Vec::with_capacity(nd * no);
    let mut grad = vec![0.0; nd * no];
    let mut jump_line_neg = Vec::new();
    let mut jump_line_pos = Vec::new();
    let mut ridge_neg = Vec::new();
    let mut ridge_pos = Vec::new();

    for (io, &omega) in omegas.iter().enumerate() {
        let row = &jz_bar[io * nd..(io + 1) * nd];
        let g = gradient(&deltas, row);
        grad[io * nd..(io + 1) * nd].copy_from_slice(&g);
        for &z in row {
            label.push(if z < -classify_threshold {
                Phase::Ferromagnetic
            } else {
                Phase::Paramagnetic
            });
        }
        // per side: strongest adjacent-cell jump and max-gradient point
        for (negative, line, ridge) in [
            (true, &mut jump_line_neg, &mut ridge_neg),
            (false, &mut jump_line_pos, &mut ridge_pos),
        ] {
            let idx: Vec<usize> = (0..nd)
                .filter(|&i| {
                    if negative {
                        deltas[i] < 0.0
                    } else {
                        deltas[i] > 0.0
                    }
                })
                .collect();
            if idx.len() < 3 {
                continue;
            }
            let mut best_jump = 0.0;
            let mut best_mid = 0.0;
            for w in idx.windows(2) {
                let d = (row[w[1]] - row[w[0]]).abs();
                if d > best_jump {
                    best_jump = d;
                    best_mid = 0.5 * (deltas[w[0]] + deltas[w[1]]);
                }
            }
            if best_jump > jump_threshold {
                line.push([best_mid, omega]);
            }
            let mut best_g = -1.0;
            let mut best_d = deltas[idx[1]];
            for &i in &idx[1..idx.len() - 1] {
                if g[i].abs() > best_g {
                    best_g = g[i].abs();
                    best_d = deltas[i];
                }
            }
            ridge.push([best_d, omega]);
        }
    }
    Ok(PhaseDiagram {
        delta_over_chi_n: deltas,
        omega_over_chi_n: omegas,
        jz_bar,
        label,
        gradient: grad,
        jump_line_neg,
        jump_line_pos,
        ridge_neg,
        ridge_pos,
    })
}

/// Basin of attraction over polar initial conditions (r, Δφ) on the
/// southern hemisphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasinMap {
    pub omega_over_chi_n: f64,
    pub r: Vec<f64>,
    pub delta_phi: Vec<f64>,
    /// Row-major [r][Δφ]; magnetization of the quench per the estimator.
    pub jz_bar: Vec<f64>,
    /// Simulated labels: paramagnetic iff the trajectory crossed the equator.
    pub label: Vec<Phase>,
    /// Analytic energy-shell labels (ideal model only).
    pub analytic: Option<Vec<Phase>>,
    /// Cells adjacent to an analytic boundary (grid-neighbor label change).
    pub near_boundary: Option<Vec<bool>>,
}

impl BasinMap {
    /// Fraction of cells labelled ferromagnetic.
    pub fn ferromagnetic_fraction(&self) -> f64 {
        let ferro = self
            .label
            .iter()
            .filter(|&&l| l == Phase::Ferromagnetic)
            .count();
        ferro as f64 / self.label.len() as f64
    }

    /// Mark cells whose grid neighborhood (in the analytic map) is mixed.
    pub fn mark_boundary(&mut self) {
        let analytic = match &self.analytic {
            Some(a) => a.clone(),
            None => return,
        };
        let (nr, np) = (self.r.len(), self.delta_phi.len());
        let mut near = vec![false; nr * np];
        let at = |ir: usize, ip: usize| analytic[ir * np + ip];
        for ir in 0..nr {
            for ip in 0..np {
                let me = at(ir, ip);
                let mut mixed = false;
                if ir > 0 && at(ir - 1, ip) != me {
                    mixed = true;
                }
                if ir + 1 < nr && at(ir + 1, ip) != me {
                    mixed = true;
                }
                // Δφ wraps around
                let ipm = (ip + np - 1) % np;
                let ipp = (ip + 1) % np;
                if at(ir, ipm) != me || at(ir, ipp) != me {
                    mixed = true;
                }
                near[ir * np + ip] = mixed;
            }
        }
        self.near_boundary = Some(near);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::rabi_rms_magnetization;

    fn traj_from(t: Vec<f64>, z: Vec<f64>) -> Trajectory {
        let n = t.len();
        Trajectory {
            t,
            x: vec![0.0; n],
            y: vec![0.0; n],
            z,
            energy: vec![0.0; n],
            ..Default::default()
        }
    }

    #[test]
    fn window_over_full_period_of_cosine_vanishes() {
        // ideal Rabi: WINDOW over exactly one period → 0
        let n = 4000;
        let period = 1.0;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 * period / n as f64).collect();
        let z: Vec<f64> = t
            .iter()
            .map(|&ti| -(2.0 * std::f64::consts::PI * ti / period).cos())
            .collect();
        let traj = traj_from(t, z);
        let op = order_parameter(
            &traj,
            Estimator::Window {
                t0: 0.0,
                t1: period,
            },
        )
        .unwrap();
        assert!(op.jz_bar.abs() < 1e-6, "window mean {}", op.jz_bar);
    }

    #[test]
    fn snapshot_and_window_on_flat_trajectory() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let traj = traj_from(t, vec![-1.0; 11]);
        let s = order_parameter(&traj, Estimator::Snapshot { t_f: 4.0 }).unwrap();
        assert_eq!(s.jz_bar, -1.0);
        let w = order_parameter(&traj, Estimator::Window { t0: 0.0, t1: 10.0 }).unwrap();
        assert_eq!(w.jz_bar, -1.0);
        // out-of-range estimator is a range error
        assert!(order_parameter(&traj, Estimator::Snapshot { t_f: 11.0 }).is_err());
        assert!(order_parameter(&traj, Estimator::Window { t0: 2.0, t1: 12.0 }).is_err());
    }

    #[test]
    fn classification_thresholds() {
        let mk = |jz| OrderParameter {
            jz_bar: jz,
            estimator: Estimator::Snapshot { t_f: 0.0 },
        };
        assert_eq!(classify_phase(&mk(-1.0), 0.1), Phase::Ferromagnetic);
        assert_eq!(classify_phase(&mk(0.0), 0.1), Phase::Paramagnetic);
        assert_eq!(classify_phase(&mk(-0.05), 0.1), Phase::Paramagnetic);
    }

    #[test]
    fn critical_point_on_step_profile() {
        let control: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let jz: Vec<f64> = control
            .iter()
            .map(|&c| if c < 0.5 { -0.8 } else { -0.05 })
            .collect();
        let cp = critical_drive(&control, &jz, CriticalMethod::MaxGradient).unwrap();
        assert!((cp.value - 0.5).abs() <= 0.01 + 1e-12);
        let cj = critical_drive(&control, &jz, CriticalMethod::Jump).unwrap();
        assert!((cj.value - 0.495).abs() < 1e-12);
        assert!(critical_drive(&control[..2], &jz[..2], CriticalMethod::Jump).is_err());
    }

    #[test]
    fn max_gradient_tie_breaks_small_control() {
        let control = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let jz = vec![0.0, 1.0, 1.0, 2.0, 2.0]; // equal gradients at i=1 and i=3
        let cp = critical_drive(&control, &jz, CriticalMethod::MaxGradient).unwrap();
        assert_eq!(cp.value, 1.0);
    }

    #[test]
    fn detuning_sides_on_rabi_lineshape() {
        // χ = 0: the closed-form line shape has max-gradient at δ = ±Ω/√3
        let omega = 1.0;
        let delta: Vec<f64> = (-300..=300).map(|i| i as f64 * 0.01).collect();
        let jz: Vec<f64> = delta
            .iter()
            .map(|&d| rabi_rms_magnetization(omega, d))
            .collect();
        let (neg, pos) = critical_detuning(&delta, &jz).unwrap();
        let expect = omega / 3f64.sqrt();
        assert!(
            (pos.value - expect).abs() <= 0.011,
            "pos {} vs {expect}",
            pos.value
        );
        assert!((neg.value + expect).abs() <= 0.011);
    }

    #[test]
    fn phase_diagram_lines() {
        // synthetic grid: sharp jump on δ < 0 side, smooth on δ > 0
        let deltas: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.05).collect();
        let omegas = vec![0.2, 0.4];
        let mut jz = Vec::new();
        for _ in &omegas {
            for &d in &deltas {
                let v = if d < -0.5 {
                    -0.05
                } else if d < 0.0 {
                    -0.9
                } else {
                    -0.9 + 0.8 / (1.0 + (-4.0 * (d - 0.5)).exp())
                };
                jz.push(v);
            }
        }
        let pd = analyze_phase_diagram(deltas, omegas, jz, 0.1, 0.3).unwrap();
        assert_eq!(pd.jump_line_neg.len(), 2); // sharp jump found on both rows
        assert!(pd.jump_line_neg.iter().all(|p| (p[0] + 0.525).abs() < 0.03));
        assert!(pd.jump_line_pos.is_empty()); // smooth side has no 0.3 jump in one step
        assert_eq!(pd.ridge_pos.len(), 2);
        assert!(pd.ridge_pos.iter().all(|p| (p[0] - 0.5).abs() < 0.1));
    }

    #[test]
    fn basin_boundary_marking_wraps_in_phi() {
        let mut map = BasinMap {
            omega_over_chi_n: 0.3,
            r: vec![0.25, 0.75],
            delta_phi: vec![0.0, 1.57, 3.14, 4.71],
            jz_bar: vec![0.0; 8],
            label: vec![Phase::Ferromagnetic; 8],
            analytic: Some(vec![
                Phase::Ferromagnetic,
                Phase::Ferromagnetic,
                Phase::Ferromagnetic,
                Phase::Paramagnetic,
                Phase::Ferromagnetic,
                Phase::Ferromagnetic,
                Phase::Ferromagnetic,
                Phase::Paramagnetic,
            ]),
            near_boundary: None,
        };
        map.mark_boundary();
        let nb = map.near_boundary.unwrap();
        // cell (0,0) neighbors (0,3) across the wrap → mixed
        assert!(nb[0]);
        assert!(!nb[1]);
    }
}
