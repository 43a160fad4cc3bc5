//! Oscillation-period extraction: least-squares fit of
//! z(t) = a·sin(2πt/T + φ₀) + b + c·t with the period seeded from a
//! coarse FFT peak and refined by golden-section search.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    /// Oscillation period (s); infinite when no oscillation is present.
    pub period: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub slope: f64,
    /// RMS fit residual.
    pub residual: f64,
}

/// Ordinary least squares of z = b + c·t.
fn linear_trend(t: &[f64], z: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let (mut st, mut sz, mut stt, mut stz) = (0.0, 0.0, 0.0, 0.0);
    for (&ti, &zi) in t.iter().zip(z) {
        st += ti;
        sz += zi;
        stt += ti * ti;
        stz += ti * zi;
    }
    let det = n * stt - st * st;
    if det == 0.0 {
        return (sz / n, 0.0);
    }
    let c = (n * stz - st * sz) / det;
    let b = (sz - c * st) / n;
    (b, c)
}

/// Solve the 4×4 normal equations of the linear model
/// {sin(ωt), cos(ωt), 1, t} and return (coeffs, rms residual).
fn linear_fit(t: &[f64], z: &[f64], omega: f64) -> ([f64; 4], f64) {
    let n = t.len();
    let mut a = [[0.0f64; 4]; 4];
    let mut b = [0.0f64; 4];
    for i in 0..n {
        let basis = [(omega * t[i]).sin(), (omega * t[i]).cos(), 1.0, t[i]];
        for r in 0..4 {
            b[r] += basis[r] * z[i];
            for c in 0..4 {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let mut x = [0.0f64; 4];
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col] == 0.0 {
            continue; // degenerate basis (e.g. ω = 0); coefficient stays 0
        }
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..4).rev() {
        if a[col][col] == 0.0 {
            x[col] = 0.0;
            continue;
        }
        let mut acc = b[col];
        for c in col + 1..4 {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    let mut ss = 0.0;
    for i in 0..n {
        let fit = x[0] * (omega * t[i]).sin() + x[1] * (omega * t[i]).cos() + x[2] + x[3] * t[i];
        ss += (z[i] - fit).powi(2);
    }
    (x, (ss / n as f64).sqrt())
}

/// Fit a sinusoid plus linear trend to z(t) on a uniform time grid.
///
/// The trajectory must contain at least two oscillation periods; a signal
/// with no spectral peak above the noise floor is a fit failure, except for
/// the degenerate pure-trend case (zero oscillation), which returns
/// amplitude 0 and an infinite period with the trend recovered exactly.
pub fn fit_period(t: &[f64], z: &[f64]) -> Result<PeriodFit> {
    let n = t.len();
    if n < 8 || z.len() != n {
        return Err(Error::Range("fit_period needs at least 8 samples".into()));
    }
    let dt = t[1] - t[0];
    for w in t.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::Range("fit_period requires a uniform grid".into()));
        }
    }
    let span = t[n - 1] - t[0];

    // linear detrend ({1, t} only; the ω → 0 basis is degenerate)
    let (off0, slope0) = linear_trend(t, z);
    let detrended: Vec<f64> = t
        .iter()
        .zip(z)
        .map(|(&ti, &zi)| zi - off0 - slope0 * ti)
        .collect();
    let scale = z.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let rms = (detrended.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms < 1e-10 * scale {
        // pure trend: slope and offset are exact, no oscillation
        return Ok(PeriodFit {
            period: f64::INFINITY,
            amplitude: 0.0,
            phase: 0.0,
            offset: off0,
            slope: slope0,
            residual: rms,
        });
    }

    // FFT peak seed
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<C64> = detrended.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let half = n / 2;
    let power: Vec<f64> = buf[1..half].iter().map(|v| v.norm_sqr()).collect();
    let (peak_bin, peak_power) = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &p)| (i + 1, p))
        .unwrap();
    let mut sorted = power.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    if peak_power < 25.0 * median.max(1e-300) {
        return Err(Error::FitFailure(
            "no spectral peak above the noise floor".into(),
        ));
    }
    let f_seed = peak_bin as f64 / (n as f64 * dt);

    // golden-section refinement of the frequency around the seed
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut lo = f_seed / 1.6;
    let mut hi = f_seed * 1.6;
    let residual_at = |f: f64| linear_fit(t, z, 2.0 * std::f64::consts::PI * f).1;
    let mut f1 = hi - golden * (hi - lo);
    let mut f2 = lo + golden * (hi - lo);
    let mut r1 = residual_at(f1);
    let mut r2 = residual_at(f2);
    for _ in 0..200 {
        if r1 < r2 {
            hi = f2;
            f2 = f1;
            r2 = r1;
            f1 = hi - golden * (hi - lo);
            r1 = residual_at(f1);
        } else {
            lo = f1;
            f1 = f2;
            r1 = r2;
            f2 = lo + golden * (hi - lo);
            r2 = residual_at(f2);
        }
        if (hi - lo) < 1e-13 * f_seed {
            break;
        }
    }
    let f_best = 0.5 * (lo + hi);
    let omega = 2.0 * std::f64::consts::PI * f_best;
    let (coef, residual) = linear_fit(t, z, omega);
    let period = 1.0 / f_best;
    if period > 0.5 * span {
        return Err(Error::FitFailure(format!(
            "fitted period {period:.3e} s exceeds half the record length {span:.3e} s"
        )));
    }
    Ok(PeriodFit {
        period,
        amplitude: (coef[0] * coef[0] + coef[1] * coef[1]).sqrt(),
        phase: coef[1].atan2(coef[0]),
        offset: coef[2],
        slope: coef[3],
        residual,
    })
}
