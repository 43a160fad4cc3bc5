//! Dense complex linear algebra for the exact-evolution oracles: matrix
//! products, LU solves, the scaling-and-squaring matrix exponential, Lanczos
//! propagation for large Hermitian generators, and a Jacobi eigensolver used
//! by positivity checks.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub a: Vec<C64>,
}

impl CMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMat {
            n_rows,
            n_cols,
            a: vec![C64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n_cols, other.n_rows);
        let (n, m, p) = (self.n_rows, self.n_cols, other.n_cols);
        let mut out = CMat::zeros(n, p);
        for i in 0..n {
            for k in 0..m {
                let aik = self.a[i * m + k];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.a[k * p..(k + 1) * p];
                let orow = &mut out.a[i * p..(i + 1) * p];
                for j in 0..p {
                    orow[j] += aik * row[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(self.n_cols, v.len());
        assert_eq!(self.n_rows, out.len());
        for i in 0..self.n_rows {
            let row = &self.a[i * self.n_cols..(i + 1) * self.n_cols];
            let mut acc = C64::new(0.0, 0.0);
            for (a, x) in row.iter().zip(v) {
                acc += a * x;
            }
            out[i] = acc;
        }
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.a {
            *v *= s;
        }
    }

    pub fn add_assign_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!(self.a.len(), other.a.len());
        for (v, w) in self.a.iter_mut().zip(&other.a) {
            *v += s * w;
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.n_cols {
            let mut s = 0.0;
            for i in 0..self.n_rows {
                s += self[(i, j)].norm();
            }
            best = best.max(s);
        }
        best
    }

    pub fn trace(&self) -> C64 {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self[(i, i)])
            .sum()
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &CMat) -> CMat {
        let (ar, ac) = (self.n_rows, self.n_cols);
        let (br, bc) = (other.n_rows, other.n_cols);
        let mut out = CMat::zeros(ar * br, ac * bc);
        for i in 0..ar {
            for j in 0..ac {
                let aij = self[(i, j)];
                if aij == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..br {
                    for l in 0..bc {
                        out[(i * br + k, j * bc + l)] = aij * other[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.n_cols + j]
    }
}

/// Solve A·X = B in place by LU with partial pivoting; B is overwritten
/// with X.
pub fn lu_solve(a: &CMat, b: &mut CMat) -> Result<()> {
    assert!(a.is_square());
    assert_eq!(a.n_rows, b.n_rows);
    let n = a.n_rows;
    let m = b.n_cols;
    let mut lu = a.a.clone();

    for col in 0..n {
        // pivot
        let mut best = col;
        let mut best_mag = lu[col * n + col].norm();
        for r in (col + 1)..n {
            let mag = lu[r * n + col].norm();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag == 0.0 {
            return Err(Error::Inconsistency("singular matrix in LU solve".into()));
        }
        if best != col {
            for j in 0..n {
                lu.swap(col * n + j, best * n + j);
            }
            for j in 0..m {
                b.a.swap(col * m + j, best * m + j);
            }
        }
        let inv_p = C64::new(1.0, 0.0) / lu[col * n + col];
        for r in (col + 1)..n {
            let f = lu[r * n + col] * inv_p;
            lu[r * n + col] = f;
            if f != C64::new(0.0, 0.0) {
                for j in (col + 1)..n {
                    let v = lu[col * n + j];
                    lu[r * n + j] -= f * v;
                }
                for j in 0..m {
                    let v = b.a[col * m + j];
                    b.a[r * m + j] -= f * v;
                }
            }
        }
    }
    // back substitution
    for col in (0..n).rev() {
        let inv_p = C64::new(1.0, 0.0) / lu[col * n + col];
        for j in 0..m {
            let mut acc = b.a[col * m + j];
            for k in (col + 1)..n {
                acc -= lu[col * n + k] * b.a[k * m + j];
            }
            b.a[col * m + j] = acc * inv_p;
        }
    }
    Ok(())
}

// Padé(13) coefficients for the matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by Padé(13) with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    assert!(a.is_square());
    let n = a.n_rows;
    let theta13 = 5.371920351148152;
    let norm = a.one_norm();
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let mut a_s = a.clone();
    if s > 0 {
        a_s.scale(C64::new(2f64.powi(-s), 0.0));
    }

    let a2 = a_s.matmul(&a_s);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);
    let id = CMat::eye(n);

    // U = A·[A6·(b13·A6 + b11·A4 + b9·A2) + b7·A6 + b5·A4 + b3·A2 + b1·I]
    let mut inner = CMat::zeros(n, n);
    inner.add_assign_scaled(&a6, C64::new(PADE13[13], 0.0));
    inner.add_assign_scaled(&a4, C64::new(PADE13[11], 0.0));
    inner.add_assign_scaled(&a2, C64::new(PADE13[9], 0.0));
    let mut u = a6.matmul(&inner);
    u.add_assign_scaled(&a6, C64::new(PADE13[7], 0.0));
    u.add_assign_scaled(&a4, C64::new(PADE13[5], 0.0));
    u.add_assign_scaled(&a2, C64::new(PADE13[3], 0.0));
    u.add_assign_scaled(&id, C64::new(PADE13[1], 0.0));
    let u = a_s.matmul(&u);

    // V = A6·(b12·A6 + b10·A4 + b8·A2) + b6·A6 + b4·A4 + b2·A2 + b0·I
    let mut inner_v = CMat::zeros(n, n);
    inner_v.add_assign_scaled(&a6, C64::new(PADE13[12], 0.0));
    inner_v.add_assign_scaled(&a4, C64::new(PADE13[10], 0.0));
    inner_v.add_assign_scaled(&a2, C64::new(PADE13[8], 0.0));
    let mut v = a6.matmul(&inner_v);
    v.add_assign_scaled(&a6, C64::new(PADE13[6], 0.0));
    v.add_assign_scaled(&a4, C64::new(PADE13[4], 0.0));
    v.add_assign_scaled(&a2, C64::new(PADE13[2], 0.0));
    v.add_assign_scaled(&id, C64::new(PADE13[0], 0.0));

    // (V − U)·R = (V + U)
    let mut lhs = v.clone();
    lhs.add_assign_scaled(&u, C64::new(-1.0, 0.0));
    let mut rhs = v;
    rhs.add_assign_scaled(&u, C64::new(1.0, 0.0));
    lu_solve(&lhs, &mut rhs)?;

    let mut r = rhs;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// One Lanczos step of exp(−i·H·τ)·v for Hermitian H given as a mat-vec
/// closure; `m` is the Krylov dimension.
fn lanczos_step(
    apply: &mut dyn FnMut(&[C64], &mut [C64]),
    v: &[C64],
    tau: f64,
    m: usize,
) -> Result<Vec<C64>> {
    let n = v.len();
    let m = m.min(n);
    let norm_v = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm_v == 0.0 {
        return Ok(v.to_vec());
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    basis.push(v.iter().map(|x| x / norm_v).collect());
    let mut alpha: Vec<f64> = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); n];

    for j in 0..m {
        apply(&basis[j], &mut w);
        // full reorthogonalization (small m, favors accuracy)
        for (i, q) in basis.iter().enumerate() {
            let coeff: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            if i == j {
                alpha.push(coeff.re);
            }
            for (wk, qk) in w.iter_mut().zip(q) {
                *wk -= coeff * qk;
            }
        }
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if j + 1 == m || b < 1e-14 {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }

    // exponentiate the small tridiagonal generator
    let k = alpha.len();
    let mut t = CMat::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = C64::new(0.0, -tau * alpha[i]);
        if i + 1 < k {
            t[(i, i + 1)] = C64::new(0.0, -tau * beta[i]);
            t[(i + 1, i)] = C64::new(0.0, -tau * beta[i]);
        }
    }
    let et = expm(&t)?;
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, q) in basis.iter().enumerate().take(k) {
        let coeff = et[(j, 0)] * norm_v;
        for (o, qk) in out.iter_mut().zip(q) {
            *o += coeff * qk;
        }
    }
    Ok(out)
}

/// Propagate exp(−i·H·t)·v for Hermitian H via Lanczos with substepping;
/// `freq_scale` should bound the spectral range of H (sets the substep).
pub fn krylov_propagate(
    apply: &mut dyn FnMut(&[C64], &mut [C64]),
    v: &[C64],
    t: f64,
    freq_scale: f64,
    m: usize,
) -> Result<Vec<C64>> {
    let substeps = ((t.abs() * freq_scale / 10.0).ceil() as usize).max(1);
    let tau = t / substeps as f64;
    let mut state = v.to_vec();
    for _ in 0..substeps {
        state = lanczos_step(apply, &state, tau, m)?;
    }
    Ok(state)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(mat: &CMat) -> Vec<f64> {
    assert!(mat.is_square());
    let n = mat.n_rows;
    let mut a = mat.clone();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-13 * (a.one_norm().max(1e-300)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // complex Givens rotation zeroing a[p,q]
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                let s_c = phase * s;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s_c.conj();
                    a[(k, q)] = akp * s_c + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s_c;
                    a[(q, k)] = apk * s_c.conj() + aqk * c;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
