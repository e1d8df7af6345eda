//! Matrix exponentials: dense Pade scaling-and-squaring, and a Lanczos
//! Krylov propagator for `exp(-i t H) v` with Hermitian `H`.

use nalgebra::{DMatrix, DVector};

use crate::sparse::C64;

/// Dense `exp(A)` via the order-13 Pade approximant with scaling and
/// squaring. Intended for the moderate dimensions used here (<= ~1024).
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols());
    const THETA_13: f64 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a_scaled = a / C64::new(2f64.powi(s), 0.0);

    const B: [f64; 14] = [
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
    let cb = |x: f64| C64::new(x, 0.0);
    let id = DMatrix::<C64>::identity(dim, dim);
    let a2 = &a_scaled * &a_scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * cb(B[13]) + &a4 * cb(B[11]) + &a2 * cb(B[9]))
        + &a6 * cb(B[7])
        + &a4 * cb(B[5])
        + &a2 * cb(B[3])
        + &id * cb(B[1]);
    let u = &a_scaled * u_inner;
    let v = &a6 * (&a6 * cb(B[12]) + &a4 * cb(B[10]) + &a2 * cb(B[8]))
        + &a6 * cb(B[6])
        + &a4 * cb(B[4])
        + &a2 * cb(B[2])
        + &id * cb(B[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is singular; matrix norm too large for expm");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(-i t H) v` for Hermitian `H` given as a matvec, via Lanczos with
/// full reorthogonalization. The Krylov dimension grows until the standard
/// residual estimate drops below `tol` (or the space is exhausted), so for
/// small problems this is exact to round-off.
pub fn expv_hermitian(
    matvec: impl Fn(&DVector<C64>) -> DVector<C64>,
    t: f64,
    v: &DVector<C64>,
    tol: f64,
    max_krylov: usize,
) -> DVector<C64> {
    let dim = v.len();
    let beta0 = v.norm();
    if beta0 == 0.0 {
        return v.clone();
    }
    let m_max = max_krylov.min(dim).max(2);

    let mut basis: Vec<DVector<C64>> = vec![v / C64::new(beta0, 0.0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let one = C64::new(1.0, 0.0);
    let mut converged_y: Option<Vec<C64>> = None;
    while basis.len() <= m_max {
        let m = basis.len();
        let mut w = matvec(&basis[m - 1]);
        let alpha = basis[m - 1].dotc(&w).re;
        alphas.push(alpha);
        w.axpy(C64::new(-alpha, 0.0), &basis[m - 1], one);
        if m > 1 {
            w.axpy(C64::new(-betas[m - 2], 0.0), &basis[m - 2], one);
        }
        // full reorthogonalization
        for q in &basis {
            let overlap = q.dotc(&w);
            w.axpy(-overlap, q, one);
        }
        let beta = w.norm();

        // exp(-i t T) e1 on the current tridiagonal
        let y = tridiag_exp_e1(&alphas, &betas, t);
        let err = beta * y[m - 1].norm() * t.abs().max(1.0);
        if err <= tol || beta < 1e-14 || m == m_max {
            converged_y = Some(y);
            break;
        }
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }

    let y = converged_y.expect("Lanczos loop always produces a result");
    let mut out = DVector::zeros(dim);
    for (q, &c) in basis.iter().zip(y.iter()) {
        out.axpy(c * C64::new(beta0, 0.0), q, one);
    }
    out
}

/// `exp(-i t T) e_1` for a real symmetric tridiagonal `T`.
fn tridiag_exp_e1(alphas: &[f64], betas: &[f64], t: f64) -> Vec<C64> {
    let m = alphas.len();
    let mut tm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tm[(i, i)] = alphas[i];
        if i + 1 < m {
            tm[(i, i + 1)] = betas[i];
            tm[(i + 1, i)] = betas[i];
        }
    }
    let eig = tm.symmetric_eigen();
    // y = U exp(-i t Lambda) U^T e1
    let mut y = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = C64::new(0.0, -t * eig.eigenvalues[k]).exp();
        let weight = phase * C64::new(eig.eigenvectors[(0, k)], 0.0);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += weight * C64::new(eig.eigenvectors[(i, k)], 0.0);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.3, 0.0), c(-1.0, 2.0)]));
        let e = expm(&a);
        assert!((e[(0, 0)] - c(0.3, 0.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-1.0, 2.0).exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(-i theta sigma_x) = cos(theta) I - i sin(theta) sigma_x
        let theta = 1.234;
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -theta), c(0.0, -theta), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-13);
        assert!((e[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-13);
    }

    #[test]
    fn expm_large_norm_scaling() {
        // exp(-i t H) for Hermitian H must stay unitary even for large t|H|.
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[c(40.0, 0.0), c(13.0, 5.0), c(13.0, -5.0), c(-22.0, 0.0)],
        );
        let a = &h * c(0.0, -1.0);
        let e = expm(&a);
        let unit = &e * e.adjoint();
        assert!((unit - DMatrix::<C64>::identity(2, 2)).camax() < 1e-12);
    }

    #[test]
    fn krylov_matches_dense() {
        // Hermitian matrix, moderate dimension.
        let dim = 24;
        let mut x = 0x1234_5678_9abc_def0u64;
        let mut rand = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = if i == j { c(rand(), 0.0) } else { c(rand(), rand()) };
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let v = DVector::from_fn(dim, |_, _| c(rand(), rand())).normalize();
        let t = 0.7;
        let dense = expm(&(&h * c(0.0, -t))) * &v;
        let krylov = expv_hermitian(|x| &h * x, t, &v, 1e-12, 64);
        assert!((dense - &krylov).norm() < 1e-10);
        // unitary: norm preserved
        assert!((krylov.norm() - 1.0).abs() < 1e-12);
    }
}
