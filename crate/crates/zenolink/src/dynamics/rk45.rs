//! Adaptive Dormand-Prince 5(4) integrator over complex dense matrices.
//!
//! Works on `DMatrix<C64>` states (density matrices, reduced blocks, or
//! column vectors). Steps are clipped to land exactly on every requested
//! output time, so no interpolation is involved. The embedded error is
//! controlled per step against `tol` (used as both absolute and relative
//! scale on the max-abs entry).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::C64;

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order solution weights (same as the last `A` row; FSAL scheme).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Error weights `b5 - b4`.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub tol: f64,
    /// Initial step; `None` picks a conservative fraction of the span.
    pub dt_initial: Option<f64>,
}

impl RkOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, dt_initial: None }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RkStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub max_step_error: f64,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `y += a * x`, elementwise over whole matrices.
pub(crate) fn axpy_mat(y: &mut DMatrix<C64>, a: C64, x: &DMatrix<C64>) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

/// Integrate `dy/dt = rhs(y)` (autonomous) from `t0` through every time in
/// `outputs` (ascending, all `>= t0`), invoking `on_output(index, t, y)` at
/// each one.
pub fn integrate_grid(
    mut rhs: impl FnMut(&DMatrix<C64>, &mut DMatrix<C64>),
    t0: f64,
    y0: DMatrix<C64>,
    outputs: &[f64],
    opts: &RkOptions,
    mut on_output: impl FnMut(usize, f64, &DMatrix<C64>),
) -> Result<RkStats> {
    assert!(opts.tol > 0.0, "tolerance must be positive");
    let mut stats = RkStats::default();
    let (rows, cols) = (y0.nrows(), y0.ncols());
    let mut y = y0;
    let mut t = t0;

    let span = outputs.last().copied().unwrap_or(t0) - t0;
    if span == 0.0 {
        for (i, &tp) in outputs.iter().enumerate() {
            on_output(i, tp, &y);
        }
        return Ok(stats);
    }

    let mut k: Vec<DMatrix<C64>> = (0..7).map(|_| DMatrix::zeros(rows, cols)).collect();
    let mut y_stage = DMatrix::zeros(rows, cols);
    let mut y_next = DMatrix::zeros(rows, cols);
    let mut err_mat = DMatrix::zeros(rows, cols);

    rhs(&y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut dt = opts.dt_initial.unwrap_or(span * 1e-3).min(span);
    let dt_floor = span * 1e-14;

    for (out_idx, &t_out) in outputs.iter().enumerate() {
        debug_assert!(t_out >= t - 1e-12, "outputs must be ascending");
        while t < t_out - 1e-14 * span.abs() {
            let mut h = dt.min(t_out - t);
            loop {
                // stages 2..7
                for (stage, a_row) in A.iter().enumerate() {
                    y_stage.copy_from(&y);
                    for (j, kj) in k.iter().take(stage + 1).enumerate() {
                        let a = a_row[j];
                        if a != 0.0 {
                            axpy_mat(&mut y_stage, C64::new(h * a, 0.0), kj);
                        }
                    }
                    let (_, tail) = k.split_at_mut(stage + 1);
                    rhs(&y_stage, &mut tail[0]);
                    stats.rhs_evals += 1;
                }

                y_next.copy_from(&y);
                err_mat.fill(C64::new(0.0, 0.0));
                for (j, kj) in k.iter().enumerate() {
                    if B5[j] != 0.0 {
                        axpy_mat(&mut y_next, C64::new(h * B5[j], 0.0), kj);
                    }
                    if E[j] != 0.0 {
                        axpy_mat(&mut err_mat, C64::new(h * E[j], 0.0), kj);
                    }
                }

                let scale = opts.tol * (1.0 + max_abs(&y).max(max_abs(&y_next)));
                let err = max_abs(&err_mat) / scale;
                stats.max_step_error = stats.max_step_error.max(err * opts.tol);

                if err <= 1.0 {
                    t += h;
                    std::mem::swap(&mut y, &mut y_next);
                    k.swap(0, 6); // FSAL: k7 is the derivative at the new point
                    stats.steps += 1;
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    dt = (h * grow).min(span);
                    break;
                }
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < dt_floor {
                    return Err(Error::StepUnderflow { t, dt: h });
                }
                // k[0] = f(y) is still valid after a rejection.
            }
        }
        on_output(out_idx, t_out, &y);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exponential_decay_scalar() {
        // dy/dt = -y, y(0) = 1
        let y0 = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let outputs = [0.5, 1.0, 2.0];
        let mut values = Vec::new();
        integrate_grid(
            |y, out| out.copy_from(&(y * c(-1.0, 0.0))),
            0.0,
            y0,
            &outputs,
            &RkOptions::with_tol(1e-10),
            |_, t, y| values.push((t, y[(0, 0)].re)),
        )
        .unwrap();
        for (t, v) in values {
            assert!((v - (-t).exp()).abs() < 1e-9, "t={t}: {v}");
        }
    }

    #[test]
    fn oscillator_phase() {
        // dy/dt = i w y -> |y| = 1, arg = w t
        let w = 3.0;
        let y0 = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let mut last = c(0.0, 0.0);
        integrate_grid(
            |y, out| out.copy_from(&(y * c(0.0, w))),
            0.0,
            y0,
            &[2.0],
            &RkOptions::with_tol(1e-11),
            |_, _, y| last = y[(0, 0)],
        )
        .unwrap();
        assert!((last - c((2.0 * w).cos(), (2.0 * w).sin())).norm() < 1e-8);
    }

    #[test]
    fn output_at_start_time() {
        let y0 = DMatrix::from_element(1, 1, c(2.0, 0.0));
        let mut seen = Vec::new();
        integrate_grid(
            |y, out| out.copy_from(&(y * c(-1.0, 0.0))),
            0.0,
            y0,
            &[0.0, 1.0],
            &RkOptions::with_tol(1e-9),
            |i, t, y| seen.push((i, t, y[(0, 0)].re)),
        )
        .unwrap();
        assert_eq!(seen.len(), 2);
        assert!((seen[0].2 - 2.0).abs() < 1e-15);
        assert!((seen[1].2 - 2.0 * (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn matrix_state_matches_expm() {
        // dY/dt = A Y with A non-normal.
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        let y0 = DMatrix::<C64>::identity(2, 2);
        let mut last = DMatrix::<C64>::zeros(2, 2);
        integrate_grid(
            |y, out| out.copy_from(&(&a * y)),
            0.0,
            y0,
            &[1.3],
            &RkOptions::with_tol(1e-11),
            |_, _, y| last.copy_from(y),
        )
        .unwrap();
        let oracle = crate::dynamics::expm::expm(&(&a * c(1.3, 0.0)));
        assert!((last - oracle).camax() < 1e-9);
    }
}
