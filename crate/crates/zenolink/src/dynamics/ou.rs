//! Ornstein-Uhlenbeck colored noise.
//!
//! `dx = -gamma x dt + sqrt(D) dW`, sampled by the exact discretization
//!
//! ```text
//! x_{k+1} = x_k e^{-gamma dt} + sqrt( D/(2 gamma) (1 - e^{-2 gamma dt}) ) xi_k
//! ```
//!
//! with stationary variance `D / (2 gamma)`. When the relaxation rate is
//! the fastest scale of a problem, the process acts on it as white noise of
//! strength `kappa_eff = D / (2 gamma^2)`.

use crate::error::{Error, Result};

use super::rng::{kind, CounterRng};

/// Sampled OU path of length `n_steps` (index 0 is the initial value).
///
/// With `x0 = None` the path starts from a stationary-distribution sample,
/// so the series is stationary as a whole.
pub fn ou_path(
    gamma: f64,
    diffusion: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
    x0: Option<f64>,
) -> Result<Vec<f64>> {
    let update = OuUpdate::new(gamma, diffusion, dt)?;
    let rng = CounterRng::new(seed);
    let mut x = match x0 {
        Some(v) => v,
        None => update.stationary_sigma * rng.normal([0, 0, 0, kind::OU_INIT]),
    };
    let mut path = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        path.push(x);
        x = update.advance(x, rng.normal([0, 0, k as u64, kind::OU_STEP]));
    }
    Ok(path)
}

/// Precomputed exact-discretization coefficients.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OuUpdate {
    pub decay: f64,
    pub noise_sigma: f64,
    pub stationary_sigma: f64,
}

impl OuUpdate {
    pub fn new(gamma: f64, diffusion: f64, dt: f64) -> Result<Self> {
        if gamma <= 0.0 || diffusion < 0.0 || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "OU process needs gamma > 0, D >= 0, dt > 0 (got gamma={gamma}, D={diffusion}, dt={dt})"
            )));
        }
        let decay = (-gamma * dt).exp();
        let stationary_var = diffusion / (2.0 * gamma);
        Ok(Self {
            decay,
            noise_sigma: (stationary_var * (1.0 - decay * decay)).sqrt(),
            stationary_sigma: stationary_var.sqrt(),
        })
    }

    #[inline]
    pub fn advance(&self, x: f64, xi: f64) -> f64 {
        x * self.decay + self.noise_sigma * xi
    }
}
