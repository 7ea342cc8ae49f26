//! Rescaling `u0^{(k)}(x) = 2^{λk} u0(2^{-k}x)`, the low/high split of the
//! rescaled data, the choice of `k`, and the map back to the original
//! variables.
//!
//! The rescaled box is `2^k` times longer. Mode `m` of the original grid
//! (frequency `2πm/L`) becomes mode `m` of the rescaled grid (frequency
//! `2πm/(2^k L) = 2^{-k}·2πm/L`), so the dilation is exact in frequency
//! space. The rescaled grid keeps the original spacing (`2^k N` points) up to
//! a point cap, beyond which the spacing coarsens.

use crate::error::{Result, SolverError};
use crate::norms::l2hs_norm;
use crate::spectral::{project_band, Grid, SpaceTimeField, SpectralField, TimeGrid};
use crate::Complex64;

/// Grids and exponents of one rescaling.
#[derive(Clone, Debug)]
pub struct RescaleContext {
    pub k: u32,
    pub lambda: f64,
    pub original_grid: Grid,
    pub rescaled_grid: Grid,
    pub theta: f64,
}

impl RescaleContext {
    pub fn new(original: &Grid, k: u32, lambda: f64, theta: f64, n_cap: usize) -> Result<Self> {
        Ok(RescaleContext {
            k,
            lambda,
            original_grid: original.clone(),
            rescaled_grid: rescaled_grid(original, k, n_cap)?,
            theta,
        })
    }

    /// Length of the original time interval covered by the unit rescaled interval.
    pub fn original_time(&self) -> f64 {
        2f64.powi(-3 * self.k as i32)
    }

    /// True if the point cap forced a coarser spacing than the original grid.
    pub fn coarsened(&self) -> bool {
        self.rescaled_grid.n_points() < self.original_grid.n_points() << self.k
    }
}

/// Grid of length `2^k L` with `min(2^k N, max(n_cap, N))` points.
pub fn rescaled_grid(original: &Grid, k: u32, n_cap: usize) -> Result<Grid> {
    let n = original.n_points();
    // largest power of two not above the cap (and never below n)
    let cap = n_cap.max(n);
    let cap = if cap.is_power_of_two() { cap } else { cap.next_power_of_two() / 2 };
    let target = n.checked_shl(k).filter(|&m| m >> k == n).unwrap_or(usize::MAX);
    Grid::new(target.min(cap), original.length() * 2f64.powi(k as i32))
}

/// Copies mode `m` of `u` to mode `m` of `target`, scaled by `amp`; modes
/// that do not fit are dropped.
fn transfer_modes(u: &SpectralField, target: &Grid, amp: f64) -> SpectralField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); target.n_points()];
    for (slot, c) in u.coeffs().iter().enumerate() {
        if let Some(t) = target.slot_of_mode(u.grid().mode_index(slot)) {
            coeffs[t] = c * amp;
        }
    }
    SpectralField::from_coeffs(target, coeffs)
}

/// `u0^{(k)} = 2^{λk} u0(2^{-k}x)` on the rescaled grid of `ctx`.
pub fn rescale_data(u0: &SpectralField, ctx: &RescaleContext) -> Result<SpectralField> {
    u0.grid().ensure_same(&ctx.original_grid)?;
    Ok(transfer_modes(u0, &ctx.rescaled_grid, 2f64.powf(ctx.lambda * ctx.k as f64)))
}

/// Inverse of [`rescale_data`]: `u(x) = 2^{-λk} U(2^k x)` on the original grid.
pub fn unrescale_data(u: &SpectralField, ctx: &RescaleContext) -> Result<SpectralField> {
    u.grid().ensure_same(&ctx.rescaled_grid)?;
    Ok(transfer_modes(u, &ctx.original_grid, 2f64.powf(-ctx.lambda * ctx.k as f64)))
}

/// `(S_0 u, u − S_0 u)`.
pub fn split_low_high(u: &SpectralField) -> (SpectralField, SpectralField) {
    let low = project_band(u, 0).expect("band 0 is always resolved");
    let high = u - &low;
    (low, high)
}

/// `u(t, x) = 2^{-λk}(v + u0l)(2^{3k} t, 2^k x)` on the original grid over
/// `[0, 2^{-3k} T]`, where `T` is the end of the rescaled time grid.
pub fn unrescale_solution(v: &SpaceTimeField, u0_low: &SpectralField, ctx: &RescaleContext) -> Result<SpaceTimeField> {
    v.grid().ensure_same(&ctx.rescaled_grid)?;
    let time = TimeGrid::new(v.time().t_end() * ctx.original_time(), v.time().steps())?;
    let slices = v
        .slices()
        .iter()
        .map(|s| unrescale_data(&(s + u0_low), ctx))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::from_slices(time, slices)
}

/// Outcome of the search for the rescaling level.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct KChoice {
    pub k: u32,
    /// `‖u0^{(k)h}‖_{l²H^s}` at each tried level.
    pub high_norms: Vec<f64>,
}

/// Smallest `k ≤ k_max` with `‖u0^{(k)h}‖_{l²H^s} ≤ θ` for which `admit`
/// accepts the rescaled data. `admit` receives the context and the rescaled
/// data and returns whether the solver's admission checks pass.
pub fn choose_k(
    u0: &SpectralField,
    s: f64,
    lambda: f64,
    theta: f64,
    k_max: u32,
    n_cap: usize,
    mut admit: impl FnMut(&RescaleContext, &SpectralField) -> Result<bool>,
) -> Result<KChoice> {
    let mut high_norms = Vec::new();
    let mut admitted = false;
    for k in 0..=k_max {
        let ctx = RescaleContext::new(u0.grid(), k, lambda, theta, n_cap)?;
        let u0k = rescale_data(u0, &ctx)?;
        let (_, high) = split_low_high(&u0k);
        let h = l2hs_norm(&high, s);
        high_norms.push(h);
        if h <= theta {
            admitted = admit(&ctx, &u0k)?;
            if admitted {
                return Ok(KChoice { k, high_norms });
            }
        }
    }
    Err(SolverError::KSearchExhausted { k_max, high_norm: *high_norms.last().unwrap_or(&0.0), admitted })
}
