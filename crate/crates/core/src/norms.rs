//! Space-time norms built on dyadic cube partitions.
//!
//! - `l²H^s`: `(Σ_j 2^{2js} ‖S_j u‖²_{l²_{2j}L²})^{1/2}`.
//! - local energy `X`: `sup_{l, Q ∈ 𝒬_l} 2^{-l/2} ‖u‖_{L²([0,1]×Q)}`.
//! - `X_j = 2^j ‖·‖_X + ‖·‖_{L^∞_t L²_x}` and `l²X^s = (Σ_j 2^{2js} ‖S_j u‖²_{l²_{2j}X_j})^{1/2}`.
//! - a computable upper bound `Ŷ` for the atomic forcing space and the
//!   matching `Y_j`, `l²Y^s` surrogates.
//!
//! Frequencies beyond the resolved bands (`j > j_max`) are collected into one
//! extra "tail" band with index `j_max + 1`; for fields produced by the solver
//! this band is empty.
//!
//! Time integrals use the trapezoid rule, `L^∞_t` is the max over samples.
//! Reductions over cubes and bands run in index order.

use rayon::prelude::*;

use crate::spectral::{project_band, unresolved_tail, Grid, SpaceTimeField, SpectralField};
use crate::Complex64;

/// Cubes of side `≈ 2^level` tiling the periodic box, with a smooth square
/// partition of unity `Σ_Q χ_Q² = 1` subordinate to them.
#[derive(Debug)]
pub struct CubePartition {
    level: u32,
    width: f64,
    degenerate: bool,
    /// Hard cube index of every grid point.
    cube_of_point: Vec<u32>,
    /// Window entries `(point, χ_Q²)` per cube, sorted by point.
    windows: Vec<Vec<(usize, f64)>>,
    /// Window entries `(cube, χ_Q²)` per point.
    by_point: Vec<Vec<(u32, f64)>>,
}

impl CubePartition {
    pub(crate) fn new(grid: &Grid, level: u32) -> Self {
        let length = grid.length();
        let side = 2f64.powi(level as i32);
        let degenerate = side > length;
        let n_cubes = ((length / side).floor() as usize).max(1);
        let width = length / n_cubes as f64;
        let n = grid.n_points();
        let mut cube_of_point = Vec::with_capacity(n);
        let mut by_point: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let y = grid.x(i) + 0.5 * length;
            let c0 = ((y / width).floor() as usize).min(n_cubes - 1);
            cube_of_point.push(c0 as u32);
            let mut entries: Vec<(u32, f64)> = Vec::with_capacity(3);
            let candidates: [i64; 3] = [c0 as i64 - 1, c0 as i64, c0 as i64 + 1];
            for c in candidates {
                let c = c.rem_euclid(n_cubes as i64) as usize;
                if entries.iter().any(|&(e, _)| e as usize == c) {
                    continue;
                }
                let g = if n_cubes == 1 {
                    1.0
                } else {
                    let start = c as f64 * width;
                    let rel = (y - start).rem_euclid(length);
                    let dist = if rel < width { 0.0 } else { (rel - width).min(length - rel) };
                    crate::spectral::smooth_step(2.0 * dist)
                };
                if g > 0.0 {
                    entries.push((c as u32, g * g));
                }
            }
            let total: f64 = entries.iter().map(|e| e.1).sum();
            for e in entries.iter_mut() {
                e.1 /= total;
            }
            entries.sort_by_key(|e| e.0);
            by_point.push(entries);
        }
        let mut windows = vec![Vec::new(); n_cubes];
        for (i, entries) in by_point.iter().enumerate() {
            for &(c, w) in entries {
                windows[c as usize].push((i, w));
            }
        }
        CubePartition { level, width, degenerate, cube_of_point, windows, by_point }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_cubes(&self) -> usize {
        self.windows.len()
    }

    pub fn cube_width(&self) -> f64 {
        self.width
    }

    /// True when a single cube of side `2^level` would not fit in the box.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `χ_Q²` at every grid point for cube `q`.
    pub fn window_squared(&self, q: usize, n_points: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_points];
        for &(i, w) in &self.windows[q] {
            out[i] = w;
        }
        out
    }

    /// Hard cube (index into `0..n_cubes`) containing grid point `i`.
    pub fn hard_cube(&self, i: usize) -> usize {
        self.cube_of_point[i] as usize
    }
}

/// Space samples of every time slice together with the trapezoid weights.
struct Samples {
    values: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
    dx: f64,
    /// `ρ(x) = ∫ |u(t,x)|² dt`.
    rho: Vec<f64>,
}

impl Samples {
    fn new(u: &SpaceTimeField) -> Self {
        let values: Vec<Vec<Complex64>> = u.slices().par_iter().map(|s| s.values()).collect();
        let weights = u.time().trapezoid_weights();
        let n = u.grid().n_points();
        let mut rho = vec![0.0; n];
        for (v, w) in values.iter().zip(&weights) {
            for (r, z) in rho.iter_mut().zip(v) {
                *r += w * z.norm_sqr();
            }
        }
        Samples { values, weights, dx: u.grid().dx(), rho }
    }

    fn window_l2tx_sq(&self, window: &[(usize, f64)]) -> f64 {
        window.iter().map(|&(i, w)| self.rho[i] * w).sum::<f64>() * self.dx
    }

    fn window_slice_l2_sq(&self, window: &[(usize, f64)]) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| window.iter().map(|&(i, w)| v[i].norm_sqr() * w).sum::<f64>() * self.dx)
            .collect()
    }

    fn window_linf_l2(&self, window: &[(usize, f64)]) -> f64 {
        self.window_slice_l2_sq(window).into_iter().fold(0.0, f64::max).sqrt()
    }

    fn window_l1_l2(&self, window: &[(usize, f64)]) -> f64 {
        self.window_slice_l2_sq(window)
            .into_iter()
            .zip(&self.weights)
            .map(|(e, w)| w * e.sqrt())
            .sum()
    }

    fn window_density(&self, window: &[(usize, f64)]) -> Vec<(usize, f64)> {
        window.iter().map(|&(i, w)| (i, self.rho[i] * w)).collect()
    }

    fn dense_density(&self) -> Vec<(usize, f64)> {
        self.rho.iter().copied().enumerate().collect()
    }
}

/// `sup_l 2^{-l/2} (max_Q Σ_{x_i ∈ Q} ρ_i dx)^{1/2}` for a density given as
/// `(point, value)` entries sorted by point.
fn x_from_density(grid: &Grid, density: &[(usize, f64)]) -> f64 {
    let dx = grid.dx();
    let mut best = 0.0f64;
    for level in 0..=grid.level_max() {
        let part = grid.partition(level);
        let mut sums = vec![0.0; part.n_cubes()];
        for &(i, r) in density {
            sums[part.hard_cube(i)] += r;
        }
        let peak = sums.into_iter().fold(0.0, f64::max);
        best = best.max(2f64.powf(-0.5 * level as f64) * (peak * dx).sqrt());
    }
    best
}

/// `min_l Σ_{Q ∈ 𝒬_l} 2^{l/2} (Σ_i ρ_i χ_Q²(x_i) dx)^{1/2}`.
fn y_hat_from_density(grid: &Grid, density: &[(usize, f64)]) -> f64 {
    let dx = grid.dx();
    let mut best = f64::INFINITY;
    for level in 0..=grid.level_max() {
        let part = grid.partition(level);
        let mut sums = vec![0.0; part.n_cubes()];
        for &(i, r) in density {
            for &(c, w) in &part.by_point[i] {
                sums[c as usize] += r * w;
            }
        }
        let total: f64 = sums.into_iter().map(|s| (s * dx).sqrt()).sum();
        best = best.min(2f64.powf(0.5 * level as f64) * total);
    }
    best
}

/// Inner norm used inside a partition sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerNorm {
    /// `‖u χ_Q‖_{L²_{t,x}}`
    L2tx,
    /// `‖u χ_Q‖_{L^∞_t L²_x}`
    LinfL2,
    /// `‖u χ_Q‖_{L²([0,1]×Q)}` (restricted to the hard cube)
    L2Cube,
    /// `‖u χ_Q‖_X`
    X,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionNorm {
    pub value: f64,
    /// The requested cube side exceeds the box; the value is the
    /// whole-domain inner norm.
    pub degenerate: bool,
}

/// `(Σ_Q ‖u χ_Q‖²_inner)^{1/2}` over the cubes of `𝒬_level`.
pub fn l2_partition_norm(u: &SpaceTimeField, level: u32, inner: InnerNorm) -> PartitionNorm {
    let grid = u.grid();
    let part = grid.partition(level);
    let samples = Samples::new(u);
    let per_cube: Vec<f64> = part
        .windows
        .par_iter()
        .enumerate()
        .map(|(q, win)| match inner {
            InnerNorm::L2tx => samples.window_l2tx_sq(win),
            InnerNorm::LinfL2 => samples.window_linf_l2(win).powi(2),
            InnerNorm::L2Cube => {
                let restricted: Vec<_> = win.iter().copied().filter(|&(i, _)| part.hard_cube(i) == q).collect();
                samples.window_l2tx_sq(&restricted)
            }
            InnerNorm::X => x_from_density(grid, &samples.window_density(win)).powi(2),
        })
        .collect();
    PartitionNorm { value: per_cube.iter().sum::<f64>().sqrt(), degenerate: part.is_degenerate() }
}

/// `(Σ_Q ‖u χ_Q‖²_{L²})^{1/2}` for a single slice.
pub fn l2_partition_norm_field(u: &SpectralField, level: u32) -> PartitionNorm {
    let part = u.grid().partition(level);
    let v = u.values();
    let dx = u.grid().dx();
    let total: f64 = part
        .windows
        .iter()
        .map(|win| win.iter().map(|&(i, w)| v[i].norm_sqr() * w).sum::<f64>() * dx)
        .sum();
    PartitionNorm { value: total.sqrt(), degenerate: part.is_degenerate() }
}

/// Local energy norm `sup_{l, Q} 2^{-l/2} ‖u‖_{L²([0,1]×Q)}` over levels
/// `0..=level_max` and the hard cubes of each level.
pub fn x_norm(u: &SpaceTimeField) -> f64 {
    let samples = Samples::new(u);
    x_from_density(u.grid(), &samples.dense_density())
}

/// `‖u‖_{X_j} = 2^j ‖u‖_X + ‖u‖_{L^∞_t L²_x}`.
pub fn xj_norm(u: &SpaceTimeField, j: u32) -> f64 {
    2f64.powi(j as i32) * x_norm(u) + u.linf_l2()
}

/// `‖u‖_{l²_{2j} X_j}`.
pub fn l2xj_norm(u: &SpaceTimeField, j: u32) -> f64 {
    let grid = u.grid();
    let part = grid.partition(2 * j);
    let samples = Samples::new(u);
    let scale = 2f64.powi(j as i32);
    let per_cube: Vec<f64> = part
        .windows
        .par_iter()
        .map(|win| {
            let x = x_from_density(grid, &samples.window_density(win));
            let e = samples.window_linf_l2(win);
            (scale * x + e).powi(2)
        })
        .collect();
    per_cube.iter().sum::<f64>().sqrt()
}

/// `Y_j`-surrogate summed over the cubes of `𝒬_{2j}`: `‖f‖_{l²_{2j} Y_j}`.
fn l2_yj(f: &SpaceTimeField, j: u32) -> f64 {
    let grid = f.grid();
    let part = grid.partition(2 * j);
    let samples = Samples::new(f);
    let scale = 2f64.powi(-(j as i32));
    let per_cube: Vec<f64> = part
        .windows
        .par_iter()
        .map(|win| {
            let y = y_hat_from_density(grid, &samples.window_density(win));
            let l1 = samples.window_l1_l2(win);
            (scale * y).min(l1).powi(2)
        })
        .collect();
    per_cube.iter().sum::<f64>().sqrt()
}

/// The band pieces `S_0 u, …, S_{j_max} u` followed by the unresolved tail.
fn band_pieces(u: &SpaceTimeField) -> Vec<(u32, SpaceTimeField)> {
    let j_max = u.grid().j_max();
    let mut out: Vec<(u32, SpaceTimeField)> = (0..=j_max)
        .map(|j| (j, u.project_band(j).expect("resolved band")))
        .collect();
    let tail = u.map(unresolved_tail);
    out.push((j_max + 1, tail));
    out
}

fn weighted_bands(
    u: &SpaceTimeField,
    s: f64,
    per_band: impl Fn(&SpaceTimeField, u32) -> f64 + Sync + Send,
) -> Vec<f64> {
    band_pieces(u)
        .into_par_iter()
        .map(|(j, piece)| {
            if piece.is_zero() {
                0.0
            } else {
                2f64.powf(j as f64 * s) * per_band(&piece, j)
            }
        })
        .collect()
}

fn square_sum(parts: &[f64]) -> f64 {
    parts.iter().map(|p| p * p).sum::<f64>().sqrt()
}

/// Per-band contributions `2^{js} ‖S_j u‖_{l²_{2j}X_j}` (tail band last).
pub fn l2xs_bands(u: &SpaceTimeField, s: f64) -> Vec<f64> {
    weighted_bands(u, s, l2xj_norm)
}

pub fn l2xs_norm(u: &SpaceTimeField, s: f64) -> f64 {
    square_sum(&l2xs_bands(u, s))
}

/// Per-band contributions `2^{js} ‖S_j u‖_{l²_{2j}L²}` (tail band last).
pub fn l2hs_bands(u: &SpectralField, s: f64) -> Vec<f64> {
    let j_max = u.grid().j_max();
    let mut pieces: Vec<(u32, SpectralField)> =
        (0..=j_max).map(|j| (j, project_band(u, j).expect("resolved band"))).collect();
    pieces.push((j_max + 1, unresolved_tail(u)));
    pieces
        .into_par_iter()
        .map(|(j, p)| 2f64.powf(j as f64 * s) * l2_partition_norm_field(&p, 2 * j).value)
        .collect()
}

pub fn l2hs_norm(u: &SpectralField, s: f64) -> f64 {
    square_sum(&l2hs_bands(u, s))
}

/// Standard Sobolev norm `‖(1+ξ²)^{s/2} û‖_{L²}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let l = u.grid().length();
    let sum: f64 = u
        .coeffs()
        .iter()
        .zip(u.grid().frequencies())
        .map(|(c, xi)| (1.0 + xi * xi).powf(s) * c.norm_sqr())
        .sum();
    (l * sum).sqrt()
}

/// `Ŷ(f) = min_l Σ_{Q∈𝒬_l} 2^{l/2} ‖f χ_Q‖_{L²_{t,x}}`, an upper bound for
/// the atomic norm (each windowed piece is a multiple of an atom).
pub fn y_surrogate(f: &SpaceTimeField) -> f64 {
    let samples = Samples::new(f);
    y_hat_from_density(f.grid(), &samples.dense_density())
}

/// `min(2^{-j} Ŷ(f), ‖f‖_{L¹_t L²_x})`.
pub fn yj_surrogate(f: &SpaceTimeField, j: u32) -> f64 {
    (2f64.powi(-(j as i32)) * y_surrogate(f)).min(f.l1_l2())
}

/// Per-band contributions `2^{js} ‖S_j f‖_{l²_{2j}Y_j}` (surrogate; tail band last).
pub fn l2ys_bands(f: &SpaceTimeField, s: f64) -> Vec<f64> {
    weighted_bands(f, s, l2_yj)
}

pub fn l2ys_surrogate(f: &SpaceTimeField, s: f64) -> f64 {
    square_sum(&l2ys_bands(f, s))
}

/// Labeled norm values for one space-time field.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NormReport {
    /// `l²H^s` of the initial slice.
    pub l2hs: f64,
    pub l2xs: f64,
    pub x: f64,
    pub y_surrogate: f64,
    pub l2ys_surrogate: f64,
    pub l2hs_bands: Vec<f64>,
    pub l2xs_bands: Vec<f64>,
    pub l2ys_bands: Vec<f64>,
}

impl NormReport {
    pub fn evaluate(u: &SpaceTimeField, s: f64) -> Self {
        let l2hs_bands = l2hs_bands(u.initial(), s);
        let l2xs_bands = l2xs_bands(u, s);
        let l2ys_bands = l2ys_bands(u, s);
        NormReport {
            l2hs: square_sum(&l2hs_bands),
            l2xs: square_sum(&l2xs_bands),
            x: x_norm(u),
            y_surrogate: y_surrogate(u),
            l2ys_surrogate: square_sum(&l2ys_bands),
            l2hs_bands,
            l2xs_bands,
            l2ys_bands,
        }
    }
}
