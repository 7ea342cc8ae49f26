//! Littlewood-Paley symbols and the projectors built from them.
//!
//! The cutoff `φ₀` is 1 on `[-1, 1]`, 0 for `|ξ| ≥ 2`, and in between uses the
//! smooth transition `h(2-|ξ|) / (h(2-|ξ|) + h(|ξ|-1))` with
//! `h(t) = exp(-1/t)` for `t > 0`. Band symbols are differences of dilates,
//! so every sum over consecutive bands telescopes to a single dilate of `φ₀`.

use crate::spectral::grid::Grid;

#[inline]
fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let p = h(1.0 - t);
        p / (p + h(t))
    }
}

/// The fixed cutoff profile `φ₀`.
#[inline]
pub fn phi0(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        smooth_step(a - 1.0)
    }
}

#[inline]
fn dilate(xi: f64, e: i32) -> f64 {
    // multiplication by a power of two is exact
    xi * 2f64.powi(-e)
}

/// Band symbol `φ_j(ξ)`: `φ₀(ξ)` for `j = 0`, else `φ₀(2^{-j}ξ) - φ₀(2^{-j+1}ξ)`.
pub fn lp_symbol(j: u32, xi: f64) -> f64 {
    let j = j as i32;
    if j == 0 {
        phi0(xi)
    } else {
        phi0(dilate(xi, j)) - phi0(dilate(xi, j - 1))
    }
}

/// Symbol of `S_{<j} = Σ_{k<j} S_k`, i.e. `φ₀(2^{-(j-1)}ξ)`; zero for `j <= 0`.
pub fn below_symbol(j: i64, xi: f64) -> f64 {
    if j <= 0 {
        0.0
    } else {
        phi0(dilate(xi, (j - 1) as i32))
    }
}

/// Widened band symbol. `widen = 1` gives `S̃_j` (equal to 1 on `supp φ_j`,
/// supported in `[2^{j-2}, 2^{j+2}]`); each further step widens by one
/// octave on both sides and equals 1 on the support of the previous one.
pub fn wide_symbol(j: u32, widen: u32, xi: f64) -> f64 {
    let j = j as i32;
    let w = widen as i32;
    let outer = phi0(dilate(xi, j + w));
    if j == 0 {
        outer
    } else {
        outer - phi0(dilate(xi, j - 1 - w))
    }
}

/// Per-grid tables of the symbols above, indexed by band.
pub struct LpSymbolTable {
    pub(crate) bands: Vec<Vec<f64>>,
    pub(crate) wide: Vec<Vec<f64>>,
    pub(crate) wide2: Vec<Vec<f64>>,
    /// `below[j]` is the table of `S_{<j}` for `j = 0..=j_max + 1`.
    pub(crate) below: Vec<Vec<f64>>,
    /// Sum of all resolved band symbols, `φ₀(2^{-j_max}ξ)`.
    pub(crate) resolved: Vec<f64>,
}

impl LpSymbolTable {
    pub(crate) fn new(grid: &Grid) -> Self {
        let j_max = grid.j_max();
        let xi = grid.frequencies();
        let table = |f: &dyn Fn(f64) -> f64| xi.iter().map(|&x| f(x)).collect::<Vec<_>>();
        let bands = (0..=j_max).map(|j| table(&|x| lp_symbol(j, x))).collect();
        let wide = (0..=j_max).map(|j| table(&|x| wide_symbol(j, 1, x))).collect();
        let wide2 = (0..=j_max).map(|j| table(&|x| wide_symbol(j, 2, x))).collect();
        let below = (0..=j_max as i64 + 1)
            .map(|j| table(&|x| below_symbol(j, x)))
            .collect();
        let resolved = table(&|x| phi0(dilate(x, j_max as i32)));
        LpSymbolTable { bands, wide, wide2, below, resolved }
    }

    pub fn band(&self, j: u32) -> &[f64] {
        &self.bands[j as usize]
    }

    pub fn wide(&self, j: u32) -> &[f64] {
        &self.wide[j as usize]
    }

    pub fn wide2(&self, j: u32) -> &[f64] {
        &self.wide2[j as usize]
    }
}
