use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SolverError};
use crate::norms::CubePartition;
use crate::spectral::lp::LpSymbolTable;
use crate::Complex64;

const MAX_LEVELS: usize = 64;

struct GridInner {
    n: usize,
    length: f64,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbols: OnceLock<LpSymbolTable>,
    partitions: Vec<OnceLock<Arc<CubePartition>>>,
}

/// Uniform periodic grid on `[-L/2, L/2)` with `n` points (a power of two).
///
/// Cloning is cheap; FFT plans, Littlewood-Paley tables and cube partitions
/// are shared between clones.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(SolverError::InvalidInput(format!(
                "n_points must be a power of two >= 4, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SolverError::InvalidInput(format!("length must be positive, got {length}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let half = (n_points / 2) as i64;
        let xi = (0..n_points as i64)
            .map(|m| {
                let m = if m >= half { m - n_points as i64 } else { m };
                2.0 * PI * m as f64 / length
            })
            .collect();
        Ok(Grid {
            inner: Arc::new(GridInner {
                n: n_points,
                length,
                xi,
                forward,
                inverse,
                symbols: OnceLock::new(),
                partitions: (0..MAX_LEVELS).map(|_| OnceLock::new()).collect(),
            }),
        })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.inner.length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Angular frequencies in FFT order (`0, 1, ..., n/2-1, -n/2, ..., -1` times `2π/L`).
    #[inline]
    pub fn frequencies(&self) -> &[f64] {
        &self.inner.xi
    }

    /// Integer mode index of FFT slot `slot`.
    pub fn mode_index(&self, slot: usize) -> i64 {
        let n = self.inner.n as i64;
        let m = slot as i64;
        if m >= n / 2 {
            m - n
        } else {
            m
        }
    }

    /// FFT slot holding mode `m`, if representable.
    pub fn slot_of_mode(&self, m: i64) -> Option<usize> {
        let n = self.inner.n as i64;
        if m < -n / 2 || m >= n / 2 {
            return None;
        }
        Some(if m < 0 { (m + n) as usize } else { m as usize })
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.inner.length + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.inner.n).map(|i| self.x(i)).collect()
    }

    /// Largest resolved angular frequency `π n / L`.
    pub fn xi_max(&self) -> f64 {
        PI * self.inner.n as f64 / self.inner.length
    }

    /// Highest band whose projector is fully resolved: `floor(log2 xi_max) - 1`.
    pub fn j_max(&self) -> u32 {
        let l = self.xi_max().log2().floor() as i64 - 1;
        l.max(0) as u32
    }

    pub(crate) fn symbols(&self) -> &LpSymbolTable {
        self.inner.symbols.get_or_init(|| LpSymbolTable::new(self))
    }

    /// Smallest partition level whose single cube covers the whole box.
    pub fn level_max(&self) -> u32 {
        let l = self.inner.length.log2().ceil();
        if l <= 0.0 {
            0
        } else {
            l as u32
        }
    }

    pub(crate) fn partition(&self, level: u32) -> Arc<CubePartition> {
        let level = (level as usize).min(MAX_LEVELS - 1);
        self.inner.partitions[level]
            .get_or_init(|| Arc::new(CubePartition::new(self, level as u32)))
            .clone()
    }

    /// Space samples -> coefficients `c_m = FFT(u)_m / n`.
    pub(crate) fn forward(&self, values: &mut [Complex64]) {
        self.inner.forward.process(values);
        let scale = 1.0 / self.inner.n as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    pub(crate) fn inverse(&self, coeffs: &mut [Complex64]) {
        self.inner.inverse.process(coeffs);
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(SolverError::GridMismatch)
        }
    }
}
