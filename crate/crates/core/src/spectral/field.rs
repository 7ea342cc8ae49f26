use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::spectral::grid::Grid;
use crate::Complex64;

/// One time slice of a complex field on a periodic grid.
///
/// Frequency-side coefficients are canonical: `u(x_k) = Σ_m c_m e^{2πi m k / n}`.
/// Space samples are materialized on demand.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()] }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.n_points(), "coefficient count must match the grid");
        SpectralField { grid: grid.clone(), coeffs }
    }

    pub fn from_values(grid: &Grid, values: &[Complex64]) -> Self {
        assert_eq!(values.len(), grid.n_points(), "sample count must match the grid");
        let mut coeffs = values.to_vec();
        grid.forward(&mut coeffs);
        SpectralField { grid: grid.clone(), coeffs }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values: Vec<_> = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self::from_values(grid, &values)
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Pure mode `e^{iξx}` for the grid frequency with integer index `m`.
    pub fn mode(grid: &Grid, m: i64) -> Self {
        let xi = 2.0 * std::f64::consts::PI * m as f64 / grid.length();
        Self::from_fn(grid, |x| Complex64::from_polar(1.0, xi * x))
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn values(&self) -> Vec<Complex64> {
        let mut v = self.coeffs.clone();
        self.grid.inverse(&mut v);
        v
    }

    /// Diagonal frequency multiplier given as a table in FFT order.
    pub fn apply_symbol(&self, symbol: &[f64]) -> Self {
        let coeffs = self.coeffs.iter().zip(symbol).map(|(c, s)| c * s).collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }

    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.frequencies())
            .map(|(c, &xi)| c * m(xi))
            .collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }

    /// Spectral derivative `(iξ)^order`, order 1..=3.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(SolverError::UnsupportedOrder(order));
        }
        Ok(self.deriv(order))
    }

    pub(crate) fn deriv(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        self.apply_multiplier(|xi| Complex64::new(0.0, xi).powu(order))
    }

    /// Pointwise product (computed on the space side, no dealiasing).
    pub fn mul_pointwise(&self, other: &SpectralField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let a = self.values();
        let b = other.values();
        let prod: Vec<_> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_values(&self.grid, &prod)
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let v: Vec<_> = self.values().into_iter().map(f).collect();
        Self::from_values(&self.grid, &v)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        SpectralField { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        SpectralField { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn axpy(&mut self, a: Complex64, x: &SpectralField) {
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * d;
        }
    }

    /// `‖u‖_{L²}` over one period (Parseval).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(∫ u \bar v dx)` over one period.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        let s: Complex64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.length()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, rhs.grid);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, rhs.grid);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale_real(rhs)
    }
}

/// Uniform samples `t_n = n · t_end / steps`, `n = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end.is_finite() && t_end >= 0.0) {
            return Err(SolverError::InvalidInput(format!(
                "time grid needs steps >= 1 and t_end >= 0 (got {steps}, {t_end})"
            )));
        }
        Ok(TimeGrid { t_end, steps })
    }

    /// The unit interval with `steps` steps.
    pub fn unit(steps: usize) -> Self {
        TimeGrid { t_end: 1.0, steps: steps.max(1) }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn samples(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_end
        } else {
            n as f64 * self.dt()
        }
    }

    /// Trapezoid weights for `∫_0^{t_end}`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps)
            .map(|n| if n == 0 || n == self.steps { 0.5 * dt } else { dt })
            .collect()
    }
}

/// A field sampled on a uniform time grid; all slices share one spatial grid.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    time: TimeGrid,
    slices: Vec<SpectralField>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid, time: TimeGrid) -> Self {
        SpaceTimeField { time, slices: vec![SpectralField::zeros(grid); time.samples()] }
    }

    pub fn from_slices(time: TimeGrid, slices: Vec<SpectralField>) -> Result<Self> {
        if slices.len() != time.samples() {
            return Err(SolverError::InvalidInput(format!(
                "expected {} slices, got {}",
                time.samples(),
                slices.len()
            )));
        }
        if let Some(first) = slices.first() {
            if slices.iter().any(|s| s.grid() != first.grid()) {
                return Err(SolverError::GridMismatch);
            }
        }
        Ok(SpaceTimeField { time, slices })
    }

    pub fn constant(field: &SpectralField, time: TimeGrid) -> Self {
        SpaceTimeField { time, slices: vec![field.clone(); time.samples()] }
    }

    pub fn from_fn(time: TimeGrid, f: impl Fn(f64) -> SpectralField + Sync) -> Self {
        let slices = (0..time.samples()).into_par_iter().map(|n| f(time.time(n))).collect();
        SpaceTimeField { time, slices }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    #[inline]
    pub fn time(&self) -> TimeGrid {
        self.time
    }

    #[inline]
    pub fn slices(&self) -> &[SpectralField] {
        &self.slices
    }

    #[inline]
    pub fn slice(&self, n: usize) -> &SpectralField {
        &self.slices[n]
    }

    pub fn slices_mut(&mut self) -> &mut [SpectralField] {
        &mut self.slices
    }

    pub fn initial(&self) -> &SpectralField {
        &self.slices[0]
    }

    pub fn compatible(&self, other: &SpaceTimeField) -> Result<()> {
        if self.time != other.time {
            return Err(SolverError::InvalidInput("time grids differ".into()));
        }
        self.grid().ensure_same(other.grid())
    }

    /// Slice-wise map; slices are processed independently, order preserved.
    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField + Sync + Send) -> Self {
        let slices = self.slices.par_iter().map(f).collect();
        SpaceTimeField { time: self.time, slices }
    }

    pub fn map_indexed(&self, f: impl Fn(usize, &SpectralField) -> SpectralField + Sync + Send) -> Self {
        let slices = self.slices.par_iter().enumerate().map(|(n, s)| f(n, s)).collect();
        SpaceTimeField { time: self.time, slices }
    }

    pub fn zip_map(
        &self,
        other: &SpaceTimeField,
        f: impl Fn(&SpectralField, &SpectralField) -> SpectralField + Sync + Send,
    ) -> Self {
        debug_assert_eq!(self.slices.len(), other.slices.len());
        let slices = self.slices.par_iter().zip(other.slices.par_iter()).map(|(a, b)| f(a, b)).collect();
        SpaceTimeField { time: self.time, slices }
    }

    pub fn apply_symbol(&self, symbol: &[f64]) -> Self {
        self.map(|s| s.apply_symbol(symbol))
    }

    pub fn derivative(&self, order: u32) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(SolverError::UnsupportedOrder(order));
        }
        Ok(self.deriv(order))
    }

    pub(crate) fn deriv(&self, order: u32) -> Self {
        self.map(|s| s.deriv(order))
    }

    pub fn mul_pointwise(&self, other: &SpaceTimeField) -> Self {
        self.zip_map(other, |a, b| a.mul_pointwise(b))
    }

    /// Product with a time-independent field.
    pub fn mul_static(&self, other: &SpectralField) -> Self {
        self.map(|a| a.mul_pointwise(other))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|s| s.scale(a))
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.map(|s| s.scale_real(a))
    }

    pub fn axpy(&mut self, a: Complex64, x: &SpaceTimeField) {
        for (s, t) in self.slices.iter_mut().zip(&x.slices) {
            s.axpy(a, t);
        }
    }

    pub fn add_static(&self, f: &SpectralField) -> Self {
        self.map(|s| s + f)
    }

    /// `‖u‖_{L²_{t,x}}`, trapezoid rule in time.
    pub fn l2_tx(&self) -> f64 {
        let w = self.time.trapezoid_weights();
        self.slices
            .iter()
            .zip(&w)
            .map(|(s, w)| w * s.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖u‖_{L^∞_t L²_x}`, max over samples.
    pub fn linf_l2(&self) -> f64 {
        self.slices.iter().map(|s| s.l2_norm()).fold(0.0, f64::max)
    }

    /// `‖u‖_{L¹_t L²_x}`, trapezoid rule in time.
    pub fn l1_l2(&self) -> f64 {
        let w = self.time.trapezoid_weights();
        self.slices.iter().zip(&w).map(|(s, w)| w * s.l2_norm()).sum()
    }

    pub fn linf_tx(&self) -> f64 {
        self.slices.iter().map(|s| s.linf_norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.is_zero())
    }
}

impl Add for &SpaceTimeField {
    type Output = SpaceTimeField;
    fn add(self, rhs: &SpaceTimeField) -> SpaceTimeField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &SpaceTimeField {
    type Output = SpaceTimeField;
    fn sub(self, rhs: &SpaceTimeField) -> SpaceTimeField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &SpaceTimeField {
    type Output = SpaceTimeField;
    fn neg(self) -> SpaceTimeField {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&SpaceTimeField> for SpaceTimeField {
    fn add_assign(&mut self, rhs: &SpaceTimeField) {
        for (a, b) in self.slices.iter_mut().zip(&rhs.slices) {
            *a += b;
        }
    }
}

impl SubAssign<&SpaceTimeField> for SpaceTimeField {
    fn sub_assign(&mut self, rhs: &SpaceTimeField) {
        for (a, b) in self.slices.iter_mut().zip(&rhs.slices) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &SpaceTimeField {
    type Output = SpaceTimeField;
    fn mul(self, rhs: f64) -> SpaceTimeField {
        self.scale_real(rhs)
    }
}
