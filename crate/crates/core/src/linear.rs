//! Linear solves: the Airy propagator, Duhamel integration, the conjugated
//! frequency-localized band solve, the error-correction series for one band
//! and the global paradifferential solve assembled from the bands.
//!
//! Time discretization. With `E(t) = e^{iξ³t}` the free flow of `∂t + ∂x³`,
//! the interaction variable `ŵ = E(-t)û` obeys `∂t ŵ = E(-t) f̂`. Duhamel
//! integrates that right-hand side per step with the Simpson weights
//! `(1, 4, 1)/6` (the classical four-stage scheme for a known forcing), the
//! midpoint value taken from a cubic interpolant of neighbouring samples.
//! The operator `∂t + ∂x³` is evaluated as `E(t) ∂t ŵ` with fourth-order
//! five-point differences, so both directions are fourth-order accurate and
//! the Airy part is exact.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::spectral::{Grid, SpaceTimeField, SpectralField, TimeGrid, PARA_GAP};
use crate::Complex64;

/// Smallest number of time steps the stencils support.
pub const MIN_STEPS: usize = 4;

fn check_steps(time: TimeGrid) -> Result<()> {
    if time.steps() < MIN_STEPS {
        return Err(SolverError::InvalidInput(format!(
            "at least {MIN_STEPS} time steps are required, got {}",
            time.steps()
        )));
    }
    Ok(())
}

#[inline]
fn airy_phase(xi: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, xi * xi * xi * t)
}

/// Free Airy flow `e^{-t∂x³}u`: frequency multiplication by `e^{iξ³t}`.
pub fn airy_evolve(u: &SpectralField, t: f64) -> SpectralField {
    u.apply_multiplier(|xi| airy_phase(xi, t))
}

/// Free Airy evolution of `u0` sampled on a time grid.
pub fn airy_flow(u0: &SpectralField, time: TimeGrid) -> SpaceTimeField {
    SpaceTimeField::from_fn(time, |t| airy_evolve(u0, t))
}

fn to_interaction(u: &SpaceTimeField) -> Vec<Vec<Complex64>> {
    let time = u.time();
    u.slices()
        .par_iter()
        .enumerate()
        .map(|(n, s)| {
            let t = time.time(n);
            s.coeffs().iter().zip(s.grid().frequencies()).map(|(c, &xi)| c * airy_phase(xi, -t)).collect()
        })
        .collect()
}

fn from_interaction(grid: &Grid, time: TimeGrid, w: Vec<Vec<Complex64>>) -> SpaceTimeField {
    let slices: Vec<SpectralField> = w
        .into_par_iter()
        .enumerate()
        .map(|(n, mut c)| {
            let t = time.time(n);
            for (z, &xi) in c.iter_mut().zip(grid.frequencies()) {
                *z *= airy_phase(xi, t);
            }
            SpectralField::from_coeffs(grid, c)
        })
        .collect();
    SpaceTimeField::from_slices(time, slices).expect("slice count matches time grid")
}

/// Five-point fourth-order first-derivative weights at node `n` of `0..=m`
/// (centered inside, one-sided at the two nodes nearest each end).
fn fd_stencil(n: usize, m: usize) -> (usize, [f64; 5]) {
    const FWD0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const FWD1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    let mirror = |w: [f64; 5]| [-w[4], -w[3], -w[2], -w[1], -w[0]];
    match n {
        0 => (0, FWD0),
        1 => (0, FWD1),
        _ if n == m => (m - 4, mirror(FWD0)),
        _ if n + 1 == m => (m - 4, mirror(FWD1)),
        _ => (n - 2, CENTER),
    }
}

fn fd_derivative(samples: &[Vec<Complex64>], dt: f64) -> Vec<Vec<Complex64>> {
    let m = samples.len() - 1;
    let scale = 1.0 / (12.0 * dt);
    (0..=m)
        .into_par_iter()
        .map(|n| {
            let (start, w) = fd_stencil(n, m);
            let len = samples[0].len();
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            for (k, wk) in w.iter().enumerate() {
                if *wk == 0.0 {
                    continue;
                }
                let c = wk * scale;
                for (o, s) in out.iter_mut().zip(&samples[start + k]) {
                    *o += s * c;
                }
            }
            out
        })
        .collect()
}

/// `∂t u` by fourth-order finite differences on the time grid.
pub fn time_derivative(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    check_steps(u.time())?;
    let samples: Vec<Vec<Complex64>> = u.slices().iter().map(|s| s.coeffs().to_vec()).collect();
    let d = fd_derivative(&samples, u.time().dt());
    let grid = u.grid();
    let slices = d.into_iter().map(|c| SpectralField::from_coeffs(grid, c)).collect();
    SpaceTimeField::from_slices(u.time(), slices)
}

/// `(∂t + ∂x³) u`, computed as `E(t) ∂t (E(-t) u)`.
pub fn airy_operator(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    check_steps(u.time())?;
    let w = to_interaction(u);
    let dw = fd_derivative(&w, u.time().dt());
    Ok(from_interaction(u.grid(), u.time(), dw))
}

/// Cubic-interpolated midpoint of step `n -> n+1` from four neighbouring samples.
fn midpoint(g: &[Vec<Complex64>], n: usize, out: &mut [Complex64]) {
    let m = g.len() - 1;
    let (start, w): (usize, [f64; 4]) = if n == 0 {
        (0, [5.0, 15.0, -5.0, 1.0])
    } else if n + 1 == m {
        (m - 3, [1.0, -5.0, 15.0, 5.0])
    } else {
        (n - 1, [-1.0, 9.0, 9.0, -1.0])
    };
    for o in out.iter_mut() {
        *o = Complex64::new(0.0, 0.0);
    }
    for (k, wk) in w.iter().enumerate() {
        let c = wk / 16.0;
        for (o, s) in out.iter_mut().zip(&g[start + k]) {
            *o += s * c;
        }
    }
}

/// Solution of `(∂t + ∂x³) u = f`, `u(0) = u0` on the time grid of `f`.
pub fn duhamel_solve(u0: &SpectralField, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let time = f.time();
    check_steps(time)?;
    u0.grid().ensure_same(f.grid())?;
    let grid = f.grid().clone();
    let dt = time.dt();
    let n = grid.n_points();
    let g = to_interaction(f);
    let mut w = u0.coeffs().to_vec();
    let mut out = Vec::with_capacity(time.samples());
    out.push(w.clone());
    let mut mid = vec![Complex64::new(0.0, 0.0); n];
    for step in 0..time.steps() {
        midpoint(&g, step, &mut mid);
        let c = dt / 6.0;
        for i in 0..n {
            w[i] += c * (g[step][i] + 4.0 * mid[i] + g[step + 1][i]);
        }
        out.push(w.clone());
    }
    Ok(from_interaction(&grid, time, out))
}

/// `R(g, h) = (⅓(∂t+∂x³)g − ⅓ g_x g_xx + (1/27) g_x³) h + (g_xx − ⅓ g_x²) h_x`,
/// the remainder of the conjugation identity
/// `(∂t + ∂x³ − g_x ∂x²)(e^{g/3} w) = e^{g/3}(∂t + ∂x³) w + R(g, e^{g/3} w)`.
pub fn remainder_r(g: &SpaceTimeField, h: &SpaceTimeField) -> Result<SpaceTimeField> {
    g.compatible(h)?;
    let dg = time_derivative(g)?;
    let g3 = g.deriv(3);
    let gx = g.deriv(1);
    let gxx = g.deriv(2);
    let hx = h.deriv(1);
    let third = 1.0 / 3.0;
    let slices: Vec<SpectralField> = (0..g.time().samples())
        .into_par_iter()
        .map(|n| {
            let a = (dg.slice(n) + g3.slice(n)).values();
            let p = gx.slice(n).values();
            let q = gxx.slice(n).values();
            let hv = h.slice(n).values();
            let hxv = hx.slice(n).values();
            let vals: Vec<Complex64> = (0..a.len())
                .map(|i| {
                    let c0 = a[i] * third - p[i] * q[i] * third + p[i] * p[i] * p[i] / 27.0;
                    let c1 = q[i] - p[i] * p[i] * third;
                    c0 * hv[i] + c1 * hxv[i]
                })
                .collect();
            SpectralField::from_values(g.grid(), &vals)
        })
        .collect();
    SpaceTimeField::from_slices(g.time(), slices)
}

/// Frozen coefficient of one band together with the fields derived from it.
#[derive(Debug)]
pub struct CoefficientFields {
    pub a: SpaceTimeField,
    pub dx_a: SpaceTimeField,
    pub exp_plus: SpaceTimeField,
    pub exp_minus: SpaceTimeField,
}

impl CoefficientFields {
    pub fn new(a: SpaceTimeField) -> Self {
        let dx_a = a.deriv(1);
        let exp_plus = a.map(|s| s.map_values(|z| (z / 3.0).exp()));
        let exp_minus = a.map(|s| s.map_values(|z| (-z / 3.0).exp()));
        CoefficientFields { a, dx_a, exp_plus, exp_minus }
    }
}

/// Per-band data for `(∂t + ∂x³ − ∂x a_{<j−4} ∂x²) u_j = f_j`, `u_j(0) = u0j`.
/// A missing coefficient means `a ≡ 0`.
#[derive(Clone, Debug)]
pub struct BandSystem {
    pub j: u32,
    pub u0j: SpectralField,
    pub fj: SpaceTimeField,
    coeff: Option<Arc<CoefficientFields>>,
}

impl BandSystem {
    pub fn new(j: u32, u0j: SpectralField, fj: SpaceTimeField, a_low: Option<SpaceTimeField>) -> Result<Self> {
        let coeff = a_low.map(|a| Arc::new(CoefficientFields::new(a)));
        Self::with_coefficient(j, u0j, fj, coeff)
    }

    pub fn with_coefficient(
        j: u32,
        u0j: SpectralField,
        fj: SpaceTimeField,
        coeff: Option<Arc<CoefficientFields>>,
    ) -> Result<Self> {
        let j_max = fj.grid().j_max();
        if j > j_max {
            return Err(SolverError::UnresolvedBand { j, j_max });
        }
        check_steps(fj.time())?;
        u0j.grid().ensure_same(fj.grid())?;
        if let Some(c) = &coeff {
            c.a.compatible(&fj)?;
        }
        Ok(BandSystem { j, u0j, fj, coeff })
    }

    pub fn coefficient(&self) -> Option<&CoefficientFields> {
        self.coeff.as_deref()
    }

    fn with_data(&self, u0j: SpectralField, fj: SpaceTimeField) -> Self {
        BandSystem { j: self.j, u0j, fj, coeff: self.coeff.clone() }
    }

    /// Index `p` of the low-pass `S_{<p}` applied to `e^{-a/3}`.
    fn conjugation_cutoff(&self) -> i64 {
        (self.j as i64 - PARA_GAP).max(1)
    }
}

/// One conjugated solve: `v_j` solves the Airy equation with data
/// `S_{<p}(e^{−a(0)/3}) u0j` and forcing `S_{<p}(e^{−a/3}) f_j`, and the
/// result is `S̃̃_j(e^{a/3} v_j)`. Here `p = max(j − 4, 1)`.
pub fn conjugated_band_solve(sys: &BandSystem) -> Result<SpaceTimeField> {
    let Some(c) = sys.coefficient() else {
        return duhamel_solve(&sys.u0j, &sys.fj)?.project_wide2(sys.j);
    };
    let p = sys.conjugation_cutoff();
    let em_low = c.exp_minus.project_below(p);
    let data = em_low.initial().mul_pointwise(&sys.u0j);
    let forcing = em_low.mul_pointwise(&sys.fj);
    let v = duhamel_solve(&data, &forcing)?;
    c.exp_plus.mul_pointwise(&v).project_wide2(sys.j)
}

/// `(∂t + ∂x³ − ∂x a ∂x²) u − f_j`.
pub fn band_residual(u: &SpaceTimeField, sys: &BandSystem) -> Result<SpaceTimeField> {
    let mut r = airy_operator(u)?;
    if let Some(c) = sys.coefficient() {
        r -= &c.dx_a.mul_pointwise(&u.deriv(2));
    }
    r -= &sys.fj;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionStatus {
    /// The residual fell below the requested tolerance.
    Converged,
    /// The residual stopped decreasing below the floor tolerance; the best
    /// partial sum is returned.
    Floor,
    /// `n_max` corrections were used.
    MaxIterations,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CorrectionTrace {
    pub band: i64,
    /// `‖ũ^{(n)}‖_{L^∞_t L²_x}`
    pub correction_norms: Vec<f64>,
    /// `‖f^{(n)}‖_{L¹_t L²_x}`, starting with the input forcing.
    pub forcing_norms: Vec<f64>,
    /// `‖u0^{(n)}‖_{L²}`, starting with the input data.
    pub data_norms: Vec<f64>,
    /// Quotients of consecutive residual pair norms `‖u0^{(n)}‖ + ‖f^{(n)}‖`.
    pub ratios: Vec<f64>,
    pub scale: f64,
    pub status: CorrectionStatus,
}

impl CorrectionTrace {
    pub fn residuals(&self) -> Vec<f64> {
        self.data_norms.iter().zip(&self.forcing_norms).map(|(d, f)| d + f).collect()
    }

    pub fn corrections(&self) -> usize {
        self.correction_norms.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionOptions {
    pub n_max: usize,
    /// Relative tolerance for the residual pair norm.
    pub tol: f64,
    /// Residual level below which a stall is accepted as the discretization floor.
    pub floor_tol: f64,
    /// Normalization of the tolerances; defaults to the initial residual.
    pub scale: Option<f64>,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        CorrectionOptions { n_max: 25, tol: 1e-8, floor_tol: 1e-5, scale: None }
    }
}

/// Consecutive non-decreasing residuals tolerated before giving up.
const STALL_LIMIT: usize = 3;
/// Contraction factor above which a decrease below the floor counts as stagnation.
const SLOW_PROGRESS: f64 = 0.5;

struct StallMonitor {
    best: f64,
    prev: f64,
    stalls: usize,
}

enum Verdict {
    Continue,
    Converged,
    Floor,
    Diverged,
}

impl StallMonitor {
    fn new(initial: f64) -> Self {
        StallMonitor { best: initial, prev: initial, stalls: 0 }
    }

    fn step(&mut self, res: f64, tol: f64, floor: f64) -> Verdict {
        let decreased = res < self.prev;
        let prev = self.prev;
        self.prev = res;
        if res <= tol {
            self.best = self.best.min(res);
            return Verdict::Converged;
        }
        if decreased {
            self.stalls = 0;
            self.best = self.best.min(res);
            // below the floor and barely moving: further terms are noise
            if res <= floor && res > SLOW_PROGRESS * prev {
                return Verdict::Floor;
            }
            return Verdict::Continue;
        }
        if self.best <= floor {
            return Verdict::Floor;
        }
        self.stalls += 1;
        if self.stalls >= STALL_LIMIT {
            Verdict::Diverged
        } else {
            Verdict::Continue
        }
    }
}

/// Correction series `u_j = Σ_n ũ^{(n)}` with
/// `f^{(n+1)} = S̃_j(f^{(n)} − (∂t + ∂x³ − ∂x a ∂x²) ũ^{(n)})` and
/// `u0^{(n+1)} = S̃_j(u0^{(n)} − ũ^{(n)}(0))`.
pub fn band_correction_iterate(sys: &BandSystem, opts: CorrectionOptions) -> Result<(SpaceTimeField, CorrectionTrace)> {
    let mut data = sys.u0j.clone();
    let mut forcing = sys.fj.clone();
    let d0 = data.l2_norm();
    let f0 = forcing.l1_l2();
    let scale = opts.scale.unwrap_or(d0 + f0);
    let mut trace = CorrectionTrace {
        band: sys.j as i64,
        correction_norms: Vec::new(),
        forcing_norms: vec![f0],
        data_norms: vec![d0],
        ratios: Vec::new(),
        scale,
        status: CorrectionStatus::Converged,
    };
    let mut total = SpaceTimeField::zeros(sys.fj.grid(), sys.fj.time());
    if d0 + f0 == 0.0 {
        return Ok((total, trace));
    }
    let mut monitor = StallMonitor::new(d0 + f0);
    let mut best = total.clone();
    let mut prev = d0 + f0;
    for _ in 0..opts.n_max {
        let sub = sys.with_data(data.clone(), forcing.clone());
        let corr = conjugated_band_solve(&sub)?;
        let r = band_residual(&corr, &sub)?;
        total += &corr;
        // the band answers for its widened annulus only; what leaks past it
        // is left to the global sweep
        forcing = -&r.project_wide(sys.j)?;
        data = crate::spectral::project_wide(&(&data - corr.initial()), sys.j)?;
        let (d, f) = (data.l2_norm(), forcing.l1_l2());
        trace.correction_norms.push(corr.linf_l2());
        trace.forcing_norms.push(f);
        trace.data_norms.push(d);
        trace.ratios.push((d + f) / prev);
        let res = d + f;
        prev = res;
        if res < monitor.best {
            best = total.clone();
        }
        match monitor.step(res, opts.tol * scale, opts.floor_tol * scale) {
            Verdict::Converged => {
                trace.status = CorrectionStatus::Converged;
                return Ok((total, trace));
            }
            Verdict::Floor => {
                trace.status = CorrectionStatus::Floor;
                return Ok((best, trace));
            }
            Verdict::Diverged => {
                return Err(SolverError::NoContraction { band: sys.j as i64, residual: monitor.best / scale });
            }
            Verdict::Continue => {}
        }
    }
    trace.status = CorrectionStatus::MaxIterations;
    Ok((best, trace))
}

/// `ũ = Σ_j u_j`, summed in band order.
pub fn assemble_paradiff_solution(bands: &[SpaceTimeField]) -> Result<SpaceTimeField> {
    let first = bands.first().ok_or_else(|| SolverError::InvalidInput("no bands to assemble".into()))?;
    let mut acc = SpaceTimeField::zeros(first.grid(), first.time());
    for b in bands {
        acc.compatible(b)?;
        acc += b;
    }
    Ok(acc)
}

/// Band-frozen coefficients `a_{<j−4} = base + S_{<j−4} low` for every band.
#[derive(Clone, Debug)]
pub struct FrozenCoefficient {
    pub base: SpaceTimeField,
    pub low: SpaceTimeField,
}

impl FrozenCoefficient {
    pub fn band(&self, j: u32) -> SpaceTimeField {
        &self.base + &self.low.project_below(j as i64 - PARA_GAP)
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.low.is_zero()
    }
}

/// `(∂t + ∂x³) w − Σ_j ∂x a_{<j−4} S_j ∂x² w` over the resolved bands.
pub fn paradiff_operator(w: &SpaceTimeField, coeffs: &[Option<Arc<CoefficientFields>>]) -> Result<SpaceTimeField> {
    let mut out = airy_operator(w)?;
    let wxx = w.deriv(2);
    let terms: Vec<Option<SpaceTimeField>> = coeffs
        .par_iter()
        .enumerate()
        .map(|(j, c)| {
            c.as_ref().map(|c| c.dx_a.mul_pointwise(&wxx.project_band(j as u32).expect("resolved band")))
        })
        .collect();
    for t in terms.into_iter().flatten() {
        out -= &t;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParadiffOptions {
    pub n_max: usize,
    pub tol: f64,
    pub floor_tol: f64,
    pub inner: CorrectionOptions,
}

impl Default for ParadiffOptions {
    fn default() -> Self {
        ParadiffOptions { n_max: 25, tol: 1e-8, floor_tol: 1e-5, inner: CorrectionOptions::default() }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ParadiffTrace {
    /// Global residual pair norms, starting with the input.
    pub residuals: Vec<f64>,
    pub scale: f64,
    pub status: CorrectionStatus,
    /// Per-band traces of the last sweep.
    pub bands: Vec<CorrectionTrace>,
}

/// Solves `(∂t + ∂x³ − Σ_j ∂x a_{<j−4} S_j ∂x²) w = P f`, `w(0) = P u0`, where
/// `P` projects onto the resolved bands, by sweeping band solves over the
/// current residual until it is below tolerance.
pub fn solve_paradiff(
    u0: &SpectralField,
    f: &SpaceTimeField,
    coefficient: Option<&FrozenCoefficient>,
    opts: ParadiffOptions,
) -> Result<(SpaceTimeField, ParadiffTrace)> {
    check_steps(f.time())?;
    u0.grid().ensure_same(f.grid())?;
    let grid = f.grid().clone();
    let j_max = grid.j_max();
    let coeffs: Vec<Option<Arc<CoefficientFields>>> = match coefficient {
        Some(c) if !c.is_zero() => (0..=j_max)
            .into_par_iter()
            .map(|j| Some(Arc::new(CoefficientFields::new(c.band(j)))))
            .collect(),
        _ => vec![None; j_max as usize + 1],
    };
    let data0 = crate::spectral::project_resolved(u0);
    let forcing0 = f.project_resolved();
    let scale = data0.l2_norm() + forcing0.l1_l2();
    let mut w = SpaceTimeField::zeros(&grid, f.time());
    let mut trace = ParadiffTrace { residuals: vec![scale], scale, status: CorrectionStatus::Converged, bands: Vec::new() };
    if scale == 0.0 {
        return Ok((w, trace));
    }
    let inner = CorrectionOptions { scale: Some(scale), ..opts.inner };
    let mut data = data0.clone();
    let mut forcing = forcing0.clone();
    let mut monitor = StallMonitor::new(scale);
    let mut best = w.clone();
    for _ in 0..opts.n_max {
        let solved: Vec<Result<(SpaceTimeField, CorrectionTrace)>> = (0..=j_max)
            .into_par_iter()
            .map(|j| {
                let sys = BandSystem::with_coefficient(
                    j,
                    crate::spectral::project_band(&data, j)?,
                    forcing.project_band(j)?,
                    coeffs[j as usize].clone(),
                )?;
                band_correction_iterate(&sys, inner)
            })
            .collect();
        let mut bands = Vec::with_capacity(solved.len());
        let mut traces = Vec::with_capacity(solved.len());
        for s in solved {
            let (u, t) = s?;
            bands.push(u);
            traces.push(t);
        }
        w += &assemble_paradiff_solution(&bands)?;
        trace.bands = traces;
        let lw = paradiff_operator(&w, &coeffs)?;
        forcing = (&forcing0 - &lw).project_resolved();
        data = &data0 - w.initial();
        let res = data.l2_norm() + forcing.l1_l2();
        trace.residuals.push(res);
        if res < monitor.best {
            best = w.clone();
        }
        match monitor.step(res, opts.tol * scale, opts.floor_tol * scale) {
            Verdict::Converged => {
                trace.status = CorrectionStatus::Converged;
                return Ok((w, trace));
            }
            Verdict::Floor => {
                trace.status = CorrectionStatus::Floor;
                return Ok((best, trace));
            }
            Verdict::Diverged => {
                return Err(SolverError::NoContraction { band: -1, residual: monitor.best / scale });
            }
            Verdict::Continue => {}
        }
    }
    trace.status = CorrectionStatus::MaxIterations;
    Ok((best, trace))
}

/// Global residual `(∂t + ∂x³ − T_{∂x a} ∂x²) u − f` with the literal paraproduct.
pub fn paraproduct_residual(u: &SpaceTimeField, a: &SpaceTimeField, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let mut r = airy_operator(u)?;
    r -= &crate::spectral::paraproduct(&a.deriv(1), &u.deriv(2))?;
    r -= f;
    Ok(r)
}
