//! The outer solution map and the end-to-end solve.
//!
//! For a state `v` the map `𝒯` freezes the coefficient `a(v)`, assembles the
//! forcing `H(v)` and solves the paradifferential system
//! `(∂t + ∂x³ − T_{∂x a(v)} ∂x²) w = H(v)`, `w(0) = u0^{(k)h}`. Starting from
//! `v^{(-1)} = 0` the iterates `v^{(n+1)} = 𝒯(v^{(n)})` converge to the
//! high-frequency part of the rescaled solution; adding the low-frequency
//! data and undoing the rescaling gives the solution on `[0, 2^{-3k}]`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::diagnostics::mizohata_integral;
use crate::error::{Result, SolverError};
use crate::linear::{airy_flow, airy_operator, solve_paradiff, CorrectionStatus, ParadiffOptions, ParadiffTrace};
use crate::nonlinearity::{split_bad_good, PolynomialNonlinearity, SplitNonlinearity};
use crate::norms::{l2hs_norm, l2xs_norm, l2ys_surrogate, NormReport};
use crate::random::{random_in_band, random_weighted, stream_rng};
use crate::reference::reference_solve;
use crate::rescale::{choose_k, rescale_data, split_low_high, unrescale_solution, KChoice, RescaleContext};
use crate::spectral::{paraproduct, phi0, SpaceTimeField, SpectralField, TimeGrid, PARA_GAP};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Regularity index `s` (must exceed `s0(F)`).
    pub s: f64,
    /// Number of time steps on the rescaled unit interval.
    pub time_steps: usize,
    /// Smallness target for `‖u0^{(k)h}‖_{l²H^s}`; defaults to `0.1·delta`.
    pub theta: Option<f64>,
    pub k_max: u32,
    /// Fixes the rescaling level instead of searching for it.
    pub k: Option<u32>,
    /// Admission threshold `δ`.
    pub delta: f64,
    pub outer_tol: f64,
    pub outer_max: usize,
    /// Cap on the number of points of the rescaled grid.
    pub n_cap: usize,
    pub paradiff: ParadiffOptions,
    /// Seed of the random part of the admission probe battery.
    pub battery_seed: u64,
    pub battery_random: usize,
    /// Also run the independent split-step integrator and report the difference.
    pub reference: bool,
    pub reference_substeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            s: 4.0,
            time_steps: 64,
            theta: None,
            k_max: 12,
            k: None,
            delta: 0.1,
            outer_tol: 1e-7,
            outer_max: 40,
            n_cap: 1 << 15,
            paradiff: ParadiffOptions::default(),
            battery_seed: 0,
            battery_random: 8,
            reference: false,
            reference_substeps: 16,
        }
    }
}

impl SolverConfig {
    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(0.1 * self.delta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct AdmissionReport {
    /// `‖∂x a(v)‖_{l²X^{σ−1}}`
    pub dxa: f64,
    /// `max_z ‖T_{(∂t+∂x³)a} z‖_{l²Y^s}` over the probe battery (surrogate).
    pub para: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Everything fixed once `k` is chosen.
pub struct SolveContext {
    pub f: PolynomialNonlinearity,
    pub split: SplitNonlinearity,
    pub s: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub time: TimeGrid,
    pub rescale: RescaleContext,
    /// `u0^{(k)}`
    pub u0k: SpectralField,
    /// `u0^{(k)h}`
    pub u0h: SpectralField,
    pub config: SolverConfig,
    battery: OnceLock<Vec<SpaceTimeField>>,
}

impl SolveContext {
    pub fn new(u0: &SpectralField, f: &PolynomialNonlinearity, k: u32, config: &SolverConfig) -> Result<Self> {
        let (gamma, sigma) = f.admissible_exponents(config.s)?;
        let rescale = RescaleContext::new(u0.grid(), k, f.lambda(), config.theta(), config.n_cap)?;
        let u0k = rescale_data(u0, &rescale)?;
        Self::from_rescaled(u0k, f, rescale, gamma, sigma, config)
    }

    fn from_rescaled(
        u0k: SpectralField,
        f: &PolynomialNonlinearity,
        rescale: RescaleContext,
        gamma: f64,
        sigma: f64,
        config: &SolverConfig,
    ) -> Result<Self> {
        let time = TimeGrid::new(1.0, config.time_steps)?;
        let (u0l, u0h) = split_low_high(&u0k);
        Ok(SolveContext {
            f: f.clone(),
            split: split_bad_good(f, rescale.k, &u0l),
            s: config.s,
            sigma,
            gamma,
            time,
            rescale,
            u0k,
            u0h,
            config: config.clone(),
            battery: OnceLock::new(),
        })
    }

    pub fn k(&self) -> u32 {
        self.rescale.k
    }

    /// Unit `l²X^s` free Airy waves: one per resolved band, then random
    /// fields over all resolved bands.
    pub fn battery(&self) -> &[SpaceTimeField] {
        self.battery.get_or_init(|| {
            let grid = self.u0k.grid();
            let j_max = grid.j_max();
            let seed = self.config.battery_seed;
            let mut data: Vec<SpectralField> =
                (0..=j_max).map(|j| random_in_band(grid, j, &mut stream_rng(seed, j as u64))).collect();
            let scale = 2f64.powi(-(j_max as i32));
            for r in 0..self.config.battery_random {
                let mut rng = stream_rng(seed, 1000 + r as u64);
                data.push(random_weighted(grid, &mut rng, |xi| phi0(scale * xi)));
            }
            data.into_par_iter()
                .map(|d| {
                    let z = airy_flow(&d, self.time);
                    let n = l2xs_norm(&z, self.s);
                    if n > 0.0 {
                        z.scale_real(1.0 / n)
                    } else {
                        z
                    }
                })
                .collect()
        })
    }

    /// Admission quantities for the state `v`.
    pub fn admission_check(&self, v: &SpaceTimeField) -> Result<AdmissionReport> {
        let delta = self.config.delta;
        if !self.split.has_bad_terms() {
            return Ok(AdmissionReport { dxa: 0.0, para: 0.0, threshold: delta, pass: true });
        }
        let a = self.split.coefficient_full(v);
        if a.is_zero() {
            return Ok(AdmissionReport { dxa: 0.0, para: 0.0, threshold: delta, pass: true });
        }
        let dxa = l2xs_norm(&a.deriv(1), self.sigma - 1.0);
        let para = if a.grid().j_max() as i64 > PARA_GAP {
            let da = airy_operator(&a)?;
            let values: Vec<Result<f64>> = self
                .battery()
                .par_iter()
                .map(|z| Ok(l2ys_surrogate(&paraproduct(&da, z)?, self.s)))
                .collect();
            let mut best = 0.0f64;
            for v in values {
                best = best.max(v?);
            }
            best
        } else {
            0.0
        };
        Ok(AdmissionReport { dxa, para, threshold: delta, pass: dxa <= delta && para <= delta })
    }

    /// `w = 𝒯(v)`.
    pub fn outer_map(&self, v: &SpaceTimeField) -> Result<(SpaceTimeField, ParadiffTrace)> {
        let h = self.split.assemble_h(v)?;
        let coefficient = if self.split.has_bad_terms() { Some(self.split.frozen_coefficient(v)) } else { None };
        solve_paradiff(&self.u0h, &h, coefficient.as_ref(), self.config.paradiff)
    }

    pub fn zero_state(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.u0k.grid(), self.time)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct OuterRecord {
    pub iteration: usize,
    /// `‖v^{(n+1)}‖_{l²X^s}`
    pub v_norm: f64,
    /// `‖v^{(n+1)} − v^{(n)}‖_{l²X^s}`
    pub diff: f64,
    /// `diff_n / diff_{n−1}`
    pub ratio: Option<f64>,
    pub admission: AdmissionReport,
    /// Final relative residual of the paradifferential solve.
    pub paradiff_residual: f64,
    pub paradiff_sweeps: usize,
    pub paradiff_status: CorrectionStatus,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceTrace {
    pub k: u32,
    pub high_norms: Vec<f64>,
    pub records: Vec<OuterRecord>,
    pub converged: bool,
}

impl ConvergenceTrace {
    pub fn ratios(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.ratio).collect()
    }

    /// Largest ratio from the third outer iteration on (0 if there is none).
    pub fn max_ratio_after(&self, skip: usize) -> f64 {
        self.records.iter().skip(skip).filter_map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Scalar summary of a solve.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SolveSummary {
    pub k: u32,
    pub lambda: f64,
    pub s: f64,
    pub s0: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub theta: f64,
    /// End of the original time interval, `2^{-3k}`.
    pub t_final: f64,
    pub rescaled_points: usize,
    pub rescaled_length: f64,
    pub coarsened: bool,
    pub iterations: usize,
    pub converged: bool,
    /// `‖(∂t+∂x³)U − F̃(U)‖_{L²_{t,x}}` in rescaled variables.
    pub residual: f64,
    /// `residual / (1 + ‖U‖_{L²_{t,x}})`
    pub residual_relative: f64,
    /// `‖U − U_ref‖_{L^∞_t L²_x}` against the split-step oracle, if run.
    pub reference_diff: Option<f64>,
    pub reference_diff_relative: Option<f64>,
    /// Mass of the solution within 1% of the box boundary, relative.
    pub boundary_mass: f64,
    /// Largest Mizohata integral `sup Re ∫ ∂x a` of the principal coefficient
    /// over the time samples (0 without bad terms).
    pub mizohata: f64,
}

pub struct Solution {
    /// Solution in the original variables on `[0, 2^{-3k}]`.
    pub u: SpaceTimeField,
    /// High-frequency part of the rescaled solution.
    pub v: SpaceTimeField,
    /// Rescaled solution `U = v + u0l`.
    pub u_rescaled: SpaceTimeField,
    pub trace: ConvergenceTrace,
    pub summary: SolveSummary,
    pub norms: NormReport,
    pub context: SolveContext,
}

/// Picks `k` (or takes the configured one) and builds the solve context.
pub fn prepare(u0: &SpectralField, f: &PolynomialNonlinearity, config: &SolverConfig) -> Result<(SolveContext, KChoice)> {
    let (gamma, sigma) = f.admissible_exponents(config.s)?;
    if let Some(k) = config.k {
        let ctx = SolveContext::new(u0, f, k, config)?;
        let high = l2hs_norm(&ctx.u0h, config.s);
        return Ok((ctx, KChoice { k, high_norms: vec![high] }));
    }
    let mut chosen: Option<SolveContext> = None;
    let choice = choose_k(u0, config.s, f.lambda(), config.theta(), config.k_max, config.n_cap, |rc, u0k| {
        let ctx = SolveContext::from_rescaled(u0k.clone(), f, rc.clone(), gamma, sigma, config)?;
        let report = ctx.admission_check(&ctx.zero_state())?;
        if report.pass {
            chosen = Some(ctx);
        }
        Ok(report.pass)
    })?;
    Ok((chosen.expect("admitted context"), choice))
}

/// Runs the outer iteration from `v^{(-1)} = 0` on a prepared context.
pub fn iterate(ctx: &SolveContext) -> Result<(SpaceTimeField, ConvergenceTrace)> {
    let cfg = &ctx.config;
    let scale = l2hs_norm(&ctx.u0k, ctx.s);
    let mut v = ctx.zero_state();
    let mut records: Vec<OuterRecord> = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut stalls = 0;
    let mut converged = false;
    for iteration in 0..cfg.outer_max {
        let admission = ctx.admission_check(&v)?;
        if !admission.pass {
            return Err(SolverError::AdmissionFailed { dxa: admission.dxa, para: admission.para, threshold: admission.threshold });
        }
        let (w, ptrace) = ctx.outer_map(&v)?;
        let diff = l2xs_norm(&(&w - &v), ctx.s);
        let ratio = prev_diff.map(|p| if p > 0.0 { diff / p } else { 0.0 });
        records.push(OuterRecord {
            iteration,
            v_norm: l2xs_norm(&w, ctx.s),
            diff,
            ratio,
            admission,
            paradiff_residual: ptrace.residuals.last().copied().unwrap_or(0.0) / ptrace.scale.max(f64::MIN_POSITIVE),
            paradiff_sweeps: ptrace.residuals.len() - 1,
            paradiff_status: ptrace.status,
        });
        v = w;
        if diff <= cfg.outer_tol * scale {
            converged = true;
            break;
        }
        if let Some(r) = ratio {
            if r >= 1.0 {
                stalls += 1;
                if stalls >= 3 {
                    return Err(SolverError::OuterDivergence { iteration, ratio: r });
                }
            } else {
                stalls = 0;
            }
        }
        prev_diff = Some(diff);
    }
    Ok((v, ConvergenceTrace { k: ctx.k(), high_norms: Vec::new(), records, converged }))
}

/// `‖(∂t+∂x³)U − F̃(U)‖_{L²_{t,x}}` in rescaled variables.
pub fn substitution_residual(u: &SpaceTimeField, f: &PolynomialNonlinearity, k: u32) -> Result<f64> {
    let lhs = airy_operator(u)?;
    Ok((&lhs - &f.evaluate_rescaled(u, k)).l2_tx())
}

fn boundary_mass(u: &SpaceTimeField) -> f64 {
    let grid = u.grid();
    let edge = 0.01 * grid.length();
    let half = 0.5 * grid.length();
    let mut inside = 0.0;
    let mut total = 0.0;
    for s in u.slices() {
        for (i, z) in s.values().iter().enumerate() {
            let m = z.norm_sqr();
            total += m;
            if grid.x(i).abs() >= half - edge {
                inside += m;
            }
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

fn principal_mizohata(split: &SplitNonlinearity, v: &SpaceTimeField) -> f64 {
    if !split.has_bad_terms() {
        return 0.0;
    }
    let dxa = split.coefficient_full(v).deriv(1);
    dxa.slices().iter().map(mizohata_integral).fold(0.0, f64::max)
}

/// End-to-end solve of `(∂t + ∂x³) u = F(u, u_x, u_xx)`, `u(0) = u0`.
pub fn solve(u0: &SpectralField, f: &PolynomialNonlinearity, config: &SolverConfig) -> Result<Solution> {
    let (ctx, choice) = prepare(u0, f, config)?;
    let (v, mut trace) = iterate(&ctx)?;
    trace.high_norms = choice.high_norms;
    let u0l = ctx.split.u0_low().clone();
    let u_rescaled = v.add_static(&u0l);
    let u = unrescale_solution(&v, &u0l, &ctx.rescale)?;
    let residual = substitution_residual(&u_rescaled, f, ctx.k())?;
    let u_norm = u_rescaled.l2_tx();
    let (reference_diff, reference_diff_relative) = if config.reference {
        let r = reference_solve(&ctx.u0k, f, ctx.k(), ctx.time, config.reference_substeps)?;
        let d = (&u_rescaled - &r).linf_l2();
        let n = r.linf_l2();
        (Some(d), Some(if n > 0.0 { d / n } else { d }))
    } else {
        (None, None)
    };
    let summary = SolveSummary {
        k: ctx.k(),
        lambda: f.lambda(),
        s: ctx.s,
        s0: f.s0(),
        gamma: ctx.gamma,
        sigma: ctx.sigma,
        theta: config.theta(),
        t_final: u.time().t_end(),
        rescaled_points: ctx.rescale.rescaled_grid.n_points(),
        rescaled_length: ctx.rescale.rescaled_grid.length(),
        coarsened: ctx.rescale.coarsened(),
        iterations: trace.records.len(),
        converged: trace.converged,
        residual,
        residual_relative: residual / (1.0 + u_norm),
        reference_diff,
        reference_diff_relative,
        boundary_mass: boundary_mass(&u_rescaled),
        mizohata: principal_mizohata(&ctx.split, &v),
    };
    let norms = NormReport::evaluate(&v, ctx.s);
    Ok(Solution { u, v, u_rescaled, trace, summary, norms, context: ctx })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LipschitzReport {
    pub k: u32,
    /// `‖U¹ − U²‖_{l²X^s} / ‖u0^{(k)1} − u0^{(k)2}‖_{l²H^s}` (rescaled variables).
    pub ratio: f64,
    /// Same with the high-frequency parts `v¹ − v²`.
    pub ratio_v: f64,
    /// The two data coincide; ratios are reported as 0.
    pub identical: bool,
}

/// Solves for both data at a common rescaling level and compares.
pub fn lipschitz_probe(
    u0_a: &SpectralField,
    u0_b: &SpectralField,
    f: &PolynomialNonlinearity,
    config: &SolverConfig,
) -> Result<LipschitzReport> {
    let a = solve(u0_a, f, config)?;
    let k = a.summary.k;
    let fixed = SolverConfig { k: Some(k), reference: false, ..config.clone() };
    let b = solve(u0_b, f, &fixed)?;
    let denom = l2hs_norm(&(&a.context.u0k - &b.context.u0k), config.s);
    if denom == 0.0 {
        return Ok(LipschitzReport { k, ratio: 0.0, ratio_v: 0.0, identical: true });
    }
    Ok(LipschitzReport {
        k,
        ratio: l2xs_norm(&(&a.u_rescaled - &b.u_rescaled), config.s) / denom,
        ratio_v: l2xs_norm(&(&a.v - &b.v), config.s) / denom,
        identical: false,
    })
}
