//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the pass/fail lines are
//! always printed; the process fails if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;

use dispersive_core::diagnostics::probe_estimate;
use dispersive_core::iteration::{lipschitz_probe, solve, Solution, SolverConfig};
use dispersive_core::linear::{
    airy_evolve, airy_flow, airy_operator, band_correction_iterate, band_residual, conjugated_band_solve,
    duhamel_solve, remainder_r, BandSystem, CorrectionOptions, CorrectionStatus,
};
use dispersive_core::nonlinearity::{gamma_exponent, sigma_exponent, split_bad_good, validate, Monomial, PolynomialNonlinearity};
use dispersive_core::norms::l2hs_norm;
use dispersive_core::random::{random_in_band, random_smooth_real, random_weighted, stream_rng};
use dispersive_core::reference::reference_solve;
use dispersive_core::rescale::{rescale_data, split_low_high, RescaleContext};
use dispersive_core::spectral::{lp_symbol, project_band, wide_symbol};
use dispersive_core::{Complex64, Grid, SolverError, SpaceTimeField, SpectralField, TimeGrid};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_tx(a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    (a - b).l2_tx() / b.l2_tx()
}

/// Least-squares slope of `log₂ y` against `x`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let ls: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn kdv() -> PolynomialNonlinearity {
    validate(&[Monomial::new(6.0, [1, 1, 0])]).unwrap()
}

/// The shipped KdV scenario: `0.5 sech²(x)` on `N = 256, L = 32`, rescaled grid capped at 1024 points.
fn kdv_setup() -> (SpectralField, SolverConfig) {
    let g = Grid::new(256, 32.0).unwrap();
    let u0 = SpectralField::from_real_fn(&g, |x| 0.5 / x.cosh().powi(2));
    let config = SolverConfig { s: 4.0, time_steps: 64, n_cap: 1024, ..SolverConfig::default() };
    (u0, config)
}

fn partition_of_unity() -> Outcome {
    let start = Instant::now();
    let g = Grid::new(4096, 64.0).unwrap();
    let j_max = g.j_max();
    let top = 2f64.powi(j_max as i32);
    let mut worst = 0.0f64;
    let mut exact = true;
    for &xi in g.frequencies() {
        let sum: f64 = (0..=j_max).map(|j| lp_symbol(j, xi)).sum();
        if xi.abs() <= top {
            worst = worst.max((sum - 1.0).abs());
        }
        for j in 0..=j_max {
            let band = lp_symbol(j, xi);
            exact &= band * wide_symbol(j, 1, xi) == band;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && exact && elapsed < Duration::from_secs(1),
        format!("max |Σφ_j − 1| = {worst:.1e}, S_j S̃_j = S_j exact: {exact}, {:.0} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn airy_propagator() -> Outcome {
    let g = Grid::new(128, 2.0 * std::f64::consts::PI).unwrap();
    let mode = SpectralField::mode(&g, 5);
    let mut phase_err = 0.0f64;
    for t in [0.013, 0.4, 1.0] {
        let exact = SpectralField::from_fn(&g, |x| Complex64::from_polar(1.0, 5.0 * x + 125.0 * t));
        phase_err = phase_err.max((&airy_evolve(&mode, t) - &exact).l2_norm() / exact.l2_norm());
    }
    let big = Grid::new(1024, 32.0).unwrap();
    let mut u = random_weighted(&big, &mut stream_rng(2, 0), |xi| 1.0 / (1.0 + xi * xi));
    let m0 = u.l2_norm();
    for _ in 0..1000 {
        u = airy_evolve(&u, 1e-3);
    }
    let drift = (u.l2_norm() - m0).abs() / m0;
    outcome(phase_err <= 1e-10 && drift <= 1e-12, format!("phase error {phase_err:.1e}, L² drift {drift:.1e}"))
}

fn duhamel_order() -> Outcome {
    // u0 = 0, f = e^{iωt} e^{iξx}: û(1) = e^{iξ³}(e^{i(ω−ξ³)} − 1)/(i(ω − ξ³))
    let g = Grid::new(64, 2.0 * std::f64::consts::PI).unwrap();
    let (m, omega) = (2i64, 3.0);
    let xi3 = (m as f64).powi(3);
    let mode = SpectralField::mode(&g, m);
    let nu = omega - xi3;
    let amp = Complex64::from_polar(1.0, xi3) * (Complex64::from_polar(1.0, nu) - 1.0) / Complex64::new(0.0, nu);
    let exact = mode.scale(amp);
    let ladder = [16usize, 32, 64, 128];
    let errors: Vec<f64> = ladder
        .iter()
        .map(|&steps| {
            let time = TimeGrid::unit(steps);
            let f = SpaceTimeField::from_fn(time, |t| mode.scale(Complex64::from_polar(1.0, omega * t)));
            let u = duhamel_solve(&SpectralField::zeros(&g), &f).unwrap();
            (u.slice(steps) - &exact).l2_norm() / exact.l2_norm()
        })
        .collect();
    let h: Vec<f64> = ladder.iter().map(|&s| -(s as f64).log2()).collect();
    let p = slope(&h, &errors);
    outcome((p - 4.0).abs() <= 0.5, format!("observed order {p:.2} (nominal 4), finest error {:.1e}", errors.last().unwrap()))
}

fn conjugation_identity() -> Outcome {
    // (∂t + ∂x³ − g_x ∂x²)(e^{g/3} w) = e^{g/3}(∂t + ∂x³) w + R(g, e^{g/3} w)
    let grid = Grid::new(1024, 32.0).unwrap();
    let time = TimeGrid::unit(256);
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let g0 = random_smooth_real(&grid, 0.5, &mut stream_rng(60, 3 * trial)).scale_real(0.5);
        let g1 = random_smooth_real(&grid, 0.5, &mut stream_rng(60, 3 * trial + 1)).scale_real(0.3);
        let w0 = random_weighted(&grid, &mut stream_rng(60, 3 * trial + 2), |xi| (-(xi / 1.5).powi(2)).exp());
        let g = SpaceTimeField::from_fn(time, |t| &g0.scale_real(1.0 - 0.5 * t) + &g1.scale_real(t * t));
        let w = airy_flow(&w0, time);
        let e = g.map(|gs| gs.map_values(|z| (z / 3.0).exp()));
        let conj = e.mul_pointwise(&w);
        let lhs = &airy_operator(&conj).unwrap() - &g.derivative(1).unwrap().mul_pointwise(&conj.derivative(2).unwrap());
        let rhs = &e.mul_pointwise(&airy_operator(&w).unwrap()) + &remainder_r(&g, &conj).unwrap();
        worst = worst.max(rel_tx(&rhs, &lhs));
    }
    outcome(worst <= 1e-6, format!("worst relative mismatch over 20 pairs {worst:.1e}"))
}

/// Band-1 system on `N = 256, L = 64`, `M = 512`, coefficient `ε·a0` with `‖a0‖_∞ ≈ 0.3`
/// (a band whose interaction-picture phase is resolved in time).
fn band_system(seed: u64, eps: f64) -> BandSystem {
    let grid = Grid::new(256, 64.0).unwrap();
    let time = TimeGrid::unit(512);
    let j = 1;
    let u0j = project_band(&random_in_band(&grid, j, &mut stream_rng(seed, 0)), j).unwrap();
    let f0 = project_band(&random_in_band(&grid, j, &mut stream_rng(seed, 1)), j).unwrap();
    let fj = SpaceTimeField::from_fn(time, |t| airy_evolve(&f0, t).scale_real(0.5 * (1.0 + t)));
    if eps == 0.0 {
        return BandSystem::new(j, u0j, fj, None).unwrap();
    }
    let unit_sup = |f: SpectralField| f.scale_real(1.0 / f.linf_norm());
    let c0 = unit_sup(random_smooth_real(&grid, 1.0, &mut stream_rng(seed, 2))).scale_real(0.3 * eps);
    let c1 = unit_sup(random_smooth_real(&grid, 1.0, &mut stream_rng(seed, 3))).scale_real(0.075 * eps);
    let a = SpaceTimeField::from_fn(time, |t| &c0 + &c1.scale_real(t));
    BandSystem::new(j, u0j, fj, Some(a)).unwrap()
}

fn error_scaling() -> Outcome {
    let eps = [1.0, 0.5, 0.25];
    let mut data = Vec::new();
    let mut residual = Vec::new();
    for &e in &eps {
        let sys = band_system(11, e);
        let u = conjugated_band_solve(&sys).unwrap();
        data.push((u.initial() - &sys.u0j).l2_norm());
        residual.push(band_residual(&u, &sys).unwrap().l1_l2());
    }
    let x: Vec<f64> = eps.iter().map(|e: &f64| e.log2()).collect();
    let (sd, sr) = (slope(&x, &data), slope(&x, &residual));
    outcome(
        (sd - 1.0).abs() <= 0.3 && (sr - 1.0).abs() <= 0.3,
        format!("data-error slope {sd:.2}, residual slope {sr:.2}"),
    )
}

fn inner_correction() -> Outcome {
    let opts = CorrectionOptions::default();
    let (_, trace) = band_correction_iterate(&band_system(13, 0.1), opts).unwrap();
    let residuals = trace.residuals();
    let above_floor: Vec<f64> = trace
        .ratios
        .iter()
        .enumerate()
        .filter(|(n, _)| residuals[n + 1] > opts.floor_tol * trace.scale)
        .map(|(_, r)| *r)
        .collect();
    let worst = above_floor.iter().copied().fold(0.0, f64::max);
    let settled = matches!(trace.status, CorrectionStatus::Converged | CorrectionStatus::Floor);
    let (_, free) = band_correction_iterate(&band_system(13, 0.0), opts).unwrap();
    let one_shot = free.corrections() == 1 && free.status == CorrectionStatus::Converged;
    outcome(
        settled && worst < 0.5 && one_shot,
        format!(
            "status {:?}, max ratio above floor {worst:.3} over {} corrections; a = 0: {} correction(s), {:?}",
            trace.status,
            trace.corrections(),
            free.corrections(),
            free.status
        ),
    )
}

fn decomposition_error(n_points: usize) -> f64 {
    let grid = Grid::new(n_points, 16.0).unwrap();
    let time = TimeGrid::unit(4);
    let f = validate(&[
        Monomial::new(1.0, [0, 1, 1]),
        Monomial::new(0.5, [0, 0, 2]),
        Monomial::new(-0.3, [2, 1, 0]),
        Monomial::new(0.2, [3, 0, 0]),
    ])
    .unwrap();
    let u0l = SpectralField::from_real_fn(&grid, |x| 0.3 * (-x * x / 16.0).exp() * (0.3 * x).cos());
    let mut worst = 0.0f64;
    for state in 0..20u64 {
        // resolution-independent random state: a few moving sech bumps
        let mut rng = stream_rng(70, state);
        let bumps: Vec<[f64; 4]> = (0..3)
            .map(|_| [rng.random_range(-0.3..0.3), rng.random_range(-0.5..0.5), rng.random_range(-5.0..5.0), rng.random_range(0.5..1.5)])
            .collect();
        let v = SpaceTimeField::from_fn(time, |t| {
            SpectralField::from_real_fn(&grid, |x| {
                bumps.iter().map(|[a, b, c, w]| a * (1.0 + b * t) / ((x - c - t) / w).cosh()).sum()
            })
        });
        let split = split_bad_good(&f, 1, &u0l);
        let pieces = &split.principal_part(&v).unwrap() + &split.assemble_h(&v).unwrap();
        let direct = split.evaluate_direct(&v).project_resolved();
        worst = worst.max(rel_tx(&pieces, &direct));
    }
    worst
}

fn exact_decomposition() -> Outcome {
    let coarse = decomposition_error(1024);
    let fine = decomposition_error(2048);
    // the split is algebraic; once both grids sit at round-off there is nothing left to tighten
    let tightening = fine <= 0.1 * coarse || coarse <= 1e-12;
    outcome(
        coarse <= 1e-8 && fine <= 1e-8 && tightening,
        format!("worst relative mismatch over 20 states: N=1024 {coarse:.1e}, N=2048 {fine:.1e}"),
    )
}

fn kdv_oracle() -> Outcome {
    let start = Instant::now();
    let (u0, config) = kdv_setup();
    let sol = solve(&u0, &kdv(), &config).unwrap();
    let ctx = &sol.context;
    let reference = reference_solve(&ctx.u0k, &kdv(), ctx.k(), ctx.time, 16).unwrap();
    let diff = (&sol.u_rescaled - &reference).linf_l2() / reference.linf_l2();
    let elapsed = start.elapsed();
    outcome(
        diff <= 1e-4 && elapsed < Duration::from_secs(60) && sol.summary.converged,
        format!(
            "k = {}, rescaled N = {}, relative L∞L² difference {diff:.1e}, {:.1} s",
            sol.summary.k,
            sol.summary.rescaled_points,
            elapsed.as_secs_f64()
        ),
    )
}

fn quadratic_derivative() -> Outcome {
    let g = Grid::new(512, 16.0).unwrap();
    let u0 = SpectralField::from_real_fn(&g, |x| 0.05 / x.cosh());
    let f = validate(&[Monomial::new(1.0, [0, 1, 1])]).unwrap();
    let config = SolverConfig { s: 4.0, time_steps: 64, ..SolverConfig::default() };
    match solve(&u0, &f, &config) {
        Ok(sol) => {
            let ratio = sol.trace.max_ratio_after(2);
            let s = &sol.summary;
            outcome(
                ratio < 1.0 && s.residual_relative <= 1e-6 && s.mizohata.is_finite() && s.converged,
                format!(
                    "k = {}, {} iterations, max ratio after 2 = {ratio:.3}, residual {:.1e}, Mizohata {:.3e}",
                    s.k, s.iterations, s.residual_relative, s.mizohata
                ),
            )
        }
        Err(e) => outcome(false, format!("solve failed: {e}")),
    }
}

/// Brute-force `λ` as a reduced fraction.
fn lambda_oracle(alphas: &[[u32; 3]]) -> (i64, i64) {
    let mut best = (i64::MIN, 1i64);
    for a in alphas {
        for b0 in 0..=a[0] {
            for b1 in 0..=a[1] {
                for b2 in 0..=a[2] {
                    let n = (b0 + b1 + b2) as i64;
                    let cand = (b1 as i64 + 2 * b2 as i64 - 3, n - 1);
                    if n >= 2 && (best.0 == i64::MIN || cand.0 * best.1 > best.0 * cand.1) {
                        best = cand;
                    }
                }
            }
        }
    }
    let gcd = |mut a: u64, mut b: u64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.max(1)
    };
    let g = gcd(best.0.unsigned_abs(), best.1 as u64) as i64;
    (best.0 / g, best.1 / g)
}

/// Threshold table, maximum over all matched rows.
fn s0_oracle(alphas: &[[u32; 3]]) -> f64 {
    let row = |[a0, a1, a2]: [u32; 3]| -> f64 {
        let mut v = f64::NEG_INFINITY;
        let mut hit = |cond: bool, value: f64| {
            if cond {
                v = v.max(value)
            }
        };
        hit(a1 == 0 && a2 == 0 && a0 >= 2, 0.5);
        hit(a1 == 1 && a2 == 0 && a0 >= 2, 1.0);
        hit(a0 >= 1 && a1 >= 1 && a2 == 0, 1.5);
        hit(a2 == 1 && a0 >= 2, 1.5);
        hit(a0 == 0 && a2 == 0 && a1 >= 3, 2.0);
        hit(a2 >= 1 && a0 + a1 >= 2, 2.5);
        hit(a2 >= 1 && a0 + a1 + a2 >= 3, 3.5);
        hit(a0 == 0 && a1 == 0 && a2 >= 2, 4.5);
        hit([a0, a1, a2] == [0, 2, 0], 2.0);
        hit([a0, a1, a2] == [0, 1, 1], 3.5);
        v
    };
    alphas.iter().map(|&a| row(a)).fold(f64::NEG_INFINITY, f64::max)
}

fn scalar_tables() -> Outcome {
    let mut rng = stream_rng(80, 0);
    let mut mismatches = 0;
    let mut lambda_range = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let count = rng.random_range(1..=4);
        let mut alphas: Vec<[u32; 3]> = Vec::new();
        while alphas.len() < count {
            let a = [rng.random_range(0..=4), rng.random_range(0..=4), rng.random_range(0..=3)];
            let d: u32 = a.iter().sum();
            if (2..=4).contains(&d) && a != [1, 0, 1] && !alphas.contains(&a) {
                alphas.push(a);
            }
        }
        let monomials: Vec<Monomial> = alphas.iter().map(|&a| Monomial::new(rng.random_range(0.1..2.0), a)).collect();
        let f = validate(&monomials).unwrap();
        let (p, q) = lambda_oracle(&alphas);
        let lam = f.lambda_exact();
        let s0 = s0_oracle(&alphas);
        let s = s0 + rng.random_range(0.01..3.0);
        let gamma_ok = gamma_exponent(s, f.lambda()).ok() == Some((s - p as f64 / q as f64 - 0.5).min(1.0));
        let sigma = if alphas.contains(&[0, 0, 2]) { s - 1.0 } else { s };
        let sigma_ok = match sigma_exponent(s, &f) {
            Ok(v) => v == sigma && sigma > 3.5,
            Err(SolverError::SigmaTooSmall { sigma: v }) => v == sigma && sigma <= 3.5,
            Err(_) => false,
        };
        if (lam.num, lam.den) != (p, q) || f.s0() != s0 || !gamma_ok || !sigma_ok {
            mismatches += 1;
        }
        lambda_range = (lambda_range.0.min(f.lambda()), lambda_range.1.max(f.lambda()));
    }
    let in_range = lambda_range.0 >= -3.0 && lambda_range.1 < 2.0;
    let rejected = matches!(validate(&[Monomial::new(1.0, [1, 0, 1])]), Err(SolverError::PresenceOfUuxx));

    // high-frequency decay of the rescaled data, data just outside H^{s+½}
    let g = Grid::new(4096, 16.0).unwrap();
    let (lambda, s) = (-2.0, 5.0);
    let coeffs = g.frequencies().iter().map(|xi| Complex64::new((1.0 + xi * xi).powf(-(s + 1.0) / 2.0), 0.0)).collect();
    let u = SpectralField::from_coeffs(&g, coeffs);
    let ks: Vec<f64> = (2..=6).map(f64::from).collect();
    let norms: Vec<f64> = (2..=6u32)
        .map(|k| {
            let ctx = RescaleContext::new(&g, k, lambda, 0.01, 2 * g.n_points()).unwrap();
            l2hs_norm(&split_low_high(&rescale_data(&u, &ctx).unwrap()).1, s)
        })
        .collect();
    let decay = slope(&ks, &norms);
    let predicted = lambda + 0.5 - s;
    let decay_ok = (decay - predicted).abs() <= 0.15 * predicted.abs();
    outcome(
        mismatches == 0 && in_range && rejected && decay_ok,
        format!(
            "{mismatches} mismatches in 200 polynomials, λ ∈ [{}, {}], u·u_xx rejected: {rejected}, decay slope {decay:.2} vs {predicted}",
            lambda_range.0, lambda_range.1
        ),
    )
}

fn lipschitz() -> Outcome {
    let (u0, config) = kdv_setup();
    let g = u0.grid().clone();
    let mut ratios = Vec::new();
    for dir in 0..5u64 {
        let d = random_smooth_real(&g, 2.0, &mut stream_rng(90, dir));
        let perturbed = &u0 + &d.scale_real(1e-3 * u0.l2_norm() / d.l2_norm());
        match lipschitz_probe(&u0, &perturbed, &kdv(), &config) {
            Ok(r) => ratios.push(r.ratio),
            Err(e) => return outcome(false, format!("direction {dir}: {e}")),
        }
    }
    let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    outcome(finite && hi <= 2.0 * lo, format!("ratios {ratios:.3?}, max/min {:.3}", hi / lo))
}

fn bits(f: &SpaceTimeField) -> Vec<(u64, u64)> {
    f.slices().iter().flat_map(|s| s.coeffs().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>()).collect()
}

fn fingerprint(sol: &Solution) -> (Vec<(u64, u64)>, String) {
    (bits(&sol.u), format!("{:?}{:?}{:?}", sol.summary, sol.trace, sol.norms))
}

fn scalars(sol: &Solution) -> Vec<f64> {
    let s = &sol.summary;
    let mut v = vec![s.residual, s.residual_relative, s.boundary_mass, s.mizohata, sol.u.l2_tx()];
    v.extend(sol.trace.records.iter().flat_map(|r| [r.diff, r.v_norm]));
    v.extend(sol.norms.l2xs_bands.iter().copied());
    v
}

fn determinism() -> Outcome {
    let (u0, config) = kdv_setup();
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let single = pool(1);
    let multi = pool(4);
    let run = |p: &rayon::ThreadPool| p.install(|| solve(&u0, &kdv(), &config).unwrap());
    let probe = |p: &rayon::ThreadPool| p.install(|| probe_estimate("bil", 20, 3).unwrap());
    let (a, b, c) = (run(&single), run(&single), run(&multi));
    let repeat = fingerprint(&a) == fingerprint(&b) && probe(&single) == probe(&single);
    let worst = scalars(&a)
        .iter()
        .zip(scalars(&c))
        .map(|(x, y)| (x - y).abs() / x.abs().max(1e-300))
        .fold(0.0f64, f64::max);
    let probe_match = probe(&single) == probe(&multi);
    outcome(
        repeat && worst <= 1e-12 && probe_match,
        format!("repeat at 1 thread byte-identical: {repeat}; 1 vs 4 threads: max relative scalar difference {worst:.1e}, probes equal: {probe_match}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("Littlewood-Paley partition of unity", partition_of_unity),
        ("Airy propagator", airy_propagator),
        ("Duhamel order", duhamel_order),
        ("conjugation identity", conjugation_identity),
        ("band solve error scaling", error_scaling),
        ("inner correction series", inner_correction),
        ("exact decomposition", exact_decomposition),
        ("KdV oracle equivalence", kdv_oracle),
        ("quadratic-derivative scenario", quadratic_derivative),
        ("scalar tables", scalar_tables),
        ("Lipschitz probe", lipschitz),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:2} {}: {} — {}", n + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
