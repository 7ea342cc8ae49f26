use dispersive_core::iteration::{
    iterate, lipschitz_probe, prepare, solve, substitution_residual, SolveContext, SolverConfig,
};
use dispersive_core::linear::duhamel_solve;
use dispersive_core::nonlinearity::{validate, Monomial, PolynomialNonlinearity};
use dispersive_core::reference::reference_solve;
use dispersive_core::{Grid, SolverError, SpaceTimeField, SpectralField};

fn kdv() -> PolynomialNonlinearity {
    validate(&[Monomial::new(6.0, [1, 1, 0])]).unwrap()
}

fn sech2(grid: &Grid, amplitude: f64) -> SpectralField {
    SpectralField::from_real_fn(grid, |x| amplitude / x.cosh().powi(2))
}

fn small_config() -> SolverConfig {
    SolverConfig { time_steps: 32, n_cap: 512, ..SolverConfig::default() }
}

#[test]
fn zero_data_gives_the_zero_solution() {
    let g = Grid::new(64, 16.0).unwrap();
    let sol = solve(&SpectralField::zeros(&g), &kdv(), &small_config()).unwrap();
    assert_eq!(sol.summary.k, 0);
    assert!(sol.summary.converged);
    assert_eq!(sol.summary.iterations, 1);
    assert!(sol.u.is_zero());
    assert_eq!(sol.summary.residual, 0.0);
}

#[test]
fn kdv_outer_iteration_matches_the_reference_integrator() {
    let g = Grid::new(128, 16.0).unwrap();
    let u0 = sech2(&g, 0.5);
    let config = SolverConfig { reference: true, ..small_config() };
    let sol = solve(&u0, &kdv(), &config).unwrap();
    assert!(sol.summary.converged);
    assert!(sol.trace.max_ratio_after(1) < 1.0, "{:?}", sol.trace.ratios());
    // independent oracle, recomputed here at a finer substep
    let ctx = &sol.context;
    let reference = reference_solve(&ctx.u0k, &kdv(), ctx.k(), ctx.time, 32).unwrap();
    let diff = (&sol.u_rescaled - &reference).linf_l2() / reference.linf_l2();
    assert!(diff <= 1e-4, "relative L∞L² difference {diff}");
    assert!(sol.summary.reference_diff_relative.unwrap() <= 1e-4);
    assert!(sol.summary.residual_relative <= 1e-4, "{}", sol.summary.residual_relative);
    assert_eq!(sol.u.time().t_end(), 2f64.powi(-3 * sol.summary.k as i32));
}

/// Plain Picard iteration `v ← e^{−t∂x³}u0h + ∫ e^{−(t−τ)∂x³} G(v)`, written against the
/// direct evaluation of the rescaled nonlinearity.
fn picard(ctx: &SolveContext, steps: usize) -> SpaceTimeField {
    let mut v = ctx.zero_state();
    for _ in 0..steps {
        let g = ctx.split.evaluate_direct(&v);
        v = duhamel_solve(&ctx.u0h, &g).unwrap();
    }
    v
}

#[test]
fn without_bad_terms_the_outer_map_is_picard() {
    let g = Grid::new(128, 16.0).unwrap();
    let f = validate(&[Monomial::new(6.0, [1, 1, 0]), Monomial::new(-1.0, [3, 0, 0])]).unwrap();
    let (ctx, _) = prepare(&sech2(&g, 0.5), &f, &small_config()).unwrap();
    let mut v = ctx.zero_state();
    for _ in 0..4 {
        v = ctx.outer_map(&v).unwrap().0;
    }
    let oracle = picard(&ctx, 4);
    let diff = (&v - &oracle).project_resolved().linf_l2() / oracle.linf_l2();
    assert!(diff <= 1e-6, "relative difference {diff}");
}

#[test]
fn iteration_trace_contracts_and_records() {
    let g = Grid::new(128, 16.0).unwrap();
    let (ctx, choice) = prepare(&sech2(&g, 0.5), &kdv(), &small_config()).unwrap();
    assert_eq!(ctx.k(), choice.k);
    assert!(*choice.high_norms.last().unwrap() <= small_config().theta());
    let (v, trace) = iterate(&ctx).unwrap();
    assert!(trace.converged);
    assert!(trace.records[0].ratio.is_none());
    for (n, r) in trace.records.iter().enumerate() {
        assert_eq!(r.iteration, n);
        assert!(r.admission.pass);
    }
    assert!(trace.max_ratio_after(1) < 1.0);
    let u = v.add_static(ctx.split.u0_low());
    let res = substitution_residual(&u, &kdv(), ctx.k()).unwrap();
    assert!(res <= 1e-4 * (1.0 + u.l2_tx()), "{res}");
}

#[test]
fn configuration_errors() {
    let g = Grid::new(64, 16.0).unwrap();
    let u0 = sech2(&g, 0.5);
    let low_s = SolverConfig { s: 1.0, ..small_config() };
    assert!(matches!(solve(&u0, &kdv(), &low_s), Err(SolverError::RegularityTooLow { .. })));
    let c2 = validate(&[Monomial::new(1.0, [0, 0, 2])]).unwrap();
    let s = SolverConfig { s: 4.5, ..small_config() };
    assert!(matches!(solve(&u0, &c2, &s), Err(SolverError::RegularityTooLow { .. })));
    assert!(SolveContext::new(&u0, &c2, 0, &SolverConfig { s: 4.6, ..small_config() }).is_ok());
    // above s0 = 3/2 but below the σ > 7/2 the linear theory needs
    let s = SolverConfig { s: 3.0, ..small_config() };
    assert!(matches!(SolveContext::new(&u0, &kdv(), 0, &s), Err(SolverError::SigmaTooSmall { .. })));
    let tight = SolverConfig { k_max: 0, theta: Some(1e-12), ..small_config() };
    assert!(matches!(solve(&u0, &kdv(), &tight), Err(SolverError::KSearchExhausted { .. })));
}

#[test]
fn lipschitz_probe_identical_and_nearby_data() {
    let g = Grid::new(128, 16.0).unwrap();
    let u0 = sech2(&g, 0.5);
    let config = small_config();
    let same = lipschitz_probe(&u0, &u0, &kdv(), &config).unwrap();
    assert!(same.identical);
    assert_eq!(same.ratio, 0.0);
    let near = &u0 + &sech2(&g, 1.0).scale_real(1e-3);
    let report = lipschitz_probe(&u0, &near, &kdv(), &config).unwrap();
    assert!(!report.identical);
    assert!(report.ratio.is_finite() && report.ratio > 0.0);
    assert_eq!(report.k, same.k);
    // the difference of the outputs is linear in a small perturbation of the input
    let nearer = &u0 + &sech2(&g, 1.0).scale_real(5e-4);
    let half = lipschitz_probe(&u0, &nearer, &kdv(), &config).unwrap();
    assert!((half.ratio / report.ratio - 1.0).abs() <= 0.05, "{} vs {}", half.ratio, report.ratio);
}
