//! Independent reference integrator: Strang splitting between the exact Airy
//! flow and classical RK4 substeps for the nonlinearity. It shares only the
//! grid/transform layer with the paradifferential pipeline and serves as an
//! oracle for it.

use crate::error::{Result, SolverError};
use crate::linear::airy_evolve;
use crate::nonlinearity::PolynomialNonlinearity;
use crate::spectral::{SpaceTimeField, SpectralField, TimeGrid};

/// Solves `(∂t + ∂x³) u = rhs(u)`, `u(0) = u0`, recording every sample of
/// `time`; each output step is split into `substeps` Strang steps.
pub fn split_step(
    u0: &SpectralField,
    time: TimeGrid,
    substeps: usize,
    rhs: impl Fn(&SpectralField) -> SpectralField,
) -> Result<SpaceTimeField> {
    if substeps == 0 {
        return Err(SolverError::InvalidInput("substeps must be positive".into()));
    }
    let h = time.dt() / substeps as f64;
    let mut u = u0.clone();
    let mut out = Vec::with_capacity(time.samples());
    out.push(u.clone());
    for _ in 0..time.steps() {
        for _ in 0..substeps {
            u = airy_evolve(&u, 0.5 * h);
            let k1 = rhs(&u);
            let k2 = rhs(&(&u + &(&k1 * (0.5 * h))));
            let k3 = rhs(&(&u + &(&k2 * (0.5 * h))));
            let k4 = rhs(&(&u + &(&k3 * h)));
            let mut incr = &k1 + &k4;
            incr += &(&(&k2 + &k3) * 2.0);
            u += &(&incr * (h / 6.0));
            u = airy_evolve(&u, 0.5 * h);
        }
        out.push(u.clone());
    }
    SpaceTimeField::from_slices(time, out)
}

/// Reference solution of the rescaled equation `(∂t + ∂x³) U = F̃(U)`.
pub fn reference_solve(
    u0: &SpectralField,
    f: &PolynomialNonlinearity,
    k: u32,
    time: TimeGrid,
    substeps: usize,
) -> Result<SpaceTimeField> {
    split_step(u0, time, substeps, |u| f.evaluate_rescaled_slice(u, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn linear_case_is_exact_airy_flow() {
        let g = Grid::new(128, 20.0).unwrap();
        let u0 = SpectralField::from_real_fn(&g, |x| (-x * x).exp());
        let time = TimeGrid::unit(8);
        let u = split_step(&u0, time, 3, |u| SpectralField::zeros(u.grid())).unwrap();
        let exact = airy_evolve(&u0, 1.0);
        assert!((u.slice(8) - &exact).l2_norm() < 1e-12);
    }
}
