//! Scenario files: flat TOML keys plus a `[[monomials]]` list.
//!
//! ```toml
//! n_points = 256          # grid points, power of two
//! length = 32.0           # box length L, box is [-L/2, L/2)
//! time_steps = 64         # steps on the rescaled unit interval (>= 4)
//! s = 4.0                 # regularity index, must exceed s0(F)
//!
//! profile = "sech2"       # zero | sech | sech2 | gaussian | random
//! amplitude = 0.5
//! width = 1.0
//! center = 0.0
//!
//! [[monomials]]           # c · u^a0 · u_x^a1 · u_xx^a2
//! c = 6.0                 # or [re, im]
//! a0 = 1                  # omitted powers are 0
//! a1 = 1
//! ```
//!
//! Optional keys: `theta`, `k_max`, `k`, `delta`, `outer_tol`, `outer_max`,
//! `n_cap`, `seed`, `reference`, `reference_substeps`, `snapshot_stride`.

use serde::Deserialize;

use dispersive_core::iteration::SolverConfig;
use dispersive_core::nonlinearity::{validate, Monomial, PolynomialNonlinearity};
use dispersive_core::random::{random_smooth_real, stream_rng};
use dispersive_core::{Complex64, Grid, SpectralField};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Config(String),
}

impl From<dispersive_core::SolverError> for ScenarioError {
    fn from(e: dispersive_core::SolverError) -> Self {
        ScenarioError::Config(format!("{}: {e}", e.code()))
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Zero,
    Sech,
    Sech2,
    Gaussian,
    Random,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn value(&self) -> Complex64 {
        match *self {
            Coefficient::Real(re) => Complex64::new(re, 0.0),
            Coefficient::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub c: Coefficient,
    #[serde(default)]
    pub a0: u32,
    #[serde(default)]
    pub a1: u32,
    #[serde(default)]
    pub a2: u32,
}

impl MonomialSpec {
    pub fn alpha(&self) -> [u32; 3] {
        [self.a0, self.a1, self.a2]
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n_points: usize,
    pub length: f64,
    pub time_steps: usize,
    pub s: f64,
    pub profile: Profile,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub seed: u64,
    pub theta: Option<f64>,
    pub k_max: Option<u32>,
    pub k: Option<u32>,
    pub delta: Option<f64>,
    pub outer_tol: Option<f64>,
    pub outer_max: Option<usize>,
    pub n_cap: Option<usize>,
    #[serde(default)]
    pub reference: bool,
    pub reference_substeps: Option<usize>,
    #[serde(default = "one_usize")]
    pub snapshot_stride: usize,
    pub monomials: Vec<MonomialSpec>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// A scenario checked for consistency and turned into solver inputs.
pub struct Prepared {
    pub scenario: Scenario,
    pub nonlinearity: PolynomialNonlinearity,
    pub data: SpectralField,
    pub config: SolverConfig,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn prepare(self) -> Result<Prepared, ScenarioError> {
        let positive = [("length", self.length), ("s", self.s), ("width", self.width)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::Config(format!("`{name}` must be positive, got {v}")));
            }
        }
        if !self.amplitude.is_finite() || !self.center.is_finite() {
            return Err(ScenarioError::Config("`amplitude` and `center` must be finite".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(ScenarioError::Config("`snapshot_stride` must be positive".into()));
        }
        let monomials: Vec<Monomial> = self.monomials.iter().map(|m| Monomial::new(m.c.value(), m.alpha())).collect();
        let nonlinearity = validate(&monomials)?;
        nonlinearity.admissible_exponents(self.s)?;
        let grid = Grid::new(self.n_points, self.length)?;
        dispersive_core::TimeGrid::new(1.0, self.time_steps)?;
        let data = self.initial_data(&grid);
        let defaults = SolverConfig::default();
        let config = SolverConfig {
            s: self.s,
            time_steps: self.time_steps,
            theta: self.theta,
            k_max: self.k_max.unwrap_or(defaults.k_max),
            k: self.k,
            delta: self.delta.unwrap_or(defaults.delta),
            outer_tol: self.outer_tol.unwrap_or(defaults.outer_tol),
            outer_max: self.outer_max.unwrap_or(defaults.outer_max),
            n_cap: self.n_cap.unwrap_or(defaults.n_cap),
            battery_seed: self.seed,
            reference: self.reference,
            reference_substeps: self.reference_substeps.unwrap_or(defaults.reference_substeps),
            ..defaults
        };
        Ok(Prepared { scenario: self, nonlinearity, data, config })
    }

    fn initial_data(&self, grid: &Grid) -> SpectralField {
        let (a, w, c) = (self.amplitude, self.width, self.center);
        match self.profile {
            Profile::Zero => SpectralField::zeros(grid),
            Profile::Sech => SpectralField::from_real_fn(grid, |x| a / ((x - c) / w).cosh()),
            Profile::Sech2 => SpectralField::from_real_fn(grid, |x| a / ((x - c) / w).cosh().powi(2)),
            Profile::Gaussian => SpectralField::from_real_fn(grid, |x| a * (-((x - c) / w).powi(2)).exp()),
            Profile::Random => {
                let mut rng = stream_rng(self.seed, 0);
                random_smooth_real(grid, 1.0 / w, &mut rng).scale_real(a)
            }
        }
    }
}
