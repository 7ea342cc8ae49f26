//! Polynomial nonlinearities `F(u, u_x, u_xx) = Σ c_α u^{α0} u_x^{α1} u_xx^{α2}`:
//! validation, the scalar exponents `λ, s0, γ, σ`, the bad/good split of the
//! rescaled equation and the paradifferential pieces `a`, `b_j`, `H`.
//!
//! After rescaling (`u^{(k)}(t,x) = 2^{λk} u(2^{-3k}t, 2^{-k}x)`) the equation
//! becomes `(∂t + ∂x³) U = F̃(U)` with
//! `F̃ = Σ c_α 2^{e_α k} U^{α0} U_x^{α1} U_xx^{α2}`, `e_α = λ − λ|α| + α1 + 2α2 − 3`.
//! Writing `U = v + u0l` with the time-independent low-frequency data `u0l`,
//! `v` solves `(∂t + ∂x³) v = F̃(v + u0l) − ∂x³ u0l = B + G` where
//! `B = c1 2^{-λk}(∂x u0l v_xx + v_x v_xx) + c2 2^{(1-λ)k}(∂x² u0l v_xx + v_xx²)`
//! collects the quadratic terms with two derivatives on one factor.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::spectral::{SpaceTimeField, SpectralField, PARA_GAP};
use crate::linear::FrozenCoefficient;
use crate::Complex64;

/// `c · u^{α0} u_x^{α1} u_xx^{α2}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Monomial {
    pub coeff: Complex64,
    pub alpha: [u32; 3],
}

impl Monomial {
    pub fn new(coeff: impl Into<Complex64>, alpha: [u32; 3]) -> Self {
        Monomial { coeff: coeff.into(), alpha }
    }

    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum()
    }
}

/// Exact nonnegative-denominator rational used for `λ` and the exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd(num.unsigned_abs(), den as u64) as i64;
        Rational { num: num / g, den: den / g }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// All `β ≤ α` componentwise.
pub fn sub_indices(alpha: [u32; 3]) -> impl Iterator<Item = [u32; 3]> {
    (0..=alpha[0]).flat_map(move |b0| (0..=alpha[1]).flat_map(move |b1| (0..=alpha[2]).map(move |b2| [b0, b1, b2])))
}

fn binomial(n: u32, k: u32) -> u64 {
    let mut r = 1u64;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

/// Number of ways `v^{β}` arises when expanding `(v + w)^{α}` factorwise.
pub fn multiplicity(alpha: [u32; 3], beta: [u32; 3]) -> u64 {
    (0..3).map(|i| binomial(alpha[i], beta[i])).product()
}

/// `max_{β ≤ α, |β| ≥ 2} (β1 + 2β2 − 3)/(|β| − 1)` for one monomial.
pub fn monomial_lambda(alpha: [u32; 3]) -> Option<Rational> {
    sub_indices(alpha)
        .filter(|b| b.iter().sum::<u32>() >= 2)
        .map(|b| Rational::new(b[1] as i64 + 2 * b[2] as i64 - 3, b.iter().sum::<u32>() as i64 - 1))
        .max()
}

const EXCLUDED: [u32; 3] = [1, 0, 1];
const ALPHA_C1: [u32; 3] = [0, 1, 1];
const ALPHA_C2: [u32; 3] = [0, 0, 2];

/// Regularity threshold for a single monomial shape, as twice its value
/// (all thresholds are half-integers). The maximum over every row of the
/// threshold table that the shape matches; rows mentioning `u_xx` require a
/// positive power of it. Two quadratic shapes match no row as stated and are
/// assigned the nearest consistent value: `u_x²` takes the `u_x^{α1}` value
/// 2, and `u_x u_xx` takes 7/2 (the smallest value compatible with `σ > 7/2`
/// for a term carrying `u_xx`).
pub fn monomial_s0_halves(alpha: [u32; 3]) -> Option<u32> {
    let [a0, a1, a2] = alpha;
    let total = a0 + a1 + a2;
    let mut rows: Vec<u32> = Vec::new();
    if a1 == 0 && a2 == 0 && a0 >= 2 {
        rows.push(1);
    }
    if a1 == 1 && a2 == 0 && a0 >= 2 {
        rows.push(2);
    }
    if a0 >= 1 && a1 >= 1 && a2 == 0 {
        rows.push(3);
    }
    if a2 == 1 && a0 >= 2 {
        rows.push(3);
    }
    if a0 == 0 && a2 == 0 && a1 >= 3 {
        rows.push(4);
    }
    if a2 >= 1 && a0 + a1 >= 2 {
        rows.push(5);
    }
    if a2 >= 1 && total >= 3 {
        rows.push(7);
    }
    if a0 == 0 && a1 == 0 && a2 >= 2 {
        rows.push(9);
    }
    if alpha == [0, 2, 0] {
        rows.push(4);
    }
    if alpha == ALPHA_C1 {
        rows.push(7);
    }
    rows.into_iter().max()
}

/// A validated nonlinearity with its derived scalars.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PolynomialNonlinearity {
    monomials: Vec<Monomial>,
    degree: u32,
    lambda: Rational,
    s0_halves: u32,
    c1: Complex64,
    c2: Complex64,
}

/// Validates a monomial list. Duplicate multi-indices are merged. Monomials
/// whose coefficient is zero stay in the list but only influence the
/// exponents when every coefficient is zero (a formal "F ≡ 0" used in tests).
pub fn validate(monomials: &[Monomial]) -> Result<PolynomialNonlinearity> {
    if monomials.is_empty() {
        return Err(SolverError::Empty);
    }
    let mut merged: Vec<Monomial> = Vec::new();
    for m in monomials {
        let degree = m.degree();
        if degree <= 1 {
            return Err(SolverError::Degenerate { alpha: m.alpha, degree });
        }
        if let Some(e) = merged.iter_mut().find(|e| e.alpha == m.alpha) {
            e.coeff += m.coeff;
        } else {
            merged.push(*m);
        }
    }
    merged.sort_by_key(|m| m.alpha);
    if merged.iter().any(|m| m.alpha == EXCLUDED && m.coeff != Complex64::new(0.0, 0.0)) {
        return Err(SolverError::PresenceOfUuxx);
    }
    let active: Vec<&Monomial> = if merged.iter().any(|m| m.coeff != Complex64::new(0.0, 0.0)) {
        merged.iter().filter(|m| m.coeff != Complex64::new(0.0, 0.0)).collect()
    } else {
        merged.iter().filter(|m| m.alpha != EXCLUDED).collect()
    };
    if active.is_empty() {
        return Err(SolverError::Empty);
    }
    let lambda = active
        .iter()
        .filter_map(|m| monomial_lambda(m.alpha))
        .max()
        .expect("every monomial has degree >= 2");
    let mut s0_halves = 0;
    for m in &active {
        let s = monomial_s0_halves(m.alpha).ok_or(SolverError::Unclassified { alpha: m.alpha })?;
        s0_halves = s0_halves.max(s);
    }
    let coeff_of = |alpha: [u32; 3]| {
        merged.iter().find(|m| m.alpha == alpha).map(|m| m.coeff).unwrap_or_default()
    };
    Ok(PolynomialNonlinearity {
        degree: active.iter().map(|m| m.degree()).max().unwrap_or(0),
        c1: coeff_of(ALPHA_C1),
        c2: coeff_of(ALPHA_C2),
        monomials: merged,
        lambda,
        s0_halves,
    })
}

/// `γ = min(1, s − λ − ½)`.
pub fn gamma_exponent(s: f64, lambda: f64) -> Result<f64> {
    let g = (s - lambda - 0.5).min(1.0);
    if g > 0.0 {
        Ok(g)
    } else {
        Err(SolverError::NonpositiveGamma { s, lambda })
    }
}

/// `σ = s` if `c2 = 0`, else `s − 1`; must exceed 7/2.
pub fn sigma_exponent(s: f64, f: &PolynomialNonlinearity) -> Result<f64> {
    let sigma = if f.c2() == Complex64::new(0.0, 0.0) { s } else { s - 1.0 };
    if sigma > 3.5 {
        Ok(sigma)
    } else {
        Err(SolverError::SigmaTooSmall { sigma })
    }
}

/// `μ_{αβ} = λ(|β|−1) − (β1+2β2−3) + (s−½)(α0−β0) + min(s−3/2,0)(α1−β1) + min(s−5/2,0)(α2−β2)`,
/// the power of `2^{-k}` gained by the term `w_{αβ}` of `G`.
pub fn mu_exponent(alpha: [u32; 3], beta: [u32; 3], lambda: f64, s: f64) -> f64 {
    let nb = beta.iter().sum::<u32>() as f64;
    let d = |i: usize| (alpha[i] - beta[i]) as f64;
    lambda * (nb - 1.0) - (beta[1] as f64 + 2.0 * beta[2] as f64 - 3.0)
        + (s - 0.5) * d(0)
        + (s - 1.5).min(0.0) * d(1)
        + (s - 2.5).min(0.0) * d(2)
}

impl PolynomialNonlinearity {
    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    pub fn lambda_exact(&self) -> Rational {
        self.lambda
    }

    pub fn s0(&self) -> f64 {
        self.s0_halves as f64 / 2.0
    }

    /// Coefficient of `u_x u_xx`.
    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    /// Coefficient of `u_xx²`.
    pub fn c2(&self) -> Complex64 {
        self.c2
    }

    pub fn has_bad_terms(&self) -> bool {
        self.c1 != Complex64::new(0.0, 0.0) || self.c2 != Complex64::new(0.0, 0.0)
    }

    /// Checks `s > s0` and returns `(γ, σ)`.
    pub fn admissible_exponents(&self, s: f64) -> Result<(f64, f64)> {
        if s <= self.s0() {
            return Err(SolverError::RegularityTooLow { s, s0: self.s0() });
        }
        Ok((gamma_exponent(s, self.lambda())?, sigma_exponent(s, self)?))
    }

    /// `e_α = λ − λ|α| + α1 + 2α2 − 3`.
    pub fn scaling_exponent(&self, alpha: [u32; 3]) -> f64 {
        let l = self.lambda();
        l - l * (alpha.iter().sum::<u32>() as f64) + alpha[1] as f64 + 2.0 * alpha[2] as f64 - 3.0
    }

    /// `F(u, u_x, u_xx)` evaluated pointwise.
    pub fn evaluate(&self, u: &SpaceTimeField) -> SpaceTimeField {
        let terms: Vec<Term> = self
            .monomials
            .iter()
            .map(|m| Term { coeff: m.coeff, beta: m.alpha, gamma: [0; 3] })
            .collect();
        evaluate_terms(&terms, u, None)
    }

    fn rescaled_terms(&self, k: u32) -> Vec<Term> {
        self.monomials
            .iter()
            .map(|m| Term {
                coeff: m.coeff * 2f64.powf(self.scaling_exponent(m.alpha) * k as f64),
                beta: m.alpha,
                gamma: [0; 3],
            })
            .collect()
    }

    /// `F̃(U)` for rescaling level `k`.
    pub fn evaluate_rescaled(&self, u: &SpaceTimeField, k: u32) -> SpaceTimeField {
        evaluate_terms(&self.rescaled_terms(k), u, None)
    }

    /// `F̃(U)` on a single time slice.
    pub fn evaluate_rescaled_slice(&self, u: &SpectralField, k: u32) -> SpectralField {
        evaluate_terms_slice(&self.rescaled_terms(k), u, None)
    }
}

/// `coeff · v^{β} · w^{γ}` with `v^{β} = v^{β0} v_x^{β1} v_xx^{β2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    coeff: Complex64,
    beta: [u32; 3],
    gamma: [u32; 3],
}

/// One retained term `w_{αβ}` of `G`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GoodTerm {
    pub alpha: [u32; 3],
    pub beta: [u32; 3],
    /// Integer multiplicity left after removing the bad contributions.
    pub multiplicity: u64,
    /// `e_α`, the power of `2^k` multiplying `c_α`.
    pub scaling_exponent: f64,
}

impl GoodTerm {
    pub fn mu(&self, lambda: f64, s: f64) -> f64 {
        mu_exponent(self.alpha, self.beta, lambda, s)
    }
}

/// Bad quadratic pieces removed from the expansion of `F̃(v + u0l)`.
fn bad_multiplicity(alpha: [u32; 3], beta: [u32; 3]) -> u64 {
    match (alpha, beta) {
        (ALPHA_C1, [0, 1, 1]) | (ALPHA_C1, [0, 0, 1]) => 1,
        (ALPHA_C2, [0, 0, 2]) | (ALPHA_C2, [0, 0, 1]) => 1,
        _ => 0,
    }
}

/// The good-term bookkeeping of the expansion, independent of the data.
pub fn good_terms(f: &PolynomialNonlinearity) -> Vec<GoodTerm> {
    let mut out = Vec::new();
    for m in f.monomials() {
        for beta in sub_indices(m.alpha) {
            let mult = multiplicity(m.alpha, beta) - bad_multiplicity(m.alpha, beta);
            if mult > 0 {
                out.push(GoodTerm {
                    alpha: m.alpha,
                    beta,
                    multiplicity: mult,
                    scaling_exponent: f.scaling_exponent(m.alpha),
                });
            }
        }
    }
    out
}

fn pow(z: Complex64, p: u32) -> Complex64 {
    match p {
        0 => Complex64::new(1.0, 0.0),
        1 => z,
        2 => z * z,
        _ => z.powu(p),
    }
}

/// Space samples of a field and its first two derivatives.
fn jet(u: &SpectralField) -> [Vec<Complex64>; 3] {
    [u.values(), u.deriv(1).values(), u.deriv(2).values()]
}

/// Pointwise `Σ coeff · v^{β} w^{γ}` on one slice, `w` given by its jet.
fn evaluate_terms_slice(terms: &[Term], v: &SpectralField, wv: Option<&[Vec<Complex64>; 3]>) -> SpectralField {
    let grid = v.grid();
    let n = grid.n_points();
    let vv: [Vec<Complex64>; 3] = if terms.iter().any(|t| t.beta != [0; 3]) {
        jet(v)
    } else {
        let z = vec![Complex64::new(0.0, 0.0); n];
        [z.clone(), z.clone(), z]
    };
    let vals: Vec<Complex64> = (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in terms {
                let mut p = t.coeff;
                for (col, &e) in vv.iter().zip(&t.beta) {
                    p *= pow(col[i], e);
                }
                if let Some(wv) = wv {
                    for (col, &e) in wv.iter().zip(&t.gamma) {
                        p *= pow(col[i], e);
                    }
                }
                acc += p;
            }
            acc
        })
        .collect();
    SpectralField::from_values(grid, &vals)
}

/// Pointwise `Σ coeff · v^{β} w^{γ}` where `w` is an optional time-independent field.
fn evaluate_terms(terms: &[Term], v: &SpaceTimeField, w: Option<&SpectralField>) -> SpaceTimeField {
    let wv = w.map(jet);
    v.map(|slice| evaluate_terms_slice(terms, slice, wv.as_ref()))
}

/// The split `F̃(v + u0l) − ∂x³u0l = B + G` at a fixed rescaling level.
#[derive(Clone, Debug)]
pub struct SplitNonlinearity {
    f: PolynomialNonlinearity,
    k: u32,
    u0l: SpectralField,
    /// `c1 2^{-λk}`
    c1k: Complex64,
    /// `c2 2^{(1-λ)k}`
    c2k: Complex64,
    good: Vec<GoodTerm>,
    terms: Vec<Term>,
}

/// Builds the bad/good split for data `u0l` at rescaling level `k`.
pub fn split_bad_good(f: &PolynomialNonlinearity, k: u32, u0l: &SpectralField) -> SplitNonlinearity {
    let lambda = f.lambda();
    let good = good_terms(f);
    let coeff_of = |alpha: [u32; 3]| f.monomials().iter().find(|m| m.alpha == alpha).map(|m| m.coeff).unwrap();
    let mut terms: Vec<Term> = Vec::new();
    for g in &good {
        let c = coeff_of(g.alpha) * 2f64.powf(g.scaling_exponent * k as f64) * g.multiplicity as f64;
        let gamma = [g.alpha[0] - g.beta[0], g.alpha[1] - g.beta[1], g.alpha[2] - g.beta[2]];
        if let Some(t) = terms.iter_mut().find(|t| t.beta == g.beta && t.gamma == gamma) {
            t.coeff += c;
        } else {
            terms.push(Term { coeff: c, beta: g.beta, gamma });
        }
    }
    SplitNonlinearity {
        f: f.clone(),
        k,
        u0l: u0l.clone(),
        c1k: f.c1() * 2f64.powf(-lambda * k as f64),
        c2k: f.c2() * 2f64.powf((1.0 - lambda) * k as f64),
        good,
        terms,
    }
}

impl SplitNonlinearity {
    pub fn nonlinearity(&self) -> &PolynomialNonlinearity {
        &self.f
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn u0_low(&self) -> &SpectralField {
        &self.u0l
    }

    /// `(c1 2^{-λk}, c2 2^{(1-λ)k})`.
    pub fn bad_coefficients(&self) -> (Complex64, Complex64) {
        (self.c1k, self.c2k)
    }

    pub fn good_terms(&self) -> &[GoodTerm] {
        &self.good
    }

    pub fn has_bad_terms(&self) -> bool {
        self.f.has_bad_terms()
    }

    /// `G(v)`, including the inhomogeneous `−∂x³ u0l`.
    pub fn evaluate_g(&self, v: &SpaceTimeField) -> SpaceTimeField {
        let g = evaluate_terms(&self.terms, v, Some(&self.u0l));
        let d3 = self.u0l.deriv(3);
        g.map(|s| s - &d3)
    }

    /// `B(v)`.
    pub fn evaluate_b(&self, v: &SpaceTimeField) -> SpaceTimeField {
        let vx = v.deriv(1);
        let vxx = v.deriv(2);
        let w1 = self.u0l.deriv(1);
        let w2 = self.u0l.deriv(2);
        let first = vx.add_static(&w1).mul_pointwise(&vxx).scale(self.c1k);
        let second = vxx.add_static(&w2).mul_pointwise(&vxx).scale(self.c2k);
        &first + &second
    }

    /// Right-hand side of the `v` equation computed directly: `F̃(v + u0l) − ∂x³ u0l`.
    pub fn evaluate_direct(&self, v: &SpaceTimeField) -> SpaceTimeField {
        let u = v.add_static(&self.u0l);
        let d3 = self.u0l.deriv(3);
        self.f.evaluate_rescaled(&u, self.k).map(|s| s - &d3)
    }

    /// `a(v) = c1 2^{-λk}(u0l + v) + c2 2^{(1-λ)k} ∂x(u0l + 2v)` (unfrozen).
    pub fn coefficient_full(&self, v: &SpaceTimeField) -> SpaceTimeField {
        let fc = self.frozen_coefficient(v);
        &fc.base + &fc.low
    }

    /// `a = base + S_{<j−4} low` with `base = c1 2^{-λk} u0l + c2 2^{(1-λ)k} ∂x u0l`
    /// and `low = c1 2^{-λk} v + 2 c2 2^{(1-λ)k} ∂x v`.
    pub fn frozen_coefficient(&self, v: &SpaceTimeField) -> FrozenCoefficient {
        let base_slice = &self.u0l.scale(self.c1k) + &self.u0l.deriv(1).scale(self.c2k);
        let base = SpaceTimeField::constant(&base_slice, v.time());
        let low = &v.scale(self.c1k) + &v.deriv(1).scale(self.c2k * 2.0);
        FrozenCoefficient { base, low }
    }

    /// `a_{<j−4}(v)`.
    pub fn coefficient_a(&self, v: &SpaceTimeField, j: u32) -> SpaceTimeField {
        self.frozen_coefficient(v).band(j)
    }

    /// `b_j = c1 2^{-λk} S_j(S_{≥j−4}(v_x) v_xx) + c2 2^{(1-λ)k} S_j((S_{≥j−4} v_xx)²)`.
    pub fn bj_term(&self, v: &SpaceTimeField, j: u32) -> Result<SpaceTimeField> {
        let cut = j as i64 - PARA_GAP;
        let vx = v.deriv(1);
        let vxx = v.deriv(2);
        let hx = vx.project_above(cut);
        let hxx = vxx.project_above(cut);
        let mut out = SpaceTimeField::zeros(v.grid(), v.time());
        if self.c1k != Complex64::new(0.0, 0.0) {
            out += &hx.mul_pointwise(&vxx).scale(self.c1k);
        }
        if self.c2k != Complex64::new(0.0, 0.0) {
            out += &hxx.mul_pointwise(&hxx).scale(self.c2k);
        }
        out.project_band(j)
    }

    /// `H_j = [S_j, ∂x a_{<j−4}] v_xx + b_j + S_j G` for every resolved band.
    pub fn band_forcings(&self, v: &SpaceTimeField) -> Result<Vec<SpaceTimeField>> {
        let g = self.evaluate_g(v);
        let j_max = v.grid().j_max();
        if !self.has_bad_terms() {
            return (0..=j_max).map(|j| g.project_band(j)).collect();
        }
        let fc = self.frozen_coefficient(v);
        let vxx = v.deriv(2);
        (0..=j_max)
            .into_par_iter()
            .map(|j| {
                let dxa = fc.band(j).deriv(1);
                let comm = &dxa.mul_pointwise(&vxx).project_band(j)? - &dxa.mul_pointwise(&vxx.project_band(j)?);
                let mut h = comm;
                h += &self.bj_term(v, j)?;
                h += &g.project_band(j)?;
                Ok(h)
            })
            .collect()
    }

    /// `H = Σ_j H_j`, summed in band order.
    pub fn assemble_h(&self, v: &SpaceTimeField) -> Result<SpaceTimeField> {
        let parts = self.band_forcings(v)?;
        crate::linear::assemble_paradiff_solution(&parts)
    }

    /// `Σ_j ∂x a_{<j−4} S_j v_xx`, the principal part inverted band by band.
    pub fn principal_part(&self, v: &SpaceTimeField) -> Result<SpaceTimeField> {
        let mut out = SpaceTimeField::zeros(v.grid(), v.time());
        if !self.has_bad_terms() {
            return Ok(out);
        }
        let fc = self.frozen_coefficient(v);
        let vxx = v.deriv(2);
        for j in 0..=v.grid().j_max() {
            out += &fc.band(j).deriv(1).mul_pointwise(&vxx.project_band(j)?);
        }
        Ok(out)
    }
}
