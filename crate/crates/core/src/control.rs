//! Full-state feedback from a (damping factor, natural frequency) design point.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::delay::{measured_coordinates, measurement_transform};
use crate::error::{Error, Result};
use crate::linearization::StateSpaceModel;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used to pair complex-conjugate poles.
const CONJUGATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSpec {
    pub damping: f64,
    /// Natural frequency, rad/s.
    pub natural_frequency: f64,
}

impl ControllerSpec {
    pub fn new(damping: f64, natural_frequency: f64) -> Result<Self> {
        let spec = Self { damping, natural_frequency };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping.is_finite() && self.damping > 0.0) {
            return Err(Error::InvalidSpec(format!("damping factor must be > 0, got {}", self.damping)));
        }
        if !(self.natural_frequency.is_finite() && self.natural_frequency > 0.0) {
            return Err(Error::InvalidSpec(format!("natural frequency must be > 0, got {}", self.natural_frequency)));
        }
        Ok(())
    }
}

/// State-feedback row `K` for the control law `u = −K·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(pub Vec<f64>);

impl GainVector {
    pub fn zeros(order: usize) -> Self {
        Self(vec![0.0; order])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn row(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, self.0.len(), &self.0)
    }

    /// `K·x` over the common prefix of both vectors.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(k, v)| k * v).sum()
    }
}

/// Dominant second-order pair plus progressively faster real poles.
///
/// For `ζ < 1` the pair is `−ζωₙ ± jωₙ√(1−ζ²)`, otherwise two real poles
/// `−ωₙ(ζ ± √(ζ²−1))`. The remaining `order − 2` poles sit at
/// `−(k+2)·ζωₙ` for `k = 1..order−2`.
pub fn poles_from_spec(spec: &ControllerSpec, order: usize) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if order < 2 {
        return Err(Error::InvalidSpec(format!("need at least two poles, got order {order}")));
    }
    let (zeta, wn) = (spec.damping, spec.natural_frequency);
    let mut poles = Vec::with_capacity(order);
    if zeta < 1.0 {
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        poles.push(Complex64::new(-zeta * wn, wd));
        poles.push(Complex64::new(-zeta * wn, -wd));
    } else {
        let spread = (zeta * zeta - 1.0).sqrt();
        poles.push(Complex64::new(-wn * (zeta + spread), 0.0));
        poles.push(Complex64::new(-wn * (zeta - spread), 0.0));
    }
    for k in 1..=order - 2 {
        poles.push(Complex64::new(-((k + 2) as f64) * zeta * wn, 0.0));
    }
    Ok(poles)
}

/// Krylov matrix `[B, AB, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(model: &StateSpaceModel) -> DMatrix<f64> {
    let n = model.order();
    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = model.input();
    for k in 0..n {
        ctrb.set_column(k, &col);
        col = &model.a * col;
    }
    ctrb
}

/// Numerical rank of the controllability matrix.
///
/// Each Krylov column is normalised before the SVD so that a fast mode
/// (e.g. a short Padé delay) does not swamp the threshold through the
/// growth of `‖AᵏB‖`.
pub fn controllability_rank(model: &StateSpaceModel) -> usize {
    let mut ctrb = controllability_matrix(model);
    for mut col in ctrb.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let sv = ctrb.singular_values();
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * largest).count()
}

/// Real coefficients `[c₀, …, cₙ₋₁]` of the monic polynomial `∏(s − pᵢ)`.
fn characteristic_coefficients(poles: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &p in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] -= c * p;
            next[i + 1] += c;
        }
        coeffs = next;
    }
    coeffs.pop();
    coeffs.into_iter().map(|c| c.re).collect()
}

fn check_conjugate_closed(poles: &[Complex64]) -> Result<()> {
    let mut used = vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        let p = poles[i];
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::InvalidPoles(format!("non-finite pole {p}")));
        }
        let tol = CONJUGATE_TOLERANCE * p.norm().max(1.0);
        if p.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (i + 1..poles.len()).find(|&j| !used[j] && (poles[j] - p.conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return Err(Error::InvalidPoles(format!("pole {p} has no conjugate partner"))),
        }
    }
    Ok(())
}

/// Single-input pole placement by Ackermann's formula,
/// `K = eₙᵀ·𝒞⁻¹·φ(A)` with `φ` the requested characteristic polynomial.
pub fn place_poles(model: &StateSpaceModel, poles: &[Complex64]) -> Result<GainVector> {
    let n = model.order();
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!("{} poles requested for order {n}", poles.len())));
    }
    check_conjugate_closed(poles)?;
    let rank = controllability_rank(model);
    if rank < n {
        return Err(Error::Uncontrollable { rank, order: n });
    }

    // Column scaling keeps the Krylov solve well balanced; it is undone on w.
    let mut ctrb = controllability_matrix(model);
    let scales: Vec<f64> = ctrb.column_iter().map(|c| c.norm()).collect();
    for (mut col, s) in ctrb.column_iter_mut().zip(&scales) {
        col /= *s;
    }
    let mut last = DVector::zeros(n);
    last[n - 1] = 1.0 / scales[n - 1];
    // wᵀ·𝒞 = eₙᵀ  ⇔  𝒞ᵀ·w = eₙ
    let w = ctrb
        .transpose()
        .lu()
        .solve(&last)
        .ok_or_else(|| Error::Numerical("controllability matrix is singular".into()))?;

    // φ(A) = Aⁿ + cₙ₋₁Aⁿ⁻¹ + … + c₀I by Horner's rule.
    let coeffs = characteristic_coefficients(poles);
    let mut phi = DMatrix::identity(n, n);
    for &c in coeffs.iter().rev() {
        phi = &model.a * phi + DMatrix::identity(n, n) * c;
    }
    let k = w.transpose() * phi;
    if !k.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("pole placement produced non-finite gains".into()));
    }
    Ok(GainVector(k.iter().copied().collect()))
}

/// Condition number of the closed-loop eigenvector matrix that a
/// single-input placement of `poles` must produce.
///
/// With one input the eigenvector for pole λ is fixed as `(A − λI)⁻¹·b`, so
/// this is a property of the request, not of the algorithm: eigenvalues of
/// `A − BK` cannot be computed to better than roughly `ε·κ` relative, even
/// from the exact gain. Returns `∞` when a pole coincides with an open-loop
/// eigenvalue or is repeated.
pub fn placement_condition(model: &StateSpaceModel, poles: &[Complex64]) -> Result<f64> {
    let n = model.order();
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!("{} poles requested for order {n}", poles.len())));
    }
    let a = model.a.map(|v| Complex64::new(v, 0.0));
    let b = DVector::from_fn(n, |i, _| Complex64::new(model.b[(i, 0)], 0.0));
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for (j, &p) in poles.iter().enumerate() {
        let shifted = &a - DMatrix::<Complex64>::identity(n, n) * p;
        let Some(col) = shifted.lu().solve(&b) else {
            return Ok(f64::INFINITY);
        };
        let norm = col.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Ok(f64::INFINITY);
        }
        v.set_column(j, &(col / Complex64::new(norm, 0.0)));
    }
    let s = v.singular_values();
    let (hi, lo) = (s.max(), s.min());
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// Gain acting on the true state once the delayed wiring is applied.
///
/// With `delayed` set, the first gain entry multiplies the measurement
/// `x_m = x_last − x₁` instead of `x₁`.
pub fn effective_gain(gain: &GainVector, delayed: bool) -> GainVector {
    if !delayed {
        return gain.clone();
    }
    let t = measurement_transform(gain.len());
    let k = gain.row() * t;
    GainVector(k.iter().copied().collect())
}

/// Closed-loop model with `A_cl = A − B·K̃`.
pub fn closed_loop(model: &StateSpaceModel, gain: &GainVector, delayed: bool) -> Result<StateSpaceModel> {
    let n = model.order();
    if gain.len() != n {
        return Err(Error::DimensionMismatch(format!("gain has {} entries, model order is {n}", gain.len())));
    }
    if delayed && n < 7 {
        return Err(Error::DimensionMismatch(format!("delayed wiring needs the augmented model, got order {n}")));
    }
    let k = effective_gain(gain, delayed);
    let a = &model.a - &model.b * k.row();
    StateSpaceModel::with_output(a, model.b.clone(), model.c.clone(), model.d.clone())
}

/// Poles from `spec`, placed on `model`. For a delayed design the gain is
/// expressed in measured coordinates, so `closed_loop(model, &k, true)` has
/// exactly the requested spectrum.
pub fn design_gain(model: &StateSpaceModel, spec: &ControllerSpec, delayed: bool) -> Result<GainVector> {
    let poles = poles_from_spec(spec, model.order())?;
    if delayed {
        place_poles(&measured_coordinates(model)?, &poles)
    } else {
        place_poles(model, &poles)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest real part over the spectrum, 1/s.
    pub spectral_abscissa: f64,
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix has no spectrum", a.nrows(), a.ncols())));
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let eig = a.complex_eigenvalues();
    if !eig.iter().all(|e| e.re.is_finite() && e.im.is_finite()) {
        return Err(Error::Numerical("eigenvalue iteration failed".into()));
    }
    Ok(eig.iter().copied().collect())
}

pub fn is_stable(model: &StateSpaceModel) -> Result<StabilityReport> {
    let eig = eigenvalues(&model.a)?;
    let spectral_abscissa = eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport { stable: spectral_abscissa < 0.0, spectral_abscissa })
}

/// Largest relative distance from a requested pole to its matched achieved
/// eigenvalue, pairing greedily one-to-one.
pub fn pole_match_error(requested: &[Complex64], achieved: &[Complex64]) -> f64 {
    let mut free: Vec<Complex64> = achieved.to_vec();
    let mut worst: f64 = 0.0;
    for p in requested {
        let Some((idx, dist)) =
            free.iter().enumerate().map(|(i, e)| (i, (e - p).norm())).min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return f64::INFINITY;
        };
        free.swap_remove(idx);
        worst = worst.max(dist / p.norm().max(f64::MIN_POSITIVE));
    }
    worst
}
