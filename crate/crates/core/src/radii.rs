//! Numerical radius `w(A) = sup_{‖x‖=1} |⟨Ax, x⟩|`.
//!
//! The primary method maximizes `m(θ) = λ_max(Re(e^{iθ}A))` over the angle;
//! the 2×2 elliptical-range formula and Rayleigh sampling serve as
//! independent oracles.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, herm_eigenvalues_unchecked, inner, ComplexMatrix};
use crate::report::{self, Comparison, InequalityReport, ParamRecord, Variant, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    Sweep,
    #[serde(rename = "ellipse2x2")]
    Ellipse2x2,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    /// In `[0, 2π)`.
    pub theta_star: f64,
    pub method: RadiusMethod,
    /// `|⟨Ax, x⟩|` for an explicit unit vector `x`.
    pub lower_bound: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: usize,
    pub refine_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { grid: 720, refine_tol: 1e-12 }
    }
}

pub const MIN_GRID: usize = 64;
const ELLIPSE_SAMPLES: usize = 100_000;

/// `H = (A + A*)/2` and `K = (A − A*)/(2i)`, so that
/// `Re(e^{iθ}A) = cos θ · H − sin θ · K`. Both are exactly Hermitian.
struct Pencil {
    h: ComplexMatrix,
    k: ComplexMatrix,
}

impl Pencil {
    fn new(a: &ComplexMatrix) -> Self {
        let n = a.rows();
        let mut h = ComplexMatrix::zeros(n, n);
        let mut k = ComplexMatrix::zeros(n, n);
        let half_neg_i = Complex64::new(0.0, -0.5);
        for i in 0..n {
            for j in 0..n {
                let (aij, aji) = (a[(i, j)], a[(j, i)].conj());
                h[(i, j)] = (aij + aji) * 0.5;
                k[(i, j)] = (aij - aji) * half_neg_i;
            }
        }
        Self { h, k }
    }

    fn at(&self, theta: f64) -> ComplexMatrix {
        let (s, c) = theta.sin_cos();
        let data = self
            .h
            .entries()
            .iter()
            .zip(self.k.entries())
            .map(|(h, k)| h * c - k * s)
            .collect();
        ComplexMatrix::from_raw(self.h.rows(), self.h.cols(), data)
    }

    fn extremes(&self, theta: f64) -> (f64, f64) {
        let vals = herm_eigenvalues_unchecked(&self.at(theta));
        (vals[0], *vals.last().expect("non-empty"))
    }

    fn m(&self, theta: f64) -> f64 {
        self.extremes(theta).1
    }
}

/// Golden-section maximization of `f` on `[lo, hi]` until the bracket is
/// narrower than `tol`. Returns the best evaluated point.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            if x2 <= x1 {
                break;
            }
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            if x1 >= x2 {
                break;
            }
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Most golden refinements per sweep.
const MAX_REFINEMENTS: usize = 4;

/// Indices of strict-left, weak-right local maxima of a cyclic sequence; the
/// global argmax alone when the sequence has none (constant plateaus).
/// `lipschitz·step` bounds how far a bracket can rise above its grid value,
/// so maxima below `max − lipschitz·step` cannot win and are dropped; of the
/// rest only the [`MAX_REFINEMENTS`] highest are kept, which matters on
/// near-constant curves where rounding noise makes every point a maximum.
fn refinement_candidates(values: &[f64], lipschitz: f64, step: f64) -> Vec<usize> {
    let n = values.len();
    let argmax = (0..n).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let floor = values[argmax] - lipschitz * step;
    let mut out: Vec<usize> = (0..n)
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] > prev && values[i] >= next && values[i] >= floor
        })
        .collect();
    if out.is_empty() {
        out.push(argmax);
    }
    out.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    out.truncate(MAX_REFINEMENTS);
    out
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// `|⟨Ax, x⟩|` for `x` the top eigenvector of `Re(e^{iθ}A)`.
fn rayleigh_witness(a: &ComplexMatrix, pencil: &Pencil, theta: f64) -> Result<f64> {
    let eig = linalg::herm_eigen(&pencil.at(theta))?;
    let n = a.rows();
    let x: Vec<Complex64> = (0..n).map(|i| eig.eigenvectors[(i, n - 1)]).collect();
    let ax = (a * &ComplexMatrix::from_raw(n, 1, x.clone())).entries().to_vec();
    Ok((inner(&ax, &x) / inner(&x, &x).re).norm())
}

/// Angle sweep: `m(θ)` on a uniform grid of `grid` points over `[0, 2π)`,
/// then golden-section refinement around every grid-local maximum.
///
/// For even grids, `m(θ + π) = −λ_min(Re(e^{iθ}A))` lets one eigenvalue solve
/// serve two grid points.
pub fn numerical_radius_sweep(a: &ComplexMatrix, grid: usize, refine_tol: f64) -> Result<RadiusEstimate> {
    a.require_square("numerical_radius_sweep")?;
    if grid < MIN_GRID {
        return Err(Error::rejected(format!("sweep grid {grid} is below the minimum {MIN_GRID}")));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::rejected(format!("refine_tol must be positive, got {refine_tol}")));
    }
    let pencil = Pencil::new(a);
    let step = TAU / grid as f64;
    let mut m = vec![0.0; grid];
    if grid % 2 == 0 {
        let half = grid / 2;
        for i in 0..half {
            let (lo, hi) = pencil.extremes(step * i as f64);
            m[i] = hi;
            m[i + half] = -lo;
        }
    } else {
        for (i, v) in m.iter_mut().enumerate() {
            *v = pencil.m(step * i as f64);
        }
    }

    let mut best = (0.0, f64::NEG_INFINITY);
    // |m'(θ)| ≤ ‖A‖ ≤ ‖A‖_F.
    for i in refinement_candidates(&m, a.frobenius_norm(), step) {
        let centre = step * i as f64;
        if m[i] > best.1 {
            best = (centre, m[i]);
        }
        let (theta, value) = golden_max(|t| pencil.m(t), centre - step, centre + step, refine_tol);
        if value > best.1 {
            best = (theta, value);
        }
    }
    let theta_star = normalize_angle(best.0);
    let lower_bound = rayleigh_witness(a, &pencil, theta_star)?;
    Ok(RadiusEstimate {
        value: best.1.max(0.0),
        theta_star,
        method: RadiusMethod::Sweep,
        lower_bound,
        grid_points: grid,
    })
}

/// Sweep with [`SweepConfig`] settings.
pub fn numerical_radius(a: &ComplexMatrix, config: &SweepConfig) -> Result<f64> {
    Ok(numerical_radius_sweep(a, config.grid, config.refine_tol)?.value)
}

/// Sweep specialized to `T = [[0, X], [Y, 0]]`: there
/// `λ_max(Re(e^{iθ}T)) = ½ σ_max(e^{iθ}X + e^{−iθ}Y*)`, which is π-periodic,
/// so `grid/2` angles over `[0, π)` keep the spacing of the full sweep.
pub fn numerical_radius_offdiag(x: &ComplexMatrix, y: &ComplexMatrix, grid: usize, refine_tol: f64) -> Result<RadiusEstimate> {
    let n = x.require_square("numerical_radius_offdiag")?;
    if y.rows() != n || y.cols() != n {
        return Err(Error::rejected("off-diagonal blocks must have equal square shapes"));
    }
    if grid < MIN_GRID {
        return Err(Error::rejected(format!("sweep grid {grid} is below the minimum {MIN_GRID}")));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::rejected(format!("refine_tol must be positive, got {refine_tol}")));
    }
    let ys = y.adjoint();
    let combo = |theta: f64| {
        let e = Complex64::from_polar(1.0, theta);
        let data = x.entries().iter().zip(ys.entries()).map(|(p, q)| p * e + q * e.conj()).collect();
        ComplexMatrix::from_raw(n, n, data)
    };
    let m = |theta: f64| 0.5 * linalg::operator_norm(&combo(theta));
    let half = grid / 2;
    let step = PI / half as f64;
    let vals: Vec<f64> = (0..half).map(|i| m(step * i as f64)).collect();
    let mut best = (0.0, f64::NEG_INFINITY);
    // |m'(θ)| ≤ ‖X‖ + ‖Y‖, halved.
    for i in refinement_candidates(&vals, 0.5 * (x.frobenius_norm() + y.frobenius_norm()), step) {
        let centre = step * i as f64;
        if vals[i] > best.1 {
            best = (centre, vals[i]);
        }
        let refined = golden_max(m, centre - step, centre + step, refine_tol);
        if refined.1 > best.1 {
            best = refined;
        }
    }
    let theta_star = best.0.rem_euclid(PI);
    // Top eigenvector of ½[[0, M], [M*, 0]] is (u, v)/√2 for the top singular pair.
    let dec = linalg::svd(&combo(theta_star))?;
    let u: Vec<Complex64> = (0..n).map(|i| dec.left[(i, 0)]).collect();
    let v: Vec<Complex64> = (0..n).map(|i| dec.right[(i, 0)]).collect();
    let xv = (x * &ComplexMatrix::from_raw(n, 1, v.clone())).entries().to_vec();
    let yu = (y * &ComplexMatrix::from_raw(n, 1, u.clone())).entries().to_vec();
    let lower_bound = ((inner(&xv, &u) + inner(&yu, &v)) * 0.5).norm();
    Ok(RadiusEstimate {
        value: best.1.max(0.0),
        theta_star: normalize_angle(theta_star),
        method: RadiusMethod::Sweep,
        lower_bound,
        grid_points: half,
    })
}

/// Off-diagonal blocks `(X, Y)` when `a = [[0, X], [Y, 0]]` with exactly
/// zero diagonal blocks.
pub fn offdiag_blocks(a: &ComplexMatrix) -> Option<(ComplexMatrix, ComplexMatrix)> {
    if !a.is_square() || a.rows() % 2 != 0 {
        return None;
    }
    let n = a.rows() / 2;
    let zero = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] != zero || a[(n + i, n + j)] != zero {
                return None;
            }
        }
    }
    Some((a.block(0, n, n, n), a.block(n, 0, n, n)))
}

/// `w(a)`, routing exactly off-diagonal block matrices to
/// [`numerical_radius_offdiag`] and everything else to the full sweep.
pub fn numerical_radius_auto(a: &ComplexMatrix, config: &SweepConfig) -> Result<RadiusEstimate> {
    match offdiag_blocks(a) {
        Some((x, y)) => numerical_radius_offdiag(&x, &y, config.grid, config.refine_tol),
        None => numerical_radius_sweep(a, config.grid, config.refine_tol),
    }
}

/// The numerical range of a 2×2 matrix is the elliptical disk with foci at
/// the eigenvalues and minor semi-axis `b`, `(2b)² = tr(A*A) − |λ₁|² − |λ₂|²`.
pub fn numerical_radius_ellipse2x2(a: &ComplexMatrix) -> Result<RadiusEstimate> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::rejected(format!(
            "ellipse oracle needs a 2x2 matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let centre = (p + s) * 0.5;
    // λ₁,₂ = centre ± d with d² = ((p − s)/2)² + qr
    let d = ((p - s) * (p - s) * 0.25 + q * r).sqrt();
    let (l1, l2) = (centre + d, centre - d);
    let gram: f64 = a.entries().iter().map(|z| z.norm_sqr()).sum();
    let b = ((gram - l1.norm_sqr() - l2.norm_sqr()) / 4.0).max(0.0).sqrt();
    let focal = d.norm();
    let major = (b * b + focal * focal).sqrt();
    let rot = if focal > 0.0 { d / focal } else { Complex64::new(1.0, 0.0) };
    let point = |phi: f64| centre + rot * Complex64::new(major * phi.cos(), b * phi.sin());
    let modulus = |phi: f64| point(phi).norm();

    let step = TAU / ELLIPSE_SAMPLES as f64;
    let samples: Vec<f64> = (0..ELLIPSE_SAMPLES).map(|i| modulus(step * i as f64)).collect();
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in refinement_candidates(&samples, major, step) {
        let centre_phi = step * i as f64;
        if samples[i] > best.1 {
            best = (centre_phi, samples[i]);
        }
        let refined = golden_max(modulus, centre_phi - step, centre_phi + step, 1e-13);
        if refined.1 > best.1 {
            best = refined;
        }
    }
    let z = point(best.0);
    Ok(RadiusEstimate {
        value: best.1,
        theta_star: normalize_angle(-z.arg()),
        method: RadiusMethod::Ellipse2x2,
        lower_bound: l1.norm().max(l2.norm()),
        grid_points: ELLIPSE_SAMPLES,
    })
}

/// Largest `|⟨Ax, x⟩|` over `samples` Haar-random unit vectors: a certified
/// lower bound on `w(A)`, nothing more.
pub fn numerical_radius_sampling(a: &ComplexMatrix, samples: usize, seed: u64) -> Result<RadiusEstimate> {
    let n = a.require_square("numerical_radius_sampling")?;
    if samples < 1 {
        return Err(Error::rejected("sampling needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0f64, 0.0f64);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        }
        for (i, out) in ax.iter_mut().enumerate() {
            *out = (0..n).map(|j| a[(i, j)] * x[j]).sum();
        }
        let q = inner(&ax, &x) / inner(&x, &x).re;
        if q.norm() > best.0 {
            best = (q.norm(), -q.arg());
        }
    }
    Ok(RadiusEstimate {
        value: best.0,
        theta_star: normalize_angle(best.1),
        method: RadiusMethod::Sampling,
        lower_bound: best.0,
        grid_points: samples,
    })
}

/// `w(Aⁿ) ≤ w(A)ⁿ`, both sides by the default sweep.
pub fn check_power_inequality(a: &ComplexMatrix, n: u32) -> Result<InequalityReport> {
    a.require_square("check_power_inequality")?;
    if n < 1 {
        return Err(Error::rejected("power inequality needs n ≥ 1"));
    }
    let cfg = SweepConfig::default();
    let lhs_est = numerical_radius_sweep(&a.powi(n)?, cfg.grid, cfg.refine_tol)?;
    let w = numerical_radius(a, &cfg)?;
    let lhs = lhs_est.value;
    let rhs = w.powi(n as i32);
    let tolerance = report::relative_tolerance(1e-8, 1e-12, lhs.abs().max(rhs.abs()));
    let params = ParamRecord { power: Some(n), ..Default::default() };
    Ok(InequalityReport {
        id: "power_inequality".into(),
        variant: Variant::Corrected,
        inputs_digest: report::inputs_digest(std::slice::from_ref(a), &params),
        params,
        lhs,
        rhs,
        slack: rhs - lhs,
        tolerance,
        passed: report::decide(Comparison::Inequality, lhs, rhs, tolerance),
        skipped: false,
        witness: Some(Witness { theta: Some(lhs_est.theta_star), note: None }),
        inputs: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift(n: usize) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = Complex64::new(1.0, 0.0);
        }
        a
    }

    fn sweep(a: &ComplexMatrix) -> RadiusEstimate {
        numerical_radius_sweep(a, 720, 1e-12).unwrap()
    }

    #[test]
    fn identity_has_radius_one() {
        let est = sweep(&ComplexMatrix::identity(3));
        assert!((est.value - 1.0).abs() < 1e-14);
        assert!((est.lower_bound - 1.0).abs() < 1e-14);
        assert!((0.0..TAU).contains(&est.theta_star));
    }

    #[test]
    fn shift_and_jordan_block() {
        assert!((sweep(&shift(2)).value - 0.5).abs() < 1e-12);
        let j = ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let est = sweep(&j);
        assert!((est.value - 1.5).abs() < 1e-12);
        assert!(est.lower_bound <= est.value + 1e-12);
        assert!((est.lower_bound - 1.5).abs() < 1e-9);
        assert!((sweep(&shift(4)).value - (PI / 5.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn fine_grid_agrees() {
        let a = ComplexMatrix::from_rows(&[
            [Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)],
            [Complex64::new(-0.7, 0.1), Complex64::new(1.1, 0.4)],
        ])
        .unwrap();
        let coarse = sweep(&a).value;
        let fine = numerical_radius_sweep(&a, 100_000, 1e-12).unwrap().value;
        assert!((coarse - fine).abs() < 1e-12);
        assert!((coarse - numerical_radius_ellipse2x2(&a).unwrap().value).abs() < 1e-10);
    }

    #[test]
    fn odd_grid_works() {
        assert!((numerical_radius_sweep(&shift(3), 99, 1e-12).unwrap().value - (PI / 4.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejections() {
        assert!(numerical_radius_sweep(&ComplexMatrix::zeros(2, 3), 720, 1e-12).is_err());
        assert!(numerical_radius_sweep(&shift(2), 63, 1e-12).is_err());
        assert!(numerical_radius_sweep(&shift(2), 720, 0.0).is_err());
    }

    #[test]
    fn zero_matrix() {
        let z = ComplexMatrix::zeros(3, 3);
        let est = sweep(&z);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.lower_bound, 0.0);
        assert_eq!(numerical_radius_sampling(&z, 10, 1).unwrap().value, 0.0);
    }

    #[test]
    fn offdiag_path_matches_full_sweep() {
        let x = ComplexMatrix::from_rows(&[
            [Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5)],
            [Complex64::new(-0.7, 0.1), Complex64::new(1.1, 0.4)],
        ])
        .unwrap();
        let y = ComplexMatrix::from_rows(&[
            [Complex64::new(0.0, 1.0), Complex64::new(-0.4, 0.0)],
            [Complex64::new(1.5, -0.2), Complex64::new(0.2, 0.9)],
        ])
        .unwrap();
        let t = crate::transforms::offdiag_embed(&x, &y).unwrap();
        let full = sweep(&t);
        let fast = numerical_radius_auto(&t, &SweepConfig::default()).unwrap();
        assert_eq!(fast.grid_points, 360);
        assert!((full.value - fast.value).abs() < 1e-12);
        assert!(fast.lower_bound <= fast.value + 1e-12);
        assert!((fast.lower_bound - fast.value).abs() < 1e-9);
        assert!(offdiag_blocks(&ComplexMatrix::identity(4)).is_none());
    }

    #[test]
    fn ellipse_examples() {
        let a = ComplexMatrix::from_real_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap();
        assert!((numerical_radius_ellipse2x2(&a).unwrap().value - 1.0).abs() < 1e-14);
        let j = ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!((numerical_radius_ellipse2x2(&j).unwrap().value - 1.5).abs() < 1e-14);
        let d = ComplexMatrix::from_diagonal(&[Complex64::new(0.5, 0.5), Complex64::new(-2.0, 0.3)]);
        let est = numerical_radius_ellipse2x2(&d).unwrap();
        assert!((est.value - Complex64::new(-2.0, 0.3).norm()).abs() < 1e-13);
        assert!(numerical_radius_ellipse2x2(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn sampling_examples() {
        let est = numerical_radius_sampling(&ComplexMatrix::identity(4), 50, 9).unwrap();
        assert_eq!(est.value, 1.0);
        let s = numerical_radius_sampling(&shift(2), 100_000, 3).unwrap();
        assert!(s.value <= 0.5 + 1e-12 && s.value > 0.5 - 1e-3);
        assert!(numerical_radius_sampling(&shift(2), 0, 3).is_err());
        assert_eq!(
            numerical_radius_sampling(&shift(3), 100, 5).unwrap(),
            numerical_radius_sampling(&shift(3), 100, 5).unwrap()
        );
    }

    #[test]
    fn power_inequality_examples() {
        let rep = check_power_inequality(&ComplexMatrix::identity(3), 5).unwrap();
        assert!(rep.passed);
        assert!(rep.slack.abs() < 1e-13);
        let rep = check_power_inequality(&shift(2), 2).unwrap();
        assert!(rep.lhs.abs() < 1e-15);
        assert!((rep.rhs - 0.25).abs() < 1e-12);
        assert!(rep.passed);
        assert_eq!(rep.id, "power_inequality");
    }

    #[test]
    fn estimate_json_shape() {
        let est = sweep(&shift(2));
        let v = serde_json::to_value(est).unwrap();
        assert_eq!(v["method"], "sweep");
        let e = numerical_radius_ellipse2x2(&shift(2)).unwrap();
        assert_eq!(serde_json::to_value(e).unwrap()["method"], "ellipse2x2");
    }
}
