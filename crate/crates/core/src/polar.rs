//! Polar decomposition, Hermitian functional calculus, and the scalar
//! function abstractions (factorization pairs and gauges) the transforms and
//! inequality checks are parameterized by.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, spectral_sum, ComplexMatrix, EPS};

/// Options for [`polar_decompose_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolarConfig {
    /// Replaces the default numerical-rank cutoff `n·ε·σ_max` when set.
    pub rank_tolerance: Option<f64>,
}

/// Spectral data of a positive semidefinite matrix with its numerical kernel
/// pinned to exact zeros.
#[derive(Debug, Clone)]
pub struct PsdSpectrum {
    /// Non-negative; entries at or below `tolerance` are stored as `0.0`.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: ComplexMatrix,
    pub tolerance: f64,
}

impl PsdSpectrum {
    fn truncated(values: &[f64], vectors: ComplexMatrix, tolerance: f64) -> Self {
        let values = values
            .iter()
            .map(|&v| if v > tolerance { v } else { 0.0 })
            .collect();
        Self { values, vectors, tolerance }
    }

    /// Spectrum of a Hermitian PSD matrix (eigenvalues down to `−τ` are
    /// accepted as roundoff, with `τ = 16·n·ε·‖H‖`).
    pub fn from_psd(h: &ComplexMatrix) -> Result<Self> {
        let eig = linalg::herm_eigen(h)?;
        let n = eig.eigenvalues.len();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tau = clamp_tolerance(n, scale);
        if eig.min_eigenvalue() < -tau {
            return Err(Error::rejected(format!(
                "matrix is not positive semidefinite: λ_min = {:.3e} < −{tau:.3e}",
                eig.min_eigenvalue()
            )));
        }
        Ok(Self::truncated(&eig.eigenvalues, eig.eigenvectors, tau))
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `φ(H)` by the spectral theorem. Fails with [`Error::Overflow`] when `φ`
    /// leaves the finite doubles on the spectrum.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let vals = self.eval(phi)?;
        Ok(spectral_sum(&self.vectors, &vals))
    }

    /// `φ` evaluated on the (truncated) spectrum.
    pub fn eval(&self, phi: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|&x| {
                let y = phi(x);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Overflow(format!("function value {y} at spectral point {x:.6e}")))
                }
            })
            .collect()
    }

    /// Orthogonal projection onto the span of eigenvectors with non-zero value.
    pub fn range_projection(&self) -> ComplexMatrix {
        let ind: Vec<f64> = self.values.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
        spectral_sum(&self.vectors, &ind)
    }

    /// `⟨φ(H)x, x⟩ = Σ φ(λ_k) |⟨x, q_k⟩|²`, summed term by term so that every
    /// contribution is non-negative for non-negative `φ`.
    pub fn quadratic_form(&self, phi: impl Fn(f64) -> f64, x: &[Complex64]) -> Result<f64> {
        let vals = self.eval(phi)?;
        let n = self.dim();
        let mut acc = 0.0;
        for (k, v) in vals.iter().enumerate() {
            let mut proj = Complex64::new(0.0, 0.0);
            for i in 0..n {
                proj += x[i] * self.vectors[(i, k)].conj();
            }
            acc += v * proj.norm_sqr();
        }
        Ok(acc)
    }
}

fn clamp_tolerance(n: usize, scale: f64) -> f64 {
    16.0 * n as f64 * EPS * scale
}

/// `A = U |A|` with `U` a partial isometry vanishing on `ker |A|`.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    /// `U`.
    pub isometry: ComplexMatrix,
    /// `P = |A|`.
    pub positive: ComplexMatrix,
    pub numerical_rank: usize,
    pub rank_tolerance: f64,
    /// Spectrum of `|A|` (right singular vectors).
    pub spectrum: PsdSpectrum,
    /// Spectrum of `|A*|` (left singular vectors), from the same SVD.
    pub co_spectrum: PsdSpectrum,
}

impl PolarFactors {
    /// `φ(|A|)`.
    pub fn apply(&self, phi: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        self.spectrum.apply(phi)
    }

    /// `φ(|A*|)`.
    pub fn apply_adjoint(&self, phi: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        self.co_spectrum.apply(phi)
    }
}

/// `|A| = (A*A)^{1/2}`, computed from the eigendecomposition of `A*A`.
/// Negative eigenvalues of `A*A` (roundoff) are clamped to zero.
pub fn abs_value(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square("abs_value")?;
    let gram = &a.adjoint() * a;
    let eig = linalg::herm_eigen(&gram)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Polar decomposition with the default rank tolerance.
pub fn polar_decompose(a: &ComplexMatrix) -> Result<PolarFactors> {
    polar_decompose_with(a, &PolarConfig::default())
}

/// Polar decomposition from the SVD `A = W Σ V*`: `U = W_ρ V_ρ*` over the
/// `ρ` singular values above the rank tolerance, `P = V Σ V*`.
pub fn polar_decompose_with(a: &ComplexMatrix, config: &PolarConfig) -> Result<PolarFactors> {
    let n = a.require_square("polar_decompose")?;
    let dec = linalg::svd(a)?;
    let sigma_max = dec.singulars[0];
    let tol = config
        .rank_tolerance
        .unwrap_or(n as f64 * EPS * sigma_max);
    let rank = dec.singulars.iter().filter(|&&s| s > tol).count();

    let mut isometry = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..rank {
                acc += dec.left[(i, k)] * dec.right[(j, k)].conj();
            }
            isometry[(i, j)] = acc;
        }
    }
    let positive = spectral_sum(&dec.right, &dec.singulars);
    Ok(PolarFactors {
        isometry,
        positive,
        numerical_rank: rank,
        rank_tolerance: tol,
        spectrum: PsdSpectrum::truncated(&dec.singulars, dec.right.clone(), tol),
        co_spectrum: PsdSpectrum::truncated(&dec.singulars, dec.left.clone(), tol),
    })
}

/// `φ(H)` for Hermitian positive semidefinite `H`.
///
/// Eigenvalues below `−τ` (`τ = 16·n·ε·‖H‖`) reject the input; those within
/// `τ` of zero are treated as exact zeros.
pub fn matrix_function(h: &ComplexMatrix, phi: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    PsdSpectrum::from_psd(h)?.apply(phi)
}

/// `x^p` on `[0, ∞)` with `0^p = 0` for every `p ≥ 0`, including `p = 0`.
pub fn pow0(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sampling grid used to validate scalar functions.
pub fn validation_grid() -> Vec<f64> {
    let mut grid = vec![0.0, 1e-6, 1e-3];
    grid.extend((0..=100).map(|k| 0.1 * k as f64));
    grid.extend([1e2, 1e3]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairKind {
    Power(f64),
    Custom,
}

/// A factorization `f(x)·g(x) = x` of the identity on `[0, ∞)` into
/// non-negative functions.
#[derive(Clone)]
pub struct FunctionPair {
    pub label: String,
    f: ScalarFn,
    g: ScalarFn,
    /// Both `f` and `g` are non-decreasing.
    pub monotone: bool,
    pub kind: PairKind,
}

impl fmt::Debug for FunctionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionPair")
            .field("label", &self.label)
            .field("monotone", &self.monotone)
            .field("kind", &self.kind)
            .finish()
    }
}

impl FunctionPair {
    /// Wraps a custom pair after validating it on [`validation_grid`].
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        monotone: bool,
    ) -> Result<Self> {
        let pair = Self {
            label: label.into(),
            f: Arc::new(f),
            g: Arc::new(g),
            monotone,
            kind: PairKind::Custom,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    /// Checks non-negativity, `f·g = x` and (if flagged) monotonicity on the
    /// validation grid. Grid points where either factor is not a finite
    /// double are outside the representable range and are not compared.
    pub fn validate(&self) -> Result<()> {
        let grid = validation_grid();
        let mut prev: Option<(f64, f64)> = None;
        for &x in &grid {
            let (fx, gx) = (self.f(x), self.g(x));
            if fx.is_nan() || gx.is_nan() {
                return Err(Error::rejected(format!("pair {}: NaN at x = {x}", self.label)));
            }
            if fx < 0.0 || gx < 0.0 {
                return Err(Error::rejected(format!("pair {}: negative value at x = {x}", self.label)));
            }
            if fx.is_finite() && gx.is_finite() {
                let err = (fx * gx - x).abs();
                if err > 1e-10 * (1.0 + x) {
                    return Err(Error::rejected(format!(
                        "pair {}: f(x)g(x) − x = {err:.3e} at x = {x}",
                        self.label
                    )));
                }
            }
            if self.monotone {
                if let Some((pf, pg)) = prev {
                    if fx - pf < -1e-12 || gx - pg < -1e-12 {
                        return Err(Error::rejected(format!(
                            "pair {}: flagged monotone but decreases at x = {x}",
                            self.label
                        )));
                    }
                }
            }
            prev = Some((fx, gx));
        }
        Ok(())
    }
}

/// `f(x) = x^t`, `g(x) = x^{1−t}` with `0⁰ = 0`.
pub fn make_power_pair(t: f64) -> Result<FunctionPair> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::rejected(format!("power pair exponent t = {t} outside [0, 1]")));
    }
    Ok(FunctionPair {
        label: format!("power:{t}"),
        f: Arc::new(move |x| pow0(x, t)),
        g: Arc::new(move |x| pow0(x, 1.0 - t)),
        monotone: true,
        kind: PairKind::Power(t),
    })
}

fn rational_pair() -> FunctionPair {
    FunctionPair {
        label: "rational".into(),
        f: Arc::new(|x| x / (1.0 + x)),
        g: Arc::new(|x| 1.0 + x),
        monotone: true,
        kind: PairKind::Custom,
    }
}

fn exp_pair() -> FunctionPair {
    FunctionPair {
        label: "exp".into(),
        f: Arc::new(|x| x * (-x).exp()),
        g: Arc::new(f64::exp),
        monotone: false,
        kind: PairKind::Custom,
    }
}

/// The non-power pairs shipped with the crate: `rational`
/// (`x/(1+x)`, `1+x`) and `exp` (`x·e^{−x}`, `e^x`).
pub fn builtin_custom_pairs() -> Vec<FunctionPair> {
    vec![rational_pair(), exp_pair()]
}

impl FromStr for FunctionPair {
    type Err = Error;

    /// `power:<t>`, `rational` or `exp`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(rational_pair()),
            "exp" => Ok(exp_pair()),
            _ => {
                let t = s
                    .strip_prefix("power:")
                    .ok_or_else(|| Error::Spec(format!("unknown function pair {s:?}")))?;
                let t: f64 = t
                    .parse()
                    .map_err(|_| Error::Spec(format!("bad power pair exponent in {s:?}")))?;
                make_power_pair(t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeKind {
    Power(f64),
    Expm1,
    Custom,
}

/// A non-negative, non-decreasing convex function on `[0, ∞)`.
#[derive(Clone)]
pub struct GaugeFunction {
    pub label: String,
    h: ScalarFn,
    pub kind: GaugeKind,
}

impl fmt::Debug for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeFunction")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .finish()
    }
}

impl GaugeFunction {
    /// `h(x) = x^r`, `r ≥ 1`.
    pub fn power(r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::rejected(format!("gauge exponent r = {r} must be ≥ 1")));
        }
        Ok(Self {
            label: format!("gauge:power:{r}"),
            h: Arc::new(move |x| if r == 1.0 { x } else { pow0(x, r) }),
            kind: GaugeKind::Power(r),
        })
    }

    /// `h(x) = e^x − 1`.
    pub fn expm1() -> Self {
        Self {
            label: "gauge:expm1".into(),
            h: Arc::new(f64::exp_m1),
            kind: GaugeKind::Expm1,
        }
    }

    pub fn custom(label: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let gauge = Self {
            label: label.into(),
            h: Arc::new(h),
            kind: GaugeKind::Custom,
        };
        gauge.validate()?;
        Ok(gauge)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    /// Non-negativity, monotonicity and midpoint convexity on the validation
    /// grid.
    pub fn validate(&self) -> Result<()> {
        let grid = validation_grid();
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        if vals.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::rejected(format!("gauge {}: negative or NaN value", self.label)));
        }
        if vals.windows(2).any(|w| w[1] - w[0] < -1e-12) {
            return Err(Error::rejected(format!("gauge {}: not non-decreasing", self.label)));
        }
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let mid = self.eval(0.5 * (grid[i] + grid[j]));
                let chord = 0.5 * (vals[i] + vals[j]);
                if mid > chord + 1e-10 * (1.0 + chord.abs()) {
                    return Err(Error::rejected(format!(
                        "gauge {}: midpoint convexity fails between {} and {}",
                        self.label, grid[i], grid[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

impl FromStr for GaugeFunction {
    type Err = Error;

    /// `gauge:power:<r>` or `gauge:expm1` (the `gauge:` prefix is optional).
    fn from_str(s: &str) -> Result<Self> {
        let body = s.strip_prefix("gauge:").unwrap_or(s);
        if body == "expm1" {
            return Ok(Self::expm1());
        }
        let r = body
            .strip_prefix("power:")
            .ok_or_else(|| Error::Spec(format!("unknown gauge {s:?}")))?;
        let r: f64 = r
            .parse()
            .map_err(|_| Error::Spec(format!("bad gauge exponent in {s:?}")))?;
        Self::power(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn abs_value_examples() {
        let p = abs_value(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!(p.max_abs_diff(&m(&[&[0.0, 0.0], &[0.0, 1.0]])) < 1e-15);

        let u = Complex64::from_polar(1.0, 0.7);
        let p = abs_value(&ComplexMatrix::identity(3).scale(u)).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);

        let p = abs_value(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        let e = linalg::herm_eigen(&p).unwrap();
        let r5 = 5f64.sqrt();
        assert_abs_diff_eq!(e.eigenvalues[0], (r5 - 1.0) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], (1.0 + r5) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn polar_examples() {
        let shift = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pf = polar_decompose(&shift).unwrap();
        assert_eq!(pf.numerical_rank, 1);
        assert!(pf.isometry.max_abs_diff(&shift) < 1e-15);
        assert!(pf.positive.max_abs_diff(&m(&[&[0.0, 0.0], &[0.0, 1.0]])) < 1e-15);

        let two = ComplexMatrix::identity(3).scale_real(2.0);
        let pf = polar_decompose(&two).unwrap();
        assert!(pf.isometry.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(pf.positive.max_abs_diff(&two) < 1e-15);
    }

    #[test]
    fn polar_of_zero() {
        let pf = polar_decompose(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(pf.numerical_rank, 0);
        assert_eq!(pf.isometry, ComplexMatrix::zeros(3, 3));
        assert_eq!(pf.positive, ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn polar_rank_override() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1e-3]]);
        let pf = polar_decompose_with(&a, &PolarConfig { rank_tolerance: Some(1e-2) }).unwrap();
        assert_eq!(pf.numerical_rank, 1);
        assert!(pf.isometry.max_abs_diff(&m(&[&[1.0, 0.0], &[0.0, 0.0]])) < 1e-15);
    }

    #[test]
    fn matrix_function_examples() {
        let r = matrix_function(&m(&[&[0.0, 0.0], &[0.0, 4.0]]), f64::sqrt).unwrap();
        assert!(r.max_abs_diff(&m(&[&[0.0, 0.0], &[0.0, 2.0]])) < 1e-15);
        // [[2,1],[1,2]]² by hand
        let r = matrix_function(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), |x| x * x).unwrap();
        assert!(r.max_abs_diff(&m(&[&[5.0, 4.0], &[4.0, 5.0]])) < 1e-13);
    }

    #[test]
    fn matrix_function_rejects_indefinite() {
        let err = matrix_function(&m(&[&[1.0, 0.0], &[0.0, -1.0]]), f64::sqrt).unwrap_err();
        assert!(matches!(err, Error::RejectedInput(_)));
    }

    #[test]
    fn matrix_function_reports_overflow() {
        let err = matrix_function(&m(&[&[800.0, 0.0], &[0.0, 1.0]]), f64::exp).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
    }

    #[test]
    fn power_pair_examples() {
        let p = make_power_pair(0.5).unwrap();
        assert_eq!((p.f(4.0), p.g(4.0)), (2.0, 2.0));
        let duggal = make_power_pair(1.0).unwrap();
        assert_eq!((duggal.f(3.0), duggal.g(3.0)), (3.0, 1.0));
        assert_eq!((duggal.f(0.0), duggal.g(0.0)), (0.0, 0.0));
        let p = make_power_pair(0.3).unwrap();
        assert_abs_diff_eq!(p.f(8.0) * p.g(8.0), 8.0, epsilon = 1e-12);
        assert!(make_power_pair(1.5).is_err());
        assert!(make_power_pair(-0.1).is_err());
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            make_power_pair(t).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn custom_pair_examples() {
        let pairs = builtin_custom_pairs();
        let rational = &pairs[0];
        assert_abs_diff_eq!(rational.f(2.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(rational.g(2.0), 3.0);
        assert_abs_diff_eq!(rational.f(2.0) * rational.g(2.0), 2.0, epsilon = 1e-15);
        assert!(rational.monotone);
        let exp = &pairs[1];
        assert_eq!((exp.f(0.0), exp.g(0.0)), (0.0, 1.0));
        assert!(!exp.monotone);
        for p in &pairs {
            p.validate().unwrap();
        }
    }

    #[test]
    fn validation_catches_bad_pairs() {
        assert!(FunctionPair::custom("bad", |x| x, |_| 2.0, false).is_err());
        assert!(FunctionPair::custom("neg", |x| -x, |_| -1.0, false).is_err());
        // x·e^{−x} is not monotone
        assert!(FunctionPair::custom("liar", |x| x * (-x).exp(), f64::exp, true).is_err());
    }

    #[test]
    fn gauge_validation() {
        for s in ["gauge:power:1", "gauge:power:2", "gauge:power:3", "gauge:expm1"] {
            let g: GaugeFunction = s.parse().unwrap();
            g.validate().unwrap();
            assert_eq!(g.label, s);
        }
        assert!(GaugeFunction::custom("sqrt", f64::sqrt).is_err());
        assert!(GaugeFunction::custom("decreasing", |x| (-x).exp()).is_err());
        assert!(GaugeFunction::power(0.5).is_err());
    }

    #[test]
    fn spec_strings() {
        assert_eq!("power:0.5".parse::<FunctionPair>().unwrap().kind, PairKind::Power(0.5));
        assert_eq!("rational".parse::<FunctionPair>().unwrap().label, "rational");
        assert_eq!("exp".parse::<FunctionPair>().unwrap().label, "exp");
        assert!("power:2".parse::<FunctionPair>().is_err());
        assert!("cosh".parse::<FunctionPair>().is_err());
        assert_eq!("power:2".parse::<GaugeFunction>().unwrap().kind, GaugeKind::Power(2.0));
        assert!("gauge:log".parse::<GaugeFunction>().is_err());
    }
}
