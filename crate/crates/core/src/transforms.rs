//! The generalized Aluthge transform `Ã_{f,g} = f(|A|) U g(|A|)` and the
//! 2×2 block constructions used by the operator-matrix bounds.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::polar::{make_power_pair, polar_decompose_with, FunctionPair, PolarConfig, PolarFactors};

#[derive(Debug, Clone)]
pub struct TransformResult {
    /// `f(P) U g(P)`.
    pub transformed: ComplexMatrix,
    pub factors: PolarFactors,
    pub pair: String,
}

/// `f(|A|) U g(|A|)` with `U`, `|A|` from the polar decomposition.
pub fn aluthge_general(a: &ComplexMatrix, pair: &FunctionPair) -> Result<TransformResult> {
    aluthge_general_with(a, pair, &PolarConfig::default())
}

pub fn aluthge_general_with(a: &ComplexMatrix, pair: &FunctionPair, config: &PolarConfig) -> Result<TransformResult> {
    let factors = polar_decompose_with(a, config)?;
    let transformed = transform_from_factors(&factors, pair)?;
    Ok(TransformResult {
        transformed,
        factors,
        pair: pair.label.clone(),
    })
}

/// Composes `f(P) U g(P)` from already computed polar factors.
pub fn transform_from_factors(factors: &PolarFactors, pair: &FunctionPair) -> Result<ComplexMatrix> {
    let fp = factors.apply(|x| pair.f(x))?;
    let gp = factors.apply(|x| pair.g(x))?;
    Ok(&(&fp * &factors.isometry) * &gp)
}

/// `|A|^t U |A|^{1−t}`; `t = 1` gives the Duggal transform `|A| U`.
pub fn aluthge_t(a: &ComplexMatrix, t: f64) -> Result<TransformResult> {
    aluthge_general(a, &make_power_pair(t)?)
}

/// `[[0, a], [b, 0]]`.
pub fn offdiag_embed(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square("offdiag_embed")?;
    if b.rows() != n || b.cols() != n {
        return Err(Error::rejected(format!(
            "offdiag_embed: blocks {n}x{n} and {}x{} differ",
            b.rows(),
            b.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.set_block(0, n, a);
    out.set_block(n, 0, b);
    Ok(out)
}

/// `[[a, b], [c, d]]` for four `n × n` blocks.
pub fn block2x2(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, d: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square("block2x2")?;
    for (name, m) in [("b", b), ("c", c), ("d", d)] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::rejected(format!(
                "block2x2: block {name} is {}x{}, expected {n}x{n}",
                m.rows(),
                m.cols()
            )));
        }
    }
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.set_block(0, 0, a);
    out.set_block(0, n, b);
    out.set_block(n, 0, c);
    out.set_block(n, n, d);
    Ok(out)
}
