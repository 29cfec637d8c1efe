//! Channel discrimination with Schmidt-number-limited ancillas.
//!
//! The trace-preserving Reduction map `L_tp(X) = (Tr(X) I - k X) / (d - k)`
//! is extended to a trace-annihilating map `L_ta(X) = L_tp(X) (+) (-Tr X)|f><f|`
//! on a `d+1` dimensional output, with `|f> = |d>`. `L_ta` is a scaled
//! difference `S_1 - S_2 = k_scale L_ta` of two channels, built here
//! explicitly from a Jordan decomposition of its Choi matrix.
//!
//! For an input `rho` the two outputs differ in trace norm by
//! `k_scale (W + 1)` with `W = ||(id (x) L_tp)(rho)||_1`. States of Schmidt
//! number at most `r` have `W = 1`; anything with `W > 1` beats every such
//! state at telling `S_1` from `S_2`.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::linalg::{
    apply_to_second, ensure_density, ensure_square, hermitian_eigen, hermitian_eigenvalues,
    identity, kron, partial_trace_second, r, trace, trace_norm, unit, ComplexMatrix, LinearMap,
};
use crate::maps::{choi_matrix, k_default_for_r, PositiveMapSpec};

/// `W > 1 + WITNESS_TOL` counts as an advantage.
pub const WITNESS_TOL: f64 = 1e-9;
const TP_TOL: f64 = 1e-12;
const DEGENERATE_TA: f64 = 1e-12;
/// Choi eigenvalues below this (relative to the largest) are dropped when extracting Kraus operators.
const KRAUS_CUTOFF: f64 = 1e-13;

pub fn reduction_tp(k: f64, d: usize) -> Result<PositiveMapSpec> {
    PositiveMapSpec::reduction_tp(k, d)
}

/// Append `-Tr(X) |d><d|` to a trace-preserving map on `M_d`.
pub fn trace_annihilating(map_tp: PositiveMapSpec, d: usize) -> Result<PositiveMapSpec> {
    if map_tp.input_dim() != d || map_tp.output_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: map_tp.input_dim(),
        });
    }
    for i in 0..d {
        for j in 0..d {
            let out = map_tp.apply(&unit(d, i, j))?;
            let want = if i == j { 1.0 } else { 0.0 };
            if (trace(&out) - r(want)).norm() > TP_TOL {
                return Err(Error::ParameterOutOfRange(format!(
                    "map {} is not trace preserving",
                    map_tp.name()
                )));
            }
        }
    }
    Ok(PositiveMapSpec::TraceAnnihilating {
        inner: Box::new(map_tp),
    })
}

/// Two `d -> d+1` channels whose difference is `k_scale` times a trace-annihilating map.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub s1: ChannelSpec,
    pub s2: ChannelSpec,
    pub k_scale: f64,
    pub d: usize,
}

/// `sum_ij |i><j| (x) map(|i><j|)`, the Choi matrix without the `1/d`.
fn unnormalized_choi<M: LinearMap + ?Sized>(map: &M) -> Result<ComplexMatrix> {
    Ok(choi_matrix(map)? * r(map.input_dim() as f64))
}

fn kraus_from_choi(j: &ComplexMatrix, d_in: usize, d_out: usize) -> Result<Vec<ComplexMatrix>> {
    let (spec, vecs) = hermitian_eigen(j)?;
    let top = spec.max().max(0.0);
    let mut ops = Vec::new();
    for (a, &lambda) in spec.eigenvalues.iter().enumerate() {
        if lambda <= KRAUS_CUTOFF * top.max(1.0) {
            continue;
        }
        let s = r(lambda.sqrt());
        let v = vecs.column(a);
        ops.push(ComplexMatrix::from_fn(d_out, d_in, |o, i| v[i * d_out + o] * s));
    }
    Ok(ops)
}

/// Build `S_1, S_2` with `S_1 - S_2 = k_scale * ta`.
///
/// With `J` the unnormalized Choi matrix of `ta`, split `J = J+ - J-` into
/// positive and negative spectral parts. Trace annihilation gives
/// `Tr_out J+ = Tr_out J- =: M`. With `c = lambda_max(M)` the common
/// completion `R = (c I - M) (x) I/(d+1)` is PSD, and `(J+- + R) / c` are
/// Choi matrices of channels. Then `k_scale = 1/c`.
pub fn channel_pair_from_ta(ta: &PositiveMapSpec, d: usize) -> Result<ChannelPair> {
    if ta.input_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: ta.input_dim(),
        });
    }
    let d_out = ta.output_dim();
    let j = unnormalized_choi(ta)?;
    let n = ensure_square(&j)?;
    let (spec, vecs) = hermitian_eigen(&j)?;
    let mut plus = ComplexMatrix::zeros(n, n);
    let mut minus = ComplexMatrix::zeros(n, n);
    for (a, &lambda) in spec.eigenvalues.iter().enumerate() {
        let v = vecs.column(a).into_owned();
        let proj = &v * v.adjoint();
        if lambda > 0.0 {
            plus += proj * r(lambda);
        } else if lambda < 0.0 {
            minus += proj * r(-lambda);
        }
    }
    let m_plus = partial_trace_second(&plus, d, d_out)?;
    let m_minus = partial_trace_second(&minus, d, d_out)?;
    let mismatch = (&m_plus - &m_minus)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if mismatch > 1e-9 {
        return Err(Error::ParameterOutOfRange(format!(
            "map is not trace annihilating (marginal mismatch {mismatch:e})"
        )));
    }
    let m = crate::linalg::symmetrize(&m_plus);
    let c = hermitian_eigenvalues(&m)?.max();
    if c < DEGENERATE_TA {
        return Err(Error::DegenerateTA(c));
    }
    let completion = kron(
        &(identity(d) * r(c) - &m),
        &(identity(d_out) * r(1.0 / d_out as f64)),
    );
    let j1 = (plus + &completion) * r(1.0 / c);
    let j2 = (minus + &completion) * r(1.0 / c);
    let s1 = ChannelSpec::kraus(kraus_from_choi(&j1, d, d_out)?)?;
    let s2 = ChannelSpec::kraus(kraus_from_choi(&j2, d, d_out)?)?;
    Ok(ChannelPair {
        s1,
        s2,
        k_scale: 1.0 / c,
        d,
    })
}

/// The pair built from the trace-annihilating extension of `Reduction_tp(1/r)` on `M_d`.
pub fn reduction_channel_pair(d: usize, r_order: usize) -> Result<ChannelPair> {
    let tp = reduction_tp(k_default_for_r(r_order)?, d)?;
    channel_pair_from_ta(&trace_annihilating(tp, d)?, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVerdict {
    Advantage,
    NoAdvantage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    /// `W = ||(id (x) L_tp)(rho)||_1`
    pub trace_norm_value: f64,
    /// `k_scale (W - 1) / 2`, in units of success probability.
    pub advantage: f64,
    pub k_scale: f64,
    /// Smallest eigenvalue of `(id (x) L_tp)(rho)`.
    pub min_eigenvalue: f64,
    pub r: usize,
    pub verdict: WitnessVerdict,
}

impl WitnessReport {
    pub fn has_advantage(&self) -> bool {
        matches!(self.verdict, WitnessVerdict::Advantage)
    }
}

fn second_dim(rho: &ComplexMatrix, da: usize) -> Result<usize> {
    let n = ensure_square(rho)?;
    if da == 0 || n % da != 0 {
        return Err(Error::DimensionMismatch {
            expected: da,
            actual: n,
        });
    }
    Ok(n / da)
}

/// Evaluate the discrimination witness of `rho` on `C^da (x) C^d` against Schmidt number `r`.
pub fn discrimination_witness(rho: &ComplexMatrix, da: usize, r_order: usize) -> Result<WitnessReport> {
    ensure_density(rho)?;
    let d = second_dim(rho, da)?;
    let tp = reduction_tp(k_default_for_r(r_order)?, d)?;
    let out = apply_to_second(&tp, rho, da, d)?;
    let spec = hermitian_eigenvalues(&out)?;
    let w = spec.abs_sum();
    let pair = reduction_channel_pair(d, r_order)?;
    let verdict = if w > 1.0 + WITNESS_TOL {
        WitnessVerdict::Advantage
    } else {
        WitnessVerdict::NoAdvantage
    };
    Ok(WitnessReport {
        trace_norm_value: w,
        advantage: pair.k_scale * (w - 1.0) / 2.0,
        k_scale: pair.k_scale,
        min_eigenvalue: spec.min(),
        r: r_order,
        verdict,
    })
}

/// Optimal probability of telling `rho1` (prior `p`) from `rho2` (prior `1-p`).
pub fn helstrom(rho1: &ComplexMatrix, rho2: &ComplexMatrix, p: f64) -> Result<f64> {
    let n = ensure_square(rho1)?;
    if ensure_square(rho2)? != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rho2.nrows(),
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange(format!("prior {p} outside [0, 1]")));
    }
    let diff = rho1 * r(p) - rho2 * r(1.0 - p);
    Ok(0.5 * (1.0 + trace_norm(&diff)?))
}

/// `1/2 ||(id (x) S_1)(rho) - (id (x) S_2)(rho)||_1` for a given pair.
pub fn pair_distance(rho: &ComplexMatrix, da: usize, pair: &ChannelPair) -> Result<f64> {
    let d = second_dim(rho, da)?;
    let o1 = apply_to_second(&pair.s1, rho, da, d)?;
    let o2 = apply_to_second(&pair.s2, rho, da, d)?;
    Ok(0.5 * trace_norm(&(o1 - o2))?)
}

/// [`pair_distance`] for the Reduction channel pair of order `r`.
pub fn end_to_end_advantage(rho: &ComplexMatrix, da: usize, r_order: usize) -> Result<f64> {
    ensure_density(rho)?;
    let d = second_dim(rho, da)?;
    let pair = reduction_channel_pair(d, r_order)?;
    pair_distance(rho, da, &pair)
}
