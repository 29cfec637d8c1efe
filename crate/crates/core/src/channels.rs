//! Quantum channels, their Choi states, and the channel-moment detectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_dim, identity, r, trace, unit, ComplexMatrix, LinearMap};
use crate::maps::{choi_matrix, k_default_for_r, PositiveMapSpec};
use crate::moments::{
    hankel_report, map_output_moments, theorem4_like, DetectionReport, Detector, MomentVector,
};

/// Tolerance on `sum_j K_j^dagger K_j = I`.
pub const KRAUS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// `p rho + (1-p)/d Tr(rho) I`
    Depolarizing { d: usize, p: f64 },
    /// `v rho + (1-v) sum_i <i|rho|i> |i><i|`
    Dephasing { d: usize, v: f64 },
    /// `sum_j K_j rho K_j^dagger` with `d_out x d_in` operators.
    Kraus {
        ops: Vec<ComplexMatrix>,
        d_in: usize,
        d_out: usize,
    },
}

impl ChannelSpec {
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        check_unit_interval("p", p)?;
        check_d(d)?;
        Ok(Self::Depolarizing { d, p })
    }

    pub fn dephasing(d: usize, v: f64) -> Result<Self> {
        check_unit_interval("v", v)?;
        check_d(d)?;
        Ok(Self::Dephasing { d, v })
    }

    /// Validates shapes and trace preservation.
    pub fn kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let (d_out, d_in) = first.shape();
        let mut completeness = ComplexMatrix::zeros(d_in, d_in);
        for k in &ops {
            if k.shape() != (d_out, d_in) {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operators have mixed shapes {:?} and {:?}",
                    (d_out, d_in),
                    k.shape()
                )));
            }
            completeness += k.adjoint() * k;
        }
        let defect = (completeness - identity(d_in))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > KRAUS_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus operators are not trace preserving (defect {defect:e})"
            )));
        }
        Ok(Self::Kraus { ops, d_in, d_out })
    }

    pub fn d_in(&self) -> usize {
        match self {
            Self::Depolarizing { d, .. } | Self::Dephasing { d, .. } => *d,
            Self::Kraus { d_in, .. } => *d_in,
        }
    }

    pub fn d_out(&self) -> usize {
        match self {
            Self::Depolarizing { d, .. } | Self::Dephasing { d, .. } => *d,
            Self::Kraus { d_out, .. } => *d_out,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Depolarizing { .. } => "depolarizing",
            Self::Dephasing { .. } => "dephasing",
            Self::Kraus { .. } => "kraus",
        }
    }

    /// An explicit Kraus list realizing the channel.
    pub fn kraus_ops(&self) -> Vec<ComplexMatrix> {
        match self {
            Self::Depolarizing { d, p } => {
                let mut ops = vec![identity(*d) * r(p.sqrt())];
                let w = r(((1.0 - p) / *d as f64).sqrt());
                for i in 0..*d {
                    for j in 0..*d {
                        ops.push(unit(*d, i, j) * w);
                    }
                }
                ops
            }
            Self::Dephasing { d, v } => {
                let mut ops = vec![identity(*d) * r(v.sqrt())];
                let w = r((1.0 - v).sqrt());
                for i in 0..*d {
                    ops.push(unit(*d, i, i) * w);
                }
                ops
            }
            Self::Kraus { ops, .. } => ops.clone(),
        }
    }
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ParameterOutOfRange(format!(
            "{name} = {x} outside [0, 1]"
        )));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::ParameterOutOfRange("dimension must be positive".into()));
    }
    Ok(())
}

impl LinearMap for ChannelSpec {
    fn input_dim(&self) -> usize {
        self.d_in()
    }

    fn output_dim(&self) -> usize {
        self.d_out()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(x, self.d_in())?;
        Ok(match self {
            Self::Depolarizing { d, p } => {
                x * r(*p) + identity(*d) * (trace(x) * ((1.0 - p) / *d as f64))
            }
            Self::Dephasing { v, .. } => {
                let mut out = x * r(*v);
                for i in 0..x.nrows() {
                    out[(i, i)] += x[(i, i)] * (1.0 - v);
                }
                out
            }
            Self::Kraus { ops, d_out, .. } => {
                let mut out = ComplexMatrix::zeros(*d_out, *d_out);
                for k in ops {
                    out += k * x * k.adjoint();
                }
                out
            }
        })
    }
}

pub fn channel_apply(ch: &ChannelSpec, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    ch.apply(rho)
}

/// `(id (x) ch)(|phi+><phi+|)`, a unit-trace PSD operator on `C^d_in (x) C^d_out`.
pub fn channel_choi(ch: &ChannelSpec) -> Result<ComplexMatrix> {
    choi_matrix(ch)
}

/// `(e_1, ..., e_{n_max})` for a channel and the Reduction map of order `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMomentVector {
    pub values: Vec<f64>,
    pub r: usize,
    /// The Reduction parameter actually used.
    pub k: f64,
}

impl ChannelMomentVector {
    pub fn as_moments(&self) -> MomentVector {
        MomentVector::new(self.values.clone(), format!("channel moments r={} k={}", self.r, self.k))
    }
}

/// Channel moments with the default `k = 1/r`.
pub fn channel_moments(ch: &ChannelSpec, r: usize, n_max: usize) -> Result<ChannelMomentVector> {
    channel_moments_with_k(ch, r, k_default_for_r(r)?, n_max)
}

/// Moments of `(id (x) Reduction_k)` applied to the channel's Choi state.
pub fn channel_moments_with_k(
    ch: &ChannelSpec,
    r: usize,
    k: f64,
    n_max: usize,
) -> Result<ChannelMomentVector> {
    let d = ch.d_in();
    if ch.d_out() != d {
        return Err(Error::InvalidChannel(format!(
            "moment detectors need a square channel, got {} -> {}",
            d,
            ch.d_out()
        )));
    }
    if r < 1 || r >= d {
        return Err(Error::ParameterOutOfRange(format!(
            "r must lie in 1..={}, got {r}",
            d - 1
        )));
    }
    let map = PositiveMapSpec::reduction(k, d)?;
    let choi = channel_choi(ch)?;
    let out = map_output_moments(&map, &choi, d, d, n_max, "channel")?;
    Ok(ChannelMomentVector {
        values: out.moments.values,
        r,
        k,
    })
}

/// Fires when `e_2^2 - e_3 > 1e-10`: the channel is not `r`-Schmidt-number-breaking.
pub fn theorem4_check(e: &ChannelMomentVector) -> Result<DetectionReport> {
    theorem4_like(&e.as_moments())
}

/// Fires when `det H_m(e) < -1e-12`.
pub fn theorem5_check(e: &ChannelMomentVector, m: usize) -> Result<DetectionReport> {
    hankel_report(&e.as_moments(), m, Detector::T5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    Depolarizing,
    Dephasing,
}

impl ChannelFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelFamily::Depolarizing => "depolarizing",
            ChannelFamily::Dephasing => "dephasing",
        }
    }

    pub fn instantiate(&self, d: usize, param: f64) -> Result<ChannelSpec> {
        match self {
            ChannelFamily::Depolarizing => ChannelSpec::depolarizing(d, param),
            ChannelFamily::Dephasing => ChannelSpec::dephasing(d, param),
        }
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "depolarizing" | "depol" => Ok(ChannelFamily::Depolarizing),
            "dephasing" | "dephase" => Ok(ChannelFamily::Dephasing),
            _ => Err(Error::ParameterOutOfRange(format!("unknown channel family {s:?}"))),
        }
    }
}

/// Exact parameter at and below which the family is `r`-Schmidt-number-breaking.
///
/// Depolarizing: `(r d - 1) / (d^2 - 1)`. Dephasing: `(r - 1) / (d - 1)`.
pub fn snbc_threshold(family: ChannelFamily, d: usize, r: usize) -> Result<f64> {
    if d < 2 || r < 1 || r > d - 1 {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= r <= d-1, got r={r}, d={d}"
        )));
    }
    let (d, r) = (d as f64, r as f64);
    Ok(match family {
        ChannelFamily::Depolarizing => (r * d - 1.0) / (d * d - 1.0),
        ChannelFamily::Dephasing => (r - 1.0) / (d - 1.0),
    })
}
