//! Positive (not completely positive) maps and their Choi matrices.
//!
//! Every map here has the shape `X -> mu Tr(X) I - Phi(X)` with `Phi`
//! completely positive. Maps are stored by their action; Choi matrices are
//! derived on demand.

use crate::error::{Error, Result};
use crate::linalg::{
    apply_to_second, ensure_dim, ensure_square, hermitian_eigenvalues, identity, max_abs, r,
    trace, ComplexMatrix, LinearMap, ZERO,
};

const ANTISYMMETRY_TOL: f64 = 1e-12;
const CONTRACTION_TOL: f64 = 1e-12;

/// A named map together with the dimension it acts on.
#[derive(Debug, Clone, PartialEq)]
pub enum PositiveMapSpec {
    /// `Tr(X) I - k X`
    Reduction { k: f64, d: usize },
    /// `Tr(X) I - X - U X^T U^dagger`
    BreuerHall { u: ComplexMatrix, d: usize },
    /// `(d-k) eps(X) + sum_{i=1..k} eps(S^i X S^i^dagger) - X`
    GeneralizedChoi { d: usize, k: usize },
    Transpose { d: usize },
    Identity { d: usize },
    /// `mu Tr(X) I - sum_j K_j X K_j^dagger`
    Custom {
        kraus_plus: Vec<ComplexMatrix>,
        mu: f64,
        d: usize,
    },
    /// `(Tr(X) I - k X) / (d - k)`, the trace-preserving rescaling of `Reduction`.
    ReductionTp { k: f64, d: usize },
    /// `inner(X) (+) (-Tr(X))`: the inner trace-preserving map embedded in the
    /// top-left block of a `d+1` output space, with `-Tr(X)` on the extra
    /// basis vector `|d>`.
    TraceAnnihilating { inner: Box<PositiveMapSpec> },
}

impl PositiveMapSpec {
    pub fn reduction(k: f64, d: usize) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::ParameterOutOfRange(format!(
                "reduction map needs k > 0, got {k}"
            )));
        }
        check_d(d)?;
        Ok(Self::Reduction { k, d })
    }

    /// Reduction map that is `r`-positive but not `(r+1)`-positive, with `k = 1/r`.
    pub fn reduction_for_r(r: usize, d: usize) -> Result<Self> {
        Self::reduction(k_default_for_r(r)?, d)
    }

    pub fn breuer_hall(u: ComplexMatrix) -> Result<Self> {
        validate_breuer_hall_u(&u)?;
        let d = u.nrows();
        Ok(Self::BreuerHall { u, d })
    }

    pub fn generalized_choi(d: usize, k: usize) -> Result<Self> {
        if d < 2 || k < 1 || k > d - 1 {
            return Err(Error::ParameterOutOfRange(format!(
                "generalized Choi map needs 1 <= k <= d-1, got d={d}, k={k}"
            )));
        }
        Ok(Self::GeneralizedChoi { d, k })
    }

    /// The classic `d = 3, k = 1` Choi map.
    pub fn choi() -> Self {
        Self::GeneralizedChoi { d: 3, k: 1 }
    }

    pub fn transpose(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Self::Transpose { d })
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Self::Identity { d })
    }

    pub fn custom(kraus_plus: Vec<ComplexMatrix>, mu: f64, d: usize) -> Result<Self> {
        check_d(d)?;
        for k in &kraus_plus {
            ensure_dim(k, d)?;
        }
        Ok(Self::Custom { kraus_plus, mu, d })
    }

    pub fn reduction_tp(k: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::ParameterOutOfRange(format!(
                "trace-preserving reduction needs d >= 2, got {d}"
            )));
        }
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "trace-preserving reduction needs 0 < k <= 1, got {k}"
            )));
        }
        Ok(Self::ReductionTp { k, d })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Reduction { d, .. }
            | Self::BreuerHall { d, .. }
            | Self::GeneralizedChoi { d, .. }
            | Self::Transpose { d }
            | Self::Identity { d }
            | Self::Custom { d, .. }
            | Self::ReductionTp { d, .. } => *d,
            Self::TraceAnnihilating { inner } => inner.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Reduction { .. } => "reduction",
            Self::BreuerHall { .. } => "breuer_hall",
            Self::GeneralizedChoi { .. } => "gen_choi",
            Self::Transpose { .. } => "transpose",
            Self::Identity { .. } => "identity",
            Self::Custom { .. } => "custom",
            Self::ReductionTp { .. } => "reduction_tp",
            Self::TraceAnnihilating { .. } => "trace_annihilating",
        }
    }

    /// Whether this is a member of the Reduction family (including its trace-preserving form).
    pub fn is_reduction(&self) -> bool {
        matches!(self, Self::Reduction { .. } | Self::ReductionTp { .. })
    }
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::ParameterOutOfRange("dimension must be positive".into()));
    }
    Ok(())
}

impl LinearMap for PositiveMapSpec {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn output_dim(&self) -> usize {
        match self {
            Self::TraceAnnihilating { inner } => inner.output_dim() + 1,
            _ => self.dim(),
        }
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        ensure_dim(x, self.dim())?;
        match self {
            Self::Reduction { k, .. } => Ok(reduction_apply(*k, x)),
            Self::BreuerHall { u, .. } => Ok(breuer_hall_unchecked(u, x)),
            Self::GeneralizedChoi { d, k } => generalized_choi_apply(*d, *k, x),
            Self::Transpose { .. } => Ok(x.transpose()),
            Self::Identity { .. } => Ok(x.clone()),
            Self::Custom { kraus_plus, mu, d } => {
                let mut out = identity(*d) * (trace(x) * *mu);
                for k in kraus_plus {
                    out -= k * x * k.adjoint();
                }
                Ok(out)
            }
            Self::ReductionTp { k, d } => {
                Ok(reduction_apply(*k, x) * r(1.0 / (*d as f64 - *k)))
            }
            Self::TraceAnnihilating { inner } => {
                let inner_out = inner.apply(x)?;
                let n = inner_out.nrows();
                let mut out = ComplexMatrix::zeros(n + 1, n + 1);
                out.view_mut((0, 0), (n, n)).copy_from(&inner_out);
                out[(n, n)] = -trace(x);
                Ok(out)
            }
        }
    }
}

/// `Tr(X) I - k X`
pub fn reduction_apply(k: f64, x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.nrows();
    identity(n) * trace(x) - x * r(k)
}

/// Check that `U` is complex antisymmetric (`U^T = -U`) and a contraction.
pub fn validate_breuer_hall_u(u: &ComplexMatrix) -> Result<()> {
    let d = ensure_square(u)?;
    let scale = max_abs(u).max(1.0);
    let defect = (u.transpose() + u).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > ANTISYMMETRY_TOL * scale {
        return Err(Error::InvalidU(format!(
            "U^T + U has entry of size {defect:e}"
        )));
    }
    // Largest singular value squared is the top eigenvalue of U^dagger U.
    let gram = u.adjoint() * u;
    let top = hermitian_eigenvalues(&gram)?.max().max(0.0).sqrt();
    if top > 1.0 + CONTRACTION_TOL {
        return Err(Error::InvalidU(format!(
            "largest singular value {top} exceeds 1 (d = {d})"
        )));
    }
    Ok(())
}

fn breuer_hall_unchecked(u: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.nrows();
    identity(n) * trace(x) - x - u * x.transpose() * u.adjoint()
}

/// `Tr(X) I - X - U X^T U^dagger`
pub fn breuer_hall_apply(u: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_breuer_hall_u(u)?;
    ensure_dim(x, u.nrows())?;
    Ok(breuer_hall_unchecked(u, x))
}

/// The generalized Choi map `Lambda_C^{d,k}`.
pub fn generalized_choi_apply(d: usize, k: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if d < 2 || k < 1 || k > d - 1 {
        return Err(Error::ParameterOutOfRange(format!(
            "generalized Choi map needs 1 <= k <= d-1, got d={d}, k={k}"
        )));
    }
    ensure_dim(x, d)?;
    let mut out = -x.clone();
    for j in 0..d {
        // eps(S^i X S^i^dagger) has X_{j+i, j+i} at (j, j) since S lowers indices cyclically.
        let shifted: num_complex::Complex64 = (1..=k).map(|i| x[((j + i) % d, (j + i) % d)]).sum();
        out[(j, j)] += x[(j, j)] * (d - k) as f64 + shifted;
    }
    Ok(out)
}

/// `|phi+><phi+|` with `|phi+> = d^{-1/2} sum_i |ii>`.
pub fn phi_plus(d: usize) -> ComplexMatrix {
    let n = d * d;
    let w = r(1.0 / d as f64);
    ComplexMatrix::from_fn(n, n, |a, b| {
        if a % (d + 1) == 0 && b % (d + 1) == 0 {
            w
        } else {
            ZERO
        }
    })
}

/// `(id (x) map)(|phi+><phi+|)`.
pub fn choi_matrix<M: LinearMap + ?Sized>(map: &M) -> Result<ComplexMatrix> {
    let d = map.input_dim();
    apply_to_second(map, &phi_plus(d), d, d)
}

/// `d * lambda_max` of the Choi matrix.
pub fn mu_of<M: LinearMap + ?Sized>(map: &M) -> Result<f64> {
    let d = map.input_dim() as f64;
    Ok(d * hermitian_eigenvalues(&choi_matrix(map)?)?.max())
}

/// Coefficient `mu` of the tabulated decomposition `L(X) = mu Tr(X) I - Phi(X)`.
///
/// This is the bookkeeping constant of the named family, not [`mu_of`]: for
/// Breuer-Hall it is 2 while `d lambda_max` of the Choi matrix can be smaller
/// (`sqrt 2` for the rank-2 antisymmetric `U` on `C^3`).
pub fn general_form_mu(spec: &PositiveMapSpec) -> Option<f64> {
    match spec {
        PositiveMapSpec::Reduction { .. } => Some(1.0),
        PositiveMapSpec::BreuerHall { .. } => Some(2.0),
        PositiveMapSpec::GeneralizedChoi { d, k } => Some((d - k) as f64),
        PositiveMapSpec::Custom { mu, .. } => Some(*mu),
        _ => None,
    }
}

/// The completely positive part `Phi` of the tabulated decomposition.
pub fn general_form_phi(spec: &PositiveMapSpec, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_dim(x, spec.dim())?;
    let n = x.nrows();
    match spec {
        PositiveMapSpec::Reduction { k, .. } => Ok(x * r(*k)),
        PositiveMapSpec::BreuerHall { u, .. } => {
            Ok(identity(n) * trace(x) + x + u * x.transpose() * u.adjoint())
        }
        PositiveMapSpec::GeneralizedChoi { d, k } => {
            Ok(identity(n) * (trace(x) * (d - k) as f64) - generalized_choi_apply(*d, *k, x)?)
        }
        PositiveMapSpec::Custom { kraus_plus, .. } => Ok(kraus_plus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, kk| acc + kk * x * kk.adjoint())),
        other => Err(Error::ParameterOutOfRange(format!(
            "map {} has no tabulated decomposition",
            other.name()
        ))),
    }
}

/// Positivity order of a Reduction map: it is `r`-positive exactly for `k` in `(1/(r+1), 1/r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPositivityClaim {
    pub r: usize,
    /// Exclusive lower end `1/(r+1)`.
    pub k_lo: f64,
    /// Inclusive upper end `1/r`.
    pub k_hi: f64,
}

impl RPositivityClaim {
    pub fn contains(&self, k: f64) -> bool {
        k > self.k_lo && k <= self.k_hi
    }
}

pub fn r_for_k(k: f64) -> Result<RPositivityClaim> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "k must lie in (0, 1], got {k}"
        )));
    }
    let mut r = (1.0 / k).floor() as usize;
    // 1/k can land a rounding step below an integer; the interval is closed on the right.
    if 1.0 / ((r + 1) as f64) >= k {
        r += 1;
    }
    let r = r.max(1);
    Ok(RPositivityClaim {
        r,
        k_lo: 1.0 / (r + 1) as f64,
        k_hi: 1.0 / r as f64,
    })
}

pub fn k_default_for_r(r: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::ParameterOutOfRange("r must be at least 1".into()));
    }
    Ok(1.0 / r as f64)
}

/// The antisymmetric matrix used for the tiles example.
pub fn example_breuer_hall_u() -> ComplexMatrix {
    crate::linalg::from_real_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
}
