//! State families used throughout the examples, plus a seeded sampler of
//! states with bounded Schmidt number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    basis, c, ensure_density, identity, kron_vec, projector, r, trace, ComplexMatrix,
    ComplexVector, ZERO,
};
use crate::maps::phi_plus;

pub fn max_entangled(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::ParameterOutOfRange(format!("need d >= 2, got {d}")));
    }
    Ok(phi_plus(d))
}

pub fn max_mixed(d: usize) -> ComplexMatrix {
    let n = d * d;
    identity(n) * r(1.0 / n as f64)
}

/// `p |phi+><phi+| + (1-p)/d^2 I`
///
/// Values below zero down to `-1/(d^2-1)` are still states and are accepted.
pub fn isotropic(d: usize, p: f64) -> Result<ComplexMatrix> {
    let lo = -1.0 / ((d * d) as f64 - 1.0);
    if !(p >= lo - 1e-12 && p <= 1.0 + 1e-12) {
        return Err(Error::InvalidState(format!(
            "isotropic parameter {p} outside [{lo}, 1]"
        )));
    }
    let rho = max_entangled(d)? * r(p) + max_mixed(d) * r(1.0 - p);
    ensure_density(&rho)?;
    Ok(rho)
}

/// `v |phi+><phi+| + (1-v)/d sum_i |ii><ii|`
pub fn dephased_mes(d: usize, v: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::ParameterOutOfRange(format!(
            "dephasing parameter {v} outside [0, 1]"
        )));
    }
    let mut rho = max_entangled(d)? * r(v);
    for i in 0..d {
        rho[(i * d + i, i * d + i)] += r((1.0 - v) / d as f64);
    }
    Ok(rho)
}

/// Bound entangled two-qutrit state with parameter `p > 0`.
///
/// Non-zero pattern: a `1` block on `{|00>, |11>, |22>}` and diagonal
/// weights `p` on `|01>, |12>, |20>` and `1/p` on `|02>, |10>, |21>`.
/// Normalized by its actual trace `3 (1 + p + 1/p)`.
pub fn stormer_bound(p: f64) -> Result<ComplexMatrix> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::ParameterOutOfRange(format!(
            "bound-state parameter must be positive, got {p}"
        )));
    }
    let mut m = ComplexMatrix::zeros(9, 9);
    for &i in &[0, 4, 8] {
        for &j in &[0, 4, 8] {
            m[(i, j)] = r(1.0);
        }
    }
    for (idx, w) in [(1, p), (2, 1.0 / p), (3, 1.0 / p), (5, p), (6, p), (7, 1.0 / p)] {
        m[(idx, idx)] = r(w);
    }
    let tr = trace(&m).re;
    Ok(m * r(1.0 / tr))
}

/// The five normalized product vectors of the tiles unextendible product basis.
pub fn tiles_vectors() -> [ComplexVector; 5] {
    let s = 1.0 / 2f64.sqrt();
    let e = |i| basis(3, i);
    let minus = |i: usize, j: usize| (e(i) - e(j)) * r(s);
    let uniform = ComplexVector::from_element(3, r(1.0 / 3f64.sqrt()));
    [
        kron_vec(&e(0), &minus(0, 1)),
        kron_vec(&e(2), &minus(1, 2)),
        kron_vec(&minus(0, 1), &e(2)),
        kron_vec(&minus(1, 2), &e(0)),
        kron_vec(&uniform, &uniform),
    ]
}

/// `(I_9 - sum_i |u_i><u_i|) / 4` over the tiles basis.
pub fn tiles_upb_state() -> ComplexMatrix {
    let mut rho = identity(9);
    for u in tiles_vectors() {
        rho -= projector(&u);
    }
    rho * r(0.25)
}

/// Valid range of the NPT family parameter.
pub fn npt_alpha_range() -> (f64, f64) {
    let root = 141f64.sqrt();
    ((25.0 - root) / 50.0, (25.0 + root) / 100.0)
}

/// The NPT two-qutrit family with parameter `alpha`.
pub fn npt_family(alpha: f64) -> Result<ComplexMatrix> {
    let (lo, hi) = npt_alpha_range();
    if alpha < lo - 1e-12 || alpha > hi + 1e-12 {
        return Err(Error::ParameterOutOfRange(format!(
            "alpha = {alpha} outside [{lo}, {hi}]"
        )));
    }
    Ok(npt_family_unchecked(alpha))
}

/// The NPT family matrix for any `alpha`, without range validation.
pub fn npt_family_unchecked(alpha: f64) -> ComplexMatrix {
    let off = r(-11.0 / 50.0);
    let mut m = ComplexMatrix::zeros(9, 9);
    m[(0, 0)] = r((1.0 - alpha) / 2.0);
    m[(0, 8)] = off;
    m[(8, 0)] = off;
    m[(4, 4)] = r(0.5 - alpha);
    m[(4, 5)] = off;
    m[(5, 4)] = off;
    m[(5, 5)] = r(alpha);
    m[(8, 8)] = r(alpha / 2.0);
    m
}

/// Named state families with at most one real parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    Isotropic,
    DephasedMes,
    StormerBound,
    TilesUpb,
    NptFamily,
    MaxEntangled,
    MaxMixed,
}

impl StateFamily {
    pub const ALL: [StateFamily; 7] = [
        StateFamily::Isotropic,
        StateFamily::DephasedMes,
        StateFamily::StormerBound,
        StateFamily::TilesUpb,
        StateFamily::NptFamily,
        StateFamily::MaxEntangled,
        StateFamily::MaxMixed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StateFamily::Isotropic => "isotropic",
            StateFamily::DephasedMes => "dephased_mes",
            StateFamily::StormerBound => "stormer_bound",
            StateFamily::TilesUpb => "tiles",
            StateFamily::NptFamily => "npt",
            StateFamily::MaxEntangled => "max_entangled",
            StateFamily::MaxMixed => "max_mixed",
        }
    }

    /// Families whose construction is fixed to two qutrits.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            StateFamily::StormerBound | StateFamily::TilesUpb | StateFamily::NptFamily => Some(3),
            _ => None,
        }
    }

    pub fn takes_parameter(&self) -> bool {
        matches!(
            self,
            StateFamily::Isotropic
                | StateFamily::DephasedMes
                | StateFamily::StormerBound
                | StateFamily::NptFamily
        )
    }

    /// Build the `d x d` member with the given parameter (ignored when the family has none).
    pub fn instantiate(&self, d: usize, param: f64) -> Result<ComplexMatrix> {
        if let Some(fixed) = self.fixed_dim() {
            if d != fixed {
                return Err(Error::DimensionMismatch {
                    expected: fixed,
                    actual: d,
                });
            }
        }
        match self {
            StateFamily::Isotropic => isotropic(d, param),
            StateFamily::DephasedMes => dephased_mes(d, param),
            StateFamily::StormerBound => stormer_bound(param),
            StateFamily::TilesUpb => Ok(tiles_upb_state()),
            StateFamily::NptFamily => npt_family(param),
            StateFamily::MaxEntangled => max_entangled(d),
            StateFamily::MaxMixed => Ok(max_mixed(d)),
        }
    }
}

impl std::str::FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let alias = match key.as_str() {
            "iso" => "isotropic",
            "dephased" | "dephased_mes" => "dephased_mes",
            "bound" | "stormer" | "stormer_bound" => "stormer_bound",
            "tiles" | "tiles_upb" => "tiles",
            "npt" | "npt_family" => "npt",
            "mes" | "max_entangled" => "max_entangled",
            "mixed" | "max_mixed" => "max_mixed",
            other => other,
        };
        StateFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == alias)
            .ok_or_else(|| Error::ParameterOutOfRange(format!("unknown state family {s:?}")))
    }
}

/// A mixture of pure states of Schmidt rank at most `r`, hence Schmidt number at most `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtBoundedSample {
    pub d: usize,
    pub r: usize,
    pub num_terms: usize,
    pub seed: u64,
    pub state: ComplexMatrix,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Columns form an orthonormal basis (modified Gram-Schmidt of a complex Gaussian matrix).
fn random_basis(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    loop {
        let mut q = gaussian_matrix(rng, d);
        let mut ok = true;
        for j in 0..d {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let proj = qi.dotc(&q.column(j));
                let new = q.column(j) - qi * proj;
                q.set_column(j, &new);
            }
            let norm = q.column(j).norm();
            if norm < 1e-10 {
                ok = false;
                break;
            }
            let unit = q.column(j) / r(norm);
            q.set_column(j, &unit);
        }
        if ok {
            return q;
        }
    }
}

/// Uniform point on the probability simplex with `n` vertices.
fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Random pure state on `C^d (x) C^d` with Schmidt rank at most `r`.
pub fn random_schmidt_rank_vector(rng: &mut ChaCha8Rng, d: usize, r_max: usize) -> ComplexVector {
    let coeffs = simplex_point(rng, r_max);
    let a = random_basis(rng, d);
    let b = random_basis(rng, d);
    let mut psi = ComplexVector::from_element(d * d, ZERO);
    for (i, lambda) in coeffs.iter().enumerate() {
        let term = kron_vec(&a.column(i).into_owned(), &b.column(i).into_owned());
        psi += term * r(lambda.sqrt());
    }
    let norm = psi.norm();
    psi / r(norm)
}

/// Seeded mixture of `num_terms` random pure states, each of Schmidt rank at most `r`.
///
/// The generator is ChaCha8 seeded with `seed` via `SeedableRng::seed_from_u64`;
/// mixture weights are uniform on the simplex and drawn before the pure states.
pub fn random_schmidt_bounded(
    d: usize,
    r_max: usize,
    num_terms: usize,
    seed: u64,
) -> Result<SchmidtBoundedSample> {
    if d < 1 || r_max < 1 || r_max > d {
        return Err(Error::ParameterOutOfRange(format!(
            "need 1 <= r <= d, got r={r_max}, d={d}"
        )));
    }
    if num_terms < 1 {
        return Err(Error::ParameterOutOfRange("num_terms must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = simplex_point(&mut rng, num_terms);
    let mut state = ComplexMatrix::zeros(d * d, d * d);
    for w in weights {
        let psi = random_schmidt_rank_vector(&mut rng, d, r_max);
        state += projector(&psi) * r(w);
    }
    state = crate::linalg::symmetrize(&state);
    Ok(SchmidtBoundedSample {
        d,
        r: r_max,
        num_terms,
        seed,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        hermitian_eigenvalues, partial_trace_second, partial_transpose, Subsystem,
    };
    use approx::assert_abs_diff_eq;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() <= tol)
    }

    fn rank(m: &ComplexMatrix) -> usize {
        hermitian_eigenvalues(m)
            .unwrap()
            .eigenvalues
            .iter()
            .filter(|&&x| x.abs() > 1e-10)
            .count()
    }

    #[test]
    fn max_entangled_examples() {
        let m = max_entangled(2).unwrap();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_abs_diff_eq!(m[(i, j)].re, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(m.iter().map(|z| z.norm()).sum::<f64>(), 2.0, epsilon = 1e-15);
        let m3 = max_entangled(3).unwrap();
        assert_abs_diff_eq!(trace(&m3).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace(&(&m3 * &m3)).re, 1.0, epsilon = 1e-14);
        let marg = partial_trace_second(&m3, 3, 3).unwrap();
        assert!(close(&marg, &(identity(3) * r(1.0 / 3.0)), 1e-15));
        assert!(max_entangled(1).is_err());
    }

    #[test]
    fn isotropic_examples() {
        assert!(close(&isotropic(3, 0.0).unwrap(), &max_mixed(3), 1e-15));
        assert!(close(&isotropic(3, 1.0).unwrap(), &phi_plus(3), 1e-15));
        assert!(ensure_density(&isotropic(3, 5.0 / 8.0).unwrap()).is_ok());
        assert!(isotropic(3, -1.0 / 8.0).is_ok());
        assert!(isotropic(3, -0.2).is_err());
        assert!(isotropic(3, 1.1).is_err());
    }

    #[test]
    fn dephased_examples() {
        assert!(close(&dephased_mes(3, 1.0).unwrap(), &phi_plus(3), 1e-15));
        let classical = dephased_mes(3, 0.0).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j && i % 4 == 0 { 1.0 / 3.0 } else { 0.0 };
                assert_abs_diff_eq!(classical[(i, j)].re, want, epsilon = 1e-15);
            }
        }
        assert!(ensure_density(&dephased_mes(3, 0.5).unwrap()).is_ok());
        assert!(dephased_mes(3, 1.5).is_err());
    }

    #[test]
    fn stormer_bound_is_ppt_density() {
        for p in [0.01, 0.06, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let rho = stormer_bound(p).unwrap();
            ensure_density(&rho).unwrap();
            let pt = partial_transpose(&rho, 3, 3, Subsystem::A).unwrap();
            assert!(hermitian_eigenvalues(&pt).unwrap().min() >= -1e-10, "p = {p}");
        }
        let one = stormer_bound(1.0).unwrap();
        let diag: Vec<f64> = (0..9).map(|i| one[(i, i)].re).collect();
        assert!(diag.iter().all(|&x| (x - 1.0 / 9.0).abs() < 1e-15));
        assert!(stormer_bound(0.0).is_err());
        assert!(stormer_bound(-1.0).is_err());
    }

    #[test]
    fn tiles_state_properties() {
        let us = tiles_vectors();
        for i in 0..5 {
            assert_abs_diff_eq!(us[i].norm(), 1.0, epsilon = 1e-15);
            for j in 0..i {
                assert!(us[i].dotc(&us[j]).norm() <= 1e-12);
            }
        }
        let rho = tiles_upb_state();
        ensure_density(&rho).unwrap();
        assert_eq!(rank(&rho), 4);
        for u in &us {
            assert!((u.adjoint() * &rho * u)[(0, 0)].norm() < 1e-14);
        }
        let pt = partial_transpose(&rho, 3, 3, Subsystem::A).unwrap();
        assert!(hermitian_eigenvalues(&pt).unwrap().min() >= -1e-10);
    }

    #[test]
    fn npt_family_properties() {
        let (lo, hi) = npt_alpha_range();
        assert_abs_diff_eq!(lo, 0.262513158, epsilon = 1e-8);
        for alpha in [lo, 0.3, hi] {
            let rho = npt_family(alpha).unwrap();
            ensure_density(&rho).unwrap();
            assert_abs_diff_eq!(trace(&rho).re, 1.0, epsilon = 1e-15);
        }
        let pt = partial_transpose(&npt_family(0.3).unwrap(), 3, 3, Subsystem::A).unwrap();
        assert!(hermitian_eigenvalues(&pt).unwrap().min() < -1e-6);
        assert!(npt_family(0.2).is_err());
        assert!(npt_family(0.4).is_err());
        assert_abs_diff_eq!(trace(&npt_family_unchecked(0.9)).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn family_dispatch() {
        for f in StateFamily::ALL {
            assert_eq!(f.as_str().parse::<StateFamily>().unwrap(), f);
            let param = match f {
                StateFamily::NptFamily => 0.3,
                _ => 0.5,
            };
            ensure_density(&f.instantiate(3, param).unwrap()).unwrap();
        }
        assert!(StateFamily::TilesUpb.instantiate(2, 0.0).is_err());
        assert!("nope".parse::<StateFamily>().is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        let a = random_schmidt_bounded(3, 2, 4, 42).unwrap();
        let b = random_schmidt_bounded(3, 2, 4, 42).unwrap();
        assert_eq!(a.state, b.state);
        let c = random_schmidt_bounded(3, 2, 4, 43).unwrap();
        assert_ne!(a.state, c.state);
        ensure_density(&a.state).unwrap();
        assert!(random_schmidt_bounded(3, 4, 1, 0).is_err());
        assert!(random_schmidt_bounded(3, 1, 0, 0).is_err());
    }

    #[test]
    fn sampler_pure_state_schmidt_rank() {
        // A single term is pure; its Schmidt rank is the rank of the reduced state.
        for r_max in 1..=3 {
            let s = random_schmidt_bounded(3, r_max, 1, 7 + r_max as u64).unwrap();
            assert_eq!(rank(&s.state), 1);
            let marg = partial_trace_second(&s.state, 3, 3).unwrap();
            assert_eq!(rank(&marg), r_max);
        }
    }
}
