//! Map-output moments, Hankel matrices and the moment-based detectors.
//!
//! For a positive map `L` and a bipartite state `rho`, the normalized output
//! `S = (id (x) L)(rho) / Tr[(id (x) L)(rho)]` has moments `s_n = Tr S^n`.
//! When `L` keeps every state of a given class positive, `S` is a unit-trace
//! PSD operator and its moments obey `s_2^2 <= s_3` and `H_m(s) >= 0`, with
//! `H_m(s)_{ij} = s_{i+j+1}`. A violation certifies that `rho` is outside the
//! class.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_to_second, ensure_density, hermitian_eigenvalues, partial_transpose, r, real_det,
    real_symmetric_min_eig, swap_subsystems, symmetrize, trace, ComplexMatrix, LinearMap,
    Spectrum, Subsystem,
};
use crate::maps::PositiveMapSpec;

/// Margin for `s_2^2 - s_3 > tol` (and the channel analogue).
pub const T1_TOL: f64 = 1e-10;
/// Margin for `det H_m < -tol`.
pub const HANKEL_TOL: f64 = 1e-12;
/// Margin for `p_2^2 - p_3 p_1 > tol`.
pub const P3_TOL: f64 = 1e-10;
/// Below this the output trace is treated as zero.
pub const NORMALIZATION_FLOOR: f64 = 1e-9;
/// Moment depth that covers `H_2`.
pub const DEFAULT_N_MAX: usize = 5;

/// `(s_1, ..., s_{n_max})` together with a description of where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
    pub source: String,
}

impl MomentVector {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Self {
        Self {
            values,
            source: source.into(),
        }
    }

    /// The `n`-th moment, 1-based.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.values.len() < needed {
            return Err(Error::InsufficientMoments {
                needed,
                available: self.values.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    /// `s_2^2 > s_3` with an r-positive Reduction map: Schmidt number above `r`.
    T1,
    /// `det H_m < 0` with an r-positive Reduction map: Schmidt number above `r`.
    T2,
    /// `det H_m < 0` with any positive map: entangled.
    T3,
    /// `e_2^2 > e_3` on channel moments: not r-Schmidt-number-breaking.
    T4,
    /// `det H_m(e) < 0` on channel moments: not r-Schmidt-number-breaking.
    T5,
    /// `p_2^2 > p_3 p_1` on partial-transpose moments: NPT.
    P3PPT,
    /// `det H_m(p) < 0` on partial-transpose moments: NPT.
    HankelPT,
}

impl Detector {
    pub const ALL: [Detector; 7] = [
        Detector::T1,
        Detector::T2,
        Detector::T3,
        Detector::T4,
        Detector::T5,
        Detector::P3PPT,
        Detector::HankelPT,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Detector::T1 => "T1",
            Detector::T2 => "T2",
            Detector::T3 => "T3",
            Detector::T4 => "T4",
            Detector::T5 => "T5",
            Detector::P3PPT => "P3PPT",
            Detector::HankelPT => "HankelPT",
        }
    }

    /// Whether the detector runs on channel moments rather than state moments.
    pub fn is_channel(&self) -> bool {
        matches!(self, Detector::T4 | Detector::T5)
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .iter()
            .copied()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::ParameterOutOfRange(format!("unknown detector {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Detected,
    NotDetected,
}

impl Verdict {
    pub fn from_bool(detected: bool) -> Self {
        if detected {
            Verdict::Detected
        } else {
            Verdict::NotDetected
        }
    }

    pub fn is_detected(&self) -> bool {
        matches!(self, Verdict::Detected)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Detected => "detected",
            Verdict::NotDetected => "not_detected",
        }
    }
}

/// Outcome of one detector, with the raw numbers it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detector: Detector,
    pub scalars: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
}

impl DetectionReport {
    pub fn detected(&self) -> bool {
        self.verdict.is_detected()
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }
}

/// `H_m` with entries `s_{i+j+1}`, `i, j = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    pub m: usize,
    pub entries: DMatrix<f64>,
}

impl HankelMatrix {
    pub fn det(&self) -> f64 {
        real_det(&self.entries)
    }

    pub fn min_eig(&self) -> f64 {
        real_symmetric_min_eig(&self.entries)
    }
}

/// `(id_A (x) map)(rho)` normalized to unit trace.
///
/// The map acts on subsystem B. `rho` must be a density matrix; the output is
/// Hermitian with unit trace but is not PSD in general.
pub fn normalized_output<M: LinearMap + ?Sized>(
    map: &M,
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
) -> Result<ComplexMatrix> {
    ensure_density(rho)?;
    let out = apply_to_second(map, rho, da, db)?;
    let tr = trace(&out).re;
    if tr.abs() < NORMALIZATION_FLOOR {
        return Err(Error::DegenerateNormalization(tr));
    }
    Ok(symmetrize(&(out * r(1.0 / tr))))
}

/// Same as [`normalized_output`], with the map on the chosen subsystem.
pub fn normalized_output_on<M: LinearMap + ?Sized>(
    map: &M,
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
    subsystem: Subsystem,
) -> Result<ComplexMatrix> {
    match subsystem {
        Subsystem::B => normalized_output(map, rho, da, db),
        Subsystem::A => normalized_output(map, &swap_subsystems(rho, da, db)?, db, da),
    }
}

/// Moments and spectrum of the normalized output.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMoments {
    pub moments: MomentVector,
    pub spectrum: Spectrum,
}

pub fn map_output_moments<M: LinearMap + ?Sized>(
    map: &M,
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
    n_max: usize,
    source: impl Into<String>,
) -> Result<OutputMoments> {
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange("n_max must be at least 1".into()));
    }
    let s = normalized_output(map, rho, da, db)?;
    let spectrum = hermitian_eigenvalues(&s)?;
    let values = spectrum.power_sums(n_max);
    Ok(OutputMoments {
        moments: MomentVector::new(values, source),
        spectrum,
    })
}

/// `s_n = Tr S^n` for `n = 1..=n_max`.
pub fn map_moments(
    map: &PositiveMapSpec,
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
    n_max: usize,
) -> Result<MomentVector> {
    let source = format!("map={} on {}x{} state", map.name(), da, db);
    Ok(map_output_moments(map, rho, da, db, n_max, source)?.moments)
}

fn second_third(s: &MomentVector) -> Result<(f64, f64)> {
    s.require(3)?;
    Ok((s.values[1], s.values[2]))
}

fn power_gap_report(s: &MomentVector, detector: Detector, prefix: &str) -> Result<DetectionReport> {
    let (s2, s3) = second_third(s)?;
    let gap = s2 * s2 - s3;
    let mut scalars = BTreeMap::new();
    scalars.insert(format!("{prefix}2"), s2);
    scalars.insert(format!("{prefix}3"), s3);
    scalars.insert(format!("{prefix}2_sq_minus_{prefix}3"), gap);
    Ok(DetectionReport {
        detector,
        scalars,
        verdict: Verdict::from_bool(gap > T1_TOL),
        tolerance: T1_TOL,
    })
}

/// Fires when `s_2^2 - s_3 > 1e-10`.
pub fn theorem1_check(s: &MomentVector) -> Result<DetectionReport> {
    power_gap_report(s, Detector::T1, "s")
}

pub(crate) fn theorem4_like(s: &MomentVector) -> Result<DetectionReport> {
    power_gap_report(s, Detector::T4, "e")
}

pub fn hankel_matrix(s: &MomentVector, m: usize) -> Result<HankelMatrix> {
    s.require(2 * m + 1)?;
    let entries = DMatrix::from_fn(m + 1, m + 1, |i, j| s.values[i + j]);
    Ok(HankelMatrix { m, entries })
}

pub(crate) fn hankel_report(
    s: &MomentVector,
    m: usize,
    detector: Detector,
) -> Result<DetectionReport> {
    let h = hankel_matrix(s, m)?;
    let det = h.det();
    let mut scalars = BTreeMap::new();
    scalars.insert(format!("det_h{m}"), det);
    scalars.insert(format!("min_eig_h{m}"), h.min_eig());
    Ok(DetectionReport {
        detector,
        scalars,
        verdict: Verdict::from_bool(det < -HANKEL_TOL),
        tolerance: HANKEL_TOL,
    })
}

/// Fires when `det H_m(s) < -1e-12`; reported as the Reduction-map Schmidt-number test.
pub fn hankel_criterion(s: &MomentVector, m: usize) -> Result<DetectionReport> {
    hankel_report(s, m, Detector::T2)
}

/// The same determinant test, reported as the entanglement test for an arbitrary positive map.
pub fn theorem3_check(s: &MomentVector, m: usize) -> Result<DetectionReport> {
    hankel_report(s, m, Detector::T3)
}

/// `p_n = Tr[(rho^{T_A})^n]`.
pub fn pt_moments(rho: &ComplexMatrix, da: usize, db: usize, n_max: usize) -> Result<MomentVector> {
    ensure_density(rho)?;
    let pt = partial_transpose(rho, da, db, Subsystem::A)?;
    let values = crate::linalg::trace_powers(&pt, n_max)?;
    Ok(MomentVector::new(values, format!("partial transpose of {da}x{db} state")))
}

/// Fires when `p_2^2 - p_3 p_1 > 1e-10`.
pub fn p3_ppt_check(p: &MomentVector) -> Result<DetectionReport> {
    p.require(3)?;
    let (p1, p2, p3) = (p.values[0], p.values[1], p.values[2]);
    let gap = p2 * p2 - p3 * p1;
    let mut scalars = BTreeMap::new();
    scalars.insert("p1".into(), p1);
    scalars.insert("p2".into(), p2);
    scalars.insert("p3".into(), p3);
    scalars.insert("p2_sq_minus_p3_p1".into(), gap);
    Ok(DetectionReport {
        detector: Detector::P3PPT,
        scalars,
        verdict: Verdict::from_bool(gap > P3_TOL),
        tolerance: P3_TOL,
    })
}

/// Hankel determinant test on partial-transpose moments.
pub fn hankel_pt_check(p: &MomentVector, m: usize) -> Result<DetectionReport> {
    hankel_report(p, m, Detector::HankelPT)
}

/// A certified lower bound on the Schmidt number of a `d x d` state.
///
/// For each `r = 1..d-1` the Reduction map with `k = 1/r` is tried with the
/// power-gap test and the order-`m` Hankel test. Returns `1 + max r` over the
/// values where either fires, or 1 if none does.
pub fn schmidt_number_lower_bound(
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
    m: usize,
) -> Result<usize> {
    if da != db {
        return Err(Error::DimensionMismatch {
            expected: da,
            actual: db,
        });
    }
    let d = da;
    let n_max = (2 * m + 1).max(3);
    let mut bound = 1;
    for r in 1..d {
        let map = PositiveMapSpec::reduction_for_r(r, d)?;
        let s = map_moments(&map, rho, d, d, n_max)?;
        if theorem1_check(&s)?.detected() || hankel_criterion(&s, m)?.detected() {
            bound = r + 1;
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, identity, kron};
    use crate::maps::phi_plus;
    use approx::assert_abs_diff_eq;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector::new(v.to_vec(), "test")
    }

    #[test]
    fn maximally_mixed_under_reduction() {
        let map = PositiveMapSpec::reduction(0.5, 3).unwrap();
        let rho = identity(9) * r(1.0 / 9.0);
        let s = normalized_output(&map, &rho, 3, 3).unwrap();
        assert!((s - &rho).iter().all(|z| z.norm() < 1e-15));
        let m = map_moments(&map, &rho, 3, 3, 5).unwrap();
        for (n, v) in m.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, (1.0f64 / 9.0).powi(n as i32), epsilon = 1e-14);
        }
        let t1 = theorem1_check(&m).unwrap();
        assert!(!t1.detected());
        assert!(t1.scalar("s2_sq_minus_s3").unwrap().abs() < 1e-15);
    }

    #[test]
    fn phi_plus_under_half_reduction() {
        let map = PositiveMapSpec::reduction(0.5, 3).unwrap();
        let s = normalized_output(&map, &phi_plus(3), 3, 3).unwrap();
        let spec = hermitian_eigenvalues(&s).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], -1.0 / 15.0, epsilon = 1e-12);
        for v in &spec.eigenvalues[1..] {
            assert_abs_diff_eq!(*v, 2.0 / 15.0, epsilon = 1e-12);
        }
        let m = map_moments(&map, &phi_plus(3), 3, 3, 5).unwrap();
        assert_abs_diff_eq!(m.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.values[1], 11.0 / 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.values[2], 7.0 / 375.0, epsilon = 1e-12);
        let t1 = theorem1_check(&m).unwrap();
        assert!(t1.detected());
        assert_abs_diff_eq!(t1.scalar("s2").unwrap().powi(2), 0.021511, epsilon = 1e-6);
        assert_abs_diff_eq!(t1.scalar("s3").unwrap(), 0.018667, epsilon = 1e-6);
    }

    #[test]
    fn identity_map_on_pure_state() {
        let map = PositiveMapSpec::identity(3).unwrap();
        let rho = phi_plus(3);
        let s = normalized_output(&map, &rho, 3, 3).unwrap();
        assert!((s - &rho).iter().all(|z| z.norm() < 1e-15));
        for v in map_moments(&map, &rho, 3, 3, 6).unwrap().values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_normalization() {
        // Tr_B of the output of Tr(X) I - 2X on a 2-dim factor vanishes.
        let map = PositiveMapSpec::reduction(2.0, 2).unwrap();
        let rho = identity(4) * r(0.25);
        assert!(matches!(
            normalized_output(&map, &rho, 2, 2),
            Err(Error::DegenerateNormalization(_))
        ));
    }

    #[test]
    fn invalid_state_rejected() {
        let map = PositiveMapSpec::identity(2).unwrap();
        let bad = diag_real(&[1.5, -0.5, 0.0, 0.0]);
        assert!(matches!(
            normalized_output(&map, &bad, 2, 2),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn hankel_examples() {
        let s = mv(&[1.0, 0.2, 0.06]);
        let h = hankel_matrix(&s, 1).unwrap();
        assert_abs_diff_eq!(h.det(), 0.02, epsilon = 1e-15);
        let rep = hankel_criterion(&s, 1).unwrap();
        assert!(!rep.detected());
        assert_eq!(rep.detector, Detector::T2);
        assert!(matches!(
            hankel_matrix(&s, 2),
            Err(Error::InsufficientMoments { needed: 5, available: 3 })
        ));
        let h2 = hankel_matrix(&mv(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2).unwrap();
        assert_eq!(h2.entries[(0, 2)], 3.0);
        assert_eq!(h2.entries[(2, 2)], 5.0);
        assert_eq!(h2.entries, h2.entries.transpose());
    }

    #[test]
    fn det_h1_is_the_power_gap() {
        let s = mv(&[1.0, 0.3, 0.05]);
        let det = hankel_matrix(&s, 1).unwrap().det();
        assert!((det - (0.05 - 0.09)).abs() < 1e-12);
    }

    #[test]
    fn pt_moments_phi_plus() {
        let p = pt_moments(&phi_plus(2), 2, 2, 3).unwrap();
        assert_abs_diff_eq!(p.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.values[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.values[2], 0.25, epsilon = 1e-12);
        let rep = p3_ppt_check(&p).unwrap();
        assert!(rep.detected());
        assert_abs_diff_eq!(rep.scalar("p2_sq_minus_p3_p1").unwrap(), 0.75, epsilon = 1e-10);
    }

    #[test]
    fn pt_moments_product_state() {
        let a = diag_real(&[1.0, 0.0]);
        let b = diag_real(&[0.0, 1.0, 0.0]);
        let p = pt_moments(&kron(&a, &b), 2, 3, 5).unwrap();
        for v in &p.values {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        assert!(!p3_ppt_check(&p).unwrap().detected());
        assert!(!hankel_pt_check(&p, 2).unwrap().detected());
    }

    #[test]
    fn subsystem_a_uses_swapped_state() {
        let map = PositiveMapSpec::transpose(2).unwrap();
        let rho = phi_plus(2);
        let a = normalized_output_on(&map, &rho, 2, 2, Subsystem::A).unwrap();
        let b = normalized_output_on(&map, &rho, 2, 2, Subsystem::B).unwrap();
        // phi+ is swap symmetric
        assert!((a - b).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn detector_parse_roundtrip() {
        for d in Detector::ALL {
            assert_eq!(d.as_str().parse::<Detector>().unwrap(), d);
        }
        assert!("T9".parse::<Detector>().is_err());
    }
}
