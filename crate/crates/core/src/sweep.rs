//! Grid evaluation and threshold bisection over one-parameter families.

use serde::{Deserialize, Serialize};

use crate::channels::{channel_choi, ChannelFamily};
use crate::error::{Error, Result};
use crate::linalg::{swap_subsystems, Subsystem};
use crate::maps::{k_default_for_r, PositiveMapSpec};
use crate::moments::{
    hankel_matrix, hankel_pt_check, hankel_report, map_output_moments, p3_ppt_check, pt_moments,
    theorem1_check, theorem3_check, theorem4_like, hankel_criterion, Detector, DetectionReport,
    MomentVector, Verdict,
};
use crate::states::StateFamily;

pub const DEFAULT_BISECT_TOL: f64 = 1e-4;
/// Points checked for a single verdict change before bisecting.
pub const PRESCAN_POINTS: usize = 32;

/// What a sweep evaluates: a state family under a positive map, or a channel family.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    State {
        family: StateFamily,
        d: usize,
        map: PositiveMapSpec,
        subsystem: Subsystem,
    },
    Channel {
        family: ChannelFamily,
        d: usize,
        r: usize,
    },
}

impl Target {
    pub fn family_name(&self) -> &'static str {
        match self {
            Target::State { family, .. } => family.as_str(),
            Target::Channel { family, .. } => family.as_str(),
        }
    }

    fn accepts(&self, detector: Detector) -> bool {
        match self {
            Target::State { .. } => !detector.is_channel(),
            Target::Channel { .. } => detector.is_channel(),
        }
    }
}

/// A target together with the detectors and moment depth to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub target: Target,
    pub detectors: Vec<Detector>,
    /// Hankel order for T2, T3, T5 and the PT Hankel test.
    pub m: usize,
    pub n_max: usize,
}

impl Probe {
    pub fn new(target: Target, detectors: Vec<Detector>, m: usize, n_max: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ParameterOutOfRange("Hankel order m must be at least 1".into()));
        }
        let n_max = n_max.max(3);
        if n_max < 2 * m + 1 {
            return Err(Error::ParameterOutOfRange(format!(
                "n_max = {n_max} is below 2m+1 = {}",
                2 * m + 1
            )));
        }
        if detectors.is_empty() {
            return Err(Error::ParameterOutOfRange("no detectors selected".into()));
        }
        if let Some(bad) = detectors.iter().find(|d| !target.accepts(**d)) {
            return Err(Error::ParameterOutOfRange(format!(
                "detector {bad} does not apply to {}",
                target.family_name()
            )));
        }
        Ok(Probe {
            target,
            detectors,
            m,
            n_max,
        })
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub parameter: f64,
    /// `s_1..s_{n_max}` for states, `e_1..e_{n_max}` for channels.
    pub moments: Vec<f64>,
    pub det_h1: f64,
    pub det_h2: Option<f64>,
    pub min_eig_s: f64,
    pub reports: Vec<DetectionReport>,
}

impl ScanRow {
    pub fn verdict(&self, detector: Detector) -> Option<Verdict> {
        self.reports
            .iter()
            .find(|r| r.detector == detector)
            .map(|r| r.verdict)
    }
}

fn report_for(
    detector: Detector,
    s: &MomentVector,
    pt: Option<&MomentVector>,
    m: usize,
) -> Result<DetectionReport> {
    match detector {
        Detector::T1 => theorem1_check(s),
        Detector::T2 => hankel_criterion(s, m),
        Detector::T3 => theorem3_check(s, m),
        Detector::T4 => theorem4_like(s),
        Detector::T5 => hankel_report(s, m, Detector::T5),
        Detector::P3PPT | Detector::HankelPT => {
            let p = pt.ok_or_else(|| {
                Error::ParameterOutOfRange(format!("{detector} needs a bipartite state"))
            })?;
            if detector == Detector::P3PPT {
                p3_ppt_check(p)
            } else {
                hankel_pt_check(p, m)
            }
        }
    }
}

/// Evaluate every detector of the probe at one parameter value.
pub fn evaluate_point(probe: &Probe, parameter: f64) -> Result<ScanRow> {
    let n_max = probe.n_max;
    let (out, pt) = match &probe.target {
        Target::State {
            family,
            d,
            map,
            subsystem,
        } => {
            let rho = family.instantiate(*d, parameter)?;
            let needs_pt = probe
                .detectors
                .iter()
                .any(|x| matches!(x, Detector::P3PPT | Detector::HankelPT));
            let pt = if needs_pt {
                Some(pt_moments(&rho, *d, *d, n_max)?)
            } else {
                None
            };
            let rho = match subsystem {
                Subsystem::B => rho,
                Subsystem::A => swap_subsystems(&rho, *d, *d)?,
            };
            let source = format!("{} p={parameter}", family.as_str());
            (map_output_moments(map, &rho, *d, *d, n_max, source)?, pt)
        }
        Target::Channel { family, d, r } => {
            let ch = family.instantiate(*d, parameter)?;
            let map = PositiveMapSpec::reduction(k_default_for_r(*r)?, *d)?;
            let choi = channel_choi(&ch)?;
            let source = format!("{} p={parameter} r={r}", family.as_str());
            (map_output_moments(&map, &choi, *d, *d, n_max, source)?, None)
        }
    };
    let s = out.moments;
    let det_h1 = hankel_matrix(&s, 1)?.det();
    let det_h2 = if s.len() >= 5 {
        Some(hankel_matrix(&s, 2)?.det())
    } else {
        None
    };
    let reports = probe
        .detectors
        .iter()
        .map(|det| report_for(*det, &s, pt.as_ref(), probe.m))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanRow {
        parameter,
        moments: s.values,
        det_h1,
        det_h2,
        min_eig_s: out.spectrum.min(),
        reports,
    })
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::ParameterOutOfRange(format!("grid needs at least 2 steps, got {steps}")));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::ParameterOutOfRange(format!("bad grid bounds [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 })
        .collect())
}

/// Evaluate the probe on a grid, sequentially, in grid order.
pub fn scan(probe: &Probe, points: &[f64]) -> Result<Vec<ScanRow>> {
    points.iter().map(|&p| evaluate_point(probe, p)).collect()
}

/// Locate where `verdict` switches inside `[lo, hi]`.
///
/// The verdicts at the ends must differ and a pre-scan of
/// [`PRESCAN_POINTS`] points must show exactly one change. The returned
/// value is the midpoint of a final bracket of width at most `tol`.
pub fn bisect_onset<F>(verdict: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<bool>,
{
    if tol.is_nan() || tol <= 0.0 || lo.is_nan() || hi.is_nan() || hi <= lo {
        return Err(Error::ParameterOutOfRange(format!(
            "bad bracket [{lo}, {hi}] with tol {tol}"
        )));
    }
    let v_lo = verdict(lo)?;
    let v_hi = verdict(hi)?;
    if v_lo == v_hi {
        return Err(Error::NoSignChange {
            lo,
            hi,
            verdict: v_lo,
        });
    }
    let pts = grid(lo, hi, PRESCAN_POINTS)?;
    let verdicts = pts.iter().map(|&p| verdict(p)).collect::<Result<Vec<_>>>()?;
    let changes = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
    if changes != 1 {
        return Err(Error::NonMonotone { lo, hi, changes });
    }
    let idx = verdicts.windows(2).position(|w| w[0] != w[1]).unwrap_or(0);
    let (mut a, mut b) = (pts[idx], pts[idx + 1]);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if verdict(mid)? == v_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Onset of `detector` for the probe's target within `[lo, hi]`.
pub fn bisect_threshold(probe: &Probe, detector: Detector, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !probe.target.accepts(detector) {
        return Err(Error::ParameterOutOfRange(format!(
            "detector {detector} does not apply to {}",
            probe.target.family_name()
        )));
    }
    let single = Probe {
        detectors: vec![detector],
        ..probe.clone()
    };
    bisect_onset(
        |p| Ok(evaluate_point(&single, p)?.reports[0].detected()),
        lo,
        hi,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso_probe(detectors: Vec<Detector>) -> Probe {
        Probe::new(
            Target::State {
                family: StateFamily::Isotropic,
                d: 3,
                map: PositiveMapSpec::reduction(0.5, 3).unwrap(),
                subsystem: Subsystem::B,
            },
            detectors,
            2,
            5,
        )
        .unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(0.0, 1.0, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert!((g[50] - 0.5).abs() < 1e-15);
        assert!(grid(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn bisect_step_function() {
        let t = bisect_onset(|x| Ok(x > 0.3), 0.0, 1.0, 1e-6).unwrap();
        assert!((t - 0.3).abs() < 1e-6);
        assert!(matches!(
            bisect_onset(|_| Ok(true), 0.0, 1.0, 1e-4),
            Err(Error::NoSignChange { .. })
        ));
        assert!(matches!(
            bisect_onset(|x| Ok(x > 0.2 && x < 0.5 || x > 0.9), 0.0, 1.0, 1e-4),
            Err(Error::NonMonotone { .. })
        ));
    }

    #[test]
    fn isotropic_onset() {
        let probe = iso_probe(vec![Detector::T1]);
        let t = bisect_threshold(&probe, Detector::T1, 0.0, 1.0, DEFAULT_BISECT_TOL).unwrap();
        assert!((t - 0.625).abs() < 1e-4, "{t}");
    }

    #[test]
    fn rows_carry_requested_verdicts() {
        let probe = iso_probe(vec![Detector::T1, Detector::T2, Detector::P3PPT]);
        let row = evaluate_point(&probe, 1.0).unwrap();
        assert_eq!(row.moments.len(), 5);
        assert!(row.det_h2.is_some());
        assert_eq!(row.verdict(Detector::T1), Some(Verdict::Detected));
        assert_eq!(row.verdict(Detector::P3PPT), Some(Verdict::Detected));
        assert!(row.min_eig_s < 0.0);
    }

    #[test]
    fn probe_validation() {
        let target = Target::Channel {
            family: ChannelFamily::Depolarizing,
            d: 3,
            r: 1,
        };
        assert!(Probe::new(target.clone(), vec![Detector::T1], 1, 3).is_err());
        assert!(Probe::new(target.clone(), vec![Detector::T5], 2, 3).is_err());
        assert!(Probe::new(target, vec![Detector::T4], 1, 3).is_ok());
    }
}
