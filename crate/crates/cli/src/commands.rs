use std::collections::BTreeMap;

use posmap_core::channels::{channel_choi, channel_moments, snbc_threshold, theorem4_check, theorem5_check};
use posmap_core::discrimination::{discrimination_witness, end_to_end_advantage};
use posmap_core::linalg::swap_subsystems;
use posmap_core::moments::{
    hankel_criterion, hankel_matrix, hankel_pt_check, map_output_moments, p3_ppt_check,
    pt_moments, schmidt_number_lower_bound, theorem1_check, theorem3_check,
};
use posmap_core::sweep::{bisect_threshold, evaluate_point, grid, Probe, Target};
use posmap_core::{
    ChannelFamily, DetectionReport, Detector, PositiveMapSpec, ScanRow, StateFamily, Subsystem,
    WitnessReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{rows_from_matrix, Command, Format, Job, MapDesc, DEFAULT_BRACKET};
use crate::error::CliError;
use crate::output::{scan_csv, sig12, to_json};

const STATE_DEFAULT: [Detector; 3] = [Detector::T1, Detector::T2, Detector::P3PPT];
const CHANNEL_DEFAULT: [Detector; 2] = [Detector::T4, Detector::T5];

/// Run a job and return the rendered output.
pub fn run(job: &Job) -> Result<String, CliError> {
    match job.command {
        Command::EvalState => eval_state(job),
        Command::ScanState => scan_state(job),
        Command::EvalChannel => eval_channel(job),
        Command::ScanChannel => scan_channel(job),
        Command::Discriminate => discriminate(job),
        Command::Thresholds => thresholds(job),
    }
}

fn detectors_for(job: &Job, channel: bool) -> Result<Vec<Detector>, CliError> {
    let list = match &job.detectors {
        Some(list) if !list.is_empty() => list.clone(),
        _ if channel => CHANNEL_DEFAULT.to_vec(),
        _ => STATE_DEFAULT.to_vec(),
    };
    if let Some(bad) = list.iter().find(|d| d.is_channel() != channel) {
        return Err(CliError::Config(format!(
            "detector {bad} does not apply to {}",
            if channel { "channels" } else { "states" }
        )));
    }
    Ok(list)
}

/// Descriptor of the map that was actually applied.
fn describe(spec: &PositiveMapSpec) -> Result<MapDesc, CliError> {
    Ok(match spec {
        PositiveMapSpec::Reduction { k, .. } => MapDesc::Reduction {
            k: Some(*k),
            r: None,
        },
        PositiveMapSpec::BreuerHall { u, .. } => MapDesc::BreuerHall {
            u: Some(rows_from_matrix(u)),
        },
        PositiveMapSpec::GeneralizedChoi { d, k } => MapDesc::GenChoi {
            d: Some(*d),
            kk: *k,
        },
        PositiveMapSpec::Transpose { .. } => MapDesc::Transpose,
        PositiveMapSpec::Identity { .. } => MapDesc::Identity,
        other => {
            return Err(CliError::Config(format!(
                "map {} cannot be selected from the command line",
                other.name()
            )))
        }
    })
}

#[derive(Serialize)]
struct StateReport {
    command: &'static str,
    target: String,
    dim_a: usize,
    dim_b: usize,
    map: MapDesc,
    subsystem: Subsystem,
    moments: Vec<f64>,
    det_h: BTreeMap<String, f64>,
    min_eig_s: f64,
    reports: Vec<DetectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schmidt_number_lower_bound: Option<usize>,
}

fn hankel_dets(values: &[f64], m_max: usize) -> Result<BTreeMap<String, f64>, CliError> {
    let s = posmap_core::MomentVector::new(values.to_vec(), "");
    let mut out = BTreeMap::new();
    for m in 1..=m_max {
        if values.len() > 2 * m {
            out.insert(format!("H{m}"), hankel_matrix(&s, m)?.det());
        }
    }
    Ok(out)
}

fn eval_state(job: &Job) -> Result<String, CliError> {
    let (rho, da, db, label) = job.state()?;
    let detectors = detectors_for(job, false)?;
    let (rho_m, da_m, db_m) = match job.subsystem {
        Subsystem::B => (rho.clone(), da, db),
        Subsystem::A => (swap_subsystems(&rho, da, db)?, db, da),
    };
    let map = job.map_spec(db_m)?;
    let out = map_output_moments(&map, &rho_m, da_m, db_m, job.n_max, label.clone())?;
    let s = &out.moments;
    let needs_pt = detectors
        .iter()
        .any(|d| matches!(d, Detector::P3PPT | Detector::HankelPT));
    let p = if needs_pt {
        Some(pt_moments(&rho, da, db, job.n_max)?)
    } else {
        None
    };
    let mut reports = Vec::new();
    for det in &detectors {
        reports.push(match det {
            Detector::T1 => theorem1_check(s)?,
            Detector::T2 => hankel_criterion(s, job.m)?,
            Detector::T3 => theorem3_check(s, job.m)?,
            Detector::P3PPT => p3_ppt_check(p.as_ref().expect("pt moments"))?,
            Detector::HankelPT => hankel_pt_check(p.as_ref().expect("pt moments"), job.m)?,
            Detector::T4 | Detector::T5 => unreachable!("filtered by detectors_for"),
        });
    }
    let bound = if map.is_reduction() && da == db && da >= 2 {
        Some(schmidt_number_lower_bound(&rho, da, db, job.m)?)
    } else {
        None
    };
    let report = StateReport {
        command: "eval-state",
        target: label,
        dim_a: da,
        dim_b: db,
        map: describe(&map)?,
        subsystem: job.subsystem,
        det_h: hankel_dets(&s.values, job.m.max(2))?,
        moments: s.values.clone(),
        min_eig_s: out.spectrum.min(),
        reports,
        schmidt_number_lower_bound: bound,
    };
    render_report(job, &report, || {
        let mut csv = String::from("name,value\n");
        for (i, v) in report.moments.iter().enumerate() {
            csv.push_str(&format!("s{},{}\n", i + 1, sig12(*v)));
        }
        for (k, v) in &report.det_h {
            csv.push_str(&format!("det{k},{}\n", sig12(*v)));
        }
        csv.push_str(&format!("min_eig_S,{}\n", sig12(report.min_eig_s)));
        for r in &report.reports {
            csv.push_str(&format!("{},{}\n", r.detector, r.verdict.as_str()));
        }
        csv
    })
}

fn render_report<T: Serialize>(
    job: &Job,
    report: &T,
    csv: impl FnOnce() -> String,
) -> Result<String, CliError> {
    match job.format {
        Format::Json => to_json(report),
        Format::Csv => Ok(csv()),
    }
}

#[derive(Serialize)]
struct ScanReport<'a> {
    command: &'static str,
    family: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<MapDesc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    detectors: Vec<Detector>,
    rows: Vec<ScanRow>,
}

fn run_scan(probe: &Probe, job: &Job) -> Result<Vec<ScanRow>, CliError> {
    let g = job.grid.expect("validated");
    let points = grid(g.start, g.stop, g.steps)?;
    // Collecting an indexed parallel iterator keeps grid order.
    let rows = points
        .par_iter()
        .map(|&p| evaluate_point(probe, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

fn scan_state(job: &Job) -> Result<String, CliError> {
    let family = job.state_family()?;
    let d = family.fixed_dim().unwrap_or(job.d());
    let detectors = detectors_for(job, false)?;
    let map = job.map_spec(d)?;
    let desc = describe(&map)?;
    let target = Target::State {
        family,
        d,
        map,
        subsystem: job.subsystem,
    };
    let probe = Probe::new(target, detectors.clone(), job.m, job.n_max)?;
    let rows = run_scan(&probe, job)?;
    match job.format {
        Format::Csv => Ok(scan_csv(&rows, &detectors, "s")),
        Format::Json => to_json(&ScanReport {
            command: "scan-state",
            family: family.as_str(),
            map: Some(desc),
            r: None,
            detectors,
            rows,
        }),
    }
}

#[derive(Serialize)]
struct ChannelReport {
    command: &'static str,
    target: String,
    r: usize,
    k: f64,
    moments: Vec<f64>,
    det_h: BTreeMap<String, f64>,
    min_eig_s: f64,
    reports: Vec<DetectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snbc_threshold: Option<f64>,
}

fn eval_channel(job: &Job) -> Result<String, CliError> {
    let (ch, family, label) = job.channel()?;
    let detectors = detectors_for(job, true)?;
    let r = job.r_order();
    let e = channel_moments(&ch, r, job.n_max)?;
    let d = ch.d_in();
    let map = PositiveMapSpec::reduction(e.k, d)?;
    let out = map_output_moments(&map, &channel_choi(&ch)?, d, d, job.n_max, label.clone())?;
    let mut reports = Vec::new();
    for det in &detectors {
        reports.push(match det {
            Detector::T4 => theorem4_check(&e)?,
            Detector::T5 => theorem5_check(&e, job.m)?,
            _ => unreachable!("filtered by detectors_for"),
        });
    }
    let threshold = family.map(|f| snbc_threshold(f, d, r)).transpose()?;
    let report = ChannelReport {
        command: "eval-channel",
        target: label,
        r,
        k: e.k,
        det_h: hankel_dets(&e.values, job.m.max(2))?,
        moments: e.values,
        min_eig_s: out.spectrum.min(),
        reports,
        snbc_threshold: threshold,
    };
    render_report(job, &report, || {
        let mut csv = String::from("name,value\n");
        for (i, v) in report.moments.iter().enumerate() {
            csv.push_str(&format!("e{},{}\n", i + 1, sig12(*v)));
        }
        for (k, v) in &report.det_h {
            csv.push_str(&format!("det{k},{}\n", sig12(*v)));
        }
        csv.push_str(&format!("min_eig_S,{}\n", sig12(report.min_eig_s)));
        for r in &report.reports {
            csv.push_str(&format!("{},{}\n", r.detector, r.verdict.as_str()));
        }
        csv
    })
}

fn scan_channel(job: &Job) -> Result<String, CliError> {
    let family = job.channel_family()?;
    let detectors = detectors_for(job, true)?;
    let r = job.r_order();
    let target = Target::Channel {
        family,
        d: job.d(),
        r,
    };
    let probe = Probe::new(target, detectors.clone(), job.m, job.n_max)?;
    let rows = run_scan(&probe, job)?;
    match job.format {
        Format::Csv => Ok(scan_csv(&rows, &detectors, "e")),
        Format::Json => to_json(&ScanReport {
            command: "scan-channel",
            family: family.as_str(),
            map: None,
            r: Some(r),
            detectors,
            rows,
        }),
    }
}

#[derive(Serialize)]
struct DiscriminationReport {
    command: &'static str,
    target: String,
    witness: WitnessReport,
    /// `1/2 ||(id (x) S_1)(rho) - (id (x) S_2)(rho)||_1`
    end_to_end_advantage: f64,
    /// Best value reachable with Schmidt number at most `r`.
    schmidt_bounded_reference: f64,
}

fn discriminate(job: &Job) -> Result<String, CliError> {
    let (rho, da, _, label) = job.state()?;
    let r = job.r_order();
    let witness = discrimination_witness(&rho, da, r)?;
    let e2e = end_to_end_advantage(&rho, da, r)?;
    let report = DiscriminationReport {
        command: "discriminate",
        target: label,
        schmidt_bounded_reference: witness.k_scale,
        witness,
        end_to_end_advantage: e2e,
    };
    render_report(job, &report, || {
        format!(
            "name,value\nW,{}\nadvantage,{}\nk_scale,{}\nend_to_end,{}\nverdict,{}\n",
            sig12(report.witness.trace_norm_value),
            sig12(report.witness.advantage),
            sig12(report.witness.k_scale),
            sig12(report.end_to_end_advantage),
            if report.witness.has_advantage() { "advantage" } else { "no_advantage" }
        )
    })
}

#[derive(Serialize)]
struct ThresholdReport {
    command: &'static str,
    family: &'static str,
    detector: Detector,
    r: usize,
    lo: f64,
    hi: f64,
    tol: f64,
    onset: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
}

/// A channel family with a state detector is evaluated on its Choi state,
/// which is the same as the matching channel detector.
fn channel_alias(det: Detector) -> Detector {
    match det {
        Detector::T1 => Detector::T4,
        Detector::T2 | Detector::T3 => Detector::T5,
        other => other,
    }
}

fn thresholds(job: &Job) -> Result<String, CliError> {
    let name = job.family_name()?;
    let (lo, hi) = job
        .grid
        .map(|g| (g.start, g.stop))
        .unwrap_or(DEFAULT_BRACKET);
    let requested = job.detectors.as_ref().and_then(|d| d.first().copied());
    let r = job.r_order();
    let (probe, detector, family, exact) = if let Ok(family) = name.parse::<StateFamily>() {
        let detector = requested.unwrap_or(Detector::T1);
        let d = family.fixed_dim().unwrap_or(job.d());
        let target = Target::State {
            family,
            d,
            map: job.map_spec(d)?,
            subsystem: job.subsystem,
        };
        let probe = Probe::new(target, vec![detector], job.m, job.n_max)?;
        (probe, detector, family.as_str(), None)
    } else {
        let family: ChannelFamily = name.parse()?;
        let detector = channel_alias(requested.unwrap_or(Detector::T4));
        let target = Target::Channel {
            family,
            d: job.d(),
            r,
        };
        let probe = Probe::new(target, vec![detector], job.m, job.n_max)?;
        let exact = snbc_threshold(family, job.d(), r)?;
        (probe, detector, family.as_str(), Some(exact))
    };
    let onset = bisect_threshold(&probe, detector, lo, hi, job.tol)?;
    let report = ThresholdReport {
        command: "thresholds",
        family,
        detector,
        r,
        lo,
        hi,
        tol: job.tol,
        onset,
        exact,
    };
    render_report(job, &report, || {
        format!(
            "family,detector,r,lo,hi,tol,onset\n{},{},{},{},{},{},{}\n",
            report.family,
            report.detector,
            report.r,
            sig12(lo),
            sig12(hi),
            sig12(report.tol),
            sig12(onset)
        )
    })
}
