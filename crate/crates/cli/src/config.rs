//! Job configuration: JSON file plus inline flag overrides, resolved into concrete inputs.

use std::path::{Path, PathBuf};

use posmap_core::linalg::{c, ComplexMatrix};
use posmap_core::maps::{example_breuer_hall_u, k_default_for_r};
use posmap_core::moments::DEFAULT_N_MAX;
use posmap_core::states::random_schmidt_bounded;
use posmap_core::{
    ChannelFamily, ChannelSpec, Detector, PositiveMapSpec, StateFamily, Subsystem,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    EvalState,
    ScanState,
    EvalChannel,
    ScanChannel,
    Discriminate,
    Thresholds,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::EvalState => "eval-state",
            Command::ScanState => "scan-state",
            Command::EvalChannel => "eval-channel",
            Command::ScanChannel => "scan-channel",
            Command::Discriminate => "discriminate",
            Command::Thresholds => "thresholds",
        }
    }

    pub fn is_scan(&self) -> bool {
        matches!(self, Command::ScanState | Command::ScanChannel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown output format {s:?}"))),
        }
    }
}

/// `[re, im]`
pub type JsonComplex = [f64; 2];
pub type JsonRows = Vec<Vec<JsonComplex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityJson {
    pub dim_a: usize,
    pub dim_b: usize,
    pub rows: JsonRows,
}

pub fn matrix_from_rows(rows: &JsonRows) -> Result<ComplexMatrix, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Config("matrix rows must be non-empty and of equal length".into()));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn rows_from_matrix(m: &ComplexMatrix) -> JsonRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDesc {
    Reduction {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<usize>,
    },
    BreuerHall {
        #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
        u: Option<JsonRows>,
    },
    GenChoi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        kk: usize,
    },
    Choi,
    Transpose,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelDesc {
    Depolarizing { d: usize, p: f64 },
    Dephasing { d: usize, v: f64 },
    Kraus { ops: Vec<JsonRows> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDesc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelDesc>,
    /// Schmidt rank bound for the `random_schmidt` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDesc {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl std::str::FromStr for GridDesc {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("grid must look like lo:hi:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(GridDesc {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDesc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// A job as read from `--config`, before flags are merged in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub target: TargetDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detectors: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<Subsystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: OutputDesc,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

pub const DEFAULT_D: usize = 3;
pub const DEFAULT_M: usize = 2;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Pure endpoints make `H_2` singular, so the default bracket stops just short of 1.
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 0.99);

/// A fully merged and validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub command: Command,
    pub target: TargetDesc,
    pub map: Option<MapDesc>,
    pub detectors: Option<Vec<Detector>>,
    pub grid: Option<GridDesc>,
    pub n_max: usize,
    pub m: usize,
    pub r: Option<usize>,
    pub seed: u64,
    pub subsystem: Subsystem,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Job {
    pub fn from_config(cfg: JobConfig) -> Result<Self, CliError> {
        let command = cfg
            .command
            .ok_or_else(|| CliError::Config("no command given".into()))?;
        let m = cfg.m.unwrap_or(DEFAULT_M);
        if m == 0 {
            return Err(CliError::Config("m must be at least 1".into()));
        }
        let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX.max(2 * m + 1));
        if n_max < 2 * m + 1 {
            return Err(CliError::Config(format!(
                "n_max = {n_max} must be at least 2m+1 = {}",
                2 * m + 1
            )));
        }
        if let Some(g) = &cfg.grid {
            if command.is_scan() && g.steps < 2 {
                return Err(CliError::Config("grid steps must be at least 2".into()));
            }
        } else if command.is_scan() {
            return Err(CliError::Config(format!("{} needs a grid", command.as_str())));
        }
        let detectors = cfg
            .detectors
            .map(|names| {
                names
                    .iter()
                    .map(|n| n.trim().parse::<Detector>().map_err(CliError::from))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
        if tol.is_nan() || tol <= 0.0 {
            return Err(CliError::Config(format!("tol must be positive, got {tol}")));
        }
        let format = cfg.output.format.unwrap_or(if command.is_scan() {
            Format::Csv
        } else {
            Format::Json
        });
        Ok(Job {
            command,
            target: cfg.target,
            map: cfg.map,
            detectors,
            grid: cfg.grid,
            n_max,
            m,
            r: cfg.r,
            seed: cfg.seed.unwrap_or(0),
            subsystem: cfg.subsystem.unwrap_or(Subsystem::B),
            tol,
            out: cfg.output.path,
            format,
        })
    }

    pub fn d(&self) -> usize {
        self.target.d.unwrap_or(DEFAULT_D)
    }

    /// `r` for Reduction maps and channel moments; defaults to 1.
    pub fn r_order(&self) -> usize {
        self.r.unwrap_or(1)
    }

    pub fn family_name(&self) -> Result<&str, CliError> {
        self.target
            .family
            .as_deref()
            .ok_or_else(|| CliError::Config("no target family given".into()))
    }

    pub fn state_family(&self) -> Result<StateFamily, CliError> {
        Ok(self.family_name()?.parse()?)
    }

    pub fn channel_family(&self) -> Result<ChannelFamily, CliError> {
        Ok(self.family_name()?.parse()?)
    }

    pub fn param(&self) -> Result<f64, CliError> {
        self.target
            .param
            .ok_or_else(|| CliError::Config("no target parameter given".into()))
    }

    /// The state to evaluate, with its local dimensions and a label.
    pub fn state(&self) -> Result<(ComplexMatrix, usize, usize, String), CliError> {
        if let Some(dens) = &self.target.density {
            let rho = matrix_from_rows(&dens.rows)?;
            if rho.nrows() != dens.dim_a * dens.dim_b || rho.ncols() != rho.nrows() {
                return Err(CliError::Config(format!(
                    "density is {}x{} but dim_a * dim_b = {}",
                    rho.nrows(),
                    rho.ncols(),
                    dens.dim_a * dens.dim_b
                )));
            }
            return Ok((rho, dens.dim_a, dens.dim_b, "density".into()));
        }
        let name = self.family_name()?;
        let d = self.d();
        if matches!(name, "random_schmidt" | "random") {
            let rank = self.target.rank.unwrap_or(1);
            let terms = self.target.terms.unwrap_or(4);
            let sample = random_schmidt_bounded(d, rank, terms, self.seed)?;
            let label = format!("random_schmidt rank={rank} terms={terms} seed={}", self.seed);
            return Ok((sample.state, d, d, label));
        }
        let family: StateFamily = name.parse()?;
        let d = family.fixed_dim().unwrap_or(d);
        let param = if family.takes_parameter() {
            self.param()?
        } else {
            0.0
        };
        let rho = family.instantiate(d, param)?;
        let label = if family.takes_parameter() {
            format!("{} p={param}", family.as_str())
        } else {
            family.as_str().to_string()
        };
        Ok((rho, d, d, label))
    }

    /// The positive map, on the given dimension. Defaults to Reduction with `k = 1/r`.
    pub fn map_spec(&self, d: usize) -> Result<PositiveMapSpec, CliError> {
        let desc = self.map.clone().unwrap_or(MapDesc::Reduction { k: None, r: None });
        let spec = match desc {
            MapDesc::Reduction { k, r } => {
                let k = match k {
                    Some(k) => k,
                    None => k_default_for_r(r.or(self.r).unwrap_or(1))?,
                };
                PositiveMapSpec::reduction(k, d)?
            }
            MapDesc::BreuerHall { u } => {
                let u = match u {
                    Some(rows) => matrix_from_rows(&rows)?,
                    None => example_breuer_hall_u(),
                };
                if u.nrows() != d {
                    return Err(CliError::Config(format!(
                        "U is {}x{} but the map acts on dimension {d}",
                        u.nrows(),
                        u.ncols()
                    )));
                }
                PositiveMapSpec::breuer_hall(u)?
            }
            MapDesc::GenChoi { d: md, kk } => {
                if md.is_some_and(|md| md != d) {
                    return Err(CliError::Config(format!(
                        "gen_choi dimension {} does not match target dimension {d}",
                        md.unwrap_or(d)
                    )));
                }
                PositiveMapSpec::generalized_choi(d, kk)?
            }
            MapDesc::Choi => {
                if d != 3 {
                    return Err(CliError::Config("the Choi map acts on qutrits".into()));
                }
                PositiveMapSpec::choi()
            }
            MapDesc::Transpose => PositiveMapSpec::transpose(d)?,
            MapDesc::Identity => PositiveMapSpec::identity(d)?,
        };
        Ok(spec)
    }

    /// The channel to evaluate and, for named families, the family.
    pub fn channel(&self) -> Result<(ChannelSpec, Option<ChannelFamily>, String), CliError> {
        if let Some(desc) = &self.target.channel {
            return Ok(match desc {
                ChannelDesc::Depolarizing { d, p } => (
                    ChannelSpec::depolarizing(*d, *p)?,
                    Some(ChannelFamily::Depolarizing),
                    format!("depolarizing p={p}"),
                ),
                ChannelDesc::Dephasing { d, v } => (
                    ChannelSpec::dephasing(*d, *v)?,
                    Some(ChannelFamily::Dephasing),
                    format!("dephasing v={v}"),
                ),
                ChannelDesc::Kraus { ops } => {
                    let ops = ops.iter().map(matrix_from_rows).collect::<Result<Vec<_>, _>>()?;
                    (ChannelSpec::kraus(ops)?, None, "kraus".into())
                }
            });
        }
        let family = self.channel_family()?;
        let p = self.param()?;
        Ok((
            family.instantiate(self.d(), p)?,
            Some(family),
            format!("{} p={p}", family.as_str()),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses() {
        let g: GridDesc = "0:1:101".parse().unwrap();
        assert_eq!(g, GridDesc { start: 0.0, stop: 1.0, steps: 101 });
        assert!("0:1".parse::<GridDesc>().is_err());
        assert!("a:1:3".parse::<GridDesc>().is_err());
    }

    #[test]
    fn map_descriptors_roundtrip() {
        let text = r#"{"map":"gen_choi","d":3,"kk":1}"#;
        let m: MapDesc = serde_json::from_str(text).unwrap();
        assert_eq!(m, MapDesc::GenChoi { d: Some(3), kk: 1 });
        assert_eq!(serde_json::to_string(&m).unwrap(), text);
        let bh: MapDesc = serde_json::from_str(r#"{"map":"breuer_hall","U":[[[0,0],[-1,0]],[[1,0],[0,0]]]}"#).unwrap();
        assert!(matches!(bh, MapDesc::BreuerHall { u: Some(_) }));
        assert!(serde_json::from_str::<MapDesc>(r#"{"map":"nope"}"#).is_err());
    }

    #[test]
    fn n_max_must_cover_hankel_order() {
        let cfg = JobConfig {
            command: Some(Command::EvalState),
            m: Some(3),
            n_max: Some(5),
            ..Default::default()
        };
        assert!(matches!(Job::from_config(cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn scans_need_grids() {
        let cfg = JobConfig {
            command: Some(Command::ScanState),
            ..Default::default()
        };
        assert!(Job::from_config(cfg).is_err());
        let cfg = JobConfig {
            command: Some(Command::ScanState),
            grid: Some(GridDesc { start: 0.0, stop: 1.0, steps: 1 }),
            ..Default::default()
        };
        assert!(Job::from_config(cfg).is_err());
    }
}
