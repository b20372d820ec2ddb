//! Run configuration: a TOML file (or the metadata JSON of an earlier run)
//! overlaid with command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use linfinity::continuation::{ContinuationOptions, NewtonOptions, DEFAULT_NCOL, DEFAULT_NTST};
use linfinity::infinity::DEFAULT_DELTA_B;
use linfinity::lins::{DEFAULT_CROSSING_INDEX, DEFAULT_DELTA_0};
use linfinity::{Params, SystemParam};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LINFINITY_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ParamSection {
    fn default() -> Self {
        Self { alpha: 5.3, beta: 2.0, gamma: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub ntst: usize,
    pub ncol: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Continuation step controls; unset values take the per-command defaults.
    pub h0: Option<f64>,
    pub h_max: Option<f64>,
    pub max_points: Option<usize>,
}

impl Default for Numerics {
    fn default() -> Self {
        let n = NewtonOptions::default();
        Self { ntst: DEFAULT_NTST, ncol: DEFAULT_NCOL, newton_tol: n.tol, newton_max_iter: n.max_iter, h0: None, h_max: None, max_points: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinOptions {
    pub delta_0: f64,
    pub delta_b: f64,
    pub theta_b: f64,
    pub crossing_index: usize,
    /// `0` pairs the finite segment with the nearest crossing of `u_B`.
    pub crossing_index_b: usize,
    pub free: SystemParam,
    pub range: [f64; 2],
}

impl Default for LinOptions {
    fn default() -> Self {
        Self {
            delta_0: DEFAULT_DELTA_0,
            delta_b: DEFAULT_DELTA_B,
            theta_b: 0.0,
            crossing_index: DEFAULT_CROSSING_INDEX,
            crossing_index_b: 0,
            free: SystemParam::Beta,
            range: [0.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HetDirection {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HetSection {
    pub alpha_range: [f64; 2],
    pub beta_range: [f64; 2],
    pub direction: HetDirection,
}

impl Default for HetSection {
    fn default() -> Self {
        Self { alpha_range: [4.5, 6.5], beta_range: [0.0, 5.0], direction: HetDirection::Both }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxSection {
    pub table: String,
    pub w_b: f64,
}

impl Default for FluxSection {
    fn default() -> Self {
        Self { table: "0:2:0.05".into(), w_b: DEFAULT_DELTA_B }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub x0: Vec<f64>,
    pub delta: f64,
    pub bisect: Option<[f64; 2]>,
    pub tol: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { x0: vec![1.0, 1.3], delta: 0.05, bisect: None, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicSection {
    /// Loop guess with columns `t,x,y,z`; without it the loop is seeded from
    /// `(0, seed[0], seed[1])` by Newton on the return map.
    pub loop_file: Option<PathBuf>,
    pub seed: [f64; 2],
    pub returns: usize,
    pub samples: usize,
    pub delta_0: f64,
    pub crossing_index: usize,
    pub theta_b: f64,
    pub delta_range: [f64; 2],
}

impl Default for PeriodicSection {
    fn default() -> Self {
        let c = linfinity::lins::PeriodicConnectOptions::default();
        Self {
            loop_file: None,
            seed: [2.286_041_67, -6.978_917_84],
            returns: 1,
            samples: 241,
            delta_0: c.delta_0,
            crossing_index: c.crossing_index,
            theta_b: c.theta_b,
            delta_range: [c.delta_range.0, c.delta_range.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: Option<PathBuf>,
    /// Saved Lin problem for `continue-het` and `export`.
    pub input: Option<PathBuf>,
    /// `u_B` nodes at or below this height are left out of projections.
    pub min_w: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub params: ParamSection,
    pub numerics: Numerics,
    pub lin: LinOptions,
    pub het: HetSection,
    pub flux: FluxSection,
    pub probe: ProbeSection,
    pub periodic: PeriodicSection,
    pub paths: Paths,
}

impl Scenario {
    /// Reads a TOML scenario, or the `scenario` entry of a metadata JSON file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let s = v.get_mut("scenario").map(serde_json::Value::take).unwrap_or(v);
            serde_json::from_value(s).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn params(&self) -> Params {
        Params::with_gamma(self.params.alpha, self.params.beta, self.params.gamma)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let p = &self.params;
        if ![p.alpha, p.beta, p.gamma].iter().all(|v| v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        let n = &self.numerics;
        if n.ntst < 1 || !(1..=7).contains(&n.ncol) {
            return bad(format!("need ntst >= 1 and 1 <= ncol <= 7, got {} and {}", n.ntst, n.ncol));
        }
        if !(n.newton_tol > 0.0) || n.newton_max_iter == 0 {
            return bad("Newton tolerance and iteration limit must be positive".into());
        }
        if n.h0.is_some_and(|h| !(h > 0.0)) || n.h_max.is_some_and(|h| !(h > 0.0)) {
            return bad("continuation steps must be positive".into());
        }
        let l = &self.lin;
        if !(l.delta_b > 0.0 && l.delta_b <= 0.3) {
            return bad(format!("delta_B must lie in (0, 0.3], got {}", l.delta_b));
        }
        if l.delta_0 == 0.0 || l.crossing_index == 0 {
            return bad("delta_0 must be nonzero and crossing_index at least 1".into());
        }
        for (name, r) in [("lin.range", l.range), ("het.alpha_range", self.het.alpha_range), ("het.beta_range", self.het.beta_range)] {
            if !(r[0] < r[1]) {
                return bad(format!("{name} must be increasing, got {r:?}"));
            }
        }
        parse_range(&self.flux.table)?;
        if !(self.probe.delta > 0.0) || !(self.flux.w_b > 0.0) {
            return bad("probe delta and flux height must be positive".into());
        }
        if self.periodic.samples < 8 || self.periodic.returns == 0 {
            return bad("periodic seeding needs at least 8 samples and one return".into());
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.numerics.newton_tol, max_iter: self.numerics.newton_max_iter, ..Default::default() }
    }

    /// `base` with the configured step overrides and Newton settings.
    pub fn continuation(&self, base: ContinuationOptions) -> ContinuationOptions {
        let n = &self.numerics;
        ContinuationOptions {
            h0: n.h0.unwrap_or(base.h0),
            h_max: n.h_max.unwrap_or(base.h_max),
            max_points: n.max_points.unwrap_or(base.max_points),
            newton: self.newton(),
            ..base
        }
    }

    /// Flag, then config file, then environment, then the working directory.
    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

/// `start:stop:step`, returned as `(start, step, stop)`.
pub fn parse_range(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[a, b, h]) if h > 0.0 && a <= b => Ok((a, h, b)),
        _ => Err(CliError::Config(format!("expected start:stop:step with step > 0, got '{s}'"))),
    }
}

/// `lo:hi`.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok([a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let s = Scenario::default();
        s.validate().unwrap();
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<Scenario>(&text).unwrap(), s);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let s: Scenario = toml::from_str("[params]\nalpha = 6.2\n[lin]\nfree = \"alpha\"\n").unwrap();
        assert_eq!(s.params.alpha, 6.2);
        assert_eq!(s.params.gamma, 0.5);
        assert_eq!(s.lin.free, SystemParam::Alpha);
        assert!(toml::from_str::<Scenario>("[params]\nalpah = 1.0\n").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:2:0.05").unwrap(), (0.0, 0.05, 2.0));
        assert!(parse_range("0:2").is_err());
        assert!(parse_range("1:2:-1").is_err());
        assert!(parse_range("2:1:0.1").is_err());
        assert_eq!(parse_pair("4.5:6.5").unwrap(), [4.5, 6.5]);
    }
}
