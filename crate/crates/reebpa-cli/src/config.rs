//! Config loading. Raw JSON is screened against a per-command key
//! allowlist before any typed parsing, so an unknown key is reported as a
//! JSON pointer instead of a serde trace.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use reebpa::contact::GridSpec;

pub struct Loaded {
    /// Exact file bytes; the report embeds their hash.
    pub raw: Vec<u8>,
    pub cmd: String,
    pub command: Command,
    pub workers: Option<usize>,
}

pub enum Command {
    Model(MapCmdCfg),
    Lefschetz(MapCmdCfg),
    Smooth(FormCfg),
    Verify(FormCfg),
    Orbits(OrbitsCfg),
    Track(TrackCfg),
    Census(CensusCfg),
    Growth(CensusCfg),
    Chain(CensusCfg),
    Torsion(TorsionCfg),
}

/// Keys accepted by every command.
const COMMON: &[&str] = &["cmd", "workers"];

fn allowed(cmd: &str) -> Option<&'static [&'static str]> {
    Some(match cmd {
        "model" => &["model", "n", "k", "lambda", "matrix"],
        "lefschetz" => &["model", "n", "k", "lambda", "matrix", "center", "radius"],
        "smooth" => &["fixture", "epsilon", "grid", "tol_alpha", "tol_dalpha"],
        "verify" => &["fixture", "epsilon", "grid"],
        "orbits" => &[
            "flow", "fixture", "epsilon", "matrix", "n", "k", "lambda", "torsion_k", "ft", "fr",
            "fth", "t0", "radius", "returns", "seeds_per_axis", "tol",
        ],
        "track" => &[
            "fixture",
            "epsilon",
            "l_bound",
            "core_radius",
            "tube_radius",
            "anchors",
            "section_radius",
            "field_tol",
            "tol",
        ],
        "census" => &["matrix", "kmax"],
        "growth" => &["matrix", "kmax", "csv"],
        "chain" => &["matrix", "kmax", "cutoffs", "csv"],
        "torsion" => &["k", "class"],
        _ => return None,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapCmdCfg {
    pub model: Option<String>,
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub lambda: Option<f64>,
    pub matrix: Option<[[i64; 2]; 2]>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormCfg {
    pub fixture: String,
    #[serde(default = "one")]
    pub epsilon: f64,
    pub grid: Option<GridCfg>,
    pub tol_alpha: Option<f64>,
    pub tol_dalpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub nt: usize,
    pub nr: usize,
    pub nth: usize,
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl GridCfg {
    pub fn to_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.nt, self.nr, self.nth, self.r_min, self.r_max, self.delta)
            .map_err(|e| anyhow::anyhow!("bad grid: {e}"))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitsCfg {
    pub flow: String,
    pub fixture: Option<String>,
    #[serde(default = "half")]
    pub epsilon: f64,
    pub matrix: Option<[[i64; 2]; 2]>,
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub lambda: Option<f64>,
    pub torsion_k: Option<u32>,
    pub ft: Option<String>,
    pub fr: Option<String>,
    pub fth: Option<String>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "orbit_radius")]
    pub radius: f64,
    #[serde(default = "one_return")]
    pub returns: u32,
    #[serde(default = "eight")]
    pub seeds_per_axis: usize,
    #[serde(default = "tol9")]
    pub tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackCfg {
    pub fixture: String,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default = "two")]
    pub l_bound: f64,
    #[serde(default = "core")]
    pub core_radius: f64,
    #[serde(default = "tube")]
    pub tube_radius: f64,
    #[serde(default = "anchors")]
    pub anchors: Vec<[f64; 2]>,
    #[serde(default = "section")]
    pub section_radius: f64,
    #[serde(default = "tol9")]
    pub field_tol: f64,
    #[serde(default = "tol9")]
    pub tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusCfg {
    pub matrix: [[i64; 2]; 2],
    pub kmax: u32,
    pub cutoffs: Option<Vec<f64>>,
    pub csv: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorsionCfg {
    pub k: u32,
    pub class: [i64; 2],
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn tol9() -> f64 {
    1e-9
}
fn default_delta() -> f64 {
    0.2
}
fn orbit_radius() -> f64 {
    0.9
}
fn one_return() -> u32 {
    1
}
fn eight() -> usize {
    8
}
fn core() -> f64 {
    0.955
}
fn tube() -> f64 {
    0.01
}
fn anchors() -> Vec<[f64; 2]> {
    vec![[0.97, 1.0], [0.98, 4.0]]
}
fn section() -> f64 {
    0.99
}

pub fn load(path: &Path) -> Result<Loaded> {
    let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_slice(&raw).with_context(|| format!("{} is not JSON", path.display()))?;
    let obj = match value.as_object() {
        Some(o) => o,
        None => bail!("config must be a JSON object with a \"cmd\" key"),
    };
    let cmd = match obj.get("cmd").and_then(Value::as_str) {
        Some(c) => c.to_owned(),
        None => bail!("config needs a string \"cmd\" key"),
    };
    let keys = match allowed(&cmd) {
        Some(k) => k,
        None => bail!(
            "unknown cmd {cmd:?}; one of model, smooth, verify, orbits, lefschetz, track, \
             census, growth, chain, torsion"
        ),
    };
    for key in obj.keys() {
        if !COMMON.contains(&key.as_str()) && !keys.contains(&key.as_str()) {
            bail!(
                "unknown config key \"/{key}\" for cmd {cmd:?}; accepted keys: {}",
                COMMON
                    .iter()
                    .chain(keys)
                    .copied()
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    let workers = match obj.get("workers") {
        None => None,
        Some(w) => match w.as_u64() {
            Some(n) if n >= 1 => Some(n as usize),
            _ => bail!("\"/workers\" must be a positive integer"),
        },
    };

    // Typed parse of the command-specific keys; deny_unknown_fields is the
    // backstop should an allowlist drift.
    let mut rest = obj.clone();
    rest.remove("cmd");
    rest.remove("workers");
    let rest = Value::Object(rest);
    let parse_err = |e: serde_json::Error| anyhow::anyhow!("bad config for cmd {cmd:?}: {e}");
    let command = match cmd.as_str() {
        "model" => Command::Model(serde_json::from_value(rest).map_err(parse_err)?),
        "lefschetz" => Command::Lefschetz(serde_json::from_value(rest).map_err(parse_err)?),
        "smooth" => Command::Smooth(serde_json::from_value(rest).map_err(parse_err)?),
        "verify" => Command::Verify(serde_json::from_value(rest).map_err(parse_err)?),
        "orbits" => Command::Orbits(serde_json::from_value(rest).map_err(parse_err)?),
        "track" => Command::Track(serde_json::from_value(rest).map_err(parse_err)?),
        "census" => Command::Census(serde_json::from_value(rest).map_err(parse_err)?),
        "growth" => Command::Growth(serde_json::from_value(rest).map_err(parse_err)?),
        "chain" => Command::Chain(serde_json::from_value(rest).map_err(parse_err)?),
        "torsion" => Command::Torsion(serde_json::from_value(rest).map_err(parse_err)?),
        _ => unreachable!("allowlist already screened the command"),
    };
    Ok(Loaded {
        raw,
        cmd,
        command,
        workers,
    })
}
