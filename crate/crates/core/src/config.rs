//! Scenario configuration: a single TOML document with explicit defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{default_schedule, Objective, StrategyKind};
use crate::gp::KernelParams;
use crate::grid::{Point, WorkspaceSpec};
use crate::nav::MotionParams;
use crate::terrain::{FieldKind, FieldParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: FieldKind,
    #[serde(default)]
    pub params: FieldParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub signal_std: f64,
    pub length_scale: f64,
    pub noise_std: f64,
    pub prior_mean: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        let k = KernelParams::default();
        GpConfig {
            signal_std: k.signal_std,
            length_scale: k.length_scale,
            noise_std: k.noise_std,
            prior_mean: 0.5,
        }
    }
}

impl GpConfig {
    pub fn kernel(&self) -> KernelParams {
        KernelParams {
            signal_std: self.signal_std,
            length_scale: self.length_scale,
            noise_std: self.noise_std,
        }
    }
}

/// Everything needed to run one trial deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Trial seed; the terrain and the measurement noise use streams derived from it.
    pub seed: u64,
    pub strategy: StrategyKind,
    pub start: Point,
    /// Mission goal. Absent means pure exploration; there is no default goal.
    pub goal: Option<Point>,
    /// Safety threshold on slip.
    pub h: f64,
    /// Confidence scale.
    pub beta: f64,
    /// Lipschitz constant (slip per meter). When absent it is resolved to
    /// `lipschitz_factor` times the terrain's reported bound.
    pub lipschitz: Option<f64>,
    pub lipschitz_factor: f64,
    pub k_e: f64,
    pub k_g: f64,
    /// Safety margin for the obstacle map, m.
    pub margin: f64,
    /// Radius of the initial safe disk, m.
    pub r0: f64,
    /// Travel between measurements, m.
    pub sample_spacing: f64,
    /// Standard deviation of measurement noise.
    pub measurement_noise: f64,
    /// Simulated time budget, s.
    pub time_budget: f64,
    /// Travel after which a leg is cut and the plan refreshed, m.
    pub epoch_max_travel: f64,
    /// Distance at which a subgoal or the goal counts as reached, m.
    pub arrival_tolerance: f64,
    /// Time charged for an epoch in which the robot does not move, s.
    pub planning_period: f64,
    pub pgh_schedule: Vec<Objective>,
    /// Keep map snapshots every this many epochs; 0 keeps only the last.
    pub snapshot_interval: u64,
    pub workspace: WorkspaceSpec,
    pub environment: EnvironmentConfig,
    pub gp: GpConfig,
    pub motion: MotionParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let workspace = WorkspaceSpec {
            width_m: 12.0,
            height_m: 12.0,
            resolution: 0.5,
            origin: Point::new(0.25, 0.25),
        };
        ScenarioConfig {
            name: "scenario".into(),
            seed: 0,
            strategy: StrategyKind::Psane,
            start: Point::new(1.5, 1.5),
            goal: None,
            h: 0.8,
            beta: 4.0,
            lipschitz: None,
            lipschitz_factor: 1.1,
            k_e: 0.1,
            k_g: 0.1,
            margin: 0.3 + workspace.resolution,
            r0: 1.0,
            sample_spacing: 0.25,
            measurement_noise: 0.02,
            time_budget: 600.0,
            epoch_max_travel: 2.0,
            arrival_tolerance: workspace.resolution,
            planning_period: 1.0,
            pgh_schedule: default_schedule(),
            snapshot_interval: 0,
            workspace,
            environment: EnvironmentConfig {
                kind: FieldKind::Smooth,
                params: FieldParams::default(),
            },
            gp: GpConfig::default(),
            motion: MotionParams::default(),
        }
    }
}

fn check(ok: bool, field: &str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, reason()))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v > 0.0, field, || format!("must be positive, got {v}"))
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v >= 0.0, field, || format!("must be non-negative, got {v}"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parse, apply `key=value` overrides (dotted keys for nested tables)
    /// and validate.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Table = toml::from_str(text).map_err(|e| Error::config("<scenario>", e.to_string()))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let cfg: ScenarioConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(field_of(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        check(self.h > 0.0 && self.h < 1.0, "h", || format!("must lie in (0, 1), got {}", self.h))?;
        positive("beta", self.beta)?;
        if let Some(l) = self.lipschitz {
            positive("lipschitz", l)?;
        }
        positive("lipschitz_factor", self.lipschitz_factor)?;
        positive("k_e", self.k_e)?;
        positive("k_g", self.k_g)?;
        non_negative("margin", self.margin)?;
        positive("r0", self.r0)?;
        positive("sample_spacing", self.sample_spacing)?;
        non_negative("measurement_noise", self.measurement_noise)?;
        positive("time_budget", self.time_budget)?;
        positive("epoch_max_travel", self.epoch_max_travel)?;
        non_negative("arrival_tolerance", self.arrival_tolerance)?;
        positive("planning_period", self.planning_period)?;
        check(!self.pgh_schedule.is_empty(), "pgh_schedule", || "must not be empty".into())?;
        check(self.workspace.contains(self.start), "start", || "lies outside the workspace".into())?;
        if let Some(g) = self.goal {
            check(self.workspace.contains(g), "goal", || "lies outside the workspace".into())?;
        } else {
            check(self.strategy != StrategyKind::Ngh, "goal", || "NGH needs a goal".into())?;
        }
        self.gp.kernel().validate()?;
        check(self.gp.prior_mean.is_finite(), "gp.prior_mean", || "must be finite".into())?;
        positive("motion.speed", self.motion.speed)?;
        positive("motion.turn_rate", self.motion.turn_rate)?;
        positive("motion.dt", self.motion.dt)?;
        check(
            self.motion.s_stuck > 0.0 && self.motion.s_stuck <= 1.0,
            "motion.s_stuck",
            || format!("must lie in (0, 1], got {}", self.motion.s_stuck),
        )?;
        non_negative("motion.t_stuck", self.motion.t_stuck)?;
        Ok(())
    }
}

/// Best-effort extraction of the offending key from a deserialization error.
fn field_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(pos) = msg.find(marker) {
            let rest = &msg[pos + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "<scenario>".into()
}

/// Apply one `dotted.key=value` override. The value is parsed as a TOML
/// value, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(spec, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::config(spec, "override key is empty"));
    }
    let value = parse_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// SplitMix64 mixing of a base seed with a stream number.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(base ^ mix(stream))
}
