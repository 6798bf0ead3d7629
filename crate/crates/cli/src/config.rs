use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use stirap_core::drive::GaussianDrive;
use stirap_core::experiments::{linspace, ScanParameter, ScanSpec};
use stirap_core::propagator::{Integrator, PropagationConfig};
use stirap_core::scheme::{LevelScheme, SchemeTag};
use stirap_core::shortcut::{ShortcutScheme, ShortcutType};

/// Pulse area given either as a number (radians) or symbolically, e.g.
/// `"10pi"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Area {
    Number(f64),
    Text(String),
}

impl Area {
    pub fn value(&self) -> Result<f64> {
        match self {
            Area::Number(x) => Ok(*x),
            Area::Text(s) => parse_area(s),
        }
    }
}

/// Parses `10pi`, `2.5*pi`, `π`, `10 π` or a plain number.
pub fn parse_area(s: &str) -> Result<f64> {
    let t: String = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    let symbolic = t.strip_suffix("pi").or_else(|| t.strip_suffix('π'));
    let v = match symbolic {
        Some(prefix) => {
            let prefix = prefix.strip_suffix('*').unwrap_or(prefix);
            let k: f64 = if prefix.is_empty() {
                1.0
            } else {
                prefix
                    .parse()
                    .with_context(|| format!("cannot parse pulse area `{s}`"))?
            };
            k * PI
        }
        None => t
            .parse()
            .with_context(|| format!("cannot parse pulse area `{s}`"))?,
    };
    ensure!(
        v.is_finite() && v > 0.0,
        "pulse area must be positive, got `{s}`"
    );
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    /// Individual pulse area `Ω₀ T √π`.
    pub area: Area,
    /// Pump–Stokes delay in units of `T`.
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShortcutSection {
    pub kind: String,
    pub phase: f64,
    pub xi: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub integrator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub parameter: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Everything a command needs, as read from a config file and overridden by
/// flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub drive: DriveSection,
    pub shortcut: ShortcutSection,
    pub propagation: PropagationSection,
    pub scan: ScanSection,
    pub output: OutputSection,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            scheme: "m21".into(),
            cg: None,
        }
    }
}

impl Default for DriveSection {
    fn default() -> Self {
        Self {
            area: Area::Text("10pi".into()),
            tau: 1.0,
        }
    }
}

impl Default for ShortcutSection {
    fn default() -> Self {
        let d = ShortcutScheme::default();
        Self {
            kind: d.kind.name().into(),
            phase: d.phase,
            xi: d.amplitude_scale,
            beta: d.stokes_scale,
        }
    }
}

impl Default for PropagationSection {
    fn default() -> Self {
        let d = PropagationConfig::default();
        Self {
            t_start: d.t_start,
            t_end: d.t_end,
            steps: d.steps,
            integrator: d.integrator.name().into(),
        }
    }
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            parameter: ScanParameter::Phase.name().into(),
            from: None,
            to: None,
            points: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn scheme(&self) -> Result<LevelScheme> {
        let tag: SchemeTag = self.system.scheme.parse()?;
        match (&self.system.cg, tag) {
            (Some(cg), SchemeTag::GenericChain) => Ok(LevelScheme::generic(cg.clone())?),
            (None, SchemeTag::GenericChain) => {
                bail!("scheme `generic` needs coupling coefficients (--cg)")
            }
            (Some(_), _) => bail!("--cg applies only to the generic scheme"),
            (None, tag) => Ok(LevelScheme::from_tag(tag)?),
        }
    }

    pub fn drive(&self) -> Result<GaussianDrive> {
        Ok(GaussianDrive::from_area(
            self.drive.area.value()?,
            self.drive.tau,
        )?)
    }

    pub fn shortcut_scheme(&self) -> Result<ShortcutScheme> {
        let kind: ShortcutType = self.shortcut.kind.parse()?;
        let sc = ShortcutScheme::new(kind)
            .with_phase(self.shortcut.phase)
            .with_amplitude_scale(self.shortcut.xi)
            .with_stokes_scale(self.shortcut.beta);
        sc.validate()?;
        Ok(sc)
    }

    pub fn propagation(&self) -> Result<PropagationConfig> {
        let p = &self.propagation;
        let cfg = PropagationConfig {
            t_start: p.t_start,
            t_end: p.t_end,
            steps: p.steps,
            integrator: p.integrator.parse::<Integrator>()?,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let parameter: ScanParameter = self.scan.parameter.parse()?;
        let mut spec = ScanSpec::new(parameter, self.scheme()?);
        spec.drive = self.drive()?;
        spec.shortcut = self.shortcut_scheme()?;
        spec.propagation = self.propagation()?;
        let default = parameter.default_grid();
        let from = self.scan.from.unwrap_or(default[0]);
        let to = self.scan.to.unwrap_or(default[default.len() - 1]);
        let points = self.scan.points.unwrap_or(default.len());
        ensure!(points >= 1, "scan needs at least one point");
        ensure!(
            points == 1 || to > from,
            "scan range must be increasing ({from} .. {to})"
        );
        spec.grid = linspace(from, to, points);
        Ok(spec)
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.scheme()?;
        self.drive()?;
        self.shortcut_scheme()?;
        self.propagation()?;
        if let Some(path) = &self.output.path {
            check_writable(Path::new(path))?;
        }
        Ok(())
    }
}

/// Fails when the parent directory of `path` does not exist.
pub fn check_writable(path: &Path) -> Result<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    ensure!(
        parent.is_dir(),
        "output directory {} does not exist",
        parent.display()
    );
    ensure!(
        !path.is_dir(),
        "output path {} is a directory",
        path.display()
    );
    Ok(())
}
