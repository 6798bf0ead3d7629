//! Parameter scans, pulse-shape tables and the figure datasets.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{mixing_state, Drive, GaussianDrive};
use crate::error::{Error, Result};
use crate::propagator::{propagate, transfer_efficiency, PropagationConfig, SystemModel};
use crate::scheme::LevelScheme;
use crate::shortcut::{field_label, shortcut_fields, ShortcutScheme, ShortcutType};

/// Points on the default scan grids.
pub const DEFAULT_SCAN_POINTS: usize = 81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanParameter {
    /// Phase `φ` of the designated shortcut coupling.
    Phase,
    /// Amplitude factor `ξ` on the designated shortcut coupling.
    ShortcutScale,
    /// Factor `β` on the bare Stokes field.
    StokesScale,
    /// Individual pulse area `Ω₀ T √π`.
    PulseArea,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::Phase => "phase",
            ScanParameter::ShortcutScale => "xi",
            ScanParameter::StokesScale => "beta",
            ScanParameter::PulseArea => "area",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            ScanParameter::Phase => linspace(0.0, PI, DEFAULT_SCAN_POINTS),
            ScanParameter::ShortcutScale | ScanParameter::StokesScale => {
                linspace(0.0, 2.0, DEFAULT_SCAN_POINTS)
            }
            ScanParameter::PulseArea => linspace(PI, 20.0 * PI, 39),
        }
    }

    /// Value the parameter takes in an unperturbed run.
    pub fn nominal(self) -> f64 {
        match self {
            ScanParameter::Phase => FRAC_PI_2,
            ScanParameter::ShortcutScale | ScanParameter::StokesScale => 1.0,
            ScanParameter::PulseArea => 10.0 * PI,
        }
    }
}

impl fmt::Display for ScanParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phase" | "phi" => Ok(ScanParameter::Phase),
            "xi" | "shortcut-scale" => Ok(ScanParameter::ShortcutScale),
            "beta" | "stokes-scale" => Ok(ScanParameter::StokesScale),
            "area" | "pulse-area" => Ok(ScanParameter::PulseArea),
            _ => Err(Error::InvalidParameter(format!(
                "unknown scan parameter `{s}`"
            ))),
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub parameter: ScanParameter,
    pub grid: Vec<f64>,
    pub scheme: LevelScheme,
    pub drive: GaussianDrive,
    pub shortcut: ShortcutScheme,
    pub propagation: PropagationConfig,
}

impl ScanSpec {
    /// Default grid around the reference drive with a type-II shortcut.
    pub fn new(parameter: ScanParameter, scheme: LevelScheme) -> Self {
        Self {
            parameter,
            grid: parameter.default_grid(),
            scheme,
            drive: GaussianDrive::reference(),
            shortcut: ShortcutScheme::new(ShortcutType::TypeII),
            propagation: PropagationConfig::default(),
        }
    }

    fn model_at(&self, value: f64) -> Result<SystemModel<GaussianDrive>> {
        let mut drive = self.drive;
        let mut sc = self.shortcut;
        match self.parameter {
            ScanParameter::Phase => sc.phase = value,
            ScanParameter::ShortcutScale => sc.amplitude_scale = value,
            ScanParameter::StokesScale => sc.stokes_scale = value,
            ScanParameter::PulseArea => {
                drive = GaussianDrive::with_width(
                    value / (PI.sqrt() * drive.width),
                    drive.width,
                    drive.delay,
                )?
            }
        }
        SystemModel::new(self.scheme.clone(), drive, sc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub parameter: ScanParameter,
    pub grid: Vec<f64>,
    pub efficiencies: Vec<f64>,
}

impl ScanResult {
    /// Index of the largest efficiency (first one on ties).
    pub fn argmax_index(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.efficiencies.iter().enumerate() {
            if p > self.efficiencies[best] {
                best = k;
            }
        }
        best
    }

    pub fn argmax(&self) -> f64 {
        self.grid[self.argmax_index()]
    }

    pub fn max(&self) -> f64 {
        self.efficiencies
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.efficiencies
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Final efficiencies over the grid, computed in parallel; results come back
/// in grid order. A failing point aborts the scan with its parameter value.
pub fn scan(spec: &ScanSpec) -> Result<ScanResult> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidParameter("empty scan grid".into()));
    }
    if spec.grid.iter().any(|v| !v.is_finite()) || spec.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "scan grid must be finite and strictly increasing".into(),
        ));
    }
    let efficiencies = spec
        .grid
        .par_iter()
        .map(|&v| {
            spec.model_at(v)
                .and_then(|m| transfer_efficiency(&m, &spec.propagation))
                .map_err(|e| Error::ScanPoint {
                    parameter: spec.parameter.name().into(),
                    value: v,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        parameter: spec.parameter,
        grid: spec.grid.clone(),
        efficiencies,
    })
}

/// Named numeric columns written as CSV with 12 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_g12(x)))
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// `%.12g`-style formatting.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&e) {
        let s = format!("{x:.11e}");
        let (mant, exp) = s.split_once('e').expect("exponent present");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        let exp: i32 = exp.parse().expect("integer exponent");
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let s = format!("{:.*}", (11 - e).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

/// Pump, Stokes and shortcut fields on `times`, in units of `1/T`.
pub fn emit_pulse_shapes<D: Drive>(
    scheme: &LevelScheme,
    kind: ShortcutType,
    drive: &D,
    times: &[f64],
) -> Result<Table> {
    let mut links = Vec::new();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let f = drive.sample(t);
        let fields = if f.rms() > 0.0 {
            shortcut_fields(scheme, kind, &mixing_state(&f)?)?
        } else {
            None
        };
        if links.is_empty() {
            if let Some(fl) = &fields {
                links = fl.links();
            }
        }
        let mut row = vec![t, f.pump, f.stokes];
        row.extend(
            links
                .iter()
                .map(|&l| fields.as_ref().map_or(0.0, |fl| fl.get(l))),
        );
        rows.push(row);
    }
    let mut columns = vec![
        "t [T]".to_string(),
        "pump [1/T]".into(),
        "stokes [1/T]".into(),
    ];
    columns.extend(
        links
            .iter()
            .map(|&l| format!("{} [1/T]", field_label(scheme, l))),
    );
    // rows written before the first nonzero drive sample lack shortcut columns
    for r in &mut rows {
        r.resize(columns.len(), 0.0);
    }
    Ok(Table { columns, rows })
}

/// Target population against time for several shortcut types on the
/// reference drive.
fn efficiency_table(
    scheme: &LevelScheme,
    kinds: &[ShortcutType],
    propagation: &PropagationConfig,
) -> Result<Table> {
    let mut columns = vec!["t [T]".to_string()];
    let mut data = Vec::new();
    for &kind in kinds {
        let model = SystemModel::new(
            scheme.clone(),
            GaussianDrive::reference(),
            ShortcutScheme::new(kind),
        )?;
        let r = propagate(&model, propagation)?;
        columns.push(format!("P_{kind}"));
        data.push(r);
    }
    let target = scheme.target_index();
    let rows = (0..data[0].times.len())
        .map(|k| {
            let mut row = vec![data[0].times[k]];
            row.extend(data.iter().map(|r| r.populations[k][target]));
            row
        })
        .collect();
    Ok(Table { columns, rows })
}

fn scan_table(parameter: ScanParameter) -> Result<Table> {
    let schemes = [LevelScheme::m21(), LevelScheme::m22()];
    let mut columns = vec![parameter.name().to_string()];
    let mut results = Vec::new();
    for s in schemes {
        columns.push(format!("P_{}", s.tag()));
        results.push(scan(&ScanSpec::new(parameter, s))?);
    }
    let rows = results[0]
        .grid
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut row = vec![v];
            row.extend(results.iter().map(|r| r.efficiencies[k]));
            row
        })
        .collect();
    Ok(Table { columns, rows })
}

/// Time grid of the pulse-shape datasets.
pub fn shape_times() -> Vec<f64> {
    linspace(-5.0, 5.0, 1001)
}

/// Named tables behind one figure:
/// 3 type-I fields, 4 efficiency against time with and without the type-II shortcut,
/// 5 type-II and type-III fields, 6–8 phase, `ξ` and `β` scans.
pub fn reproduce_figure(id: u32) -> Result<Vec<(String, Table)>> {
    let drive = GaussianDrive::reference();
    let times = shape_times();
    let m_chains = [LevelScheme::m21(), LevelScheme::m22()];
    let shapes = |kinds: &[ShortcutType]| -> Result<Vec<(String, Table)>> {
        let mut out = Vec::new();
        for &kind in kinds {
            for s in &m_chains {
                let name = format!("fig{id}_{}_{}", s.tag(), kind);
                out.push((name, emit_pulse_shapes(s, kind, &drive, &times)?));
            }
        }
        Ok(out)
    };
    match id {
        3 => shapes(&[ShortcutType::TypeI]),
        4 => {
            let table = efficiency_table(
                &LevelScheme::m21(),
                &[ShortcutType::None, ShortcutType::TypeII],
                &PropagationConfig::default(),
            )?;
            Ok(vec![("fig4_m21".into(), table)])
        }
        5 => shapes(&[ShortcutType::TypeII, ShortcutType::TypeIII]),
        6 => Ok(vec![(
            "fig6_phase".into(),
            scan_table(ScanParameter::Phase)?,
        )]),
        7 => Ok(vec![(
            "fig7_xi".into(),
            scan_table(ScanParameter::ShortcutScale)?,
        )]),
        8 => Ok(vec![(
            "fig8_beta".into(),
            scan_table(ScanParameter::StokesScale)?,
        )]),
        other => Err(Error::UnknownFigure(other)),
    }
}
