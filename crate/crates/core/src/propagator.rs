//! Time evolution of the chain amplitudes under `H(t) + H_s(t)`.
//!
//! Each step is an exact exponential of a Hermitian generator, so the norm is
//! conserved to rounding. The default fourth-order Magnus generator samples
//! the Hamiltonian at the two Gauss nodes of the step.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{mixing_state, Drive, FieldSample};
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, eig_hermitian, unitary_step, ComplexMatrix, ComplexVector, HermitianOperator,
};
use crate::scheme::LevelScheme;
use crate::shortcut::{assemble_total, shortcut_fields, ShortcutScheme, ShortcutType};

/// Largest tolerated deviation of `‖c‖` from 1 during a run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// `exp(−i H(t + h/2) h)`, second order.
    Midpoint,
    /// Two-node fourth-order Magnus generator.
    #[default]
    Magnus4,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Midpoint => "midpoint",
            Integrator::Magnus4 => "magnus4",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Integrator::Midpoint),
            "magnus4" | "magnus" => Ok(Integrator::Magnus4),
            _ => Err(Error::InvalidParameter(format!("unknown integrator `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub integrator: Integrator,
    /// Repeat the run with twice the steps and report the change in the final
    /// efficiency.
    pub check_convergence: bool,
    /// Record populations of the instantaneous eigenstates.
    pub track_adiabatic: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_start: -5.0,
            t_end: 5.0,
            steps: 4096,
            integrator: Integrator::Magnus4,
            check_convergence: false,
            track_adiabatic: false,
        }
    }
}

impl PropagationConfig {
    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter(
                "step count must be positive".into(),
            ));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter("time window must be finite".into()));
        }
        if self.t_end <= self.t_start {
            return Err(Error::NonPositiveStep(self.step()));
        }
        Ok(())
    }
}

/// A chain driven by pump and Stokes pulses plus an optional shortcut.
///
/// The Stokes factor `β` of the shortcut scheme perturbs only the bare Stokes
/// field; shortcut fields are always synthesized from the nominal drive.
#[derive(Clone, Debug)]
pub struct SystemModel<D> {
    pub scheme: LevelScheme,
    pub drive: D,
    pub shortcut: ShortcutScheme,
}

impl<D: Drive> SystemModel<D> {
    pub fn new(scheme: LevelScheme, drive: D, shortcut: ShortcutScheme) -> Result<Self> {
        shortcut.validate()?;
        Ok(Self {
            scheme,
            drive,
            shortcut,
        })
    }

    /// Bare fields actually applied, with the Stokes factor included.
    pub fn applied_fields(&self, t: f64) -> FieldSample {
        let mut f = self.drive.sample(t);
        f.stokes *= self.shortcut.stokes_scale;
        f.stokes_dot *= self.shortcut.stokes_scale;
        f
    }

    pub fn bare_hamiltonian(&self, t: f64) -> HermitianOperator {
        let f = self.applied_fields(t);
        self.scheme.build_hamiltonian(f.pump, f.stokes)
    }

    /// Total Hamiltonian. The shortcut vanishes wherever the nominal drive
    /// does.
    pub fn hamiltonian(&self, t: f64) -> Result<HermitianOperator> {
        let bare = self.bare_hamiltonian(t);
        if self.shortcut.kind == ShortcutType::None {
            return Ok(bare);
        }
        let nominal = self.drive.sample(t);
        if nominal.rms() == 0.0 {
            return Ok(bare);
        }
        let ms = mixing_state(&nominal)?;
        match shortcut_fields(&self.scheme, self.shortcut.kind, &ms)? {
            Some(f) => assemble_total(&self.scheme, &bare, &f, &self.shortcut),
            None => Ok(bare),
        }
    }

    /// Hamiltonian in the instantaneous eigenbasis of the bare Hamiltonian,
    /// `W†(H + H_s)W − iW†Ẇ`. Its off-diagonal part is what drives
    /// nonadiabatic transitions. `None` where the bare fields vanish.
    pub fn adiabatic_frame_hamiltonian(&self, t: f64) -> Result<Option<ComplexMatrix>> {
        let f = self.applied_fields(t);
        if f.rms() == 0.0 {
            return Ok(None);
        }
        let ms = mixing_state(&f)?;
        let (frame, dw) = self.scheme.unit_frame(ms.theta)?;
        let w = &frame.vectors;
        let h = self.hamiltonian(t)?;
        let i = Complex64::new(0.0, 1.0);
        let hw = w.adjoint() * h.matrix() * w - w.adjoint() * dw * (i * ms.theta_dot);
        Ok(Some(hw))
    }

    /// Unit generator of one step from `t` to `t + h`.
    fn step_generator(&self, integrator: Integrator, t: f64, h: f64) -> Result<HermitianOperator> {
        match integrator {
            Integrator::Midpoint => self.hamiltonian(t + 0.5 * h),
            Integrator::Magnus4 => {
                let d = 3.0_f64.sqrt() / 6.0 * h;
                let mid = t + 0.5 * h;
                let h1 = self.hamiltonian(mid - d)?;
                let h2 = self.hamiltonian(mid + d)?;
                let c = commutator(h2.matrix(), h1.matrix());
                let k = Complex64::new(0.0, -3.0_f64.sqrt() * h / 12.0);
                let m = (h1.matrix() + h2.matrix()) * Complex64::new(0.5, 0.0) + c * k;
                HermitianOperator::new(m)
            }
        }
    }
}

pub fn basis_state(dim: usize, idx: usize) -> ComplexVector {
    let mut c = ComplexVector::zeros(dim);
    c[idx] = Complex64::new(1.0, 0.0);
    c
}

fn check_initial(dim: usize, c: &ComplexVector) -> Result<()> {
    if c.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: c.len(),
        });
    }
    let n = c.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "initial state must be normalized, norm {n}"
        )));
    }
    Ok(())
}

/// Steps `c` through the configured window, calling `visit` after every
/// step with the time reached. Returns the final state and the largest norm
/// drift seen.
fn evolve<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
    initial: &ComplexVector,
    mut visit: impl FnMut(f64, &ComplexVector),
) -> Result<(ComplexVector, f64)> {
    cfg.validate()?;
    check_initial(model.scheme.dim(), initial)?;
    let h = cfg.step();
    let mut c = initial.clone();
    let mut drift = 0.0_f64;
    for k in 0..cfg.steps {
        let t = cfg.t_start + k as f64 * h;
        let gen = model.step_generator(cfg.integrator, t, h)?;
        c = unitary_step(&gen, h, &c)?;
        let d = (c.norm() - 1.0).abs();
        drift = drift.max(d);
        if d > NORM_DRIFT_LIMIT {
            return Err(Error::IntegratorFailure { t: t + h, drift: d });
        }
        visit(t + h, &c);
    }
    Ok((c, drift))
}

/// Final state after evolving `initial` over the configured window.
pub fn propagate_state<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
    initial: &ComplexVector,
) -> Result<ComplexVector> {
    evolve(model, cfg, initial, |_, _| {}).map(|(c, _)| c)
}

/// Evolves `final_state` from `t_end` back to `t_start` with the exact
/// inverse of every forward step.
pub fn propagate_backward<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
    final_state: &ComplexVector,
) -> Result<ComplexVector> {
    cfg.validate()?;
    check_initial(model.scheme.dim(), final_state)?;
    let h = cfg.step();
    let mut c = final_state.clone();
    for k in (0..cfg.steps).rev() {
        let t = cfg.t_start + k as f64 * h;
        let gen = model.step_generator(cfg.integrator, t, h)?;
        c = unitary_step(&gen.scaled(-1.0), h, &c)?;
    }
    Ok(c)
}

/// Final population of the target state when starting in the initial state.
pub fn transfer_efficiency<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
) -> Result<f64> {
    let s = &model.scheme;
    let c = propagate_state(model, cfg, &basis_state(s.dim(), s.initial_index()))?;
    Ok(c[s.target_index()].norm_sqr())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub amplitudes: Vec<ComplexVector>,
    pub populations: Vec<Vec<f64>>,
    /// Populations of the eigenstates of the bare Hamiltonian in ascending
    /// eigenvalue order (NaN where the fields vanish).
    pub adiabatic: Option<Vec<Vec<f64>>>,
    pub efficiency: f64,
    pub norm_drift: f64,
    pub convergence_delta: Option<f64>,
}

/// Populations of the instantaneous eigenstates of the bare Hamiltonian.
pub fn adiabatic_projection<D: Drive>(
    model: &SystemModel<D>,
    t: f64,
    c: &ComplexVector,
) -> Vec<f64> {
    let f = model.applied_fields(t);
    let n = model.scheme.dim();
    let m = f.pump.max(f.stokes);
    if m.is_nan() || m <= 0.0 {
        return vec![f64::NAN; n];
    }
    let frame = eig_hermitian(&model.scheme.build_hamiltonian(f.pump / m, f.stokes / m));
    let a = frame.vectors.adjoint() * c;
    a.iter().map(|z| z.norm_sqr()).collect()
}

/// Full trajectory starting from the scheme's initial state.
pub fn propagate<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
) -> Result<TrajectoryResult> {
    let s = &model.scheme;
    propagate_from(model, cfg, &basis_state(s.dim(), s.initial_index()))
}

pub fn propagate_from<D: Drive>(
    model: &SystemModel<D>,
    cfg: &PropagationConfig,
    initial: &ComplexVector,
) -> Result<TrajectoryResult> {
    let s = &model.scheme;
    let cap = cfg.steps + 1;
    let mut times = Vec::with_capacity(cap);
    let mut amplitudes = Vec::with_capacity(cap);
    times.push(cfg.t_start);
    amplitudes.push(initial.clone());
    let (last, norm_drift) = evolve(model, cfg, initial, |t, c| {
        times.push(t);
        amplitudes.push(c.clone());
    })?;
    let populations: Vec<Vec<f64>> = amplitudes
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).collect())
        .collect();
    let adiabatic = cfg.track_adiabatic.then(|| {
        times
            .iter()
            .zip(&amplitudes)
            .map(|(&t, c)| adiabatic_projection(model, t, c))
            .collect()
    });
    let efficiency = last[s.target_index()].norm_sqr();
    let convergence_delta = if cfg.check_convergence {
        let fine = PropagationConfig {
            steps: 2 * cfg.steps,
            ..*cfg
        };
        let c = propagate_state(model, &fine, initial)?;
        Some((c[s.target_index()].norm_sqr() - efficiency).abs())
    } else {
        None
    };
    Ok(TrajectoryResult {
        labels: s.labels().to_vec(),
        times,
        amplitudes,
        populations,
        adiabatic,
        efficiency,
        norm_drift,
        convergence_delta,
    })
}
