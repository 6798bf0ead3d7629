//! Self-checks: closed forms against numerics, and invariants of the
//! propagation. Each metric function returns the measured quantity; the
//! [`run_checks`] suite compares them with fixed tolerances.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::drive::{mixing_state, Drive, GaussianDrive};
use crate::error::{Error, Result};
use crate::experiments::{emit_pulse_shapes, linspace, scan, ScanParameter, ScanSpec};
use crate::linalg::{eig_hermitian, gauge_align, EigenFrame};
use crate::propagator::{
    basis_state, propagate, propagate_backward, propagate_state, transfer_efficiency,
    PropagationConfig, SystemModel,
};
use crate::scheme::{analytic_nac, analytic_spectrum, dark_state, LevelScheme};
use crate::shortcut::{
    full_shortcut_fields, reduced_shortcut_fields, shortcut_type_i, shortcut_type_ii,
    shortcut_type_iii, MaskKind, ShortcutFields, ShortcutMask, ShortcutScheme, ShortcutType,
};

/// Mixing angles strictly inside `(0.01, π/2 − 0.01)`.
pub fn theta_samples(n: usize) -> Vec<f64> {
    let (a, b) = (0.01, FRAC_PI_2 - 0.01);
    (1..=n)
        .map(|k| a + (b - a) * k as f64 / (n + 1) as f64)
        .collect()
}

fn relative(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

fn field_error(reference: &ShortcutFields, other: &ShortcutFields) -> f64 {
    let links = reference.links();
    let a: Vec<f64> = links.iter().map(|&l| reference.get(l)).collect();
    let b: Vec<f64> = links.iter().map(|&l| other.get(l)).collect();
    // couplings the numeric solution has outside the reference set count too
    let extra: f64 = other
        .couplings
        .iter()
        .filter(|c| !links.contains(&c.link))
        .map(|c| c.amplitude * c.amplitude)
        .sum();
    let norm = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    relative(&a, &b).hypot(extra.sqrt() / norm)
}

fn unit_rate(theta: f64) -> crate::drive::MixingState {
    crate::drive::MixingState {
        t: 0.0,
        theta,
        theta_dot: 1.0,
        rms: 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub type_i: f64,
    pub type_ii: f64,
    pub type_iii: f64,
}

/// Largest per-sample relative error between the closed-form shortcuts and
/// their numeric oracles (full prescription for type I, reduced solve for
/// types II and III).
pub fn oracle_equivalence(s: &LevelScheme, samples: usize) -> Result<OracleReport> {
    let adjacent = ShortcutMask::adjacent(s.dim());
    let shared = ShortcutMask::shared_with_ends(s.dim());
    let mut r = OracleReport {
        type_i: 0.0,
        type_ii: 0.0,
        type_iii: 0.0,
    };
    for th in theta_samples(samples) {
        let ms = unit_rate(th);
        r.type_i = r.type_i.max(field_error(
            &shortcut_type_i(s, &ms)?,
            &full_shortcut_fields(s, &ms)?,
        ));
        let ii = reduced_shortcut_fields(s, &adjacent, &ms)?.fields;
        r.type_ii = r.type_ii.max(field_error(&shortcut_type_ii(s, &ms)?, &ii));
        let iii = reduced_shortcut_fields(s, &shared, &ms)?.fields;
        r.type_iii = r
            .type_iii
            .max(field_error(&shortcut_type_iii(s, &ms)?, &iii));
    }
    Ok(r)
}

/// Largest relative deviation of the closed-form spectrum from numeric
/// diagonalization at `Λ = rms`.
pub fn spectrum_error(s: &LevelScheme, samples: usize, rms: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for th in theta_samples(samples) {
        let h = s.unit_hamiltonian(th).scaled(rms);
        let numeric = eig_hermitian(&h).values;
        let analytic = analytic_spectrum(s, th, rms)?.values;
        worst = worst.max(relative(&analytic, &numeric));
    }
    Ok(worst)
}

/// Largest `‖Hφ₀‖/Λ` for the closed-form dark states.
pub fn dark_state_residual(s: &LevelScheme, samples: usize, rms: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for th in theta_samples(samples) {
        let h = s.unit_hamiltonian(th).scaled(rms);
        let d = dark_state(s, th)?;
        worst = worst.max((h.matrix() * &d.amplitudes).norm() / rms);
    }
    Ok(worst)
}

fn normalized_frame(s: &LevelScheme, drive: &GaussianDrive, t: f64) -> EigenFrame {
    let f = drive.sample(t);
    let m = f.pump.max(f.stokes);
    eig_hermitian(&s.build_hamiltonian(f.pump / m, f.stokes / m))
}

/// Largest relative deviation between `|χ|` from the closed forms and from
/// central differences of the gauge-aligned numeric dark state, over the
/// reference drive on `points` times in `[−5, 5]` where `Λ > min_rms`.
/// Samples at which a closed form is singular are skipped.
pub fn nac_error(s: &LevelScheme, points: usize, min_rms: f64) -> Result<f64> {
    let drive = GaussianDrive::reference();
    let h = 1e-5;
    let dark = s.dark_index();
    let mut worst = 0.0_f64;
    for t in linspace(-5.0, 5.0, points) {
        let f = drive.sample(t);
        if f.rms() <= min_rms {
            continue;
        }
        let ms = mixing_state(&f)?;
        let analytic = match analytic_nac(s, ms.theta, ms.theta_dot) {
            Ok(n) => n.by_eigen_index(),
            Err(Error::SingularPoint { .. }) => continue,
            Err(e) => return Err(e),
        };
        let here = normalized_frame(s, &drive, t);
        let ahead = gauge_align(&here, &normalized_frame(s, &drive, t + h))?;
        let behind = gauge_align(&here, &normalized_frame(s, &drive, t - h))?;
        let d0 = (ahead.column(dark) - behind.column(dark)) / Complex64::new(2.0 * h, 0.0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in (0..s.dim()).filter(|&k| k != dark) {
            let chi = here.column(k).dotc(&d0) * Complex64::new(0.0, -1.0);
            a.push(analytic[k].norm());
            b.push(chi.norm());
        }
        worst = worst.max(relative(&a, &b));
    }
    Ok(worst)
}

/// Largest off-diagonal element of the adiabatic-frame Hamiltonian relative
/// to `Λ`, over `points` times in `[−5, 5]`, under the type-I shortcut.
pub fn type_i_residual_coupling(s: &LevelScheme, points: usize) -> Result<f64> {
    let model = SystemModel::new(
        s.clone(),
        GaussianDrive::reference(),
        ShortcutScheme::new(ShortcutType::TypeI),
    )?;
    let mut worst = 0.0_f64;
    for t in linspace(-5.0, 5.0, points) {
        let rms = model.applied_fields(t).rms();
        let Some(hw) = model.adiabatic_frame_hamiltonian(t)? else {
            continue;
        };
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                if i != j {
                    worst = worst.max(hw[(i, j)].norm() / rms);
                }
            }
        }
    }
    Ok(worst)
}

/// Final efficiencies of the M21 reference run without a shortcut and with
/// the type-II shortcut, and the longest single-trajectory wall time.
pub fn reference_transfer() -> Result<(f64, f64, f64)> {
    let cfg = PropagationConfig::default();
    let mut out = [0.0; 2];
    let mut slowest = 0.0_f64;
    for (k, kind) in [ShortcutType::None, ShortcutType::TypeII]
        .into_iter()
        .enumerate()
    {
        let start = Instant::now();
        let m = SystemModel::new(
            LevelScheme::m21(),
            GaussianDrive::reference(),
            ShortcutScheme::new(kind),
        )?;
        out[k] = transfer_efficiency(&m, &cfg)?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    Ok((out[0], out[1], slowest))
}

/// Final target population of the three-state chain under `Ω_Q = 2θ̇` for an
/// individual pulse area `area` and delay `T`.
pub fn three_state_efficiency(area: f64) -> Result<f64> {
    let m = SystemModel::new(
        LevelScheme::three_state(),
        GaussianDrive::from_area(area, 1.0)?,
        ShortcutScheme::new(ShortcutType::TypeI),
    )?;
    let cfg = PropagationConfig {
        t_start: -8.0,
        t_end: 8.0,
        ..Default::default()
    };
    transfer_efficiency(&m, &cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaPiReport {
    pub scheme: String,
    pub efficiency: f64,
    /// Largest per-sample relative deviation of the numeric reduced fields
    /// from the closed forms.
    pub formula_deviation: f64,
    pub worst_theta: f64,
}

/// Runs both σπ chains with the numeric reduced (type-II mask) shortcut and
/// compares its fields with the closed-form type-II fields.
pub fn sigma_pi_report(samples: usize) -> Result<Vec<SigmaPiReport>> {
    let mut out = Vec::new();
    for s in [LevelScheme::sigma_pi_22(), LevelScheme::sigma_pi_3212()] {
        let model = SystemModel::new(
            s.clone(),
            GaussianDrive::reference(),
            ShortcutScheme::new(ShortcutType::NumericReduced(MaskKind::Adjacent)),
        )?;
        let efficiency = transfer_efficiency(&model, &PropagationConfig::default())?;
        let mask = ShortcutMask::adjacent(s.dim());
        let (mut dev, mut at) = (0.0_f64, 0.0);
        for th in theta_samples(samples) {
            let ms = unit_rate(th);
            let e = field_error(
                &shortcut_type_ii(&s, &ms)?,
                &reduced_shortcut_fields(&s, &mask, &ms)?.fields,
            );
            if e > dev {
                dev = e;
                at = th;
            }
        }
        out.push(SigmaPiReport {
            scheme: s.tag().to_string(),
            efficiency,
            formula_deviation: dev,
            worst_theta: at,
        });
    }
    Ok(out)
}

/// Largest `|Ω_{0,2}(t) − Ω_{−2,0}(−t)|` of the type-II shortcut over the
/// reference drive.
pub fn mirror_symmetry_error(s: &LevelScheme) -> Result<f64> {
    let drive = GaussianDrive::reference();
    let mut worst = 0.0_f64;
    for t in linspace(0.0, 5.0, 501) {
        let a = shortcut_type_ii(s, &mixing_state(&drive.sample(t))?)?;
        let b = shortcut_type_ii(s, &mixing_state(&drive.sample(-t))?)?;
        worst = worst.max((a.get((2, 4)) - b.get((0, 2))).abs());
        worst = worst.max((a.get((0, 2)) - b.get((2, 4))).abs());
    }
    Ok(worst)
}

/// Largest norm drift over the M21 type-II reference trajectory.
pub fn norm_drift() -> Result<f64> {
    let m = SystemModel::new(
        LevelScheme::m21(),
        GaussianDrive::reference(),
        ShortcutScheme::new(ShortcutType::TypeII),
    )?;
    Ok(propagate(&m, &PropagationConfig::default())?.norm_drift)
}

/// Change of the final efficiency when the step count is doubled, largest
/// over the M21 runs with and without the type-II shortcut.
pub fn step_halving_delta() -> Result<f64> {
    let cfg = PropagationConfig {
        check_convergence: true,
        ..Default::default()
    };
    let mut worst = 0.0_f64;
    for kind in [ShortcutType::None, ShortcutType::TypeII] {
        let m = SystemModel::new(
            LevelScheme::m21(),
            GaussianDrive::reference(),
            ShortcutScheme::new(kind),
        )?;
        worst = worst.max(
            propagate(&m, &cfg)?
                .convergence_delta
                .unwrap_or(f64::INFINITY),
        );
    }
    Ok(worst)
}

/// Distance from the initial state after a forward and a time-reversed run.
pub fn time_reversal_error() -> Result<f64> {
    let s = LevelScheme::m21();
    let m = SystemModel::new(
        s.clone(),
        GaussianDrive::reference(),
        ShortcutScheme::new(ShortcutType::TypeII),
    )?;
    let cfg = PropagationConfig::default();
    let c0 = basis_state(s.dim(), s.initial_index());
    let c1 = propagate_state(&m, &cfg, &c0)?;
    Ok((propagate_backward(&m, &cfg, &c1)? - c0).norm())
}

/// Whether a repeated scan and pulse table give identical CSV bytes.
pub fn csv_is_deterministic() -> Result<bool> {
    let render = || -> Result<String> {
        let mut spec = ScanSpec::new(ScanParameter::Phase, LevelScheme::m22());
        spec.grid = linspace(0.0, PI, 9);
        spec.propagation.steps = 1024;
        let r = scan(&spec)?;
        let shapes = emit_pulse_shapes(
            &LevelScheme::m21(),
            ShortcutType::TypeII,
            &GaussianDrive::reference(),
            &linspace(-5.0, 5.0, 201),
        )?;
        let mut text = shapes.to_csv_string();
        for (v, p) in r.grid.iter().zip(&r.efficiencies) {
            text.push_str(&format!("{v:e},{p:e}\n"));
        }
        Ok(text)
    };
    Ok(render()? == render()?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn below(name: &str, measured: Result<f64>, tolerance: f64) -> CheckOutcome {
    match measured {
        Ok(m) => CheckOutcome {
            name: name.into(),
            passed: m < tolerance,
            measured: m,
            tolerance,
            detail: format!("{m:.3e} < {tolerance:.0e}"),
        },
        Err(e) => failed(name, tolerance, e),
    }
}

fn at_least(name: &str, measured: Result<f64>, bound: f64) -> CheckOutcome {
    match measured {
        Ok(m) => CheckOutcome {
            name: name.into(),
            passed: m >= bound,
            measured: m,
            tolerance: bound,
            detail: format!("{m:.10} >= {bound}"),
        },
        Err(e) => failed(name, bound, e),
    }
}

fn failed(name: &str, tolerance: f64, e: Error) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: false,
        measured: f64::NAN,
        tolerance,
        detail: e.to_string(),
    }
}

/// The full self-check suite, in a fixed order.
pub fn run_checks() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let m_chains = [LevelScheme::m21(), LevelScheme::m22()];

    out.push(below("norm-conservation", norm_drift(), 1e-10));
    out.push(below("step-halving", step_halving_delta(), 1e-8));
    out.push(below("time-reversal", time_reversal_error(), 1e-8));
    out.push(match csv_is_deterministic() {
        Ok(same) => CheckOutcome {
            name: "csv-determinism".into(),
            passed: same,
            measured: if same { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: if same {
                "identical bytes".into()
            } else {
                "outputs differ".into()
            },
        },
        Err(e) => failed("csv-determinism", 0.0, e),
    });
    for s in &m_chains {
        let tag = s.tag();
        out.push(below(
            &format!("mirror-symmetry-{tag}"),
            mirror_symmetry_error(s),
            1e-12,
        ));
    }
    for s in &m_chains {
        let tag = s.tag();
        match oracle_equivalence(s, 1000) {
            Ok(r) => {
                out.push(below(&format!("oracle-type1-{tag}"), Ok(r.type_i), 1e-8));
                out.push(below(&format!("oracle-type2-{tag}"), Ok(r.type_ii), 1e-8));
                out.push(below(&format!("oracle-type3-{tag}"), Ok(r.type_iii), 1e-8));
            }
            Err(e) => out.push(failed(&format!("oracle-{tag}"), 1e-8, e)),
        }
        out.push(below(
            &format!("spectrum-{tag}"),
            spectrum_error(s, 1000, 7.3),
            1e-12,
        ));
        out.push(below(
            &format!("dark-state-{tag}"),
            dark_state_residual(s, 1000, 7.3),
            1e-12,
        ));
        out.push(below(&format!("nac-{tag}"), nac_error(s, 2001, 1e-3), 1e-5));
        out.push(below(
            &format!("type1-cancellation-{tag}"),
            type_i_residual_coupling(s, 2000),
            1e-8,
        ));
    }
    for area in [PI, 2.0 * PI, 5.0 * PI] {
        let name = format!("three-state-area-{:.0}pi", area / PI);
        out.push(at_least(&name, three_state_efficiency(area), 1.0 - 1e-8));
    }
    match reference_transfer() {
        Ok((bare, shortcut, _)) => {
            out.push(CheckOutcome {
                name: "m21-no-shortcut".into(),
                passed: (0.77..=0.83).contains(&bare),
                measured: bare,
                tolerance: 0.03,
                detail: format!("{bare:.6} in [0.77, 0.83]"),
            });
            out.push(at_least("m21-type2", Ok(shortcut), 1.0 - 1e-6));
        }
        Err(e) => out.push(failed("m21-reference", 0.0, e)),
    }
    match sigma_pi_report(200) {
        Ok(rows) => {
            for r in rows {
                out.push(at_least(
                    &format!("sigma-pi-{}", r.scheme),
                    Ok(r.efficiency),
                    1.0 - 1e-6,
                ));
            }
        }
        Err(e) => out.push(failed("sigma-pi", 1e-6, e)),
    }
    out
}
