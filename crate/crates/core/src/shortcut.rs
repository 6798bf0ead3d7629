//! Shortcut (counterdiabatic) fields.
//!
//! Every shortcut coupling sits on the upper triangle at `(p, q)`, `p < q`,
//! and enters the Hamiltonian as `½ e^{iφ} Ω` with `φ = π/2` unless a phase
//! perturbation says otherwise. Amplitudes are real and signed.
//!
//! Two numeric routes back the closed forms: the full prescription
//! `H_s = iẆW†`, which cancels every nonadiabatic coupling, and the reduced
//! linear system `H_s†|φ₀⟩ = −iWẆ†|φ₀⟩` on a restricted set of couplings,
//! which cancels only those of the dark state.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::MixingState;
use crate::error::{Error, Result};
use crate::linalg::{
    unitarity_defect, ComplexMatrix, ComplexVector, HermitianOperator, UNITARITY_TOL,
};
use crate::scheme::{LevelScheme, SchemeTag};

/// Upper-triangle position `(p, q)` with `p < q`.
pub type Link = (usize, usize);

/// Reduced systems worse conditioned than this are replaced by their
/// continuation from the nearest well-conditioned mixing angle.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Largest accepted least-squares residual of the reduced system, relative to
/// `max(1, ‖rhs‖)`.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Sign relating the M22 excited-link type-I field in the rephased convention
/// to this crate's chain convention. The rephased convention gives bare state
/// `m_e = +1` of the `J_g = 2 ↔ J_e = 2` chain an extra sign, which flips
/// only `Ω^{−1,1}`.
pub const M22_EXCITED_LINK_SIGN: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldsKind {
    TypeI,
    TypeII,
    TypeIII,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShortcutCoupling {
    pub link: Link,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutFields {
    pub kind: FieldsKind,
    pub couplings: Vec<ShortcutCoupling>,
}

impl ShortcutFields {
    fn new(kind: FieldsKind, couplings: &[(Link, f64)]) -> Self {
        Self {
            kind,
            couplings: couplings
                .iter()
                .map(|&(link, amplitude)| ShortcutCoupling { link, amplitude })
                .collect(),
        }
    }

    /// Amplitude on `link`, zero when absent.
    pub fn get(&self, link: Link) -> f64 {
        self.couplings
            .iter()
            .filter(|c| c.link == link)
            .map(|c| c.amplitude)
            .sum()
    }

    pub fn links(&self) -> Vec<Link> {
        self.couplings.iter().map(|c| c.link).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.amplitude.abs())
            .fold(0.0, f64::max)
    }

    fn scaled(mut self, factor: f64) -> Self {
        for c in &mut self.couplings {
            c.amplitude *= factor;
        }
        self
    }
}

/// Label for the field on `link`, e.g. `Q[g-2,g0]`.
pub fn field_label(s: &LevelScheme, link: Link) -> String {
    let l = s.labels();
    format!("Q[{},{}]", l[link.0], l[link.1])
}

/// Which couplings the reduced solver may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskKind {
    /// Independent couplings between adjacent ground sublevels.
    Adjacent,
    /// One shared field on all adjacent ground links plus the end-to-end link.
    SharedWithEnds,
}

/// Unknowns of the reduced system; every link in a group carries the same
/// amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutMask {
    pub groups: Vec<Vec<Link>>,
}

impl ShortcutMask {
    pub fn adjacent(dim: usize) -> Self {
        Self {
            groups: (0..dim.saturating_sub(2))
                .step_by(2)
                .map(|p| vec![(p, p + 2)])
                .collect(),
        }
    }

    pub fn shared_with_ends(dim: usize) -> Self {
        let shared = (0..dim.saturating_sub(2))
            .step_by(2)
            .map(|p| (p, p + 2))
            .collect();
        let mut groups = vec![shared];
        if dim > 3 {
            groups.push(vec![(0, dim - 1)]);
        }
        Self { groups }
    }

    pub fn from_kind(kind: MaskKind, dim: usize) -> Self {
        match kind {
            MaskKind::Adjacent => Self::adjacent(dim),
            MaskKind::SharedWithEnds => Self::shared_with_ends(dim),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShortcutType {
    None,
    TypeI,
    TypeII,
    TypeIII,
    NumericReduced(MaskKind),
    NumericFull,
}

impl ShortcutType {
    pub fn name(self) -> &'static str {
        match self {
            ShortcutType::None => "none",
            ShortcutType::TypeI => "type1",
            ShortcutType::TypeII => "type2",
            ShortcutType::TypeIII => "type3",
            ShortcutType::NumericReduced(MaskKind::Adjacent) => "numeric2",
            ShortcutType::NumericReduced(MaskKind::SharedWithEnds) => "numeric3",
            ShortcutType::NumericFull => "numeric-full",
        }
    }

    pub const ALL: [ShortcutType; 7] = [
        ShortcutType::None,
        ShortcutType::TypeI,
        ShortcutType::TypeII,
        ShortcutType::TypeIII,
        ShortcutType::NumericReduced(MaskKind::Adjacent),
        ShortcutType::NumericReduced(MaskKind::SharedWithEnds),
        ShortcutType::NumericFull,
    ];
}

impl fmt::Display for ShortcutType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShortcutType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "i" | "1" => "type1",
            "ii" | "2" => "type2",
            "iii" | "3" => "type3",
            "numeric" | "numeric-reduced" => "numeric2",
            other => other,
        };
        ShortcutType::ALL
            .into_iter()
            .find(|t| t.name() == alias)
            .ok_or_else(|| Error::InvalidShortcut(format!("unknown shortcut type `{s}`")))
    }
}

/// Active shortcut construction plus the robustness knobs: the phase `φ` of
/// one designated coupling, an amplitude factor `ξ` on one designated
/// coupling, and a factor `β` on the Stokes field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutScheme {
    pub kind: ShortcutType,
    pub phase: f64,
    /// Defaults to the second adjacent ground link (`Ω_{0,2}` in the
    /// M-chains), or the only one in a three-state chain.
    pub phase_link: Option<Link>,
    pub amplitude_scale: f64,
    /// Defaults to the first adjacent ground link (`Ω_{−2,0}`).
    pub scale_link: Option<Link>,
    pub stokes_scale: f64,
}

impl Default for ShortcutScheme {
    fn default() -> Self {
        Self::new(ShortcutType::None)
    }
}

impl ShortcutScheme {
    pub fn new(kind: ShortcutType) -> Self {
        Self {
            kind,
            phase: FRAC_PI_2,
            phase_link: None,
            amplitude_scale: 1.0,
            scale_link: None,
            stokes_scale: 1.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_amplitude_scale(mut self, xi: f64) -> Self {
        self.amplitude_scale = xi;
        self
    }

    pub fn with_stokes_scale(mut self, beta: f64) -> Self {
        self.stokes_scale = beta;
        self
    }

    pub fn phase_link_for(&self, s: &LevelScheme) -> Link {
        self.phase_link
            .unwrap_or(if s.dim() >= 5 { (2, 4) } else { (0, 2) })
    }

    pub fn scale_link_for(&self) -> Link {
        self.scale_link.unwrap_or((0, 2))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("phase", self.phase),
            ("amplitude scale", self.amplitude_scale),
            ("Stokes scale", self.stokes_scale),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidShortcut(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.stokes_scale < 0.0 {
            return Err(Error::InvalidShortcut(format!(
                "Stokes scale must be non-negative, got {}",
                self.stokes_scale
            )));
        }
        Ok(())
    }
}

/// Three-state shortcut `Ω_Q = 2θ̇` on the 1–3 link.
pub fn shortcut_three_state(ms: &MixingState) -> ShortcutFields {
    ShortcutFields::new(FieldsKind::TypeI, &[((0, 2), 2.0 * ms.theta_dot)])
}

fn unsupported(op: &'static str, s: &LevelScheme) -> Error {
    Error::UnsupportedScheme {
        operation: op,
        scheme: s.tag().to_string(),
    }
}

/// Type-I closed forms for the M-chains (`Ω_{−2,0}`, `Ω_{0,2}`,
/// `Ω_{−2,2}`, `Ω^{−1,1}`). For M22 the excited-link field is in the
/// rephased convention described at [`M22_EXCITED_LINK_SIGN`].
pub fn shortcut_type_i_rephased(s: &LevelScheme, ms: &MixingState) -> Result<ShortcutFields> {
    let th = ms.theta;
    let (c2, c4, c6, s2) = (
        (2.0 * th).cos(),
        (4.0 * th).cos(),
        (6.0 * th).cos(),
        (2.0 * th).sin(),
    );
    let r6 = 6.0_f64.sqrt();
    let td = ms.theta_dot;
    let fields = match s.tag() {
        SchemeTag::M21 => {
            let d = (3.0 - c4) * (13.0 + 12.0 * c4);
            [
                r6 * (34.0 + 29.0 * c2 + 26.0 * c4 + 11.0 * c6) / d,
                r6 * (34.0 - 29.0 * c2 + 26.0 * c4 - 11.0 * c6) / d,
                -4.0 * (1.0 + 9.0 * c4) * s2 / d,
                10.0 / (13.0 + 12.0 * c4),
            ]
        }
        SchemeTag::M22 => {
            let d = (4.0 * c4 - 5.0) * (c4 + 5.0);
            [
                r6 * (10.0 + 9.0 * c2 - 14.0 * c4 - c6) / d,
                r6 * (10.0 - 9.0 * c2 - 14.0 * c4 + c6) / d,
                12.0 * (5.0 - 3.0 * c4) * s2 / d,
                6.0 / (4.0 * c4 - 5.0),
            ]
        }
        _ => return Err(unsupported("shortcut_type_i", s)),
    };
    Ok(ShortcutFields::new(
        FieldsKind::TypeI,
        &[
            ((0, 2), fields[0] * td),
            ((2, 4), fields[1] * td),
            ((0, 4), fields[2] * td),
            ((1, 3), fields[3] * td),
        ],
    ))
}

/// Type-I (full-prescription) fields in the chain convention. For the
/// three-state chain this is `Ω_Q = 2θ̇`.
pub fn shortcut_type_i(s: &LevelScheme, ms: &MixingState) -> Result<ShortcutFields> {
    if s.tag() == SchemeTag::ThreeState {
        return Ok(shortcut_three_state(ms));
    }
    let mut f = shortcut_type_i_rephased(s, ms)?;
    if s.tag() == SchemeTag::M22 {
        for c in f.couplings.iter_mut().filter(|c| c.link == (1, 3)) {
            c.amplitude *= M22_EXCITED_LINK_SIGN;
        }
    }
    Ok(f)
}

/// Type-II fields: independent couplings between adjacent dark-state
/// sublevels.
pub fn shortcut_type_ii(s: &LevelScheme, ms: &MixingState) -> Result<ShortcutFields> {
    let th = ms.theta;
    let (c2, c4) = ((2.0 * th).cos(), (4.0 * th).cos());
    let (ct2, ct4) = (th.cos().powi(2), th.cos().powi(4));
    let td = ms.theta_dot;
    let r2 = 2.0_f64.sqrt();
    let r6 = 6.0_f64.sqrt();
    let (a, b) = match s.tag() {
        SchemeTag::ThreeState => return Ok(shortcut_three_state(ms)),
        SchemeTag::M21 => {
            let k = 4.0 * (2.0_f64 / 3.0).sqrt() / (3.0 - c4);
            (k * (2.0 + c2), k * (2.0 - c2))
        }
        SchemeTag::M22 => {
            let k = -4.0 * r6 / (5.0 + c4);
            (k * (2.0 - c2), k * (2.0 + c2))
        }
        SchemeTag::SigmaPi22 => (
            4.0 * 3.0_f64.sqrt() / (3.0 - ct4),
            2.0 * r2 * (3.0 - ct2) / (3.0 - ct4),
        ),
        SchemeTag::SigmaPi3212 => (
            -4.0 * r6 / (3.0 + ct4),
            -2.0 * r2 * (3.0 + ct2) / (3.0 + ct4),
        ),
        SchemeTag::GenericChain => return Err(unsupported("shortcut_type_ii", s)),
    };
    Ok(ShortcutFields::new(
        FieldsKind::TypeII,
        &[((0, 2), a * td), ((2, 4), b * td)],
    ))
}

/// Type-III fields: one field shared by both adjacent ground links plus an
/// independent end-to-end coupling.
pub fn shortcut_type_iii(s: &LevelScheme, ms: &MixingState) -> Result<ShortcutFields> {
    let th = ms.theta;
    let c4 = (4.0 * th).cos();
    let s2 = (2.0 * th).sin();
    let td = ms.theta_dot;
    let r6 = 6.0_f64.sqrt();
    let (shared, ends) = match s.tag() {
        SchemeTag::M21 => (4.0 * r6 / (3.0 - c4), 8.0 * s2 / (3.0 - c4)),
        SchemeTag::M22 => (-4.0 * r6 / (5.0 + c4), -8.0 * s2 / (5.0 + c4)),
        _ => return Err(unsupported("shortcut_type_iii", s)),
    };
    Ok(ShortcutFields::new(
        FieldsKind::TypeIII,
        &[
            ((0, 2), shared * td),
            ((2, 4), shared * td),
            ((0, 4), ends * td),
        ],
    ))
}

/// Full prescription `H_s = iẆW†`.
pub fn numeric_full_shortcut(
    w: &ComplexMatrix,
    w_dot: &ComplexMatrix,
) -> Result<HermitianOperator> {
    if w.shape() != w_dot.shape() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            got: w_dot.nrows(),
        });
    }
    let deviation = unitarity_defect(w);
    if deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let hs = w_dot * w.adjoint() * Complex64::new(0.0, 1.0);
    HermitianOperator::new(hs)
}

/// Reads a chain-convention shortcut out of a numeric `H_s`: the amplitude on
/// `(p, q)` is `2 Im H_s[p][q]` for every same-parity pair.
pub fn fields_from_operator(hs: &HermitianOperator) -> ShortcutFields {
    let n = hs.dim();
    let mut couplings = Vec::new();
    for p in 0..n {
        for q in ((p + 2)..n).step_by(2) {
            couplings.push(((p, q), 2.0 * hs.get(p, q).im));
        }
    }
    ShortcutFields::new(FieldsKind::Numeric, &couplings)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedShortcut {
    pub fields: ShortcutFields,
    pub residual: f64,
    pub condition: f64,
    /// Mixing angle actually solved at when the requested one was
    /// ill-conditioned.
    pub continued_from: Option<f64>,
}

/// Solves `H_s†|φ₀⟩ = −iWẆ†|φ₀⟩` for real amplitudes on the masked,
/// i-phased couplings (real and imaginary parts stacked, least squares).
pub fn numeric_reduced_shortcut(
    mask: &ShortcutMask,
    dark: &ComplexVector,
    w: &ComplexMatrix,
    w_dot: &ComplexMatrix,
) -> Result<ReducedShortcut> {
    let n = dark.len();
    if w.nrows() != n || w_dot.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.nrows(),
        });
    }
    if mask.groups.is_empty() {
        return Err(Error::InvalidShortcut("empty shortcut mask".into()));
    }
    for &(p, q) in mask.groups.iter().flatten() {
        if !(p < q && q < n) {
            return Err(Error::InvalidShortcut(format!(
                "mask link ({p}, {q}) outside the chain"
            )));
        }
    }
    let rhs = w * w_dot.adjoint() * dark * Complex64::new(0.0, -1.0);

    // Column g is G_g|φ₀⟩ with G = ½(i|p⟩⟨q| − i|q⟩⟨p|) summed over the group.
    let m = mask.groups.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, m);
    for (g, links) in mask.groups.iter().enumerate() {
        let mut col = ComplexVector::zeros(n);
        for &(p, q) in links {
            col[p] += Complex64::new(0.0, 0.5) * dark[q];
            col[q] += Complex64::new(0.0, -0.5) * dark[p];
        }
        for r in 0..n {
            a[(r, g)] = col[r].re;
            a[(n + r, g)] = col[r].im;
        }
    }
    let b = DVector::<f64>::from_fn(2 * n, |r, _| if r < n { rhs[r].re } else { rhs[r - n].im });

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let x = svd
        .solve(&b, smax * 1e-15)
        .map_err(|e| Error::InvalidShortcut(e.to_string()))?;
    let residual = (&a * &x - &b).norm();
    if residual > RESIDUAL_LIMIT * b.norm().max(1.0) {
        return Err(Error::InconsistentShortcut { residual });
    }
    let couplings: Vec<(Link, f64)> = mask
        .groups
        .iter()
        .zip(x.iter())
        .flat_map(|(links, &v)| links.iter().map(move |&l| (l, v)))
        .collect();
    Ok(ReducedShortcut {
        fields: ShortcutFields::new(FieldsKind::Numeric, &couplings),
        residual,
        condition,
        continued_from: None,
    })
}

fn reduced_per_unit_rate(
    s: &LevelScheme,
    mask: &ShortcutMask,
    theta: f64,
) -> Result<ReducedShortcut> {
    let (frame, dw) = s.unit_frame(theta)?;
    let dark = frame.column(s.dark_index());
    numeric_reduced_shortcut(mask, &dark, &frame.vectors, &dw)
}

/// Reduced-shortcut amplitudes at a mixing state. The eigenframe depends on
/// θ only, so the solve is done per unit `θ̇` and rescaled. Where the system
/// is singular or worse conditioned than [`CONDITION_LIMIT`] (near θ = 0 or
/// π/2) the solution is continued from the nearest well-conditioned angle
/// towards π/4.
pub fn reduced_shortcut_fields(
    s: &LevelScheme,
    mask: &ShortcutMask,
    ms: &MixingState,
) -> Result<ReducedShortcut> {
    let usable = |r: &Result<ReducedShortcut>| match r {
        Ok(sol) => sol.condition <= CONDITION_LIMIT,
        Err(Error::DegenerateFrame(_)) => false,
        Err(_) => true,
    };
    let mut sol = reduced_per_unit_rate(s, mask, ms.theta);
    if !usable(&sol) {
        let dir = if ms.theta < FRAC_PI_4 { 1.0 } else { -1.0 };
        let mut step = 1e-9;
        loop {
            let th = ms.theta + dir * step;
            if (th - FRAC_PI_4) * dir > 0.0 {
                return Err(Error::InvalidShortcut(format!(
                    "reduced system ill-conditioned on the whole path from θ = {}",
                    ms.theta
                )));
            }
            let attempt = reduced_per_unit_rate(s, mask, th);
            if usable(&attempt) {
                sol = attempt.map(|mut r| {
                    r.continued_from = Some(th);
                    r
                });
                break;
            }
            step *= 2.0;
        }
    }
    let mut sol = sol?;
    sol.fields = sol.fields.scaled(ms.theta_dot);
    Ok(sol)
}

/// Full-prescription amplitudes at a mixing state (per unit `θ̇`, rescaled).
pub fn full_shortcut_fields(s: &LevelScheme, ms: &MixingState) -> Result<ShortcutFields> {
    let (frame, dw) = s.unit_frame(ms.theta)?;
    let hs = numeric_full_shortcut(&frame.vectors, &dw)?;
    Ok(fields_from_operator(&hs).scaled(ms.theta_dot))
}

/// Shortcut amplitudes for `kind` at one mixing state; `None` when no
/// shortcut is active.
pub fn shortcut_fields(
    s: &LevelScheme,
    kind: ShortcutType,
    ms: &MixingState,
) -> Result<Option<ShortcutFields>> {
    Ok(Some(match kind {
        ShortcutType::None => return Ok(None),
        ShortcutType::TypeI => shortcut_type_i(s, ms)?,
        ShortcutType::TypeII => shortcut_type_ii(s, ms)?,
        ShortcutType::TypeIII => shortcut_type_iii(s, ms)?,
        ShortcutType::NumericReduced(mk) => {
            reduced_shortcut_fields(s, &ShortcutMask::from_kind(mk, s.dim()), ms)?.fields
        }
        ShortcutType::NumericFull => full_shortcut_fields(s, ms)?,
    }))
}

/// `H' = H_bare + H_s` with each coupling entering as `½ ξ e^{iφ} Ω` above
/// the diagonal (and its conjugate below).
pub fn assemble_total(
    s: &LevelScheme,
    bare: &HermitianOperator,
    fields: &ShortcutFields,
    sc: &ShortcutScheme,
) -> Result<HermitianOperator> {
    let n = s.dim();
    if bare.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bare.dim(),
        });
    }
    let phase_link = sc.phase_link_for(s);
    let scale_link = sc.scale_link_for();
    let mut h = bare.clone();
    for c in &fields.couplings {
        let (p, q) = c.link;
        if !(p < q && q < n) {
            return Err(Error::InvalidShortcut(format!(
                "coupling ({p}, {q}) does not fit a {n}-state chain"
            )));
        }
        let phase = if c.link == phase_link {
            sc.phase
        } else {
            FRAC_PI_2
        };
        let scale = if c.link == scale_link {
            sc.amplitude_scale
        } else {
            1.0
        };
        h.add_coupling(
            p,
            q,
            Complex64::from_polar(0.5 * scale * c.amplitude, phase),
        );
    }
    Ok(h)
}
