//! Chain-wise level schemes: Clebsch-Gordan weighted couplings, the bare
//! resonant Hamiltonian, and the closed-form dark states, spectra and
//! nonadiabatic couplings of the five-state M-chains.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, parallel_transport_derivative, ComplexMatrix, ComplexVector, EigenFrame,
    HermitianOperator,
};

/// Radicands in the closed-form couplings below this are treated as zero.
pub const SINGULAR_RADICAND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeTag {
    ThreeState,
    /// `J_g = 2 ↔ J_e = 1`, σ⁺σ⁻ M-chain.
    M21,
    /// `J_g = 2 ↔ J_e = 2`, σ⁺σ⁻ M-chain.
    M22,
    /// `J_g = 2 ↔ J_e = 2`, σ⁺π chain from `m_g = 0`.
    SigmaPi22,
    /// `J_g = 3/2 ↔ J_e = 1/2`, σ⁺π chain from `m_g = −3/2`.
    SigmaPi3212,
    GenericChain,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 6] = [
        SchemeTag::ThreeState,
        SchemeTag::M21,
        SchemeTag::M22,
        SchemeTag::SigmaPi22,
        SchemeTag::SigmaPi3212,
        SchemeTag::GenericChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeTag::ThreeState => "three",
            SchemeTag::M21 => "m21",
            SchemeTag::M22 => "m22",
            SchemeTag::SigmaPi22 => "sigmapi22",
            SchemeTag::SigmaPi3212 => "sigmapi3212",
            SchemeTag::GenericChain => "generic",
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        SchemeTag::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .or(match key.as_str() {
                "threestate" | "3" => Some(SchemeTag::ThreeState),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidScheme(format!("unknown scheme tag `{s}`")))
    }
}

/// Which field drives a chain link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Pump,
    Stokes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub cg: f64,
    pub field: Field,
}

/// An odd, resonant, nearest-neighbour chain. State `k` (0-based) couples to
/// `k + 1` with Rabi frequency `ξ_k Ω_P` or `ξ_k Ω_S`; even indices are the
/// ground (dark-state) sublevels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    tag: SchemeTag,
    links: Vec<ChainLink>,
    labels: Vec<String>,
}

fn alternating(cg: &[f64]) -> Vec<ChainLink> {
    cg.iter()
        .enumerate()
        .map(|(k, &cg)| ChainLink {
            cg,
            field: if k % 2 == 0 {
                Field::Pump
            } else {
                Field::Stokes
            },
        })
        .collect()
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl LevelScheme {
    pub fn three_state() -> Self {
        Self {
            tag: SchemeTag::ThreeState,
            links: alternating(&[1.0, 1.0]),
            labels: labels(&["1", "2", "3"]),
        }
    }

    pub fn m21() -> Self {
        Self {
            tag: SchemeTag::M21,
            links: alternating(&[
                (3.0_f64 / 5.0).sqrt(),
                (1.0_f64 / 10.0).sqrt(),
                (1.0_f64 / 10.0).sqrt(),
                (3.0_f64 / 5.0).sqrt(),
            ]),
            labels: labels(&["g-2", "e-1", "g0", "e+1", "g+2"]),
        }
    }

    pub fn m22() -> Self {
        Self {
            tag: SchemeTag::M22,
            links: alternating(&[
                -(1.0_f64 / 3.0).sqrt(),
                (1.0_f64 / 2.0).sqrt(),
                -(1.0_f64 / 2.0).sqrt(),
                (1.0_f64 / 3.0).sqrt(),
            ]),
            labels: labels(&["g-2", "e-1", "g0", "e+1", "g+2"]),
        }
    }

    pub fn sigma_pi_22() -> Self {
        Self {
            tag: SchemeTag::SigmaPi22,
            links: alternating(&[
                (1.0_f64 / 2.0).sqrt(),
                (1.0_f64 / 6.0).sqrt(),
                (1.0_f64 / 3.0).sqrt(),
                (2.0_f64 / 3.0).sqrt(),
            ]),
            labels: labels(&["g0", "e+1", "g+1", "e+2", "g+2"]),
        }
    }

    pub fn sigma_pi_3212() -> Self {
        Self {
            tag: SchemeTag::SigmaPi3212,
            links: alternating(&[
                (1.0_f64 / 2.0).sqrt(),
                -(1.0_f64 / 3.0).sqrt(),
                (1.0_f64 / 6.0).sqrt(),
                -(1.0_f64 / 3.0).sqrt(),
            ]),
            labels: labels(&["g-3/2", "e-1/2", "g-1/2", "e+1/2", "g+1/2"]),
        }
    }

    /// Chain with the given coefficients, pump on even links and Stokes on odd
    /// ones. The number of coefficients must be even and nonzero (odd chain).
    pub fn generic(cg: Vec<f64>) -> Result<Self> {
        if cg.is_empty() || !cg.len().is_multiple_of(2) {
            return Err(Error::InvalidScheme(format!(
                "a resonant chain needs an odd number of states; got {} couplings",
                cg.len()
            )));
        }
        if let Some(x) = cg.iter().find(|x| !x.is_finite() || **x == 0.0) {
            return Err(Error::InvalidScheme(format!(
                "coupling coefficients must be finite and nonzero, got {x}"
            )));
        }
        let n = cg.len() + 1;
        Ok(Self {
            tag: SchemeTag::GenericChain,
            links: alternating(&cg),
            labels: (1..=n).map(|k| k.to_string()).collect(),
        })
    }

    /// Built-in scheme for `tag`; `GenericChain` needs coefficients.
    pub fn from_tag(tag: SchemeTag) -> Result<Self> {
        match tag {
            SchemeTag::ThreeState => Ok(Self::three_state()),
            SchemeTag::M21 => Ok(Self::m21()),
            SchemeTag::M22 => Ok(Self::m22()),
            SchemeTag::SigmaPi22 => Ok(Self::sigma_pi_22()),
            SchemeTag::SigmaPi3212 => Ok(Self::sigma_pi_3212()),
            SchemeTag::GenericChain => Err(Error::InvalidScheme(
                "generic chain requires explicit coupling coefficients".into(),
            )),
        }
    }

    pub fn tag(&self) -> SchemeTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.links.len() + 1
    }

    pub fn links(&self) -> &[ChainLink] {
        &self.links
    }

    pub fn cg(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.cg).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn initial_index(&self) -> usize {
        0
    }

    pub fn target_index(&self) -> usize {
        self.dim() - 1
    }

    /// Position of the zero eigenvalue in ascending order.
    pub fn dark_index(&self) -> usize {
        self.dim() / 2
    }

    /// Ground (dark-state) sublevels: the even chain positions.
    pub fn ground_indices(&self) -> impl Iterator<Item = usize> {
        (0..self.dim()).step_by(2)
    }

    /// Tridiagonal `H` with `H[k][k+1] = ξ_k Ω_{P|S} / 2` and zero diagonal.
    pub fn build_hamiltonian(&self, pump: f64, stokes: f64) -> HermitianOperator {
        let mut h = HermitianOperator::zeros(self.dim());
        for (k, link) in self.links.iter().enumerate() {
            let f = match link.field {
                Field::Pump => pump,
                Field::Stokes => stokes,
            };
            h.set_coupling(k, k + 1, Complex64::new(0.5 * link.cg * f, 0.0));
        }
        h
    }

    /// `H / Λ` at mixing angle θ. The eigenvectors of the chain depend on θ
    /// only; `Λ` merely scales the spectrum.
    pub fn unit_hamiltonian(&self, theta: f64) -> HermitianOperator {
        self.build_hamiltonian(theta.sin(), theta.cos())
    }

    /// `∂(H/Λ)/∂θ`.
    pub fn unit_hamiltonian_derivative(&self, theta: f64) -> HermitianOperator {
        self.build_hamiltonian(theta.cos(), -theta.sin())
    }

    /// Eigenframe of `H/Λ` at θ together with `∂W/∂θ` in the
    /// parallel-transport gauge. Multiply values by `Λ` and the derivative by
    /// `θ̇` for the physical quantities.
    pub fn unit_frame(&self, theta: f64) -> Result<(EigenFrame, ComplexMatrix)> {
        let frame = eig_hermitian(&self.unit_hamiltonian(theta));
        let dw = parallel_transport_derivative(&frame, &self.unit_hamiltonian_derivative(theta))?;
        Ok((frame, dw))
    }

    fn unsupported(&self, operation: &'static str) -> Error {
        Error::UnsupportedScheme {
            operation,
            scheme: self.tag.to_string(),
        }
    }
}

/// Closed-form spectrum of an M-chain in ascending order
/// `λ₋₊ < λ₋₋ < 0 < λ₊₋ < λ₊₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSpectrum {
    pub values: [f64; 5],
    /// `r = √(13 + 12 cos4θ)` for M21, `s = √(5 − 4 cos4θ)` for M22.
    pub aux: f64,
}

pub fn analytic_spectrum(s: &LevelScheme, theta: f64, rms: f64) -> Result<AnalyticSpectrum> {
    let c4 = (4.0 * theta).cos();
    let (aux, base, denom) = match s.tag {
        SchemeTag::M21 => ((13.0 + 12.0 * c4).sqrt(), 7.0, 4.0 * 5.0_f64.sqrt()),
        SchemeTag::M22 => ((5.0 - 4.0 * c4).sqrt(), 5.0, 4.0 * 3.0_f64.sqrt()),
        _ => return Err(s.unsupported("analytic_spectrum")),
    };
    let inner = rms * (base - aux).sqrt() / denom;
    let outer = rms * (base + aux).sqrt() / denom;
    Ok(AnalyticSpectrum {
        values: [-outer, -inner, 0.0, inner, outer],
        aux,
    })
}

/// Zero-eigenvalue eigenstate with no excited-sublevel amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct DarkState {
    pub amplitudes: ComplexVector,
}

fn real_vector(xs: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(xs.len(), xs.iter().map(|&x| Complex64::new(x, 0.0)))
}

/// Closed-form dark state for the three-state chain and both M-chains.
pub fn dark_state(s: &LevelScheme, theta: f64) -> Result<DarkState> {
    let (c, sn) = (theta.cos(), theta.sin());
    let amplitudes = match s.tag {
        SchemeTag::ThreeState => real_vector(&[c, 0.0, -sn]),
        SchemeTag::M21 => {
            let norm = (3.0 - (4.0 * theta).cos()).sqrt();
            let r2 = 2.0_f64.sqrt();
            real_vector(&[
                r2 * c * c / norm,
                0.0,
                -(3.0_f64).sqrt() * (2.0 * theta).sin() / norm,
                0.0,
                r2 * sn * sn / norm,
            ])
        }
        SchemeTag::M22 => {
            let norm = (5.0 + (4.0 * theta).cos()).sqrt();
            let r6 = 6.0_f64.sqrt();
            real_vector(&[
                r6 * c * c / norm,
                0.0,
                (2.0 * theta).sin() / norm,
                0.0,
                r6 * sn * sn / norm,
            ])
        }
        _ => return Err(s.unsupported("dark_state")),
    };
    Ok(DarkState { amplitudes })
}

/// Dark state of any chain as the zero-eigenvalue eigenvector of `H/Λ`,
/// sign-fixed so that its first ground amplitude is non-negative (it equals
/// `+|1⟩` at θ = 0 as the closed forms do).
pub fn numeric_dark_state(s: &LevelScheme, theta: f64) -> DarkState {
    let frame = eig_hermitian(&s.unit_hamiltonian(theta));
    let mut v = frame.column(s.dark_index());
    let lead = v
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-12)
        .unwrap_or(Complex64::new(1.0, 0.0));
    let mut phase = lead.conj() / lead.norm();
    if v[0].norm() > 1e-12 {
        phase = v[0].conj() / v[0].norm();
    }
    for z in v.iter_mut() {
        *z *= phase;
        // the chain is real; drop roundoff in the imaginary part
        if z.im.abs() < 1e-15 {
            z.im = 0.0;
        }
    }
    for k in (1..s.dim()).step_by(2) {
        v[k] = Complex64::new(0.0, 0.0);
    }
    let n = v.norm();
    DarkState {
        amplitudes: v / Complex64::new(n, 0.0),
    }
}

/// `χ_xy = −i⟨φ_xy|φ̇₀⟩` between the dark state and the four bright states.
/// The closed forms satisfy `χ₋₋ = χ₊₋` and `χ₊₊ = χ₋₊`; the sign of each
/// depends on the phase of the bright eigenvector, which they leave open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonadiabaticCouplings {
    pub minus_minus: Complex64,
    pub plus_minus: Complex64,
    pub plus_plus: Complex64,
    pub minus_plus: Complex64,
}

impl NonadiabaticCouplings {
    /// Couplings indexed like the ascending eigenvalues, with the dark slot
    /// (index 2) zero: `[χ₋₊, χ₋₋, 0, χ₊₋, χ₊₊]`.
    pub fn by_eigen_index(&self) -> [Complex64; 5] {
        [
            self.minus_plus,
            self.minus_minus,
            Complex64::new(0.0, 0.0),
            self.plus_minus,
            self.plus_plus,
        ]
    }
}

fn checked_sqrt(radicand: f64, theta: f64, what: &str) -> Result<f64> {
    if radicand < SINGULAR_RADICAND {
        return Err(Error::SingularPoint {
            theta,
            detail: format!("{what} radicand {radicand:.3e}"),
        });
    }
    Ok(radicand.sqrt())
}

pub fn analytic_nac(s: &LevelScheme, theta: f64, theta_dot: f64) -> Result<NonadiabaticCouplings> {
    let (lower, upper) = nac_pairs(s, theta)?;
    let lower = Complex64::new(0.0, lower? * theta_dot);
    let upper = Complex64::new(0.0, upper? * theta_dot);
    Ok(NonadiabaticCouplings {
        minus_minus: lower,
        plus_minus: lower,
        plus_plus: upper,
        minus_plus: upper,
    })
}

/// Imaginary parts of `χ₋₋ = χ₊₋` and `χ₊₊ = χ₋₊` per unit `θ̇`, each
/// failing on its own singular points.
fn nac_pairs(s: &LevelScheme, theta: f64) -> Result<(Result<f64>, Result<f64>)> {
    let c2 = (2.0 * theta).cos();
    let c4 = (4.0 * theta).cos();
    let ct = theta.cos();
    let r6 = 6.0_f64.sqrt();
    match s.tag {
        SchemeTag::M21 => {
            let r = (13.0 + 12.0 * c4).sqrt();
            let lower = checked_sqrt(
                (3.0 - c4) * (7.0 - r) * (r * r + 5.0 * r * c2),
                theta,
                "chi(--)",
            )
            .map(|d| -r6 * (1.0 + 4.0 * c2 + r) * ct / d);
            let upper = checked_sqrt(
                (3.0 - c4) * (7.0 + r) * (r * r - 5.0 * r * c2),
                theta,
                "chi(++)",
            )
            .map(|d| -r6 * (1.0 + 4.0 * c2 - r) * ct / d);
            Ok((lower, upper))
        }
        SchemeTag::M22 => {
            let sx = (5.0 - 4.0 * c4).sqrt();
            let lower = checked_sqrt(
                (5.0 + c4) * (5.0 - sx) * (sx * sx - sx * c2),
                theta,
                "chi(--)",
            )
            .map(|d| -r6 * (3.0 - 4.0 * c2 + sx) * ct / d);
            let upper = checked_sqrt(
                (5.0 + c4) * (5.0 + sx) * (sx * sx + sx * c2),
                theta,
                "chi(++)",
            )
            .map(|d| -r6 * (3.0 - 4.0 * c2 - sx) * ct / d);
            Ok((lower, upper))
        }
        _ => Err(s.unsupported("analytic_nac")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn coupling(h: &HermitianOperator, k: usize) -> f64 {
        h.get(k, k + 1).re
    }

    #[test]
    fn three_state_stokes_only() {
        let h = LevelScheme::three_state().build_hamiltonian(0.0, 1.0);
        assert_eq!(h.get(0, 1).re, 0.0);
        assert_eq!(h.get(1, 2).re, 0.5);
        assert_eq!(h.get(2, 1).re, 0.5);
        for k in 0..3 {
            assert_eq!(h.get(k, k).re, 0.0);
        }
    }

    #[test]
    fn m21_couplings() {
        let (p, s) = (1.3, 0.7);
        let h = LevelScheme::m21().build_hamiltonian(p, s);
        let want = [
            (0.6_f64).sqrt() * p,
            (0.1_f64).sqrt() * s,
            (0.1_f64).sqrt() * p,
            (0.6_f64).sqrt() * s,
        ];
        for (k, w) in want.iter().enumerate() {
            assert_abs_diff_eq!(coupling(&h, k), w / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn m22_couplings_keep_signs() {
        let (p, s) = (1.3, 0.7);
        let h = LevelScheme::m22().build_hamiltonian(p, s);
        let want = [
            -(1.0_f64 / 3.0).sqrt() * p,
            (0.5_f64).sqrt() * s,
            -(0.5_f64).sqrt() * p,
            (1.0_f64 / 3.0).sqrt() * s,
        ];
        for (k, w) in want.iter().enumerate() {
            assert_abs_diff_eq!(coupling(&h, k), w / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn generic_chain_rejects_even_dimension() {
        assert!(LevelScheme::generic(vec![1.0, 1.0, 1.0]).is_err());
        assert!(LevelScheme::generic(vec![]).is_err());
        assert_eq!(LevelScheme::generic(vec![1.0; 8]).unwrap().dim(), 9);
    }

    #[test]
    fn tags_parse() {
        for tag in SchemeTag::ALL {
            assert_eq!(tag.name().parse::<SchemeTag>().unwrap(), tag);
        }
        assert_eq!("M-21".parse::<SchemeTag>().unwrap(), SchemeTag::M21);
        assert!("m23".parse::<SchemeTag>().is_err());
    }

    #[test]
    fn m21_spectrum_at_zero() {
        let sp = analytic_spectrum(&LevelScheme::m21(), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(sp.aux, 5.0, epsilon = 1e-15);
        let d = 4.0 * 5.0_f64.sqrt();
        assert_abs_diff_eq!(sp.values[3], 2.0_f64.sqrt() / d, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.values[4], 12.0_f64.sqrt() / d, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.values[3], 0.158_113_883, epsilon = 1e-9);
        assert_abs_diff_eq!(sp.values[4], 0.387_298_335, epsilon = 1e-9);
        // and the numeric decomposition agrees
        let f = eig_hermitian(&LevelScheme::m21().unit_hamiltonian(0.0));
        for k in 0..5 {
            assert_abs_diff_eq!(f.values[k], sp.values[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn m21_spectrum_at_quarter() {
        let sp = analytic_spectrum(&LevelScheme::m21(), FRAC_PI_4, 1.0).unwrap();
        assert_abs_diff_eq!(sp.aux, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            sp.values[4],
            8.0_f64.sqrt() / (4.0 * 5.0_f64.sqrt()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(sp.values[4], 0.316_227_766, epsilon = 1e-9);
    }

    #[test]
    fn m22_spectrum_at_quarter() {
        let sp = analytic_spectrum(&LevelScheme::m22(), FRAC_PI_4, 1.0).unwrap();
        assert_abs_diff_eq!(sp.aux, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sp.values[3],
            2.0_f64.sqrt() / (4.0 * 3.0_f64.sqrt()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(sp.values[3], 0.204_124_145, epsilon = 1e-9);
    }

    #[test]
    fn spectrum_unsupported() {
        assert!(matches!(
            analytic_spectrum(&LevelScheme::three_state(), 0.1, 1.0),
            Err(Error::UnsupportedScheme { .. })
        ));
    }

    #[test]
    fn dark_state_endpoints() {
        for s in [LevelScheme::m21(), LevelScheme::m22()] {
            let a = dark_state(&s, 0.0).unwrap().amplitudes;
            let b = dark_state(&s, FRAC_PI_2).unwrap().amplitudes;
            for k in 0..5 {
                assert_abs_diff_eq!(a[k].re, if k == 0 { 1.0 } else { 0.0 }, epsilon = 1e-15);
                assert_abs_diff_eq!(b[k].re, if k == 4 { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn m21_dark_state_quarter() {
        let a = dark_state(&LevelScheme::m21(), FRAC_PI_4)
            .unwrap()
            .amplitudes;
        let want = [
            1.0 / (2.0 * 2.0_f64.sqrt()),
            0.0,
            -(3.0_f64).sqrt() / 2.0,
            0.0,
            1.0 / (2.0 * 2.0_f64.sqrt()),
        ];
        for k in 0..5 {
            assert_abs_diff_eq!(a[k].re, want[k], epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a[2].re, -0.866_025_404, epsilon = 1e-9);
    }

    #[test]
    fn numeric_dark_state_matches_closed_form() {
        for s in [
            LevelScheme::three_state(),
            LevelScheme::m21(),
            LevelScheme::m22(),
        ] {
            for k in 1..20 {
                let th = k as f64 * FRAC_PI_2 / 20.0;
                let a = dark_state(&s, th).unwrap().amplitudes;
                let b = numeric_dark_state(&s, th).amplitudes;
                assert!((a - b).norm() < 1e-12, "{} θ={th}", s.tag());
            }
        }
    }

    #[test]
    fn nac_vanishes_where_cos_theta_does() {
        // At θ = π/2 one pair is 0/0 (singular) and the other vanishes.
        let (lower, upper) = nac_pairs(&LevelScheme::m21(), FRAC_PI_2).unwrap();
        assert!(matches!(lower, Err(Error::SingularPoint { .. })));
        assert!(upper.unwrap().abs() < 1e-15);
        let (lower, upper) = nac_pairs(&LevelScheme::m22(), FRAC_PI_2).unwrap();
        assert!(lower.unwrap().abs() < 1e-15);
        assert!(matches!(upper, Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn m21_nac_at_quarter() {
        let x = analytic_nac(&LevelScheme::m21(), FRAC_PI_4, 1.0).unwrap();
        assert_abs_diff_eq!(
            x.minus_minus.im,
            -std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_eq!(x.minus_minus.re, 0.0);
        assert_eq!(x.minus_minus, x.plus_minus);
        assert_eq!(x.plus_plus, x.minus_plus);
    }

    #[test]
    fn m21_nac_singular_at_pi_half() {
        assert!(matches!(
            analytic_nac(&LevelScheme::m21(), FRAC_PI_2, 1.0),
            Err(Error::SingularPoint { .. })
        ));
        assert!(matches!(
            analytic_nac(&LevelScheme::m21(), 0.0, 1.0),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn unit_frame_scales_with_rms() {
        let s = LevelScheme::m22();
        let th = 0.37;
        let (unit, _) = s.unit_frame(th).unwrap();
        let full = eig_hermitian(&s.build_hamiltonian(4.0 * th.sin(), 4.0 * th.cos()));
        for k in 0..5 {
            assert_abs_diff_eq!(full.values[k], 4.0 * unit.values[k], epsilon = 1e-13);
        }
    }
}
