//! Dense complex linear algebra for the small (N ≤ 9) Hermitian problems that
//! appear in chain-wise STIRAP: eigendecomposition with a deterministic
//! ordering and gauge, eigenframe tracking along a path, and exact unitary
//! time steps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVector = DVector<Complex64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest tolerated asymmetry `|H_jk − conj(H_kj)|`, relative to
/// `max(1, max|H_jk|)`.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Two overlaps closer than this make column matching ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-6;

/// Smallest eigenvalue gap accepted by [`parallel_transport_derivative`].
pub const MIN_GAP: f64 = 1e-12;

/// Largest accepted `‖W†W − 1‖_max` for an eigenvector matrix.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A complex Hermitian matrix. The full matrix is stored and every mutator
/// keeps `H[j][k] == conj(H[k][j])` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Accepts a matrix whose asymmetry is within [`HERMITICITY_TOL`] and
    /// stores its exactly Hermitian part `(M + M†)/2`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let asymmetry = asymmetry(&matrix);
        if asymmetry > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { asymmetry });
        }
        let mut out = Self::zeros(rows);
        for j in 0..rows {
            out.matrix[(j, j)] = Complex64::new(matrix[(j, j)].re, 0.0);
            for k in (j + 1)..rows {
                let v = 0.5 * (matrix[(j, k)] + matrix[(k, j)].conj());
                out.set_coupling(j, k, v);
            }
        }
        Ok(out)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Sets element `(row, col)` to `value` and `(col, row)` to its conjugate.
    /// Panics if `row == col`; use [`Self::set_diagonal`] for those.
    pub fn set_coupling(&mut self, row: usize, col: usize, value: Complex64) {
        assert_ne!(row, col, "coupling must be off-diagonal");
        self.matrix[(row, col)] = value;
        self.matrix[(col, row)] = value.conj();
    }

    pub fn add_coupling(&mut self, row: usize, col: usize, value: Complex64) {
        let v = self.matrix[(row, col)] + value;
        self.set_coupling(row, col, v);
    }

    pub fn set_diagonal(&mut self, idx: usize, value: f64) {
        self.matrix[(idx, idx)] = Complex64::new(value, 0.0);
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn asymmetry(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending unless reordered by [`gauge_align`]) and the
/// unitary matrix whose columns are the matching eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
    /// Spectral auxiliary (`r` or `s` of the five-state M-chains) when the
    /// frame comes from a closed form.
    pub aux: Option<f64>,
}

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, k: usize) -> ComplexVector {
        self.vectors.column(k).into_owned()
    }

    /// `‖W†W − 1‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.vectors)
    }

    /// Reconstructs `W diag(λ) W†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut d = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            d[(k, k)] = Complex64::new(l, 0.0);
        }
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn unitarity_defect(w: &ComplexMatrix) -> f64 {
    let n = w.ncols();
    let g = w.adjoint() * w - ComplexMatrix::identity(n, n);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian eigendecomposition with ascending eigenvalues and the canonical
/// gauge: every eigenvector's largest-magnitude component (first one, within
/// 1e-9, on ties) is made real and positive.
pub fn eig_hermitian(h: &HermitianOperator) -> EigenFrame {
    let n = h.dim();
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let norm = col.norm();
        let phase = canonical_phase(col.iter().copied());
        for r in 0..n {
            vectors[(r, dst)] = col[r] * phase / norm;
        }
    }
    EigenFrame {
        values,
        vectors,
        aux: None,
    }
}

/// Unit phase that makes the dominant component real and positive.
fn canonical_phase(col: impl Iterator<Item = Complex64> + Clone) -> Complex64 {
    let max = col.clone().map(|z| z.norm()).fold(0.0, f64::max);
    let lead = col
        .into_iter()
        .find(|z| z.norm() >= max - 1e-9)
        .unwrap_or(Complex64::new(1.0, 0.0));
    if lead.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        lead.conj() / lead.norm()
    }
}

/// Reorders and rephases `curr` so that column `k` continues column `k` of
/// `prev`: columns are matched by maximal overlap and each overlap
/// `⟨prev_k|curr_k⟩` is made real and positive.
pub fn gauge_align(prev: &EigenFrame, curr: &EigenFrame) -> Result<EigenFrame> {
    let n = prev.dim();
    if curr.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: curr.dim(),
        });
    }
    let overlap = prev.vectors.adjoint() * &curr.vectors;
    let mut taken = vec![false; n];
    let mut assignment = Vec::with_capacity(n);
    for k in 0..n {
        let mut best = (usize::MAX, -1.0_f64);
        let mut second = -1.0_f64;
        for j in 0..n {
            let m = overlap[(k, j)].norm();
            if m > best.1 {
                second = best.1;
                best = (j, m);
            } else if m > second {
                second = m;
            }
        }
        if best.1 - second < AMBIGUITY_TOL {
            return Err(Error::DegenerateFrame(format!(
                "column {k}: overlaps {:.9} and {:.9} are indistinguishable",
                best.1, second
            )));
        }
        if taken[best.0] {
            return Err(Error::DegenerateFrame(format!(
                "column {} matched twice",
                best.0
            )));
        }
        taken[best.0] = true;
        assignment.push(best.0);
    }

    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in assignment.iter().enumerate() {
        let o = overlap[(k, j)];
        let phase = o.conj() / o.norm();
        for r in 0..n {
            vectors[(r, k)] = curr.vectors[(r, j)] * phase;
        }
        values.push(curr.values[j]);
    }
    Ok(EigenFrame {
        values,
        vectors,
        aux: curr.aux,
    })
}

/// Derivative of the eigenvector matrix in the parallel-transport gauge
/// (`⟨φ_k|φ̇_k⟩ = 0`) from the derivative of the Hamiltonian:
/// `Ẇ = W M`, `M_kn = ⟨φ_k|Ḣ|φ_n⟩ / (λ_n − λ_k)`.
pub fn parallel_transport_derivative(
    frame: &EigenFrame,
    h_dot: &HermitianOperator,
) -> Result<ComplexMatrix> {
    let n = frame.dim();
    if h_dot.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h_dot.dim(),
        });
    }
    let w = &frame.vectors;
    let projected = w.adjoint() * h_dot.matrix() * w;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            if k == j {
                continue;
            }
            let gap = frame.values[j] - frame.values[k];
            if gap.abs() < MIN_GAP {
                return Err(Error::DegenerateFrame(format!(
                    "eigenvalues {k} and {j} differ by {gap:.3e}"
                )));
            }
            m[(k, j)] = projected[(k, j)] / gap;
        }
    }
    Ok(w * m)
}

/// Central finite-difference derivative `(W(t+h) − W(t−h)) / 2h` with both
/// neighbouring frames gauge-aligned to `W(t)`. Returns the aligned centre
/// frame together with the derivative.
pub fn finite_difference_derivative<F>(
    frame_at: F,
    t: f64,
    h: f64,
) -> Result<(EigenFrame, ComplexMatrix)>
where
    F: Fn(f64) -> Result<EigenFrame>,
{
    if h <= 0.0 {
        return Err(Error::NonPositiveStep(h));
    }
    let centre = frame_at(t)?;
    let plus = gauge_align(&centre, &frame_at(t + h)?)?;
    let minus = gauge_align(&centre, &frame_at(t - h)?)?;
    let d = (plus.vectors - minus.vectors) / Complex64::new(2.0 * h, 0.0);
    Ok((centre, d))
}

/// One exact unitary step `c' = exp(−i H dt) c`, evaluated through the
/// eigendecomposition of `H`.
pub fn unitary_step(h: &HermitianOperator, dt: f64, c: &ComplexVector) -> Result<ComplexVector> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::NonPositiveStep(dt));
    }
    if c.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: c.len(),
        });
    }
    let frame = eig_hermitian(h);
    Ok(apply_exponential(&frame, dt, c))
}

pub(crate) fn apply_exponential(frame: &EigenFrame, dt: f64, c: &ComplexVector) -> ComplexVector {
    let w = &frame.vectors;
    let mut a = w.adjoint() * c;
    for (k, &l) in frame.values.iter().enumerate() {
        a[k] *= Complex64::from_polar(1.0, -l * dt);
    }
    w * a
}

/// Commutator `[a, b] = ab − ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_symmetric(rows: &[&[f64]]) -> HermitianOperator {
        let n = rows.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0));
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn diagonal_input() {
        let h = real_symmetric(&[&[-1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 2.0]]);
        let f = eig_hermitian(&h);
        assert_eq!(f.values, vec![-1.0, 0.0, 2.0]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(f.vectors[(i, j)].re, want, epsilon = 1e-15);
                assert_abs_diff_eq!(f.vectors[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn two_level_offdiagonal() {
        let h = real_symmetric(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let f = eig_hermitian(&h);
        assert_abs_diff_eq!(f.values[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.values[1], 0.5, epsilon = 1e-15);
        assert!(f.unitarity_defect() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(0.5, 0.0);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let mut h = HermitianOperator::zeros(3);
        h.set_diagonal(0, 0.3);
        h.set_diagonal(2, -1.1);
        h.set_coupling(0, 1, c(0.2, 0.7));
        h.set_coupling(1, 2, c(-0.4, 0.1));
        h.set_coupling(0, 2, c(0.0, 0.5));
        let f = eig_hermitian(&h);
        let diff = f.reconstruct() - h.matrix();
        assert!(diff.iter().all(|z| z.norm() < 1e-13));
        assert!(f.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(f.unitarity_defect() < 1e-13);
    }

    #[test]
    fn eig_is_deterministic() {
        let mut h = HermitianOperator::zeros(4);
        h.set_coupling(0, 1, c(0.3, 0.2));
        h.set_coupling(1, 2, c(0.9, 0.0));
        h.set_coupling(2, 3, c(0.1, -0.6));
        assert_eq!(eig_hermitian(&h), eig_hermitian(&h));
    }

    #[test]
    fn gauge_align_identity_and_sign() {
        let h = real_symmetric(&[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.3], &[0.0, 0.3, 1.0]]);
        let f = eig_hermitian(&h);
        assert_eq!(gauge_align(&f, &f).unwrap().vectors, f.vectors);

        let mut flipped = f.clone();
        for r in 0..3 {
            flipped.vectors[(r, 1)] = -flipped.vectors[(r, 1)];
        }
        let aligned = gauge_align(&f, &flipped).unwrap();
        let d = &aligned.vectors - &f.vectors;
        assert!(d.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn gauge_align_removes_phase() {
        let h = real_symmetric(&[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.3], &[0.0, 0.3, 1.0]]);
        let f = eig_hermitian(&h);
        let mut rotated = f.clone();
        let phase = Complex64::from_polar(1.0, 0.3);
        for r in 0..3 {
            rotated.vectors[(r, 2)] *= phase;
        }
        let aligned = gauge_align(&f, &rotated).unwrap();
        let o = (f.vectors.column(2).adjoint() * aligned.vectors.column(2))[(0, 0)];
        assert!(o.arg().abs() < 1e-12);
        assert!(o.re > 0.0);
    }

    #[test]
    fn gauge_align_matches_by_overlap_not_order() {
        let h = real_symmetric(&[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.3], &[0.0, 0.3, 1.0]]);
        let f = eig_hermitian(&h);
        let mut swapped = f.clone();
        swapped.vectors.swap_columns(0, 2);
        swapped.values.swap(0, 2);
        let aligned = gauge_align(&f, &swapped).unwrap();
        assert_eq!(aligned.values, f.values);
    }

    #[test]
    fn gauge_align_flags_degeneracy() {
        let f = EigenFrame {
            values: vec![0.0, 0.0],
            vectors: ComplexMatrix::identity(2, 2),
            aux: None,
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = EigenFrame {
            values: vec![0.0, 0.0],
            vectors: ComplexMatrix::from_row_slice(
                2,
                2,
                &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
            ),
            aux: None,
        };
        assert!(matches!(
            gauge_align(&f, &g),
            Err(Error::DegenerateFrame(_))
        ));
    }

    #[test]
    fn zero_hamiltonian_step_is_identity() {
        let h = HermitianOperator::zeros(3);
        let v = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let out = unitary_step(&h, 0.7, &v).unwrap();
        assert!((out - v).norm() < 1e-15);
    }

    #[test]
    fn resonant_pi_pulse() {
        let omega = 2.0;
        let h = real_symmetric(&[&[0.0, omega / 2.0], &[omega / 2.0, 0.0]]);
        let dt = std::f64::consts::PI / omega;
        let v = ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let out = unitary_step(&h, dt, &v).unwrap();
        assert!((out[0] - c(0.0, 0.0)).norm() < 1e-14);
        assert!((out[1] - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn step_rejects_nonpositive_dt() {
        let h = HermitianOperator::zeros(2);
        let v = ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            unitary_step(&h, 0.0, &v),
            Err(Error::NonPositiveStep(_))
        ));
        assert!(matches!(
            unitary_step(&h, -1.0, &v),
            Err(Error::NonPositiveStep(_))
        ));
    }

    #[test]
    fn parallel_transport_matches_finite_difference() {
        let path = |t: f64| {
            let mut h = HermitianOperator::zeros(3);
            h.set_coupling(0, 1, c(t.cos(), 0.2 * t));
            h.set_coupling(1, 2, c(0.5 + 0.1 * t * t, 0.0));
            h.set_diagonal(2, 0.3);
            h
        };
        let dpath = |t: f64| {
            let mut h = HermitianOperator::zeros(3);
            h.set_coupling(0, 1, c(-t.sin(), 0.2));
            h.set_coupling(1, 2, c(0.2 * t, 0.0));
            h
        };
        let t = 0.4;
        let frame = eig_hermitian(&path(t));
        let analytic = parallel_transport_derivative(&frame, &dpath(t)).unwrap();
        let (_, fd) =
            finite_difference_derivative(|s| Ok(eig_hermitian(&path(s))), t, 1e-5).unwrap();
        let d = analytic - fd;
        assert!(d.iter().all(|z| z.norm() < 1e-8), "max {}", d.camax());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian(n: usize) -> impl Strategy<Value = HermitianOperator> {
            proptest::collection::vec(-2.0..2.0_f64, n * n * 2).prop_map(move |xs| {
                let mut h = HermitianOperator::zeros(n);
                for j in 0..n {
                    h.set_diagonal(j, xs[j * n + j]);
                    for k in (j + 1)..n {
                        h.set_coupling(j, k, Complex64::new(xs[j * n + k], xs[n * n + j * n + k]));
                    }
                }
                h
            })
        }

        fn state(n: usize) -> impl Strategy<Value = ComplexVector> {
            proptest::collection::vec(-1.0..1.0_f64, 2 * n)
                .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
                .prop_map(move |xs| {
                    ComplexVector::from_fn(n, |i, _| Complex64::new(xs[2 * i], xs[2 * i + 1]))
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn step_preserves_norm(h in hermitian(5), v in state(5), dt in 1e-3..10.0_f64) {
                let out = unitary_step(&h, dt, &v).unwrap();
                prop_assert!((out.norm() - v.norm()).abs() < 1e-13 * v.norm().max(1.0));
            }

            #[test]
            fn decomposition_reconstructs(h in hermitian(6)) {
                let f = eig_hermitian(&h);
                let scale = h.matrix().norm();
                let d = f.reconstruct() - h.matrix();
                prop_assert!(d.iter().all(|z| z.norm() < 1e-10 * scale));
                prop_assert!(f.unitarity_defect() < 1e-12);
                prop_assert!(f.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
