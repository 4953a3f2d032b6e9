//! Dense density matrices, partial transposition and negativity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_limit, Error, Result};
use crate::graph::{Graph, StateVector};
use crate::numeric::walsh_hadamard;
use crate::partition::Partition;

/// Eigenvalues of the partial transpose above this count as zero.
pub const NEGATIVE_EIGENVALUE_THRESHOLD: f64 = -1e-12;

/// Tolerance for Hermiticity, unit trace and the PSD floor.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Tolerance for the normalization of graph-diagonal weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Dense `2^n x 2^n` operator with the original vertex label of each qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    labels: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

/// Diagnostics returned by [`DensityMatrix::validity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub hermitian_residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.hermitian_residual <= VALIDITY_TOL
            && self.trace_error <= VALIDITY_TOL
            && self.min_eigenvalue >= -VALIDITY_TOL
    }
}

impl DensityMatrix {
    /// Wraps a square matrix on `n` qubits labelled `0..n`.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || !d.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "{}x{} is not a qubit operator",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = d.trailing_zeros() as usize;
        Ok(Self {
            n,
            labels: (0..n).collect(),
            matrix,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn from_pure(state: &StateVector) -> Self {
        Self {
            n: state.qubits(),
            labels: (0..state.qubits()).collect(),
            matrix: state.projector(),
        }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self {
            n,
            labels: (0..n).collect(),
            matrix: DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn validity(&self) -> Validity {
        let hermitian_residual = max_abs(&(&self.matrix - self.matrix.adjoint()));
        let trace_error = (self.trace() - Complex64::new(1.0, 0.0)).norm();
        let min_eigenvalue = hermitian_eigenvalues(&self.matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Validity {
            hermitian_residual,
            trace_error,
            min_eigenvalue,
        }
    }

    /// Convex combination `Σ w_k ρ_k`.
    pub fn mixture<'a>(terms: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<Self> {
        let mut iter = terms.into_iter();
        let (w0, first) = iter
            .next()
            .ok_or_else(|| Error::Dimension("empty mixture".into()))?;
        let mut matrix = &first.matrix * Complex64::new(w0, 0.0);
        for (w, rho) in iter {
            if rho.n != first.n {
                return Err(Error::WidthMismatch {
                    expected: first.n,
                    got: rho.n,
                });
            }
            matrix += &rho.matrix * Complex64::new(w, 0.0);
        }
        Ok(Self {
            n: first.n,
            labels: first.labels.clone(),
            matrix,
        })
    }

    /// `U ρ U†` for a diagonal ±1 unitary given by its sign function.
    fn conjugate_by_signs(&self, sign: impl Fn(usize) -> bool) -> Self {
        let d = self.dim();
        let signs: Vec<bool> = (0..d).map(sign).collect();
        let matrix = DMatrix::from_fn(d, d, |r, c| {
            if signs[r] ^ signs[c] {
                -self.matrix[(r, c)]
            } else {
                self.matrix[(r, c)]
            }
        });
        Self {
            n: self.n,
            labels: self.labels.clone(),
            matrix,
        }
    }

    /// `Z^mask ρ Z^mask`.
    pub fn conjugate_by_z(&self, mask: u64) -> Self {
        self.conjugate_by_signs(|x| (x as u64 & mask).count_ones() & 1 == 1)
    }

    /// `CZ_ij ρ CZ_ij`.
    pub fn conjugate_by_cz(&self, i: usize, j: usize) -> Self {
        let m = (1usize << i) | (1usize << j);
        self.conjugate_by_signs(|x| x & m == m)
    }
}

/// Real eigenvalues of a Hermitian matrix, ascending.
///
/// The input is symmetrized as `(A + A†) / 2` first.
pub fn hermitian_eigenvalues(matrix: &DMatrix<Complex64>) -> Vec<f64> {
    let adjoint = matrix.adjoint();
    let asymmetry = max_abs(&(matrix - &adjoint));
    if asymmetry > 1e-12 {
        log::debug!("symmetrizing {}x{} matrix, asymmetry {asymmetry:.3e}", matrix.nrows(), matrix.ncols());
    }
    let sym = (matrix + adjoint) * Complex64::new(0.5, 0.0);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest entry modulus.
pub fn max_abs(matrix: &DMatrix<Complex64>) -> f64 {
    matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Transposes the qubits in `mask` on both row and column indices.
pub fn partial_transpose(matrix: &DMatrix<Complex64>, mask: u64) -> DMatrix<Complex64> {
    let d = matrix.nrows();
    let m = mask as usize;
    DMatrix::from_fn(d, d, |r, c| {
        let swapped = (r ^ c) & m;
        matrix[(r ^ swapped, c ^ swapped)]
    })
}

/// `Σ |λ|` over the eigenvalues below [`NEGATIVE_EIGENVALUE_THRESHOLD`].
pub fn negativity_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l < NEGATIVE_EIGENVALUE_THRESHOLD)
        .fold(0.0, |acc, l| acc - l)
}

/// Negativity with the qubits in `mask` transposed.
pub fn negativity_of_mask(rho: &DensityMatrix, mask: u64) -> Result<f64> {
    check_limit("dense eigensolve", rho.qubits(), crate::Limits::default().eigensolver)?;
    let pt = partial_transpose(rho.matrix(), mask);
    Ok(negativity_of_spectrum(&hermitian_eigenvalues(&pt)))
}

/// Negativity across a bipartition of the matrix's qubits; part 1 is transposed.
pub fn negativity(rho: &DensityMatrix, partition: &Partition) -> Result<f64> {
    partition.require_bipartition()?;
    if partition.len() != rho.qubits() {
        return Err(Error::WidthMismatch {
            expected: rho.qubits(),
            got: partition.len(),
        });
    }
    negativity_of_mask(rho, partition.mask(1))
}

/// `Σ_γ w_γ |G_γ⟩⟨G_γ|` for the graph basis of `graph`.
///
/// Built in closed form: entry `(x, y)` is `2^-n s(x) s(y) ŵ(x ⊕ y)` with `s`
/// the CZ sign and `ŵ` the Walsh-Hadamard transform of the weights.
pub fn graph_diagonal_density(graph: &Graph, weights: &[f64]) -> Result<DensityMatrix> {
    let n = graph.order();
    check_limit("graph-diagonal density", n, crate::Limits::default().eigensolver)?;
    let d = 1usize << n;
    if weights.len() != d {
        return Err(Error::Dimension(format!("{} weights for {n} qubits", weights.len())));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Unnormalized { sum: f64::NAN });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Unnormalized { sum });
    }
    Ok(graph_diagonal_unchecked(graph, weights))
}

pub(crate) fn graph_diagonal_unchecked(graph: &Graph, weights: &[f64]) -> DensityMatrix {
    let n = graph.order();
    let d = 1usize << n;
    let mut spectrum = weights.to_vec();
    walsh_hadamard(&mut spectrum);
    let scale = 1.0 / d as f64;
    let sign: Vec<bool> = (0..d as u64).map(|x| graph.cz_parity(x) == 1).collect();
    let matrix = DMatrix::from_fn(d, d, |r, c| {
        let v = spectrum[r ^ c] * scale;
        Complex64::new(if sign[r] ^ sign[c] { -v } else { v }, 0.0)
    });
    DensityMatrix {
        n,
        labels: (0..n).collect(),
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_basis_state, BitString};

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        let s = StateVector::new(2, vec![Complex64::new(h, 0.0), z, z, Complex64::new(h, 0.0)]).unwrap();
        DensityMatrix::from_pure(&s)
    }

    fn cut() -> Partition {
        Partition::new(vec![0, 1]).unwrap()
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(bell().matrix(), 0b01);
        let ev = hermitian_eigenvalues(&pt);
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((negativity(&bell(), &cut()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trivial_masks() {
        let rho = graph_diagonal_density(&Graph::chain(3).unwrap(), &[0.5, 0.1, 0.1, 0.0, 0.1, 0.0, 0.2, 0.0]).unwrap();
        assert_eq!(&partial_transpose(rho.matrix(), 0), rho.matrix());
        assert_eq!(partial_transpose(rho.matrix(), 0b111), rho.matrix().transpose());
        let twice = partial_transpose(&partial_transpose(rho.matrix(), 0b010), 0b010);
        assert_eq!(&twice, rho.matrix());
    }

    #[test]
    fn product_state_has_zero_negativity() {
        let rho = DensityMatrix::from_pure(&StateVector::plus(2));
        assert_eq!(negativity(&rho, &cut()).unwrap(), 0.0);
        assert_eq!(negativity(&DensityMatrix::maximally_mixed(3), &Partition::new(vec![0, 1, 1]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn werner_family() {
        let mixed = DensityMatrix::maximally_mixed(2);
        for k in 0..=20 {
            let w = k as f64 / 20.0;
            let rho = DensityMatrix::mixture([(w, &bell()), (1.0 - w, &mixed)]).unwrap();
            let expected = ((3.0 * w - 1.0) / 4.0).max(0.0);
            assert!((negativity(&rho, &cut()).unwrap() - expected).abs() < 1e-12, "w={w}");
        }
    }

    #[test]
    fn rejects_three_parts() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert_eq!(
            negativity(&rho, &Partition::new(vec![0, 1, 2]).unwrap()),
            Err(Error::NotBipartite(3))
        );
    }

    #[test]
    fn graph_diagonal_spectrum_is_the_weights() {
        let g = Graph::ring(3).unwrap();
        let w = [0.3, 0.05, 0.15, 0.1, 0.0, 0.2, 0.1, 0.1];
        let rho = graph_diagonal_density(&g, &w).unwrap();
        let mut sorted = w.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in hermitian_eigenvalues(rho.matrix()).iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-12);
        }
        // against the explicit sum of projectors
        let mut direct = DMatrix::<Complex64>::zeros(8, 8);
        for (nu, wv) in w.iter().enumerate() {
            let s = graph_basis_state(&g, BitString::new(nu as u64, 3).unwrap()).unwrap();
            direct += s.projector() * Complex64::new(*wv, 0.0);
        }
        assert!(max_abs(&(rho.matrix() - direct)) < 1e-14);
    }

    #[test]
    fn graph_diagonal_endpoints() {
        let g = Graph::chain(2).unwrap();
        let pure = graph_diagonal_density(&g, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let expected = crate::graph::build_graph_state(&g).unwrap().projector();
        assert!(max_abs(&(pure.matrix() - expected)) < 1e-15);
        let uniform = graph_diagonal_density(&g, &[0.25; 4]).unwrap();
        assert!(max_abs(&(uniform.matrix() - DensityMatrix::maximally_mixed(2).matrix())) < 1e-15);
        assert!(graph_diagonal_density(&g, &[0.5; 4]).is_err());
    }

    #[test]
    fn edge_graph_two_weight_mixture() {
        let g = Graph::chain(2).unwrap();
        for k in 0..=10 {
            let q = k as f64 / 20.0;
            let rho = graph_diagonal_density(&g, &[1.0 - q, q, 0.0, 0.0]).unwrap();
            assert!((negativity(&rho, &cut()).unwrap() - (0.5 - q).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn validity_detects_bad_matrices() {
        assert!(bell().validity().is_valid());
        let scaled = DensityMatrix::from_matrix(bell().matrix() * Complex64::new(2.0, 0.0)).unwrap();
        assert!(!scaled.validity().is_valid());
        let pt = DensityMatrix::from_matrix(partial_transpose(bell().matrix(), 1)).unwrap();
        assert!(pt.validity().min_eigenvalue < -0.4);
    }
}
