//! Eigendecomposition of a real matrix with real, well-separated spectrum.
//!
//! The probe matrices in the spectral algorithm are similar to real diagonal
//! matrices, so their eigenvalues are real almost surely. We take a real
//! Schur form and back-substitute eigenvectors out of the (then strictly
//! triangular) factor, reporting complex or clustered spectra to the caller,
//! which retries with a fresh random probe.

use nalgebra::DMatrix;

#[derive(Debug)]
pub(crate) enum EigFailure {
    /// Largest imaginary part relative to the matrix scale.
    Complex { imag: f64 },
    /// Smallest eigenvalue gap relative to the matrix scale.
    Clustered { gap: f64 },
    NoConvergence,
}

impl std::fmt::Display for EigFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EigFailure::Complex { imag } => write!(f, "complex eigenvalues (imag {imag:.3e})"),
            EigFailure::Clustered { gap } => write!(f, "clustered eigenvalues (gap {gap:.3e})"),
            EigFailure::NoConvergence => write!(f, "Schur iteration did not converge"),
        }
    }
}

pub(crate) struct RealEig {
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors as columns, same order as `values`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn real_eigen(
    a: &DMatrix<f64>,
    complex_tol: f64,
    cluster_tol: f64,
) -> Result<RealEig, EigFailure> {
    let k = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if k == 1 {
        return Ok(RealEig { values: vec![a[(0, 0)]], vectors: DMatrix::identity(1, 1) });
    }

    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-14, 10_000)
        .ok_or(EigFailure::NoConvergence)?;
    let (q, t) = schur.unpack();

    // a non-negligible subdiagonal entry marks a complex conjugate pair
    let mut worst_sub = 0.0f64;
    for i in 0..k - 1 {
        worst_sub = worst_sub.max(t[(i + 1, i)].abs());
    }
    if worst_sub > complex_tol * scale {
        return Err(EigFailure::Complex { imag: worst_sub / scale });
    }

    let values: Vec<f64> = (0..k).map(|i| t[(i, i)]).collect();
    let mut min_gap = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            min_gap = min_gap.min((values[i] - values[j]).abs());
        }
    }
    if min_gap < cluster_tol * scale {
        return Err(EigFailure::Clustered { gap: min_gap / scale });
    }

    // back-substitute eigenvectors of the triangular factor
    let mut vectors = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let mut x = vec![0.0f64; k];
        x[i] = 1.0;
        for j in (0..i).rev() {
            let mut acc = 0.0;
            for l in j + 1..=i {
                acc += t[(j, l)] * x[l];
            }
            x[j] = acc / (values[i] - t[(j, j)]);
        }
        for r in 0..k {
            vectors[(r, i)] = x[r];
        }
    }
    let mut vectors = &q * vectors;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok(RealEig { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_spectrum_of_a_diagonalizable_matrix() {
        // A = W D W^{-1} with known diagonal
        let w = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.5, 1.0, 0.4, -0.1, 0.2, 1.0]);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0, 0.5]));
        let a = &w * d * w.clone().try_inverse().unwrap();
        let eig = real_eigen(&a, 1e-8, 1e-10).unwrap();
        let mut got = eig.values.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-1.0, 0.5, 2.0];
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
        // residual A v = lambda v
        for i in 0..3 {
            let v = eig.vectors.column(i);
            let res = (&a * v) - eig.values[i] * v;
            assert!(res.norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_rotation_with_complex_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(real_eigen(&a, 1e-8, 1e-10), Err(EigFailure::Complex { .. })));
    }

    #[test]
    fn rejects_clustered_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0 + 1e-13]);
        assert!(matches!(real_eigen(&a, 1e-8, 1e-10), Err(EigFailure::Clustered { .. })));
    }
}
