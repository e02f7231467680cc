//! Hermitian eigendecomposition with degenerate-eigenvalue clustering, and
//! exact propagation by spectral sums.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::graph::{check_hermitian, HermitianMatrix};
use crate::scalar::{cis, Real};
use crate::{CMatrix, CVector};

/// Default relative tolerance for merging raw eigenvalues into one cluster.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Decomposition `H = Σ_i E_i P_i` over the distinct eigenvalues `E_i`.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    n: usize,
    eigenvalues: Vec<T>,
    bases: Vec<CMatrix<T>>,
    projectors: Vec<CMatrix<T>>,
}

impl<T: Real> Spectrum<T> {
    /// Diagonalizes `h`, merging raw eigenvalues closer than
    /// `cluster_tol · max(1, ‖h‖₂)` into one eigenspace whose eigenvalue is
    /// the cluster mean.
    pub fn new(h: &HermitianMatrix<T>, cluster_tol: T) -> Result<Self> {
        if !(cluster_tol > T::zero()) {
            return Err(Error::InvalidArgument("cluster tolerance must be positive".into()));
        }
        let m = h.matrix();
        check_hermitian(m)?;
        let n = h.n();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues")
        });
        let scale = eig.eigenvalues.iter().fold(T::one(), |acc, e| acc.max(e.abs()));
        let gap = cluster_tol * scale;

        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &k in &order {
            match clusters.last_mut() {
                Some(c) if eig.eigenvalues[k] - eig.eigenvalues[*c.last().unwrap()] <= gap => {
                    c.push(k)
                }
                _ => clusters.push(vec![k]),
            }
        }

        let mut eigenvalues = Vec::with_capacity(clusters.len());
        let mut bases = Vec::with_capacity(clusters.len());
        let mut projectors = Vec::with_capacity(clusters.len());
        for c in clusters {
            let mean = c.iter().fold(T::zero(), |acc, &k| acc + eig.eigenvalues[k])
                / T::of_usize(c.len());
            let mut basis = CMatrix::<T>::zeros(n, c.len());
            for (j, &k) in c.iter().enumerate() {
                basis.set_column(j, &eig.eigenvectors.column(k));
            }
            projectors.push(&basis * basis.adjoint());
            bases.push(basis);
            eigenvalues.push(mean);
        }
        Ok(Self { n, eigenvalues, bases, projectors })
    }

    /// [`Spectrum::new`] with [`DEFAULT_CLUSTER_TOL`].
    pub fn of(h: &HermitianMatrix<T>) -> Result<Self> {
        Self::new(h, T::lit(DEFAULT_CLUSTER_TOL))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distinct eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Orthogonal projectors onto the eigenspaces, aligned with [`Self::eigenvalues`].
    pub fn projectors(&self) -> &[CMatrix<T>] {
        &self.projectors
    }

    /// Orthonormal eigenvector columns of each eigenspace.
    pub fn bases(&self) -> &[CMatrix<T>] {
        &self.bases
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.eigenvalues.len() < self.n
    }

    /// `Σ_i E_i P_i`
    pub fn reconstruct(&self) -> CMatrix<T> {
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(self.n, self.n), |acc, (&e, p)| acc + p.map(|z| z * e))
    }

    /// `e^{-iHt} = Σ_i e^{-iE_i t} P_i`
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(self.n, self.n), |acc, (&e, p)| acc + p * cis(-e * t))
    }

    /// `e^{-iHt} ψ` via the spectral sum; exact for every `t`.
    pub fn evolve(&self, psi: &CVector<T>, t: T) -> CVector<T> {
        if t == T::zero() {
            return psi.clone();
        }
        let mut out = CVector::zeros(self.n);
        for (&e, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p * psi * cis(-e * t);
        }
        out
    }
}
