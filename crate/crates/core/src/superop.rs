//! Superoperators as dense `n² × n²` matrices.
//!
//! Operators are vectorized row-major, `vec(X)[n·r + c] = X[r][c]`. Under this
//! convention the map `X ↦ A X B†` has matrix `A ⊗ B*`.
//!
//! Orientation of the pencil: `L_λ(X) = X - (i/λ)[H, X]`, whose matrix is
//! `I⊗I - (i/λ)(H⊗I - I⊗H*)`. With it the hitting-time operator of `K_2`
//! measured at `v1` has `+i/λ` in its `(v1, v2)` entry. It is the resolvent of
//! the propagation `X ↦ e^{iHt} X e^{-iHt}`, and the trajectory oracles in
//! [`crate::trajectory`] propagate the walk the same way. For real initial
//! states (and for every real part of the expectation matrices) the opposite
//! orientation gives identical results.

use nalgebra::{Schur, SVD};

use crate::error::{Error, Result};
use crate::graph::HermitianMatrix;
use crate::scalar::{cr, imag_unit, Real};
use crate::{CMatrix, CVector, Complex};

/// Default relative singular-value cutoff (`σ < rank_tol · σ_max` counts as zero).
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Final vertex `v_f` and Poisson measurement rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetup<T: Real> {
    final_vertex: usize,
    rate: T,
}

impl<T: Real> MeasurementSetup<T> {
    pub fn new(final_vertex: usize, rate: T) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self { final_vertex, rate })
    }

    pub fn final_vertex(&self) -> usize {
        self.final_vertex
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn with_rate(&self, rate: T) -> Result<Self> {
        Self::new(self.final_vertex, rate)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.final_vertex >= n {
            return Err(Error::VertexOutOfRange { vertex: self.final_vertex, n });
        }
        Ok(())
    }
}

pub(crate) fn check_rate<T: Real>(rate: T) -> Result<()> {
    let r = rate.to_f64();
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidRate(r));
    }
    Ok(())
}

/// Linear map on `n × n` operators, stored as its `n² × n²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T: Real> {
    n: usize,
    matrix: CMatrix<T>,
}

impl<T: Real> Superoperator<T> {
    pub fn from_matrix(n: usize, matrix: CMatrix<T>) -> Result<Self> {
        let order = n * n;
        if matrix.nrows() != order || matrix.ncols() != order {
            return Err(Error::DimensionMismatch { expected: order, found: matrix.nrows() });
        }
        Ok(Self { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, matrix: CMatrix::identity(n * n, n * n) }
    }

    /// Matrix of `X ↦ A X B†`, i.e. `A ⊗ B*`.
    pub fn conjugation(a: &CMatrix<T>, b: &CMatrix<T>) -> Self {
        Self { n: a.nrows(), matrix: a.kronecker(&b.map(|z| z.conj())) }
    }

    /// Matrix of `X ↦ [H, X]`, i.e. `H⊗I - I⊗H*`.
    pub fn commutator(h: &CMatrix<T>) -> Self {
        let id = CMatrix::identity(h.nrows(), h.nrows());
        Self { n: h.nrows(), matrix: h.kronecker(&id) - id.kronecker(&h.map(|z| z.conj())) }
    }

    /// Underlying Hilbert-space dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix order `n²`.
    pub fn order(&self) -> usize {
        self.n * self.n
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn apply_vec(&self, v: &CVector<T>) -> CVector<T> {
        &self.matrix * v
    }

    pub fn apply(&self, x: &CMatrix<T>) -> CMatrix<T> {
        devectorize(&self.apply_vec(&vectorize(x))).expect("order is a perfect square")
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: &self.matrix * &other.matrix }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self { n: self.n, matrix: self.matrix.map(|z| z * c) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: &self.matrix - &other.matrix }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: &self.matrix + &other.matrix }
    }

    /// Adjoint with respect to the Hilbert–Schmidt product `⟨X, Y⟩ = Tr(X†Y)`.
    pub fn hs_adjoint(&self) -> Self {
        Self { n: self.n, matrix: self.matrix.adjoint() }
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<T> {
        let mut s: Vec<T> = self.matrix.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        s
    }

    pub fn sigma_min(&self) -> T {
        self.singular_values().last().copied().unwrap_or_else(T::zero)
    }

    /// True when `σ_min < rank_tol · σ_max`.
    pub fn is_singular(&self, rank_tol: T) -> bool {
        let s = self.singular_values();
        let (max, min) = (s[0], s[s.len() - 1]);
        !(min > rank_tol * max)
    }
}

/// Row-major stacking of a square matrix.
pub fn vectorize<T: Real>(x: &CMatrix<T>) -> CVector<T> {
    let (r, c) = x.shape();
    CVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| x[(i, j)])))
}

/// Inverse of [`vectorize`]; fails when the length is not a perfect square.
pub fn devectorize<T: Real>(v: &CVector<T>) -> Result<CMatrix<T>> {
    let len = v.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(Error::NotPerfectSquare(len));
    }
    Ok(CMatrix::from_fn(n, n, |r, c| v[n * r + c]))
}

/// `L_λ`, matrix `I⊗I - (i/λ)(H⊗I - I⊗H*)`.
pub fn build_l<T: Real>(h: &HermitianMatrix<T>, rate: T) -> Result<Superoperator<T>> {
    check_rate(rate)?;
    let n = h.n();
    let k = Superoperator::commutator(h.matrix());
    Ok(Superoperator::identity(n).sub(&k.scale(imag_unit::<T>() * cr(rate.recip()))))
}

/// `Q_f ⊗ Q_f*`, the matrix of `X ↦ Q_f X Q_f`.
pub fn build_q<T: Real>(n: usize, final_vertex: usize) -> Superoperator<T> {
    let mut q = CMatrix::<T>::identity(n, n);
    q[(final_vertex, final_vertex)] = cr(T::zero());
    Superoperator::conjugation(&q, &q)
}

/// The pencil `N_λ = L_λ - Q_f`.
pub fn build_n<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<Superoperator<T>> {
    setup.check_dim(h.n())?;
    Ok(build_l(h, setup.rate())?.sub(&build_q(h.n(), setup.final_vertex())))
}

/// Solves `S x = b`, falling back to the Moore–Penrose least-squares solution.
///
/// When `σ_min > rank_tol · σ_max` the system is solved directly and the flag
/// is `false`. Otherwise singular values below the cutoff are dropped, the
/// minimum-norm solution is returned and the flag is `true`.
pub fn solve_or_pinv<T: Real>(s: &Superoperator<T>, b: &CVector<T>, rank_tol: T) -> Result<(CVector<T>, bool)> {
    solve_or_pinv_matrix(s.matrix(), b, rank_tol)
}

pub(crate) fn solve_or_pinv_matrix<T: Real>(m: &CMatrix<T>, b: &CVector<T>, rank_tol: T) -> Result<(CVector<T>, bool)> {
    if !(rank_tol > T::zero()) {
        return Err(Error::InvalidArgument("rank tolerance must be positive".into()));
    }
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: b.len() });
    }
    let svd = SVD::new(m.clone(), false, true);
    let sv = &svd.singular_values;
    let max = sv.iter().fold(T::zero(), |a, &s| a.max(s));
    let min = sv.iter().fold(max, |a, &s| a.min(s));
    let cutoff = rank_tol * max;
    if min > cutoff {
        if let Some(x) = m.clone().lu().solve(b) {
            return Ok((x, false));
        }
    }
    // With orthonormal kernels K_r = ker S and K_l = ker S†, the bordered
    // matrix M = S + K_l K_r† is invertible and S⁺ = M⁻¹ - K_r K_l†. Both
    // kernels are taken from right singular vectors, which stay accurate
    // where the left vectors of the complex SVD do not.
    let k_r = null_space(&svd, cutoff);
    let adj_svd = SVD::new(m.adjoint(), false, true);
    let k_l = null_space(&adj_svd, cutoff);
    if k_r.ncols() != k_l.ncols() {
        return Err(Error::Contract(format!(
            "kernel dimensions of S ({}) and S† ({}) differ",
            k_r.ncols(),
            k_l.ncols()
        )));
    }
    let bordered = m + &k_l * k_r.adjoint();
    let x = bordered
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Contract("bordered system is singular".into()))?;
    Ok((x - &k_r * (k_l.adjoint() * b), true))
}

/// Orthonormal columns spanning the right singular vectors with `σ ≤ cutoff`.
fn null_space<T: Real>(svd: &SVD<Complex<T>, nalgebra::Dyn, nalgebra::Dyn>, cutoff: T) -> CMatrix<T> {
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let cols: Vec<CVector<T>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s <= cutoff)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMatrix::zeros(v_t.ncols(), 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// `e^{tS}` as a superoperator (scaling-and-squaring Padé).
pub fn superop_expm<T: Real>(s: &Superoperator<T>, t: T) -> Superoperator<T> {
    Superoperator { n: s.n, matrix: s.matrix.map(|z| z * t).exp() }
}

/// `e^{tS} v`. The caller folds any sign or rate into `S` (the conditional
/// master equation uses `S = -λ N_λ`).
pub fn superop_expm_apply<T: Real>(s: &Superoperator<T>, v: &CVector<T>, t: T) -> Result<CVector<T>> {
    if t < T::zero() {
        return Err(Error::InvalidArgument("propagation time must be non-negative".into()));
    }
    if t == T::zero() {
        return Ok(v.clone());
    }
    Ok(superop_expm(s, t).apply_vec(v))
}

/// Eigenvalues of a general complex matrix via the Schur form.
///
/// The QR iteration is capped and run with a deflation threshold of a few
/// ulps, loosened on failure; a machine-epsilon threshold without a cap can
/// stall on tightly clustered spectra.
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    let max_iter = 200 * m.nrows().max(1);
    for ulps in [4.0, 64.0, 1024.0] {
        let eps = T::lit(ulps) * T::default_epsilon();
        if let Some(schur) = Schur::try_new(m.clone(), eps, max_iter) {
            return Ok(schur.unpack().1.diagonal().iter().copied().collect());
        }
    }
    Err(Error::Contract("Schur iteration did not converge".into()))
}

/// The pencil pair `(I⊗I - Q_f⊗Q_f*, i(H⊗I - I⊗H*))`.
pub fn pencil_pair<T: Real>(h: &HermitianMatrix<T>, final_vertex: usize) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let n = h.n();
    if final_vertex >= n {
        return Err(Error::VertexOutOfRange { vertex: final_vertex, n });
    }
    let a = Superoperator::identity(n).sub(&build_q(n, final_vertex)).into_matrix();
    let b = Superoperator::commutator(h.matrix()).scale(imag_unit()).into_matrix();
    Ok((a, b))
}

/// Generalized eigenvalues of a pencil pair.
#[derive(Debug, Clone)]
pub struct PencilSpectrum<T: Real> {
    /// Finite `μ` with `det(A - μB) = 0` on the regular part.
    pub finite: Vec<Complex<T>>,
    /// Number of infinite eigenvalues of the regular part.
    pub infinite: usize,
    /// Dimension of the common kernel `ker A ∩ ker B` that was deflated
    /// (non-zero exactly when the pencil is not regular).
    pub deflated: usize,
}

/// Generalized eigenvalues of the pencil `(A, B)` from [`pencil_pair`].
///
/// The common kernel of `A` and `B` is deflated first. On its orthogonal
/// complement `A - B` is invertible (`A` is a projector and `B` is `i` times
/// a Hermitian matrix), so with `M = (A - B)⁻¹ B` each eigenvalue `ν ≠ 0` of
/// `M` gives `μ = 1 + 1/ν`; `ν ≈ 0` is an infinite eigenvalue.
pub fn pencil_eigenvalues<T: Real>(h: &HermitianMatrix<T>, final_vertex: usize, rank_tol: T) -> Result<PencilSpectrum<T>> {
    let (a, b) = pencil_pair(h, final_vertex)?;
    let m = a.nrows();
    let mut stacked = CMatrix::<T>::zeros(2 * m, m);
    stacked.rows_mut(0, m).copy_from(&a);
    stacked.rows_mut(m, m).copy_from(&b);
    let svd = SVD::new(stacked, false, true);
    let v_t = svd.v_t.expect("right vectors requested");
    let max = svd.singular_values.iter().fold(T::zero(), |acc, &s| acc.max(s));
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > rank_tol * max).collect();
    let deflated = m - keep.len();
    if keep.is_empty() {
        return Ok(PencilSpectrum { finite: Vec::new(), infinite: 0, deflated });
    }
    let mut basis = CMatrix::<T>::zeros(m, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).adjoint());
    }
    let ar = basis.adjoint() * &a * &basis;
    let br = basis.adjoint() * &b * &basis;
    let shifted = (&ar - &br)
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Contract("pencil shift A - B is singular off the common kernel".into()))?;
    let op = shifted * br;
    let scale = op.iter().fold(T::one(), |acc, z| acc.max(z.norm_sqr().sqrt()));
    let mut finite = Vec::new();
    let mut infinite = 0;
    for nu in eigenvalues(&op)? {
        if nu.norm_sqr().sqrt() <= T::lit(1e-10) * scale {
            infinite += 1;
        } else {
            finite.push(cr(T::one()) + cr(T::one()) / nu);
        }
    }
    Ok(PencilSpectrum { finite: average_clusters(finite), infinite, deflated })
}

const CLUSTER_RADIUS: f64 = 1e-5;

fn average_clusters<T: Real>(values: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let m = values.len();
    let radius = T::lit(CLUSTER_RADIUS);
    let mut label: Vec<usize> = (0..m).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..m {
        for j in i + 1..m {
            let scale = T::one().max(values[i].norm_sqr().sqrt());
            if (values[i] - values[j]).norm_sqr().sqrt() <= radius * scale {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut sums = vec![(cr(T::zero()), 0usize); m];
    for (i, &v) in values.iter().enumerate() {
        let r = root(&mut label, i);
        sums[r].0 += v;
        sums[r].1 += 1;
    }
    (0..m)
        .map(|i| {
            let (sum, count) = sums[root(&mut label, i)];
            sum * cr(T::of_usize(count).recip())
        })
        .collect()
}
