//! Closed-form hitting statistics and infinite-hitting diagnostics.
//!
//! With `N = N_λ` the pencil of [`crate::superop::build_n`]:
//!
//! * `p_h = Tr{P_f N⁻¹(ρ)}`
//! * `τ_h = λ⁻¹ Tr{P_f N⁻²(ρ)}`
//! * `𝔓 = (N⁻¹)†(P_f)`, `𝔥 = λ⁻¹ (N⁻²)†(P_f)`, so that `p_h = Tr{𝔓 ρ}` and
//!   `τ_h = Tr{𝔥 ρ}`.
//!
//! Inverses are replaced by pseudoinverses when `N` is singular.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{check_hermitian, Graph, HermitianMatrix};
use crate::scalar::{cr, Real};
use crate::spectral::Spectrum;
use crate::superop::{build_n, devectorize, solve_or_pinv, vectorize, MeasurementSetup, DEFAULT_RANK_TOL};
use crate::{CMatrix, CVector, Complex};

/// `p_h` below `1 - INFINITE_TOL` means some probability never arrives.
pub const INFINITE_TOL: f64 = 1e-8;
/// Rate at which the pencil is probed for singularity.
pub const PROBE_RATE: f64 = 1.0;
/// Rates confirming the probe.
pub const CONFIRM_RATES: [f64; 2] = [0.7, 1.3];
/// `|⟨v_f|B|` below this counts as zero when intersecting with `v_f⊥`.
pub const INTERSECTION_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Expected hitting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HittingTime<T> {
    Finite(T),
    /// Some probability never reaches `v_f`. The pseudoinverse value is the
    /// expected time conditioned on the part that does arrive, unnormalized.
    Infinite { pseudoinverse_value: T },
}

impl<T: Real> HittingTime<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite { .. })
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Self::Finite(t) => Some(t),
            Self::Infinite { .. } => None,
        }
    }

    /// `+∞` for infinite hitting times.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Self::Finite(t) => t.to_f64(),
            Self::Infinite { .. } => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingReport<T: Real> {
    pub tau_h: HittingTime<T>,
    pub p_h: T,
    pub pencil_sigma_min: T,
    pub pencil_singular: bool,
    pub dark_dim: usize,
    pub lambda: T,
}

/// The expectation operators `𝔓` and `𝔥`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingMatrices<T: Real> {
    pub probability: CMatrix<T>,
    pub time: CMatrix<T>,
    pub pencil_singular: bool,
}

impl<T: Real> HittingMatrices<T> {
    /// `Tr{𝔓 ρ}`
    pub fn probability_of(&self, rho: &CMatrix<T>) -> Complex<T> {
        (&self.probability * rho).trace()
    }

    /// `Tr{𝔥 ρ}`
    pub fn time_of(&self, rho: &CMatrix<T>) -> Complex<T> {
        (&self.time * rho).trace()
    }
}

/// `⊕_i (eigenspace_i ∩ v_f⊥)`, the states that never reach `v_f`.
#[derive(Debug, Clone)]
pub struct DarkSubspace<T: Real> {
    /// Orthonormal basis vectors.
    pub basis: Vec<CVector<T>>,
    /// Energy of each basis vector.
    pub energies: Vec<T>,
    /// `(E_i, dim(eigenspace_i ∩ v_f⊥))` for every eigenvalue.
    pub per_eigenvalue_dims: Vec<(T, usize)>,
    n: usize,
}

impl<T: Real> DarkSubspace<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `Π_D = Σ b b†`
    pub fn projector(&self) -> CMatrix<T> {
        self.basis.iter().fold(CMatrix::zeros(self.n, self.n), |acc, b| acc + b * b.adjoint())
    }
}

/// Which of the three criteria flagged infinite hitting times.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteDiagnosis<T: Real> {
    pub has_infinite: bool,
    /// A state that never hits; a dark basis vector when one exists.
    pub witness: Option<CVector<T>>,
    /// Non-empty dark subspace.
    pub dark: bool,
    /// Singular pencil at the probe rate.
    pub pencil: bool,
    /// Disconnected complement with a spare component.
    pub complement: bool,
    pub dark_dim: usize,
    pub pencil_sigma_min: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T: Real> {
    pub lambda: T,
    pub report: HittingReport<T>,
}

/// Coefficients of `τ_h ≈ τ_(1) λ + τ_(-1) / λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics<T> {
    pub tau_1: T,
    pub tau_minus_1: T,
}

/// `|ψ⟩⟨ψ|`
pub fn pure_density<T: Real>(psi: &CVector<T>) -> CMatrix<T> {
    psi * psi.adjoint()
}

/// `|v_k⟩` in dimension `n`.
pub fn vertex_state<T: Real>(n: usize, k: usize) -> Result<CVector<T>> {
    if k >= n {
        return Err(Error::VertexOutOfRange { vertex: k, n });
    }
    let mut v = CVector::zeros(n);
    v[k] = cr(T::one());
    Ok(v)
}

fn final_projector<T: Real>(n: usize, f: usize) -> CMatrix<T> {
    let mut p = CMatrix::zeros(n, n);
    p[(f, f)] = cr(T::one());
    p
}

/// Checks that `rho` is an `n × n` density matrix.
pub fn validate_density<T: Real>(rho: &CMatrix<T>, n: usize) -> Result<()> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.nrows() });
    }
    if rho.iter().any(|z| !(z.re.to_f64().is_finite() && z.im.to_f64().is_finite())) {
        return Err(Error::InvalidState("non-finite entry".into()));
    }
    check_hermitian(rho).map_err(|_| Error::InvalidState("not Hermitian".into()))?;
    let tr = rho.trace();
    let tol = T::lit(TRACE_TOL).max(T::lit(4.0) * T::default_epsilon());
    if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!("trace {} is not 1", tr.re.to_f64())));
    }
    let min = SymmetricEigen::new(rho.clone()).eigenvalues.iter().fold(T::one(), |a, &e| a.min(e));
    if min < -T::lit(PSD_TOL).max(T::lit(16.0) * T::default_epsilon()) {
        return Err(Error::InvalidState(format!("negative eigenvalue {}", min.to_f64())));
    }
    Ok(())
}

fn real_part<T: Real>(z: Complex<T>, what: &str) -> Result<T> {
    let tol = T::lit(IMAG_RESIDUE_TOL).max(T::lit(1e3) * T::default_epsilon());
    if z.im.abs() > tol * T::one().max(z.re.abs()) {
        return Err(Error::Contract(format!("{what} has imaginary residue {}", z.im.to_f64())));
    }
    Ok(z.re)
}

/// `τ_h` and `p_h` for the initial density matrix `rho`.
///
/// `τ_h` is infinite exactly when `p_h < 1 - INFINITE_TOL`; a singular pencil
/// with `p_h ≈ 1` (initial state orthogonal to the dark subspace) reports the
/// pseudoinverse value as finite.
pub fn hitting_time<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    rho: &CMatrix<T>,
) -> Result<HittingReport<T>> {
    let n = h.n();
    setup.check_dim(n)?;
    validate_density(rho, n)?;
    let spectrum = Spectrum::of(h)?;
    let dark_dim = dark_subspace(&spectrum, setup.final_vertex())?.dim();
    let pencil = build_n(h, setup)?;
    let rank_tol = T::lit(DEFAULT_RANK_TOL);
    let (x, sing_x) = solve_or_pinv(&pencil, &vectorize(rho), rank_tol)?;
    let (y, sing_y) = solve_or_pinv(&pencil, &x, rank_tol)?;
    let f = setup.final_vertex();
    let p_h = real_part(devectorize(&x)?[(f, f)], "p_h")?;
    let tau = devectorize(&y)?[(f, f)] * cr(setup.rate().recip());
    let pencil_singular = sing_x || sing_y;
    let tau_h = if pencil_singular && p_h < T::one() - T::lit(INFINITE_TOL) {
        // diagnostic only; its imaginary part is not constrained
        HittingTime::Infinite { pseudoinverse_value: tau.re }
    } else {
        HittingTime::Finite(real_part(tau, "τ_h")?)
    };
    Ok(HittingReport { tau_h, p_h, pencil_sigma_min: pencil.sigma_min(), pencil_singular, dark_dim, lambda: setup.rate() })
}

/// `𝔓 = (N⁻¹)†(P_f)` and `𝔥 = λ⁻¹(N⁻²)†(P_f)`, with pseudoinverses when singular.
pub fn hitting_matrices<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<HittingMatrices<T>> {
    let n = h.n();
    let adj = build_n(h, setup)?.hs_adjoint();
    let rank_tol = T::lit(DEFAULT_RANK_TOL);
    let (x, s1) = solve_or_pinv(&adj, &vectorize(&final_projector(n, setup.final_vertex())), rank_tol)?;
    let (y, s2) = solve_or_pinv(&adj, &x, rank_tol)?;
    let inv_rate = cr(setup.rate().recip());
    Ok(HittingMatrices {
        probability: devectorize(&x)?,
        time: devectorize(&y)?.map(|z| z * inv_rate),
        pencil_singular: s1 || s2,
    })
}

/// Intersects every eigenspace with `v_f⊥`.
///
/// An eigenspace with basis `B` whose row `⟨v_f|B` has norm below
/// [`INTERSECTION_TOL`] lies entirely in `v_f⊥`. Otherwise the intersection is
/// `B · ker(⟨v_f|B)`, of dimension one less.
pub fn dark_subspace<T: Real>(spectrum: &Spectrum<T>, final_vertex: usize) -> Result<DarkSubspace<T>> {
    let n = spectrum.n();
    if final_vertex >= n {
        return Err(Error::VertexOutOfRange { vertex: final_vertex, n });
    }
    let mut basis = Vec::new();
    let mut energies = Vec::new();
    let mut per_eigenvalue_dims = Vec::new();
    for (&e, b) in spectrum.eigenvalues().iter().zip(spectrum.bases()) {
        let d = b.ncols();
        let row = b.row(final_vertex).adjoint();
        let norm = row.norm();
        let kernel: CMatrix<T> = if norm < T::lit(INTERSECTION_TOL) {
            CMatrix::identity(d, d)
        } else {
            // orthonormal basis of the complement of `r̂` inside C^d
            let r = row.map(|z| z * cr(norm.recip()));
            let proj = CMatrix::identity(d, d) - &r * r.adjoint();
            let eig = SymmetricEigen::new(proj);
            let cols: Vec<CVector<T>> = (0..d)
                .filter(|&k| eig.eigenvalues[k] > T::lit(0.5))
                .map(|k| eig.eigenvectors.column(k).into_owned())
                .collect();
            if cols.is_empty() {
                CMatrix::zeros(d, 0)
            } else {
                CMatrix::from_columns(&cols)
            }
        };
        per_eigenvalue_dims.push((e, kernel.ncols()));
        let span = b * kernel;
        for col in span.column_iter() {
            basis.push(col.into_owned());
            energies.push(e);
        }
    }
    Ok(DarkSubspace { basis, energies, per_eigenvalue_dims, n })
}

fn pencil_singular_at<T: Real>(h: &HermitianMatrix<T>, f: usize, rate: f64) -> Result<(bool, T)> {
    let n = build_n(h, &MeasurementSetup::new(f, T::lit(rate))?)?;
    Ok((n.is_singular(T::lit(DEFAULT_RANK_TOL)), n.sigma_min()))
}

/// Runs the three infinite-hitting criteria for `graph` measured at `final_vertex`.
///
/// (a) non-empty dark subspace, (b) singular pencil at [`PROBE_RATE`]
/// (confirmed at [`CONFIRM_RATES`]), (c) complement witness. The equivalence
/// of (a) and (b), and the implication (c) ⇒ (a), are checked; a violation is
/// a [`Error::Contract`] error.
pub fn detect_infinite<T: Real>(graph: &Graph, final_vertex: usize) -> Result<InfiniteDiagnosis<T>> {
    let n = graph.n();
    if final_vertex >= n {
        return Err(Error::VertexOutOfRange { vertex: final_vertex, n });
    }
    let h = graph.hamiltonian::<T>();
    let dark = dark_subspace(&Spectrum::of(&h)?, final_vertex)?;
    let (pencil, pencil_sigma_min) = pencil_singular_at(&h, final_vertex, PROBE_RATE)?;
    for rate in CONFIRM_RATES {
        if pencil_singular_at(&h, final_vertex, rate)?.0 != pencil {
            return Err(Error::Contract(format!("pencil singularity changes between λ = {PROBE_RATE} and λ = {rate}")));
        }
    }
    if pencil == dark.is_empty() {
        return Err(Error::Contract(format!(
            "dark subspace of dimension {} disagrees with pencil singularity {pencil}",
            dark.dim()
        )));
    }
    let complement_witness = match graph.complement_witness::<T>(final_vertex) {
        Ok(w) => w,
        Err(Error::Disconnected) => None,
        Err(e) => return Err(e),
    };
    let complement = complement_witness.is_some();
    if complement && dark.is_empty() {
        return Err(Error::Contract("complement witness exists but the dark subspace is empty".into()));
    }
    let witness = dark.basis.first().cloned().or(complement_witness);
    Ok(InfiniteDiagnosis {
        has_infinite: pencil || complement || !dark.is_empty(),
        witness,
        dark: !dark.is_empty(),
        pencil,
        complement,
        dark_dim: dark.dim(),
        pencil_sigma_min,
    })
}

/// One report per rate; `rates` must be positive and strictly ascending.
pub fn lambda_sweep<T: Real>(
    h: &HermitianMatrix<T>,
    final_vertex: usize,
    rho: &CMatrix<T>,
    rates: &[T],
) -> Result<Vec<SweepPoint<T>>> {
    if rates.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("rate grid must be strictly ascending".into()));
    }
    rates
        .par_iter()
        .map(|&lambda| {
            let setup = MeasurementSetup::new(final_vertex, lambda)?;
            Ok(SweepPoint { lambda, report: hitting_time(h, &setup, rho)? })
        })
        .collect()
}

/// `τ_(-1) = λ τ_h` at the smallest rate, `τ_(1) = τ_h / λ` at the largest.
///
/// The sweep must reach down to `λ ≤ 0.01` and up to `λ ≥ 100` and contain
/// only finite hitting times.
pub fn fit_asymptotics<T: Real>(sweep: &[SweepPoint<T>]) -> Result<Asymptotics<T>> {
    let mut finite = Vec::with_capacity(sweep.len());
    for p in sweep {
        match p.report.tau_h {
            HittingTime::Finite(t) => finite.push((p.lambda, t)),
            HittingTime::Infinite { .. } => {
                return Err(Error::InvalidArgument(format!("infinite hitting time at λ = {}", p.lambda.to_f64())))
            }
        }
    }
    let lo = finite.iter().copied().min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite rates"));
    let hi = finite.iter().copied().max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite rates"));
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo.0 <= T::lit(0.01) && hi.0 >= T::lit(100.0) => {
            Ok(Asymptotics { tau_1: hi.1 / hi.0, tau_minus_1: lo.1 * lo.0 })
        }
        _ => Err(Error::InvalidArgument("sweep must cover λ ≤ 0.01 and λ ≥ 100".into())),
    }
}

/// `σ_min` of the pencil at `setup`, exposed for diagnostics.
pub fn pencil_sigma_min<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<T> {
    Ok(build_n(h, setup)?.sigma_min())
}
