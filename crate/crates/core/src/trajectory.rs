//! Independent numerical oracles for `τ_h` and `p_h`.
//!
//! * [`mc_estimate`] samples measurement records directly: exponential
//!   interarrival times, a Born-rule hit test at every measurement, projection
//!   onto `v_f⊥` on a miss.
//! * [`master_equation_estimate`] integrates the conditional state
//!   `dρ/dt = -λ N_λ(ρ)` and applies quadrature to the hit density
//!   `λ Tr{P_f ρ(t)}`.
//! * [`weak_limit_check`] iterates the discrete weak-measurement channel whose
//!   continuum limit is the same master equation.
//!
//! Free evolution between measurements is `ψ ↦ e^{iHt} ψ`, the orientation of
//! the pencil in [`crate::superop`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::HermitianMatrix;
use crate::hitting::{dark_subspace, validate_density};
use crate::scalar::{compensated_sum, cr, Real};
use crate::spectral::Spectrum;
use crate::superop::{build_n, devectorize, eigenvalues, superop_expm, vectorize, MeasurementSetup};
use crate::{CMatrix, CVector};

/// Measurements per trajectory before it is abandoned as a non-hit.
pub const DEFAULT_MAX_MEAS: usize = 10_000;
/// Fallback horizon in units of `1/λ`.
pub const FALLBACK_HORIZON: f64 = 50.0;
/// Default horizon in units of the slowest decay time.
pub const DECAY_HORIZON: f64 = 20.0;
const MAX_AUTO_STEPS: usize = 200_000;

/// Monte Carlo estimates, all in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub p_h_hat: f64,
    pub p_h_stderr: f64,
    /// Mean over all trajectories of the hit time, zero for non-hits.
    pub tau_h_hat: f64,
    pub tau_h_stderr: f64,
    pub n_traj: usize,
    /// Fraction of trajectories that reached `max_meas` without hitting.
    pub truncated_fraction: f64,
    pub seed: u64,
}

enum Outcome {
    Hit(f64),
    Miss,
    Truncated,
}

fn check_unit<T: Real>(psi: &CVector<T>, n: usize) -> Result<()> {
    if psi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.len() });
    }
    let norm = psi.norm();
    let tol = T::lit(1e-10).max(T::lit(16.0) * T::default_epsilon());
    if !((norm - T::one()).abs() <= tol) {
        return Err(Error::InvalidState(format!("state norm {} is not 1", norm.to_f64())));
    }
    Ok(())
}

/// Samples `n_traj` measurement records starting from `psi`.
///
/// Trajectory `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so the
/// result is bit-identical for a fixed seed regardless of thread scheduling.
pub fn mc_estimate<T: Real>(
    spectrum: &Spectrum<T>,
    setup: &MeasurementSetup<T>,
    psi: &CVector<T>,
    n_traj: usize,
    max_meas: usize,
    seed: u64,
) -> Result<TrajectoryStats> {
    let n = spectrum.n();
    setup.check_dim(n)?;
    check_unit(psi, n)?;
    if n_traj == 0 || max_meas == 0 {
        return Err(Error::InvalidArgument("n_traj and max_meas must be at least 1".into()));
    }
    let exp = Exp::new(setup.rate().to_f64()).map_err(|_| Error::InvalidRate(setup.rate().to_f64()))?;
    let f = setup.final_vertex();

    let outcomes: Vec<Outcome> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut state = psi.clone();
            let mut t = 0.0f64;
            for _ in 0..max_meas {
                let dt = exp.sample(&mut rng);
                t += dt;
                state = spectrum.evolve(&state, -T::lit(dt));
                let hit = state[f].norm_sqr().to_f64() / state.norm_squared().to_f64();
                let u: f64 = rand::Rng::random(&mut rng);
                if u < hit {
                    return Outcome::Hit(t);
                }
                state[f] = cr(T::zero());
                let norm = state.norm();
                if norm == T::zero() {
                    return Outcome::Miss;
                }
                state.unscale_mut(norm);
            }
            Outcome::Truncated
        })
        .collect();

    let contributions: Vec<f64> =
        outcomes.iter().map(|o| if let Outcome::Hit(t) = o { *t } else { 0.0 }).collect();
    let hits = outcomes.iter().filter(|o| matches!(o, Outcome::Hit(_))).count();
    let truncated = outcomes.iter().filter(|o| matches!(o, Outcome::Truncated)).count();
    let count = n_traj as f64;
    let p = hits as f64 / count;
    let mean = compensated_sum(contributions.iter().copied()) / count;
    let var = if n_traj > 1 {
        compensated_sum(contributions.iter().map(|x| (x - mean) * (x - mean))) / (count - 1.0)
    } else {
        0.0
    };
    Ok(TrajectoryStats {
        p_h_hat: p,
        p_h_stderr: (p * (1.0 - p) / count).sqrt(),
        tau_h_hat: mean,
        tau_h_stderr: (var / count).sqrt(),
        n_traj,
        truncated_fraction: truncated as f64 / count,
        seed,
    })
}

/// Quadrature of the conditional master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterEquationEstimate<T> {
    pub p_h: T,
    pub tau_h: T,
    /// Estimated probability still to arrive after `t_max`.
    pub tail_p: T,
    /// Estimated contribution of that probability to `τ_h`.
    pub tail_tau: T,
    pub t_max: T,
    pub n_steps: usize,
}

/// Samples of the conditional state on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T> {
    pub times: Vec<T>,
    /// `Tr{P_f ρ(t)}`
    pub hit_density: Vec<T>,
    /// `Tr{ρ(t)}`
    pub survival: Vec<T>,
}

impl<T: Real> SurvivalCurve<T> {
    /// `max_k |self.hit_density[k] - other.hit_density[k]|` over the shared prefix.
    pub fn max_density_deviation(&self, other: &Self) -> T {
        self.hit_density
            .iter()
            .zip(&other.hit_density)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

fn generator<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<crate::Superoperator<T>> {
    Ok(build_n(h, setup)?.scale(cr(-setup.rate())))
}

/// Slowest non-stationary decay rate of `-λ N_λ`, if well defined.
pub fn slowest_decay_rate<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<Option<T>> {
    let g = generator(h, setup)?;
    let floor = T::lit(1e-7) * setup.rate();
    Ok(eigenvalues(g.matrix())?
        .iter()
        .map(|z| z.re.abs())
        .filter(|&r| r > floor)
        .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.min(r)))))
}

/// `DECAY_HORIZON / g` for the slowest decay rate `g`, else `FALLBACK_HORIZON / λ`.
pub fn default_horizon<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>) -> Result<T> {
    let fallback = T::lit(FALLBACK_HORIZON) / setup.rate();
    Ok(match slowest_decay_rate(h, setup)? {
        Some(g) if g.to_f64().is_finite() => (T::lit(DECAY_HORIZON) / g).min(T::lit(1e3) * fallback),
        _ => fallback,
    })
}

/// Step count resolving both the decay and oscillation time scales of `-λN`.
pub fn default_steps<T: Real>(h: &HermitianMatrix<T>, setup: &MeasurementSetup<T>, t_max: T) -> usize {
    let spectrum_width = h.matrix().iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt())) * T::lit(2.0)
        * T::of_usize(h.n());
    let fastest = setup.rate().max(spectrum_width).max(T::one());
    let dt = T::lit(0.02) / fastest;
    let steps = (t_max / dt).to_f64().ceil() as usize;
    (steps.max(2) + steps % 2).min(MAX_AUTO_STEPS)
}

fn tail_terms<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    rho: &CMatrix<T>,
    survival_end: T,
    t_max: T,
) -> Result<(T, T)> {
    let spectrum = Spectrum::of(h)?;
    let dark = dark_subspace(&spectrum, setup.final_vertex())?;
    // mass that never arrives: Σ_i Tr{D_i ρ D_i} over per-eigenvalue dark projectors D_i
    let mut stuck = T::zero();
    let mut k = 0;
    while k < dark.basis.len() {
        let e = dark.energies[k];
        let mut d = CMatrix::<T>::zeros(spectrum.n(), spectrum.n());
        while k < dark.basis.len() && dark.energies[k] == e {
            d += &dark.basis[k] * dark.basis[k].adjoint();
            k += 1;
        }
        stuck += (&d * rho * &d).trace().re;
    }
    let tail_p = (survival_end - stuck).max(T::zero());
    let g = slowest_decay_rate(h, setup)?.unwrap_or(setup.rate());
    Ok((tail_p, tail_p * (t_max + g.recip())))
}

/// Composite Simpson quadrature of `λ Tr{P_f ρ(t)}` and `λ t Tr{P_f ρ(t)}`
/// over `[0, t_max]`. An odd `n_steps` is rounded up to the next even count.
pub fn master_equation_estimate<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    rho: &CMatrix<T>,
    t_max: T,
    n_steps: usize,
) -> Result<MasterEquationEstimate<T>> {
    let n = h.n();
    setup.check_dim(n)?;
    validate_density(rho, n)?;
    if !(t_max > T::zero()) || n_steps < 2 {
        return Err(Error::InvalidArgument("need t_max > 0 and n_steps >= 2".into()));
    }
    let n_steps = n_steps + n_steps % 2;
    let dt = t_max / T::of_usize(n_steps);
    let curve = master_equation_curve(h, setup, rho, dt, n_steps)?;
    let lambda = setup.rate();
    let weights = |k: usize| -> T {
        if k == 0 || k == n_steps {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        }
    };
    let third = dt / T::lit(3.0);
    let p_terms: Vec<T> = (0..=n_steps).map(|k| weights(k) * curve.hit_density[k]).collect();
    let t_terms: Vec<T> = (0..=n_steps).map(|k| weights(k) * curve.times[k] * curve.hit_density[k]).collect();
    let p_h = lambda * third * compensated_sum(p_terms);
    let tau_h = lambda * third * compensated_sum(t_terms);
    let (tail_p, tail_tau) = tail_terms(h, setup, rho, curve.survival[n_steps], t_max)?;
    Ok(MasterEquationEstimate { p_h, tau_h, tail_p, tail_tau, t_max, n_steps })
}

/// [`master_equation_estimate`] with [`default_horizon`] and [`default_steps`].
pub fn master_equation_auto<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    rho: &CMatrix<T>,
) -> Result<MasterEquationEstimate<T>> {
    let t_max = default_horizon(h, setup)?;
    master_equation_estimate(h, setup, rho, t_max, default_steps(h, setup, t_max))
}

/// `ρ(k·dt)` for `k = 0..=n_steps`, propagated by the fixed step `e^{-λN dt}`.
pub fn master_equation_curve<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    rho: &CMatrix<T>,
    dt: T,
    n_steps: usize,
) -> Result<SurvivalCurve<T>> {
    setup.check_dim(h.n())?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    let step = superop_expm(&generator(h, setup)?, dt);
    let f = setup.final_vertex();
    let mut v = vectorize(rho);
    let mut curve = SurvivalCurve { times: Vec::new(), hit_density: Vec::new(), survival: Vec::new() };
    for k in 0..=n_steps {
        if k > 0 {
            v = step.apply_vec(&v);
        }
        let state = devectorize(&v)?;
        curve.times.push(dt * T::of_usize(k));
        curve.hit_density.push(state[(f, f)].re);
        curve.survival.push(state.trace().re);
    }
    Ok(curve)
}

/// Iterates `ρ ← M_0 ρ M_0† + M_1 ρ M_1†` with `M_0 = √(1-ε²) U_δt` and
/// `M_1 = ε Q_f U_δt`: in each slot of length `δt` a measurement happens with
/// probability `ε²`, and only its no-hit branch is kept.
pub fn weak_limit_check<T: Real>(
    h: &HermitianMatrix<T>,
    setup: &MeasurementSetup<T>,
    psi: &CVector<T>,
    epsilon: T,
    dt: T,
    horizon: T,
) -> Result<SurvivalCurve<T>> {
    let n = h.n();
    setup.check_dim(n)?;
    check_unit(psi, n)?;
    if !(epsilon > T::zero() && epsilon <= T::lit(0.1)) {
        return Err(Error::InvalidArgument("ε must lie in (0, 0.1]".into()));
    }
    if !(dt > T::zero() && horizon > T::zero()) {
        return Err(Error::InvalidArgument("δt and horizon must be positive".into()));
    }
    let implied = epsilon * epsilon / dt;
    if (implied - setup.rate()).abs() > T::lit(0.01) * setup.rate() {
        return Err(Error::InvalidArgument(format!(
            "ε²/δt = {} does not match λ = {} within 1%",
            implied.to_f64(),
            setup.rate().to_f64()
        )));
    }
    let steps = (horizon / dt).to_f64().round() as usize;
    let u = Spectrum::of(h)?.propagator(-dt);
    let f = setup.final_vertex();
    let keep = cr(T::one() - epsilon * epsilon);
    let mut rho = psi * psi.adjoint();
    let mut curve = SurvivalCurve { times: Vec::new(), hit_density: Vec::new(), survival: Vec::new() };
    for k in 0..=steps {
        if k > 0 {
            let evolved = &u * &rho * u.adjoint();
            let mut projected = evolved.clone();
            projected.row_mut(f).fill(cr(T::zero()));
            projected.column_mut(f).fill(cr(T::zero()));
            rho = evolved * keep + projected * cr(epsilon * epsilon);
        }
        curve.times.push(dt * T::of_usize(k));
        curve.hit_density.push(rho[(f, f)].re);
        curve.survival.push(rho.trace().re);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hitting::{pure_density, vertex_state};
    use crate::Complex;

    fn setup(f: usize, lam: f64) -> MeasurementSetup<f64> {
        MeasurementSetup::new(f, lam).unwrap()
    }

    fn dark_l3() -> CVector<f64> {
        let s = 0.5f64.sqrt();
        CVector::from_vec(vec![Complex::new(s, 0.), Complex::new(0., 0.), Complex::new(-s, 0.)])
    }

    #[test]
    fn mc_k2_matches_closed_form() {
        let h = fixtures::k2().hamiltonian::<f64>();
        let s = Spectrum::of(&h).unwrap();
        let st = mc_estimate(&s, &setup(0, 1.0), &vertex_state(2, 1).unwrap(), 100_000, DEFAULT_MAX_MEAS, 7).unwrap();
        assert!((st.tau_h_hat - 2.5).abs() <= 3.0 * st.tau_h_stderr, "{st:?}");
        assert!((st.p_h_hat - 1.0).abs() <= 3.0 * st.p_h_stderr.max(1e-12));
        assert_eq!(st.truncated_fraction, 0.0);
    }

    #[test]
    fn mc_dark_state_never_hits() {
        let h = fixtures::l3().hamiltonian::<f64>();
        let s = Spectrum::of(&h).unwrap();
        let st = mc_estimate(&s, &setup(1, 1.0), &dark_l3(), 10_000, 1_000, 3).unwrap();
        assert!(st.p_h_hat <= 0.01);
    }

    #[test]
    fn mc_start_at_target_hits_first() {
        // an isolated target keeps all amplitude on it, so the first measurement hits
        let h = crate::Graph::edgeless(2).unwrap().hamiltonian::<f64>();
        let s = Spectrum::of(&h).unwrap();
        for lam in [0.5, 3.0] {
            let st = mc_estimate(&s, &setup(0, lam), &vertex_state(2, 0).unwrap(), 20_000, 10, 11).unwrap();
            assert_eq!(st.p_h_hat, 1.0);
            assert!((st.tau_h_hat - 1.0 / lam).abs() <= 3.0 * st.tau_h_stderr);
        }
    }

    #[test]
    fn mc_is_deterministic_and_validates() {
        let h = fixtures::kl31().hamiltonian::<f64>();
        let s = Spectrum::of(&h).unwrap();
        let psi = vertex_state(4, 3).unwrap();
        let a = mc_estimate(&s, &setup(0, 1.3), &psi, 500, 100, 42).unwrap();
        let b = mc_estimate(&s, &setup(0, 1.3), &psi, 500, 100, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, mc_estimate(&s, &setup(0, 1.3), &psi, 500, 100, 43).unwrap());
        let bad = psi.map(|z| z * 2.0);
        assert!(matches!(mc_estimate(&s, &setup(0, 1.0), &bad, 10, 10, 0), Err(Error::InvalidState(_))));
        assert!(mc_estimate(&s, &setup(0, 1.0), &psi, 0, 10, 0).is_err());
    }

    #[test]
    fn mc_reports_truncation() {
        let h = fixtures::k2().hamiltonian::<f64>();
        let s = Spectrum::of(&h).unwrap();
        let st = mc_estimate(&s, &setup(0, 1.0), &vertex_state(2, 1).unwrap(), 2_000, 1, 5).unwrap();
        assert!(st.truncated_fraction > 0.0);
        assert!(st.p_h_hat + st.truncated_fraction <= 1.0 + 1e-12);
    }

    #[test]
    fn master_equation_examples() {
        let h = fixtures::k2().hamiltonian::<f64>();
        let rho = pure_density(&vertex_state(2, 0).unwrap());
        let me = master_equation_estimate(&h, &setup(0, 2.0), &rho, 40.0, 4000).unwrap();
        assert!((me.tau_h - 1.0).abs() <= 1e-4);
        assert!((me.p_h - 1.0).abs() <= 1e-6);
        assert!(me.tail_p < 1e-8);

        let l3 = fixtures::l3().hamiltonian::<f64>();
        let dark = pure_density(&dark_l3());
        let curve = master_equation_curve(&l3, &setup(1, 1.0), &dark, 0.01, 2000).unwrap();
        assert!(curve.hit_density.iter().all(|&d| d.abs() <= 1e-12));
        let me = master_equation_estimate(&l3, &setup(1, 1.0), &dark, 20.0, 2000).unwrap();
        assert!(me.p_h.abs() <= 1e-10 && me.tail_p <= 1e-10);

        let short = master_equation_estimate(&h, &setup(0, 2.0), &rho, 1e-9, 2).unwrap();
        assert!(short.p_h.abs() < 1e-8 && short.tau_h.abs() < 1e-16);
        assert!(master_equation_estimate(&h, &setup(0, 2.0), &rho, 0.0, 2).is_err());
        assert!(master_equation_estimate(&h, &setup(0, 2.0), &rho, 1.0, 1).is_err());
    }

    #[test]
    fn master_equation_default_horizon() {
        let h = fixtures::l4().hamiltonian::<f64>();
        let st = setup(3, 1.0);
        let rho = pure_density(&vertex_state(4, 0).unwrap());
        let me = master_equation_auto(&h, &st, &rho).unwrap();
        let closed = crate::hitting::hitting_time(&h, &st, &rho).unwrap();
        assert!((me.tau_h - closed.tau_h.finite().unwrap()).abs() <= 1e-3);
        assert!(me.tail_p <= 1e-6);
    }

    #[test]
    fn conditional_state_stays_physical() {
        let h = fixtures::s4().hamiltonian::<f64>();
        let rho = pure_density(&vertex_state(4, 2).unwrap());
        let step = superop_expm(&generator(&h, &setup(1, 0.8)).unwrap(), 0.05);
        let mut v = vectorize(&rho);
        let mut last = 1.0;
        for _ in 0..400 {
            v = step.apply_vec(&v);
            let r = devectorize(&v).unwrap();
            let tr = r.trace().re;
            assert!(tr <= last + 1e-13);
            last = tr;
            let min = nalgebra::SymmetricEigen::new(r).eigenvalues.min();
            assert!(min >= -1e-10);
        }
    }

    #[test]
    fn weak_limit_matches_master_equation() {
        let h = fixtures::k2().hamiltonian::<f64>();
        let st = setup(0, 1.0);
        let psi = vertex_state(2, 1).unwrap();
        let deviation = |eps: f64| {
            let dt = eps * eps;
            let weak = weak_limit_check(&h, &st, &psi, eps, dt, 10.0).unwrap();
            let me = master_equation_curve(&h, &st, &pure_density(&psi), dt, weak.times.len() - 1).unwrap();
            weak.max_density_deviation(&me)
        };
        let d1 = deviation(0.05);
        assert!(d1 <= 5e-3, "{d1}");
        let d2 = deviation(0.025);
        assert!(d1 / d2 >= 1.8, "{d1} / {d2}");
    }

    #[test]
    fn weak_limit_free_decay() {
        let h = crate::Graph::edgeless(2).unwrap().hamiltonian::<f64>();
        let eps = 0.1;
        let curve = weak_limit_check(&h, &setup(0, 1.0), &vertex_state(2, 0).unwrap(), eps, eps * eps, 2.0).unwrap();
        for (k, s) in curve.survival.iter().enumerate() {
            assert!((s - (1.0 - eps * eps).powi(k as i32)).abs() <= 1e-12);
            assert!((s - (-curve.times[k]).exp()).abs() <= 0.02);
        }
    }

    #[test]
    fn weak_limit_validates() {
        let h = fixtures::k2().hamiltonian::<f64>();
        let psi = vertex_state(2, 1).unwrap();
        assert!(weak_limit_check(&h, &setup(0, 1.0), &psi, 0.05, 0.01, 1.0).is_err());
        assert!(weak_limit_check(&h, &setup(0, 1.0), &psi, 0.5, 0.25, 1.0).is_err());
    }
}
