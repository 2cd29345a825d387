//! One electromagnetic field mode with a complex amplitude beable `q`.
//!
//! Conventions (hbar = 1, `omega = k c`, `q = u + i v`, area element
//! `du dv`): the mode Hamiltonian is `H = Pi Pi* + omega^2 q q*`, which in
//! the `q` representation reads `-d^2/dq dq* + omega^2 |q|^2`. Its ground and
//! one-quantum states are
//!
//! ```text
//! Psi_0 = sqrt(2 omega / pi) exp(-omega |q|^2) e^{-i omega t}          (E_0 = omega)
//! Psi_1 = sqrt(2 omega) q Psi_0 e^{-i omega t}                          (E_1 = 2 omega)
//! ```
//!
//! The phase `s` of `Psi` guides the beable through `dq/dt = ds/dq*`, and the
//! mode Hamilton-Jacobi equation is
//! `ds/dt + |ds/dq*|^2 + omega^2 |q|^2 + Q = 0` with `Q = -(1/R) d^2 R/dq dq*`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ode;
use crate::rng::{substream, StreamTag};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub k: f64,
    pub c: f64,
    /// Ground-state amplitude.
    pub alpha: Complex64,
    /// One-quantum amplitude.
    pub beta: Complex64,
    /// Density threshold relative to the ground-state peak `2 omega / pi`.
    pub rho_min: f64,
}

/// Wavefunctional and its Wirtinger log-derivatives at one `(q, t)`.
struct Jet {
    psi: Complex64,
    /// d ln Psi / dq
    l_q: Complex64,
    /// d ln Psi / dq*
    l_qbar: Complex64,
    /// d^2 ln Psi / dq dq*
    l_qqbar: Complex64,
    /// d ln Psi / dt
    l_t: Complex64,
}

impl ModeState {
    /// Normalizes `(alpha, beta)`.
    pub fn new(k: f64, c: f64, alpha: Complex64, beta: Complex64) -> Result<Self> {
        let omega = k * c;
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidModel(format!("k c must be positive, got {omega}")));
        }
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidModel("zero mode state".into()));
        }
        Ok(Self {
            k,
            c,
            alpha: alpha / n,
            beta: beta / n,
            rho_min: 1e-12,
        })
    }

    pub fn ground(k: f64, c: f64) -> Result<Self> {
        Self::new(k, c, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn one_photon(k: f64, c: f64) -> Result<Self> {
        Self::new(k, c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn omega(&self) -> f64 {
        self.k * self.c
    }

    pub fn ground_energy(&self) -> f64 {
        self.omega()
    }

    /// Energy of the one-quantum state, one `kc` above the ground.
    pub fn excited_energy(&self) -> f64 {
        2.0 * self.omega()
    }

    pub fn mean_energy(&self) -> f64 {
        self.alpha.norm_sqr() * self.ground_energy() + self.beta.norm_sqr() * self.excited_energy()
    }

    fn prefactor(&self) -> f64 {
        (2.0 * self.omega() / std::f64::consts::PI).sqrt()
    }

    /// Holomorphic factor `f(q, t) = alpha e^{-i E0 t} + beta sqrt(2 omega) q e^{-i E1 t}`
    /// and its `q` and `t` derivatives.
    fn holomorphic(&self, q: Complex64, t: f64) -> (Complex64, Complex64, Complex64) {
        let a = self.alpha * Complex64::from_polar(1.0, -self.ground_energy() * t);
        let b = self.beta * (2.0 * self.omega()).sqrt() * Complex64::from_polar(1.0, -self.excited_energy() * t);
        let f = a + b * q;
        let df_dq = b;
        let df_dt = -I * (self.ground_energy() * a + self.excited_energy() * b * q);
        (f, df_dq, df_dt)
    }

    pub fn wavefunctional(&self, q: Complex64, t: f64) -> Complex64 {
        let (f, _, _) = self.holomorphic(q, t);
        self.prefactor() * (-self.omega() * q.norm_sqr()).exp() * f
    }

    pub fn density(&self, q: Complex64, t: f64) -> f64 {
        self.wavefunctional(q, t).norm_sqr()
    }

    fn jet(&self, q: Complex64, t: f64) -> Result<Jet> {
        let w = self.omega();
        let (f, df_dq, df_dt) = self.holomorphic(q, t);
        let psi = self.prefactor() * (-w * q.norm_sqr()).exp() * f;
        let threshold = self.rho_min * self.prefactor().powi(2);
        let rho = psi.norm_sqr();
        if !(rho >= threshold) || f == Complex64::new(0.0, 0.0) {
            return Err(Error::Node {
                x: q.re,
                t,
                rho,
                threshold,
            });
        }
        Ok(Jet {
            psi,
            l_q: -w * q.conj() + df_dq / f,
            l_qbar: -w * q,
            l_qqbar: Complex64::new(-w, 0.0),
            l_t: df_dt / f,
        })
    }

    /// Guidance velocity `dq/dt = ds/dq*`.
    pub fn velocity(&self, q: Complex64, t: f64) -> Result<Complex64> {
        let j = self.jet(q, t)?;
        Ok(phase_qbar(&j))
    }

    /// Residual of the mode Hamilton-Jacobi equation.
    pub fn hj_residual(&self, q: Complex64, t: f64) -> Result<f64> {
        let j = self.jet(q, t)?;
        let w = self.omega();
        let ds_dt = j.l_t.im;
        let ds_dqbar = phase_qbar(&j);
        // ln R = (L + L*)/2; its mixed derivative is Re(L_qq*).
        let dlnr_dqbar = 0.5 * (j.l_qbar + j.l_q.conj());
        let q_pot = -(j.l_qqbar.re + dlnr_dqbar.norm_sqr());
        debug_assert!(j.psi.norm() > 0.0);
        Ok(ds_dt + ds_dqbar.norm_sqr() + w * w * q.norm_sqr() + q_pot)
    }
}

/// `ds/dq*` with `s = (L - L*)/2i`.
fn phase_qbar(j: &Jet) -> Complex64 {
    (j.l_qbar - j.l_q.conj()) / (2.0 * I)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBeable {
    pub t: f64,
    pub q: Complex64,
    /// Conjugate momentum `dq*/dt` along the trajectory.
    pub pi: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeStatus {
    Completed,
    AbortedAtNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    pub beables: Vec<ModeBeable>,
    pub status: ModeStatus,
}

impl ModeTrajectory {
    pub fn last(&self) -> &ModeBeable {
        self.beables.last().expect("never empty")
    }
}

/// RK4 on the guidance velocity, with the same node handling as the
/// particle integrator.
pub fn evolve_mode_beable(state: &ModeState, q0: Complex64, t0: f64, t1: f64, dt: f64) -> Result<ModeTrajectory> {
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument("need t1 > t0 and dt > 0".into()));
    }
    let v0 = state.velocity(q0, t0)?;
    let f = |t: f64, q: Complex64| state.velocity(q, t);
    let grid = ode::time_grid(t0, t1, dt);
    let mut beables = Vec::with_capacity(grid.len());
    beables.push(ModeBeable {
        t: t0,
        q: q0,
        pi: v0.conj(),
    });
    let mut q = q0;
    for w in grid.windows(2) {
        let next = ode::advance(&f, w[0], q, w[1] - w[0]).and_then(|nq| Ok((nq, state.velocity(nq, w[1])?)));
        match next {
            Ok((nq, v)) if nq.is_finite() => {
                q = nq;
                beables.push(ModeBeable {
                    t: w[1],
                    q,
                    pi: v.conj(),
                });
            }
            _ => {
                return Ok(ModeTrajectory {
                    beables,
                    status: ModeStatus::AbortedAtNode,
                })
            }
        }
    }
    Ok(ModeTrajectory {
        beables,
        status: ModeStatus::Completed,
    })
}

/// Draws `n` beables from `|Psi(q, t)|^2` by rejection from the Gaussian
/// proposal `exp(-omega |q|^2)`.
pub fn sample_mode_beables(state: &ModeState, n: usize, t: f64, seed: u64) -> Result<Vec<Complex64>> {
    let w = state.omega();
    let a = state.alpha.norm();
    let b = state.beta.norm() * (2.0 * w).sqrt();
    // Acceptance ratio is exp(-omega r^2) |f|^2 <= exp(-omega r^2) (a + b r)^2.
    let r_max = 12.0 / w.sqrt();
    let bound = (0..=10_000)
        .map(|i| {
            let r = r_max * i as f64 / 10_000.0;
            (-w * r * r).exp() * (a + b * r).powi(2)
        })
        .fold(0.0, f64::max)
        * 1.01;
    let sd = (0.5 / w).sqrt();
    let mut rng = substream(seed, StreamTag::ModeBeables, 0);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::Grid("rejection sampler made no progress".into()));
        }
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let q = Complex64::new(sd * u, sd * v);
        let (f, _, _) = state.holomorphic(q, t);
        let ratio = (-w * q.norm_sqr()).exp() * f.norm_sqr() / bound;
        if rng.random::<f64>() < ratio {
            out.push(q);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn superposition() -> ModeState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ModeState::new(1.0, 1.0, c(h, 0.0), c(h, 0.0)).unwrap()
    }

    #[test]
    fn ground_state_is_radial_and_one_photon_has_origin_node() {
        let g = ModeState::ground(1.3, 1.0).unwrap();
        let r = 0.8;
        let m0 = g.wavefunctional(Complex64::from_polar(r, 0.0), 0.4).norm();
        for i in 1..8 {
            let m = g.wavefunctional(Complex64::from_polar(r, i as f64 * 0.8), 0.4).norm();
            assert_relative_eq!(m, m0, max_relative = 1e-14);
        }
        let e = ModeState::one_photon(1.3, 1.0).unwrap();
        assert_eq!(e.wavefunctional(c(0.0, 0.0), 2.0).norm(), 0.0);
        assert!(e.velocity(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn normalization_by_polar_quadrature() {
        for state in [
            ModeState::ground(1.0, 1.0).unwrap(),
            ModeState::one_photon(2.0, 0.5).unwrap(),
            superposition(),
        ] {
            let (nr, nth) = (8000, 64);
            let r_max = 8.0 / state.omega().sqrt();
            let dr = r_max / nr as f64;
            let dth = 2.0 * std::f64::consts::PI / nth as f64;
            let mut total = 0.0;
            for i in 0..nr {
                let r = (i as f64 + 0.5) * dr;
                for j in 0..nth {
                    let q = Complex64::from_polar(r, j as f64 * dth);
                    total += state.density(q, 0.7) * r * dr * dth;
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "norm {total}");
        }
    }

    #[test]
    fn closed_form_velocities() {
        let g = ModeState::ground(1.0, 1.0).unwrap();
        assert_eq!(g.velocity(c(0.7, -0.2), 3.0).unwrap(), c(0.0, 0.0));
        let e = ModeState::one_photon(1.0, 1.0).unwrap();
        for &(r, th) in &[(1.0, 0.3), (0.4, 2.0), (2.2, -1.0)] {
            let q = Complex64::from_polar(r, th);
            let v = e.velocity(q, 1.5).unwrap();
            assert!((v - I * q / (2.0 * r * r)).norm() < 1e-14);
            assert_relative_eq!(v.norm(), 1.0 / (2.0 * r), max_relative = 1e-14);
            // Purely tangential: d|q|/dt = Re(q* v)/|q| = 0.
            assert!((q.conj() * v).re.abs() < 1e-15);
        }
    }

    #[test]
    fn superposition_velocity_matches_phase_differences() {
        let s = superposition();
        let q = c(0.6, 0.0);
        let h = 1e-6;
        let phase = |q: Complex64| s.wavefunctional(q, 0.0).arg();
        let ds_du = (phase(q + h) - phase(q - h)) / (2.0 * h);
        let ds_dv = (phase(q + I * h) - phase(q - I * h)) / (2.0 * h);
        let fd = 0.5 * c(ds_du, ds_dv);
        let v = s.velocity(q, 0.0).unwrap();
        assert!((v - fd).norm() < 1e-6, "{v} vs {fd}");
    }

    #[test]
    fn hj_residual_vanishes() {
        let g = ModeState::ground(1.0, 1.0).unwrap();
        assert!(g.hj_residual(c(0.7, 0.2), 0.0).unwrap().abs() < 1e-8);
        let e = ModeState::one_photon(1.7, 1.0).unwrap();
        let s = superposition();
        for &(q, t) in &[(c(0.3, 0.1), 0.0), (c(-1.2, 0.5), 2.3), (c(0.05, -0.9), 7.0)] {
            assert!(e.hj_residual(q, t).unwrap().abs() < 1e-8);
            assert!(s.hj_residual(q, t).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn hj_quantum_potential_matches_finite_differences() {
        // Oracle for Q: -(1/R) (1/4) Laplacian(R) in (u, v).
        let s = superposition();
        let (q, t) = (c(0.4, -0.3), 0.9);
        let h = 1e-4;
        let r = |q: Complex64| s.wavefunctional(q, t).norm();
        let lap = (r(q + h) + r(q - h) + r(q + I * h) + r(q - I * h) - 4.0 * r(q)) / (h * h);
        let q_fd = -lap / (4.0 * r(q));
        let j = s.jet(q, t).unwrap();
        let dlnr = 0.5 * (j.l_qbar + j.l_q.conj());
        let q_an = -(j.l_qqbar.re + dlnr.norm_sqr());
        assert!((q_fd - q_an).abs() < 1e-5, "{q_fd} vs {q_an}");
    }

    #[test]
    fn energies_are_spaced_by_one_quantum() {
        let s = ModeState::new(2.0, 1.5, c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        assert_relative_eq!(s.excited_energy() - s.ground_energy(), 3.0);
        assert_relative_eq!(s.mean_energy(), 0.36 * 3.0 + 0.64 * 6.0, max_relative = 1e-14);
    }

    #[test]
    fn ground_beable_is_static() {
        let g = ModeState::ground(1.0, 1.0).unwrap();
        let q0 = c(0.3, -0.4);
        let traj = evolve_mode_beable(&g, q0, 0.0, 100.0, 0.05).unwrap();
        assert_eq!(traj.status, ModeStatus::Completed);
        assert!(traj.beables.iter().all(|b| (b.q - q0).norm() < 1e-12));
    }

    #[test]
    fn one_photon_orbit_is_a_circle() {
        let e = ModeState::one_photon(1.0, 1.0).unwrap();
        let r0: f64 = 1.0;
        let period = 2.0 * std::f64::consts::PI * 2.0 * r0 * r0;
        let traj = evolve_mode_beable(&e, c(r0, 0.0), 0.0, 10.0 * period, 0.01).unwrap();
        assert_eq!(traj.status, ModeStatus::Completed);
        for b in &traj.beables {
            assert!((b.q.norm() - r0).abs() < 1e-9);
            assert!((b.pi.conj() - e.velocity(b.q, b.t).unwrap()).norm() < 1e-15);
        }
        // Ten revolutions bring it back near the start (phase error is O(dt^4)).
        assert!((traj.last().q - c(r0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn sampler_reproduces_radial_moment() {
        // <|q|^2> = 1/(2 omega) in the ground state.
        let g = ModeState::ground(2.0, 1.0).unwrap();
        let qs = sample_mode_beables(&g, 20_000, 0.0, 3).unwrap();
        let m2 = qs.iter().map(|q| q.norm_sqr()).sum::<f64>() / qs.len() as f64;
        assert!((m2 - 0.25).abs() < 0.01, "{m2}");
        assert_eq!(qs, sample_mode_beables(&g, 20_000, 0.0, 3).unwrap());
    }
}
