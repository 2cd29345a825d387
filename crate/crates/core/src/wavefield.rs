//! Closed-form two-slit wavefunction and the local fields derived from it.
//!
//! The transverse wavefunction is a normalized superposition of two freely
//! spreading Gaussian packets,
//!
//! ```text
//! psi(x, t) = N [psi_1(x, t) + e^{i delta} psi_2(x, t)]
//! psi_j     = (2 pi s_t^2)^{-1/4} exp[-(x - x_j - k_j t/m)^2 / (4 sigma0 s_t)
//!                                   + i (k_j x - k_j^2 t / 2m)]
//! s_t       = sigma0 (1 + i t / (2 m sigma0^2))
//! ```
//!
//! with hbar = 1. Every packet is an exact solution of the free Schrodinger
//! equation, so the quantum Hamilton-Jacobi residual vanishes identically.
//! All derivatives are analytic; finite differences appear only in tests.
//!
//! A constant external potential `V` can be switched on. With
//! `gauge_corrected` the wavefunction carries the compensating phase
//! `e^{-iVt}` and stays an exact solution; without it the residual is `V`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// User-facing parameters of the two-slit model.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveParams {
    pub mass: f64,
    pub x1: f64,
    pub x2: f64,
    pub sigma0: f64,
    pub k1: f64,
    pub k2: f64,
    /// Relative phase of the second packet (radians).
    pub delta: f64,
    /// Constant external potential.
    pub potential: f64,
    /// Whether the wavefunction carries the phase `e^{-i potential t}`.
    pub gauge_corrected: bool,
    /// Longitudinal momentum, used only to map time onto the beam axis.
    pub p_y: f64,
    /// Node threshold relative to the peak-density bound at time `t`.
    pub rho_min: f64,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            x1: -4.0,
            x2: 4.0,
            sigma0: 1.0,
            k1: 0.0,
            k2: 0.0,
            delta: 0.0,
            potential: 0.0,
            gauge_corrected: true,
            p_y: 10.0,
            rho_min: 1e-12,
        }
    }
}

/// Validated two-slit model with its normalization cached.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveModel {
    params: WaveParams,
    norm: f64,
}

/// Wavefunction and its analytic partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiJet {
    pub psi: Complex64,
    pub dx: Complex64,
    pub dxx: Complex64,
    pub dt: Complex64,
}

/// Every local quantity derived from the wavefunction at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub t: f64,
    pub psi: Complex64,
    pub rho: f64,
    /// Phase gradient, the Bohm momentum.
    pub p_bohm: f64,
    /// grad(rho) / 2 rho.
    pub p_osmotic: f64,
    /// Quantum potential -R''/(2mR).
    pub q_pot: f64,
    /// -dS/dt.
    pub e_bohm: f64,
    /// dS/dt + (dS/dx)^2/2m + Q + V.
    pub hj_residual: f64,
}

impl FieldSample {
    /// Complex weak momentum at the post-selected position.
    pub fn weak_momentum(&self) -> Complex64 {
        Complex64::new(self.p_bohm, -self.p_osmotic)
    }
}

/// Energy density `rho E_B` and momentum density `rho P_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentumDensities {
    pub t00: f64,
    pub t0i: f64,
}

impl WaveModel {
    pub fn new(params: WaveParams) -> Result<Self> {
        let p = &params;
        let finite = [
            p.mass,
            p.x1,
            p.x2,
            p.sigma0,
            p.k1,
            p.k2,
            p.delta,
            p.potential,
            p.p_y,
            p.rho_min,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if p.mass <= 0.0 {
            return Err(Error::InvalidModel(format!("mass must be positive, got {}", p.mass)));
        }
        if p.sigma0 <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "sigma0 must be positive, got {}",
                p.sigma0
            )));
        }
        if p.rho_min < 0.0 {
            return Err(Error::InvalidModel("rho_min must be non-negative".into()));
        }
        let norm_sq = 2.0 + 2.0 * (Complex64::from_polar(1.0, p.delta) * packet_overlap(p)).re;
        if norm_sq < 1e-24 {
            return Err(Error::InvalidModel("packets cancel exactly".into()));
        }
        Ok(Self {
            norm: norm_sq.sqrt().recip(),
            params,
        })
    }

    /// The default scenario: slits at +-4, unit width and mass.
    pub fn default_two_slit() -> Self {
        Self::new(WaveParams::default()).expect("default parameters are valid")
    }

    /// Single packet at rest centered on the origin.
    pub fn single(sigma0: f64, mass: f64) -> Result<Self> {
        Self::new(WaveParams {
            mass,
            sigma0,
            x1: 0.0,
            x2: 0.0,
            ..WaveParams::default()
        })
    }

    /// Symmetric two-slit model with slits at `+-half_separation`.
    pub fn symmetric(half_separation: f64, sigma0: f64, mass: f64) -> Result<Self> {
        Self::new(WaveParams {
            mass,
            sigma0,
            x1: -half_separation,
            x2: half_separation,
            ..WaveParams::default()
        })
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn mass(&self) -> f64 {
        self.params.mass
    }

    /// Two-packet normalization constant `N`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Packet width `|s_t| = sigma0 sqrt(1 + tau^2)` at time `t`.
    pub fn sigma_t(&self, t: f64) -> f64 {
        let tau = t / (2.0 * self.params.mass * self.params.sigma0 * self.params.sigma0);
        self.params.sigma0 * (1.0 + tau * tau).sqrt()
    }

    /// Packet centers at time `t`.
    pub fn centers(&self, t: f64) -> (f64, f64) {
        let p = &self.params;
        (p.x1 + p.k1 * t / p.mass, p.x2 + p.k2 * t / p.mass)
    }

    /// Interval covering both packets out to `n_sigma` widths.
    pub fn span(&self, t: f64, n_sigma: f64) -> (f64, f64) {
        let (c1, c2) = self.centers(t);
        let w = n_sigma * self.sigma_t(t);
        (c1.min(c2) - w, c1.max(c2) + w)
    }

    /// Upper bound on `|psi(., t)|^2`; node thresholds are relative to it.
    pub fn peak_density_bound(&self, t: f64) -> f64 {
        4.0 * self.norm * self.norm / (TWO_PI.sqrt() * self.sigma_t(t))
    }

    pub fn node_threshold(&self, t: f64) -> f64 {
        self.params.rho_min * self.peak_density_bound(t)
    }

    /// Longitudinal position of the transverse plane reached at time `t`.
    pub fn longitudinal(&self, t: f64) -> f64 {
        self.params.p_y / self.params.mass * t
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let (a, b) = (self.packet(0, x, t), self.packet(1, x, t));
        (a.value + self.second_phase() * b.value) * self.norm * self.gauge(t)
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.psi(x, t).norm_sqr()
    }

    /// `psi` with its first and second `x` derivatives and its `t` derivative.
    pub fn jet(&self, x: f64, t: f64) -> PsiJet {
        let phase = self.second_phase();
        let scale = self.gauge(t) * self.norm;
        let mut jet = PsiJet {
            psi: Complex64::new(0.0, 0.0),
            dx: Complex64::new(0.0, 0.0),
            dxx: Complex64::new(0.0, 0.0),
            dt: Complex64::new(0.0, 0.0),
        };
        for (j, weight) in [(0, Complex64::new(1.0, 0.0)), (1, phase)] {
            let p = self.packet(j, x, t);
            let v = p.value * weight;
            jet.psi += v;
            jet.dx += v * p.dlog_x;
            jet.dxx += v * (p.dlog_x * p.dlog_x + p.d2log_x);
            jet.dt += v * p.dlog_t;
        }
        jet.psi *= scale;
        jet.dx *= scale;
        jet.dxx *= scale;
        jet.dt *= scale;
        if self.params.gauge_corrected {
            jet.dt -= Complex64::new(0.0, self.params.potential) * jet.psi;
        }
        jet
    }

    /// All local fields at `(x, t)`; refuses points below the node threshold.
    pub fn field_sample(&self, x: f64, t: f64) -> Result<FieldSample> {
        let jet = self.jet(x, t);
        let rho = self.checked_density(&jet, x, t)?;
        let m = self.params.mass;
        let u = jet.dx / jet.psi;
        let du = jet.dxx / jet.psi - u * u;
        let dlog_t = jet.dt / jet.psi;
        let p_bohm = u.im;
        let p_osmotic = u.re;
        let q_pot = -(u.re * u.re + du.re) / (2.0 * m);
        let ds_dt = dlog_t.im;
        Ok(FieldSample {
            x,
            t,
            psi: jet.psi,
            rho,
            p_bohm,
            p_osmotic,
            q_pot,
            e_bohm: -ds_dt,
            hj_residual: ds_dt + p_bohm * p_bohm / (2.0 * m) + q_pot + self.params.potential,
        })
    }

    pub fn hj_residual(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.field_sample(x, t)?.hj_residual)
    }

    /// Weak value of momentum post-selected at `x`: `-i psi'/psi`.
    pub fn weak_momentum(&self, x: f64, t: f64) -> Result<Complex64> {
        Ok(self.field_sample(x, t)?.weak_momentum())
    }

    /// Weak value of `P^2` post-selected at `x`: `-psi''/psi`.
    pub fn weak_momentum_second(&self, x: f64, t: f64) -> Result<Complex64> {
        let jet = self.jet(x, t);
        self.checked_density(&jet, x, t)?;
        Ok(-jet.dxx / jet.psi)
    }

    /// `<P^2>_W - <P>_W^2`, the coefficient of the leading neglected term.
    pub fn weak_variance(&self, x: f64, t: f64) -> Result<Complex64> {
        let jet = self.jet(x, t);
        self.checked_density(&jet, x, t)?;
        let w = Complex64::new(0.0, -1.0) * jet.dx / jet.psi;
        Ok(-jet.dxx / jet.psi - w * w)
    }

    /// Bohm velocity `P_B / m`, evaluating only what the guidance law needs.
    pub fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        let phase = self.second_phase();
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dx = Complex64::new(0.0, 0.0);
        for (j, weight) in [(0, Complex64::new(1.0, 0.0)), (1, phase)] {
            let p = self.packet(j, x, t);
            let v = p.value * weight;
            psi += v;
            dx += v * p.dlog_x;
        }
        let rho = psi.norm_sqr() * self.norm * self.norm;
        let threshold = self.node_threshold(t);
        if !(rho >= threshold) {
            return Err(Error::Node { x, t, rho, threshold });
        }
        Ok((dx / psi).im / self.params.mass)
    }

    /// Total function: densities vanish at nodes rather than erroring.
    pub fn em_densities(&self, x: f64, t: f64) -> EnergyMomentumDensities {
        let jet = self.jet(x, t);
        let conj = jet.psi.conj();
        EnergyMomentumDensities {
            t00: -(conj * jet.dt).im,
            t0i: (conj * jet.dx).im,
        }
    }

    fn checked_density(&self, jet: &PsiJet, x: f64, t: f64) -> Result<f64> {
        let rho = jet.psi.norm_sqr();
        let threshold = self.node_threshold(t);
        // Negated comparison also rejects NaN.
        if !(rho >= threshold) || rho == 0.0 {
            return Err(Error::Node { x, t, rho, threshold });
        }
        Ok(rho)
    }

    fn second_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.params.delta)
    }

    fn gauge(&self, t: f64) -> Complex64 {
        if self.params.gauge_corrected && self.params.potential != 0.0 {
            Complex64::from_polar(1.0, -self.params.potential * t)
        } else {
            Complex64::new(1.0, 0.0)
        }
    }

    fn packet(&self, j: usize, x: f64, t: f64) -> Packet {
        let p = &self.params;
        let (center0, k) = if j == 0 { (p.x1, p.k1) } else { (p.x2, p.k2) };
        let m = p.mass;
        let s0 = p.sigma0;
        let i = Complex64::new(0.0, 1.0);
        let s_t = Complex64::new(s0, t / (2.0 * m * s0));
        let ds_t = Complex64::new(0.0, 1.0 / (2.0 * m * s0));
        let xi = x - center0 - k * t / m;
        let denom = 4.0 * s0 * s_t;
        let log_value = -0.25 * TWO_PI.ln() - 0.5 * s_t.ln() - xi * xi / denom + i * (k * x - k * k * t / (2.0 * m));
        let dlog_x = -xi / (2.0 * s0 * s_t) + i * k;
        let d2log_x = -1.0 / (2.0 * s0 * s_t);
        let dlog_t = -ds_t / (2.0 * s_t) + (2.0 * xi * k / m) / denom + xi * xi * ds_t / (4.0 * s0 * s_t * s_t)
            - i * (k * k / (2.0 * m));
        Packet {
            value: log_value.exp(),
            dlog_x,
            d2log_x,
            dlog_t,
        }
    }
}

struct Packet {
    value: Complex64,
    dlog_x: Complex64,
    d2log_x: Complex64,
    dlog_t: Complex64,
}

/// `<psi_1 | psi_2>`, conserved by free evolution and evaluated at `t = 0`.
fn packet_overlap(p: &WaveParams) -> Complex64 {
    let dx = p.x1 - p.x2;
    let dk = p.k2 - p.k1;
    let s2 = p.sigma0 * p.sigma0;
    let magnitude = (-dx * dx / (8.0 * s2) - s2 * dk * dk / 2.0).exp();
    Complex64::from_polar(magnitude, dk * 0.5 * (p.x1 + p.x2))
}
