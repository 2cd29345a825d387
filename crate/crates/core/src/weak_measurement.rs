//! Weak coupling of transverse momentum to a two-level pointer, followed by a
//! strong readout in a complementary basis.
//!
//! The pointer starts as `c_+ |xi_+> + c_- |xi_->` in the eigenbasis of the
//! coupling operator (eigenvalues `a_+- = +-1`). After post-selection at `x`
//! the coefficients become `d_+- = c_+- exp(-i eta a_+- w)` with `w` the weak
//! momentum. Reading out in the circular basis
//! `mu_R,L = (xi_+ +- i xi_-) / sqrt(2)` gives
//!
//! ```text
//! p_R = [cosh(2 eta Im w) + sin(2 eta Re w)] / [2 cosh(2 eta Im w)]
//! ```
//!
//! so the count asymmetry inverts to `Re w` through `arcsin / (2 eta)`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::wavefield::WaveModel;

/// Coupling-operator eigenvalues.
pub const A_PLUS: f64 = 1.0;
pub const A_MINUS: f64 = -1.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Integrated coupling strength `eta = D * delta_t` of a rectangular pulse.
pub fn coupling_eta(strength: f64, duration: f64) -> f64 {
    strength * duration
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub eta: f64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl CouplingConfig {
    /// Balanced initial pointer `(xi_+ + xi_-)/sqrt(2)`.
    pub fn with_eta(eta: f64) -> Self {
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            eta,
            c_plus: c,
            c_minus: c,
        }
    }

    pub fn from_pulse(strength: f64, duration: f64) -> Result<Self> {
        if !(duration >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pulse duration must be non-negative, got {duration}"
            )));
        }
        Ok(Self::with_eta(coupling_eta(strength, duration)))
    }

    /// Arbitrary initial pointer, normalized.
    pub fn with_pointer(eta: f64, c_plus: Complex64, c_minus: Complex64) -> Result<Self> {
        let n = (c_plus.norm_sqr() + c_minus.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate);
        }
        Ok(Self {
            eta,
            c_plus: c_plus / n,
            c_minus: c_minus / n,
        })
    }
}

/// Pointer coefficients in the coupling eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerState {
    pub d_plus: Complex64,
    pub d_minus: Complex64,
}

impl PointerState {
    pub fn norm_sqr(&self) -> f64 {
        self.d_plus.norm_sqr() + self.d_minus.norm_sqr()
    }

    pub fn as_vector(&self) -> Vector2<Complex64> {
        Vector2::new(self.d_plus, self.d_minus)
    }
}

/// Applies `d_n = c_n exp(-i eta a_n w)` and renormalizes.
///
/// A complex `w` also rescales the moduli by `exp(+- eta Im w)`.
pub fn pointer_after_weak_coupling(cfg: &CouplingConfig, w: Complex64) -> Result<PointerState> {
    let minus_i = Complex64::new(0.0, -1.0);
    let d_plus = cfg.c_plus * (minus_i * cfg.eta * A_PLUS * w).exp();
    let d_minus = cfg.c_minus * (minus_i * cfg.eta * A_MINUS * w).exp();
    let n = (d_plus.norm_sqr() + d_minus.norm_sqr()).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate);
    }
    Ok(PointerState {
        d_plus: d_plus / n,
        d_minus: d_minus / n,
    })
}

/// Unitary change of basis: `matrix[(r, n)] = <mu_r | xi_n>`.
/// Row 0 is the "right" outcome, row 1 the "left" outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutBasis {
    matrix: Matrix2<Complex64>,
}

impl ReadoutBasis {
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self> {
        let defect = (matrix * matrix.adjoint() - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "readout basis change is not unitary (defect {defect:e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// Circular pair `mu_R,L = (xi_+ +- i xi_-)/sqrt(2)`.
    pub fn complementary() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            matrix: Matrix2::new(
                Complex64::new(h, 0.0),
                Complex64::new(0.0, -h),
                Complex64::new(h, 0.0),
                Complex64::new(0.0, h),
            ),
        }
    }

    /// Readout in the coupling eigenbasis itself (right = `xi_+`).
    pub fn coupling() -> Self {
        Self {
            matrix: Matrix2::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }
}

impl Default for ReadoutBasis {
    fn default() -> Self {
        Self::complementary()
    }
}

/// `p_r = |sum_n <mu_r|xi_n> d_n|^2` for the two outcomes.
pub fn readout_probabilities(pointer: &PointerState, basis: &ReadoutBasis) -> (f64, f64) {
    let amps = basis.matrix * pointer.as_vector();
    (amps[0].norm_sqr(), amps[1].norm_sqr())
}

/// Closed form of the right-outcome probability for the balanced pointer
/// read out in the complementary basis.
pub fn p_right_closed_form(w: Complex64, eta: f64) -> f64 {
    let c = (2.0 * eta * w.im).cosh();
    (c + (2.0 * eta * w.re).sin()) / (2.0 * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountRecord {
    pub n_right: u64,
    pub n_left: u64,
}

impl CountRecord {
    pub fn n_total(&self) -> u64 {
        self.n_right + self.n_left
    }

    /// `(N_R - N_L)/(N_R + N_L)`.
    pub fn asymmetry(&self) -> Result<f64> {
        if self.n_total() == 0 {
            return Err(Error::EmptyCounts);
        }
        Ok((self.n_right as f64 - self.n_left as f64) / self.n_total() as f64)
    }
}

/// Binomial split of `n_total` detections.
pub fn sample_counts<R: Rng + ?Sized>(p_right: f64, n_total: u64, rng: &mut R) -> Result<CountRecord> {
    if !(0.0..=1.0).contains(&p_right) {
        return Err(Error::InvalidArgument(format!("p_right={p_right} outside [0, 1]")));
    }
    let n_right = Binomial::new(n_total, p_right)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok(CountRecord {
        n_right,
        n_left: n_total - n_right,
    })
}

/// Estimator gain `G = 1/(2 eta)` of the default pointer and readout.
pub fn gain(eta: f64) -> f64 {
    0.5 / eta
}

/// `G arcsin(asym)` with the argument clamped to `[-1, 1]` (saturation).
pub fn weak_value_from_asymmetry(asym: f64, eta: f64) -> f64 {
    gain(eta) * asym.clamp(-1.0, 1.0).asin()
}

/// Estimate of `Re <P>_W` from complementary-basis counts.
pub fn extract_weak_value(counts: &CountRecord, eta: f64) -> Result<f64> {
    Ok(weak_value_from_asymmetry(counts.asymmetry()?, eta))
}

/// Estimate of `Im <P>_W` (minus the osmotic momentum) from counts taken in
/// the coupling eigenbasis, where `asym = tanh(2 eta Im w)`. Experimental:
/// the estimator diverges as the asymmetry saturates.
pub fn extract_osmotic(counts: &CountRecord, eta: f64) -> Result<f64> {
    let asym = counts.asymmetry()?;
    imaginary_from_asymmetry(asym, eta)
}

pub fn imaginary_from_asymmetry(asym: f64, eta: f64) -> Result<f64> {
    if !(asym.abs() < 1.0) {
        return Err(Error::Domain(asym));
    }
    Ok(gain(eta) * asym.atanh())
}

/// Size of the leading neglected term, `eta^2/2 |<P^2>_W - <P>_W^2|`.
pub fn remainder_magnitude(model: &WaveModel, x: f64, t: f64, eta: f64) -> Result<f64> {
    Ok(0.5 * eta * eta * model.weak_variance(x, t)?.norm())
}

/// Weak-regime heuristic: the remainder is below 1% of `|eta w|`.
pub fn is_weak_regime(model: &WaveModel, x: f64, t: f64, eta: f64) -> Result<bool> {
    let r = remainder_magnitude(model, x, t, eta)?;
    let w = model.weak_momentum(x, t)?;
    Ok(r < 0.01 * (eta * w).norm())
}

/// General weak value `<phi|A|psi> / <phi|psi>`. Values outside the
/// eigenvalue range of `A` are legitimate.
pub fn weak_value_general(
    op: &DMatrix<Complex64>,
    pre: &DVector<Complex64>,
    post: &DVector<Complex64>,
) -> Result<Complex64> {
    let d = pre.len();
    if op.nrows() != d || op.ncols() != d || post.len() != d {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    if pre.iter().all(|z| *z == ZERO) || post.iter().all(|z| *z == ZERO) {
        return Err(Error::InvalidArgument("zero state".into()));
    }
    let overlap = post.dotc(pre);
    if overlap.norm() < 1e-14 * pre.norm() * post.norm() {
        return Err(Error::OrthogonalPostselection);
    }
    Ok(post.dotc(&(op * pre)) / overlap)
}
