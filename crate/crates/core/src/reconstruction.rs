//! Flow-line reconstruction from a scanned grid of simulated weak momentum
//! measurements.
//!
//! A scan visits every (transverse bin, longitudinal plane) cell, simulates
//! the pointer readout there and stores the arcsin estimate of `Re <P>_W`.
//! Trajectories are then stepped plane to plane with an explicit first-order
//! rule, interpolating linearly in `x` within the current plane only.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bohm_dynamics::{self, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::rng::{substream, StreamTag};
use crate::stats;
use crate::wavefield::WaveModel;
use crate::weak_measurement::{
    pointer_after_weak_coupling, readout_probabilities, sample_counts, weak_value_from_asymmetry, CountRecord,
    CouplingConfig, ReadoutBasis,
};

/// Plane times and transverse bin centers of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub n_planes: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_bins: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 10.0,
            n_planes: 50,
            x_min: -30.0,
            x_max: 30.0,
            n_bins: 400,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_planes < 2 || self.n_bins < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 planes and 2 bins".into()));
        }
        if !(self.t_end > self.t_start) || !(self.x_max > self.x_min) {
            return Err(Error::InvalidArgument("grid spans must be increasing".into()));
        }
        Ok(())
    }

    pub fn plane_time(&self, k: usize) -> f64 {
        self.t_start + (self.t_end - self.t_start) * k as f64 / (self.n_planes - 1) as f64
    }

    pub fn bin_center(&self, j: usize) -> f64 {
        self.x_min + self.dx() * j as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_bins - 1) as f64
    }

    pub fn plane_gap(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_planes - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub eta: f64,
    pub n_total: u64,
    /// Use exact readout probabilities instead of sampled counts.
    pub noiseless: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            n_total: 1_000_000,
            noiseless: false,
        }
    }
}

/// One scanned cell. Missing cells (below the node threshold) carry no
/// values at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanCell {
    Missing,
    Measured {
        w_true: Complex64,
        p_right: f64,
        /// Absent in noiseless mode.
        counts: Option<CountRecord>,
        estimate: f64,
    },
}

impl ScanCell {
    pub fn estimate(&self) -> Option<f64> {
        match self {
            ScanCell::Missing => None,
            ScanCell::Measured { estimate, .. } => Some(*estimate),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, ScanCell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakScanGrid {
    pub spec: GridSpec,
    pub measurement: MeasurementConfig,
    pub seed: u64,
    pub mass: f64,
    pub p_y: f64,
    /// Plane-major: `cells[k * n_bins + j]`.
    cells: Vec<ScanCell>,
}

impl WeakScanGrid {
    /// Builds a grid directly from estimates (`None` marks a missing cell).
    pub fn from_estimates(
        spec: GridSpec,
        mass: f64,
        p_y: f64,
        estimates: impl Fn(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        spec.validate()?;
        let cells = (0..spec.n_planes)
            .flat_map(|k| (0..spec.n_bins).map(move |j| (j, k)))
            .map(|(j, k)| match estimates(j, k) {
                Some(v) => ScanCell::Measured {
                    w_true: Complex64::new(v, 0.0),
                    p_right: f64::NAN,
                    counts: None,
                    estimate: v,
                },
                None => ScanCell::Missing,
            })
            .collect();
        Ok(Self {
            spec,
            measurement: MeasurementConfig {
                eta: f64::NAN,
                n_total: 0,
                noiseless: true,
            },
            seed: 0,
            mass,
            p_y,
            cells,
        })
    }

    pub fn cell(&self, j: usize, k: usize) -> &ScanCell {
        &self.cells[k * self.spec.n_bins + j]
    }

    pub fn value(&self, j: usize, k: usize) -> Option<f64> {
        self.cell(j, k).estimate()
    }

    pub fn plane_time(&self, k: usize) -> f64 {
        self.spec.plane_time(k)
    }

    /// Longitudinal coordinate `y_k = (p_y / m) t_k`.
    pub fn plane_y(&self, k: usize) -> f64 {
        self.p_y / self.mass * self.plane_time(k)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// Linear interpolation in `x` on plane `k`. A missing bracketing cell
    /// is bridged by its present neighbour; two missing cells are a gap.
    pub fn interpolate(&self, x: f64, k: usize) -> Result<f64> {
        let s = &self.spec;
        if k >= s.n_planes {
            return Err(Error::InvalidArgument(format!("plane {k} does not exist")));
        }
        if !(x >= s.x_min && x <= s.x_max) {
            return Err(Error::OutOfRange {
                x,
                min: s.x_min,
                max: s.x_max,
            });
        }
        let pos = (x - s.x_min) / s.dx();
        let j = (pos.floor() as usize).min(s.n_bins - 2);
        let frac = pos - j as f64;
        match (self.value(j, k), self.value(j + 1, k)) {
            (Some(a), Some(b)) => Ok(a + frac * (b - a)),
            (Some(a), None) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(Error::Gap { plane: k, x }),
        }
    }
}

/// Scans the weak momentum over every grid cell. Each cell draws from its
/// own random substream, so the grid is independent of evaluation order.
pub fn run_weak_scan(model: &WaveModel, spec: &GridSpec, meas: &MeasurementConfig, seed: u64) -> Result<WeakScanGrid> {
    spec.validate()?;
    if !(meas.eta > 0.0) || !meas.eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {}",
            meas.eta
        )));
    }
    if !meas.noiseless && meas.n_total == 0 {
        return Err(Error::InvalidArgument("n_total must be positive".into()));
    }
    let coupling = CouplingConfig::with_eta(meas.eta);
    let basis = ReadoutBasis::complementary();
    let n_bins = spec.n_bins;
    let cells = (0..spec.n_planes * n_bins)
        .into_par_iter()
        .map(|idx| {
            let (k, j) = (idx / n_bins, idx % n_bins);
            let (x, t) = (spec.bin_center(j), spec.plane_time(k));
            let w_true = match model.weak_momentum(x, t) {
                Ok(w) => w,
                Err(Error::Node { .. }) => return Ok(ScanCell::Missing),
                Err(e) => return Err(e),
            };
            let pointer = pointer_after_weak_coupling(&coupling, w_true)?;
            let (p_right, p_left) = readout_probabilities(&pointer, &basis);
            let (counts, asym) = if meas.noiseless {
                (None, p_right - p_left)
            } else {
                let mut rng = substream(seed, StreamTag::ScanCell, idx as u64);
                let c = sample_counts(p_right.clamp(0.0, 1.0), meas.n_total, &mut rng)?;
                (Some(c), c.asymmetry()?)
            };
            Ok(ScanCell::Measured {
                w_true,
                p_right,
                counts,
                estimate: weak_value_from_asymmetry(asym, meas.eta),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakScanGrid {
        spec: *spec,
        measurement: *meas,
        seed,
        mass: model.mass(),
        p_y: model.params().p_y,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Gap { plane: usize, x: f64 },
    OutOfRange { plane: usize, x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedTrajectory {
    pub start_plane: usize,
    /// One position per plane from `start_plane` onward, up to termination.
    pub positions: Vec<f64>,
    pub termination: Option<Termination>,
    pub method: &'static str,
}

impl ReconstructedTrajectory {
    pub fn planes(&self) -> impl Iterator<Item = usize> + '_ {
        self.start_plane..self.start_plane + self.positions.len()
    }

    pub fn is_terminated(&self) -> bool {
        self.termination.is_some()
    }
}

pub const INTERPOLATION_METHOD: &str = "linear-x/previous-plane/euler";

/// Steps `x_{k+1} = x_k + (w(x_k, k) / p_y) (y_{k+1} - y_k)` from
/// `start_plane`. A gap or a step leaving the grid ends that trajectory only.
pub fn reconstruct_trajectories(
    grid: &WeakScanGrid,
    starts: &[f64],
    start_plane: usize,
) -> Vec<ReconstructedTrajectory> {
    starts
        .iter()
        .map(|&x0| reconstruct_one(grid, x0, start_plane))
        .collect()
}

fn reconstruct_one(grid: &WeakScanGrid, x0: f64, start_plane: usize) -> ReconstructedTrajectory {
    let mut positions = vec![x0];
    let mut termination = None;
    let mut x = x0;
    for k in start_plane..grid.spec.n_planes - 1 {
        let w = match grid.interpolate(x, k) {
            Ok(w) => w,
            Err(Error::Gap { .. }) => {
                termination = Some(Termination::Gap { plane: k, x });
                break;
            }
            Err(_) => {
                termination = Some(Termination::OutOfRange { plane: k, x });
                break;
            }
        };
        x += w / grid.p_y * (grid.plane_y(k + 1) - grid.plane_y(k));
        positions.push(x);
    }
    if termination.is_none() {
        let s = &grid.spec;
        if !(x >= s.x_min && x <= s.x_max) {
            positions.pop();
            termination = Some(Termination::OutOfRange {
                plane: s.n_planes - 1,
                x,
            });
        }
    }
    ReconstructedTrajectory {
        start_plane,
        positions,
        termination,
        method: INTERPOLATION_METHOD,
    }
}

/// Exact RK4 trajectories from the same starts, on a time grid that hits
/// every plane (`substeps` RK4 steps per plane gap).
pub fn exact_reference(
    model: &WaveModel,
    spec: &GridSpec,
    starts: &[f64],
    start_plane: usize,
    substeps: usize,
) -> Result<TrajectoryEnsemble> {
    let t0 = spec.plane_time(start_plane);
    let dt = spec.plane_gap() / substeps.max(1) as f64;
    bohm_dynamics::integrate_from_starts(model, starts, t0, spec.t_end, dt, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMetrics {
    pub rms: f64,
    pub max_dev: f64,
    pub planes_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMetrics {
    pub per_trajectory: Vec<TrajectoryMetrics>,
    pub mean_rms: f64,
    pub worst_max_dev: f64,
    pub fraction_terminated: f64,
}

/// Deviation of each reconstruction from the exact trajectory with the same
/// start, over the planes both cover.
pub fn compare_trajectories(
    reconstructed: &[ReconstructedTrajectory],
    exact: &TrajectoryEnsemble,
    spec: &GridSpec,
) -> Result<ComparisonMetrics> {
    if reconstructed.len() != exact.trajectories.len() {
        return Err(Error::Mismatch(format!(
            "{} reconstructed vs {} exact trajectories",
            reconstructed.len(),
            exact.trajectories.len()
        )));
    }
    let mut recon: Vec<&ReconstructedTrajectory> = reconstructed.iter().collect();
    recon.sort_by(|a, b| a.positions[0].total_cmp(&b.positions[0]));
    let time_tol = 1e-9 * (spec.t_end - spec.t_start).abs().max(1.0);
    let mut per_trajectory = Vec::with_capacity(recon.len());
    for (r, e) in recon.iter().zip(&exact.trajectories) {
        if (r.positions[0] - e.start()).abs() > 1e-12 * e.start().abs().max(1.0) {
            return Err(Error::Mismatch(format!(
                "start {} has no exact counterpart (nearest {})",
                r.positions[0],
                e.start()
            )));
        }
        let mut sum_sq = 0.0;
        let mut max_dev: f64 = 0.0;
        let mut used = 0;
        let mut cursor = 0;
        for (plane, &x) in r.planes().zip(&r.positions) {
            let t = spec.plane_time(plane);
            while cursor < e.times.len() && e.times[cursor] < t - time_tol {
                cursor += 1;
            }
            if cursor >= e.times.len() || (e.times[cursor] - t).abs() > time_tol {
                break;
            }
            let d = x - e.positions[cursor];
            sum_sq += d * d;
            max_dev = max_dev.max(d.abs());
            used += 1;
        }
        per_trajectory.push(TrajectoryMetrics {
            rms: if used > 0 { (sum_sq / used as f64).sqrt() } else { 0.0 },
            max_dev,
            planes_used: used,
        });
    }
    let n = per_trajectory.len().max(1) as f64;
    Ok(ComparisonMetrics {
        mean_rms: per_trajectory.iter().map(|m| m.rms).sum::<f64>() / n,
        worst_max_dev: per_trajectory.iter().map(|m| m.max_dev).fold(0.0, f64::max),
        fraction_terminated: recon.iter().filter(|r| r.is_terminated()).count() as f64 / n,
        per_trajectory,
    })
}

/// Shot-noise contribution to the per-plane RMS position error of a
/// reconstruction: each step adds independent noise of standard deviation
/// `sigma_w * gap / m`, with `sigma_w = 1 / (2 eta sqrt(N))`, so the error
/// after `k` steps has variance `k (sigma_w gap / m)^2`, averaged here over
/// the `n_planes` planes.
pub fn shot_noise_rms(meas: &MeasurementConfig, spec: &GridSpec, mass: f64) -> f64 {
    let sigma_w = 1.0 / (2.0 * meas.eta * (meas.n_total as f64).sqrt());
    let mean_steps = (spec.n_planes as f64 - 1.0) / 2.0;
    sigma_w * spec.plane_gap() / mass * mean_steps.sqrt()
}

/// Pearson correlation between the histogram of reconstructed endpoints on
/// the final plane and the exact density at the bin centers.
pub fn endpoint_density_correlation(
    model: &WaveModel,
    reconstructed: &[ReconstructedTrajectory],
    spec: &GridSpec,
    bins: usize,
) -> f64 {
    let ends: Vec<f64> = reconstructed
        .iter()
        .filter(|r| !r.is_terminated())
        .map(|r| *r.positions.last().unwrap())
        .collect();
    let (lo, hi) = model.span(spec.t_end, 4.0);
    let (counts, _) = stats::histogram(&ends, lo, hi, bins);
    let width = (hi - lo) / bins as f64;
    let density: Vec<f64> = (0..bins)
        .map(|b| model.density(lo + (b as f64 + 0.5) * width, spec.t_end))
        .collect();
    let counts: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    stats::pearson(&counts, &density)
}
