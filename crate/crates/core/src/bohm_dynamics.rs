//! Exact Bohm trajectories of the two-slit model.
//!
//! Initial positions are drawn from `|psi(x, t0)|^2` by inverse CDF on a
//! tabulated grid, then each is carried along `dx/dt = P_B(x, t) / m` with
//! fixed-step RK4. Steps that touch a node are bisected locally (see
//! [`crate::ode::advance`]); only full-step endpoints are recorded so every
//! trajectory in an ensemble shares one time grid.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode;
use crate::rng::{substream, StreamTag};
use crate::wavefield::WaveModel;

/// Points in the inverse-CDF table.
pub const SAMPLING_GRID_POINTS: usize = 1 << 14;
/// Half-width of the sampling table in packet widths.
pub const SAMPLING_SPAN_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    AbortedAtNode,
}

impl TrajectoryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryStatus::Completed => "completed",
            TrajectoryStatus::AbortedAtNode => "aborted-at-node",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.positions[0]
    }

    pub fn end(&self) -> f64 {
        *self.positions.last().expect("trajectory is never empty")
    }

    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    /// Ordered by initial position.
    pub trajectories: Vec<Trajectory>,
    pub model: WaveModel,
    pub seed: u64,
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
}

impl TrajectoryEnsemble {
    pub fn completed(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter().filter(|t| t.is_completed())
    }

    pub fn aborted_count(&self) -> usize {
        self.trajectories.len() - self.completed().count()
    }

    /// Final positions of completed trajectories.
    pub fn endpoints(&self) -> Vec<f64> {
        self.completed().map(Trajectory::end).collect()
    }
}

/// Draws `n` sorted positions from `|psi(x, t0)|^2`.
pub fn sample_initial_positions(model: &WaveModel, n: usize, t0: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = substream(seed, StreamTag::InitialPositions, 0);
    sample_positions(model, n, t0, &mut rng)
}

/// Inverse-CDF sampling from an explicit random stream; sorted output.
pub fn sample_positions<R: Rng + ?Sized>(model: &WaveModel, n: usize, t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let table = CdfTable::new(model, t)?;
    let mut xs: Vec<f64> = (0..n).map(|_| table.invert(rng.random::<f64>())).collect();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Positions at evenly spaced Born-rule quantiles `(i + 1/2) / n`.
pub fn quantile_positions(model: &WaveModel, n: usize, t0: f64) -> Result<Vec<f64>> {
    let table = CdfTable::new(model, t0)?;
    Ok((0..n).map(|i| table.invert((i as f64 + 0.5) / n as f64)).collect())
}

/// Trapezoid-rule cumulative distribution of the density at one time.
struct CdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    fn new(model: &WaveModel, t: f64) -> Result<Self> {
        let (lo, hi) = model.span(t, SAMPLING_SPAN_SIGMAS);
        let n = SAMPLING_GRID_POINTS;
        let h = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
        let rho: Vec<f64> = xs.iter().map(|&x| model.density(x, t)).collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        for i in 1..n {
            cdf.push(cdf[i - 1] + 0.5 * h * (rho[i - 1] + rho[i]));
        }
        let total = cdf[n - 1];
        if !((total - 1.0).abs() <= 1e-6) {
            return Err(Error::Grid(format!("tabulated density integrates to {total}")));
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok(Self { xs, cdf })
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        }
    }
}

/// RK4 Bohm trajectory from `(x0, t0)` to `t1` with nominal step `dt`.
///
/// Node encounters mid-run end the trajectory with
/// [`TrajectoryStatus::AbortedAtNode`]; only a start inside a node is an error.
pub fn integrate_trajectory(model: &WaveModel, x0: f64, t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t1 > t0 and dt > 0 (t0={t0}, t1={t1}, dt={dt})"
        )));
    }
    model.velocity(x0, t0)?;
    let velocity = |t: f64, x: f64| model.velocity(x, t);
    let grid = ode::time_grid(t0, t1, dt);
    let mut times = Vec::with_capacity(grid.len());
    let mut positions = Vec::with_capacity(grid.len());
    times.push(t0);
    positions.push(x0);
    let mut x = x0;
    for w in grid.windows(2) {
        match ode::advance(&velocity, w[0], x, w[1] - w[0]) {
            Ok(next) if next.is_finite() => {
                x = next;
                times.push(w[1]);
                positions.push(x);
            }
            _ => {
                return Ok(Trajectory {
                    times,
                    positions,
                    status: TrajectoryStatus::AbortedAtNode,
                })
            }
        }
    }
    Ok(Trajectory {
        times,
        positions,
        status: TrajectoryStatus::Completed,
    })
}

/// Integrates one trajectory per start (sorted first), in parallel.
pub fn integrate_from_starts(
    model: &WaveModel,
    starts: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    let mut starts = starts.to_vec();
    starts.sort_by(f64::total_cmp);
    let trajectories = starts
        .par_iter()
        .map(|&x0| integrate_trajectory(model, x0, t0, t1, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryEnsemble {
        trajectories,
        model: model.clone(),
        seed,
        t0,
        t_final: t1,
        dt,
    })
}

/// Born-rule sampling followed by per-trajectory integration.
pub fn integrate_ensemble(model: &WaveModel, spec: &EnsembleSpec) -> Result<TrajectoryEnsemble> {
    let starts = sample_initial_positions(model, spec.n, spec.t0, spec.seed)?;
    integrate_from_starts(model, &starts, spec.t0, spec.t1, spec.dt, spec.seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingReport {
    /// Adjacent pairs found out of order (or coincident) at some time step.
    pub violations: usize,
    /// Smallest gap between order-adjacent trajectories; `None` for fewer
    /// than two trajectories.
    pub min_gap: Option<f64>,
    pub steps_checked: usize,
}

/// Scans every common time step for ordering violations.
pub fn crossing_report(ensemble: &TrajectoryEnsemble) -> CrossingReport {
    let trajs = &ensemble.trajectories;
    let longest = trajs.iter().map(|t| t.positions.len()).max().unwrap_or(0);
    let mut violations = 0;
    let mut min_gap: Option<f64> = None;
    let mut steps_checked = 0;
    for step in 0..longest {
        let mut prev: Option<f64> = None;
        let mut alive = 0;
        for t in trajs.iter().filter(|t| t.positions.len() > step) {
            let x = t.positions[step];
            alive += 1;
            if let Some(p) = prev {
                let gap = x - p;
                if !(gap > 0.0) {
                    violations += 1;
                }
                min_gap = Some(min_gap.map_or(gap, |g| g.min(gap)));
            }
            prev = Some(x);
        }
        if alive >= 2 {
            steps_checked += 1;
        }
    }
    CrossingReport {
        violations,
        min_gap,
        steps_checked,
    }
}
