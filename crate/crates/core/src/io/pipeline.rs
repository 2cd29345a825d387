//! Stage orchestration: fields, trajectories, weak scan, reconstruction,
//! comparison and the field-mode demo, each writing one CSV.
//!
//! Stages run sequentially in a fixed order. Intermediate results needed by
//! later stages (the scan for reconstruction, the reconstruction for the
//! comparison) are computed on demand even when their own stage was not
//! requested; only requested stages write files. A failing stage is recorded
//! in the manifest and does not remove earlier outputs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use super::config::{RunConfig, Stage};
use super::output::{self, Cell};
use crate::bohm_dynamics::{self, crossing_report};
use crate::field_mode::{evolve_mode_beable, ModeStatus};
use crate::reconstruction::{
    compare_trajectories, exact_reference, reconstruct_trajectories, run_weak_scan, ComparisonMetrics,
    ReconstructedTrajectory, ScanCell, WeakScanGrid,
};
use crate::rng::{substream, StreamTag};
use crate::wavefield::WaveModel;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum StageStatus {
    Ok,
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: Stage,
    pub file: Option<PathBuf>,
    pub status: StageStatus,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_text: String,
    pub version: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    /// Flat diagnostics such as `compare.mean_rms`.
    pub summary: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn all_ok(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Ok)
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Flat JSON object with sorted keys.
    pub fn to_json(&self) -> String {
        let mut map: BTreeMap<String, Value> = BTreeMap::new();
        map.insert("version".into(), json!(self.version));
        map.insert("seed".into(), json!(self.seed));
        map.insert("config".into(), json!(self.config_text));
        for r in &self.stages {
            let name = r.stage.name();
            let status = match &r.status {
                StageStatus::Ok => "ok".to_string(),
                StageStatus::Aborted(msg) => format!("aborted: {msg}"),
            };
            map.insert(format!("stage.{name}.status"), json!(status));
            map.insert(format!("stage.{name}.wall_seconds"), json!(r.wall_seconds));
            if let Some(f) = &r.file {
                map.insert(format!("stage.{name}.file"), json!(f.display().to_string()));
            }
        }
        for (k, v) in &self.summary {
            map.insert(format!("summary.{k}"), v.clone());
        }
        serde_json::to_string_pretty(&map).expect("flat map serializes")
    }
}

type StageResult<T> = Result<T, String>;

struct Context<'a> {
    cfg: &'a RunConfig,
    model: WaveModel,
    scan: Option<StageResult<WeakScanGrid>>,
    reconstruction: Option<StageResult<Vec<ReconstructedTrajectory>>>,
    summary: BTreeMap<String, Value>,
}

impl<'a> Context<'a> {
    fn scan(&mut self) -> StageResult<&WeakScanGrid> {
        if self.scan.is_none() {
            let r = run_weak_scan(&self.model, &self.cfg.grid, &self.cfg.measurement(), self.cfg.seed)
                .map_err(|e| e.to_string());
            self.scan = Some(r);
        }
        self.scan
            .as_ref()
            .unwrap()
            .as_ref()
            .map_err(|e| format!("weak scan failed: {e}"))
    }

    fn reconstruction(&mut self) -> StageResult<&[ReconstructedTrajectory]> {
        if self.reconstruction.is_none() {
            let r = self.build_reconstruction();
            self.reconstruction = Some(r);
        }
        self.reconstruction
            .as_ref()
            .unwrap()
            .as_deref()
            .map_err(|e| format!("reconstruction failed: {e}"))
    }

    fn build_reconstruction(&mut self) -> StageResult<Vec<ReconstructedTrajectory>> {
        let starts = self.reconstruction_starts()?;
        let plane = self.cfg.start_plane;
        let grid = self.scan()?;
        Ok(reconstruct_trajectories(grid, &starts, plane))
    }

    fn reconstruction_starts(&self) -> StageResult<Vec<f64>> {
        let t = self.cfg.grid.plane_time(self.cfg.start_plane);
        let mut rng = substream(self.cfg.seed, StreamTag::ReconstructionStarts, 0);
        bohm_dynamics::sample_positions(&self.model, self.cfg.n_reconstruct, t, &mut rng).map_err(|e| e.to_string())
    }
}

/// Runs the configured stages, writing CSVs and `manifest.json` into the
/// output directory. Only I/O failures are returned as errors; numerical
/// failures are recorded per stage.
pub fn run_pipeline(cfg: &RunConfig) -> std::io::Result<RunManifest> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut ctx = Context {
        cfg,
        model: cfg.model(),
        scan: None,
        reconstruction: None,
        summary: BTreeMap::new(),
    };
    let mut stages = cfg.stages.clone();
    stages.sort();
    stages.dedup();
    let mut records = Vec::new();
    for stage in stages {
        let started = Instant::now();
        let result = match stage {
            Stage::Fields => fields_rows(&mut ctx),
            Stage::Trajectories => trajectory_rows(&mut ctx),
            Stage::WeakScan => scan_rows(&mut ctx),
            Stage::Reconstruct => reconstruction_rows(&mut ctx),
            Stage::Compare => compare_rows(&mut ctx),
            Stage::FieldMode => mode_rows(&mut ctx),
        };
        let rendered = result.and_then(|(columns, rows)| {
            output::render_csv(stage.file_name(), columns, &rows).map_err(|e| e.to_string())
        });
        let (file, status) = match rendered {
            Ok(text) => {
                let path = cfg.out_dir.join(stage.file_name());
                output::write_file(&path, &text)?;
                (Some(path), StageStatus::Ok)
            }
            Err(msg) => (None, StageStatus::Aborted(msg)),
        };
        records.push(StageRecord {
            stage,
            file,
            status,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }
    let manifest = RunManifest {
        config_text: cfg.to_text(),
        version: VERSION.to_string(),
        seed: cfg.seed,
        stages: records,
        summary: ctx.summary,
    };
    output::write_file(&cfg.out_dir.join("manifest.json"), &manifest.to_json())?;
    Ok(manifest)
}

type Table = (output::Columns, Vec<Vec<Cell>>);

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn fields_rows(ctx: &mut Context) -> StageResult<Table> {
    let f = &ctx.cfg.fields;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for t in linspace(f.t_min, f.t_max, f.nt) {
        for x in linspace(f.x_min, f.x_max, f.nx) {
            // Points below the node threshold have no defined phase fields.
            let Ok(s) = ctx.model.field_sample(x, t) else {
                skipped += 1;
                continue;
            };
            rows.push(vec![
                x.into(),
                t.into(),
                s.psi.re.into(),
                s.psi.im.into(),
                s.rho.into(),
                s.p_bohm.into(),
                s.p_osmotic.into(),
                s.q_pot.into(),
                s.e_bohm.into(),
                s.hj_residual.into(),
            ]);
        }
    }
    ctx.summary.insert("fields.node_points_skipped".into(), json!(skipped));
    Ok((output::FIELDS_COLUMNS, rows))
}

fn trajectory_rows(ctx: &mut Context) -> StageResult<Table> {
    let ensemble = bohm_dynamics::integrate_ensemble(&ctx.model, &ctx.cfg.ensemble()).map_err(|e| e.to_string())?;
    let report = crossing_report(&ensemble);
    ctx.summary
        .insert("trajectories.count".into(), json!(ensemble.trajectories.len()));
    ctx.summary
        .insert("trajectories.aborted".into(), json!(ensemble.aborted_count()));
    ctx.summary
        .insert("trajectories.crossing_violations".into(), json!(report.violations));
    ctx.summary.insert("trajectories.min_gap".into(), json!(report.min_gap));
    let stride = ctx.cfg.trajectory_stride;
    let mut rows = Vec::new();
    for (id, traj) in ensemble.trajectories.iter().enumerate() {
        let last = traj.times.len() - 1;
        for i in (0..=last).filter(|&i| i % stride == 0 || i == last) {
            rows.push(vec![
                id.into(),
                traj.times[i].into(),
                traj.positions[i].into(),
                Cell::Text(traj.status.as_str()),
            ]);
        }
    }
    Ok((output::TRAJECTORY_COLUMNS, rows))
}

fn scan_rows(ctx: &mut Context) -> StageResult<Table> {
    let grid = ctx.scan()?;
    let spec = grid.spec;
    let mut rows = Vec::with_capacity(spec.n_planes * spec.n_bins);
    let mut missing = 0usize;
    for k in 0..spec.n_planes {
        for j in 0..spec.n_bins {
            let mut row = vec![
                k.into(),
                grid.plane_time(k).into(),
                grid.plane_y(k).into(),
                j.into(),
                spec.bin_center(j).into(),
            ];
            match grid.cell(j, k) {
                ScanCell::Missing => {
                    missing += 1;
                    row.extend([
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                    ]);
                    row.push(true.into());
                }
                ScanCell::Measured {
                    w_true,
                    p_right,
                    counts,
                    estimate,
                } => {
                    row.extend([w_true.re.into(), w_true.im.into(), (*p_right).into()]);
                    match counts {
                        Some(c) => row.extend([c.n_right.into(), c.n_left.into()]),
                        None => row.extend([Cell::Empty, Cell::Empty]),
                    }
                    row.push((*estimate).into());
                    row.push(false.into());
                }
            }
            rows.push(row);
        }
    }
    ctx.summary.insert("weak_scan.missing_cells".into(), json!(missing));
    Ok((output::WEAK_SCAN_COLUMNS, rows))
}

fn reconstruction_rows(ctx: &mut Context) -> StageResult<Table> {
    let recon = ctx.reconstruction()?.to_vec();
    let grid = ctx.scan()?;
    let mut rows = Vec::new();
    for (id, r) in recon.iter().enumerate() {
        for (k, &x) in r.planes().zip(&r.positions) {
            rows.push(vec![
                id.into(),
                k.into(),
                grid.plane_y(k).into(),
                x.into(),
                r.is_terminated().into(),
            ]);
        }
    }
    let terminated = recon.iter().filter(|r| r.is_terminated()).count();
    ctx.summary.insert("reconstruct.count".into(), json!(recon.len()));
    ctx.summary.insert("reconstruct.terminated".into(), json!(terminated));
    Ok((output::RECONSTRUCTED_COLUMNS, rows))
}

/// Reconstruction against exact RK4 trajectories from the same starts.
pub fn compare_reconstruction(
    model: &WaveModel,
    cfg: &RunConfig,
    recon: &[ReconstructedTrajectory],
) -> crate::Result<ComparisonMetrics> {
    let starts: Vec<f64> = recon.iter().map(|r| r.positions[0]).collect();
    let exact = exact_reference(model, &cfg.grid, &starts, cfg.start_plane, cfg.exact_substeps)?;
    compare_trajectories(recon, &exact, &cfg.grid)
}

fn compare_rows(ctx: &mut Context) -> StageResult<Table> {
    let recon = ctx.reconstruction()?.to_vec();
    let metrics = compare_reconstruction(&ctx.model, ctx.cfg, &recon).map_err(|e| e.to_string())?;
    ctx.summary.insert("compare.mean_rms".into(), json!(metrics.mean_rms));
    ctx.summary
        .insert("compare.worst_max_dev".into(), json!(metrics.worst_max_dev));
    ctx.summary
        .insert("compare.fraction_terminated".into(), json!(metrics.fraction_terminated));
    ctx.summary.insert("compare.grid_dx".into(), json!(ctx.cfg.grid.dx()));
    let rows = metrics
        .per_trajectory
        .iter()
        .enumerate()
        .map(|(id, m)| vec![id.into(), m.rms.into(), m.max_dev.into(), m.planes_used.into()])
        .collect();
    Ok((output::COMPARE_COLUMNS, rows))
}

fn mode_rows(ctx: &mut Context) -> StageResult<Table> {
    let m = &ctx.cfg.mode;
    let state = ctx.cfg.mode_state().map_err(|e| e.to_string())?;
    let traj = evolve_mode_beable(&state, m.q0, m.t0, m.t1, m.dt).map_err(|e| e.to_string())?;
    let status = match traj.status {
        ModeStatus::Completed => "completed",
        ModeStatus::AbortedAtNode => "aborted-at-node",
    };
    ctx.summary.insert("field_mode.status".into(), json!(status));
    ctx.summary
        .insert("field_mode.mean_energy".into(), json!(state.mean_energy()));
    let last = traj.beables.len() - 1;
    let rows = traj
        .beables
        .iter()
        .enumerate()
        .filter(|(i, _)| i % m.stride == 0 || *i == last)
        .map(|(_, b)| vec![b.t.into(), b.q.re.into(), b.q.im.into(), b.q.norm().into()])
        .collect();
    Ok((output::MODE_BEABLE_COLUMNS, rows))
}
