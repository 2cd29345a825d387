use pilotwave::bohm_dynamics::sample_positions;
use pilotwave::reconstruction::{
    endpoint_density_correlation, reconstruct_trajectories, run_weak_scan, GridSpec, MeasurementConfig, ScanCell,
    Termination,
};
use pilotwave::rng::{substream, StreamTag};
use pilotwave::stats;
use pilotwave::{WaveModel, WaveParams};

#[test]
fn noiseless_small_eta_reproduces_bohm_momentum() {
    let model = WaveModel::default_two_slit();
    let spec = GridSpec::default();
    let meas = MeasurementConfig {
        eta: 1e-3,
        noiseless: true,
        ..MeasurementConfig::default()
    };
    let grid = run_weak_scan(&model, &spec, &meas, 1).unwrap();
    let mut worst = 0.0f64;
    let mut measured = 0;
    for k in 0..spec.n_planes {
        for j in 0..spec.n_bins {
            if let ScanCell::Measured { estimate, .. } = grid.cell(j, k) {
                let exact = model
                    .field_sample(spec.bin_center(j), spec.plane_time(k))
                    .unwrap()
                    .p_bohm;
                worst = worst.max((estimate - exact).abs());
                measured += 1;
            }
        }
    }
    assert!(measured > spec.n_planes * spec.n_bins / 2);
    assert!(worst < 1e-4, "max error {worst}");
}

#[test]
fn cell_noise_scales_as_inverse_root_counts() {
    let model = WaveModel::default_two_slit();
    let spec = GridSpec {
        t_start: 2.0,
        t_end: 4.0,
        n_planes: 2,
        x_min: -3.0,
        x_max: 3.0,
        n_bins: 4,
    };
    let sizes: [u64; 5] = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
    let (mut log_n, mut log_sd) = (Vec::new(), Vec::new());
    for n in sizes {
        let meas = MeasurementConfig {
            n_total: n,
            ..MeasurementConfig::default()
        };
        let values: Vec<f64> = (0..100)
            .map(|seed| run_weak_scan(&model, &spec, &meas, seed).unwrap().value(1, 1).unwrap())
            .collect();
        log_n.push((n as f64).log10());
        log_sd.push(stats::std_dev(&values).log10());
    }
    let slope = stats::ols_slope(&log_n, &log_sd);
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
}

#[test]
fn symmetric_scan_is_antisymmetric_within_shot_noise() {
    let model = WaveModel::default_two_slit();
    let spec = GridSpec::default();
    let meas = MeasurementConfig::default();
    let grid = run_weak_scan(&model, &spec, &meas, 3).unwrap();
    let tol = 4.0 / (2.0 * meas.eta * (meas.n_total as f64).sqrt());
    let (mut pairs, mut outside) = (0, 0);
    for k in 0..spec.n_planes {
        for j in 0..spec.n_bins / 2 {
            let mirror = spec.n_bins - 1 - j;
            assert!((spec.bin_center(j) + spec.bin_center(mirror)).abs() < 1e-12);
            match (grid.value(j, k), grid.value(mirror, k)) {
                (Some(a), Some(b)) => {
                    pairs += 1;
                    if (a + b).abs() > tol {
                        outside += 1;
                    }
                }
                (None, None) => {}
                _ => panic!("missing pattern not mirror symmetric at plane {k} bin {j}"),
            }
        }
    }
    // The pair sum has standard deviation sqrt(2) / (2 eta sqrt(N)), so the
    // tolerance sits at about 2.8 sigma: expect roughly 0.5% beyond it.
    let fraction = outside as f64 / pairs as f64;
    assert!(fraction < 0.01, "{outside} of {pairs} pairs beyond {tol}");
}

#[test]
fn same_seed_same_grid() {
    let model = WaveModel::default_two_slit();
    let spec = GridSpec {
        n_planes: 5,
        n_bins: 40,
        ..GridSpec::default()
    };
    let meas = MeasurementConfig::default();
    let a = run_weak_scan(&model, &spec, &meas, 9).unwrap();
    let b = run_weak_scan(&model, &spec, &meas, 9).unwrap();
    let c = run_weak_scan(&model, &spec, &meas, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn endpoints_follow_final_density() {
    let model = WaveModel::default_two_slit();
    let spec = GridSpec::default();
    let meas = MeasurementConfig {
        noiseless: true,
        ..MeasurementConfig::default()
    };
    let grid = run_weak_scan(&model, &spec, &meas, 1).unwrap();
    let mut rng = substream(4, StreamTag::ReconstructionStarts, 0);
    let starts = sample_positions(&model, 5000, spec.plane_time(0), &mut rng).unwrap();
    let recon = reconstruct_trajectories(&grid, &starts, 0);
    let r = endpoint_density_correlation(&model, &recon, &spec, 40);
    assert!(r > 0.95, "pearson {r}");
}

#[test]
fn reconstruction_never_steps_across_a_gap() {
    // A coarse node threshold carves gaps between fringes.
    let model = WaveModel::new(WaveParams {
        rho_min: 0.05,
        ..WaveParams::default()
    })
    .unwrap();
    let spec = GridSpec::default();
    let meas = MeasurementConfig {
        noiseless: true,
        ..MeasurementConfig::default()
    };
    let grid = run_weak_scan(&model, &spec, &meas, 1).unwrap();
    assert!(grid.missing_count() > 0);
    let starts: Vec<f64> = (0..400).map(|i| -8.0 + 16.0 * i as f64 / 399.0).collect();
    let recon = reconstruct_trajectories(&grid, &starts, 0);
    let mut gaps = 0;
    for r in &recon {
        // Every step taken started from an interpolable position.
        for (k, &x) in r.planes().zip(&r.positions).take(r.positions.len() - 1) {
            assert!(grid.interpolate(x, k).is_ok(), "stepped from gap at plane {k}, x={x}");
        }
        if let Some(Termination::Gap { plane, x }) = r.termination {
            assert!(grid.interpolate(x, plane).is_err());
            assert_eq!(r.positions.len(), plane - r.start_plane + 1);
            gaps += 1;
        }
    }
    assert!(gaps > 0, "no trajectory reached a gap");
}
