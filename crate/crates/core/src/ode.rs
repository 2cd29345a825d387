//! Fixed-step classical RK4 with local step halving.

use std::ops::{Add, Mul};

/// Maximum number of times a failing step is bisected before giving up.
pub const MAX_HALVINGS: u32 = 8;

/// One classical RK4 step. Any stage evaluation failure aborts the step.
pub fn rk4_step<S, E, F>(f: &F, t: f64, y: S, h: f64) -> Result<S, E>
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: Fn(f64, S) -> Result<S, E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, y + k1 * (0.5 * h))?;
    let k3 = f(t + 0.5 * h, y + k2 * (0.5 * h))?;
    let k4 = f(t + h, y + k3 * h)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Advances `y` from `t` by `h`. If a stage fails the interval is split in
/// two halves, recursively, at most [`MAX_HALVINGS`] levels deep.
pub fn advance<S, E, F>(f: &F, t: f64, y: S, h: f64) -> Result<S, E>
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: Fn(f64, S) -> Result<S, E>,
{
    advance_at_depth(f, t, y, h, 0)
}

fn advance_at_depth<S, E, F>(f: &F, t: f64, y: S, h: f64, depth: u32) -> Result<S, E>
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: Fn(f64, S) -> Result<S, E>,
{
    match rk4_step(f, t, y, h) {
        Ok(next) => Ok(next),
        Err(e) if depth >= MAX_HALVINGS => Err(e),
        Err(_) => {
            let half = 0.5 * h;
            let mid = advance_at_depth(f, t, y, half, depth + 1)?;
            advance_at_depth(f, t + half, mid, half, depth + 1)
        }
    }
}

/// Uniform time grid from `t0` to `t1` with nominal step `dt`; the final
/// point lands exactly on `t1`.
pub fn time_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
    times.push(t1);
    times
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let f = |_t: f64, y: f64| -> Result<f64, ()> { Ok(-y) };
        let err = |h: f64| {
            let grid = time_grid(0.0, 1.0, h);
            let mut y = 1.0;
            for w in grid.windows(2) {
                y = advance(&f, w[0], y, w[1] - w[0]).unwrap();
            }
            (y - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn halving_recovers_from_a_failed_stage() {
        let calls = std::cell::Cell::new(0);
        let f = |_t: f64, _y: f64| -> Result<f64, ()> {
            calls.set(calls.get() + 1);
            if calls.get() == 1 {
                Err(())
            } else {
                Ok(1.0)
            }
        };
        let y = advance(&f, 0.5, 0.0, 0.1).unwrap();
        assert!((y - 0.1).abs() < 1e-14);
        assert_eq!(calls.get(), 9);
    }

    #[test]
    fn gives_up_after_max_halvings() {
        let f = |_t: f64, _y: f64| -> Result<f64, ()> { Err(()) };
        assert!(advance(&f, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_ends_on_target() {
        let g = time_grid(0.0, 1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = time_grid(0.0, 1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
