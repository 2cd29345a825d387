//! Small statistics helpers shared by diagnostics and tests.

/// Equal-width histogram on `[lo, hi)`; returns per-bin counts and the number
/// of samples falling outside.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<usize>, usize) {
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    let width = (hi - lo) / bins as f64;
    for &s in samples {
        let idx = ((s - lo) / width).floor();
        if idx >= 0.0 && (idx as usize) < bins {
            counts[idx as usize] += 1;
        } else {
            outside += 1;
        }
    }
    (counts, outside)
}

/// Total-variation distance between two discrete distributions given as
/// probability vectors of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Indices of interior local maxima whose value is at least `floor`.
/// Plateaus report their first index.
pub fn local_maxima(values: &[f64], floor: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let v = values[i];
        if v >= floor && v > values[i - 1] && v >= values[i + 1] {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_and_overflow() {
        let (c, out) = histogram(&[0.1, 0.2, 0.9, 1.0, -0.1], 0.0, 1.0, 2);
        assert_eq!(c, vec![2, 1]);
        assert_eq!(out, 2);
    }

    #[test]
    fn tv_and_moments() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.9986).abs() < 1e-3);
        assert!((ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn maxima() {
        assert_eq!(local_maxima(&[0.0, 2.0, 1.0, 3.0, 3.0, 0.0], 0.5), vec![1, 3]);
        assert_eq!(local_maxima(&[0.0, 0.2, 0.1], 0.5), Vec::<usize>::new());
    }
}
