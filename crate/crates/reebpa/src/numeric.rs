//! Small shared numeric helpers.

/// Ordinary least-squares slope through (x, y) samples.
/// Degenerate inputs (fewer than two points, zero x-variance) return 0.
pub fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 2.5 * i as f64)).collect();
        assert!((ls_slope(&pts) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(ls_slope(&[]), 0.0);
        assert_eq!(ls_slope(&[(1.0, 2.0)]), 0.0);
        assert_eq!(ls_slope(&[(1.0, 2.0), (1.0, 5.0)]), 0.0);
    }
}
