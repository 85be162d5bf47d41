/// Times of upward zero crossings of a sampled signal, each refined by the
/// root of the parabola through three neighbouring samples.
pub fn upward_crossings(times: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        if !(x[i] <= 0.0 && x[i + 1] > 0.0) {
            continue;
        }
        let lin = times[i] - x[i] * (times[i + 1] - times[i]) / (x[i + 1] - x[i]);
        let j = if i + 2 < x.len() { i } else if i > 0 { i - 1 } else { out.push(lin); continue };
        out.push(parabolic_root(&times[j..j + 3], &x[j..j + 3], times[i], times[i + 1]).unwrap_or(lin));
    }
    out
}

fn parabolic_root(t: &[f64], x: &[f64], lo: f64, hi: f64) -> Option<f64> {
    // Newton form around t[0]
    let d1 = (x[1] - x[0]) / (t[1] - t[0]);
    let d2 = ((x[2] - x[1]) / (t[2] - t[1]) - d1) / (t[2] - t[0]);
    // x(s) = x0 + d1 (s - t0) + d2 (s - t0)(s - t1)
    let a = d2;
    let b = d1 - d2 * (t[1] - t[0]);
    let c = x[0];
    let roots: Vec<f64> = if a.abs() < 1e-300 {
        vec![-c / b]
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair
        let qq = -0.5 * (b + b.signum() * sq);
        vec![qq / a, c / qq]
    };
    let span = hi - lo;
    roots
        .into_iter()
        .map(|u| u + t[0])
        .filter(|r| r.is_finite() && *r >= lo - 1e-9 * span && *r <= hi + 1e-9 * span)
        .next()
}

/// Mean spacing of successive upward crossings.
pub fn period_from_crossings(times: &[f64], x: &[f64]) -> Option<f64> {
    let c = upward_crossings(times, x);
    if c.len() < 2 {
        return None;
    }
    Some((c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_period() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.01).collect();
        let x: Vec<f64> = t.iter().map(|t| (2.0 * t - 0.3).sin()).collect();
        let p = period_from_crossings(&t, &x).unwrap();
        assert!((p - std::f64::consts::PI).abs() < 1e-6, "{p}");
        let c = upward_crossings(&t, &x);
        assert!((c[0] - 0.15).abs() < 1e-6);
    }

    #[test]
    fn too_short() {
        assert!(period_from_crossings(&[0.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
