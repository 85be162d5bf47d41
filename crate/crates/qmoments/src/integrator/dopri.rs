//! Dormand–Prince 5(4) with step-size control and the 4th-order continuous
//! extension for output on a fixed grid.

use serde::Serialize;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, max_steps: 50_000_000, h_max: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub stop: StopReason,
    pub t_reached: f64,
    pub accepted: usize,
    pub rejected: usize,
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], o: &Dopri5Options) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `out(t, y)` at every
/// time of `grid` (ascending, inside [t0, t_end]).
pub fn solve<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    grid: &[f64],
    opts: &Dopri5Options,
    mut out: O,
) -> Outcome
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut dense = vec![0.0; n];
    let mut next = 0usize;
    let mut t = t0;

    while next < grid.len() && grid[next] <= t0 {
        out(grid[next], &y);
        next += 1;
    }

    f(t, &y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Outcome { stop: StopReason::NonFinite, t_reached: t, accepted: 0, rejected: 0 };
    }
    let mut h = initial_step(&mut f, t, &y, &k[0], opts, &mut ytmp, &mut ynew).min(t_end - t0).min(opts.h_max);
    let (mut accepted, mut rejected) = (0, 0);
    let mut last_rejected = false;
    let mut saw_nonfinite = false;

    while t < t_end {
        if accepted + rejected >= opts.max_steps {
            return Outcome { stop: StopReason::MaxSteps, t_reached: t, accepted, rejected };
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            let stop = if saw_nonfinite { StopReason::NonFinite } else { StopReason::StepUnderflow };
            return Outcome { stop, t_reached: t, accepted, rejected };
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (s, (c, a)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = y[i];
                for (j, aj) in a.iter().enumerate() {
                    acc += h * aj * k[j][i];
                }
                ytmp[i] = acc;
            }
            f(t + c * h, &ytmp, &mut k[s + 1]);
        }
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        f(t + h, &ynew, &mut k[6]);
        for i in 0..n {
            err[i] = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let en = error_norm(&err, &y, &ynew, opts);
        if !en.is_finite() {
            // a failed step; shrink hard and let the underflow check end it
            h *= 0.1;
            rejected += 1;
            last_rejected = true;
            saw_nonfinite = true;
            continue;
        }
        if en <= 1.0 {
            // continuous extension coefficients
            let t_new = t + h;
            while next < grid.len() && grid[next] <= t_new {
                let theta = (grid[next] - t) / h;
                let th1 = 1.0 - theta;
                for i in 0..n {
                    let r2 = ynew[i] - y[i];
                    let r3 = h * k[0][i] - r2;
                    let r4 = r2 - h * k[6][i] - r3;
                    let r5 = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                            + D7 * k[6][i]);
                    dense[i] = y[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
                }
                out(grid[next], &dense);
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            accepted += 1;
            let mut fac = 0.9 * en.powf(-0.2);
            fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 10.0 });
            h = (h * fac).min(opts.h_max);
            last_rejected = false;
        } else {
            let fac = (0.9 * en.powf(-0.2)).max(0.2);
            h *= fac;
            rejected += 1;
            last_rejected = true;
        }
    }
    Outcome { stop: StopReason::Completed, t_reached: t, accepted, rejected }
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    o: &Dopri5Options,
    ytmp: &mut [f64],
    f1: &mut [f64],
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| o.atol + o.rtol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..y.len() {
        ytmp[i] = y[i] + h0 * f0[i];
    }
    f(t + h0, ytmp, f1);
    let d2 = (f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_on_grid() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let mut got = Vec::new();
        let o = Dopri5Options { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let r = solve(|_, y, d| d[0] = -y[0], 0.0, &[1.0], 5.0, &grid, &o, |t, y| got.push((t, y[0])));
        assert_eq!(r.stop, StopReason::Completed);
        assert_eq!(got.len(), grid.len());
        for (t, y) in got {
            assert!((y - (-t).exp()).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn dense_output_is_fourth_order_accurate() {
        // harmonic oscillator sampled densely between steps
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let mut worst: f64 = 0.0;
        let o = Dopri5Options { rtol: 1e-11, atol: 1e-11, ..Default::default() };
        solve(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &grid,
            &o,
            |t, y| worst = worst.max((y[0] - t.sin()).abs()),
        );
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn blow_up_stops_gracefully() {
        // y' = y², y(0)=1 explodes at t=1
        let o = Dopri5Options::default();
        let r = solve(|_, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &[], &o, |_, _| {});
        assert_ne!(r.stop, StopReason::Completed);
        assert!(r.t_reached < 1.0 && r.t_reached > 0.99);
    }
}
