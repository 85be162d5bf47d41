use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::combinatorics::binomial_f64;
use crate::error::{Error, Result};
use crate::integrator::output_grid;
use crate::moments::{keys, Flavor, MomentSet};
use crate::potential::PolynomialPotential;

/// Independent Gaussian cloud in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub samples: usize,
    pub seed: u64,
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
}

impl EnsembleSpec {
    /// The classical counterpart of [`crate::gaussian_moments`].
    pub fn gaussian(width2: f64, hbar: f64, q0: f64, p0: f64, samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            q0,
            p0,
            sigma_q: (width2 / 2.0).sqrt(),
            sigma_p: hbar / (2.0 * width2).sqrt(),
        }
    }
}

/// Sampled centroid and central moments C^{a,b}, a+b ≤ 4. `errors[i]` holds
/// standard errors in the same layout (its q, p fields are the errors of the
/// means).
#[derive(Debug, Clone)]
pub struct McSeries {
    pub times: Vec<f64>,
    pub states: Vec<MomentSet>,
    pub errors: Vec<MomentSet>,
    pub samples: usize,
}

const ORDER: usize = 4;
const RAW: usize = 2 * ORDER;
const CHUNK: usize = 4096;

fn raw_index(i: usize, j: usize) -> usize {
    // i powers of δq, j of δp, i + j ≤ RAW
    let n = i + j;
    n * (n + 1) / 2 + j
}

const RAW_LEN: usize = (RAW + 1) * (RAW + 2) / 2;

/// Characteristics of the Liouville equation: every sample follows the point
/// dynamics (fixed-step RK4 with at most `max_step`), moments are taken about
/// the sample centroid. Sample k draws from its own ChaCha8 stream, so the
/// result does not depend on chunking.
pub fn liouville_mc(
    spec: &EnsembleSpec,
    v: &PolynomialPotential,
    t_end: f64,
    dt_out: f64,
    max_step: f64,
) -> Result<McSeries> {
    if spec.samples < 2 {
        return Err(Error::InvalidArgument("at least two samples".into()));
    }
    if !(t_end > 0.0 && dt_out > 0.0 && max_step > 0.0) || spec.sigma_q < 0.0 || spec.sigma_p < 0.0 {
        return Err(Error::InvalidArgument("non-positive time or width".into()));
    }
    let grid = output_grid(t_end, dt_out);
    let sub = (dt_out / max_step).ceil().max(1.0) as usize;
    let h = dt_out / sub as f64;
    // V'(q) by Horner
    let deg = v.degree();
    let force: Vec<f64> = (1..=deg.max(1)).map(|k| -(k as f64) * v.coefficient(k)).collect();
    let eval_force = |q: &[f64], out: &mut [f64]| {
        for (o, &x) in out.iter_mut().zip(q) {
            let mut acc = 0.0;
            for c in force.iter().rev() {
                acc = acc * x + c;
            }
            *o = acc;
        }
    };

    let nt = grid.len();
    let mut sums = vec![[0.0f64; RAW_LEN]; nt];
    let mut reference: Vec<(f64, f64)> = Vec::with_capacity(nt);
    let mut q = vec![0.0; CHUNK];
    let mut p = vec![0.0; CHUNK];
    let (mut kq, mut kp) = (vec![[0.0; CHUNK]; 4], vec![[0.0; CHUNK]; 4]);
    let mut tq = vec![0.0; CHUNK];
    let mut f = vec![0.0; CHUNK];
    let mut start = 0;
    while start < spec.samples {
        let n = CHUNK.min(spec.samples - start);
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((start + i) as u64);
            let zq: f64 = StandardNormal.sample(&mut rng);
            let zp: f64 = StandardNormal.sample(&mut rng);
            q[i] = spec.q0 + spec.sigma_q * zq;
            p[i] = spec.p0 + spec.sigma_p * zp;
        }
        let (q, p) = (&mut q[..n], &mut p[..n]);
        for ti in 0..nt {
            if ti > 0 {
                for _ in 0..sub {
                    // RK4 for q' = p, p' = −V'(q)
                    eval_force(q, &mut f[..n]);
                    for i in 0..n {
                        kq[0][i] = p[i];
                        kp[0][i] = f[i];
                        tq[i] = q[i] + 0.5 * h * kq[0][i];
                    }
                    eval_force(&tq[..n], &mut f[..n]);
                    for i in 0..n {
                        kq[1][i] = p[i] + 0.5 * h * kp[0][i];
                        kp[1][i] = f[i];
                        tq[i] = q[i] + 0.5 * h * kq[1][i];
                    }
                    eval_force(&tq[..n], &mut f[..n]);
                    for i in 0..n {
                        kq[2][i] = p[i] + 0.5 * h * kp[1][i];
                        kp[2][i] = f[i];
                        tq[i] = q[i] + h * kq[2][i];
                    }
                    eval_force(&tq[..n], &mut f[..n]);
                    for i in 0..n {
                        kq[3][i] = p[i] + h * kp[2][i];
                        kp[3][i] = f[i];
                        q[i] += h / 6.0 * (kq[0][i] + 2.0 * kq[1][i] + 2.0 * kq[2][i] + kq[3][i]);
                        p[i] += h / 6.0 * (kp[0][i] + 2.0 * kp[1][i] + 2.0 * kp[2][i] + kp[3][i]);
                    }
                }
            }
            if start == 0 {
                let mq = q.iter().sum::<f64>() / n as f64;
                let mp = p.iter().sum::<f64>() / n as f64;
                reference.push((mq, mp));
            }
            let (rq, rp) = reference[ti];
            let s = &mut sums[ti];
            for i in 0..n {
                let (dq, dp) = (q[i] - rq, p[i] - rp);
                let mut qp = [1.0; RAW + 1];
                let mut pp = [1.0; RAW + 1];
                for k in 1..=RAW {
                    qp[k] = qp[k - 1] * dq;
                    pp[k] = pp[k - 1] * dp;
                }
                for nn in 0..=RAW {
                    for j in 0..=nn {
                        s[raw_index(nn - j, j)] += qp[nn - j] * pp[j];
                    }
                }
            }
            if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!("sample escaped at t = {}", grid[ti])));
            }
        }
        start += n;
    }

    let nf = spec.samples as f64;
    let mut states = Vec::with_capacity(nt);
    let mut errors = Vec::with_capacity(nt);
    for (ti, s) in sums.iter().enumerate() {
        let m: Vec<f64> = s.iter().map(|x| x / nf).collect();
        let (mq, mp) = (m[raw_index(1, 0)], m[raw_index(0, 1)]);
        // central moments c[i][j] (i powers of δq) about the sample mean
        let central = |i: usize, j: usize| {
            let mut acc = 0.0;
            for k in 0..=i {
                for l in 0..=j {
                    acc += binomial_f64(i, k)
                        * binomial_f64(j, l)
                        * m[raw_index(k, l)]
                        * (-mq).powi((i - k) as i32)
                        * (-mp).powi((j - l) as i32);
                }
            }
            acc
        };
        let mut st = MomentSet::zeros(Flavor::Classical, 0.0, ORDER)?;
        let mut er = MomentSet::zeros(Flavor::Classical, 0.0, ORDER)?;
        st.q = reference[ti].0 + mq;
        st.p = reference[ti].1 + mp;
        let c02 = central(2, 0);
        let c20 = central(0, 2);
        er.q = (c02 / nf).sqrt();
        er.p = (c20 / nf).sqrt();
        for k in keys(ORDER) {
            let c = central(k.b, k.a);
            let var = (central(2 * k.b, 2 * k.a) - c * c).max(0.0);
            st.set(k.a, k.b, c);
            er.set(k.a, k.b, (var / nf).sqrt());
        }
        states.push(st);
        errors.push(er);
    }
    Ok(McSeries { times: grid, states, errors, samples: spec.samples })
}
