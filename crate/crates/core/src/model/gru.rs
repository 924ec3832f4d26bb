//! Single-layer gated recurrent unit with a linear head on the last hidden
//! state:
//!
//! ```text
//! z = σ(Wz·x + Uz·h + bz)
//! r = σ(Wr·x + Ur·h + br)
//! n = tanh(Wn·x + Un·(r ⊙ h) + bn)
//! h' = (1 − z) ⊙ n + z ⊙ h
//! ```
//!
//! Parameters are stored gate by gate (`W`, `U`, `b` for z, r, n) and then
//! the head `Wo`, `bo`. Matrices are row-major.

use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub(super) struct Layout {
    pub n_x: usize,
    pub h: usize,
    pub n_out: usize,
}

struct Gate {
    w: usize,
    u: usize,
    b: usize,
}

impl Layout {
    fn gate_size(&self) -> usize {
        self.h * self.n_x + self.h * self.h + self.h
    }

    fn gate(&self, g: usize) -> Gate {
        let w = g * self.gate_size();
        let u = w + self.h * self.n_x;
        Gate {
            w,
            u,
            b: u + self.h * self.h,
        }
    }

    fn head(&self) -> (usize, usize) {
        let wo = 3 * self.gate_size();
        (wo, wo + self.n_out * self.h)
    }

    pub(super) fn param_count(&self) -> usize {
        3 * self.gate_size() + self.n_out * self.h + self.n_out
    }
}

pub(super) fn init<R: Rng>(l: &Layout, rng: &mut R, theta: &mut Vec<f64>) {
    let mut uniform = |n: usize, fan_in: usize, fan_out: usize, theta: &mut Vec<f64>| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        theta.extend((0..n).map(|_| rng.random_range(-bound..bound)));
    };
    for _ in 0..3 {
        uniform(l.h * l.n_x, l.n_x, l.h, theta);
        uniform(l.h * l.h, l.h, l.h, theta);
        theta.extend(std::iter::repeat_n(0.0, l.h));
    }
    uniform(l.n_out * l.h, l.h, l.n_out, theta);
    theta.extend(std::iter::repeat_n(0.0, l.n_out));
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `out[k] = b[k] + W[k,:]·x + U[k,:]·hv`.
fn affine(theta: &[f64], g: &Gate, n_x: usize, h: usize, x: &[f64], hv: &[f64], out: &mut [f64]) {
    let w = &theta[g.w..g.w + h * n_x];
    let u = &theta[g.u..g.u + h * h];
    let b = &theta[g.b..g.b + h];
    for k in 0..h {
        let wx: f64 = w[k * n_x..(k + 1) * n_x].iter().zip(x).map(|(a, b)| a * b).sum();
        let uh: f64 = u[k * h..(k + 1) * h].iter().zip(hv).map(|(a, b)| a * b).sum();
        out[k] = b[k] + wx + uh;
    }
}

struct Step {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

pub(super) struct Cache {
    x: Vec<[f64; 6]>,
    steps: Vec<Step>,
    h_last: Vec<f64>,
    out: Vec<f64>,
}

impl Cache {
    pub(super) fn output(&self) -> &[f64] {
        &self.out
    }
}

pub(super) fn forward(theta: &[f64], l: &Layout, x: &[[f64; 6]]) -> Cache {
    let h = l.h;
    let (gz, gr, gn) = (l.gate(0), l.gate(1), l.gate(2));
    let mut hv = vec![0.0; h];
    let mut steps = Vec::with_capacity(x.len());
    for xt in x {
        let mut z = vec![0.0; h];
        let mut r = vec![0.0; h];
        affine(theta, &gz, l.n_x, h, xt, &hv, &mut z);
        affine(theta, &gr, l.n_x, h, xt, &hv, &mut r);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(&hv).map(|(a, b)| a * b).collect();
        let mut n = vec![0.0; h];
        affine(theta, &gn, l.n_x, h, xt, &rh, &mut n);
        n.iter_mut().for_each(|v| *v = v.tanh());
        let next: Vec<f64> = (0..h).map(|k| (1.0 - z[k]) * n[k] + z[k] * hv[k]).collect();
        steps.push(Step {
            h_prev: std::mem::replace(&mut hv, next),
            z,
            r,
            n,
            rh,
        });
    }
    let (wo, bo) = l.head();
    let out = (0..l.n_out)
        .map(|k| {
            theta[bo + k]
                + theta[wo + k * h..wo + (k + 1) * h]
                    .iter()
                    .zip(&hv)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    Cache {
        x: x.to_vec(),
        steps,
        h_last: hv,
        out,
    }
}

/// Gradient contribution of a gate pre-activation `da`: accumulates into
/// `W`, `U`, `b` and adds `Uᵀ·da` to `dh_in`.
#[allow(clippy::too_many_arguments)]
fn gate_backward(
    theta: &[f64],
    grad: &mut [f64],
    g: &Gate,
    n_x: usize,
    h: usize,
    x: &[f64],
    hv: &[f64],
    da: &[f64],
    dh_in: &mut [f64],
) {
    for k in 0..h {
        let d = da[k];
        if d == 0.0 {
            continue;
        }
        grad[g.b + k] += d;
        grad[g.w + k * n_x..g.w + (k + 1) * n_x]
            .iter_mut()
            .zip(x)
            .for_each(|(gw, xi)| *gw += d * xi);
        grad[g.u + k * h..g.u + (k + 1) * h]
            .iter_mut()
            .zip(hv)
            .for_each(|(gu, hi)| *gu += d * hi);
        dh_in
            .iter_mut()
            .zip(&theta[g.u + k * h..g.u + (k + 1) * h])
            .for_each(|(acc, u)| *acc += u * d);
    }
}

/// Backpropagation through time. Accumulates `∂L/∂θ` into `grad`.
pub(super) fn backward(theta: &[f64], l: &Layout, cache: &Cache, dout: &[f64], grad: &mut [f64]) {
    let h = l.h;
    let (gz, gr, gn) = (l.gate(0), l.gate(1), l.gate(2));
    let (wo, bo) = l.head();
    let mut dh = vec![0.0; h];
    for k in 0..l.n_out {
        let d = dout[k];
        grad[bo + k] += d;
        for j in 0..h {
            grad[wo + k * h + j] += d * cache.h_last[j];
            dh[j] += theta[wo + k * h + j] * d;
        }
    }
    let mut dan = vec![0.0; h];
    let mut dar = vec![0.0; h];
    let mut daz = vec![0.0; h];
    for (s, xt) in cache.steps.iter().zip(&cache.x).rev() {
        let mut dh_prev: Vec<f64> = (0..h).map(|k| dh[k] * s.z[k]).collect();
        for k in 0..h {
            let dn = dh[k] * (1.0 - s.z[k]);
            dan[k] = dn * (1.0 - s.n[k] * s.n[k]);
            let dz = dh[k] * (s.h_prev[k] - s.n[k]);
            daz[k] = dz * s.z[k] * (1.0 - s.z[k]);
        }
        let mut drh = vec![0.0; h];
        gate_backward(theta, grad, &gn, l.n_x, h, xt, &s.rh, &dan, &mut drh);
        for k in 0..h {
            dh_prev[k] += drh[k] * s.r[k];
            let dr = drh[k] * s.h_prev[k];
            dar[k] = dr * s.r[k] * (1.0 - s.r[k]);
        }
        gate_backward(theta, grad, &gr, l.n_x, h, xt, &s.h_prev, &dar, &mut dh_prev);
        gate_backward(theta, grad, &gz, l.n_x, h, xt, &s.h_prev, &daz, &mut dh_prev);
        dh = dh_prev;
    }
}
