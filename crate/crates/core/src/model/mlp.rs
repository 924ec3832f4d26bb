//! Fully connected ReLU network. Parameters are laid out layer by layer as a
//! row-major weight matrix `out × in` followed by the `out` biases.

use rand::Rng;

pub(super) fn dims(hidden: &[usize], n_in: usize, n_out: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(hidden.len() + 2);
    d.push(n_in);
    d.extend_from_slice(hidden);
    d.push(n_out);
    d
}

pub(super) fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

pub(super) fn init<R: Rng>(dims: &[usize], rng: &mut R, theta: &mut Vec<f64>) {
    for w in dims.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let bound = (6.0 / (n_in + n_out) as f64).sqrt();
        theta.extend((0..n_in * n_out).map(|_| rng.random_range(-bound..bound)));
        theta.extend(std::iter::repeat_n(0.0, n_out));
    }
}

/// Layer activations; `acts[0]` is the input, the last entry the output.
pub(super) struct Cache {
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub(super) fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

pub(super) fn forward(theta: &[f64], dims: &[usize], input: Vec<f64>) -> Cache {
    let n_layers = dims.len() - 1;
    let mut acts = Vec::with_capacity(dims.len());
    acts.push(input);
    let mut off = 0;
    for l in 0..n_layers {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let w = &theta[off..off + n_in * n_out];
        let b = &theta[off + n_in * n_out..off + n_in * n_out + n_out];
        let a = &acts[l];
        let mut z: Vec<f64> = (0..n_out)
            .map(|k| {
                b[k] + w[k * n_in..(k + 1) * n_in]
                    .iter()
                    .zip(a)
                    .map(|(wi, ai)| wi * ai)
                    .sum::<f64>()
            })
            .collect();
        if l + 1 < n_layers {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(z);
        off += n_in * n_out + n_out;
    }
    Cache { acts }
}

/// Accumulates `∂L/∂θ` into `grad` given `∂L/∂output`.
pub(super) fn backward(theta: &[f64], dims: &[usize], cache: &Cache, dout: &[f64], grad: &mut [f64]) {
    let n_layers = dims.len() - 1;
    let mut offsets = Vec::with_capacity(n_layers);
    let mut off = 0;
    for w in dims.windows(2) {
        offsets.push(off);
        off += w[0] * w[1] + w[1];
    }
    let mut delta = dout.to_vec();
    for l in (0..n_layers).rev() {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let o = offsets[l];
        let a_prev = &cache.acts[l];
        let (gw, gb) = grad[o..o + n_in * n_out + n_out].split_at_mut(n_in * n_out);
        for k in 0..n_out {
            let dk = delta[k];
            gb[k] += dk;
            if dk != 0.0 {
                gw[k * n_in..(k + 1) * n_in]
                    .iter_mut()
                    .zip(a_prev)
                    .for_each(|(g, a)| *g += dk * a);
            }
        }
        if l == 0 {
            break;
        }
        let w = &theta[o..o + n_in * n_out];
        let mut prev = vec![0.0; n_in];
        for k in 0..n_out {
            let dk = delta[k];
            if dk != 0.0 {
                prev.iter_mut()
                    .zip(&w[k * n_in..(k + 1) * n_in])
                    .for_each(|(p, wi)| *p += wi * dk);
            }
        }
        // ReLU: the stored activation is positive exactly where the unit is on
        for (p, a) in prev.iter_mut().zip(a_prev) {
            if *a <= 0.0 {
                *p = 0.0;
            }
        }
        delta = prev;
    }
}
