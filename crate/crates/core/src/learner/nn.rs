use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

/// Fully connected layer, `y = x W + b` with `W` stored inputs × outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    /// He-normal weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let std = (2.0 / inputs.max(1) as f64).sqrt();
        let w = Array2::from_shape_fn((inputs, outputs), |_| std * rng.sample::<f64, _>(StandardNormal));
        Dense { w, b: Array1::zeros(outputs) }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { w: Array2::zeros((inputs, outputs)), b: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// ReLU on every hidden layer, identity on the last.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn init(widths: &[usize], rng: &mut impl Rng) -> Self {
        Mlp { layers: widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect() }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let n = self.layers.len();
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            h = l.apply(&h);
            if i + 1 < n {
                h.mapv_inplace(relu);
            }
        }
        h
    }

    /// Activations: the input followed by every layer's output.
    pub(crate) fn forward_cached(&self, x: Array2<f64>) -> Vec<Array2<f64>> {
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(x);
        for (i, l) in self.layers.iter().enumerate() {
            let mut h = l.apply(&acts[i]);
            if i + 1 < n {
                h.mapv_inplace(relu);
            }
            acts.push(h);
        }
        acts
    }

    /// Accumulates parameter gradients into `grads` and returns d(loss)/d(input).
    pub(crate) fn backward(&self, acts: &[Array2<f64>], mut delta: Array2<f64>, grads: &mut [Dense]) -> Array2<f64> {
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                Zip::from(&mut delta).and(&acts[i + 1]).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            grads[i].w += &acts[i].t().dot(&delta);
            grads[i].b += &delta.sum_axis(Axis(0));
            delta = delta.dot(&self.layers[i].w.t());
        }
        delta
    }

    pub(crate) fn zeros_like(&self) -> Vec<Dense> {
        self.layers.iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Horizontal concatenation of two row-aligned blocks.
pub(crate) fn hcat(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), a.ncols() + b.ncols()));
    out.slice_mut(s![.., ..a.ncols()]).assign(a);
    out.slice_mut(s![.., a.ncols()..]).assign(b);
    out
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[Dense]) -> Self {
        let z = || shapes.iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: z(), v: z() }
    }

    /// One update of `params` (in the same order the optimizer was built with).
    pub fn step(&mut self, params: &mut [&mut Dense], grads: &[&Dense]) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let eps = self.eps * c2.sqrt();
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let upd = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step * *m / (v.sqrt() + eps);
            };
            Zip::from(&mut p.w).and(&mut self.m[k].w).and(&mut self.v[k].w).and(&g.w).for_each(|p, m, v, &g| upd(p, m, v, g));
            Zip::from(&mut p.b).and(&mut self.m[k].b).and(&mut self.v[k].b).and(&g.b).for_each(|p, m, v, &g| upd(p, m, v, g));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_forward() {
        // 2-3-2 with ReLU in the middle
        let net = Mlp {
            layers: vec![
                Dense { w: array![[1.0, -1.0, 0.5], [2.0, 0.0, -1.0]], b: array![0.0, 0.5, 0.1] },
                Dense { w: array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], b: array![0.0, -1.0] },
            ],
        };
        let x = array![[0.5, 0.25]];
        // hidden = relu([1.0, 0.0, 0.1]) ; out = [1.1, -0.9]
        let y = net.forward(&x);
        assert!((y[[0, 0]] - 1.1).abs() < 1e-12);
        assert!((y[[0, 1]] + 0.9).abs() < 1e-12);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = Dense { w: array![[3.0]], b: array![-2.0] };
        let mut opt = Adam::new(0.1, std::slice::from_ref(&p));
        for _ in 0..500 {
            let g = Dense { w: p.w.mapv(|v| 2.0 * v), b: p.b.mapv(|v| 2.0 * v) };
            opt.step(&mut [&mut p], &[&g]);
        }
        assert!(p.w[[0, 0]].abs() < 1e-2 && p.b[0].abs() < 1e-2);
    }
}
