//! Conditional variational autoencoder over configurations.
//!
//! The encoder sees a configuration `x` and the problem features `y` and
//! returns a diagonal Gaussian over the latent `z`; the decoder maps `(z, y)`
//! back to a configuration. Training minimizes `recon + lambda * KL`; at test
//! time only the decoder runs, with `z` drawn from the prior.

mod io;
pub mod nn;

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::NodeSet;
use crate::worlds::{Config, FeatureVector};
pub use nn::{Adam, Dense, Mlp};

pub const DEFAULT_HIDDEN: usize = 512;
pub const DEFAULT_LAMBDA: f64 = 2e-4;

/// Latent size used when none is given: 3 up to six dimensions, 5 beyond.
pub fn default_latent_dim(output_dim: usize) -> usize {
    if output_dim >= 7 {
        5
    } else {
        3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvaeModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub latent_dim: usize,
    pub feature_dim: usize,
    pub output_dim: usize,
    pub lambda: f64,
    pub rng_seed: u64,
}

impl CvaeModel {
    /// Randomly initialized model with two hidden layers of `hidden` units in
    /// both networks.
    pub fn new(
        output_dim: usize,
        feature_dim: usize,
        latent_dim: usize,
        hidden: usize,
        lambda: f64,
        seed: u64,
    ) -> Result<Self> {
        if output_dim == 0 || latent_dim == 0 || hidden == 0 {
            return Err(Error::InvalidArgument("model dimensions must be positive".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be non-negative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Mlp::init(&[output_dim + feature_dim, hidden, hidden, 2 * latent_dim], &mut rng);
        let decoder = Mlp::init(&[latent_dim + feature_dim, hidden, hidden, output_dim], &mut rng);
        Ok(CvaeModel { encoder, decoder, latent_dim, feature_dim, output_dim, lambda, rng_seed: seed })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(m));
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive".into());
        }
        for (name, net, inputs, outputs) in [
            ("encoder", &self.encoder, self.output_dim + self.feature_dim, 2 * self.latent_dim),
            ("decoder", &self.decoder, self.latent_dim + self.feature_dim, self.output_dim),
        ] {
            if net.layers.is_empty() || net.inputs() != inputs || net.outputs() != outputs {
                return bad(format!("{name} shape does not match the model dimensions"));
            }
            if net.layers.windows(2).any(|w| w[0].outputs() != w[1].inputs())
                || net.layers.iter().any(|l| l.b.len() != l.outputs())
            {
                return bad(format!("{name} layers are not chained"));
            }
        }
        if !self.encoder.is_finite() || !self.decoder.is_finite() {
            return bad("non-finite parameter".into());
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be non-negative".into());
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    /// All parameters flattened: encoder then decoder, each layer's weights
    /// (row-major) followed by its bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.encoder.layers.iter().chain(&self.decoder.layers) {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), got: p.len() });
        }
        let mut it = p.iter().copied();
        for l in self.encoder.layers.iter_mut().chain(self.decoder.layers.iter_mut()) {
            l.w.iter_mut().for_each(|v| *v = it.next().unwrap());
            l.b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, got: x.len() });
        }
        Ok(())
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.feature_dim {
            return Err(Error::DimensionMismatch { expected: self.feature_dim, got: y.len() });
        }
        Ok(())
    }
}

/// Mean and log-variance of the approximate posterior.
pub fn encode(model: &CvaeModel, x: &Config, y: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)> {
    model.check_x(x.coords())?;
    model.check_y(y.values())?;
    let input = Array2::from_shape_fn((1, model.output_dim + model.feature_dim), |(_, j)| {
        if j < model.output_dim {
            x.coords()[j]
        } else {
            y.values()[j - model.output_dim]
        }
    });
    let h = model.encoder.forward(&input);
    let q = model.latent_dim;
    Ok((h.slice(s![0, ..q]).to_vec(), h.slice(s![0, q..]).to_vec()))
}

/// Decoder output for one latent vector, unclamped.
pub fn decode(model: &CvaeModel, z: &[f64], y: &FeatureVector) -> Result<Vec<f64>> {
    if z.len() != model.latent_dim {
        return Err(Error::DimensionMismatch { expected: model.latent_dim, got: z.len() });
    }
    model.check_y(y.values())?;
    let input = Array2::from_shape_fn((1, model.latent_dim + model.feature_dim), |(_, j)| {
        if j < model.latent_dim {
            z[j]
        } else {
            y.values()[j - model.latent_dim]
        }
    });
    Ok(model.decoder.forward(&input).row(0).to_vec())
}

/// `KL(N(mu, diag(exp(log_var))) || N(0, I))`.
pub fn kl_to_standard_normal(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu.iter().zip(log_var).map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv).sum::<f64>()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

/// Loss averaged over a batch and gradient of it with respect to
/// [`CvaeModel::parameters`]. `eps` holds the reparameterization noise,
/// shaped draws × batch × latent; reconstruction is the squared error per
/// coordinate, averaged over coordinates, draws and the batch.
pub fn loss_and_gradient(
    model: &CvaeModel,
    xs: ArrayView2<f64>,
    ys: ArrayView2<f64>,
    eps: ArrayView3<f64>,
) -> Result<(LossParts, Vec<f64>)> {
    let (parts, ge, gd) = batch_pass(model, xs, ys, eps)?;
    let mut flat = Vec::with_capacity(model.param_count());
    for l in ge.iter().chain(&gd) {
        flat.extend(l.w.iter());
        flat.extend(l.b.iter());
    }
    Ok((parts, flat))
}

fn batch_pass(
    model: &CvaeModel,
    xs: ArrayView2<f64>,
    ys: ArrayView2<f64>,
    eps: ArrayView3<f64>,
) -> Result<(LossParts, Vec<Dense>, Vec<Dense>)> {
    let (b, d, m, q) = (xs.nrows(), model.output_dim, model.feature_dim, model.latent_dim);
    let n_z = eps.len_of(Axis(0));
    if xs.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xs.ncols() });
    }
    if ys.ncols() != m || ys.nrows() != b {
        return Err(Error::DimensionMismatch { expected: m, got: ys.ncols() });
    }
    if b == 0 || n_z == 0 || eps.len_of(Axis(1)) != b || eps.len_of(Axis(2)) != q {
        return Err(Error::InvalidArgument("noise must be draws x batch x latent".into()));
    }
    let ys = ys.to_owned();
    let enc_acts = model.encoder.forward_cached(nn::hcat(&xs.to_owned(), &ys));
    let h = enc_acts.last().unwrap();
    let mu = h.slice(s![.., ..q]).to_owned();
    let lv = h.slice(s![.., q..]).to_owned();
    let sigma = lv.mapv(|v| (0.5 * v).exp());

    let mut grad_dec = model.decoder.zeros_like();
    let mut d_mu = Array2::<f64>::zeros((b, q));
    let mut d_lv = Array2::<f64>::zeros((b, q));
    let mut recon = 0.0;
    let scale = 1.0 / (n_z * b * d) as f64;
    for k in 0..n_z {
        let e = eps.index_axis(Axis(0), k);
        let z = &mu + &(&sigma * &e);
        let acts = model.decoder.forward_cached(nn::hcat(&z, &ys));
        let diff = acts.last().unwrap() - &xs;
        recon += diff.iter().map(|v| v * v).sum::<f64>() * scale;
        let d_in = model.decoder.backward(&acts, diff.mapv(|v| 2.0 * v * scale), &mut grad_dec);
        let dz = d_in.slice(s![.., ..q]);
        d_mu += &dz;
        Zip::from(&mut d_lv).and(&dz).and(&e).and(&sigma).for_each(|g, &dz, &e, &s| *g += 0.5 * dz * e * s);
    }
    let kl = Zip::from(mu.rows()).and(lv.rows()).fold(0.0, |acc, m, l| {
        acc + kl_to_standard_normal(m.as_slice().unwrap(), l.as_slice().unwrap())
    }) / b as f64;
    let lam = model.lambda / b as f64;
    Zip::from(&mut d_mu).and(&mu).for_each(|g, &m| *g += lam * m);
    Zip::from(&mut d_lv).and(&lv).for_each(|g, &l| *g += lam * 0.5 * (l.exp() - 1.0));

    let mut grad_enc = model.encoder.zeros_like();
    model.encoder.backward(&enc_acts, nn::hcat(&d_mu, &d_lv), &mut grad_enc);
    let parts = LossParts { recon, kl, total: recon + model.lambda * kl };
    Ok((parts, grad_enc, grad_dec))
}

fn standard_normal(rng: &mut impl Rng, shape: (usize, usize, usize)) -> Array3<f64> {
    Array3::from_shape_fn(shape, |_| rng.sample(StandardNormal))
}

/// Single-example loss under the given noise draws (one latent vector each).
pub fn elbo_loss_with_noise(model: &CvaeModel, x: &Config, y: &FeatureVector, eps: &[Vec<f64>]) -> Result<LossParts> {
    model.check_x(x.coords())?;
    model.check_y(y.values())?;
    let q = model.latent_dim;
    if eps.iter().any(|e| e.len() != q) {
        return Err(Error::DimensionMismatch { expected: q, got: eps.iter().map(Vec::len).find(|&l| l != q).unwrap() });
    }
    let xs = ArrayView2::from_shape((1, model.output_dim), x.coords()).unwrap();
    let ys = ArrayView2::from_shape((1, model.feature_dim), y.values()).unwrap();
    let noise = Array3::from_shape_fn((eps.len(), 1, q), |(k, _, j)| eps[k][j]);
    Ok(batch_pass(model, xs, ys, noise.view())?.0)
}

/// Single-example loss with `latent_samples_per_example` fresh noise draws.
pub fn elbo_loss(model: &CvaeModel, x: &Config, y: &FeatureVector, cfg: &TrainConfig, rng: &mut impl Rng) -> Result<f64> {
    let eps: Vec<Vec<f64>> = (0..cfg.latent_samples_per_example)
        .map(|_| (0..model.latent_dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    Ok(elbo_loss_with_noise(model, x, y, &eps)?.total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub latent_samples_per_example: usize,
    pub hidden_width: usize,
    /// `None` picks [`default_latent_dim`].
    pub latent_dim: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            lambda: DEFAULT_LAMBDA,
            latent_samples_per_example: 1,
            hidden_width: DEFAULT_HIDDEN,
            latent_dim: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0
            || self.batch_size == 0
            || self.latent_samples_per_example == 0
            || self.hidden_width == 0
            || self.latent_dim == Some(0)
        {
            return Err(Error::InvalidArgument("training sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive and lambda non-negative".into()));
        }
        Ok(())
    }
}

/// Per-epoch means of the minibatch losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: CvaeModel,
    pub curve: Vec<LossRecord>,
}

/// Minibatch Adam on every (node, features) pair of the dataset. Records with
/// no nodes contribute nothing.
pub fn train(dataset: &[(NodeSet, FeatureVector)], cfg: &TrainConfig, seed: u64) -> Result<Trained> {
    cfg.validate()?;
    let pairs: Vec<(&Config, &FeatureVector)> =
        dataset.iter().flat_map(|(ns, y)| ns.configs.iter().map(move |x| (x, y))).collect();
    let Some(&(x0, y0)) = pairs.first() else { return Err(Error::EmptyDataset) };
    let (d, m) = (x0.dim(), y0.len());
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| x.dim() != d || y.len() != m) {
        let (expected, got) = if x.dim() != d { (d, x.dim()) } else { (m, y.len()) };
        return Err(Error::DimensionMismatch { expected, got });
    }
    let q = cfg.latent_dim.unwrap_or_else(|| default_latent_dim(d));
    let mut model = CvaeModel::new(d, m, q, cfg.hidden_width, cfg.lambda, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut opt = Adam::new(cfg.learning_rate, &model.encoder.layers.iter().chain(&model.decoder.layers).cloned().collect::<Vec<_>>());
    let xs_all = Array2::from_shape_fn((pairs.len(), d), |(i, j)| pairs[i].0.coords()[j]);
    let ys_all = Array2::from_shape_fn((pairs.len(), m), |(i, j)| pairs[i].1.values()[j]);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = LossParts::default();
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let xs = xs_all.select(Axis(0), chunk);
            let ys = ys_all.select(Axis(0), chunk);
            let eps = standard_normal(&mut rng, (cfg.latent_samples_per_example, chunk.len(), q));
            let (parts, ge, gd) = batch_pass(&model, xs.view(), ys.view(), eps.view())?;
            let mut params: Vec<&mut Dense> =
                model.encoder.layers.iter_mut().chain(model.decoder.layers.iter_mut()).collect();
            let grads: Vec<&Dense> = ge.iter().chain(&gd).collect();
            opt.step(&mut params, &grads);
            sum.recon += parts.recon;
            sum.kl += parts.kl;
            sum.total += parts.total;
            batches += 1;
        }
        let n = batches as f64;
        let rec = LossRecord { epoch, recon: sum.recon / n, kl: sum.kl / n, total: sum.total / n };
        log::debug!("epoch {epoch}: recon {:.5} kl {:.4} total {:.5}", rec.recon, rec.kl, rec.total);
        curve.push(rec);
    }
    if !model.encoder.is_finite() || !model.decoder.is_finite() {
        return Err(Error::Model("training diverged".into()));
    }
    Ok(Trained { model, curve })
}

/// `n` decoder samples for problem features `y`, latent drawn from the prior,
/// each clamped into the unit box. Only the decoder is evaluated.
pub fn sample(model: &CvaeModel, y: &FeatureVector, n: usize, seed: u64) -> Result<Vec<Config>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    model.check_y(y.values())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = model.latent_dim;
    let input = Array2::from_shape_fn((n, q + model.feature_dim), |(_, j)| {
        if j < q {
            rng.sample(StandardNormal)
        } else {
            y.values()[j - q]
        }
    });
    let out = model.decoder.forward(&input);
    Ok(out.rows().into_iter().map(|r| Config::clamped(r.to_vec())).collect())
}

pub use io::{load_model, save_model, write_loss_curve};
pub(crate) use io::csv_err;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::Provenance;
    use ndarray::array;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    fn toy(d: usize, m: usize, q: usize, h: usize, seed: u64) -> CvaeModel {
        CvaeModel::new(d, m, q, h, 0.7, seed).unwrap()
    }

    #[test]
    fn zero_weights_give_the_prior() {
        let mut model = toy(2, 3, 2, 8, 0);
        let zeros = vec![0.0; model.param_count()];
        model.set_parameters(&zeros).unwrap();
        let (mu, lv) = encode(&model, &Config::new(vec![0.3, 0.9]).unwrap(), &fv(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(mu, vec![0.0, 0.0]);
        assert_eq!(lv, vec![0.0, 0.0]);
    }

    #[test]
    fn encode_is_pure_and_checks_dims() {
        let model = toy(2, 3, 2, 8, 4);
        let x = Config::new(vec![0.3, 0.9]).unwrap();
        let y = fv(&[1.0, 0.0, 1.0]);
        assert_eq!(encode(&model, &x, &y).unwrap(), encode(&model, &x, &y).unwrap());
        assert!(matches!(encode(&model, &x, &fv(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_to_standard_normal(&[0.0], &[0.0]), 0.0);
        assert!((kl_to_standard_normal(&[1.0], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_decoder_has_zero_loss() {
        // decoder output = last layer bias = x, every weight zero
        let mut model = toy(2, 1, 1, 4, 1);
        model.lambda = 0.0;
        for l in model.decoder.layers.iter_mut() {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        model.decoder.layers.last_mut().unwrap().b = array![0.25, 0.75];
        let x = Config::new(vec![0.25, 0.75]).unwrap();
        let l = elbo_loss_with_noise(&model, &x, &fv(&[0.5]), &[vec![0.3]]).unwrap();
        assert_eq!(l.total, 0.0);
    }

    #[test]
    fn kl_weight_never_lowers_loss() {
        let mut model = toy(2, 2, 3, 6, 5);
        let x = Config::new(vec![0.1, 0.6]).unwrap();
        let y = fv(&[0.2, 0.8]);
        let eps = vec![vec![0.3, -1.0, 0.5]];
        model.lambda = 0.0;
        let a = elbo_loss_with_noise(&model, &x, &y, &eps).unwrap().total;
        model.lambda = 1.0;
        let b = elbo_loss_with_noise(&model, &x, &y, &eps).unwrap().total;
        assert!(b >= a);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut model = toy(2, 2, 2, 4, 3);
        let p: Vec<f64> = (0..model.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        model.set_parameters(&p).unwrap();
        let xs = Array2::from_shape_fn((3, 2), |_| rng.random_range(0.0..1.0));
        let ys = Array2::from_shape_fn((3, 2), |_| rng.random_range(0.0..1.0));
        let eps = standard_normal(&mut rng, (2, 3, 2));
        let (_, g) = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap();
        let p0 = model.parameters();
        for i in 0..p0.len() {
            let h = 1e-5;
            let mut p = p0.clone();
            p[i] += h;
            model.set_parameters(&p).unwrap();
            let up = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap().0.total;
            p[i] -= 2.0 * h;
            model.set_parameters(&p).unwrap();
            let down = loss_and_gradient(&model, xs.view(), ys.view(), eps.view()).unwrap().0.total;
            let fd = (up - down) / (2.0 * h);
            let err = (fd - g[i]).abs();
            assert!(err <= 1e-4 * fd.abs().max(g[i].abs()).max(1e-6), "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn training_is_deterministic_and_decreases_loss() {
        let ns = |pts: &[[f64; 2]]| NodeSet {
            configs: pts.iter().map(|p| Config::new(p.to_vec()).unwrap()).collect(),
            provenance: Provenance::Sp,
        };
        let data = vec![
            (ns(&[[0.1, 0.2], [0.15, 0.25]]), fv(&[0.0, 1.0])),
            (ns(&[[0.8, 0.7], [0.85, 0.75], [0.9, 0.8]]), fv(&[1.0, 0.0])),
        ];
        let cfg = TrainConfig { epochs: 30, batch_size: 2, hidden_width: 16, ..Default::default() };
        let a = train(&data, &cfg, 9).unwrap();
        let b = train(&data, &cfg, 9).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.model, b.model);
        assert!(a.curve.last().unwrap().total < a.curve[0].total);
        assert!(matches!(train(&[], &cfg, 0), Err(Error::EmptyDataset)));
    }

    #[test]
    fn samples_stay_in_the_box() {
        let model = toy(3, 2, 2, 8, 2);
        let s = sample(&model, &fv(&[5.0, -5.0]), 50, 1).unwrap();
        assert_eq!(s.len(), 50);
        assert!(s.iter().all(|q| q.coords().iter().all(|&v| (0.0..=1.0).contains(&v))));
        assert!(sample(&model, &fv(&[0.0, 0.0]), 0, 1).is_err());
    }
}
