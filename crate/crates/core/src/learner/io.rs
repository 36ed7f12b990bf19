use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::nn::{Dense, Mlp};
use super::{CvaeModel, LossRecord};
use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    /// Row-major, inputs × outputs.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    latent_dim: usize,
    feature_dim: usize,
    output_dim: usize,
    lambda: f64,
    rng_seed: u64,
    encoder: Vec<LayerFile>,
    decoder: Vec<LayerFile>,
}

fn to_file(net: &Mlp) -> Vec<LayerFile> {
    net.layers
        .iter()
        .map(|l| LayerFile {
            inputs: l.inputs(),
            outputs: l.outputs(),
            weights: l.w.iter().copied().collect(),
            bias: l.b.to_vec(),
        })
        .collect()
}

fn from_file(layers: Vec<LayerFile>) -> Result<Mlp> {
    let layers = layers
        .into_iter()
        .map(|l| {
            let w = Array2::from_shape_vec((l.inputs, l.outputs), l.weights)
                .map_err(|e| Error::Model(format!("layer weights: {e}")))?;
            if l.bias.len() != l.outputs {
                return Err(Error::Model("layer bias length".into()));
            }
            Ok(Dense { w, b: Array1::from(l.bias) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mlp { layers })
}

impl From<&CvaeModel> for ModelFile {
    fn from(m: &CvaeModel) -> Self {
        ModelFile {
            version: FORMAT_VERSION,
            latent_dim: m.latent_dim,
            feature_dim: m.feature_dim,
            output_dim: m.output_dim,
            lambda: m.lambda,
            rng_seed: m.rng_seed,
            encoder: to_file(&m.encoder),
            decoder: to_file(&m.decoder),
        }
    }
}

/// Writes the model as JSON.
pub fn save_model(model: &CvaeModel, path: impl AsRef<Path>) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(w, &ModelFile::from(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CvaeModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|_| Error::Missing(format!("model file {}", path.display())))?;
    let f: ModelFile = serde_json::from_reader(BufReader::new(file))?;
    if f.version != FORMAT_VERSION {
        return Err(Error::Model(format!("unsupported model version {}", f.version)));
    }
    let model = CvaeModel {
        encoder: from_file(f.encoder)?,
        decoder: from_file(f.decoder)?,
        latent_dim: f.latent_dim,
        feature_dim: f.feature_dim,
        output_dim: f.output_dim,
        lambda: f.lambda,
        rng_seed: f.rng_seed,
    };
    model.validate()?;
    Ok(model)
}

/// `epoch,recon,kl,total` rows.
pub fn write_loss_curve(curve: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in curve {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}
