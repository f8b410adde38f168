use crate::error::{NnError, Result};
use crate::layer::LayerSpec;
use crate::network::{LayerParams, Network};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    spec: Vec<LayerSpec>,
    seed: u64,
    params: Vec<ParamRecord>,
}

impl Network {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let mut params = Vec::new();
        for (i, p) in self.params().iter().enumerate() {
            params.push(ParamRecord {
                name: format!("layer{i}.weight"),
                shape: p.weight.shape.clone(),
                data: p.weight.data.clone(),
            });
            params.push(ParamRecord {
                name: format!("layer{i}.bias"),
                shape: p.bias.shape.clone(),
                data: p.bias.data.clone(),
            });
        }
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            spec: self.spec().to_vec(),
            seed: self.seed(),
            params,
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_checkpoint_json(json: &str) -> Result<Network> {
        let ckpt: Checkpoint = serde_json::from_str(json)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(NnError::CheckpointVersion {
                expected: CHECKPOINT_VERSION,
                got: ckpt.version,
            });
        }
        let n_layers = ckpt.spec.len();
        if ckpt.params.len() != 2 * n_layers {
            return Err(NnError::Checkpoint(format!(
                "expected {} parameter records, found {}",
                2 * n_layers,
                ckpt.params.len()
            )));
        }
        let mut params = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let w = &ckpt.params[2 * i];
            let b = &ckpt.params[2 * i + 1];
            let expect = |rec: &ParamRecord, suffix: &str| -> Result<()> {
                let want = format!("layer{i}.{suffix}");
                if rec.name != want {
                    return Err(NnError::Checkpoint(format!(
                        "unexpected record {:?}, expected {:?}",
                        rec.name, want
                    )));
                }
                Ok(())
            };
            expect(w, "weight")?;
            expect(b, "bias")?;
            let (wshape, bshape) = ckpt.spec[i].param_shapes();
            if w.shape != wshape || b.shape != bshape {
                return Err(NnError::Checkpoint(format!(
                    "parameter shapes for layer {i} do not match its spec"
                )));
            }
            params.push(LayerParams {
                weight: Tensor::new(w.shape.clone(), w.data.clone())?,
                bias: Tensor::new(b.shape.clone(), b.data.clone())?,
            });
        }
        let net = Network::restore(ckpt.spec, params, ckpt.seed);
        // Re-validate the layer chain the same way `new` does.
        Network::new(net.spec().to_vec(), net.seed())?;
        Ok(net)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()?)?;
        Ok(())
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
        let json = std::fs::read_to_string(path)?;
        Network::from_checkpoint_json(&json)
    }
}
