use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec};
use crate::numerics::{ParamStore, Scalar, Tensor};
use crate::textpipe::EmbeddingTable;

/// On-disk checkpoint. Parameters are nested arrays keyed by name in registry
/// order; the embedding table is not stored, only its fingerprint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: Map<String, Value>,
    pub rng_seed: u64,
    pub epoch: usize,
    pub embedding_fingerprint: String,
}

fn to_nested<T: Scalar>(t: &Tensor<T>) -> Value {
    fn rec<T: Scalar>(shape: &[usize], data: &[T]) -> Value {
        if shape.len() == 1 {
            return Value::Array(data.iter().map(|x| Value::from(x.as_f64())).collect());
        }
        let step = data.len() / shape[0];
        Value::Array(data.chunks(step).map(|c| rec(&shape[1..], c)).collect())
    }
    rec(t.shape(), t.data())
}

fn from_nested<T: Scalar>(name: &str, v: &Value) -> Result<Tensor<T>> {
    fn rec<T: Scalar>(v: &Value, depth: usize, shape: &mut Vec<usize>, out: &mut Vec<T>) -> std::result::Result<(), String> {
        match v {
            Value::Array(items) => {
                if shape.len() == depth {
                    shape.push(items.len());
                } else if shape[depth] != items.len() {
                    return Err("ragged array".into());
                }
                for item in items {
                    rec(item, depth + 1, shape, out)?;
                }
                Ok(())
            }
            Value::Number(n) if shape.len() == depth => {
                out.push(T::lit(n.as_f64().ok_or("number out of range")?));
                Ok(())
            }
            _ => Err(format!("unexpected value {v}")),
        }
    }
    let mut shape = Vec::new();
    let mut data = Vec::new();
    rec(v, 0, &mut shape, &mut data).map_err(|e| Error::Format(format!("parameter {name}: {e}")))?;
    Tensor::new(shape, data).map_err(|e| Error::Format(format!("parameter {name}: {e}")))
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &Model<T>, rng_seed: u64, epoch: usize) -> Self {
        let params = model.params().iter().map(|(n, t)| (n.to_string(), to_nested(t))).collect();
        Checkpoint {
            spec: model.spec().clone(),
            params,
            rng_seed,
            epoch,
            embedding_fingerprint: model.table().fingerprint(),
        }
    }

    /// Rebuilds the model over `table`, which must be the table it was trained
    /// with.
    pub fn into_model<T: Scalar>(self, table: Arc<EmbeddingTable<T>>) -> Result<Model<T>> {
        let fp = table.fingerprint();
        if fp != self.embedding_fingerprint {
            return Err(Error::Format(format!(
                "embedding table fingerprint {fp} differs from the checkpoint's {}",
                self.embedding_fingerprint
            )));
        }
        let mut params = ParamStore::new();
        for (name, value) in &self.params {
            params.register(name.clone(), from_nested(name, value)?)?;
        }
        Model::from_params(self.spec, table, params)
    }
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, path: &Path, rng_seed: u64, epoch: usize) -> Result<()> {
    let ck = Checkpoint::from_model(model, rng_seed, epoch);
    let text = serde_json::to_string(&ck)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Loads a checkpoint; when `expected` is given its spec must match exactly.
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
    table: Arc<EmbeddingTable<T>>,
    expected: Option<&ModelSpec>,
) -> Result<(Model<T>, Checkpoint)> {
    let ck = read_checkpoint(path)?;
    if let Some(spec) = expected {
        let diff = ck.spec.diff(spec);
        if !diff.is_empty() {
            return Err(Error::Format(format!("spec mismatch (checkpoint vs expected): {}", diff.join(", "))));
        }
    }
    let meta = ck.clone();
    Ok((ck.into_model(table)?, meta))
}
