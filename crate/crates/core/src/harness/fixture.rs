use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::{build_model, ModelSpec};
use crate::numerics::{Rng, Tensor};
use crate::textpipe::{EmbeddingTable, Example};

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn tensor(v: &Value) -> Result<Tensor<f64>> {
    let num = |x: &Value| x.as_f64().ok_or_else(|| bad(format!("not a number: {x}")));
    match v {
        Value::Array(rows) if rows.first().is_some_and(Value::is_array) => {
            let rows = rows
                .iter()
                .map(|r| r.as_array().ok_or_else(|| bad("ragged matrix"))?.iter().map(num).collect())
                .collect::<Result<Vec<Vec<f64>>>>()?;
            Tensor::from_rows(&rows)
        }
        Value::Array(xs) => Tensor::vector(xs.iter().map(num).collect::<Result<_>>()?),
        other => Err(bad(format!("not an array: {other}"))),
    }
}

/// Largest absolute deviation between library inference and a reference
/// forward-pass fixture.
///
/// The fixture is a JSON list of cases `{spec, embeddings, params, cases}`;
/// each entry of `cases` holds padded `ids` with expected `probs` and `alphas`.
/// Parameters are installed by name over a freshly built model.
pub fn fixture_max_deviation(json: &str) -> Result<f64> {
    let fixture: Vec<Value> = serde_json::from_str(json)?;
    let mut worst = 0.0f64;
    for case in &fixture {
        let spec: ModelSpec = serde_json::from_value(case["spec"].clone())?;
        let table = Arc::new(EmbeddingTable::new(tensor(&case["embeddings"])?)?);
        let mut model = build_model(spec, table, &mut Rng::new(0))?;
        let params = case["params"].as_object().ok_or_else(|| bad("params must be an object"))?;
        for (name, value) in params {
            let t = tensor(value)?;
            let slot = model
                .params_mut()
                .by_name_mut(name)
                .ok_or_else(|| bad(format!("no parameter {name}")))?;
            if slot.len() != t.len() {
                return Err(bad(format!("{name}: {} values for shape {:?}", t.len(), slot.shape())));
            }
            *slot = t.reshape(slot.shape().to_vec())?;
        }
        for c in case["cases"].as_array().ok_or_else(|| bad("cases must be a list"))? {
            let ids = c["ids"]
                .as_array()
                .ok_or_else(|| bad("ids must be a list"))?
                .iter()
                .map(|x| x.as_u64().map(|v| v as u32).ok_or_else(|| bad("bad id")))
                .collect::<Result<Vec<u32>>>()?;
            let out = model.infer(&Example::new(0, ids)?)?;
            let want_p = tensor(&c["probs"])?;
            let want_a = tensor(&c["alphas"])?;
            let alphas = out.alphas.unwrap_or_default();
            if out.probs.len() != want_p.len() || alphas.len() != want_a.len() {
                return Err(bad("output lengths differ from the fixture"));
            }
            for (a, b) in out.probs.iter().zip(want_p.data()).chain(alphas.iter().zip(want_a.data())) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}
