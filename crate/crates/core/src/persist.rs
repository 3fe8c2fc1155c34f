//! Text serialization of trained models.
//!
//! Models are written as a JSON document:
//!
//! ```text
//! {
//!   "format": "qbag-model",
//!   "version": 1,
//!   "model": { "Qbb": { ... } }      // or { "BaggedTrees": { ... } }
//! }
//! ```
//!
//! Floats are printed in shortest round-trip decimal form and parsed back
//! exactly, so `load(save(m)) == m` bit for bit.

use serde::{Deserialize, Serialize};

use crate::baselines::BaggedTrees;
use crate::ensemble::QbbModel;
use crate::{Error, Result};

pub const FORMAT: &str = "qbag-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SavedModel {
    Qbb(QbbModel),
    BaggedTrees(BaggedTrees),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: SavedModel,
}

pub fn to_text(model: &SavedModel) -> Result<String> {
    let env = Envelope {
        format: FORMAT.to_string(),
        version: VERSION,
        model: model.clone(),
    };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_text(text: &str) -> Result<SavedModel> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if env.format != FORMAT {
        return Err(Error::Format(format!(
            "unexpected format tag `{}`",
            env.format
        )));
    }
    if env.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {}",
            env.version
        )));
    }
    Ok(env.model)
}

pub fn save(model: &SavedModel, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: impl AsRef<std::path::Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_text(&text)
}
