//! JSON model file: a fitted meta-model plus what is needed to use it.

use std::path::Path;

use aggsense_core::multilabel::MetaModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "aggsense.model.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    /// Resolution of the data the model was fit on.
    pub step_seconds: u32,
    pub seed: u64,
    pub model: MetaModel,
}

impl ModelFile {
    pub fn new(model: MetaModel, step_seconds: u32, seed: u64) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            step_seconds,
            seed,
            model,
        }
    }

    pub fn window(&self) -> usize {
        self.model.window
    }
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string(file).map_err(|e| Error::format("model", e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_model(text: &str, context: &str) -> Result<ModelFile> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::format(context, e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::format(context, format!("unsupported model format '{}'", file.format)));
    }
    Ok(file)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, &path.display().to_string())
}
