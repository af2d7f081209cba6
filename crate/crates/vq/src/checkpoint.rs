//! Checkpointing with a config hash so resumed runs match the saved setup.

use crate::model::{VqConfig, VqError, VqModel};
use crate::train::{VqTrainConfig, VqTrainer};
use logicforge_autodiff::{Adam, ParamSet};
use logicforge_core::io::write_atomic;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume training bit-for-bit.
#[derive(Serialize, Deserialize)]
pub struct VqCheckpoint {
    pub version: u32,
    pub config: VqConfig,
    pub train_config: VqTrainConfig,
    pub config_hash: String,
    pub params: ParamSet,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub step: usize,
    pub epoch: usize,
}

/// Hex digest of the serialized configs; detects architecture drift.
pub fn config_hash(config: &VqConfig, train_config: &VqTrainConfig) -> String {
    let blob = serde_json::to_string(&(config, train_config))
        .expect("configs serialize infallibly");
    let mut hasher = Sha256::new();
    hasher.update(blob.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_checkpoint(path: impl AsRef<Path>, trainer: &VqTrainer) -> Result<(), VqError> {
    let ckpt = VqCheckpoint {
        version: CHECKPOINT_VERSION,
        config: trainer.model.cfg.clone(),
        train_config: trainer.cfg.clone(),
        config_hash: config_hash(&trainer.model.cfg, &trainer.cfg),
        params: trainer.model.params.clone(),
        adam: trainer.opt.clone(),
        rng: trainer.rng.clone(),
        step: trainer.step,
        epoch: trainer.epoch,
    };
    let text = serde_json::to_string(&ckpt)?;
    write_atomic(path, &text)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<VqTrainer, VqError> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: VqCheckpoint = serde_json::from_str(&text)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(VqError::Checkpoint {
            reason: format!(
                "version {} not supported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            ),
        });
    }
    let expected = config_hash(&ckpt.config, &ckpt.train_config);
    if ckpt.config_hash != expected {
        return Err(VqError::Checkpoint {
            reason: "config hash does not match the stored configs".to_string(),
        });
    }
    let model = VqModel { cfg: ckpt.config, params: ckpt.params };
    Ok(VqTrainer::from_parts(
        model,
        ckpt.adam,
        ckpt.rng,
        ckpt.train_config,
        ckpt.step,
        ckpt.epoch,
    ))
}
