use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::NoiseModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Probabilities read off the statevector; no sampling, no noise.
    Exact,
    /// Finite-shot sampling of measured qubits, optionally noisy.
    Shots,
}

/// How circuits are evaluated: analytically or by sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalBackend {
    pub mode: EvalMode,
    pub shots: u64,
    pub noise: Option<NoiseModel>,
    pub seed: u64,
    /// Noise trajectories per circuit; the shots are split evenly among them.
    pub trajectories: usize,
}

pub const DEFAULT_TRAJECTORIES: usize = 8;

impl EvalBackend {
    pub fn exact() -> EvalBackend {
        EvalBackend {
            mode: EvalMode::Exact,
            shots: 0,
            noise: None,
            seed: 0,
            trajectories: 1,
        }
    }

    pub fn shots(shots: u64, seed: u64) -> EvalBackend {
        EvalBackend {
            mode: EvalMode::Shots,
            shots,
            noise: None,
            seed,
            trajectories: DEFAULT_TRAJECTORIES,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> EvalBackend {
        self.noise = Some(noise);
        self
    }

    pub fn with_trajectories(mut self, trajectories: usize) -> EvalBackend {
        self.trajectories = trajectories;
        self
    }

    pub fn with_seed(&self, seed: u64) -> EvalBackend {
        EvalBackend { seed, ..self.clone() }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == EvalMode::Exact
    }

    /// The noise model in effect; `None` in EXACT mode and for all-zero models.
    pub fn active_noise(&self) -> Option<&NoiseModel> {
        match (&self.mode, &self.noise) {
            (EvalMode::Shots, Some(m)) if !m.is_noiseless() => Some(m),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == EvalMode::Shots {
            if self.shots == 0 {
                return invalid("SHOTS mode needs at least one shot");
            }
            if self.trajectories == 0 {
                return invalid("SHOTS mode needs at least one trajectory");
            }
        }
        if let Some(m) = &self.noise {
            m.validate()?;
        }
        Ok(())
    }
}

impl Default for EvalBackend {
    fn default() -> Self {
        EvalBackend::exact()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of integers into an independent stream seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
