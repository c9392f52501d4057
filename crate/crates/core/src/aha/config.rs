use super::AhaError;
use serde::{Deserialize, Serialize};

/// Network hyperparameters.
///
/// JSON schema: `{S, C, window: [7, 7], L, N4, heads, input: [640, 320], seed}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AhaConfig {
    /// Frame count per forward pass.
    #[serde(rename = "S", default = "default_frames")]
    pub frames: usize,
    /// Stage-3 channel width.
    #[serde(rename = "C", default = "default_channels")]
    pub channels: usize,
    /// Window extents (P_h, P_w).
    #[serde(default = "default_window")]
    pub window: [usize; 2],
    /// Number of stacked stage-3 blocks.
    #[serde(rename = "L", default = "default_blocks")]
    pub blocks: usize,
    /// Stage-4 refinement layer count.
    #[serde(rename = "N4", default = "default_refine")]
    pub refine_layers: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    /// Input (width, height) in pixels.
    #[serde(default = "default_input")]
    pub input: [usize; 2],
    #[serde(default)]
    pub seed: u64,
}

fn default_frames() -> usize {
    4
}
fn default_channels() -> usize {
    128
}
fn default_window() -> [usize; 2] {
    [7, 7]
}
fn default_blocks() -> usize {
    2
}
fn default_refine() -> usize {
    2
}
fn default_heads() -> usize {
    4
}
fn default_input() -> [usize; 2] {
    [640, 320]
}

impl Default for AhaConfig {
    fn default() -> Self {
        Self {
            frames: default_frames(),
            channels: default_channels(),
            window: default_window(),
            blocks: default_blocks(),
            refine_layers: default_refine(),
            heads: default_heads(),
            input: default_input(),
            seed: 0,
        }
    }
}

impl AhaConfig {
    pub fn validate(&self) -> Result<(), AhaError> {
        if self.frames == 0 {
            return Err(AhaError::BadConfig("S must be >= 1".into()));
        }
        if self.window[0] == 0 || self.window[1] == 0 {
            return Err(AhaError::BadConfig("window extents must be >= 1".into()));
        }
        if self.blocks == 0 {
            return Err(AhaError::BadConfig("L must be >= 1".into()));
        }
        if self.refine_layers == 0 {
            return Err(AhaError::BadConfig("N4 must be >= 1".into()));
        }
        if self.heads == 0 || self.channels % self.heads != 0 {
            return Err(AhaError::BadConfig(format!(
                "C = {} must be divisible by heads = {}",
                self.channels, self.heads
            )));
        }
        if self.input[0] == 0 || self.input[1] == 0 {
            return Err(AhaError::BadConfig("input size must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, AhaError> {
        let cfg: Self =
            serde_json::from_str(json).map_err(|e| AhaError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn win_h(&self) -> usize {
        self.window[0]
    }

    pub fn win_w(&self) -> usize {
        self.window[1]
    }

    pub fn input_width(&self) -> usize {
        self.input[0]
    }

    pub fn input_height(&self) -> usize {
        self.input[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_setup() {
        let c = AhaConfig::default();
        assert_eq!(c.frames, 4);
        assert_eq!(c.window, [7, 7]);
        assert_eq!(c.refine_layers, 2);
        assert_eq!(c.input, [640, 320]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_uses_short_keys_and_fills_defaults() {
        let c = AhaConfig::from_json(r#"{"S": 2, "C": 64, "heads": 2, "input": [64, 32]}"#)
            .unwrap();
        assert_eq!(c.frames, 2);
        assert_eq!(c.channels, 64);
        assert_eq!(c.window, [7, 7]);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"S\":2") && s.contains("\"N4\":2"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(AhaConfig::from_json(r#"{"S": 0}"#).is_err());
        assert!(AhaConfig::from_json(r#"{"C": 10, "heads": 4}"#).is_err());
        assert!(AhaConfig::from_json(r#"{"L": 0}"#).is_err());
        assert!(AhaConfig::from_json("not json").is_err());
    }
}
