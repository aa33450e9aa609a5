use serde::{Deserialize, Serialize};

use crate::cells::CellKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AvgRnn,
    Mvn1d,
    Mvn2d,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::AvgRnn => "avg_rnn",
            Variant::Mvn1d => "mvn1d",
            Variant::Mvn2d => "mvn2d",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// One-sided STFT bins per frame (`frame_size / 2 + 1`).
    pub input_bins: usize,
    pub front_dim: usize,
    pub hidden: usize,
    pub cell: CellKind,
    pub variant: Variant,
    /// Adds a second cell that runs over the channels in reverse order.
    pub bidirectional_channels: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_bins: 513,
            front_dim: 512,
            hidden: 512,
            cell: CellKind::Gru,
            variant: Variant::Mvn2d,
            bidirectional_channels: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_bins", self.input_bins),
            ("front_dim", self.front_dim),
            ("hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        if self.bidirectional_channels && self.variant == Variant::AvgRnn {
            return Err(Error::Config(
                "model.bidirectional_channels has no meaning for avg_rnn".into(),
            ));
        }
        Ok(())
    }

    /// Width of the back layer's input.
    pub fn readout_dim(&self) -> usize {
        if self.bidirectional_channels {
            2 * self.hidden
        } else {
            self.hidden
        }
    }

    /// Short label used in sweep output, e.g. `mvn2d` or `mvn2d_bi`.
    pub fn label(&self) -> String {
        let mut s = self.variant.tag().to_string();
        if self.bidirectional_channels {
            s.push_str("_bi");
        }
        if self.cell == CellKind::Plain {
            s.push_str("_plain");
        }
        s
    }
}
