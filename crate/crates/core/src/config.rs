//! Flat `section.key = value` configuration covering every stage.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::bitstream::{StackSource, DEFAULT_QPS};
use crate::dbn::DbnConfig;
use crate::error::{Error, Result};
use crate::pipeline::CodecConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub codec: CodecConfig,
    pub dbn: DbnConfig,
    pub sweep_qps: Vec<u32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            codec: CodecConfig::default(),
            dbn: DbnConfig::default(),
            sweep_qps: DEFAULT_QPS.to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let c = &mut self.codec;
        let d = &mut self.dbn;
        match key.trim() {
            k @ "layers.count" => c.layer_count = parse(k, value)?,
            k @ "layers.depths" => {
                c.depths = match value {
                    "" | "auto" => None,
                    _ => Some(parse_list(k, value)?),
                }
            }
            k @ "solver.max_iterations" => c.solver.max_iterations = parse(k, value)?,
            k @ "solver.step_size" => c.solver.step_size = parse(k, value)?,
            k @ "solver.max_halvings" => c.solver.max_halvings = parse(k, value)?,
            k @ "solver.tolerance" => c.solver.tolerance = parse(k, value)?,
            k @ "solver.seed" => {
                c.solver.seed = match value {
                    "" | "none" => None,
                    _ => Some(parse(k, value)?),
                }
            }
            k @ "wbi.components" => c.wbi.components = parse(k, value)?,
            k @ "wbi.partition" => c.wbi.partition = parse_list(k, value)?,
            k @ "wbi.max_alternations" => c.wbi.max_alternations = parse(k, value)?,
            k @ "wbi.tolerance" => c.wbi.tolerance = parse(k, value)?,
            k @ "wbi.ridge" => c.wbi.ridge = parse(k, value)?,
            k @ "wbi.seed" => c.wbi.seed = parse(k, value)?,
            k @ "wbi.search_cap" => c.wbi.search_cap = parse(k, value)?,
            k @ "wbi.source" => {
                c.source = match value {
                    "layers" => StackSource::Layers,
                    "views" => StackSource::Views,
                    _ => return Err(Error::Config(format!("{k}: expected layers or views, got {value:?}"))),
                }
            }
            k @ "codec.lossless" => c.lossless = parse_bool(k, value)?,
            k @ "codec.refine_iterations" => c.refine_iterations = parse(k, value)?,
            k @ "quant.bits" => c.quant_bits = parse(k, value)?,
            k @ "dbn.sizes" => d.sizes = parse_list(k, value)?,
            k @ "dbn.patch" => d.patch = parse(k, value)?,
            k @ "dbn.stride" => d.stride = parse(k, value)?,
            k @ "dbn.min_variance" => d.min_variance = parse(k, value)?,
            k @ "dbn.pretrain_epochs" => d.pretrain_epochs = parse(k, value)?,
            k @ "dbn.finetune_epochs" => d.finetune_epochs = parse(k, value)?,
            k @ "dbn.learning_rate" => d.learning_rate = parse(k, value)?,
            k @ "dbn.finetune_learning_rate" => d.finetune_learning_rate = parse(k, value)?,
            k @ "dbn.momentum" => d.momentum = parse(k, value)?,
            k @ "dbn.finetune_momentum" => d.finetune_momentum = parse(k, value)?,
            k @ "dbn.batch_size" => d.batch_size = parse(k, value)?,
            k @ "dbn.cd_steps" => d.cd_steps = parse(k, value)?,
            k @ "dbn.seed" => d.seed = parse(k, value)?,
            k @ "dbn.allow_any_sizes" => d.allow_any_sizes = parse_bool(k, value)?,
            k @ "sweep.qps" => self.sweep_qps = parse_list(k, value)?,
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        self.dbn.validate()?;
        if self.sweep_qps.is_empty() {
            return Err(Error::Config("sweep.qps must list at least one value".into()));
        }
        Ok(())
    }

    /// Every setting, in a form [`apply_text`](Self::apply_text) reads back.
    pub fn to_text(&self) -> String {
        let c = &self.codec;
        let d = &self.dbn;
        let entries: Vec<(&str, String)> = vec![
            ("layers.count", c.layer_count.to_string()),
            ("layers.depths", c.depths.as_deref().map_or_else(|| "auto".into(), join)),
            ("solver.max_iterations", c.solver.max_iterations.to_string()),
            ("solver.step_size", c.solver.step_size.to_string()),
            ("solver.max_halvings", c.solver.max_halvings.to_string()),
            ("solver.tolerance", c.solver.tolerance.to_string()),
            ("solver.seed", c.solver.seed.map_or_else(|| "none".into(), |s| s.to_string())),
            ("wbi.components", c.wbi.components.to_string()),
            ("wbi.partition", join(&c.wbi.partition)),
            ("wbi.max_alternations", c.wbi.max_alternations.to_string()),
            ("wbi.tolerance", c.wbi.tolerance.to_string()),
            ("wbi.ridge", c.wbi.ridge.to_string()),
            ("wbi.seed", c.wbi.seed.to_string()),
            ("wbi.search_cap", c.wbi.search_cap.to_string()),
            (
                "wbi.source",
                match c.source {
                    StackSource::Layers => "layers".into(),
                    StackSource::Views => "views".into(),
                },
            ),
            ("codec.lossless", c.lossless.to_string()),
            ("codec.refine_iterations", c.refine_iterations.to_string()),
            ("quant.bits", c.quant_bits.to_string()),
            ("dbn.sizes", join(&d.sizes)),
            ("dbn.patch", d.patch.to_string()),
            ("dbn.stride", d.stride.to_string()),
            ("dbn.min_variance", d.min_variance.to_string()),
            ("dbn.pretrain_epochs", d.pretrain_epochs.to_string()),
            ("dbn.finetune_epochs", d.finetune_epochs.to_string()),
            ("dbn.learning_rate", d.learning_rate.to_string()),
            ("dbn.finetune_learning_rate", d.finetune_learning_rate.to_string()),
            ("dbn.momentum", d.momentum.to_string()),
            ("dbn.finetune_momentum", d.finetune_momentum.to_string()),
            ("dbn.batch_size", d.batch_size.to_string()),
            ("dbn.cd_steps", d.cd_steps.to_string()),
            ("dbn.seed", d.seed.to_string()),
            ("dbn.allow_any_sizes", d.allow_any_sizes.to_string()),
            ("sweep.qps", join(&self.sweep_qps)),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
