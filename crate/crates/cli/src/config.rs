//! Flat key-value pipeline configuration with module-prefixed keys.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mtmct_core::assoc::AssociationConstraints;
use mtmct_core::clm::WindowPad;
use mtmct_core::tsct::RelinkParams;
use mtmct_core::zones::{MeanShiftParams, ZoneThresholds};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{key}: {message}")]
    Range { key: String, message: String },
}

/// Every tunable of the pipeline, with the documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub zones_bandwidth: f64,
    pub zones_merge_radius: f64,
    pub zones_rho_ta: f64,
    pub zones_rho_e: f64,
    pub zones_rho_x: f64,
    pub tsct_sim_threshold: f64,
    pub tsct_max_gap: u32,
    pub tsct_clip_length: usize,
    pub tsct_order_prior: bool,
    pub clm_min_alpha: f64,
    pub clm_pad_frac: f64,
    pub clm_pad_min: i64,
    pub reid_clip_length: usize,
    pub reid_lambda1: f64,
    pub reid_lambda2: f64,
    pub assoc_delta: f64,
    pub assoc_iterations: u32,
    pub assoc_enforce_order: bool,
    pub eval_delta: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            zones_bandwidth: 80.0,
            zones_merge_radius: 40.0,
            zones_rho_ta: 0.5,
            zones_rho_e: 0.7,
            zones_rho_x: 0.7,
            tsct_sim_threshold: 0.35,
            tsct_max_gap: 600,
            tsct_clip_length: 4,
            tsct_order_prior: true,
            clm_min_alpha: 0.05,
            clm_pad_frac: 0.2,
            clm_pad_min: 10,
            reid_clip_length: 4,
            reid_lambda1: 1.0,
            reid_lambda2: 1.0,
            assoc_delta: 0.5,
            assoc_iterations: 2,
            assoc_enforce_order: true,
            eval_delta: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn mean_shift_params(&self) -> MeanShiftParams {
        MeanShiftParams {
            bandwidth: self.zones_bandwidth,
            merge_radius: self.zones_merge_radius,
            ..MeanShiftParams::default()
        }
    }

    pub fn zone_thresholds(&self) -> ZoneThresholds {
        ZoneThresholds {
            rho_ta: self.zones_rho_ta,
            rho_e: self.zones_rho_e,
            rho_x: self.zones_rho_x,
        }
    }

    pub fn relink_params(&self) -> RelinkParams {
        RelinkParams {
            sim_threshold: self.tsct_sim_threshold,
            max_gap: self.tsct_max_gap,
            use_order_prior: self.tsct_order_prior,
            clip_length: self.tsct_clip_length,
        }
    }

    pub fn window_pad(&self) -> WindowPad {
        WindowPad {
            frac: self.clm_pad_frac,
            min_frames: self.clm_pad_min,
        }
    }

    pub fn association_constraints(&self) -> AssociationConstraints {
        AssociationConstraints {
            delta: self.assoc_delta,
            iterations: self.assoc_iterations,
            enforce_order: self.assoc_enforce_order,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, message: &str| {
            Err(ConfigError::Range {
                key: key.to_string(),
                message: message.to_string(),
            })
        };
        if !(self.zones_bandwidth > 0.0) {
            return range("zones.bandwidth", "must be positive");
        }
        if !(self.zones_merge_radius > 0.0) {
            return range("zones.merge_radius", "must be positive");
        }
        for (key, v) in [
            ("zones.rho_ta", self.zones_rho_ta),
            ("zones.rho_e", self.zones_rho_e),
            ("zones.rho_x", self.zones_rho_x),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return range(key, "must lie in [0,1]");
            }
        }
        if !(self.tsct_sim_threshold > 0.0) {
            return range("tsct.sim_threshold", "must be positive");
        }
        if self.tsct_clip_length == 0 {
            return range("tsct.clip_length", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.clm_min_alpha) {
            return range("clm.min_alpha", "must lie in [0,1]");
        }
        if !(self.clm_pad_frac >= 0.0) {
            return range("clm.pad_frac", "must be non-negative");
        }
        if self.clm_pad_min < 0 {
            return range("clm.pad_min", "must be non-negative");
        }
        if self.reid_clip_length == 0 {
            return range("reid.clip_length", "must be positive");
        }
        if !(self.reid_lambda1 >= 0.0) || !(self.reid_lambda2 >= 0.0) {
            return range("reid.lambda1/lambda2", "must be non-negative");
        }
        if !(self.assoc_delta > 0.0) {
            return range("assoc.delta", "must be positive");
        }
        if self.assoc_iterations == 0 {
            return range("assoc.iterations", "must be positive");
        }
        if !(0.0 < self.eval_delta && self.eval_delta <= 1.0) {
            return range("eval.delta", "must lie in (0,1]");
        }
        Ok(())
    }

    fn set(&mut self, file: &str, lineno: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(
            file: &str,
            lineno: usize,
            key: &str,
            value: &str,
        ) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("invalid value `{value}` for {key}"),
            })
        }
        match key {
            "zones.bandwidth" => self.zones_bandwidth = parse(file, lineno, key, value)?,
            "zones.merge_radius" => self.zones_merge_radius = parse(file, lineno, key, value)?,
            "zones.rho_ta" => self.zones_rho_ta = parse(file, lineno, key, value)?,
            "zones.rho_e" => self.zones_rho_e = parse(file, lineno, key, value)?,
            "zones.rho_x" => self.zones_rho_x = parse(file, lineno, key, value)?,
            "tsct.sim_threshold" => self.tsct_sim_threshold = parse(file, lineno, key, value)?,
            "tsct.max_gap" => self.tsct_max_gap = parse(file, lineno, key, value)?,
            "tsct.clip_length" => self.tsct_clip_length = parse(file, lineno, key, value)?,
            "tsct.order_prior" => self.tsct_order_prior = parse(file, lineno, key, value)?,
            "clm.min_alpha" => self.clm_min_alpha = parse(file, lineno, key, value)?,
            "clm.pad_frac" => self.clm_pad_frac = parse(file, lineno, key, value)?,
            "clm.pad_min" => self.clm_pad_min = parse(file, lineno, key, value)?,
            "reid.clip_length" => self.reid_clip_length = parse(file, lineno, key, value)?,
            "reid.lambda1" => self.reid_lambda1 = parse(file, lineno, key, value)?,
            "reid.lambda2" => self.reid_lambda2 = parse(file, lineno, key, value)?,
            "assoc.delta" => self.assoc_delta = parse(file, lineno, key, value)?,
            "assoc.iterations" => self.assoc_iterations = parse(file, lineno, key, value)?,
            "assoc.enforce_order" => self.assoc_enforce_order = parse(file, lineno, key, value)?,
            "eval.delta" => self.eval_delta = parse(file, lineno, key, value)?,
            other => {
                return Err(ConfigError::Parse {
                    file: file.to_string(),
                    line: lineno,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Parse a config file; keys not present keep their defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut cfg = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    file: file.clone(),
                    line: lineno,
                    message: "expected `key = value`".to_string(),
                });
            };
            cfg.set(&file, lineno, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Write the configuration with every default documented inline.
    pub fn write(&self, path: &Path) -> Result<(), ConfigError> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# mtmct pipeline configuration")?;
        writeln!(w)?;
        writeln!(w, "# mean-shift kernel radius for zone discovery, pixels (default 80)")?;
        writeln!(w, "zones.bandwidth = {}", self.zones_bandwidth)?;
        writeln!(w, "# merge radius for converged modes, pixels (default 40)")?;
        writeln!(w, "zones.merge_radius = {}", self.zones_merge_radius)?;
        writeln!(w, "# balanced-endpoint density threshold for traffic-aware zones (default 0.5)")?;
        writeln!(w, "zones.rho_ta = {}", self.zones_rho_ta)?;
        writeln!(w, "# entry density threshold (default 0.7)")?;
        writeln!(w, "zones.rho_e = {}", self.zones_rho_e)?;
        writeln!(w, "# exit density threshold (default 0.7)")?;
        writeln!(w, "zones.rho_x = {}", self.zones_rho_x)?;
        writeln!(w, "# maximum feature distance for re-linking fragments (default 0.35)")?;
        writeln!(w, "tsct.sim_threshold = {}", self.tsct_sim_threshold)?;
        writeln!(w, "# maximum dwell inside a traffic-aware zone, frames (default 600)")?;
        writeln!(w, "tsct.max_gap = {}", self.tsct_max_gap)?;
        writeln!(w, "# frames pooled into the boundary feature (default 4)")?;
        writeln!(w, "tsct.clip_length = {}", self.tsct_clip_length)?;
        writeln!(w, "# break near-ties by queue order (default true)")?;
        writeln!(w, "tsct.order_prior = {}", self.tsct_order_prior)?;
        writeln!(w, "# minimum zone overlap ratio to count a traversal (default 0.05)")?;
        writeln!(w, "clm.min_alpha = {}", self.clm_min_alpha)?;
        writeln!(w, "# transition window padding as a fraction of the span (default 0.2)")?;
        writeln!(w, "clm.pad_frac = {}", self.clm_pad_frac)?;
        writeln!(w, "# minimum window padding, frames (default 10)")?;
        writeln!(w, "clm.pad_min = {}", self.clm_pad_min)?;
        writeln!(w, "# frames per clip for trajectory features (default 4)")?;
        writeln!(w, "reid.clip_length = {}", self.reid_clip_length)?;
        writeln!(w, "# weight of the triplet term in the combined loss (default 1)")?;
        writeln!(w, "reid.lambda1 = {}", self.reid_lambda1)?;
        writeln!(w, "# weight of the cross-entropy term (default 1)")?;
        writeln!(w, "reid.lambda2 = {}", self.reid_lambda2)?;
        writeln!(w, "# merge threshold for cross-camera clustering (default 0.5)")?;
        writeln!(w, "assoc.delta = {}", self.assoc_delta)?;
        writeln!(w, "# clustering passes over the sorted pair list (default 2)")?;
        writeln!(w, "assoc.iterations = {}", self.assoc_iterations)?;
        writeln!(w, "# reject merges that would let vehicles overtake on a link (default true)")?;
        writeln!(w, "assoc.enforce_order = {}", self.assoc_enforce_order)?;
        writeln!(w, "# IOU threshold for evaluation matching (default 0.5)")?;
        writeln!(w, "eval.delta = {}", self.eval_delta)?;
        w.flush()?;
        Ok(())
    }
}
