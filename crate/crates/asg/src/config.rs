//! Flat run configuration.
//!
//! One key per line (`key = value`), so configuration diffs stay line-wise.
//! Defaults follow the published parameter settings: `alpha_c = 0.75`,
//! `l_max = 10`, `w_s = 1e-4` (color) / `2e-8` (hist), scales `[2, 41]` at
//! half resolution and `[2, 82]` at full resolution, matching tolerance 1%
//! of the image diagonal.

use serde::{Deserialize, Serialize};

use crate::cost::{CostConfig, CostKind};
use crate::error::{Error, Result};
use crate::growth::GrowthConfig;
use crate::shock::ShockConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Half,
    Full,
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolution::Half => write!(f, "half"),
            Resolution::Full => write!(f, "full"),
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(Resolution::Half),
            "full" => Ok(Resolution::Full),
            other => Err(Error::InvalidParameter(format!(
                "unknown resolution '{other}' (expected half|full)"
            ))),
        }
    }
}

impl Resolution {
    /// Scale range preset for this resolution mode.
    pub fn scale_range(self) -> (u32, u32) {
        match self {
            Resolution::Half => (2, 41),
            Resolution::Full => (2, 82),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cost: CostKind,
    pub resolution: Resolution,
    pub w_s_color: f64,
    pub w_s_hist: f64,
    pub r_min: u32,
    pub r_max: u32,
    pub bins: usize,
    pub tile_size: usize,
    pub smooth: bool,
    pub lambda: f64,
    pub kappa: f64,
    pub beta_max: f64,
    pub delta_r: f64,
    pub epsilon_r: u32,
    pub alpha_c: f64,
    pub l_max: usize,
    pub alpha_end: f64,
    pub directions: usize,
    pub relax_factor: f64,
    pub scale_step: u32,
    pub subsume_frac: f64,
    pub eval_tol_frac: f64,
    pub match_cap: u64,
    pub ligature_horizon: u32,
    pub weighted_precision: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cost: CostKind::Hist,
            resolution: Resolution::Half,
            w_s_color: 1e-4,
            w_s_hist: 2e-8,
            r_min: 2,
            r_max: 41,
            bins: 10,
            tile_size: 6,
            smooth: true,
            lambda: 2e-2,
            kappa: 2.0,
            beta_max: 1e5,
            delta_r: 0.0,
            epsilon_r: 1,
            alpha_c: 0.75,
            l_max: 10,
            alpha_end: 0.85,
            directions: 16,
            relax_factor: 2.0,
            scale_step: 1,
            subsume_frac: 0.95,
            eval_tol_frac: 0.01,
            match_cap: 20_000_000,
            ligature_horizon: 3,
            weighted_precision: false,
        }
    }
}

macro_rules! config_keys {
    ($macro:ident) => {
        $macro!(
            (cost, "cost"),
            (resolution, "resolution"),
            (w_s_color, "w_s_color"),
            (w_s_hist, "w_s_hist"),
            (r_min, "r_min"),
            (r_max, "r_max"),
            (bins, "bins"),
            (tile_size, "tile_size"),
            (smooth, "smooth"),
            (lambda, "lambda"),
            (kappa, "kappa"),
            (beta_max, "beta_max"),
            (delta_r, "delta_r"),
            (epsilon_r, "epsilon_r"),
            (alpha_c, "alpha_c"),
            (l_max, "l_max"),
            (alpha_end, "alpha_end"),
            (directions, "directions"),
            (relax_factor, "relax_factor"),
            (scale_step, "scale_step"),
            (subsume_frac, "subsume_frac"),
            (eval_tol_frac, "eval_tol_frac"),
            (match_cap, "match_cap"),
            (ligature_horizon, "ligature_horizon"),
            (weighted_precision, "weighted_precision")
        );
    };
}

impl RunConfig {
    /// Serialize as `key = value` lines in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        macro_rules! emit {
            ($(($field:ident, $key:literal)),*) => {
                $(out.push_str(&format!("{} = {}\n", $key, self.$field));)*
            };
        }
        config_keys!(emit);
        out
    }

    /// Parse `key = value` lines; later lines override earlier ones.
    /// Unknown keys are an error.
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("config line {}: missing '='", idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Assign one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad value '{value}' for key '{key}'"))
            })
        }
        macro_rules! assign {
            ($(($field:ident, $key:literal)),*) => {
                match key {
                    $($key => self.$field = parse($key, value)?,)*
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "unknown config key '{other}'"
                        )))
                    }
                }
            };
        }
        config_keys!(assign);
        Ok(())
    }

    /// Apply a resolution preset (sets the scale range).
    pub fn with_resolution(mut self, res: Resolution) -> Self {
        self.resolution = res;
        let (r_min, r_max) = res.scale_range();
        self.r_min = r_min;
        self.r_max = r_max;
        self
    }

    /// Scale-penalty weight for the active cost kind.
    pub fn w_s(&self) -> f64 {
        match self.cost {
            CostKind::Color => self.w_s_color,
            CostKind::Hist => self.w_s_hist,
        }
    }

    pub fn cost_config(&self) -> CostConfig {
        CostConfig {
            kind: self.cost,
            w_s: self.w_s(),
            r_min: self.r_min,
            r_max: self.r_max,
            bins: self.bins,
            tile_size: self.tile_size,
        }
    }

    pub fn shock_config(&self) -> ShockConfig {
        ShockConfig {
            delta_r: self.delta_r,
            epsilon_r: self.epsilon_r,
        }
    }

    pub fn growth_config(&self) -> GrowthConfig {
        GrowthConfig {
            alpha_c: self.alpha_c,
            l_max: self.l_max,
            alpha_end: self.alpha_end,
            directions: self.directions,
            relax_factor: self.relax_factor,
            scale_step: self.scale_step,
            subsume_frac: self.subsume_frac,
        }
    }

    /// Matching tolerance in pixels for an image of the given size.
    pub fn eval_tolerance(&self, width: usize, height: usize) -> f64 {
        let diag = ((width * width + height * height) as f64).sqrt();
        self.eval_tol_frac * diag
    }

    pub fn validate(&self) -> Result<()> {
        self.cost_config().validate()?;
        if !(self.alpha_c > 0.0) {
            return Err(Error::InvalidParameter("alpha_c must be > 0".into()));
        }
        if self.l_max < 1 {
            return Err(Error::InvalidParameter("l_max must be >= 1".into()));
        }
        if !(self.relax_factor >= 1.0) {
            return Err(Error::InvalidParameter("relax_factor must be >= 1".into()));
        }
        if self.directions < 4 {
            return Err(Error::InvalidParameter("directions must be >= 4".into()));
        }
        if self.epsilon_r < 1 {
            return Err(Error::InvalidParameter("epsilon_r must be >= 1".into()));
        }
        if !(self.delta_r >= 0.0) {
            return Err(Error::InvalidParameter("delta_r must be >= 0".into()));
        }
        if !(0.0 < self.subsume_frac && self.subsume_frac <= 1.0) {
            return Err(Error::InvalidParameter("subsume_frac must be in (0,1]".into()));
        }
        if !(self.eval_tol_frac > 0.0) {
            return Err(Error::InvalidParameter("eval_tol_frac must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_parameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.alpha_c, 0.75);
        assert_eq!(cfg.l_max, 10);
        assert_eq!(cfg.alpha_end, 0.85);
        assert_eq!(cfg.w_s_color, 1e-4);
        assert_eq!(cfg.w_s_hist, 2e-8);
        assert_eq!((cfg.r_min, cfg.r_max), (2, 41));
        assert_eq!(cfg.resolution, Resolution::Half);
        assert_eq!(
            RunConfig::default()
                .with_resolution(Resolution::Full)
                .r_max,
            82
        );
        assert_eq!(cfg.eval_tol_frac, 0.01);
        assert_eq!(cfg.bins, 10);
        assert_eq!(cfg.tile_size, 6);
        assert_eq!(cfg.lambda, 2e-2);
        assert_eq!(cfg.kappa, 2.0);
        assert_eq!(cfg.beta_max, 1e5);
        assert_eq!(cfg.delta_r, 0.0);
        assert_eq!(cfg.epsilon_r, 1);
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = RunConfig::default();
        let text = cfg.to_text();
        let parsed = RunConfig::from_text(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_text(), text);

        let mut tweaked = cfg;
        tweaked.set("cost", "color").unwrap();
        tweaked.set("r_max", "82").unwrap();
        tweaked.set("subsume_frac", "0.9").unwrap();
        let text2 = tweaked.to_text();
        let parsed2 = RunConfig::from_text(&text2).unwrap();
        assert_eq!(parsed2.to_text(), text2);
        assert_eq!(parsed2.cost, CostKind::Color);
        assert_eq!(parsed2.r_max, 82);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(RunConfig::from_text("nonsense = 3\n").is_err());
        assert!(RunConfig::from_text("r_max = fast\n").is_err());
    }

    #[test]
    fn tolerance_is_a_diagonal_fraction() {
        let cfg = RunConfig::default();
        let tol = cfg.eval_tolerance(300, 400);
        assert!((tol - 5.0).abs() < 1e-12);
    }
}
