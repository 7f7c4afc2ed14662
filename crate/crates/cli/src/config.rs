//! Experiment configuration: a flat key/value file, every key overridable
//! from the command line (flags win over the file, `--set` pairs win over
//! the file, named flags win over `--set`).

use std::path::{Path, PathBuf};

use papr_core::baselines::{binary_phases, quadrant_phases, PtsConfig, SlmConfig};
use papr_core::channel::{ChannelConfig, ChannelKind};
use papr_core::nn::{Optimizer, TrainConfig};
use papr_core::sat::{AveragingFilter, Boundary, SatConfig};
use papr_core::wavelet::{ThresholdRule, WaveletFamily};
use papr_core::{OfdmConfig, Technique};

/// Everything a subcommand needs, with documented defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    // Link
    pub n_subcarriers: usize,
    pub guard_fraction: f64,
    pub modulation_order: u32,
    pub oversample: usize,
    // Run
    pub trials: Option<usize>,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub techniques: Vec<Technique>,
    // Peak averaging
    pub k: f64,
    pub filter: AveragingFilter,
    pub boundary: Boundary,
    pub max_passes: usize,
    // Baselines
    pub clip_db: f64,
    pub slm_u: usize,
    pub slm_seed: u64,
    pub pts_v: usize,
    pub pts_phases: PhaseAlphabet,
    // Channel
    pub channel: ChannelKind,
    pub tap_powers: Option<Vec<f64>>,
    pub snr_grid_db: Vec<f64>,
    // CCDF grid
    pub ccdf_min_db: f64,
    pub ccdf_max_db: f64,
    pub ccdf_step_db: f64,
    // Denoising evaluation
    pub families: Vec<WaveletFamily>,
    pub levels: Vec<usize>,
    pub rule: ThresholdRule,
    pub input_snrs_db: Vec<f64>,
    pub denoise_oversample: usize,
    // Reducer training
    pub nn_hidden: usize,
    pub learning_rate: f64,
    pub goal_mse: f64,
    pub max_epochs: usize,
    pub optimizer: Optimizer,
    pub model: PathBuf,
    // Accepted for config compatibility; anything but "none" is rejected.
    pub mimo: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseAlphabet {
    Binary,
    Quadrant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 512,
            guard_fraction: 0.25,
            modulation_order: 64,
            oversample: 1,
            trials: None,
            seed: 1,
            threads: 1,
            out: None,
            techniques: vec![
                Technique::None,
                Technique::Sat,
                Technique::Clip,
                Technique::Slm,
                Technique::Pts,
            ],
            k: 2.5,
            filter: AveragingFilter::Simple,
            boundary: Boundary::Cyclic,
            max_passes: 1,
            clip_db: 3.0,
            slm_u: 16,
            slm_seed: 1,
            pts_v: 4,
            pts_phases: PhaseAlphabet::Quadrant,
            channel: ChannelKind::Awgn,
            tap_powers: None,
            snr_grid_db: (0..=28).step_by(4).map(|v| v as f64).collect(),
            ccdf_min_db: 2.0,
            ccdf_max_db: 14.0,
            ccdf_step_db: 0.25,
            families: vec![WaveletFamily::Haar, WaveletFamily::Db4],
            levels: vec![1, 2, 3],
            rule: ThresholdRule::Soft,
            input_snrs_db: vec![5.0, 10.0, 20.0],
            denoise_oversample: 4,
            nn_hidden: 30,
            learning_rate: 0.1,
            goal_mse: 1e-3,
            max_epochs: 25_000,
            optimizer: Optimizer::PowellBealeCg,
            model: PathBuf::from("model.mlp"),
            mimo: "none".to_string(),
        }
    }
}

fn parse_list<T, F>(value: &str, what: &str, parse_one: F) -> Result<Vec<T>, String>
where
    F: Fn(&str) -> Result<T, String>,
{
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(format!("{what} list is empty"));
    }
    items.into_iter().map(parse_one).collect()
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| format!("key '{key}': cannot parse '{value}': {e}"))
}

/// Parse a dB value; the literal `inf` is the noiseless sentinel.
fn parse_db(value: &str, key: &str) -> Result<f64, String> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    parse_num::<f64>(v, key)
}

impl ExperimentConfig {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "n_subcarriers" => self.n_subcarriers = parse_num(v, key)?,
            "guard_fraction" => self.guard_fraction = parse_num(v, key)?,
            "modulation_order" => self.modulation_order = parse_num(v, key)?,
            "oversample" => self.oversample = parse_num(v, key)?,
            "trials" => self.trials = Some(parse_num(v, key)?),
            "seed" => self.seed = parse_num(v, key)?,
            "threads" => self.threads = parse_num(v, key)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "techniques" => {
                self.techniques = parse_list(v, "techniques", |s| s.parse::<Technique>())?
            }
            "k" => self.k = parse_num(v, key)?,
            "filter" => {
                self.filter = match v {
                    "simple" => AveragingFilter::Simple,
                    "exponential" => AveragingFilter::Exponential,
                    "weighted" => AveragingFilter::Weighted,
                    other => return Err(format!("unknown filter '{other}'")),
                }
            }
            "boundary" => {
                self.boundary = match v {
                    "cyclic" => Boundary::Cyclic,
                    "clamp" => Boundary::Clamp,
                    other => return Err(format!("unknown boundary '{other}'")),
                }
            }
            "max_passes" => self.max_passes = parse_num(v, key)?,
            "clip_db" => self.clip_db = parse_db(v, key)?,
            "slm_u" => self.slm_u = parse_num(v, key)?,
            "slm_seed" => self.slm_seed = parse_num(v, key)?,
            "pts_v" => self.pts_v = parse_num(v, key)?,
            "pts_phases" => {
                self.pts_phases = match v {
                    "binary" => PhaseAlphabet::Binary,
                    "quadrant" => PhaseAlphabet::Quadrant,
                    other => return Err(format!("unknown phase alphabet '{other}'")),
                }
            }
            "channel" => {
                self.channel = match v {
                    "awgn" => ChannelKind::Awgn,
                    "rayleigh" => ChannelKind::RayleighMultipath,
                    other => return Err(format!("unknown channel '{other}'")),
                }
            }
            "tap_powers" => {
                self.tap_powers = Some(parse_list(v, "tap_powers", |s| parse_num(s, key))?)
            }
            "snr_grid" => self.snr_grid_db = parse_list(v, "snr_grid", |s| parse_db(s, key))?,
            "ccdf_min_db" => self.ccdf_min_db = parse_num(v, key)?,
            "ccdf_max_db" => self.ccdf_max_db = parse_num(v, key)?,
            "ccdf_step_db" => self.ccdf_step_db = parse_num(v, key)?,
            "families" => {
                self.families = parse_list(v, "families", |s| match s {
                    "haar" => Ok(WaveletFamily::Haar),
                    "db4" => Ok(WaveletFamily::Db4),
                    other => Err(format!("unknown wavelet family '{other}'")),
                })?
            }
            "levels" => self.levels = parse_list(v, "levels", |s| parse_num(s, key))?,
            "rule" => {
                self.rule = match v {
                    "soft" => ThresholdRule::Soft,
                    "hard" => ThresholdRule::Hard,
                    other => return Err(format!("unknown thresholding rule '{other}'")),
                }
            }
            "input_snrs" => {
                self.input_snrs_db = parse_list(v, "input_snrs", |s| parse_db(s, key))?
            }
            "denoise_oversample" => self.denoise_oversample = parse_num(v, key)?,
            "nn_hidden" => self.nn_hidden = parse_num(v, key)?,
            "lr" => self.learning_rate = parse_num(v, key)?,
            "goal_mse" => {
                self.goal_mse = if v.eq_ignore_ascii_case("inf") {
                    f64::INFINITY
                } else {
                    parse_num(v, key)?
                }
            }
            "max_epochs" => self.max_epochs = parse_num(v, key)?,
            "optimizer" => {
                self.optimizer = match v {
                    "powell_beale_cg" => Optimizer::PowellBealeCg,
                    "gradient_descent" => Optimizer::GradientDescent,
                    other => return Err(format!("unknown optimizer '{other}'")),
                }
            }
            "model" => self.model = PathBuf::from(v),
            "mimo" => self.mimo = v.to_string(),
            other => return Err(format!("unknown configuration key '{other}'")),
        }
        Ok(())
    }

    /// Load assignments from a plain-text file: one `key = value` per line,
    /// `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config '{}': {e}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            self.apply(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    /// Cross-field validation shared by every subcommand.
    pub fn validate(&self) -> Result<(), String> {
        if self.mimo != "none" {
            return Err(format!(
                "mimo = '{}' is not implemented: this artifact simulates the single-antenna \
                 link only; set mimo = none",
                self.mimo
            ));
        }
        if let Some(trials) = self.trials {
            if trials == 0 {
                return Err("trials must be >= 1".into());
            }
        }
        if self.threads == 0 {
            return Err("threads must be >= 1".into());
        }
        if !self.ccdf_step_db.is_finite()
            || self.ccdf_step_db <= 0.0
            || self.ccdf_max_db <= self.ccdf_min_db
        {
            return Err("CCDF threshold grid must be increasing with a positive step".into());
        }
        if self.techniques.is_empty() {
            return Err("at least one technique is required".into());
        }
        self.ofdm().validated().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn ofdm(&self) -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: self.n_subcarriers,
            guard_fraction: self.guard_fraction,
            modulation_order: self.modulation_order,
            oversample: self.oversample,
        }
    }

    pub fn sat(&self) -> SatConfig {
        SatConfig {
            k: self.k,
            filter: self.filter,
            boundary: self.boundary,
            max_passes: self.max_passes,
        }
    }

    pub fn slm(&self) -> SlmConfig {
        SlmConfig {
            u: self.slm_u,
            seed: self.slm_seed,
        }
    }

    pub fn pts(&self) -> PtsConfig {
        PtsConfig {
            v: self.pts_v,
            phase_set: match self.pts_phases {
                PhaseAlphabet::Binary => binary_phases(),
                PhaseAlphabet::Quadrant => quadrant_phases(),
            },
        }
    }

    pub fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            kind: self.channel,
            snr_db: *self.snr_grid_db.first().unwrap_or(&f64::INFINITY),
            tap_powers: match (&self.tap_powers, self.channel) {
                (Some(p), _) => p.clone(),
                (None, ChannelKind::Awgn) => vec![1.0],
                (None, ChannelKind::RayleighMultipath) => {
                    ChannelConfig::default_multipath_profile()
                }
            },
            seed: self.seed,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            goal_mse: self.goal_mse,
            max_epochs: self.max_epochs,
            optimizer: self.optimizer,
        }
    }

    pub fn ccdf_thresholds(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut x = self.ccdf_min_db;
        while x <= self.ccdf_max_db + 1e-9 {
            grid.push(x);
            x += self.ccdf_step_db;
        }
        grid
    }
}
