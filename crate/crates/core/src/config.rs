//! Run configuration: `key = value` lines, overridable from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classifier::{Norm, RiskKind, TrainingOptions};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::labels::Scheme;
use crate::match_data::FacingMode;
use crate::motion::{read_reach_table, MotionKind, MotionModel, TimeStepGrid, DEFAULT_A_MAX, DEFAULT_V_MAX};
use crate::synthetic::SynthConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: MotionKind,
    pub v_max: f64,
    pub a_max: f64,
    pub reach_table: Option<PathBuf>,
    pub tau_step: f64,
    pub tau_max: f64,
    pub n_sides: usize,
    pub facing: FacingMode,
    pub ball_speed: f64,
    pub risk: RiskKind,
    pub norm: Norm,
    pub lambda: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub folds: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub holdout_seed: u64,
    pub test_fraction: f64,
    pub max_iters: usize,
    pub step_size: f64,
    pub tolerance: f64,
    pub players_per_team: usize,
    pub duration_steps: u32,
    pub pass_rate: f64,
    pub noise: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let train = TrainingOptions::default();
        let feat = FeatureConfig::default();
        RunConfig {
            model: MotionKind::Ellipse,
            v_max: DEFAULT_V_MAX,
            a_max: DEFAULT_A_MAX,
            reach_table: None,
            tau_step: 0.1,
            tau_max: 10.0,
            n_sides: feat.n_sides,
            facing: feat.facing_mode,
            ball_speed: feat.ball_speed,
            risk: RiskKind::Mle,
            norm: Norm::L2,
            lambda: None,
            lambda_min: 1e-4,
            lambda_max: 1.0,
            lambda_count: 10,
            folds: 10,
            scheme: Scheme::Three,
            seed: synth.seed,
            holdout_seed: 42,
            test_fraction: 0.2,
            max_iters: train.max_iters,
            step_size: train.step_size,
            tolerance: train.tolerance,
            players_per_team: synth.players_per_team,
            duration_steps: synth.duration_steps,
            pass_rate: synth.pass_rate,
            noise: synth.noise_level,
        }
    }
}

pub const KEYS: [&str; 27] = [
    "model",
    "v_max",
    "a_max",
    "reach_table",
    "tau_step",
    "tau_max",
    "n_sides",
    "facing",
    "ball_speed",
    "risk",
    "norm",
    "lambda",
    "lambda_min",
    "lambda_max",
    "lambda_count",
    "folds",
    "scheme",
    "seed",
    "holdout_seed",
    "test_fraction",
    "max_iters",
    "step_size",
    "tolerance",
    "players_per_team",
    "duration_steps",
    "pass_rate",
    "noise",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_with<T>(key: &str, value: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
    f(value).map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn facing_name(f: FacingMode) -> &'static str {
    match f {
        FacingMode::FaceBall => "face_ball",
        FacingMode::MotionDirection => "motion",
    }
}

impl RunConfig {
    /// Sets one key; unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "model" => self.model = parse_with(key, v, str::parse)?,
            "v_max" => self.v_max = parse(key, v)?,
            "a_max" => self.a_max = parse(key, v)?,
            "reach_table" => self.reach_table = (!v.is_empty()).then(|| PathBuf::from(v)),
            "tau_step" => self.tau_step = parse(key, v)?,
            "tau_max" => self.tau_max = parse(key, v)?,
            "n_sides" => self.n_sides = parse(key, v)?,
            "facing" => {
                self.facing = match v.to_ascii_lowercase().as_str() {
                    "face_ball" | "ball" => FacingMode::FaceBall,
                    "motion" | "motion_direction" => FacingMode::MotionDirection,
                    other => return Err(Error::Config(format!("facing: unknown mode {other:?}"))),
                }
            }
            "ball_speed" => self.ball_speed = parse(key, v)?,
            "risk" => self.risk = parse_with(key, v, str::parse)?,
            "norm" => self.norm = parse_with(key, v, str::parse)?,
            "lambda" => {
                self.lambda = if v.is_empty() || v.eq_ignore_ascii_case("cv") {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "lambda_min" => self.lambda_min = parse(key, v)?,
            "lambda_max" => self.lambda_max = parse(key, v)?,
            "lambda_count" => self.lambda_count = parse(key, v)?,
            "folds" => self.folds = parse(key, v)?,
            "scheme" => self.scheme = parse_with(key, v, str::parse)?,
            "seed" => self.seed = parse(key, v)?,
            "holdout_seed" => self.holdout_seed = parse(key, v)?,
            "test_fraction" => self.test_fraction = parse(key, v)?,
            "max_iters" => self.max_iters = parse(key, v)?,
            "step_size" => self.step_size = parse(key, v)?,
            "tolerance" => self.tolerance = parse(key, v)?,
            "players_per_team" => self.players_per_team = parse(key, v)?,
            "duration_steps" => self.duration_steps = parse(key, v)?,
            "pass_rate" => self.pass_rate = parse(key, v)?,
            "noise" => self.noise = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.v_max > 0.0 && self.a_max > 0.0) {
            return bad(format!("v_max and a_max must be positive, got {} and {}", self.v_max, self.a_max));
        }
        TimeStepGrid::new(self.tau_step, self.tau_max).map_err(|e| Error::Config(strip_prefix(&e)))?;
        if self.n_sides < 3 {
            return bad(format!("n_sides must be at least 3, got {}", self.n_sides));
        }
        if !(self.ball_speed > 0.0) {
            return bad(format!("ball_speed must be positive, got {}", self.ball_speed));
        }
        if self.model == MotionKind::DataDriven && self.reach_table.is_none() {
            return bad("model data_driven needs reach_table".into());
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return bad(format!("lambda must be non-negative, got {l}"));
            }
        }
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min) || self.lambda_count == 0 {
            return bad("lambda grid needs 0 < lambda_min <= lambda_max and lambda_count >= 1".into());
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad(format!("test_fraction must be in [0, 1), got {}", self.test_fraction));
        }
        self.training_options().validate()?;
        self.synth().validate()
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        let model = match self.model {
            MotionKind::Circle => MotionModel::circle(self.v_max, self.a_max),
            MotionKind::Ellipse => MotionModel::ellipse(self.v_max, self.a_max),
            MotionKind::DataDriven => {
                let path = self
                    .reach_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("model data_driven needs reach_table".into()))?;
                MotionModel::data_driven(read_reach_table(path)?, self.v_max, self.a_max)
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn time_grid(&self) -> Result<TimeStepGrid> {
        TimeStepGrid::new(self.tau_step, self.tau_max)
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            n_sides: self.n_sides,
            facing_mode: self.facing,
            ball_speed: self.ball_speed,
        }
    }

    pub fn training_options(&self) -> TrainingOptions {
        TrainingOptions {
            max_iters: self.max_iters,
            step_size: self.step_size,
            tolerance: self.tolerance,
            seed: self.seed,
        }
    }

    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            players_per_team: self.players_per_team,
            duration_steps: self.duration_steps,
            pass_rate: self.pass_rate,
            noise_level: self.noise,
        }
    }

    /// Canonical `key = value` text; reading it back gives the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("model", self.model.to_string());
        put("v_max", self.v_max.to_string());
        put("a_max", self.a_max.to_string());
        put(
            "reach_table",
            self.reach_table.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        put("tau_step", self.tau_step.to_string());
        put("tau_max", self.tau_max.to_string());
        put("n_sides", self.n_sides.to_string());
        put("facing", facing_name(self.facing).to_string());
        put("ball_speed", self.ball_speed.to_string());
        put("risk", self.risk.to_string());
        put("norm", format!("l{}", self.norm.p()));
        put("lambda", self.lambda.map(|l| l.to_string()).unwrap_or_else(|| "cv".into()));
        put("lambda_min", self.lambda_min.to_string());
        put("lambda_max", self.lambda_max.to_string());
        put("lambda_count", self.lambda_count.to_string());
        put("folds", self.folds.to_string());
        put("scheme", self.scheme.as_str().to_string());
        put("seed", self.seed.to_string());
        put("holdout_seed", self.holdout_seed.to_string());
        put("test_fraction", self.test_fraction.to_string());
        put("max_iters", self.max_iters.to_string());
        put("step_size", self.step_size.to_string());
        put("tolerance", self.tolerance.to_string());
        put("players_per_team", self.players_per_team.to_string());
        put("duration_steps", self.duration_steps.to_string());
        put("pass_rate", self.pass_rate.to_string());
        put("noise", self.noise.to_string());
        s
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Precondition(m) => m.clone(),
        other => other.to_string(),
    }
}
