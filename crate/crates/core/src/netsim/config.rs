use std::fmt;

use thiserror::Error;

use crate::agents::AgentClass;
use crate::incentives::{PairScope, SettleParams};
use crate::rules::ScoreMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("fractions must lie in [0, 1] and sum to 1, got {0}, {1}, {2}")]
    Fractions(f64, f64, f64),
    #[error("delay_pod ({delay_pod}) must exceed delta_cap ({delta_cap})")]
    DelayOrder { delay_pod: u64, delta_cap: u64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
}

/// Parameters of one simulated game. Times are in slots.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_players: usize,
    pub slots: u64,
    pub f_byzantine: f64,
    pub f_altruistic: f64,
    pub f_rational: f64,
    pub k: usize,
    pub c: f64,
    pub pun: f64,
    pub bigpun: f64,
    pub delay_mean: f64,
    /// Δ: no message takes longer.
    pub delta_cap: u64,
    /// δ: slots without a leader before a redraw.
    pub delay_pod: u64,
    /// Finality window.
    pub w: u32,
    pub x_commit: u64,
    pub runs: usize,
    pub seed: u64,
    pub score_mode: ScoreMode,
    pub reward_floor: bool,
    pub pair_scope: PairScope,
    /// Rational coalition: rollout horizon, rollout count and the private
    /// block count that forces a release.
    pub horizon: u64,
    pub rollouts: usize,
    pub withhold_depth: usize,
    /// Byzantine coalition: how many heights an own branch end may trail the
    /// fork choice and still be extended. `None` extends every branch.
    pub byz_lag: Option<u32>,
    /// Byzantine coalition keeps blocks private while they lead.
    pub byz_withhold: bool,
    /// Prefix height watched for convergence.
    pub k0: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_players: 150,
            slots: 5000,
            f_byzantine: 0.0,
            f_altruistic: 1.0,
            f_rational: 0.0,
            k: 3,
            c: 1.0,
            pun: 6.0,
            bigpun: 10.0,
            delay_mean: 2.0,
            delta_cap: 10,
            delay_pod: 40,
            w: 6,
            x_commit: 10,
            runs: 10,
            seed: 1,
            score_mode: ScoreMode::Induced,
            reward_floor: true,
            pair_scope: PairScope::Broadcast,
            horizon: 10,
            rollouts: 32,
            withhold_depth: 4,
            byz_lag: None,
            byz_withhold: false,
            k0: 20,
        }
    }
}

const EPS: f64 = 1e-9;

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = [self.f_byzantine, self.f_altruistic, self.f_rational];
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-6
        {
            return Err(ConfigError::Fractions(f[0], f[1], f[2]));
        }
        if self.delay_pod <= self.delta_cap {
            return Err(ConfigError::DelayOrder {
                delay_pod: self.delay_pod,
                delta_cap: self.delta_cap,
            });
        }
        for (name, ok) in [
            ("n_players", self.n_players > 0),
            ("delta_cap", self.delta_cap > 0),
            ("delay_mean", self.delay_mean > 0.0),
            ("runs", self.runs > 0),
            ("rollouts", self.rollouts > 0),
            ("withhold_depth", self.withhold_depth > 0),
        ] {
            if !ok {
                return Err(ConfigError::NonPositive(name));
            }
        }
        Ok(())
    }

    pub fn n_byzantine(&self) -> usize {
        (self.f_byzantine * self.n_players as f64 + EPS).round() as usize
    }

    pub fn n_rational(&self) -> usize {
        (self.f_rational * self.n_players as f64 + EPS).round() as usize
    }

    pub fn n_altruistic(&self) -> usize {
        self.n_players - self.n_byzantine() - self.n_rational()
    }

    /// Class of each player: altruists first, then Byzantine, then rational.
    pub fn classes(&self) -> Vec<AgentClass> {
        let mut v = vec![AgentClass::Altruistic; self.n_altruistic()];
        v.extend(std::iter::repeat_n(
            AgentClass::Byzantine,
            self.n_byzantine(),
        ));
        v.extend(std::iter::repeat_n(AgentClass::Rational, self.n_rational()));
        v
    }

    /// Puts `size` players of `class` in the coalition, the rest altruistic.
    pub fn with_coalition(&self, class: AgentClass, size: usize) -> SimConfig {
        let f = size as f64 / self.n_players as f64;
        let mut c = self.clone();
        (c.f_byzantine, c.f_rational) = match class {
            AgentClass::Byzantine => (f, 0.0),
            AgentClass::Rational => (0.0, f),
            AgentClass::Altruistic => (0.0, 0.0),
        };
        c.f_altruistic = 1.0 - c.f_byzantine - c.f_rational;
        c
    }

    pub fn settle_params(&self) -> SettleParams {
        SettleParams {
            c: self.c,
            pun: self.pun,
            bigpun: self.bigpun,
            k: self.k,
            reward_floor: self.reward_floor,
            pair_scope: self.pair_scope,
            score_mode: self.score_mode,
        }
    }

    /// Every key with its effective value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_players", self.n_players.to_string()),
            ("slots", self.slots.to_string()),
            ("f_byzantine", format!("{:.6}", self.f_byzantine)),
            ("f_altruistic", format!("{:.6}", self.f_altruistic)),
            ("f_rational", format!("{:.6}", self.f_rational)),
            ("k", self.k.to_string()),
            ("c", format!("{:.6}", self.c)),
            ("pun", format!("{:.6}", self.pun)),
            ("bigpun", format!("{:.6}", self.bigpun)),
            ("delay_mean", format!("{:.6}", self.delay_mean)),
            ("delta_cap", self.delta_cap.to_string()),
            ("delay_pod", self.delay_pod.to_string()),
            ("w", self.w.to_string()),
            ("x_commit", self.x_commit.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
            (
                "score_mode",
                match self.score_mode {
                    ScoreMode::Induced => "induced".into(),
                    ScoreMode::Literal => "literal".into(),
                },
            ),
            ("reward_floor", self.reward_floor.to_string()),
            (
                "pair_scope",
                match self.pair_scope {
                    PairScope::Broadcast => "broadcast".into(),
                    PairScope::Bcpc => "bcpc".into(),
                },
            ),
            ("horizon", self.horizon.to_string()),
            ("rollouts", self.rollouts.to_string()),
            ("withhold_depth", self.withhold_depth.to_string()),
            (
                "byz_lag",
                self.byz_lag.map_or("none".into(), |l| l.to_string()),
            ),
            ("byz_withhold", self.byz_withhold.to_string()),
            ("k0", self.k0.to_string()),
        ]
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: v.to_string(),
            })
        }
        let v = value.trim();
        match key.trim() {
            "n_players" | "players" => self.n_players = num(key, v)?,
            "slots" => self.slots = num(key, v)?,
            "f_byzantine" => self.f_byzantine = num(key, v)?,
            "f_altruistic" => self.f_altruistic = num(key, v)?,
            "f_rational" => self.f_rational = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "c" => self.c = num(key, v)?,
            "pun" => self.pun = num(key, v)?,
            "bigpun" => self.bigpun = num(key, v)?,
            "delay_mean" => self.delay_mean = num(key, v)?,
            "delta_cap" => self.delta_cap = num(key, v)?,
            "delay_pod" => self.delay_pod = num(key, v)?,
            "w" => self.w = num(key, v)?,
            "x_commit" => self.x_commit = num(key, v)?,
            "runs" => self.runs = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "score_mode" => {
                self.score_mode = match v {
                    "induced" => ScoreMode::Induced,
                    "literal" => ScoreMode::Literal,
                    _ => return Err(bad(key, v)),
                }
            }
            "reward_floor" => self.reward_floor = num(key, v)?,
            "pair_scope" => {
                self.pair_scope = match v {
                    "broadcast" => PairScope::Broadcast,
                    "bcpc" => PairScope::Bcpc,
                    _ => return Err(bad(key, v)),
                }
            }
            "horizon" => self.horizon = num(key, v)?,
            "rollouts" => self.rollouts = num(key, v)?,
            "withhold_depth" => self.withhold_depth = num(key, v)?,
            "byz_lag" => {
                self.byz_lag = if v == "none" {
                    None
                } else {
                    Some(num(key, v)?)
                }
            }
            "byz_withhold" => self.byz_withhold = num(key, v)?,
            "k0" => self.k0 = num(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn parse_onto(mut self, text: &str) -> Result<SimConfig, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: i + 1,
                    msg: format!("expected key = value, got `{line}`"),
                });
            };
            self.set(k, v).map_err(|e| ConfigError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(self)
    }
}

fn bad(key: &str, v: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: v.to_string(),
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
