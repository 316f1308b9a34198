use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskSpec {
    /// Pays the per-step increase of the in-game score.
    Score { scale: Scale },
    /// Pays once, on first arrival at dungeon level `level`; ends the episode.
    Staircase { level: u32, scale: Scale },
    RewardFree,
}

/// Extrinsic multiplier stored as an exact fraction so `TaskSpec` stays `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    pub num: i64,
    pub den: i64,
}

impl Scale {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl TaskSpec {
    pub fn score() -> Self {
        TaskSpec::Score { scale: Scale { num: 1, den: 10 } }
    }

    pub fn staircase(level: u32) -> Self {
        TaskSpec::Staircase { level, scale: Scale { num: 10, den: 1 } }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, TaskSpec::Staircase { .. })
    }

    pub fn scale(self) -> f64 {
        match self {
            TaskSpec::Score { scale } | TaskSpec::Staircase { scale, .. } => scale.value(),
            TaskSpec::RewardFree => 0.0,
        }
    }

    pub fn scale_extrinsic(self, raw: f64) -> f64 {
        match self {
            TaskSpec::RewardFree => 0.0,
            _ => raw * self.scale(),
        }
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskSpec::Score { .. } => write!(f, "score"),
            TaskSpec::Staircase { level, .. } => write!(f, "staircase{level}"),
            TaskSpec::RewardFree => write!(f, "reward-free"),
        }
    }
}

impl FromStr for TaskSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "score" => Ok(TaskSpec::score()),
            "reward-free" | "rewardfree" | "none" => Ok(TaskSpec::RewardFree),
            _ => {
                let k = s
                    .strip_prefix("staircase")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|&k| k >= 2)
                    .ok_or_else(|| format!("unknown task {s:?} (expected score, staircaseK with K >= 2, reward-free)"))?;
                Ok(TaskSpec::staircase(k))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling() {
        assert_eq!(TaskSpec::staircase(3).scale_extrinsic(50.0), 500.0);
        assert!((TaskSpec::score().scale_extrinsic(3.0) - 0.3).abs() < 1e-15);
        assert_eq!(TaskSpec::RewardFree.scale_extrinsic(7.0), 0.0);
    }

    #[test]
    fn parse_round_trip() {
        for t in [TaskSpec::score(), TaskSpec::staircase(3), TaskSpec::staircase(4), TaskSpec::RewardFree] {
            assert_eq!(t.to_string().parse::<TaskSpec>().unwrap(), t);
        }
        assert!("staircase1".parse::<TaskSpec>().is_err());
        assert!("oracle".parse::<TaskSpec>().is_err());
    }
}
