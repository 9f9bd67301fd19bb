//! Flag/config merging and the small value grammars (grids, log ranges).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use incentive_core::games::GameSpec;
use serde::Serialize;
use serde_json::Value;

use crate::error::{usage, Result};

/// Keys accepted in a config file; each matches a long flag name.
const KNOWN_KEYS: &[&str] = &[
    "game", "b", "c", "r", "n", "N", "beta", "scheme", "theta", "omega", "sweep", "log10",
    "points", "x", "runs", "seed", "step-cap", "check", "only", "threads", "format",
];

/// Resolves each parameter from its flag, falling back to the config file,
/// and records the resolved value for the run manifest.
pub struct Resolver {
    table: toml::Table,
    resolved: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| usage(format!("bad config {}: {}", p.display(), e.message())))?
            }
        };
        if let Some(k) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown config key '{k}'")));
        }
        Ok(Resolver {
            table,
            resolved: BTreeMap::new(),
        })
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Serialize,
        T::Err: fmt::Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.table.get(key) {
                None => None,
                Some(raw) => {
                    let text = match raw {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    let v = text
                        .parse::<T>()
                        .map_err(|e| usage(format!("config key '{key}': {e}")))?;
                    Some(v)
                }
            },
        };
        if let Some(v) = &value {
            self.resolved
                .insert(key.to_string(), serde_json::to_value(v)?);
        }
        Ok(value)
    }

    pub fn req<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Serialize,
        T::Err: fmt::Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| usage(format!("missing required --{key}")))
    }

    pub fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Serialize,
        T::Err: fmt::Display,
    {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.resolved
                    .insert(key.to_string(), serde_json::to_value(&default)?);
                Ok(default)
            }
        }
    }

    pub fn flag(&mut self, key: &str, set: bool) -> Result<bool> {
        let on = set || self.opt::<bool>(key, None)?.unwrap_or(false);
        self.resolved.insert(key.to_string(), Value::Bool(on));
        Ok(on)
    }

    pub fn into_parameters(self) -> BTreeMap<String, Value> {
        self.resolved
    }
}

/// Game flags shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct GameArgs {
    /// dg (Donation Game) or pgg (Public Goods Game)
    #[arg(long)]
    pub game: Option<String>,
    /// DG benefit
    #[arg(long)]
    pub b: Option<f64>,
    /// Cost of cooperating
    #[arg(long)]
    pub c: Option<f64>,
    /// PGG multiplication factor
    #[arg(long)]
    pub r: Option<f64>,
    /// PGG group size
    #[arg(long = "n")]
    pub group: Option<usize>,
}

impl GameArgs {
    /// `None` when no game is given anywhere and `required` is false.
    pub fn resolve(&self, res: &mut Resolver, required: bool) -> Result<Option<GameSpec>> {
        let kind = if required {
            Some(res.req("game", self.game.clone())?)
        } else {
            res.opt("game", self.game.clone())?
        };
        let Some(kind) = kind else { return Ok(None) };
        let game = match kind.to_ascii_lowercase().as_str() {
            "dg" | "donation" => {
                let b = res.req("b", self.b)?;
                let c = res.req("c", self.c)?;
                GameSpec::donation(b, c)?
            }
            "pgg" | "public-goods" => {
                let r = res.req("r", self.r)?;
                let n = res.req("n", self.group)?;
                let c = res.req("c", self.c)?;
                GameSpec::public_goods(r, n, c)?
            }
            other => {
                return Err(usage(format!(
                    "unknown game '{other}' (expected dg or pgg)"
                )))
            }
        };
        Ok(Some(game))
    }
}

/// `start:stop:step` (inclusive), or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.step == 0.0 {
            return vec![self.start];
        }
        // Tolerate the float error in (stop − start)/step landing just below an integer.
        let count =
            ((self.stop - self.start) / self.step * (1.0 + 1e-12) + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }

    pub fn single(&self) -> Option<f64> {
        (self.step == 0.0).then_some(self.start)
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        };
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(Grid {
                    start: v,
                    stop: v,
                    step: 0.0,
                })
            }
            [a, b, h] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(h)?);
                if step <= 0.0 {
                    return Err(format!("grid step must be > 0, got {step}"));
                }
                if stop < start {
                    return Err(format!("empty grid {s}: stop < start"));
                }
                Ok(Grid { start, stop, step })
            }
            _ => Err(format!("expected start:stop:step or a number, got '{s}'")),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.single() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}:{}:{}", self.start, self.stop, self.step),
        }
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.single() {
            Some(v) => s.serialize_f64(v),
            None => s.collect_str(self),
        }
    }
}

/// `a:b`, exponents of a base-10 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Log10Range {
    pub lo: f64,
    pub hi: f64,
}

impl Log10Range {
    /// `points` log-spaced values; by default ten per decade.
    pub fn points(&self, points: Option<usize>) -> Vec<f64> {
        let count = points
            .unwrap_or(((self.hi - self.lo) * 10.0).round() as usize + 1)
            .max(2);
        (0..count)
            .map(|k| 10f64.powf(self.lo + (self.hi - self.lo) * k as f64 / (count - 1) as f64))
            .collect()
    }
}

impl FromStr for Log10Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected a:b, got '{s}'"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
        };
        let (lo, hi) = (parse(a)?, parse(b)?);
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("empty range {s}"));
        }
        Ok(Log10Range { lo, hi })
    }
}

impl fmt::Display for Log10Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl Serialize for Log10Range {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!("0:5:0.01".parse::<Grid>().unwrap().points().len(), 501);
        assert_eq!("0.1:5:0.1".parse::<Grid>().unwrap().points().len(), 50);
        assert_eq!(
            "-1:1:0.5".parse::<Grid>().unwrap().points(),
            vec![-1.0, -0.5, 0.0, 0.5, 1.0]
        );
        assert_eq!("2.5".parse::<Grid>().unwrap().points(), vec![2.5]);
        let pts = "0:5:0.01".parse::<Grid>().unwrap().points();
        assert_eq!(pts[200], 2.0);
    }

    #[test]
    fn grid_rejects_empty() {
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1:-0.1".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert!("x".parse::<Grid>().is_err());
    }

    #[test]
    fn log_range() {
        let r: Log10Range = "-6:3".parse().unwrap();
        let pts = r.points(None);
        assert_eq!(pts.len(), 91);
        assert!((pts[0] - 1e-6).abs() < 1e-20);
        assert!((pts[90] - 1e3).abs() < 1e-9);
        assert!("3:-6".parse::<Log10Range>().is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "beta = 2\nN = 5\nscheme = \"reward\"\n").unwrap();
        let mut res = Resolver::load(Some(&path)).unwrap();
        assert_eq!(res.req::<f64>("beta", Some(3.0)).unwrap(), 3.0);
        assert_eq!(res.req::<usize>("N", None).unwrap(), 5);
        assert!(res.req::<f64>("omega", None).is_err());
        let params = res.into_parameters();
        assert_eq!(params["beta"], serde_json::json!(3.0));
        assert_eq!(params["N"], serde_json::json!(5));
    }

    #[test]
    fn unknown_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "bta = 2\n").unwrap();
        assert!(Resolver::load(Some(&path)).is_err());
    }
}
