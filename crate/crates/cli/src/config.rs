//! Resolution of run settings: subcommand defaults, then the key=value config
//! file, then explicit flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use multidomain::dag::ScoreParams;
use multidomain::{Error, SamplerConfig, Variant};

use crate::{CliResult, Common, Failure, ScoreArgs};

/// Keys accepted in config files.
const KNOWN_KEYS: &[&str] = &[
    "L", "delta-h", "p-mx", "kstar", "iters", "burnin", "variant", "seed", "reps", "threshold",
    "folds", "by-condition", "m", "A", "sigma", "alpha", "beta", "cap", "network", "datasets",
    "rows", "fraction", "concentration", "variants", "prior-count",
];

/// Resolved key=value settings, flags layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    values: BTreeMap<String, String>,
}

impl Overrides {
    pub fn parse_file(text: &str, origin: &str) -> multidomain::Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(parse_err(format!("unknown key {k:?}")));
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Self { values })
    }

    /// Config file (if any) overlaid with the common flags.
    pub fn from_common(c: &Common) -> CliResult<Self> {
        let mut o = match &c.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(Error::from)?;
                Self::parse_file(&text, &path.display().to_string())?
            }
            None => Self::default(),
        };
        o.set("L", c.levels);
        o.set("delta-h", c.delta_h);
        o.set("p-mx", c.p_mx);
        o.set("kstar", c.kstar);
        o.set("iters", c.iters);
        o.set("burnin", c.burnin);
        o.set("variant", c.variant.clone());
        o.set("seed", c.seed);
        o.set("reps", c.reps);
        o.set("threshold", c.threshold.clone());
        o.set("folds", c.folds);
        if c.by_condition {
            o.values.insert("by-condition".into(), "true".into());
        }
        Ok(o)
    }

    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Flag(format!("cannot parse --{key} value {v:?}"))),
        }
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        self.or(key, false)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> CliResult<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Failure::Flag(format!("cannot parse --{key} entry {s:?}")))
                })
                .collect(),
        }
    }

    pub fn add_score_args(&mut self, s: &ScoreArgs) {
        self.set("alpha", s.alpha);
        self.set("beta", s.beta);
        self.set("cap", s.cap);
    }

    /// Sampler settings over `base`; validated.
    pub fn sampler(&self, base: SamplerConfig) -> CliResult<SamplerConfig> {
        let mut cfg = base;
        cfg.levels = self.or("L", cfg.levels)?;
        cfg.delta_h = self.or("delta-h", cfg.delta_h)?;
        cfg.p_mx = self.or("p-mx", cfg.p_mx)?;
        cfg.max_modes = self.or("kstar", cfg.max_modes)?;
        cfg.total_iters = self.or("iters", cfg.total_iters)?;
        cfg.seed = self.or("seed", cfg.seed)?;
        cfg.sigma = self.or("sigma", cfg.sigma)?;
        cfg.prior_count = self.or("prior-count", cfg.prior_count)?;
        if let Some(v) = self.get("variant") {
            cfg.variant = Variant::from_str(v)?;
        }
        cfg.burn_in = match self.parsed("burnin")? {
            Some(b) => b,
            None => cfg.burn_in.min(cfg.total_iters / 10),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn score_params(&self) -> CliResult<ScoreParams> {
        let d = ScoreParams::default();
        let p = ScoreParams {
            alpha: self.or("alpha", d.alpha)?,
            beta: self.or("beta", d.beta)?,
            cap: self.or("cap", d.cap)?,
        };
        if !(p.alpha > 0.0 && p.beta > 0.0) {
            return Err(Failure::Flag("alpha and beta must be positive".into()));
        }
        Ok(p)
    }

    pub fn thresholds(&self, default: Vec<f64>) -> CliResult<Vec<f64>> {
        let cs = self.list("threshold", default)?;
        if cs.is_empty() || cs.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Failure::Flag("thresholds must lie in [0, 1]".into()));
        }
        Ok(cs)
    }

    pub fn reps(&self, default: u64) -> CliResult<u64> {
        let r = self.or("reps", default)?;
        if r == 0 {
            return Err(Failure::Flag("--reps must be at least 1".into()));
        }
        Ok(r)
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Run(Error::Data(format!(
            "{} does not exist",
            path.display()
        ))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_yield_to_flags() {
        let mut o = Overrides::parse_file("# comment\nL = 7\ndelta-h=3\n", "cfg").unwrap();
        o.set("L", Some(9));
        let cfg = o.sampler(SamplerConfig::default()).unwrap();
        assert_eq!(cfg.levels, 9);
        assert_eq!(cfg.delta_h, 3.0);
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_rejected() {
        assert!(Overrides::parse_file("bogus = 1", "cfg").is_err());
        assert!(matches!(
            Overrides::parse_file("\nL 5", "cfg"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn bad_values_are_flag_errors() {
        let mut o = Overrides::default();
        o.set("p-mx", Some(1.5));
        assert!(matches!(
            o.sampler(SamplerConfig::default()),
            Err(Failure::Flag(_))
        ));
        let mut o = Overrides::default();
        o.set("iters", Some("many"));
        assert!(matches!(
            o.sampler(SamplerConfig::default()),
            Err(Failure::Flag(_))
        ));
    }

    #[test]
    fn burn_in_defaults_to_a_tenth_of_short_runs() {
        let mut o = Overrides::default();
        o.set("iters", Some(1000));
        let cfg = o.sampler(SamplerConfig::default()).unwrap();
        assert_eq!(cfg.burn_in, 100);
    }

    #[test]
    fn threshold_lists() {
        let mut o = Overrides::default();
        assert_eq!(o.thresholds(vec![0.5]).unwrap(), vec![0.5]);
        o.set("threshold", Some("0.5,0.9"));
        assert_eq!(o.thresholds(vec![]).unwrap(), vec![0.5, 0.9]);
        o.set("threshold", Some("1.5"));
        assert!(o.thresholds(vec![]).is_err());
    }
}
