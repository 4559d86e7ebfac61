use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which weighting scheme drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Basin x level weights with mixed jumps.
    Md,
    /// Basin x level weights, local moves only.
    Md0,
    /// Level-only weights (rows kept identical), local moves only.
    Wl,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" => Ok(Variant::Md),
            "md0" => Ok(Variant::Md0),
            "wl" => Ok(Variant::Wl),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Md => "md",
            Variant::Md0 => "md0",
            Variant::Wl => "wl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of density levels `L`.
    pub levels: usize,
    /// Ladder spacing.
    pub delta_h: f64,
    /// Probability of proposing a mixed jump.
    pub p_mx: f64,
    /// Maximum number of recorded modes `K*`.
    pub max_modes: usize,
    pub burn_in: u64,
    /// Total iterations including burn-in.
    pub total_iters: u64,
    pub seed: u64,
    pub variant: Variant,
    /// Local proposal scale (continuous targets).
    pub sigma: f64,
    /// Mixed-jump prior count (DAG targets).
    pub prior_count: f64,
    /// Mode-match distance (continuous targets).
    pub mode_tol: f64,
    pub rho: f64,
    pub eta: f64,
    pub eps_gamma: f64,
    /// Step size at the start of the main phase.
    pub gamma_1: f64,
    /// Scale the local proposal by the current basin's statistic.
    pub adaptive_local: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            levels: 10,
            delta_h: 2.0,
            p_mx: 0.1,
            max_modes: 100,
            burn_in: 50_000,
            total_iters: 5_000_000,
            seed: 1,
            variant: Variant::Md,
            sigma: 1.0,
            prior_count: 0.5,
            mode_tol: 1e-3,
            rho: 0.5,
            eta: 0.25,
            eps_gamma: 1e-4,
            gamma_1: 1.0,
            adaptive_local: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.levels < 2 {
            return bad("levels must be at least 2");
        }
        if !(self.delta_h > 0.0 && self.delta_h.is_finite()) {
            return bad("delta-h must be positive");
        }
        if !(0.0..1.0).contains(&self.p_mx) {
            return bad("p-mx must lie in [0, 1)");
        }
        if self.max_modes == 0 {
            return bad("kstar must be at least 1");
        }
        if self.burn_in > self.total_iters {
            return bad("burn-in exceeds total iterations");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.prior_count > 0.0) {
            return bad("prior count must be positive");
        }
        if !(self.mode_tol > 0.0) {
            return bad("mode tolerance must be positive");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.eta > 0.0) || !(self.eps_gamma > 0.0) {
            return bad("eta and eps-gamma must be positive");
        }
        if !(self.gamma_1 > 0.0 && self.gamma_1 <= 1.0) {
            return bad("gamma_1 must lie in (0, 1]");
        }
        Ok(())
    }

    /// Mixed-jump probability actually used: only the MD variant proposes
    /// mixed jumps.
    pub fn effective_p_mx(&self) -> f64 {
        match self.variant {
            Variant::Md => self.p_mx,
            Variant::Md0 | Variant::Wl => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SamplerConfig::default().validate().unwrap();
    }

    #[test]
    fn out_of_range_fields_are_rejected() {
        let d = SamplerConfig::default();
        let bad = [
            SamplerConfig { levels: 1, ..d.clone() },
            SamplerConfig { delta_h: 0.0, ..d.clone() },
            SamplerConfig { p_mx: 1.0, ..d.clone() },
            SamplerConfig { max_modes: 0, ..d.clone() },
            SamplerConfig { burn_in: 10, total_iters: 5, ..d.clone() },
            SamplerConfig { sigma: -1.0, ..d.clone() },
            SamplerConfig { rho: 1.0, ..d.clone() },
            SamplerConfig { eta: 0.0, ..d.clone() },
            SamplerConfig { gamma_1: 1.5, ..d.clone() },
            SamplerConfig { prior_count: f64::NAN, ..d.clone() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn variants_parse_and_print() {
        for v in [Variant::Md, Variant::Md0, Variant::Wl] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("WL".parse::<Variant>().unwrap(), Variant::Wl);
        assert!("mdx".parse::<Variant>().is_err());
    }

    #[test]
    fn only_md_uses_mixed_jumps() {
        let mut c = SamplerConfig::default();
        assert_eq!(c.effective_p_mx(), 0.1);
        c.variant = Variant::Md0;
        assert_eq!(c.effective_p_mx(), 0.0);
        c.variant = Variant::Wl;
        assert_eq!(c.effective_p_mx(), 0.0);
    }
}
