//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! n = 1000
//! p = 10
//! l = 6
//! design = t1            # mn | t3 | t1
//! sigma2 = 9
//! replicates = 200
//! taus = 150,300,600
//! methods = unif,lev,slev,opt
//! alpha = 0.9
//! seed = 42              # required
//! smls = off             # off | same_tau | l_times_tau | both
//! mode = unconditional   # conditional | unconditional
//! plan = iid             # iid | all_rows (tau must equal n)
//! redraw_design = false
//! timing = false
//! threads = 0            # 0: rayon default
//! ```

use std::collections::HashSet;
use std::path::Path;

use super::data::DesignKind;
use crate::error::{Result, TlsError};
use crate::sampling::DistributionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One response for all replicates; randomness from sampling only.
    Conditional,
    /// Fresh noise for every replicate.
    Unconditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmlsMode {
    Off,
    SameTau,
    LTimesTau,
    Both,
}

impl SmlsMode {
    pub fn same_tau(&self) -> bool {
        matches!(self, SmlsMode::SameTau | SmlsMode::Both)
    }

    pub fn l_times_tau(&self) -> bool {
        matches!(self, SmlsMode::LTimesTau | SmlsMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// `tau` i.i.d. draws with replacement.
    Iid,
    /// Every row exactly once; requires `tau = n`.
    AllRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub l: usize,
    pub design: DesignKind,
    pub sigma2: f64,
    pub replicates: usize,
    pub taus: Vec<usize>,
    pub methods: Vec<DistributionKind>,
    pub alpha: f64,
    pub seed: u64,
    pub smls: SmlsMode,
    pub mode: Mode,
    pub plan: PlanMode,
    pub redraw_design: bool,
    /// Report mean wall-time; otherwise `mean_ms` is NaN so reports are
    /// byte-reproducible.
    pub timing: bool,
    pub threads: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults with the given seed.
    pub fn new(seed: u64) -> Self {
        Self {
            n: 1000,
            p: 10,
            l: 6,
            design: DesignKind::Mn,
            sigma2: 9.0,
            replicates: 200,
            taus: vec![150, 300, 600],
            methods: vec![
                DistributionKind::Unif,
                DistributionKind::Lev,
                DistributionKind::Slev { alpha: 0.9 },
                DistributionKind::Opt,
            ],
            alpha: 0.9,
            seed,
            smls: SmlsMode::Off,
            mode: Mode::Unconditional,
            plan: PlanMode::Iid,
            redraw_design: false,
            timing: false,
            threads: 0,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut seed = None;
        let mut cfg = Self::new(0);
        let mut methods: Option<Vec<String>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| TlsError::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(format!("duplicate key '{key}'")));
            }
            let num = |v: &str| v.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
            let real = |v: &str| v.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
            let flag = |v: &str| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(bad(format!("{key}: expected true or false, got '{v}'"))),
            };
            match key {
                "n" => cfg.n = num(value)?,
                "p" => cfg.p = num(value)?,
                "l" => cfg.l = num(value)?,
                "design" => cfg.design = DesignKind::parse(value).map_err(|e| bad(e.to_string()))?,
                "sigma2" => cfg.sigma2 = real(value)?,
                "replicates" => cfg.replicates = num(value)?,
                "taus" => {
                    cfg.taus = split_list(value).map(num).collect::<Result<_>>()?;
                }
                "methods" => methods = Some(split_list(value).map(str::to_string).collect()),
                "alpha" => cfg.alpha = real(value)?,
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(format!("seed: {e}")))?),
                "smls" => {
                    cfg.smls = match value {
                        "off" => SmlsMode::Off,
                        "same_tau" => SmlsMode::SameTau,
                        "l_times_tau" => SmlsMode::LTimesTau,
                        "both" => SmlsMode::Both,
                        v => return Err(bad(format!("smls: unknown mode '{v}'"))),
                    }
                }
                "mode" => {
                    cfg.mode = match value {
                        "conditional" => Mode::Conditional,
                        "unconditional" => Mode::Unconditional,
                        v => return Err(bad(format!("mode: unknown mode '{v}'"))),
                    }
                }
                "plan" => {
                    cfg.plan = match value {
                        "iid" => PlanMode::Iid,
                        "all_rows" => PlanMode::AllRows,
                        v => return Err(bad(format!("plan: unknown mode '{v}'"))),
                    }
                }
                "redraw_design" => cfg.redraw_design = flag(value)?,
                "timing" => cfg.timing = flag(value)?,
                "threads" => cfg.threads = num(value)?,
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        cfg.seed = seed.ok_or_else(|| TlsError::Config("missing required key 'seed'".into()))?;
        if let Some(names) = methods {
            cfg.methods = names
                .iter()
                .map(|m| DistributionKind::parse(m, cfg.alpha).map_err(|e| TlsError::Config(e.to_string())))
                .collect::<Result<_>>()?;
        } else {
            cfg.set_alpha(cfg.alpha);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TlsError::io(path, e))?;
        Self::parse(&text)
    }

    /// Updates `alpha` and every `Slev` method with it.
    pub fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha;
        for m in self.methods.iter_mut() {
            if let DistributionKind::Slev { alpha: a } = m {
                *a = alpha;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(TlsError::Config(msg));
        if self.p < 4 {
            return fail(format!("p must be at least 4, got {}", self.p));
        }
        if self.n < self.p || self.l == 0 {
            return fail(format!("need n >= p and l >= 1, got {}x{}x{}", self.n, self.p, self.l));
        }
        if self.replicates < 2 {
            return fail(format!("replicates must be at least 2, got {}", self.replicates));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return fail(format!("sigma2 must be >= 0, got {}", self.sigma2));
        }
        for &tau in &self.taus {
            if tau < self.p {
                return fail(format!("tau = {tau} is below p = {}", self.p));
            }
            if self.plan == PlanMode::AllRows && tau != self.n {
                return fail(format!("plan = all_rows needs tau = n = {}, got {tau}", self.n));
            }
        }
        if self.redraw_design && self.mode == Mode::Conditional {
            return fail("redraw_design needs mode = unconditional".into());
        }
        let mut names = HashSet::new();
        for m in &self.methods {
            if !names.insert(m.name()) {
                return fail(format!("method '{m}' listed twice"));
            }
        }
        if self.smls != SmlsMode::Off {
            if self.plan == PlanMode::AllRows {
                return fail("the matrix baseline needs plan = iid".into());
            }
            if self.methods.iter().any(|m| !matches!(m, DistributionKind::Unif | DistributionKind::Lev)) {
                return fail("the matrix baseline supports methods unif and lev only".into());
            }
            let entries = (self.n * self.l).saturating_mul(self.p * self.l);
            if entries > crate::bcirc::BCIRC_MAX_ENTRIES {
                return fail(format!("the matrix baseline would need {entries} entries, above the 4e6 guard"));
            }
        }
        Ok(())
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
