//! Plateau-driven control of the solver iteration budget.
//!
//! The validation history is smoothed with an exponential moving average.
//! While it still improves the budget is held; once it flattens the budget
//! is raised by `ΔK`, unless the improvement since the previous plateau was
//! too small, in which case refinement stops for good.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub tau_step: f64,
    pub tau_stop: f64,
    /// Lookback `δ` in validation intervals.
    pub delta: usize,
    /// EMA window `Δe`.
    pub ema_window: usize,
    pub k0: usize,
    pub delta_k: usize,
    pub k_cap: usize,
    /// Also hold for `δ` intervals after each refinement, so the lookback
    /// never straddles a change of `K`.
    pub grace_after_refine: bool,
    /// Value of the checkpoint before the first refinement.
    pub checkpoint_seed: CheckpointSeed,
    /// Latch a stop decision for the rest of the run. When false a stop only
    /// declines refinement for that interval.
    pub stop_is_final: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CheckpointSeed {
    /// The first smoothed value, so a plateau at initial quality stops.
    #[default]
    FirstValue,
    /// Infinity, so the first plateau always refines.
    Unbounded,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { tau_step: 0.95, tau_stop: 0.9, delta: 3, ema_window: 6, k0: 1, delta_k: 1, k_cap: 100, grace_after_refine: false, checkpoint_seed: CheckpointSeed::FirstValue, stop_is_final: true }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.tau_step > 0.0 && self.tau_step <= 1.0) {
            return bad("tau_step must lie in (0, 1]");
        }
        if !(self.tau_stop > 0.0 && self.tau_stop <= 1.0) {
            return bad("tau_stop must lie in (0, 1]");
        }
        if self.delta < 1 || self.ema_window < 1 || self.delta_k < 1 || self.k0 < 1 {
            return bad("delta, ema_window, delta_k and k0 must be at least 1");
        }
        if self.k0 > self.k_cap {
            return Err(Error::InvalidConfig(format!("k0 {} exceeds k_cap {}", self.k0, self.k_cap)));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        2.0 / (self.ema_window as f64 + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Hold,
    Refine,
    Stop,
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::Hold => "hold",
            Decision::Refine => "refine",
            Decision::Stop => "stop",
        }
    }
}

/// Outcome of the plateau test on a smoothed history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub decision: Decision,
    pub r: Option<f64>,
    pub r_c: Option<f64>,
}

/// The plateau test on a smoothed history with checkpoint `c`. Does not
/// handle warm-up or the stopped state.
pub fn decide(cfg: &RefineConfig, smoothed: &[f64], c: f64) -> Result<Verdict> {
    let len = smoothed.len();
    if len <= cfg.delta {
        return Ok(Verdict { decision: Decision::Hold, r: None, r_c: None });
    }
    let last = smoothed[len - 1];
    let back = smoothed[len - cfg.delta];
    if back == 0.0 {
        return Err(Error::ZeroMetric("lookback"));
    }
    let r = last / back;
    if r <= cfg.tau_step {
        return Ok(Verdict { decision: Decision::Hold, r: Some(r), r_c: None });
    }
    if c == 0.0 {
        return Err(Error::ZeroMetric("checkpoint"));
    }
    let r_c = last / c;
    let decision = if r_c < cfg.tau_stop || r_c > 1.0 { Decision::Refine } else { Decision::Stop };
    Ok(Verdict { decision, r: Some(r), r_c: Some(r_c) })
}

/// One row of the decision log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub interval: usize,
    pub raw: f64,
    pub smoothed: f64,
    pub r: Option<f64>,
    pub r_c: Option<f64>,
    pub decision: Decision,
    /// Budget in force after the decision.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    cfg: RefineConfig,
    k: usize,
    raw: Vec<f64>,
    smoothed: Vec<f64>,
    checkpoint: f64,
    stopped: bool,
    last_refine: Option<usize>,
}

impl Controller {
    pub fn new(cfg: RefineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, k: cfg.k0, raw: Vec::new(), smoothed: Vec::new(), checkpoint: f64::NAN, stopped: false, last_refine: None })
    }

    pub fn config(&self) -> &RefineConfig {
        &self.cfg
    }

    pub fn current_k(&self) -> usize {
        self.k
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn checkpoint(&self) -> f64 {
        self.checkpoint
    }

    pub fn raw_history(&self) -> &[f64] {
        &self.raw
    }

    pub fn smoothed_history(&self) -> &[f64] {
        &self.smoothed
    }

    /// Appends a validation value and returns the decision for it. The first
    /// value seeds both the EMA and the checkpoint.
    pub fn observe(&mut self, value: f64) -> Result<DecisionRecord> {
        if !value.is_finite() {
            return Err(Error::NonFinite("validation metric"));
        }
        let s = match self.smoothed.last() {
            Some(&prev) => {
                let a = self.cfg.alpha();
                a * value + (1.0 - a) * prev
            }
            None => {
                self.checkpoint = match self.cfg.checkpoint_seed {
                    CheckpointSeed::FirstValue => value,
                    CheckpointSeed::Unbounded => f64::INFINITY,
                };
                value
            }
        };
        self.raw.push(value);
        self.smoothed.push(s);
        let interval = self.raw.len() - 1;

        let in_grace = self.cfg.grace_after_refine && self.last_refine.is_some_and(|e| interval - e < self.cfg.delta);
        let verdict = if self.stopped {
            Verdict { decision: Decision::Stop, r: None, r_c: None }
        } else if in_grace {
            Verdict { decision: Decision::Hold, r: None, r_c: None }
        } else {
            decide(&self.cfg, &self.smoothed, self.checkpoint)?
        };
        match verdict.decision {
            Decision::Refine => {
                self.checkpoint = s;
                self.k = (self.k + self.cfg.delta_k).min(self.cfg.k_cap);
                self.last_refine = Some(interval);
            }
            Decision::Stop => self.stopped = self.cfg.stop_is_final,
            Decision::Hold => {}
        }
        Ok(DecisionRecord { interval, raw: value, smoothed: s, r: verdict.r, r_c: verdict.r_c, decision: verdict.decision, k: self.k })
    }
}

/// Decision log obtained by feeding `history` to a fresh controller.
pub fn replay(cfg: RefineConfig, history: &[f64]) -> Result<Vec<DecisionRecord>> {
    let mut c = Controller::new(cfg)?;
    history.iter().map(|&v| c.observe(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RefineConfig {
        RefineConfig::default()
    }

    #[test]
    fn ema_examples() {
        let h = replay(RefineConfig { ema_window: 3, ..cfg() }, &[1.0, 0.0]).unwrap();
        assert_eq!(h[1].smoothed, 0.5);
        let h = replay(RefineConfig { ema_window: 1, ..cfg() }, &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(h.iter().map(|d| d.smoothed).collect::<Vec<_>>(), [3.0, 1.0, 2.0]);
        let h = replay(cfg(), &[0.7; 5]).unwrap();
        assert!(h.iter().all(|d| d.smoothed == 0.7));
    }

    #[test]
    fn rule_examples() {
        let c = cfg();
        assert_eq!(decide(&c, &[0.5; 4], 1.0).unwrap().decision, Decision::Refine);
        assert_eq!(decide(&c, &[0.48; 4], 0.5).unwrap().decision, Decision::Stop);
        assert_eq!(decide(&c, &[0.6; 4], 0.5).unwrap().decision, Decision::Refine);
        assert_eq!(decide(&c, &[1.0, 0.8, 0.64, 0.512], 1.0).unwrap().decision, Decision::Hold);
    }

    #[test]
    fn boundaries() {
        let c = RefineConfig { tau_step: 0.5, tau_stop: 0.5, ..cfg() };
        // r exactly tau_step holds
        assert_eq!(decide(&c, &[1.0, 1.0, 1.0, 0.5], 1.0).unwrap().decision, Decision::Hold);
        // r_c exactly tau_stop stops
        assert_eq!(decide(&c, &[1.0, 1.0, 1.0, 1.0], 2.0).unwrap().decision, Decision::Stop);
    }

    #[test]
    fn warm_up_holds() {
        assert_eq!(decide(&cfg(), &[1.0; 3], 1.0).unwrap().r, None);
    }

    #[test]
    fn zero_metrics_are_errors() {
        assert_eq!(decide(&cfg(), &[0.0; 4], 1.0), Err(Error::ZeroMetric("lookback")));
        assert_eq!(decide(&cfg(), &[1.0; 4], 0.0), Err(Error::ZeroMetric("checkpoint")));
        assert!(Controller::new(cfg()).unwrap().observe(f64::NAN).is_err());
    }

    #[test]
    fn plateau_at_initial_quality_stops() {
        let h = replay(cfg(), &[1.0; 6]).unwrap();
        assert_eq!(h[3].decision, Decision::Stop);
        assert!(h[4..].iter().all(|d| d.decision == Decision::Stop && d.k == 1));
    }

    #[test]
    fn refines_by_delta_k_and_clamps() {
        let c = RefineConfig { k0: 2, delta_k: 5, k_cap: 10, tau_step: 0.99, ..cfg() };
        let mut ctl = Controller::new(c).unwrap();
        ctl.observe(1.0).unwrap();
        let mut v = 1.0;
        let mut ks = Vec::new();
        for _ in 0..30 {
            // divergent plateaus keep refining
            v *= 1.01;
            ks.push(ctl.observe(v).unwrap().k);
        }
        assert!(ks.contains(&7));
        assert_eq!(*ks.last().unwrap(), 10);
    }

    #[test]
    fn grace_holds_after_refine() {
        let c = RefineConfig { grace_after_refine: true, ..cfg() };
        let h = replay(c, &[1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        let first = h.iter().position(|d| d.decision == Decision::Refine).unwrap();
        assert!(h[first + 1..first + 3].iter().all(|d| d.decision == Decision::Hold));
    }

    #[test]
    fn unbounded_seed_refines_first_plateau() {
        let h = replay(RefineConfig { checkpoint_seed: CheckpointSeed::Unbounded, ..cfg() }, &[1.0; 4]).unwrap();
        assert_eq!(h[3].decision, Decision::Refine);
        assert_eq!(h[3].r_c, Some(0.0));
    }

    #[test]
    fn unlatched_stop_can_refine_later() {
        let c = RefineConfig { stop_is_final: false, ema_window: 1, ..cfg() };
        let h = replay(c, &[1.0, 1.0, 1.0, 0.99, 0.985, 0.98, 0.8, 0.79, 0.79]).unwrap();
        assert_eq!(h[3].decision, Decision::Stop);
        assert!(h.iter().any(|d| d.decision == Decision::Refine));
    }

    #[test]
    fn invalid_configs() {
        assert!(RefineConfig { k0: 5, k_cap: 4, ..cfg() }.validate().is_err());
        assert!(RefineConfig { tau_stop: 0.0, ..cfg() }.validate().is_err());
        assert!(RefineConfig { delta: 0, ..cfg() }.validate().is_err());
    }
}
