//! Scenario runners: dataset generation, budget measurement and the
//! training loops for every scenario family.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use difflab_core::nn::Network;
use difflab_core::operators::Physics;
use difflab_core::refine::{Controller, Decision};
use difflab_core::solvers::solve;
use difflab_core::train::{
    emulator_validation, minibatches, CorrectorChain, MixedChain, Optimizer, PoissonInverse, StepOutcome,
};
use difflab_core::Real;

use crate::config::{RefinementMetric, RunMode, Scenario, ScenarioConfig};
use crate::data::{
    generate_fourier_ic, generate_ns_ic, restrict_staggered, sample_seed, Dataset, Projector, ReferenceStepper,
};
use crate::record::{Row, RunRecord, Status, Summary};

/// Scalar type of network training.
pub type Float = f32;

pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Dataset<f64>> {
    ensure!(!cfg.scenario.is_poisson(), "{} has no dataset", cfg.scenario.name());
    let total = cfg.data.train + cfg.data.val;
    let steps = cfg.trajectory_steps();
    let mut trajectories: Vec<Vec<Vec<f64>>> = Vec::with_capacity(total);
    if cfg.scenario == Scenario::NavierStokesHybrid {
        let coarse = cfg.grid()?;
        let fine = cfg.fine_grid()?.context("missing fine grid")?;
        let physics = cfg.physics_on(fine).context("missing physics")?;
        let projector = Projector::new(&fine)?;
        let stepper = ReferenceStepper::for_physics(&physics, cfg.solver.restart)?;
        for i in 0..total {
            let u0 = generate_ns_ic(&fine, &projector, sample_seed(cfg.data.seed, i));
            let traj = stepper.trajectory(&physics, u0, steps)?;
            trajectories.push(traj.iter().map(|s| restrict_staggered(&fine, s)).collect());
        }
        debug_assert_eq!(trajectories[0][0].len(), coarse.dofs());
    } else {
        let grid = cfg.grid()?;
        let physics = cfg.physics()?.context("missing physics")?;
        let stepper = ReferenceStepper::for_physics(&physics, cfg.solver.restart)?;
        for i in 0..total {
            let u0 = generate_fourier_ic(&grid, cfg.data.n_modes, sample_seed(cfg.data.seed, i));
            trajectories.push(stepper.trajectory(&physics, u0, steps)?);
        }
    }
    Ok(Dataset { trajectories, train: cfg.data.train, seed: cfg.data.seed })
}

/// Largest iteration count the scenario solver needs to reach its tolerance
/// on the training data (the states fed to the refined solves).
pub fn measure_k_eps(cfg: &ScenarioConfig, data: &Dataset<f64>) -> Result<usize> {
    let physics = cfg.physics()?.context("missing physics")?;
    let setup = cfg.solver_setup();
    let solve_cfg = setup.config(difflab_core::train::CONVERGED_CAP);
    let inputs: &[usize] = if cfg.scenario == Scenario::NavierStokesHybrid { &[0, 1] } else { &[1] };
    let mut k = 0;
    for traj in data.train_set() {
        for &t in inputs {
            let r = solve(setup.kind, &physics.assemble(&traj[t])?, &solve_cfg)?;
            ensure!(r.converged, "solver did not reach tolerance on the data");
            k = k.max(r.iterations_used);
        }
    }
    Ok(k.max(1))
}

/// Budget cap of a scenario: configured, or measured.
pub fn k_cap(cfg: &ScenarioConfig, data: Option<&Dataset<f64>>) -> Result<usize> {
    if let Some(k) = cfg.prdp.k_cap {
        return Ok(k);
    }
    if let Some(p) = &cfg.poisson {
        let inv = PoissonInverse::<f64>::new(cfg.grid()?, &p.theta_ref, cfg.solver_setup())?;
        return Ok(inv.iterations_to_converge(&p.theta_ref)?);
    }
    measure_k_eps(cfg, data.context("dataset needed to measure K_eps")?)
}

/// Per-interval budget source.
enum Budget {
    Fixed(usize),
    Refined(Controller),
}

impl Budget {
    fn new(cfg: &ScenarioConfig, k_cap: usize) -> Result<Self> {
        Ok(match cfg.mode {
            RunMode::Refined => Budget::Refined(Controller::new(cfg.prdp.refine_config(k_cap))?),
            RunMode::Converged => Budget::Fixed(k_cap),
            RunMode::Fixed(k) => {
                ensure!(k >= 1, "fixed budget must be at least 1");
                Budget::Fixed(k)
            }
        })
    }

    fn k(&self) -> usize {
        match self {
            Budget::Fixed(k) => *k,
            Budget::Refined(c) => c.current_k(),
        }
    }

    fn observe(&mut self, value: f64) -> Result<String> {
        match self {
            Budget::Fixed(_) => Ok("n/a".into()),
            Budget::Refined(c) => {
                let d = c.observe(value)?;
                Ok(d.decision.name().into())
            }
        }
    }

    fn stopped(&self) -> bool {
        matches!(self, Budget::Refined(c) if c.is_stopped())
    }
}

struct Recorder {
    rows: Vec<Row>,
    start: Instant,
    cum: usize,
}

impl Recorder {
    fn new() -> Self {
        Self { rows: Vec::new(), start: Instant::now(), cum: 0 }
    }

    fn push(&mut self, train_loss: f64, val_metric: f64, k: usize, iters: usize, decision: String) {
        self.cum += iters;
        self.rows.push(Row {
            epoch: self.rows.len(),
            train_loss,
            val_metric,
            k,
            iters_interval: iters,
            iters_cum: self.cum,
            decision,
            wall_time: self.start.elapsed().as_secs_f64(),
        });
    }
}

fn summary(cfg: &ScenarioConfig, seed: u64, k_cap: usize, rows: &[Row], failure: Option<String>) -> Summary {
    let last = rows.last();
    let total = last.map_or(0, |r| r.iters_cum);
    Summary {
        scenario: cfg.scenario,
        mode: cfg.mode,
        seed,
        status: if failure.is_some() { Status::Failed } else { Status::Completed },
        failure,
        k_cap,
        k_final: rows.iter().skip(1).last().map_or(0, |r| r.k),
        final_val_metric: last.map_or(f64::NAN, |r| r.val_metric),
        total_iterations: total,
        counted_iterations: total,
        steps_to_target: None,
        savings: None,
    }
}

/// Gradient descent on the inverse problem. One interval is one outer step
/// and the monitored metric is the parameter suboptimality.
pub fn run_poisson_inverse(cfg: &ScenarioConfig) -> Result<RunRecord> {
    let p = cfg.poisson.as_ref().context("missing poisson section")?;
    let inv = PoissonInverse::<f64>::new(cfg.grid()?, &p.theta_ref, cfg.solver_setup())?;
    let cap = k_cap(cfg, None)?;
    let lr = cfg.optimizer.schedule.schedule();
    let mut opt = Optimizer::new(cfg.optimizer_kind(), lr, p.theta_init.len());
    let mut budget = Budget::new(cfg, cap)?;
    let mut theta = p.theta_init.clone();
    let mut rec = Recorder::new();
    let sub0 = inv.suboptimality(&theta);
    let d0 = budget.observe(sub0)?;
    rec.push(f64::NAN, sub0, budget.k(), 0, d0);
    let mut hit: Option<(usize, usize)> = None;
    let mut failure = None;
    for step in 1..=p.steps {
        let k = budget.k();
        let out = inv.loss_and_grad(&theta, k)?;
        if !out.loss.is_finite() || out.grad.iter().any(|g| !g.is_finite()) {
            failure = Some(format!("non-finite loss at step {step}"));
            break;
        }
        opt.update(&mut theta, &out.grad)?;
        let sub = inv.suboptimality(&theta);
        if !sub.is_finite() {
            failure = Some(format!("non-finite parameters at step {step}"));
            break;
        }
        let d = budget.observe(sub)?;
        rec.push(out.loss, sub, k, out.budget_iterations, d);
        if hit.is_none() && sub <= p.target {
            hit = Some((step, rec.cum));
        }
    }
    let mut s = summary(cfg, 0, cap, &rec.rows, failure);
    if let Some((step, iters)) = hit {
        s.steps_to_target = Some(step);
        s.counted_iterations = iters;
        s.k_final = rec.rows[step].k;
    }
    Ok(RunRecord { rows: rec.rows, summary: s })
}

fn non_finite<T: Real>(out: &StepOutcome<T>) -> bool {
    !out.loss.is_finite() || out.grad.iter().any(|g| !g.is_finite())
}

/// Trains one network with the mixed chain (heat, Burgers) or the corrector
/// chain (Navier-Stokes), evaluating before the first epoch and after every
/// epoch and feeding that series to the budget controller.
pub fn run_training(cfg: &ScenarioConfig, data: &Dataset<f64>, seed: u64, cap: usize) -> Result<RunRecord> {
    ensure!(!cfg.scenario.is_poisson(), "use run_poisson_inverse");
    let physics = cfg.physics()?.context("missing physics")?;
    let data: Dataset<Float> = data.convert();
    let mut net = Network::<Float>::init(cfg.network_spec()?, seed)?;
    let mut opt = Optimizer::new(cfg.optimizer_kind(), cfg.optimizer.schedule.schedule(), net.param_count());
    let mut budget = Budget::new(cfg, cap)?;
    let runner = Runner::new(cfg, physics, cap);
    let mut rec = Recorder::new();

    let v0 = runner.validate(&net, &data)?;
    let d0 = budget.observe(v0)?;
    rec.push(f64::NAN, v0, budget.k(), 0, d0);
    let mut failure = None;
    'epochs: for epoch in 0..cfg.epochs {
        let k = budget.k();
        let batches = minibatches(data.train, cfg.batch_size, seed, epoch as u64)?;
        let (mut loss_sum, mut iters) = (0.0, 0);
        for idx in &batches {
            let out = runner.step(&net, &data, idx, k)?;
            if non_finite(&out) {
                failure = Some(format!("non-finite loss in epoch {}", epoch + 1));
                break 'epochs;
            }
            opt.update(net.params_mut(), &out.grad)?;
            loss_sum += out.loss;
            iters += out.budget_iterations;
        }
        let train_loss = loss_sum / batches.len() as f64;
        let val = runner.validate(&net, &data)?;
        if !val.is_finite() {
            failure = Some(format!("non-finite validation metric after epoch {}", epoch + 1));
            rec.push(train_loss, val, k, iters, "n/a".into());
            break;
        }
        let metric = match cfg.prdp.metric {
            RefinementMetric::Validation => val,
            RefinementMetric::TrainLoss => train_loss,
        };
        let decision = budget.observe(metric)?;
        rec.push(train_loss, val, k, iters, decision);
    }
    let _ = budget.stopped();
    let s = summary(cfg, seed, cap, &rec.rows, failure);
    Ok(RunRecord { rows: rec.rows, summary: s })
}

enum Chain {
    Mixed(MixedChain),
    Corrector(CorrectorChain),
}

struct Runner {
    chain: Chain,
    val_step: usize,
    cap: usize,
}

impl Runner {
    fn new(cfg: &ScenarioConfig, physics: Physics, cap: usize) -> Self {
        let solver = cfg.solver_setup();
        let chain = match cfg.scenario {
            Scenario::NavierStokesHybrid => Chain::Corrector(CorrectorChain { physics, solver }),
            _ => Chain::Mixed(MixedChain { physics, solver }),
        };
        Self { chain, val_step: cfg.data.validation_step, cap }
    }

    fn step(&self, net: &Network<Float>, data: &Dataset<Float>, idx: &[usize], k: usize) -> Result<StepOutcome<Float>> {
        let train = data.train_set();
        Ok(match &self.chain {
            Chain::Mixed(c) => {
                let batch: Vec<(&[Float], &[Float])> = idx.iter().map(|&i| (&train[i][0][..], &train[i][2][..])).collect();
                c.loss_and_grad(net, &batch, k)?
            }
            Chain::Corrector(c) => {
                let batch: Vec<(&[Float], &[Float], &[Float])> =
                    idx.iter().map(|&i| (&train[i][0][..], &train[i][1][..], &train[i][2][..])).collect();
                c.loss_and_grad(net, &batch, k)?
            }
        })
    }

    /// Mean squared relative rollout error at the validation step. The
    /// corrector rolls out with the coarse solver at the full budget.
    fn validate(&self, net: &Network<Float>, data: &Dataset<Float>) -> Result<f64> {
        let t = self.val_step;
        let samples: Vec<(&[Float], &[Float])> = data.val_set().iter().map(|tr| (&tr[0][..], &tr[t][..])).collect();
        Ok(match &self.chain {
            Chain::Mixed(_) => emulator_validation(net, &samples, t)?,
            Chain::Corrector(c) => c.validation(net, &samples, t, self.cap)?,
        })
    }
}

/// Runs a scenario for one seed, dispatching on its family.
pub fn run(cfg: &ScenarioConfig, data: Option<&Dataset<f64>>, seed: u64, cap: usize) -> Result<RunRecord> {
    if cfg.scenario.is_poisson() {
        let mut r = run_poisson_inverse(cfg)?;
        r.summary.seed = seed;
        return Ok(r);
    }
    let Some(data) = data else { bail!("{} needs a dataset", cfg.scenario.name()) };
    run_training(cfg, data, seed, cap)
}

/// Whether the budget never decreases between intervals.
pub fn monotone_k(record: &RunRecord) -> bool {
    record.k_schedule().windows(2).all(|w| w[0] <= w[1])
}

/// Whether a refined run hit a stop decision.
pub fn stopped(record: &RunRecord) -> bool {
    record.rows.iter().any(|r| r.decision == Decision::Stop.name())
}

/// Runs every seed of a configuration on one shared dataset and budget cap.
pub fn run_seeds(cfg: &ScenarioConfig, data: Option<&Dataset<f64>>, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    let cap = k_cap(cfg, data)?;
    seeds.iter().map(|&s| run(cfg, data, s, cap)).collect()
}

/// Dataset for non-inverse scenarios, `None` otherwise.
pub fn dataset_for(cfg: &ScenarioConfig) -> Result<Option<Dataset<f64>>> {
    if cfg.scenario.is_poisson() {
        Ok(None)
    } else {
        Ok(Some(generate_dataset(cfg)?))
    }
}
