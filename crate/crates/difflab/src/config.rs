//! Scenario configuration: presets plus TOML overrides.

use anyhow::{bail, Context, Result};
use difflab_core::adjoint::DiffMode;
use difflab_core::nn::{NetworkSpec, Padding};
use difflab_core::operators::{Grid, Physics};
use difflab_core::refine::{CheckpointSeed, RefineConfig};
use difflab_core::solvers::SolverKind;
use difflab_core::train::{OptimizerKind, Schedule, SolverSetup};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[serde(rename = "poisson_inverse_1p")]
    PoissonInverse1p,
    #[serde(rename = "poisson_inverse_3p")]
    PoissonInverse3p,
    Heat1d,
    Heat2d,
    Heat3d,
    Burgers1d,
    NavierStokesHybrid,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::PoissonInverse1p,
        Scenario::PoissonInverse3p,
        Scenario::Heat1d,
        Scenario::Heat2d,
        Scenario::Heat3d,
        Scenario::Burgers1d,
        Scenario::NavierStokesHybrid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::PoissonInverse1p => "poisson_inverse_1p",
            Scenario::PoissonInverse3p => "poisson_inverse_3p",
            Scenario::Heat1d => "heat1d",
            Scenario::Heat2d => "heat2d",
            Scenario::Heat3d => "heat3d",
            Scenario::Burgers1d => "burgers1d",
            Scenario::NavierStokesHybrid => "navier_stokes_hybrid",
        }
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self, Scenario::PoissonInverse1p | Scenario::PoissonInverse3p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Full,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    Jacobi,
    SteepestDescent,
    Gmres,
}

impl From<SolverName> for SolverKind {
    fn from(s: SolverName) -> Self {
        match s {
            SolverName::Jacobi => SolverKind::Jacobi,
            SolverName::SteepestDescent => SolverKind::SteepestDescent,
            SolverName::Gmres => SolverKind::Gmres,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffName {
    Implicit,
    Unrolled,
}

impl From<DiffName> for DiffMode {
    fn from(d: DiffName) -> Self {
        match d {
            DiffName::Implicit => DiffMode::Implicit,
            DiffName::Unrolled => DiffMode::Unrolled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[serde(rename = "prdp")]
    Refined,
    Converged,
    Fixed(usize),
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "prdp" => RunMode::Refined,
            "converged" => RunMode::Converged,
            _ => match s.strip_prefix("fixed:") {
                Some(k) => RunMode::Fixed(k.parse().with_context(|| format!("bad iteration count in {s:?}"))?),
                None => bail!("unknown mode {s:?}; expected prdp, converged or fixed:<K>"),
            },
        })
    }

    pub fn label(&self) -> String {
        match self {
            RunMode::Refined => "prdp".into(),
            RunMode::Converged => "converged".into(),
            RunMode::Fixed(k) => format!("fixed_{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Unknowns per axis (coarse grid for the hybrid scenario).
    pub n: usize,
    /// Fine reference grid of the hybrid scenario.
    pub fine_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverName,
    pub diff_mode: DiffName,
    pub restart: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkConfig {
    Mlp { hidden_width: usize, hidden_layers: usize },
    ConvResnet { blocks: usize, hidden_channels: usize, kernel_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Gd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleConfig {
    Constant { lr: f64 },
    Exponential { base_lr: f64, decay_rate: f64, transition_steps: u64 },
    Cosine { base_lr: f64, decay_steps: u64 },
}

impl ScheduleConfig {
    pub fn schedule(&self) -> Schedule {
        match *self {
            ScheduleConfig::Constant { lr } => Schedule::Constant { lr },
            ScheduleConfig::Exponential { base_lr, decay_rate, transition_steps } => {
                Schedule::Exponential { base: base_lr, rate: decay_rate, transition_steps }
            }
            ScheduleConfig::Cosine { base_lr, decay_steps } => Schedule::Cosine { base: base_lr, decay_steps },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerName,
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub train: usize,
    pub val: usize,
    pub n_modes: usize,
    pub seed: u64,
    /// Rollout step of the validation metric.
    pub validation_step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementMetric {
    Validation,
    TrainLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub tau_step: f64,
    pub tau_stop: f64,
    pub delta: usize,
    pub ema_window: usize,
    pub k0: usize,
    pub delta_k: usize,
    /// Upper budget; measured on the data when absent.
    pub k_cap: Option<usize>,
    pub grace_after_refine: bool,
    pub unbounded_checkpoint: bool,
    pub stop_is_final: bool,
    pub metric: RefinementMetric,
}

impl RefinementConfig {
    fn new(tau_step: f64, tau_stop: f64, delta: usize, ema_window: usize, k0: usize, delta_k: usize) -> Self {
        Self {
            tau_step,
            tau_stop,
            delta,
            ema_window,
            k0,
            delta_k,
            k_cap: None,
            grace_after_refine: false,
            unbounded_checkpoint: false,
            stop_is_final: false,
            metric: RefinementMetric::Validation,
        }
    }

    pub fn refine_config(&self, k_cap: usize) -> RefineConfig {
        RefineConfig {
            tau_step: self.tau_step,
            tau_stop: self.tau_stop,
            delta: self.delta,
            ema_window: self.ema_window,
            k0: self.k0.min(k_cap),
            delta_k: self.delta_k,
            k_cap,
            grace_after_refine: self.grace_after_refine,
            checkpoint_seed: if self.unbounded_checkpoint { CheckpointSeed::Unbounded } else { CheckpointSeed::FirstValue },
            stop_is_final: self.stop_is_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonConfig {
    pub theta_ref: Vec<f64>,
    pub theta_init: Vec<f64>,
    pub steps: usize,
    /// Suboptimality at which the run counts as solved.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub preset: Preset,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub solver: SolverConfig,
    pub network: Option<NetworkConfig>,
    pub optimizer: OptimizerConfig,
    pub data: DataConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub prdp: RefinementConfig,
    pub mode: RunMode,
    pub poisson: Option<PoissonConfig>,
}

fn exp(base_lr: f64, decay_rate: f64) -> OptimizerConfig {
    OptimizerConfig { kind: OptimizerName::Adam, schedule: ScheduleConfig::Exponential { base_lr, decay_rate, transition_steps: 100 } }
}

fn solver(kind: SolverName, diff_mode: DiffName, restart: usize) -> SolverConfig {
    SolverConfig { kind, diff_mode, restart, tolerance: 1e-5 }
}

fn data(n_modes: usize, validation_step: usize) -> DataConfig {
    DataConfig { train: 200, val: 5, n_modes, seed: 0, validation_step }
}

impl ScenarioConfig {
    /// Full-size setup of each scenario.
    pub fn full(scenario: Scenario) -> Self {
        let seeds: Vec<u64> = (0..10).collect();
        let heat_physics = PhysicsConfig { nu: 0.001, dt: 1.0 };
        match scenario {
            Scenario::PoissonInverse1p | Scenario::PoissonInverse3p => {
                let one = scenario == Scenario::PoissonInverse1p;
                let mut prdp =
                    if one { RefinementConfig::new(0.92, 0.98, 2, 1, 25, 10) } else { RefinementConfig::new(0.99, 0.99, 2, 1, 1, 2) };
                prdp.unbounded_checkpoint = true;
                Self {
                    scenario,
                    preset: Preset::Full,
                    grid: GridConfig { n: 30, fine_n: None },
                    physics: PhysicsConfig { nu: 0.0, dt: 0.0 },
                    solver: solver(SolverName::Jacobi, DiffName::Implicit, 20),
                    network: None,
                    optimizer: OptimizerConfig {
                        kind: OptimizerName::Gd,
                        schedule: ScheduleConfig::Constant { lr: if one { 275.0 } else { 3500.0 } },
                    },
                    data: DataConfig { train: 0, val: 0, n_modes: 0, seed: 0, validation_step: 0 },
                    batch_size: 1,
                    epochs: 0,
                    seeds: vec![0],
                    prdp,
                    mode: RunMode::Refined,
                    poisson: Some(if one {
                        PoissonConfig { theta_ref: vec![2.0], theta_init: vec![5.0], steps: 170, target: 1e-5 }
                    } else {
                        PoissonConfig { theta_ref: vec![0.62, 1.86, 5.1], theta_init: vec![3.0; 3], steps: 750, target: 1e-5 }
                    }),
                }
            }
            Scenario::Heat1d => Self {
                scenario,
                preset: Preset::Full,
                grid: GridConfig { n: 30, fine_n: None },
                physics: heat_physics,
                solver: solver(SolverName::Jacobi, DiffName::Implicit, 20),
                network: Some(NetworkConfig::Mlp { hidden_width: 64, hidden_layers: 3 }),
                optimizer: exp(1e-3, 0.94),
                data: data(5, 2),
                batch_size: 25,
                epochs: 70,
                seeds,
                prdp: RefinementConfig::new(0.98, 0.9, 3, 8, 1, 1),
                mode: RunMode::Refined,
                poisson: None,
            },
            Scenario::Heat2d => Self {
                scenario,
                preset: Preset::Full,
                grid: GridConfig { n: 30, fine_n: None },
                physics: heat_physics,
                solver: solver(SolverName::Jacobi, DiffName::Unrolled, 20),
                network: Some(NetworkConfig::Mlp { hidden_width: 3000, hidden_layers: 3 }),
                optimizer: exp(1e-3, 0.9),
                data: data(5, 2),
                batch_size: 25,
                epochs: 100,
                seeds,
                prdp: RefinementConfig::new(0.9, 0.9, 3, 6, 1, 1),
                mode: RunMode::Refined,
                poisson: None,
            },
            Scenario::Heat3d => Self {
                scenario,
                preset: Preset::Full,
                grid: GridConfig { n: 20, fine_n: None },
                physics: heat_physics,
                solver: solver(SolverName::Jacobi, DiffName::Unrolled, 20),
                network: Some(NetworkConfig::ConvResnet { blocks: 6, hidden_channels: 32, kernel_size: 3 }),
                optimizer: exp(1e-4, 0.92),
                data: data(5, 2),
                batch_size: 25,
                epochs: 100,
                seeds,
                prdp: RefinementConfig::new(0.97, 0.9, 3, 6, 1, 1),
                mode: RunMode::Refined,
                poisson: None,
            },
            Scenario::Burgers1d => Self {
                scenario,
                preset: Preset::Full,
                grid: GridConfig { n: 256, fine_n: None },
                physics: PhysicsConfig { nu: 0.001, dt: 0.01 },
                solver: solver(SolverName::Gmres, DiffName::Implicit, 2),
                network: Some(NetworkConfig::ConvResnet { blocks: 6, hidden_channels: 32, kernel_size: 3 }),
                optimizer: exp(1e-3, 0.7),
                data: data(20, 5),
                batch_size: 25,
                epochs: 100,
                seeds,
                prdp: RefinementConfig::new(0.9, 0.9, 3, 15, 4, 1),
                mode: RunMode::Refined,
                poisson: None,
            },
            Scenario::NavierStokesHybrid => Self {
                scenario,
                preset: Preset::Full,
                grid: GridConfig { n: 48, fine_n: Some(96) },
                physics: PhysicsConfig { nu: 1e-4, dt: 0.1 },
                solver: solver(SolverName::Gmres, DiffName::Implicit, 8),
                network: Some(NetworkConfig::ConvResnet { blocks: 3, hidden_channels: 64, kernel_size: 3 }),
                optimizer: OptimizerConfig {
                    kind: OptimizerName::Adam,
                    schedule: ScheduleConfig::Cosine { base_lr: 1e-3, decay_steps: 800 },
                },
                data: data(0, 5),
                batch_size: 25,
                epochs: 100,
                seeds,
                prdp: RefinementConfig::new(0.98, 0.9, 3, 6, 1, 1),
                mode: RunMode::Refined,
                poisson: None,
            },
        }
    }

    /// Reduced setup that runs on a single core.
    pub fn desk(scenario: Scenario) -> Self {
        let mut c = Self::full(scenario);
        c.preset = Preset::Desk;
        match scenario {
            Scenario::Heat2d => c.network = Some(NetworkConfig::Mlp { hidden_width: 256, hidden_layers: 3 }),
            Scenario::Heat3d => {
                c.grid.n = 8;
                c.network = Some(NetworkConfig::ConvResnet { blocks: 2, hidden_channels: 8, kernel_size: 3 });
                c.epochs = 30;
                c.seeds = (0..5).collect();
            }
            Scenario::NavierStokesHybrid => {
                c.grid = GridConfig { n: 16, fine_n: Some(32) };
                c.network = Some(NetworkConfig::ConvResnet { blocks: 3, hidden_channels: 16, kernel_size: 3 });
                // K_cap is far above the number of epochs at this resolution
                c.prdp.delta_k = 5;
            }
            _ => {}
        }
        c
    }

    pub fn preset(scenario: Scenario, preset: Preset) -> Self {
        match preset {
            Preset::Full => Self::full(scenario),
            Preset::Desk => Self::desk(scenario),
        }
    }

    /// Parses a TOML file: `scenario` and optional `preset` (default `desk`)
    /// select the defaults, every other key overrides them.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        let scenario: Scenario = table
            .get("scenario")
            .context("config needs a `scenario` key")?
            .clone()
            .try_into()
            .context("unknown scenario")?;
        let preset: Preset = match table.get("preset") {
            Some(v) => v.clone().try_into().context("unknown preset")?,
            None => Preset::Desk,
        };
        let base = toml::Value::try_from(Self::preset(scenario, preset))?;
        let merged = merge(base, toml::Value::Table(table));
        let cfg: Self = merged.try_into().context("config does not match the scenario schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.solver.kind;
        match self.scenario {
            Scenario::Burgers1d | Scenario::NavierStokesHybrid if kind != SolverName::Gmres => {
                bail!("{} needs the gmres solver", self.scenario.name())
            }
            Scenario::PoissonInverse1p
            | Scenario::PoissonInverse3p
            | Scenario::Heat1d
            | Scenario::Heat2d
            | Scenario::Heat3d
                if kind == SolverName::Gmres =>
            {
                bail!("{} needs jacobi or steepest_descent", self.scenario.name())
            }
            _ => {}
        }
        if kind == SolverName::Gmres && self.solver.diff_mode == DiffName::Unrolled {
            bail!("gmres supports implicit differentiation only");
        }
        if self.scenario.is_poisson() {
            let p = self.poisson.as_ref().context("poisson scenarios need a [poisson] section")?;
            if p.theta_ref.len() != p.theta_init.len() || p.theta_ref.is_empty() {
                bail!("theta_ref and theta_init must have the same nonzero length");
            }
        } else {
            if self.network.is_none() {
                bail!("{} needs a [network] section", self.scenario.name());
            }
            if self.batch_size == 0 || self.batch_size > self.data.train {
                bail!("batch size {} invalid for {} training samples", self.batch_size, self.data.train);
            }
            if self.data.val == 0 {
                bail!("validation set is empty");
            }
            if self.scenario == Scenario::NavierStokesHybrid {
                let fine = self.grid.fine_n.context("hybrid scenario needs grid.fine_n")?;
                if fine != 2 * self.grid.n {
                    bail!("fine grid must have twice the coarse resolution");
                }
            }
        }
        if self.seeds.is_empty() {
            bail!("no seeds given");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let n = self.grid.n;
        Ok(match self.scenario {
            Scenario::PoissonInverse1p | Scenario::PoissonInverse3p | Scenario::Heat1d => Grid::dirichlet(1, n)?,
            Scenario::Heat2d => Grid::dirichlet(2, n)?,
            Scenario::Heat3d => Grid::dirichlet(3, n)?,
            Scenario::Burgers1d => Grid::periodic(1, n)?,
            Scenario::NavierStokesHybrid => Grid::staggered(n)?,
        })
    }

    pub fn fine_grid(&self) -> Result<Option<Grid>> {
        Ok(match (self.scenario, self.grid.fine_n) {
            (Scenario::NavierStokesHybrid, Some(n)) => Some(Grid::staggered(n)?),
            _ => None,
        })
    }

    pub fn physics_on(&self, grid: Grid) -> Option<Physics> {
        let (nu, dt) = (self.physics.nu, self.physics.dt);
        match self.scenario {
            Scenario::Heat1d | Scenario::Heat2d | Scenario::Heat3d => Some(Physics::Heat { grid, nu, dt }),
            Scenario::Burgers1d => Some(Physics::Burgers { grid, nu, dt }),
            Scenario::NavierStokesHybrid => Some(Physics::NavierStokes { grid, nu, dt }),
            _ => None,
        }
    }

    pub fn physics(&self) -> Result<Option<Physics>> {
        Ok(self.physics_on(self.grid()?))
    }

    pub fn solver_setup(&self) -> SolverSetup {
        SolverSetup {
            kind: self.solver.kind.into(),
            mode: self.solver.diff_mode.into(),
            tolerance: self.solver.tolerance,
            gmres_restart: self.solver.restart,
        }
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self.optimizer.kind {
            OptimizerName::Gd => OptimizerKind::GradientDescent,
            OptimizerName::Adam => OptimizerKind::Adam,
        }
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let grid = self.grid()?;
        let net = self.network.as_ref().context("no network configured")?;
        let spec = match *net {
            NetworkConfig::Mlp { hidden_width, hidden_layers } => {
                NetworkSpec::Mlp { input: grid.points(), output: grid.points(), hidden_width, hidden_layers }
            }
            NetworkConfig::ConvResnet { blocks, hidden_channels, kernel_size } => {
                let (channels, padding) = match self.scenario {
                    Scenario::NavierStokesHybrid => (2, Padding::Circular),
                    Scenario::Burgers1d => (1, Padding::Circular),
                    _ => (1, Padding::Zero),
                };
                NetworkSpec::ConvResNet {
                    spatial_dim: grid.dim(),
                    resolution: grid.n(),
                    channels_in: channels,
                    channels_out: channels,
                    blocks,
                    hidden_channels,
                    kernel_size,
                    padding,
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Physics solves per update step.
    pub fn solves_per_step(&self) -> usize {
        if self.scenario == Scenario::NavierStokesHybrid {
            2
        } else {
            1
        }
    }

    /// Update steps per epoch.
    pub fn steps_per_epoch(&self) -> usize {
        self.data.train.div_ceil(self.batch_size)
    }

    /// Reference trajectory length.
    pub fn trajectory_steps(&self) -> usize {
        self.data.validation_step.max(2)
    }
}

fn merge(base: toml::Value, over: toml::Value) -> toml::Value {
    match (base, over) {
        (toml::Value::Table(mut b), toml::Value::Table(o)) => {
            // a tagged section whose kind changes replaces the preset wholesale
            for (k, v) in o {
                let tagged = k == "network" || k == "schedule";
                let kind_changed = tagged && matches!((b.get(&k), &v), (Some(toml::Value::Table(bt)), toml::Value::Table(ot))
                    if ot.get("kind").is_some_and(|kv| Some(kv) != bt.get("kind")));
                let next = match b.remove(&k) {
                    Some(bv) if !kind_changed => merge(bv, v),
                    _ => v,
                };
                b.insert(k, next);
            }
            toml::Value::Table(b)
        }
        (_, o) => o,
    }
}
