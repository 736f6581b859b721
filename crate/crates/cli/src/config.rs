//! Experiment configuration: a sectioned TOML file with defaults for every key.

use std::f64::consts::PI;
use std::path::PathBuf;

use fracpq::inverse::{ObservationDesign, ReconstructionOptions, UpdateForm};
use fracpq::synthdata::CrimeMode;
use fracpq::{
    BoundaryCondition, BoundaryData, Field, Nonlinearity, Profile, ProblemTemplate, RunSetup, Source,
    SpatialGrid, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub observation: ObservationSection,
    pub noise: NoiseSection,
    pub inverse: InverseSection,
    pub forward: ForwardSection,
    pub probe: ProbeSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub alpha: f64,
    /// One of `f1`..`f4`.
    pub nonlinearity: String,
    pub n_cells: usize,
    pub n_steps: usize,
    pub horizon: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Constant diffusivity `D`.
    pub diffusivity: f64,
    /// Constant potential `d`.
    pub potential: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            nonlinearity: "f4".into(),
            n_cells: 100,
            n_steps: 300,
            horizon: 0.3,
            x_min: 0.0,
            x_max: 1.0,
            diffusivity: 1.0,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Final-time data from two runs with different sources.
    TwoRun,
    /// One run observed at two well separated times.
    TwoTimeFar,
    /// One run observed at two nearby times.
    TwoTimeNear,
    /// Two runs with different initial data, homogeneous Neumann ends.
    TwoInit,
    /// Two runs with different boundary conditions.
    TwoBc,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::TwoRun => "two_run",
            Mode::TwoTimeFar => "two_time_far",
            Mode::TwoTimeNear => "two_time_near",
            Mode::TwoInit => "two_init",
            Mode::TwoBc => "two_bc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crime {
    SameGrid,
    Refined2x,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryChoice {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSection {
    pub mode: Mode,
    pub crime: Crime,
    /// `[a, b]` for the source `r(t, x) = a + b x` of the first (or only) run.
    pub source1: [f64; 2],
    /// Source of the second run in `two_run` mode.
    pub source2: [f64; 2],
    /// Boundary type at both ends for `two_run` and the two-time modes.
    pub boundary: BoundaryChoice,
    /// Dirichlet value or Neumann flux.
    pub boundary_value: f64,
    /// Constant initial state for `two_run` and the two-time modes.
    pub initial_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
}

impl Default for ObservationSection {
    fn default() -> Self {
        Self {
            mode: Mode::TwoRun,
            crime: Crime::Refined2x,
            source1: [5.0, 0.0],
            source2: [5.0, 5.0],
            boundary: BoundaryChoice::Dirichlet,
            boundary_value: 2.0,
            initial_value: 2.0,
            t1: None,
            t2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Relative `H2` noise level.
    pub delta: f64,
    /// Smoothing length; twice the mesh width when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing_length: Option<f64>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            delta: 0.0,
            smoothing_length: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateChoice {
    FixedPoint,
    Discrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseSection {
    pub init_p: f64,
    pub init_q: f64,
    pub tol: f64,
    pub k_max: usize,
    pub theta: f64,
    pub ell_max: u32,
    pub det_floor_rel: f64,
    pub update: UpdateChoice,
}

impl Default for InverseSection {
    fn default() -> Self {
        let d = ReconstructionOptions::default();
        Self {
            init_p: 0.0,
            init_q: 0.0,
            tol: d.tol,
            k_max: d.k_max,
            theta: d.theta,
            ell_max: d.ell_max,
            det_floor_rel: d.det_floor_rel,
            update: UpdateChoice::FixedPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    Phantom,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardSection {
    /// Coefficients `(p, q)` used by `forward` and `steady`.
    pub coefficients: Coefficients,
    /// Add the `H1` distance to the steady state to `summary.csv`.
    pub steady_distance: bool,
}

impl Default for ForwardSection {
    fn default() -> Self {
        Self {
            coefficients: Coefficients::Phantom,
            steady_distance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub rho: f64,
    pub samples: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { rho: 0.1, samples: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Iterate reported by the noise sweep; the loop runs exactly this many steps.
    pub noise_iterate: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
            deltas: vec![0.03, 0.01, 0.003, 0.001],
            noise_iterate: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn affine(s: [f64; 2]) -> Source {
    Source::affine_in_x(s[0], s[1])
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.alpha > 0.0 && p.alpha <= 1.0) {
            return Err(config_err(format!("problem.alpha must lie in (0, 1], got {}", p.alpha)));
        }
        Nonlinearity::builtin(&p.nonlinearity).map_err(|e| config_err(e.to_string()))?;
        if p.n_cells < 2 || p.n_steps < 1 {
            return Err(config_err("problem.n_cells must be >= 2 and problem.n_steps >= 1"));
        }
        if !(p.horizon > 0.0) || !(p.x_max > p.x_min) {
            return Err(config_err("problem.horizon must be positive and x_max > x_min"));
        }
        if !(p.diffusivity > 0.0) || !(p.potential >= 0.0) {
            return Err(config_err("problem.diffusivity must be positive and potential non-negative"));
        }
        let (t1, t2) = self.observation_times();
        if matches!(self.observation.mode, Mode::TwoTimeFar | Mode::TwoTimeNear)
            && !(t1 > 0.0 && t1 < t2 && t2 <= p.horizon + 1e-12)
        {
            return Err(config_err(format!(
                "observation times must satisfy 0 < t1 < t2 <= horizon, got {t1}, {t2}"
            )));
        }
        if !(self.noise.delta >= 0.0) {
            return Err(config_err("noise.delta must be non-negative"));
        }
        if let Some(s) = self.noise.smoothing_length {
            if !(s > 0.0) {
                return Err(config_err("noise.smoothing_length must be positive"));
            }
        }
        let inv = &self.inverse;
        if !(inv.theta > 0.0 && inv.theta < 1.0) {
            return Err(config_err("inverse.theta must lie in (0, 1)"));
        }
        if !(inv.tol >= 0.0) || !(inv.det_floor_rel > 0.0) || inv.k_max == 0 {
            return Err(config_err("inverse.tol >= 0, det_floor_rel > 0 and k_max >= 1 are required"));
        }
        if !(self.probe.rho > 0.0) || self.probe.samples == 0 {
            return Err(config_err("probe.rho must be positive and probe.samples >= 1"));
        }
        if self.sweep.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(config_err("sweep.alphas must lie in (0, 1]"));
        }
        if self.sweep.deltas.iter().any(|d| !(*d > 0.0)) || self.sweep.noise_iterate == 0 {
            return Err(config_err("sweep.deltas must be positive and noise_iterate >= 1"));
        }
        Ok(())
    }

    /// Observation times for the two-time modes (mode defaults unless overridden).
    pub fn observation_times(&self) -> (f64, f64) {
        let (d1, d2) = match self.observation.mode {
            Mode::TwoTimeNear => (0.2, 0.3),
            _ => (0.05, 0.3),
        };
        (self.observation.t1.unwrap_or(d1), self.observation.t2.unwrap_or(d2))
    }

    pub fn space_grid(&self) -> Result<SpatialGrid> {
        let p = &self.problem;
        SpatialGrid::new(p.n_cells, p.x_min, p.x_max).map_err(|e| config_err(e.to_string()))
    }

    pub fn template(&self) -> Result<ProblemTemplate> {
        let p = &self.problem;
        let f = Nonlinearity::builtin(&p.nonlinearity).map_err(|e| config_err(e.to_string()))?;
        let tg = TimeGrid::new(p.n_steps, p.horizon).map_err(|e| config_err(e.to_string()))?;
        let mut tpl = ProblemTemplate::new(p.alpha, f, self.space_grid()?, tg);
        tpl.diffusivity = Profile::constant(p.diffusivity);
        tpl.potential = Profile::constant(p.potential);
        Ok(tpl)
    }

    fn simple_run(&self, source: [f64; 2]) -> RunSetup {
        let o = &self.observation;
        let mut run = RunSetup::with_source(affine(source));
        let bc = match o.boundary {
            BoundaryChoice::Dirichlet => BoundaryCondition::dirichlet(o.boundary_value),
            BoundaryChoice::Neumann => BoundaryCondition::neumann(o.boundary_value),
        };
        run.bc_left = bc.clone();
        run.bc_right = bc;
        run.u0 = Profile::constant(o.initial_value);
        run
    }

    pub fn design(&self) -> ObservationDesign {
        let o = &self.observation;
        match o.mode {
            Mode::TwoRun => ObservationDesign::TwoRun([self.simple_run(o.source1), self.simple_run(o.source2)]),
            Mode::TwoTimeFar | Mode::TwoTimeNear => {
                let (t1, t2) = self.observation_times();
                ObservationDesign::TwoTime {
                    run: self.simple_run(o.source1),
                    t1,
                    t2,
                }
            }
            Mode::TwoInit => {
                let mut a = RunSetup::with_source(affine(o.source1));
                a.u0 = Profile::new(|x| 0.5 * (1.0 + (PI * (1.0 - x)).cos()));
                let mut b = RunSetup::with_source(affine(o.source1));
                b.u0 = Profile::new(|x| 1.0 - 2.0 * (1.0 - x).powi(3) + 3.0 * (1.0 - x).powi(2));
                ObservationDesign::TwoRun([a, b])
            }
            Mode::TwoBc => {
                let u0 = Profile::new(|x| 1.0 + (PI * x).cos());
                let mut a = RunSetup::with_source(affine(o.source1));
                a.u0 = u0.clone();
                a.bc_left = BoundaryCondition::dirichlet(0.0)
                    .with_data(BoundaryData::Affine { offset: 2.0, slope: -1.0 });
                let mut b = RunSetup::with_source(affine(o.source1));
                b.u0 = u0;
                ObservationDesign::TwoRun([a, b])
            }
        }
    }

    /// The first run of the design, used by `forward` and `steady`.
    pub fn primary_run(&self) -> RunSetup {
        match self.design() {
            ObservationDesign::TwoRun([a, _]) => a,
            ObservationDesign::TwoTime { run, .. } => run,
        }
    }

    pub fn crime_mode(&self) -> CrimeMode {
        match self.observation.crime {
            Crime::SameGrid => CrimeMode::SameGrid,
            Crime::Refined2x => CrimeMode::Refined2x,
        }
    }

    pub fn reconstruction_options(&self) -> ReconstructionOptions {
        let inv = &self.inverse;
        ReconstructionOptions {
            tol: inv.tol,
            k_max: inv.k_max,
            theta: inv.theta,
            ell_max: inv.ell_max,
            det_floor_rel: inv.det_floor_rel,
            update: match inv.update {
                UpdateChoice::FixedPoint => UpdateForm::FixedPoint,
                UpdateChoice::Discrepancy => UpdateForm::Discrepancy,
            },
            ..ReconstructionOptions::default()
        }
    }

    pub fn initial_guess(&self) -> Result<(Field, Field)> {
        let g = self.space_grid()?;
        Ok((
            Field::constant(g, self.inverse.init_p),
            Field::constant(g, self.inverse.init_q),
        ))
    }
}
