//! TOML scenario files.
//!
//! ```toml
//! [domain]
//! l1 = 0.0
//! l2 = 5.0
//!
//! [kernel]
//! kind = "gaussian"          # gaussian | truncated_gaussian | uniform | tabulated
//! sigma = 1.0
//!
//! [reaction]
//! kind = "kpp_quadratic"     # h = c0 + c1 x + c2 x² - crowding · u
//! growth = [2.5, 0.0, -0.0625]
//! crowding = 1.0
//!
//! [run]
//! d = 0.26
//! q = 0.5
//! regime = "dirichlet"       # dirichlet | neumann
//! u0 = { kind = "sine", amplitude = 1.0 }
//! ```
//!
//! Kernel fields per kind: `gaussian` takes `sigma`; `truncated_gaussian`
//! takes `sigma`, `cutoff`; `uniform` takes `radius`; `tabulated` takes `xs`,
//! `values` (renormalised to unit mass unless `normalize = false`).
//!
//! Reaction `polynomial` takes `h0` (coefficients of `h(x,0)` in increasing
//! powers of `x`) and `u_coeffs` (`h = h(x,0) + Σ u_coeffs[k] u^(k+1)`).
//! Either kind accepts an explicit `n_bound`.
//!
//! `[run]` also takes the optional solver settings `n_cells` (500), `t_end`
//! (50), `dt`, `tol` (1e-3), `record_every` (`t_end/100`), `scheme`
//! (`euler` | `imex`), `q_lo`, `q_hi` (threshold search start). `u0` kinds:
//! `sine` (`amplitude`), `polynomial` (`coeffs` in powers of `x - l1`),
//! `samples` (`xs`, `values`). Unknown keys are rejected.

use serde::Deserialize;

use crate::evolve::Scheme;
use crate::model::{
    BoundaryRegime, DomainInterval, GrowthLaw, InitialDatum, KernelError, KernelSpec, ReactionSpec, Scenario, TabulatedKernel,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid setting: {0}")]
    Setting(String),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub domain: DomainSection,
    pub kernel: KernelSection,
    pub reaction: ReactionSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSection {
    Gaussian {
        sigma: f64,
    },
    TruncatedGaussian {
        sigma: f64,
        cutoff: f64,
    },
    Uniform {
        radius: f64,
    },
    Tabulated {
        xs: Vec<f64>,
        values: Vec<f64>,
        #[serde(default = "yes")]
        normalize: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSection {
    KppQuadratic {
        growth: [f64; 3],
        crowding: f64,
        n_bound: Option<f64>,
    },
    Polynomial {
        h0: Vec<f64>,
        u_coeffs: Vec<f64>,
        n_bound: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Euler,
    Imex,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Sine { amplitude: f64 },
    Polynomial { coeffs: Vec<f64> },
    Samples { xs: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub d: f64,
    pub q: f64,
    pub regime: RegimeName,
    pub u0: InitialSection,
    pub n_cells: Option<usize>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub record_every: Option<f64>,
    pub scheme: Option<SchemeName>,
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
}

/// Solver settings carried alongside the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub n_cells: usize,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub tol: f64,
    pub record_every: f64,
    pub scheme: Scheme,
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn build(&self) -> Result<(Scenario, RunSettings), ScenarioFileError> {
        let domain = DomainInterval::new(self.domain.l1, self.domain.l2).map_err(|e| ScenarioFileError::Domain(e.to_string()))?;
        let kernel = match &self.kernel {
            KernelSection::Gaussian { sigma } => KernelSpec::Gaussian { sigma: *sigma },
            KernelSection::TruncatedGaussian { sigma, cutoff } => KernelSpec::TruncatedGaussian { sigma: *sigma, cutoff: *cutoff },
            KernelSection::Uniform { radius } => KernelSpec::UniformCompact { radius: *radius },
            KernelSection::Tabulated { xs, values, normalize } => KernelSpec::Tabulated(if *normalize {
                TabulatedKernel::normalized(xs.clone(), values.clone())?
            } else {
                TabulatedKernel::from_samples(xs.clone(), values.clone())?
            }),
        };
        kernel.check_parameters()?;
        let (law, n_bound) = match &self.reaction {
            ReactionSection::KppQuadratic { growth, crowding, n_bound } => (GrowthLaw::kpp_quadratic(*growth, *crowding), *n_bound),
            ReactionSection::Polynomial { h0, u_coeffs, n_bound } => {
                (GrowthLaw::Polynomial { x_coeffs: h0.clone(), u_coeffs: u_coeffs.clone() }, *n_bound)
            }
        };
        let mut reaction = ReactionSpec::new(law, &domain);
        if let Some(n) = n_bound {
            reaction = reaction.with_n_bound(n);
        }
        let run = &self.run;
        let u0 = match &run.u0 {
            InitialSection::Sine { amplitude } => InitialDatum::Sine { amplitude: *amplitude },
            InitialSection::Polynomial { coeffs } => InitialDatum::Polynomial(coeffs.clone()),
            InitialSection::Samples { xs, values } => {
                if xs.len() != values.len() || xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ScenarioFileError::Setting("u0 samples need ≥ 2 increasing xs matching values".into()));
                }
                InitialDatum::Samples { xs: xs.clone(), values: values.clone() }
            }
        };
        let regime = match run.regime {
            RegimeName::Neumann => BoundaryRegime::NeumannNonlocal,
            RegimeName::Dirichlet => BoundaryRegime::DirichletNonlocal,
        };
        let scenario = Scenario { domain, kernel, d: run.d, q: run.q, reaction, regime, u0 };
        let t_end = run.t_end.unwrap_or(50.0);
        let settings = RunSettings {
            n_cells: run.n_cells.unwrap_or(500),
            t_end,
            dt: run.dt,
            tol: run.tol.unwrap_or(1e-3),
            record_every: run.record_every.unwrap_or(t_end / 100.0),
            scheme: match run.scheme.unwrap_or(SchemeName::Euler) {
                SchemeName::Euler => Scheme::Euler,
                SchemeName::Imex => Scheme::Imex,
            },
            q_lo: run.q_lo,
            q_hi: run.q_hi,
        };
        if settings.n_cells < 2 {
            return Err(ScenarioFileError::Setting(format!("n_cells = {}", settings.n_cells)));
        }
        if !(settings.t_end >= 0.0 && settings.tol > 0.0 && settings.record_every >= 0.0) {
            return Err(ScenarioFileError::Setting("t_end, tol and record_every must be nonnegative (tol positive)".into()));
        }
        Ok((scenario, settings))
    }
}

pub fn parse_scenario(text: &str) -> Result<(Scenario, RunSettings), ScenarioFileError> {
    ScenarioFile::parse(text)?.build()
}

pub fn load_scenario(path: &std::path::Path) -> Result<(String, Scenario, RunSettings), ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
    let (scenario, settings) = parse_scenario(&text)?;
    Ok((text, scenario, settings))
}

/// The river example as a scenario file.
pub const RIVER_EXAMPLE_TOML: &str = include_str!("../../../scenarios/river_example.toml");
