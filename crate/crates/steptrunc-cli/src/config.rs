//! Experiment configuration: a flat JSON document, field-level validation,
//! and the canonical hash used to key cached dense reference trajectories.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::CliError;
use steptrunc::integrators::ThresholdSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    AllenCahn,
    FokkerPlanck,
    Nls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    ExpEuler,
    ExpMidpoint,
    Ab2,
    ImpEuler,
    ImpMidpoint,
}

impl SchemeKind {
    pub fn is_implicit(self) -> bool {
        matches!(self, SchemeKind::ImpEuler | SchemeKind::ImpMidpoint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplittingCfg {
    #[default]
    None,
    Lie,
    Strang,
}

/// Threshold-schedule constants; mirrors the integrator defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleCfg {
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub k_imp: f64,
    pub c_comp: f64,
    pub eta: f64,
}

impl Default for ScheduleCfg {
    fn default() -> Self {
        let s = ThresholdSchedule::default();
        Self {
            k1: s.k1,
            k2: s.k2,
            a: s.a,
            b: s.b,
            g: s.g,
            k_imp: s.k_imp,
            c_comp: s.c_comp,
            eta: s.eta,
        }
    }
}

impl From<&ScheduleCfg> for ThresholdSchedule {
    fn from(c: &ScheduleCfg) -> Self {
        ThresholdSchedule {
            k1: c.k1,
            k2: c.k2,
            a: c.a,
            b: c.b,
            g: c.g,
            k_imp: c.k_imp,
            c_comp: c.c_comp,
            eta: c.eta,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceCfg {
    #[default]
    None,
    Dense {
        abs_tol: f64,
    },
}

fn default_d() -> usize {
    2
}
fn default_eps_diff() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    2.0
}
fn default_theta() -> f64 {
    0.1
}
fn default_eps_nl() -> f64 {
    1e-4
}
fn default_newton_max_iters() -> usize {
    50
}
fn default_gmres_restart_len() -> usize {
    12
}
fn default_gmres_max_restarts() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Points per mode.
    pub n: usize,
    /// Dimension; fixed to 2 for Allen-Cahn.
    #[serde(default = "default_d")]
    pub d: usize,
    /// Allen-Cahn diffusion coefficient.
    #[serde(default = "default_eps_diff")]
    pub eps_diff: f64,
    /// Fokker-Planck noise amplitude.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Schrödinger mollifier width.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Schrödinger interaction strength.
    #[serde(default = "default_eps_nl")]
    pub eps_nl: f64,
    /// Smoke-test switch: replace the right-hand side with zero so a step
    /// must reproduce the initial state exactly.
    #[serde(default)]
    pub g_null: bool,
    pub scheme: SchemeKind,
    #[serde(default)]
    pub splitting: SplittingCfg,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub schedule: ScheduleCfg,
    #[serde(default = "default_newton_max_iters")]
    pub newton_max_iters: usize,
    #[serde(default = "default_gmres_restart_len")]
    pub gmres_restart_len: usize,
    #[serde(default = "default_gmres_max_restarts")]
    pub gmres_max_restarts: usize,
    #[serde(default)]
    pub reference: ReferenceCfg,
    /// Per-step results; stdout when omitted.
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
    /// Directory for cached dense reference trajectories.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Optional steady-state stop: halt once `‖G(f)‖` drops below this.
    #[serde(default)]
    pub steady_stop: Option<f64>,
    /// Optional relative truncation of the initial state before the first
    /// step, so a large-Δt run does not carry initial-data ranks far below
    /// its own accuracy level.
    #[serde(default)]
    pub initial_round: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, why: String| -> Result<(), CliError> {
            Err(CliError::Validation(format!("field `{field}`: {why}")))
        };
        if !(self.dt > 0.0) {
            return fail("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt) {
            return fail("t_final", format!("must be >= dt, got {}", self.t_final));
        }
        if self.n < 4 {
            return fail("n", format!("must be >= 4, got {}", self.n));
        }
        match self.problem {
            ProblemKind::AllenCahn => {
                if self.d != 2 {
                    return fail("d", format!("allen_cahn is two-dimensional, got {}", self.d));
                }
                if self.eps_diff < 0.0 {
                    return fail("eps_diff", format!("must be >= 0, got {}", self.eps_diff));
                }
            }
            ProblemKind::FokkerPlanck => {
                if self.d < 2 {
                    return fail("d", format!("must be >= 2, got {}", self.d));
                }
                if self.sigma < 0.0 {
                    return fail("sigma", format!("must be >= 0, got {}", self.sigma));
                }
            }
            ProblemKind::Nls => {
                if self.d < 2 {
                    return fail("d", format!("must be >= 2, got {}", self.d));
                }
                if !(self.theta > 0.0) {
                    return fail("theta", format!("must be positive, got {}", self.theta));
                }
            }
        }
        let s = &self.schedule;
        for (name, v) in [
            ("schedule.k1", s.k1),
            ("schedule.k2", s.k2),
            ("schedule.a", s.a),
            ("schedule.b", s.b),
            ("schedule.g", s.g),
            ("schedule.k_imp", s.k_imp),
            ("schedule.c_comp", s.c_comp),
            ("schedule.eta", s.eta),
        ] {
            if !(v > 0.0) {
                return fail(name, format!("must be positive, got {v}"));
            }
        }
        if !(s.eta < 1.0) {
            return fail("schedule.eta", format!("must be < 1, got {}", s.eta));
        }
        if self.newton_max_iters == 0 {
            return fail("newton_max_iters", "must be >= 1".into());
        }
        if self.gmres_restart_len == 0 {
            return fail("gmres_restart_len", "must be >= 1".into());
        }
        if let ReferenceCfg::Dense { abs_tol } = self.reference {
            if !(abs_tol > 0.0) {
                return fail("reference.dense.abs_tol", format!("must be positive, got {abs_tol}"));
            }
        }
        if let Some(th) = self.steady_stop {
            if !(th > 0.0) {
                return fail("steady_stop", format!("must be positive, got {th}"));
            }
        }
        if let Some(tol) = self.initial_round {
            if !(tol > 0.0 && tol < 1.0) {
                return fail("initial_round", format!("must be in (0,1), got {tol}"));
            }
        }
        Ok(())
    }

    /// True when two configs discretize the same problem on the same grid
    /// over the same time window (used by the stability comparison).
    pub fn same_problem(&self, other: &Self) -> bool {
        self.problem == other.problem
            && self.n == other.n
            && self.d == other.d
            && self.eps_diff == other.eps_diff
            && self.sigma == other.sigma
            && self.theta == other.theta
            && self.eps_nl == other.eps_nl
            && self.g_null == other.g_null
            && self.dt == other.dt
            && self.t_final == other.t_final
    }

    /// Content hash identifying the dense reference trajectory this config
    /// needs: problem, grid, time window, step size, and tolerance.
    pub fn reference_key(&self, abs_tol: f64) -> String {
        let payload = serde_json::json!({
            "problem": self.problem,
            "n": self.n,
            "d": self.d,
            "eps_diff": self.eps_diff,
            "sigma": self.sigma,
            "theta": self.theta,
            "eps_nl": self.eps_nl,
            "g_null": self.g_null,
            "dt": self.dt,
            "t_final": self.t_final,
            "abs_tol": abs_tol,
        });
        let digest = Sha256::digest(payload.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
