use serde::Serialize;

use super::{CliError, LossKind, ScanSpec};
use crate::error::Error;
use crate::fock_oracle::{
    apply_splitter, derivative_qfim, kraus_completeness, kraus_sum_cij, measure_moments,
    prepare_input, LossModel, DEFAULT_CUTOFF,
};
use crate::moments::{closed_form_correlations, derived_correlations};
use crate::qfim_ideal::qfim_matrix;
use crate::qfim_lossy::{c_matrix_single, c_matrix_two, SingleArmLoss, TwoArmLoss};

const MOMENT_TOL: f64 = 1e-6;
const KRAUS_TOL: f64 = 1e-8;
const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub identity: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub cutoff: usize,
    pub checks: Vec<OracleCheck>,
    /// Set when the oracle refused to run (truncation too coarse).
    pub cutoff_failure: Option<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.cutoff_failure.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!("cutoff {}\n", self.cutoff);
        s.push_str(&format!(
            "{:<28} {:>22} {:>22} {:>10} {:>8}  result\n",
            "identity", "closed form", "oracle", "rel err", "tol"
        ));
        for c in &self.checks {
            s.push_str(&format!(
                "{:<28} {:>22.15e} {:>22.15e} {:>10.2e} {:>8.0e}  {}\n",
                c.identity,
                c.closed_form,
                c.oracle,
                c.rel_error,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
        if let Some(f) = &self.cutoff_failure {
            s.push_str(&format!("cutoff_too_small: {f}\n"));
        }
        s.push_str(if self.passed() { "overall: pass\n" } else { "overall: FAIL\n" });
        s
    }
}

struct Checks {
    list: Vec<OracleCheck>,
    /// Values this far below the overall scale count as agreeing zeros.
    floor: f64,
}

impl Checks {
    fn push(&mut self, identity: impl Into<String>, closed_form: f64, oracle: f64, tolerance: f64) {
        let rel_error = crate::relative_error(closed_form, oracle);
        let passed = rel_error <= tolerance || (closed_form - oracle).abs() <= self.floor;
        self.list.push(OracleCheck {
            identity: identity.into(),
            closed_form,
            oracle,
            rel_error,
            tolerance,
            passed,
        });
    }

    fn push_matrix_check(&mut self, identity: &str, rel_error: f64, tolerance: f64) {
        self.list.push(OracleCheck {
            identity: identity.into(),
            closed_form: 0.0,
            oracle: rel_error,
            rel_error,
            tolerance,
            passed: rel_error <= tolerance,
        });
    }
}

/// Compares closed forms with the truncated-Fock oracle at one point.
/// `tolerance` replaces the default moment (1e-6) and Kraus (1e-8) tolerances.
pub fn oracle_check(spec: &ScanSpec, tolerance: Option<f64>) -> Result<OracleReport, CliError> {
    spec.validate()?;
    if spec.swept_variable.is_some() {
        return Err(CliError::Config("oracle-check takes a single point".into()));
    }
    let params = spec.resolve(None)?;
    let cutoff = match spec.fixed.get("cutoff") {
        None => DEFAULT_CUTOFF,
        Some(&c) if c >= 1.0 && c.fract() == 0.0 && c <= 512.0 => c as usize,
        Some(c) => return Err(CliError::Config(format!("cutoff must be an integer in [1, 512], got {c}"))),
    };
    let moment_tol = tolerance.unwrap_or(MOMENT_TOL);
    let kraus_tol = tolerance.unwrap_or(KRAUS_TOL);

    let refusal = |e: Error| match e {
        Error::CutoffTooSmall { .. } => Ok(OracleReport {
            cutoff,
            checks: Vec::new(),
            cutoff_failure: Some(e.to_string()),
        }),
        other => Err(CliError::Compute {
            context: "oracle".into(),
            source: other,
        }),
    };
    let input = params.input;
    let state = match prepare_input(input.alpha_mag, input.squeeze_r, cutoff)
        .and_then(|s| apply_splitter(&s, &input.splitter))
    {
        Ok(s) => s,
        Err(e) => return refusal(e),
    };
    let closed = input.moments().map_err(|e| CliError::Compute {
        context: "closed-form moments".into(),
        source: e,
    })?;
    let oracle = measure_moments(&state).map_err(|e| CliError::Compute {
        context: "oracle moments".into(),
        source: e,
    })?;

    let scale = [closed.mean_a(), closed.mean_b(), closed.var_a(), closed.var_b()]
        .iter()
        .fold(1f64, |m, x| m.max(x.abs()));
    let mut checks = Checks {
        list: Vec::new(),
        floor: 1e-12 * scale,
    };
    checks.push("mean_a", closed.mean_a(), oracle.mean_a(), moment_tol);
    checks.push("mean_b", closed.mean_b(), oracle.mean_b(), moment_tol);
    checks.push("var_a", closed.var_a(), oracle.var_a(), moment_tol);
    checks.push("var_b", closed.var_b(), oracle.var_b(), moment_tol);
    checks.push("cov", closed.cov(), oracle.cov(), moment_tol);
    if let (Ok(c), Ok(o)) = (closed_form_correlations(&input), derived_correlations(&oracle)) {
        checks.push("Q_a", c.q_a, o.q_a, moment_tol);
        checks.push("Q_b", c.q_b, o.q_b, moment_tol);
        checks.push("J", c.j, o.j, moment_tol);
    }

    let ideal = qfim_matrix(&closed);
    let derivative = derivative_qfim(&state);
    checks.push("qfim f_pp", ideal.f_pp, derivative.f_pp, moment_tol);
    checks.push("qfim f_mm", ideal.f_mm, derivative.f_mm, moment_tol);
    checks.push_matrix_check("qfim matrix (scaled diff)", derivative.max_relative_difference(&ideal), moment_tol);

    if spec.loss != LossKind::None {
        let eta = params.eta.unwrap_or(1.0);
        let gamma = spec.fixed.get("gamma").copied().unwrap_or(-0.5);
        let (model, closed_c) = if spec.loss == LossKind::OneArm {
            let loss = SingleArmLoss::new(eta, gamma).map_err(|e| CliError::Config(e.to_string()))?;
            (LossModel::SingleArm(loss), c_matrix_single(&closed, &loss))
        } else {
            let eta_b = spec.fixed.get("eta_b").copied().unwrap_or(eta);
            let gamma_b = spec.fixed.get("gamma_b").copied().unwrap_or(gamma);
            let loss = TwoArmLoss::new(eta, eta_b, gamma, gamma_b).map_err(|e| CliError::Config(e.to_string()))?;
            (LossModel::TwoArm(loss), c_matrix_two(&closed, &loss))
        };
        let kraus = match kraus_sum_cij(&state, &model) {
            Ok(k) => k,
            Err(e) => return refusal(e),
        };
        checks.push_matrix_check("kraus matrix (scaled diff)", kraus.max_relative_difference(&closed_c), kraus_tol);
        checks.push("kraus c_pp", closed_c.f_pp, kraus.f_pp, kraus_tol);
        checks.push("kraus c_mm", closed_c.f_mm, kraus.f_mm, kraus_tol);
        if eta > 0.0 {
            checks.push("kraus completeness", 1.0, kraus_completeness(&state, &model), COMPLETENESS_TOL);
        }
    }
    Ok(OracleReport {
        cutoff,
        checks: checks.list,
        cutoff_failure: None,
    })
}
