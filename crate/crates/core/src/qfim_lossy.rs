//! Information matrices under photon loss.
//!
//! Loss in an arm with transmission η is purified with a family of Kraus
//! representations labelled by γ (Γ = γ + 1). For each γ the matrix C(γ)
//! upper-bounds the information of the lossy state; minimizing its Schur
//! complement over γ gives the reported bound. Everything here is closed
//! form in the five moments.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::moments::{derived_correlations, ModeStatistics};
use crate::qfim_ideal::{two_param_bound, FisherMatrix, Target};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleArmLoss {
    pub eta_a: f64,
    pub gamma: f64,
}

impl SingleArmLoss {
    pub fn new(eta_a: f64, gamma: f64) -> Result<Self> {
        let loss = SingleArmLoss { eta_a, gamma };
        loss.validate()?;
        Ok(loss)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("eta_a", self.eta_a, 0.0, 1.0)?;
        check_range("gamma", self.gamma, f64::MIN, f64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoArmLoss {
    pub eta_a: f64,
    pub eta_b: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

impl TwoArmLoss {
    pub fn new(eta_a: f64, eta_b: f64, gamma_a: f64, gamma_b: f64) -> Result<Self> {
        let loss = TwoArmLoss {
            eta_a,
            eta_b,
            gamma_a,
            gamma_b,
        };
        loss.validate()?;
        Ok(loss)
    }

    /// Same η and γ in both arms.
    pub fn symmetric(eta: f64, gamma: f64) -> Result<Self> {
        Self::new(eta, eta, gamma, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("eta_a", self.eta_a, 0.0, 1.0)?;
        check_range("eta_b", self.eta_b, 0.0, 1.0)?;
        check_range("gamma_a", self.gamma_a, f64::MIN, f64::MAX)?;
        check_range("gamma_b", self.gamma_b, f64::MIN, f64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DissipationRegime {
    SmallDissipation,
    HighDissipation,
}

pub fn c_matrix_single(stats: &ModeStatistics, loss: &SingleArmLoss) -> FisherMatrix {
    let (eta, gamma) = (loss.eta_a, loss.gamma);
    let k = 1.0 - (gamma + 1.0) * (1.0 - eta);
    let noise = (gamma + 1.0).powi(2) * (1.0 - eta) * eta * stats.mean_a();
    let (va, vb, c) = (stats.var_a(), stats.var_b(), stats.cov());
    FisherMatrix {
        f_pp: k * k * va + vb + 2.0 * k * c + noise,
        f_mm: k * k * va + vb - 2.0 * k * c + noise,
        f_pm: k * k * va + noise - vb,
    }
}

pub fn c_matrix_two(stats: &ModeStatistics, loss: &TwoArmLoss) -> FisherMatrix {
    let big_a = loss.gamma_a + 1.0;
    let big_b = loss.gamma_b + 1.0;
    let ka = 1.0 - big_a * (1.0 - loss.eta_a);
    let kb = 1.0 - big_b * (1.0 - loss.eta_b);
    let xa = ka * ka * stats.var_a() + big_a * big_a * (1.0 - loss.eta_a) * loss.eta_a * stats.mean_a();
    let xb = kb * kb * stats.var_b() + big_b * big_b * (1.0 - loss.eta_b) * loss.eta_b * stats.mean_b();
    let cross = 2.0 * ka * kb * stats.cov();
    FisherMatrix {
        f_pp: xa + xb + cross,
        f_mm: xa + xb - cross,
        f_pm: xa - xb,
    }
}

/// Schur complement of a lossy matrix; same contract as the ideal bound.
pub fn c_bound(cm: &FisherMatrix, target: Target) -> Result<f64> {
    two_param_bound(cm, target)
}

fn check_open_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta_a",
            value: eta,
            reason: "must lie strictly inside (0, 1)",
        });
    }
    Ok(())
}

/// J after checking that means and variances are positive and |J| < 1.
fn strict_correlation(stats: &ModeStatistics) -> Result<f64> {
    if stats.mean_a() <= 0.0 || stats.mean_b() <= 0.0 {
        return Err(Error::DegenerateStatistics("means must be positive".into()));
    }
    let j = derived_correlations(stats)?.j;
    if j.abs() >= 1.0 {
        return Err(Error::DegenerateStatistics(format!("|J| = {} is not below 1", j.abs())));
    }
    Ok(j)
}

/// Stationary point of γ ↦ C bound for single-arm loss.
pub fn gamma_opt_single(stats: &ModeStatistics, eta_a: f64, target: Target) -> Result<f64> {
    check_open_eta(eta_a)?;
    let j = strict_correlation(stats)?;
    let corr = derived_correlations(stats)?;
    let ratio = (stats.mean_a() * (corr.q_a + 1.0) / (stats.mean_b() * (corr.q_b + 1.0))).sqrt();
    let sign = match target {
        Target::PhaseDifference => 1.0,
        Target::PhaseSum => -1.0,
    };
    let denom = (1.0 - eta_a) + eta_a * (1.0 + sign * j * ratio) / ((corr.q_a + 1.0) * (1.0 - j * j));
    if denom.abs() <= 1e-12 {
        return Err(Error::DegenerateStatistics(
            "stationary point is at infinite gamma".into(),
        ));
    }
    Ok(1.0 / denom - 1.0)
}

/// C bound evaluated at the analytic optimum.
pub fn optimal_bound_single(stats: &ModeStatistics, eta_a: f64, target: Target) -> Result<f64> {
    let gamma = gamma_opt_single(stats, eta_a, target)?;
    c_bound(&c_matrix_single(stats, &SingleArmLoss::new(eta_a, gamma)?), target)
}

/// Asymptotic forms of the optimal single-arm bound. Meant for checking the
/// limits, not for production numbers.
pub fn limit_bound_single(
    stats: &ModeStatistics,
    eta_a: f64,
    target: Target,
    regime: DissipationRegime,
) -> Result<f64> {
    check_open_eta(eta_a)?;
    let j = strict_correlation(stats)?;
    let (va, vb) = (stats.var_a(), stats.var_b());
    let rho = (vb / va).sqrt();
    let jj = j * j;
    let s = match target {
        Target::PhaseDifference => 1.0,
        Target::PhaseSum => -1.0,
    };
    match regime {
        DissipationRegime::SmallDissipation => {
            let upsilon = 1.0 + jj / (rho * rho) + rho * rho + s * 2.0 * j * (jj + 1.0) / rho
                + 5.0 * jj
                + s * 4.0 * j * rho;
            Ok(4.0 * (1.0 - jj) * va * (rho + s * j).powi(2) / upsilon)
        }
        DissipationRegime::HighDissipation => {
            let x = eta_a * stats.mean_a() / (1.0 - eta_a);
            let bracket = 1.0 - jj + 2.0 * (j + s * rho).powi(2);
            let over_u = x * x * (1.0 - s * 2.0 * j * rho) * bracket
                - s * x * (1.0 - jj) * vb * (2.0 * j * rho + s * 3.0);
            let over_d = x * bracket + (1.0 - jj) * vb;
            Ok(x * (1.0 - s * 2.0 * j * rho) - over_u / over_d)
        }
    }
}

/// Bound for equal loss in both arms with a common γ.
pub fn c_bound_two_symmetric(
    stats: &ModeStatistics,
    eta: f64,
    gamma: f64,
    target: Target,
) -> Result<f64> {
    c_bound(&c_matrix_two(stats, &TwoArmLoss::symmetric(eta, gamma)?), target)
}

/// High-loss estimate for symmetric two-arm loss, derived assuming equal
/// variances and perfect (anti)correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighLossEstimate {
    pub gamma: f64,
    pub bound: f64,
    /// Ω = γ + 1 at the estimate.
    pub omega: f64,
    /// Λ = 1 − Ω(1 − η).
    pub lambda: f64,
    /// False when the statistics are far from the assumed regime.
    pub assumptions_hold: bool,
}

pub fn high_loss_two_arm(stats: &ModeStatistics, eta: f64, target: Target) -> Result<HighLossEstimate> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::AssumptionViolation(format!(
            "high-loss estimate needs eta in [0, 1), got {eta}"
        )));
    }
    let (ma, mb, va, vb) = (stats.mean_a(), stats.mean_b(), stats.var_a(), stats.var_b());
    let j = stats.correlation()?;
    let tau = ma * mb;
    let lam = mb * va + ma * vb;
    let eps = ma + mb;
    let zeta = (1.0 - j * j) * va * vb;
    let chi = match target {
        Target::PhaseDifference => va + vb + 2.0 * j * (va * vb).sqrt(),
        Target::PhaseSum => va + vb - 2.0 * j * (va * vb).sqrt(),
    };
    let d = eta * tau + (1.0 - eta) * lam;
    if d <= 0.0 {
        return Err(Error::DegenerateStatistics(
            "high-loss denominator vanishes".into(),
        ));
    }
    let omega = lam / d;
    let big_lambda = eta * tau / d;
    let loss = (1.0 - eta) * eta;
    let bound = 4.0
        * (big_lambda.powi(4) * zeta
            + omega.powi(4) * loss * loss * tau
            + big_lambda.powi(2) * omega.powi(2) * loss * lam)
        / (big_lambda.powi(2) * chi + omega.powi(2) * loss * eps);
    let ideal_j = match target {
        Target::PhaseDifference => -1.0,
        Target::PhaseSum => 1.0,
    };
    let assumptions_hold =
        (va - vb).abs() <= 0.05 * va.max(vb) && (j - ideal_j).abs() <= 0.05;
    Ok(HighLossEstimate {
        gamma: omega - 1.0,
        bound,
        omega,
        lambda: big_lambda,
        assumptions_hold,
    })
}
