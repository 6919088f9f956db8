//! Lossless information matrix in the (φ+, φ−) basis and its Schur bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::ModeStatistics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    PhaseSum,
    PhaseDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimationMode {
    SingleParameter,
    TwoParameter,
}

/// Symmetric 2x2 matrix over (φ+, φ−). Used for both the ideal F and the
/// lossy C matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub f_pp: f64,
    pub f_mm: f64,
    pub f_pm: f64,
}

impl FisherMatrix {
    pub fn new(f_pp: f64, f_mm: f64, f_pm: f64) -> Self {
        FisherMatrix { f_pp, f_mm, f_pm }
    }

    /// Threshold below which a denominator is treated as zero.
    pub fn tol(&self) -> f64 {
        1e-12 * 1f64.max(self.f_pp).max(self.f_mm)
    }

    /// Information about `target` when the other phase is known.
    pub fn diagonal(&self, target: Target) -> f64 {
        match target {
            Target::PhaseSum => self.f_pp,
            Target::PhaseDifference => self.f_mm,
        }
    }

    /// The diagonal element of the nuisance parameter.
    pub fn complementary(&self, target: Target) -> f64 {
        match target {
            Target::PhaseSum => self.f_mm,
            Target::PhaseDifference => self.f_pp,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.f_pp * self.f_mm - self.f_pm * self.f_pm
    }

    /// Positive semidefinite up to a slack of 1e-10 relative to the largest
    /// diagonal element (squared, so the test is scale invariant).
    pub fn is_psd(&self) -> bool {
        let scale = self.f_pp.abs().max(self.f_mm.abs());
        self.f_pp >= -1e-10 * scale
            && self.f_mm >= -1e-10 * scale
            && self.determinant() >= -1e-10 * scale * scale
    }

    /// Largest elementwise difference, normalized by the largest element
    /// magnitude of either matrix.
    pub fn max_relative_difference(&self, other: &FisherMatrix) -> f64 {
        let scale = [self.f_pp, self.f_mm, self.f_pm, other.f_pp, other.f_mm, other.f_pm]
            .iter()
            .fold(0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let diff = (self.f_pp - other.f_pp)
            .abs()
            .max((self.f_mm - other.f_mm).abs())
            .max((self.f_pm - other.f_pm).abs());
        diff / scale
    }
}

/// Full bound record: the information, the resulting Δφ and what it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionBound {
    pub info: f64,
    pub delta_phi: f64,
    pub mode: EstimationMode,
    pub target: Target,
    pub repeats: u32,
}

pub fn qfim_matrix(stats: &ModeStatistics) -> FisherMatrix {
    let (va, vb, c) = (stats.var_a(), stats.var_b(), stats.cov());
    FisherMatrix {
        f_pp: va + vb + 2.0 * c,
        f_mm: va + vb - 2.0 * c,
        f_pm: va - vb,
    }
}

/// Schur correction f_pm²/complementary, with the 0/0 case resolved to 0.
pub fn overestimation(fm: &FisherMatrix, target: Target) -> Result<f64> {
    let tol = fm.tol();
    let comp = fm.complementary(target);
    if fm.f_pm.abs() <= tol {
        if comp <= tol {
            return Ok(0.0);
        }
        return Ok(fm.f_pm * fm.f_pm / comp);
    }
    if comp <= tol {
        return Err(Error::SingularComplement {
            diagonal: comp,
            off_diagonal: fm.f_pm,
        });
    }
    Ok(fm.f_pm * fm.f_pm / comp)
}

/// Information about `target` when the other phase is estimated jointly.
pub fn two_param_bound(fm: &FisherMatrix, target: Target) -> Result<f64> {
    Ok(fm.diagonal(target) - overestimation(fm, target)?)
}

/// Information for the requested estimation mode.
pub fn information(fm: &FisherMatrix, target: Target, mode: EstimationMode) -> Result<f64> {
    match mode {
        EstimationMode::SingleParameter => Ok(fm.diagonal(target)),
        EstimationMode::TwoParameter => two_param_bound(fm, target),
    }
}

/// Δφ = 1/√(m F).
pub fn qcrb(
    info: f64,
    repeats: u32,
    mode: EstimationMode,
    target: Target,
) -> Result<PrecisionBound> {
    if !(info > 0.0) || !info.is_finite() {
        return Err(Error::NonpositiveInformation(info));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter {
            name: "repeats",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    Ok(PrecisionBound {
        info,
        delta_phi: 1.0 / (repeats as f64 * info).sqrt(),
        mode,
        target,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{InterferometerInput, SplitterSpec};

    #[test]
    fn matrix_elements() {
        let s = ModeStatistics::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(qfim_matrix(&s), FisherMatrix::new(2.0, 2.0, 0.0));
        let s = ModeStatistics::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(qfim_matrix(&s), FisherMatrix::new(4.0, 0.0, 0.0));
    }

    #[test]
    fn diagonal_matrix_has_no_correction() {
        let m = FisherMatrix::new(2.0, 2.0, 0.0);
        assert_eq!(two_param_bound(&m, Target::PhaseDifference).unwrap(), 2.0);
    }

    #[test]
    fn schur_arithmetic() {
        let m = FisherMatrix::new(4.0, 2.0, 1.0);
        assert_eq!(overestimation(&m, Target::PhaseDifference).unwrap(), 0.25);
        assert_eq!(two_param_bound(&m, Target::PhaseDifference).unwrap(), 1.75);
        assert_eq!(two_param_bound(&m, Target::PhaseSum).unwrap(), 3.5);
    }

    #[test]
    fn zero_over_zero_resolves_to_diagonal() {
        let m = FisherMatrix::new(4.0, 0.0, 0.0);
        assert_eq!(two_param_bound(&m, Target::PhaseSum).unwrap(), 4.0);
        assert_eq!(two_param_bound(&m, Target::PhaseDifference).unwrap(), 0.0);
    }

    #[test]
    fn singular_complement_is_an_error() {
        let m = FisherMatrix::new(0.0, 2.0, 1.0);
        assert!(matches!(
            two_param_bound(&m, Target::PhaseDifference),
            Err(Error::SingularComplement { .. })
        ));
    }

    #[test]
    fn qcrb_arithmetic() {
        let b = qcrb(100.0, 1, EstimationMode::TwoParameter, Target::PhaseSum).unwrap();
        assert!((b.delta_phi - 0.1).abs() < 1e-15);
        let b = qcrb(25.0, 4, EstimationMode::TwoParameter, Target::PhaseSum).unwrap();
        assert!((b.delta_phi - 0.1).abs() < 1e-15);
        assert!(qcrb(0.0, 1, EstimationMode::SingleParameter, Target::PhaseSum).is_err());
    }

    #[test]
    fn equal_variances_remove_overestimation() {
        let s = ModeStatistics::new(3.0, 2.0, 5.0, 5.0, 1.5).unwrap();
        let m = qfim_matrix(&s);
        assert_eq!(overestimation(&m, Target::PhaseSum).unwrap(), 0.0);
        assert_eq!(overestimation(&m, Target::PhaseDifference).unwrap(), 0.0);
    }

    #[test]
    fn ratio_forms() {
        let input = InterferometerInput::new(2.0, 0.5, SplitterSpec::nonlinear(1.2).unwrap()).unwrap();
        let s = input.moments().unwrap();
        let (va, vb, c) = (s.var_a(), s.var_b(), s.cov());
        let m = qfim_matrix(&s);
        let sum = 4.0 * (va * vb - c * c) / (va + vb - 2.0 * c);
        assert!(crate::relative_error(two_param_bound(&m, Target::PhaseSum).unwrap(), sum) < 1e-12);

        let input = InterferometerInput::new(2.0, 0.5, SplitterSpec::linear(0.7).unwrap()).unwrap();
        let s = input.moments().unwrap();
        let (va, vb, c) = (s.var_a(), s.var_b(), s.cov());
        let m = qfim_matrix(&s);
        let over = (va - vb).powi(2) / (va + vb + 2.0 * c);
        assert!(
            crate::relative_error(overestimation(&m, Target::PhaseDifference).unwrap(), over) < 1e-12
        );
    }
}
