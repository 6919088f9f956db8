//! Bounded one-dimensional minimization and the γ searches built on it.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::moments::ModeStatistics;
use crate::qfim_ideal::{information, EstimationMode, Target};
use crate::qfim_lossy::{c_matrix_single, c_matrix_two, SingleArmLoss, TwoArmLoss};

pub const GRID_POINTS: usize = 129;
pub const MAX_EVALUATIONS: usize = 10_000;
const MAX_SWEEPS: usize = 50;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub argmin: f64,
    pub minimum: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(f64) -> f64> Counted<F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evaluations += 1;
        let value = (self.f)(x);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { x, value });
        }
        Ok(value)
    }
}

/// Grid scan over `GRID_POINTS` points, golden-section refinement of the
/// bracket around the best grid point, then a few guarded Newton steps on
/// finite differences to remove the residual bias golden section leaves on
/// very flat minima. Ties go to the lowest x.
pub fn minimize_scalar<F>(objective: F, lo: f64, hi: f64, abs_tol: f64) -> Result<OptimizationResult>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter {
            name: "interval",
            value: hi - lo,
            reason: "need finite lo < hi",
        });
    }
    check_range("abs_tol", abs_tol, f64::MIN_POSITIVE, f64::INFINITY)?;
    let mut f = Counted {
        f: objective,
        evaluations: 0,
    };

    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid_x = |i: usize| {
        if i == GRID_POINTS - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let mut best_i = 0;
    let mut grid_min = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let v = f.eval(grid_x(i))?;
        if v < grid_min {
            grid_min = v;
            best_i = i;
        }
    }
    let mut best_x = grid_x(best_i);
    let mut best_f = grid_min;

    let mut a = grid_x(best_i.saturating_sub(1));
    let mut b = grid_x((best_i + 1).min(GRID_POINTS - 1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f.eval(c)?;
    let mut fd = f.eval(d)?;
    let mut converged = true;
    while b - a > abs_tol {
        if f.evaluations >= MAX_EVALUATIONS {
            converged = false;
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f.eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f.eval(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best_f || (v == best_f && x < best_x) {
            best_x = x;
            best_f = v;
        }
    }

    if converged {
        let width = hi - lo;
        'polish: for rel_h in [1e-4, 1e-5] {
            let h = rel_h * width;
            for _ in 0..3 {
                if best_x - h < lo || best_x + h > hi || f.evaluations + 3 > MAX_EVALUATIONS {
                    break 'polish;
                }
                let fp = f.eval(best_x + h)?;
                let fm = f.eval(best_x - h)?;
                let curvature = fp - 2.0 * best_f + fm;
                if !(curvature > 0.0) {
                    break;
                }
                let delta = -0.5 * h * (fp - fm) / curvature;
                if delta.abs() > 2.0 * step || delta.abs() < abs_tol * 1e-3 {
                    break;
                }
                let x = (best_x + delta).clamp(lo, hi);
                let v = f.eval(x)?;
                if v <= best_f + 1e-12 * best_f.abs() && v <= grid_min {
                    best_x = x;
                    best_f = v;
                } else {
                    break;
                }
            }
        }
    }

    Ok(OptimizationResult {
        argmin: best_x,
        minimum: best_f,
        evaluations: f.evaluations,
        converged,
    })
}

/// Interval and tolerance for γ searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    pub lo: f64,
    pub hi: f64,
    pub abs_tol: f64,
}

impl Default for GammaSearch {
    fn default() -> Self {
        GammaSearch {
            lo: -1.5,
            hi: 0.5,
            abs_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossFamily {
    SingleArm { eta: f64 },
    TwoArmSymmetric { eta: f64 },
    TwoArmIndependent { eta_a: f64, eta_b: f64 },
}

/// Result of a γ search. `gamma_b` is set only for independent two-arm loss,
/// where `gamma` is the arm-a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaOptimum {
    pub gamma: f64,
    pub gamma_b: Option<f64>,
    pub minimum: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimum of the two-parameter bound over γ on the default window.
pub fn optimize_gamma(stats: &ModeStatistics, family: LossFamily, target: Target) -> Result<GammaOptimum> {
    optimize_gamma_with(stats, family, target, EstimationMode::TwoParameter, &GammaSearch::default())
}

/// Minimum over γ of either the diagonal element (single-parameter) or the
/// Schur complement (two-parameter) of the lossy matrix.
pub fn optimize_gamma_with(
    stats: &ModeStatistics,
    family: LossFamily,
    target: Target,
    mode: EstimationMode,
    search: &GammaSearch,
) -> Result<GammaOptimum> {
    let info = |m| information(&m, target, mode).unwrap_or(f64::NAN);
    match family {
        LossFamily::SingleArm { eta } => {
            SingleArmLoss::new(eta, 0.0)?;
            let r = minimize_scalar(
                |g| info(c_matrix_single(stats, &SingleArmLoss { eta_a: eta, gamma: g })),
                search.lo,
                search.hi,
                search.abs_tol,
            )?;
            Ok(GammaOptimum {
                gamma: r.argmin,
                gamma_b: None,
                minimum: r.minimum,
                evaluations: r.evaluations,
                converged: r.converged,
            })
        }
        LossFamily::TwoArmSymmetric { eta } => {
            TwoArmLoss::symmetric(eta, 0.0)?;
            let r = minimize_scalar(
                |g| {
                    info(c_matrix_two(
                        stats,
                        &TwoArmLoss {
                            eta_a: eta,
                            eta_b: eta,
                            gamma_a: g,
                            gamma_b: g,
                        },
                    ))
                },
                search.lo,
                search.hi,
                search.abs_tol,
            )?;
            Ok(GammaOptimum {
                gamma: r.argmin,
                gamma_b: None,
                minimum: r.minimum,
                evaluations: r.evaluations,
                converged: r.converged,
            })
        }
        LossFamily::TwoArmIndependent { eta_a, eta_b } => {
            TwoArmLoss::new(eta_a, eta_b, 0.0, 0.0)?;
            let objective = |ga: f64, gb: f64| {
                info(c_matrix_two(
                    stats,
                    &TwoArmLoss {
                        eta_a,
                        eta_b,
                        gamma_a: ga,
                        gamma_b: gb,
                    },
                ))
            };
            let start = minimize_scalar(|g| objective(g, g), search.lo, search.hi, search.abs_tol)?;
            let (mut ga, mut gb) = (start.argmin, start.argmin);
            let mut minimum = start.minimum;
            let mut evaluations = start.evaluations;
            let mut converged = false;
            for _ in 0..MAX_SWEEPS {
                let ra = minimize_scalar(|g| objective(g, gb), search.lo, search.hi, search.abs_tol)?;
                let rb = minimize_scalar(|g| objective(ra.argmin, g), search.lo, search.hi, search.abs_tol)?;
                evaluations += ra.evaluations + rb.evaluations;
                let moved = (ra.argmin - ga).abs().max((rb.argmin - gb).abs());
                // keep the previous point if a sweep did not improve it
                if rb.minimum <= minimum {
                    ga = ra.argmin;
                    gb = rb.argmin;
                    minimum = rb.minimum;
                }
                if moved < search.abs_tol {
                    converged = ra.converged && rb.converged;
                    break;
                }
            }
            Ok(GammaOptimum {
                gamma: ga,
                gamma_b: Some(gb),
                minimum,
                evaluations,
                converged,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = minimize_scalar(|g| (g + 0.3).powi(2), -1.5, 0.5, 1e-8).unwrap();
        assert!((r.argmin + 0.3).abs() <= 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn cosine() {
        let r = minimize_scalar(f64::cos, 0.0, 6.0, 1e-8).unwrap();
        assert!((r.argmin - std::f64::consts::PI).abs() <= 1e-7);
    }

    #[test]
    fn minimum_on_the_boundary() {
        let r = minimize_scalar(|x| x, -1.0, 2.0, 1e-9).unwrap();
        assert_eq!(r.argmin, -1.0);
        let r = minimize_scalar(|x| -x, -1.0, 2.0, 1e-9).unwrap();
        assert!((r.argmin - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn constant_objective_converges() {
        let r = minimize_scalar(|_| 3.0, -1.5, 0.5, 1e-8).unwrap();
        assert!(r.converged);
        assert_eq!(r.minimum, 3.0);
        assert!(r.argmin >= -1.5 && r.argmin <= -1.5 + 2.0 / 128.0);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let e = minimize_scalar(|x| if x > 0.0 { f64::NAN } else { x * x }, -1.0, 1.0, 1e-8);
        assert!(matches!(e, Err(Error::NonFiniteObjective { .. })));
    }

    #[test]
    fn bad_interval() {
        assert!(minimize_scalar(|x| x, 1.0, 1.0, 1e-8).is_err());
        assert!(minimize_scalar(|x| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn picks_the_deeper_basin() {
        let f = |x: f64| (x * x - 1.0).powi(2) + 0.2 * x;
        let r = minimize_scalar(f, -2.0, 2.0, 1e-10).unwrap();
        assert!(r.argmin < 0.0);
    }
}
