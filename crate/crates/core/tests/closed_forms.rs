//! The long rational expressions for the lossy bounds, written out in terms
//! of means, Mandel Q and J, and compared with the matrix path.

use qfim_bounds::moments::{derived_correlations, InterferometerInput, ModeStatistics, SplitterSpec};
use qfim_bounds::optimizer::{optimize_gamma_with, GammaSearch, LossFamily};
use qfim_bounds::qfim_ideal::{qfim_matrix, two_param_bound, EstimationMode, Target};
use qfim_bounds::qfim_lossy::{
    c_bound, c_bound_two_symmetric, c_matrix_single, gamma_opt_single, high_loss_two_arm,
    limit_bound_single, optimal_bound_single, DissipationRegime, SingleArmLoss,
};
use qfim_bounds::relative_error;

fn stats(alpha: f64, r: f64, splitter: SplitterSpec) -> ModeStatistics {
    InterferometerInput::new(alpha, r, splitter).unwrap().moments().unwrap()
}

fn su2() -> ModeStatistics {
    stats(2.0, 0.5, SplitterSpec::linear(0.7).unwrap())
}

fn su11() -> ModeStatistics {
    stats(2.0, 0.5, SplitterSpec::nonlinear(1.2).unwrap())
}

/// (n_a, n_b, Q_a + 1, Q_b + 1, J)
fn params(s: &ModeStatistics) -> (f64, f64, f64, f64, f64) {
    let c = derived_correlations(s).unwrap();
    (s.mean_a(), s.mean_b(), c.q_a + 1.0, c.q_b + 1.0, c.j)
}

fn upsilon_ratio_form(s: &ModeStatistics, eta: f64, gamma: f64, target: Target) -> f64 {
    let (na, nb, qa, qb, j) = params(s);
    let k = eta + gamma * eta - gamma;
    let loss = (gamma + 1.0).powi(2) * (1.0 - eta) * eta;
    let u0 = na * nb * qb * (loss + k * k * (1.0 - j * j) * qa);
    let u1 = na * qa * k * k + nb * qb + loss * na;
    let u2 = na * qa * k * ((nb * qb) / (na * qa)).sqrt();
    match target {
        Target::PhaseDifference => 4.0 * u0 / (u1 + 2.0 * j * u2),
        Target::PhaseSum => 4.0 * u0 / (u1 - 2.0 * j * u2),
    }
}

fn optimal_form(s: &ModeStatistics, eta: f64, target: Target) -> f64 {
    let (na, nb, qa, qb, j) = params(s);
    let x = eta / (1.0 - eta);
    let jj = j * j;
    let root = ((nb * qb) / (na * qa)).sqrt();
    let sg = match target {
        Target::PhaseDifference => 1.0,
        Target::PhaseSum => -1.0,
    };
    let upsilon = (x * na).powi(2)
        * ((1.0 + 5.0 * jj) / (na * qa)
            + nb * qb / (na * na * qa * qa)
            + jj / (nb * qb)
            + sg * 2.0 * j * (1.0 + jj) / (na * nb * qa * qb).sqrt()
            + sg * 4.0 * j / (na * qa) * root)
        + na * x * (1.0 - jj) * (1.0 + 2.0 * nb * qb / (na * qa) + jj + sg * 4.0 * j * root)
        + (1.0 - jj).powi(2) * nb * qb;
    4.0 * (1.0 - jj) * (na * x * (1.0 - jj) * nb * qb + (na * x).powi(2) * (root + sg * j).powi(2))
        / upsilon
}

fn symmetric_two_arm_form(s: &ModeStatistics, eta: f64, gamma: f64, target: Target) -> f64 {
    let (na, nb, qa, qb, j) = params(s);
    let omega = gamma + 1.0;
    let lam = 1.0 - omega * (1.0 - eta);
    let chi = match target {
        Target::PhaseDifference => na * qa + nb * qb + 2.0 * j * (na * nb * qa * qb).sqrt(),
        Target::PhaseSum => na * qa + nb * qb - 2.0 * j * (na * nb * qa * qb).sqrt(),
    };
    let zeta = (1.0 - j * j) * na * nb * qa * qb;
    let eps = na + nb;
    let tau = na * nb;
    let lambda = na * nb * (qa + qb);
    let w = (1.0 - eta) * eta;
    let upsilon5 = lam.powi(4) * zeta + omega.powi(4) * w * w * tau + lam * lam * omega * omega * w * lambda;
    4.0 * upsilon5 / (lam * lam * chi + omega * omega * w * eps)
}

#[test]
fn ratio_form_matches_matrix_path() {
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        for eta in [0.1, 0.4, 0.6, 0.9] {
            for gamma in [-1.2, -0.7, -0.3, 0.0, 0.4] {
                let m = c_bound(&c_matrix_single(&s, &SingleArmLoss::new(eta, gamma).unwrap()), t).unwrap();
                assert!(relative_error(m, upsilon_ratio_form(&s, eta, gamma, t)) < 1e-10);
            }
        }
    }
}

#[test]
fn optimal_form_matches_substitution() {
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        for eta in [0.1, 0.3, 0.6, 0.9] {
            let sub = optimal_bound_single(&s, eta, t).unwrap();
            assert!(relative_error(sub, optimal_form(&s, eta, t)) < 1e-10, "eta={eta}");
        }
    }
}

#[test]
fn single_arm_example_optimum_matches_minimizer() {
    let wide = GammaSearch { lo: -10.0, hi: 10.0, abs_tol: 1e-8 };
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        let analytic = gamma_opt_single(&s, 0.6, t).unwrap();
        let numeric = optimize_gamma_with(&s, LossFamily::SingleArm { eta: 0.6 }, t, EstimationMode::TwoParameter, &wide).unwrap();
        assert!((analytic - numeric.gamma).abs() <= 1e-6, "{analytic} vs {}", numeric.gamma);
        assert!(relative_error(numeric.minimum, optimal_bound_single(&s, 0.6, t).unwrap()) < 1e-10);
    }
}

#[test]
fn symmetric_two_arm_form_matches_matrix_path() {
    let s = stats(2.0, 0.5, SplitterSpec::linear(0.5).unwrap());
    let m = c_bound_two_symmetric(&s, 0.7, -0.4, Target::PhaseDifference).unwrap();
    assert!(relative_error(m, symmetric_two_arm_form(&s, 0.7, -0.4, Target::PhaseDifference)) < 1e-10);
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        for eta in [0.05, 0.5, 0.95] {
            for gamma in [-1.4, -0.5, 0.2] {
                let m = c_bound_two_symmetric(&s, eta, gamma, t).unwrap();
                assert!(relative_error(m, symmetric_two_arm_form(&s, eta, gamma, t)) < 1e-10);
            }
        }
    }
}

#[test]
fn two_arm_lossless_is_ideal() {
    let s = su11();
    let ideal = two_param_bound(&qfim_matrix(&s), Target::PhaseSum).unwrap();
    assert!(relative_error(c_bound_two_symmetric(&s, 1.0, -0.3, Target::PhaseSum).unwrap(), ideal) < 1e-14);
}

#[test]
fn small_dissipation_limit_is_approached() {
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        let limit = limit_bound_single(&s, 0.5, t, DissipationRegime::SmallDissipation).unwrap();
        let ideal = two_param_bound(&qfim_matrix(&s), t).unwrap();
        assert!(relative_error(limit, ideal) < 1e-12);
        let mut last = f64::INFINITY;
        for eta in [0.9, 0.99, 0.999, 0.9999] {
            let gap = (limit_bound_single(&s, eta, t, DissipationRegime::SmallDissipation).unwrap()
                / optimal_bound_single(&s, eta, t).unwrap()
                - 1.0)
                .abs();
            assert!(gap <= last);
            last = gap;
        }
        assert!(last < 1e-2);
    }
}

#[test]
fn high_dissipation_limit_is_approached() {
    for (s, t) in [(su2(), Target::PhaseDifference), (su11(), Target::PhaseSum)] {
        let mut last = f64::INFINITY;
        for eta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let ratio = limit_bound_single(&s, eta, t, DissipationRegime::HighDissipation).unwrap()
                / optimal_bound_single(&s, eta, t).unwrap();
            assert!((ratio - 1.0).abs() <= last);
            last = (ratio - 1.0).abs();
        }
        assert!(last < 1e-2);
    }
}

#[test]
fn high_loss_two_arm_near_anticorrelated_input() {
    // equal variances, J = -0.99
    let s = ModeStatistics::new(10.0, 10.0, 20.0, 20.0, -19.8).unwrap();
    let search = GammaSearch { lo: -1.5, hi: 60.0, abs_tol: 1e-8 };
    for eta in [0.01, 0.02, 0.05, 0.1] {
        let h = high_loss_two_arm(&s, eta, Target::PhaseDifference).unwrap();
        assert!(h.assumptions_hold);
        let num = optimize_gamma_with(&s, LossFamily::TwoArmSymmetric { eta }, Target::PhaseDifference, EstimationMode::TwoParameter, &search).unwrap();
        assert!(relative_error(h.bound, num.minimum) < 0.05, "eta={eta}: {} vs {}", h.bound, num.minimum);
        let at_gamma = c_bound_two_symmetric(&s, eta, h.gamma, Target::PhaseDifference).unwrap();
        assert!(relative_error(h.bound, at_gamma) < 1e-10);
    }
}

#[test]
fn two_arm_family_endpoint_is_the_ideal_matrix() {
    let s = su2();
    let ideal = two_param_bound(&qfim_matrix(&s), Target::PhaseDifference).unwrap();
    for eta in [0.1, 0.5, 0.9] {
        let at_endpoint = c_bound_two_symmetric(&s, eta, -1.0, Target::PhaseDifference).unwrap();
        assert!(relative_error(at_endpoint, ideal) < 1e-14);
        let best = optimize_gamma_with(
            &s,
            LossFamily::TwoArmSymmetric { eta },
            Target::PhaseDifference,
            EstimationMode::TwoParameter,
            &GammaSearch::default(),
        )
        .unwrap();
        assert!(best.minimum < 0.99 * ideal);
    }
}
