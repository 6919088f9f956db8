//! Photon-number statistics of the two-mode state after the first splitter.
//!
//! The worked input is a coherent state |α⟩ on mode a and squeezed vacuum on
//! mode b. Phase matching is fixed (2θ_α − θ_r = 0 through a linear splitter,
//! 2θ_g − 2θ_α − θ_r = π through a nonlinear one), so only magnitudes are
//! stored. Arbitrary statistics can be injected through [`ModeStatistics::new`].

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Relative slack allowed on the Cauchy-Schwarz bound and on J overshoot.
const CORRELATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitterSpec {
    /// Passive beam splitter with transmissivity T, reflectivity R = 1 − T.
    Linear { transmissivity: f64 },
    /// Two-mode squeezer with amplitude gain G ≥ 1, g² = G² − 1.
    Nonlinear { gain: f64 },
}

impl SplitterSpec {
    pub fn linear(transmissivity: f64) -> Result<Self> {
        check_range("transmissivity", transmissivity, 0.0, 1.0)?;
        Ok(SplitterSpec::Linear { transmissivity })
    }

    pub fn nonlinear(gain: f64) -> Result<Self> {
        check_range("gain", gain, 1.0, f64::INFINITY)?;
        Ok(SplitterSpec::Nonlinear { gain })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitterSpec::Linear { transmissivity } => {
                check_range("transmissivity", transmissivity, 0.0, 1.0)
            }
            SplitterSpec::Nonlinear { gain } => check_range("gain", gain, 1.0, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerInput {
    pub alpha_mag: f64,
    pub squeeze_r: f64,
    pub splitter: SplitterSpec,
}

impl InterferometerInput {
    pub fn new(alpha_mag: f64, squeeze_r: f64, splitter: SplitterSpec) -> Result<Self> {
        let input = InterferometerInput {
            alpha_mag,
            squeeze_r,
            splitter,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("alpha_mag", self.alpha_mag, 0.0, f64::INFINITY)?;
        check_range("squeeze_r", self.squeeze_r, 0.0, f64::INFINITY)?;
        self.splitter.validate()
    }

    /// Closed-form moments for whichever splitter the input carries.
    pub fn moments(&self) -> Result<ModeStatistics> {
        match self.splitter {
            SplitterSpec::Linear { .. } => lbs_moments(self),
            SplitterSpec::Nonlinear { .. } => nbs_moments(self),
        }
    }
}

/// ⟨n_a⟩, ⟨n_b⟩, ⟨Δ²n_a⟩, ⟨Δ²n_b⟩ and Cov[n_a, n_b].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeStatistics {
    mean_a: f64,
    mean_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
}

impl ModeStatistics {
    pub fn new(mean_a: f64, mean_b: f64, var_a: f64, var_b: f64, cov: f64) -> Result<Self> {
        check_range("mean_a", mean_a, 0.0, f64::INFINITY)?;
        check_range("mean_b", mean_b, 0.0, f64::INFINITY)?;
        check_range("var_a", var_a, 0.0, f64::INFINITY)?;
        check_range("var_b", var_b, 0.0, f64::INFINITY)?;
        if !cov.is_finite() || cov * cov > var_a * var_b * (1.0 + CORRELATION_SLACK) {
            return Err(Error::InvalidParameter {
                name: "cov",
                value: cov,
                reason: "violates |cov| <= sqrt(var_a var_b)",
            });
        }
        Ok(ModeStatistics {
            mean_a,
            mean_b,
            var_a,
            var_b,
            cov,
        })
    }

    pub fn mean_a(&self) -> f64 {
        self.mean_a
    }
    pub fn mean_b(&self) -> f64 {
        self.mean_b
    }
    pub fn var_a(&self) -> f64 {
        self.var_a
    }
    pub fn var_b(&self) -> f64 {
        self.var_b
    }
    pub fn cov(&self) -> f64 {
        self.cov
    }

    /// Linear correlation coefficient cov/√(var_a var_b).
    pub fn correlation(&self) -> Result<f64> {
        if self.var_a <= 0.0 || self.var_b <= 0.0 {
            return Err(Error::DegenerateStatistics(format!(
                "J needs positive variances, got var_a={} var_b={}",
                self.var_a, self.var_b
            )));
        }
        clamp_correlation(self.cov / (self.var_a * self.var_b).sqrt())
    }
}

fn clamp_correlation(j: f64) -> Result<f64> {
    if j.abs() <= 1.0 {
        Ok(j)
    } else if j.abs() <= 1.0 + CORRELATION_SLACK {
        Ok(j.signum())
    } else {
        Err(Error::DegenerateStatistics(format!("|J| = {} exceeds 1", j.abs())))
    }
}

fn mandel_q(mean: f64, var: f64, which: &str) -> Result<f64> {
    if mean <= 0.0 {
        return Err(Error::DegenerateStatistics(format!(
            "Q_{which} needs a positive mean, got {mean}"
        )));
    }
    Ok((var - mean) / mean)
}

/// Mandel parameters of both arms and the intermode correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub q_a: f64,
    pub q_b: f64,
    pub j: f64,
}

pub fn derived_correlations(stats: &ModeStatistics) -> Result<Correlations> {
    Ok(Correlations {
        q_a: mandel_q(stats.mean_a, stats.var_a, "a")?,
        q_b: mandel_q(stats.mean_b, stats.var_b, "b")?,
        j: stats.correlation()?,
    })
}

fn wrong_splitter(expected: &'static str) -> Error {
    Error::InvalidParameter {
        name: "splitter",
        value: f64::NAN,
        reason: expected,
    }
}

pub fn lbs_moments(input: &InterferometerInput) -> Result<ModeStatistics> {
    input.validate()?;
    let SplitterSpec::Linear { transmissivity: t } = input.splitter else {
        return Err(wrong_splitter("expected a linear splitter"));
    };
    let rr = 1.0 - t;
    let n = input.alpha_mag * input.alpha_mag;
    let r = input.squeeze_r;
    let s2 = r.sinh().powi(2);
    let c2 = r.cosh().powi(2);
    let e2r = (2.0 * r).exp();

    let mean_a = t * n + rr * s2;
    let mean_b = rr * n + t * s2;
    let shared = t * rr * (n * e2r + s2);
    let var_a = t * t * n + 2.0 * rr * rr * s2 * c2 + shared;
    let var_b = rr * rr * n + 2.0 * t * t * s2 * c2 + shared;
    let cov = t * rr * (n * (1.0 - e2r) + s2 * (2.0 * r).cosh());
    ModeStatistics::new(mean_a, mean_b, var_a, var_b, cov)
}

pub fn nbs_moments(input: &InterferometerInput) -> Result<ModeStatistics> {
    input.validate()?;
    let SplitterSpec::Nonlinear { gain } = input.splitter else {
        return Err(wrong_splitter("expected a nonlinear splitter"));
    };
    let big = gain * gain;
    let small = big - 1.0;
    let n = input.alpha_mag * input.alpha_mag;
    let r = input.squeeze_r;
    let s2 = r.sinh().powi(2);
    let c2 = r.cosh().powi(2);
    let e2r = (2.0 * r).exp();

    let mean_a = big * n + small * c2;
    let mean_b = big * s2 + small * (n + 1.0);
    let shared = big * small * (n * e2r + c2);
    let var_a = big * big * n + 2.0 * small * small * s2 * c2 + shared;
    let var_b = small * small * n + 2.0 * big * big * s2 * c2 + shared;
    let cov = big * small * (n * (1.0 + e2r) + c2 * (2.0 * r).cosh());
    ModeStatistics::new(mean_a, mean_b, var_a, var_b, cov)
}

/// Q_a, Q_b and J written directly in terms of |α|, r and the splitter
/// parameters, independent of the moment formulas above.
pub fn closed_form_correlations(input: &InterferometerInput) -> Result<Correlations> {
    input.validate()?;
    let n = input.alpha_mag * input.alpha_mag;
    let r = input.squeeze_r;
    let s2 = r.sinh().powi(2);
    let c2 = r.cosh().powi(2);
    let e2r = (2.0 * r).exp();
    let ch2r = (2.0 * r).cosh();

    let (qa_num, qa_den, qb_num, qb_den, j_num, j_da, j_db) = match input.splitter {
        SplitterSpec::Linear { transmissivity: t } => {
            let rr = 1.0 - t;
            (
                rr * (t * n * (e2r - 1.0) + rr * s2 * ch2r),
                t * n + rr * s2,
                t * (rr * n * (e2r - 1.0) + t * s2 * ch2r),
                rr * n + t * s2,
                t * rr * (n * (1.0 - e2r) + s2 * ch2r),
                t * n * (t + rr * e2r) + rr * s2 * (t + 2.0 * rr * c2),
                rr * n * (rr + t * e2r) + t * s2 * (rr + 2.0 * t * c2),
            )
        }
        SplitterSpec::Nonlinear { gain } => {
            let big = gain * gain;
            let small = big - 1.0;
            (
                small * (big * n * (1.0 + e2r) + small * c2 * ch2r),
                big * n + small * c2,
                big * s2 * (2.0 * big * c2 + small - 1.0)
                    + small * (small * (n + 1.0) + n * (big * e2r - 1.0)),
                big * s2 + small * (n + 1.0),
                big * small * (n * (1.0 + e2r) + c2 * ch2r),
                big * n * (big + small * e2r) + small * c2 * (big + 2.0 * small * s2),
                small * n * (small + big * e2r) + big * c2 * (small + 2.0 * big * s2),
            )
        }
    };
    if qa_den <= 0.0 || qb_den <= 0.0 || j_da <= 0.0 || j_db <= 0.0 {
        return Err(Error::DegenerateStatistics(
            "closed-form Q or J has a vanishing denominator".into(),
        ));
    }
    Ok(Correlations {
        q_a: qa_num / qa_den,
        q_b: qb_num / qb_den,
        j: clamp_correlation(j_num / (j_da * j_db).sqrt())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbs(alpha: f64, r: f64, t: f64) -> ModeStatistics {
        let input = InterferometerInput::new(alpha, r, SplitterSpec::linear(t).unwrap()).unwrap();
        lbs_moments(&input).unwrap()
    }

    fn nbs(alpha: f64, r: f64, g: f64) -> ModeStatistics {
        let input =
            InterferometerInput::new(alpha, r, SplitterSpec::nonlinear(g).unwrap()).unwrap();
        nbs_moments(&input).unwrap()
    }

    #[test]
    fn transparent_splitter_keeps_coherent_state() {
        let s = lbs(2.0, 0.0, 1.0);
        assert_eq!(
            (s.mean_a(), s.mean_b(), s.var_a(), s.var_b(), s.cov()),
            (4.0, 0.0, 4.0, 0.0, 0.0)
        );
    }

    #[test]
    fn vacuum_has_zero_moments() {
        for t in [0.0, 0.3, 1.0] {
            let s = lbs(0.0, 0.0, t);
            assert_eq!((s.mean_a(), s.mean_b(), s.var_a(), s.var_b(), s.cov()), (0.0, 0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn unit_gain_leaves_modes_unmixed() {
        let (a, r) = (1.7, 0.6);
        let s = nbs(a, r, 1.0);
        let sh2 = r.sinh().powi(2);
        assert!((s.mean_a() - a * a).abs() < 1e-12);
        assert!((s.mean_b() - sh2).abs() < 1e-12);
        assert_eq!(s.cov(), 0.0);
        assert!((s.var_a() - a * a).abs() < 1e-12);
        assert!((s.var_b() - 2.0 * sh2 * r.cosh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn spontaneous_means_coincide() {
        let s = nbs(0.0, 0.0, 1.2);
        assert!((s.mean_a() - 0.44).abs() < 1e-12);
        assert!((s.mean_b() - 0.44).abs() < 1e-12);
    }

    #[test]
    fn correlations_by_definition() {
        let s = ModeStatistics::new(4.0, 1.0, 4.0, 1.0, 0.0).unwrap();
        let c = derived_correlations(&s).unwrap();
        assert_eq!((c.q_a, c.q_b, c.j), (0.0, 0.0, 0.0));
        let s = ModeStatistics::new(2.0, 1.0, 4.0, 1.0, 0.0).unwrap();
        assert_eq!(derived_correlations(&s).unwrap().q_a, 1.0);
    }

    #[test]
    fn degenerate_correlations_are_rejected() {
        let s = ModeStatistics::new(0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(derived_correlations(&s), Err(Error::DegenerateStatistics(_))));
    }

    #[test]
    fn cauchy_schwarz_is_enforced() {
        assert!(ModeStatistics::new(1.0, 1.0, 1.0, 1.0, 1.5).is_err());
        assert!(ModeStatistics::new(1.0, 1.0, 1.0, 1.0, -1.0).is_ok());
        assert!(ModeStatistics::new(1.0, 1.0, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn wrong_splitter_kind_is_rejected() {
        let input = InterferometerInput::new(1.0, 0.1, SplitterSpec::nonlinear(1.2).unwrap()).unwrap();
        assert!(lbs_moments(&input).is_err());
        assert!(SplitterSpec::linear(1.2).is_err());
        assert!(SplitterSpec::nonlinear(0.9).is_err());
    }

    #[test]
    fn closed_form_q_and_j_match_moments() {
        let cases = [
            InterferometerInput::new(2.0, 0.5, SplitterSpec::linear(0.7).unwrap()).unwrap(),
            InterferometerInput::new(2.0, 0.5, SplitterSpec::nonlinear(1.2).unwrap()).unwrap(),
            InterferometerInput::new(10.0, 1.5, SplitterSpec::linear(0.3).unwrap()).unwrap(),
            InterferometerInput::new(0.3, 0.9, SplitterSpec::nonlinear(2.5).unwrap()).unwrap(),
        ];
        for input in cases {
            let a = derived_correlations(&input.moments().unwrap()).unwrap();
            let b = closed_form_correlations(&input).unwrap();
            for (x, y) in [(a.q_a, b.q_a), (a.q_b, b.q_b), (a.j, b.j)] {
                assert!(crate::relative_error(x, y) < 1e-12, "{x} vs {y}");
            }
        }
    }
}
