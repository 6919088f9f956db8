//! Brute-force reference computations in a truncated two-mode Fock space.
//!
//! The splitters are applied by exponentiating their quadratic generators
//! numerically, never through the analytic mode transformation, so the
//! results are independent of the closed forms they are compared against.
//! Both generators conserve a photon-number combination (n_a + n_b for the
//! beam splitter, n_a − n_b for the squeezer), which splits the problem into
//! small tridiagonal blocks.

use num_complex::Complex64;

use crate::error::{check_range, Error, Result};
use crate::moments::{ModeStatistics, SplitterSpec};
use crate::qfim_ideal::FisherMatrix;
use crate::qfim_lossy::{SingleArmLoss, TwoArmLoss};

pub const DEFAULT_CUTOFF: usize = 64;
pub const PREPARATION_DEFICIT: f64 = 1e-10;
pub const EDGE_DEFICIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    cutoff: usize,
    amplitudes: Vec<Complex64>,
}

impl TruncatedState {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn dim(&self) -> usize {
        self.cutoff + 1
    }

    fn index(&self, na: usize, nb: usize) -> usize {
        na * self.dim() + nb
    }

    pub fn amplitude(&self, na: usize, nb: usize) -> Complex64 {
        self.amplitudes[self.index(na, nb)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population within the top eighth of either mode's photon range. A
    /// truncated generator is exactly unitary, so this stands in for the
    /// population that would have left the grid.
    pub fn edge_population(&self) -> f64 {
        let width = (self.cutoff / 8).max(2);
        let start = self.cutoff.saturating_sub(width) + 1;
        let mut total = 0.0;
        for na in 0..self.dim() {
            for nb in 0..self.dim() {
                if na >= start || nb >= start {
                    total += self.amplitude(na, nb).norm_sqr();
                }
            }
        }
        total
    }

    /// Builds a state from a function of (n_a, n_b), normalized.
    pub fn from_fn<F: Fn(usize, usize) -> Complex64>(cutoff: usize, f: F) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: 0.0,
                reason: "must be positive",
            });
        }
        let dim = cutoff + 1;
        let mut amplitudes = Vec::with_capacity(dim * dim);
        for na in 0..dim {
            for nb in 0..dim {
                amplitudes.push(f(na, nb));
            }
        }
        let mut state = TruncatedState { cutoff, amplitudes };
        let norm = state.norm_sqr().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: norm,
                reason: "state must be nonzero",
            });
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }
}

fn coherent_amplitudes(alpha: f64, cutoff: usize) -> Vec<f64> {
    let mut amps = vec![0.0; cutoff + 1];
    amps[0] = (-0.5 * alpha * alpha).exp();
    for n in 1..=cutoff {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    amps
}

/// Squeezed vacuum S(r)|0⟩ with S = exp[(r b² − r b†²)/2].
fn squeezed_amplitudes(r: f64, cutoff: usize) -> Vec<f64> {
    let mut amps = vec![0.0; cutoff + 1];
    amps[0] = 1.0 / r.cosh().sqrt();
    let t = r.tanh();
    let mut k = 1;
    while 2 * k <= cutoff {
        let kk = k as f64;
        amps[2 * k] = amps[2 * k - 2] * (-t) * ((2.0 * kk - 1.0) / (2.0 * kk)).sqrt();
        k += 1;
    }
    amps
}

/// |α⟩ ⊗ S(r)|0⟩ with real α and real squeezing, renormalized on the grid.
pub fn prepare_input(alpha_mag: f64, squeeze_r: f64, cutoff: usize) -> Result<TruncatedState> {
    check_range("alpha_mag", alpha_mag, 0.0, f64::INFINITY)?;
    check_range("squeeze_r", squeeze_r, 0.0, f64::INFINITY)?;
    let a = coherent_amplitudes(alpha_mag, cutoff);
    let b = squeezed_amplitudes(squeeze_r, cutoff);
    let weight = a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>();
    let deficit = 1.0 - weight;
    if !(deficit <= PREPARATION_DEFICIT) {
        return Err(Error::CutoffTooSmall { cutoff, deficit });
    }
    TruncatedState::from_fn(cutoff, |na, nb| Complex64::new(a[na] * b[nb], 0.0))
}

struct Dense {
    n: usize,
    data: Vec<Complex64>,
}

impl Dense {
    fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Dense { n, data }
    }

    fn mul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let out = &mut data[i * n..(i + 1) * n];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Dense { n, data }
    }

    fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.data[i * self.n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// exp(i t H) for real symmetric tridiagonal H given by its off-diagonal,
/// via scaling and squaring of a Taylor series.
fn expm_i_tridiagonal(off: &[f64], t: f64) -> Dense {
    let n = off.len() + 1;
    let mut a = Dense {
        n,
        data: vec![Complex64::new(0.0, 0.0); n * n],
    };
    for (i, &h) in off.iter().enumerate() {
        a.data[(i + 1) * n + i] = Complex64::new(0.0, t * h);
        a.data[i * n + i + 1] = Complex64::new(0.0, t * h);
    }
    let norm = a.norm_1();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    a.data.iter_mut().for_each(|x| *x *= scale);

    let mut result = Dense::identity(n);
    let mut term = Dense::identity(n);
    for k in 1..=30 {
        term = term.mul(&a);
        let inv = 1.0 / k as f64;
        term.data.iter_mut().for_each(|x| *x *= inv);
        for (r, x) in result.data.iter_mut().zip(&term.data) {
            *r += x;
        }
        if term.norm_1() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Applies exp(i t H) block by block. `blocks` lists the grid indices of each
/// conserved block in chain order; `coupling(na, nb)` is the matrix element
/// linking (na, nb) to the next state of its chain.
fn apply_blocks(
    state: &TruncatedState,
    blocks: Vec<Vec<(usize, usize)>>,
    coupling: impl Fn(usize, usize) -> f64,
    t: f64,
) -> TruncatedState {
    let mut out = state.clone();
    for chain in blocks {
        if chain.len() < 2 {
            continue;
        }
        let off: Vec<f64> = chain[..chain.len() - 1]
            .iter()
            .map(|&(na, nb)| coupling(na, nb))
            .collect();
        let u = expm_i_tridiagonal(&off, t);
        let n = chain.len();
        let v: Vec<Complex64> = chain.iter().map(|&(na, nb)| state.amplitude(na, nb)).collect();
        for (i, &(na, nb)) in chain.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += u.data[i * n + j] * v[j];
            }
            let idx = out.index(na, nb);
            out.amplitudes[idx] = acc;
        }
    }
    out
}

/// Beam splitter exp[iθ(a†b + ab†)] with T = cos²θ, or two-mode squeezer
/// exp[is(a†b† + ab)] with G = cosh s.
pub fn apply_splitter(state: &TruncatedState, splitter: &SplitterSpec) -> Result<TruncatedState> {
    splitter.validate()?;
    let c = state.cutoff;
    let out = match *splitter {
        SplitterSpec::Linear { transmissivity } => {
            let theta = transmissivity.sqrt().acos();
            let blocks = (0..=2 * c)
                .map(|total| {
                    let lo = total.saturating_sub(c);
                    let hi = total.min(c);
                    (lo..=hi).map(|na| (na, total - na)).collect()
                })
                .collect();
            // ⟨na+1, nb−1| a†b |na, nb⟩
            apply_blocks(state, blocks, |na, nb| (((na + 1) * nb) as f64).sqrt(), theta)
        }
        SplitterSpec::Nonlinear { gain } => {
            let s = gain.acosh();
            let blocks = (0..=2 * c)
                .map(|shift| {
                    // n_a − n_b = shift − c
                    let (a0, b0) = if shift >= c { (shift - c, 0) } else { (0, c - shift) };
                    (0..=c - a0.max(b0)).map(|k| (a0 + k, b0 + k)).collect()
                })
                .collect();
            // ⟨na+1, nb+1| a†b† |na, nb⟩
            apply_blocks(state, blocks, |na, nb| (((na + 1) * (nb + 1)) as f64).sqrt(), s)
        }
    };
    let deficit = out.edge_population();
    if deficit > EDGE_DEFICIT {
        return Err(Error::CutoffTooSmall { cutoff: c, deficit });
    }
    Ok(out)
}

fn populations(state: &TruncatedState) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    let dim = state.dim();
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(move |(i, a)| ((i / dim) as f64, (i % dim) as f64, a.norm_sqr()))
}

pub fn measure_moments(state: &TruncatedState) -> Result<ModeStatistics> {
    let norm = state.norm_sqr();
    let (mut ma, mut mb) = (0.0, 0.0);
    for (na, nb, p) in populations(state) {
        ma += na * p;
        mb += nb * p;
    }
    ma /= norm;
    mb /= norm;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (na, nb, p) in populations(state) {
        let (da, db) = (na - ma, nb - mb);
        va += da * da * p;
        vb += db * db * p;
        cov += da * db * p;
    }
    ModeStatistics::new(ma, mb, va / norm, vb / norm, cov / norm)
}

/// 4 Re(⟨∂_iψ|∂_jψ⟩ − ⟨∂_iψ|ψ⟩⟨ψ|∂_jψ⟩) for |ψ_φ⟩ = exp(−i(ĝ+φ+ + ĝ−φ−))|ψ⟩.
pub fn derivative_qfim(state: &TruncatedState) -> FisherMatrix {
    let mut acc = Accumulator::default();
    let dim = state.dim();
    acc.add(state.amplitudes.iter().enumerate().map(|(i, &a)| {
        let (na, nb) = ((i / dim) as f64, (i % dim) as f64);
        (a, 0.5 * (na + nb), 0.5 * (na - nb))
    }));
    acc.finish(state.norm_sqr())
}

/// Running sums for the Kraus expressions: Σ⟨d_i|d_j⟩, Σ i⟨d_i|φ⟩ and the
/// weights, where d_i = −i g_i φ for a diagonal generator g_i.
#[derive(Default)]
struct Accumulator {
    h: [[Complex64; 2]; 2],
    hv: [Complex64; 2],
}

impl Accumulator {
    /// Entries are (amplitude, g+, g−) of one Kraus branch.
    fn add(&mut self, entries: impl Iterator<Item = (Complex64, f64, f64)>) {
        let i = Complex64::new(0.0, 1.0);
        for (phi, gp, gm) in entries {
            let d = [-i * gp * phi, -i * gm * phi];
            for a in 0..2 {
                for b in 0..2 {
                    self.h[a][b] += d[a].conj() * d[b];
                }
                self.hv[a] += i * d[a].conj() * phi;
            }
        }
    }

    fn finish(&self, norm: f64) -> FisherMatrix {
        let elem = |a: usize, b: usize| {
            let h = self.h[a][b] / norm;
            let ha = self.hv[a] / norm;
            // −i⟨φ|d_b⟩ is the conjugate of i⟨d_b|φ⟩
            let hb = self.hv[b].conj() / norm;
            4.0 * (h - ha * hb).re
        };
        FisherMatrix {
            f_pp: elem(0, 0),
            f_mm: elem(1, 1),
            f_pm: elem(0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossModel {
    SingleArm(SingleArmLoss),
    TwoArm(TwoArmLoss),
}

impl LossModel {
    fn as_two_arm(&self) -> TwoArmLoss {
        match *self {
            LossModel::SingleArm(l) => TwoArmLoss {
                eta_a: l.eta_a,
                eta_b: 1.0,
                gamma_a: l.gamma,
                gamma_b: 0.0,
            },
            LossModel::TwoArm(l) => l,
        }
    }
}

fn factorial_weights(eta: f64, cutoff: usize) -> Vec<f64> {
    // √((1−η)^l / l!)
    let mut w = vec![1.0; cutoff + 1];
    for l in 1..=cutoff {
        w[l] = w[l - 1] * ((1.0 - eta) / l as f64).sqrt();
    }
    w
}

/// Visits every Kraus branch Π_{la,lb}|ψ⟩ with
/// Π = √((1−η_a)^la/la!) √((1−η_b)^lb/lb!) η_a^{n_a/2} η_b^{n_b/2} a^la b^lb.
fn for_each_branch(
    state: &TruncatedState,
    loss: &TwoArmLoss,
    mut visit: impl FnMut(usize, usize, &[Complex64]),
) {
    let c = state.cutoff;
    let dim = state.dim();
    let wa = factorial_weights(loss.eta_a, c);
    let wb = factorial_weights(loss.eta_b, c);
    let ea: Vec<f64> = (0..dim).map(|n| loss.eta_a.powf(0.5 * n as f64)).collect();
    let eb: Vec<f64> = (0..dim).map(|n| loss.eta_b.powf(0.5 * n as f64)).collect();
    let lb_max = if loss.eta_b == 1.0 { 0 } else { c };
    let la_max = if loss.eta_a == 1.0 { 0 } else { c };

    let mut after_a = state.amplitudes.clone();
    let mut branch = vec![Complex64::new(0.0, 0.0); dim * dim];
    for la in 0..=la_max {
        if la > 0 {
            // a|na⟩ = √na |na−1⟩
            for na in 0..dim {
                for nb in 0..dim {
                    after_a[na * dim + nb] = if na + 1 < dim {
                        after_a[(na + 1) * dim + nb] * ((na + 1) as f64).sqrt()
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
            }
        }
        let mut after_b = after_a.clone();
        for lb in 0..=lb_max {
            if lb > 0 {
                for na in 0..dim {
                    for nb in 0..dim {
                        after_b[na * dim + nb] = if nb + 1 < dim {
                            after_b[na * dim + nb + 1] * ((nb + 1) as f64).sqrt()
                        } else {
                            Complex64::new(0.0, 0.0)
                        };
                    }
                }
            }
            let w = wa[la] * wb[lb];
            if w == 0.0 {
                continue;
            }
            for na in 0..dim {
                for nb in 0..dim {
                    branch[na * dim + nb] = after_b[na * dim + nb] * (w * ea[na] * eb[nb]);
                }
            }
            visit(la, lb, &branch);
        }
    }
}

/// Σ⟨ψ|Π†Π|ψ⟩ over all Kraus branches.
pub fn kraus_completeness(state: &TruncatedState, loss: &LossModel) -> f64 {
    let mut total = 0.0;
    for_each_branch(state, &loss.as_two_arm(), |_, _, phi| {
        total += phi.iter().map(|a| a.norm_sqr()).sum::<f64>();
    });
    total / state.norm_sqr()
}

/// Lossy matrix from the explicit Kraus sum. On the branch that lost
/// (la, lb) photons the phase generators are
/// g± = [(n_a − γ_a·la) ± (n_b − γ_b·lb)]/2 with post-loss photon numbers,
/// the exponent each γ-shifted Kraus operator carries.
pub fn kraus_sum_cij(state: &TruncatedState, loss: &LossModel) -> Result<FisherMatrix> {
    match loss {
        LossModel::SingleArm(l) => l.validate()?,
        LossModel::TwoArm(l) => l.validate()?,
    }
    let deficit = state.edge_population();
    if deficit > EDGE_DEFICIT {
        return Err(Error::CutoffTooSmall {
            cutoff: state.cutoff,
            deficit,
        });
    }
    let loss = loss.as_two_arm();
    let dim = state.dim();
    let mut acc = Accumulator::default();
    for_each_branch(state, &loss, |la, lb, phi| {
        let shift_a = loss.gamma_a * la as f64;
        let shift_b = loss.gamma_b * lb as f64;
        acc.add(phi.iter().enumerate().map(|(i, &a)| {
            let xa = (i / dim) as f64 - shift_a;
            let xb = (i % dim) as f64 - shift_b;
            (a, 0.5 * (xa + xb), 0.5 * (xa - xb))
        }));
    });
    Ok(acc.finish(state.norm_sqr()))
}
