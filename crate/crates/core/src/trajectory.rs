//! Monte Carlo wavefunction (quantum-jump) unraveling.
//!
//! Each trajectory integrates `dψ/dt = -i H_eff(t) ψ` with fixed-step RK4 on
//! the unnormalized state. A uniform threshold `r` is drawn; the jump happens
//! when `‖ψ‖²` falls to `r`, at an instant located by bisection inside the
//! step. The channel is drawn with probability proportional to `‖C_k ψ‖²`,
//! the state is collapsed and renormalized, a fresh `r` is drawn and the
//! integration resumes from the jump instant.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::ScenarioModel;
use crate::error::{Error, Result};
use crate::kernel::{Generator, SparseOp};
use crate::operator::{apply, expectation, Operator, StateVector, DEGENERATE_NORM2};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Bisection tolerance on the jump instant.
    pub jump_time_tol: f64,
    /// Excited population allowed at `t_end` before a horizon warning.
    pub ss_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 100.0, jump_time_tol: 1e-6, ss_tol: 1e-8 }
    }
}

impl IntegratorConfig {
    pub fn check(&self) -> Result<()> {
        for (name, value) in
            [("dt", self.dt), ("t_end", self.t_end), ("jump_time_tol", self.jump_time_tol), ("ss_tol", self.ss_tol)]
        {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::schema(
                    format!("integrator.{name}"),
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub jumps: Vec<Jump>,
    /// Normalized state at `t_end`.
    pub final_state: StateVector,
    pub seed: u64,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and `stddev / √n` (unbiased sample variance).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, stderr: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub master_seed: u64,
    pub observables: BTreeMap<String, Estimate>,
    pub channel_counts: BTreeMap<String, usize>,
    /// Trajectories whose `excited` population at `t_end` exceeded `ss_tol`.
    pub horizon_warnings: usize,
    pub records: Option<Vec<TrajectoryRecord>>,
}

impl EnsembleResult {
    pub fn observable(&self, name: &str) -> Result<Estimate> {
        self.observables.get(name).copied().ok_or_else(|| Error::config(format!("ensemble has no observable `{name}`")))
    }

    pub fn total_jumps(&self) -> usize {
        self.channel_counts.values().sum()
    }
}

/// Seed of trajectory `index` under `master_seed`.
///
/// SplitMix64 finalizer applied to `master_seed + (index + 1)·φ`, where φ is
/// the 64-bit golden-ratio increment. Stable across releases; any trajectory
/// can be regenerated on its own.
pub fn split_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverse-CDF pick over nonnegative weights; `None` if all are zero.
fn pick_weighted(weights: &[f64], r2: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = r2 * total;
    let mut cumulative = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        cumulative += w;
        if w > 0.0 && cumulative > target {
            return Some(k);
        }
    }
    // r2 rounding up against the total
    weights.iter().rposition(|&w| w > 0.0)
}

/// Chooses channel `k` with probability `<ψ|C_k†C_k|ψ> / Σ_j <ψ|C_j†C_j|ψ>`.
pub fn select_jump_channel(psi: &StateVector, collapse_ops: &[(String, Operator)], r2: f64) -> Result<usize> {
    let weights = collapse_ops
        .iter()
        .map(|(_, c)| expectation(psi, &(&c.dagger() * c)).map(|z| z.re.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    pick_weighted(&weights, r2).ok_or(Error::NoJumpChannel { t: f64::NAN })
}

struct Rk4Scratch {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
}

impl Rk4Scratch {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![ZERO; dim],
            k2: vec![ZERO; dim],
            k3: vec![ZERO; dim],
            k4: vec![ZERO; dim],
            stage: vec![ZERO; dim],
        }
    }
}

fn rk4_step(gen: &Generator, t: f64, psi: &[C64], h: f64, ws: &mut Rk4Scratch, out: &mut [C64]) {
    let Rk4Scratch { k1, k2, k3, k4, stage } = ws;
    gen.schrodinger_rhs(t, psi, k1);
    for ((s, x), k) in stage.iter_mut().zip(psi).zip(k1.iter()) {
        *s = x + k * (0.5 * h);
    }
    gen.schrodinger_rhs(t + 0.5 * h, stage, k2);
    for ((s, x), k) in stage.iter_mut().zip(psi).zip(k2.iter()) {
        *s = x + k * (0.5 * h);
    }
    gen.schrodinger_rhs(t + 0.5 * h, stage, k3);
    for ((s, x), k) in stage.iter_mut().zip(psi).zip(k3.iter()) {
        *s = x + k * h;
    }
    gen.schrodinger_rhs(t + h, stage, k4);
    let w = h / 6.0;
    for i in 0..psi.len() {
        out[i] = psi[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
    }
}

fn norm2(x: &[C64]) -> f64 {
    x.iter().map(C64::norm_sqr).sum()
}

fn all_finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Smallest step treated as "no time left".
fn end_slack(t_end: f64) -> f64 {
    1e-12 * t_end.max(1.0)
}

/// Jump-free non-Hermitian propagation from `t_start` to `t_stop`; the norm
/// of the result is the no-jump survival probability.
pub fn propagate_no_jump(
    model: &ScenarioModel,
    psi: &StateVector,
    t_start: f64,
    t_stop: f64,
    dt: f64,
) -> Result<StateVector> {
    if psi.space() != &model.space {
        return Err(Error::DimensionMismatch { expected: model.space.dim(), found: psi.space().dim() });
    }
    let gen = Generator::new(model);
    let mut ws = Rk4Scratch::new(gen.dim);
    let mut state = psi.amplitudes().to_vec();
    let mut next = state.clone();
    let mut t = t_start;
    while t_stop - t > end_slack(t_stop) {
        let h = dt.min(t_stop - t);
        rk4_step(&gen, t, &state, h, &mut ws, &mut next);
        if !all_finite(&next) {
            return Err(Error::NumericalInstability { t });
        }
        std::mem::swap(&mut state, &mut next);
        t += h;
    }
    StateVector::from_amplitudes(&model.space, state)
}

fn evolve_compiled(
    gen: &Generator,
    model: &ScenarioModel,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = Rk4Scratch::new(gen.dim);
    let mut psi = model.initial_state.normalize()?.amplitudes().to_vec();
    let mut next = vec![ZERO; gen.dim];
    let mut probe = vec![ZERO; gen.dim];
    let mut jumps = Vec::new();
    let mut threshold: f64 = rng.random();
    let mut t = 0.0;

    while cfg.t_end - t > end_slack(cfg.t_end) {
        if gen.is_stationary(&psi, &mut probe) {
            break;
        }
        let h = cfg.dt.min(cfg.t_end - t);
        rk4_step(gen, t, &psi, h, &mut ws, &mut next);
        if !all_finite(&next) {
            return Err(Error::NumericalInstability { t: t + h });
        }
        let n2 = norm2(&next);
        if n2 > threshold {
            if n2 < DEGENERATE_NORM2 {
                return Err(Error::IntegratorStep {
                    t: t + h,
                    msg: format!("norm underflow ({n2:e}) without a jump; reduce dt"),
                });
            }
            std::mem::swap(&mut psi, &mut next);
            t += h;
            continue;
        }

        // ‖ψ‖² crossed the threshold inside (t, t + h]: bisect on the sub-step.
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > cfg.jump_time_tol {
            let mid = 0.5 * (lo + hi);
            rk4_step(gen, t, &psi, mid, &mut ws, &mut probe);
            if norm2(&probe) <= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t_jump = t + hi;
        rk4_step(gen, t, &psi, hi, &mut ws, &mut next);

        let weights: Vec<f64> = gen.collapse.iter().map(|c| c.image_norm2(&next, &mut probe)).collect();
        let channel = pick_weighted(&weights, rng.random()).ok_or(Error::NoJumpChannel { t: t_jump })?;
        apply_collapse(&gen.collapse[channel], &next, &mut psi);
        let n2 = norm2(&psi);
        if !(n2 >= DEGENERATE_NORM2) {
            return Err(Error::DegenerateState(n2));
        }
        let inv = 1.0 / n2.sqrt();
        psi.iter_mut().for_each(|z| *z *= inv);
        jumps.push(Jump { time: t_jump, channel: gen.labels[channel].clone() });
        threshold = rng.random();
        t = t_jump;
    }

    let final_state = StateVector::from_amplitudes(&model.space, psi)?.normalize()?;
    Ok(TrajectoryRecord { jumps, final_state, seed })
}

fn apply_collapse(op: &SparseOp, psi: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|z| *z = ZERO);
    op.apply_add(psi, C64::new(1.0, 0.0), out);
}

/// Runs one trajectory with its own ChaCha8 stream seeded from `seed`.
pub fn evolve_trajectory(model: &ScenarioModel, cfg: &IntegratorConfig, seed: u64) -> Result<TrajectoryRecord> {
    cfg.check()?;
    evolve_compiled(&Generator::new(model), model, cfg, seed)
}

/// Ensemble of `n_traj` trajectories; trajectory `i` uses
/// `split_seed(master_seed, i)`. Reduction runs in trajectory order, so the
/// result does not depend on the worker count.
pub fn run_ensemble(
    model: &ScenarioModel,
    cfg: &IntegratorConfig,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    ensemble(model, cfg, n_traj, master_seed, false)
}

/// Like [`run_ensemble`] but keeps every [`TrajectoryRecord`].
pub fn run_ensemble_recorded(
    model: &ScenarioModel,
    cfg: &IntegratorConfig,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleResult> {
    ensemble(model, cfg, n_traj, master_seed, true)
}

fn ensemble(
    model: &ScenarioModel,
    cfg: &IntegratorConfig,
    n_traj: usize,
    master_seed: u64,
    keep: bool,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::config("n_traj must be at least 1"));
    }
    cfg.check()?;
    let gen = Generator::new(model);
    let outcomes: Vec<Result<TrajectoryRecord>> = (0..n_traj)
        .into_par_iter()
        .map(|i| evolve_compiled(&gen, model, cfg, split_seed(master_seed, i as u64)))
        .collect();

    let mut records = Vec::with_capacity(n_traj);
    for (index, outcome) in outcomes.into_iter().enumerate() {
        records.push(outcome.map_err(|e| Error::Trajectory { index, source: Box::new(e) })?);
    }

    let mut observables = BTreeMap::new();
    for (name, projector) in &model.projectors {
        let samples =
            records.iter().map(|r| expectation(&r.final_state, projector).map(|z| z.re)).collect::<Result<Vec<_>>>()?;
        observables.insert(name.clone(), Estimate::from_samples(&samples));
    }

    let mut channel_counts: BTreeMap<String, usize> = model.collapse_ops.iter().map(|(l, _)| (l.clone(), 0)).collect();
    for jump in records.iter().flat_map(|r| &r.jumps) {
        *channel_counts.entry(jump.channel.clone()).or_default() += 1;
    }

    let horizon_warnings = match model.projectors.get("excited") {
        Some(p) => {
            records.iter().filter(|r| expectation(&r.final_state, p).map(|z| z.re > cfg.ss_tol).unwrap_or(true)).count()
        }
        None => 0,
    };

    Ok(EnsembleResult {
        n_traj,
        master_seed,
        observables,
        channel_counts,
        horizon_warnings,
        records: keep.then_some(records),
    })
}

/// Estimate of the `absorbed` population, i.e. `|<1_S,2_T|ψ_final>|²`
/// averaged over trajectories.
pub fn absorption_probability(result: &EnsembleResult) -> Result<Estimate> {
    result.observable("absorbed")
}

/// `C ψ / ‖C ψ‖` on dense operators; used by tests and diagnostics.
pub fn collapse_state(op: &Operator, psi: &StateVector) -> Result<StateVector> {
    apply(op, psi)?.normalize()
}
