//! Master-equation integration, the deterministic counterpart of the
//! trajectory ensemble.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::cascade::ScenarioModel;
use crate::error::{Error, Result};
use crate::kernel::{Generator, SparseOp};
use crate::operator::{Operator, StateVector};
use crate::space::CompositeSpace;
use crate::trajectory::IntegratorConfig;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Trace drift that aborts an integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Number of evenly spaced samples recorded per run (plus the endpoints).
const SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: CompositeSpace,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let op = Operator::outer(psi, psi).expect("same space");
        Self::from_operator(&op)
    }

    pub fn from_operator(op: &Operator) -> Self {
        Self { space: op.space().clone(), data: op.entries().to_vec() }
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_entries(&self.space, self.data.clone()).expect("square by construction")
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.space.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let d = self.space.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// `Re Tr(op ρ)`
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.space() != &self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: op.dim() });
        }
        Ok(SparseOp::from_dense(op).trace_with(&self.data, self.space.dim()).re)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.as_operator().hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.data, self.space.dim())
    }
}

fn min_eigenvalue(data: &[C64], d: usize) -> f64 {
    let m = DMatrix::from_row_slice(d, d, data);
    let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn hermitize(data: &mut [C64], d: usize) {
    for i in 0..d {
        data[i * d + i].im = 0.0;
        for j in i + 1..d {
            let avg = (data[i * d + j] + data[j * d + i].conj()) * 0.5;
            data[i * d + j] = avg;
            data[j * d + i] = avg.conj();
        }
    }
}

/// `dρ/dt = -i[H_herm(t), ρ] + Σ_k (C_k ρ C_k† - ½{C_k†C_k, ρ})`, evaluated
/// with dense operator products.
pub fn lindblad_rhs(rho: &DensityMatrix, t: f64, model: &ScenarioModel) -> Result<Operator> {
    let r = rho.as_operator();
    let h = model.h_herm(t);
    let commutator = &(&h * &r) - &(&r * &h);
    let mut out = commutator.scale(C64::new(0.0, -1.0));
    for (_, c) in &model.collapse_ops {
        let cd = c.dagger();
        let cdc = &cd * c;
        let jump = &(c * &r) * &cd;
        let anti = &(&cdc * &r) + &(&r * &cdc);
        out = &out + &(&jump - &anti.scale(0.5));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Linear interpolation, clamped to the recorded range.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 0 {
            return f64::NAN;
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - w) + self.values[k] * w
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sampled observables. Projector names map to `Tr(P ρ)`; for an output
/// field `L`, `flux:L` is `Tr(L†L ρ)` and `coherent:L` is `|Tr(L ρ)|²`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ObservableTrace {
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
}

impl ObservableTrace {
    pub fn series(&self, name: &str) -> Result<TimeSeries> {
        let values = self.series.get(name).ok_or_else(|| Error::config(format!("trace has no series `{name}`")))?;
        Ok(TimeSeries { times: self.times.clone(), values: values.clone() })
    }

    pub fn final_value(&self, name: &str) -> Result<f64> {
        self.series(name)?.values.last().copied().ok_or_else(|| Error::config("empty trace"))
    }
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub rho_final: DensityMatrix,
    pub trace: ObservableTrace,
    /// Largest `|Tr ρ - 1|` over all steps.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue of ρ over all samples.
    pub min_eigenvalue: f64,
}

impl MasterSolution {
    /// Final `Tr(P ρ)` for every projector of the model.
    pub fn final_observables(&self) -> BTreeMap<String, f64> {
        self.trace
            .series
            .iter()
            .filter(|(k, _)| !k.contains(':'))
            .map(|(k, v)| (k.clone(), *v.last().unwrap_or(&f64::NAN)))
            .collect()
    }
}

struct Recorder<'a> {
    projectors: Vec<(&'a str, SparseOp)>,
    fields: Vec<(&'a str, SparseOp, SparseOp)>,
    trace: ObservableTrace,
    min_eigenvalue: f64,
}

impl<'a> Recorder<'a> {
    fn new(model: &'a ScenarioModel) -> Self {
        let projectors = model.projectors.iter().map(|(k, p)| (k.as_str(), SparseOp::from_dense(p))).collect();
        let fields = model
            .output_fields
            .iter()
            .map(|(k, b)| (k.as_str(), SparseOp::from_dense(b), SparseOp::from_dense(&(&b.dagger() * b))))
            .collect();
        Self { projectors, fields, trace: ObservableTrace::default(), min_eigenvalue: f64::INFINITY }
    }

    fn record(&mut self, t: f64, rho: &[C64], d: usize) {
        self.trace.times.push(t);
        for (name, p) in &self.projectors {
            self.trace.series.entry(name.to_string()).or_default().push(p.trace_with(rho, d).re);
        }
        for (name, b, bdb) in &self.fields {
            let flux = bdb.trace_with(rho, d).re;
            let coherent = b.trace_with(rho, d).norm_sqr();
            self.trace.series.entry(format!("flux:{name}")).or_default().push(flux);
            self.trace.series.entry(format!("coherent:{name}")).or_default().push(coherent);
        }
        self.min_eigenvalue = self.min_eigenvalue.min(min_eigenvalue(rho, d));
    }
}

/// RK4 integration of the master equation from the model's initial state to
/// `cfg.t_end` with step `cfg.dt`, Hermitizing after every step.
pub fn integrate_master(model: &ScenarioModel, cfg: &IntegratorConfig) -> Result<MasterSolution> {
    cfg.check()?;
    let gen = Generator::new(model);
    let d = gen.dim;
    let mut rho = DensityMatrix::from_pure(&model.initial_state.normalize()?).data;
    let n_steps = (cfg.t_end / cfg.dt).ceil().max(1.0) as usize;
    let stride = n_steps.div_ceil(SAMPLES).max(1);

    let mut k = [vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d]];
    let mut stage = vec![ZERO; d * d];
    let mut recorder = Recorder::new(model);
    let mut max_drift: f64 = 0.0;
    recorder.record(0.0, &rho, d);

    for step in 0..n_steps {
        let t = step as f64 * cfg.dt;
        let h = cfg.dt.min(cfg.t_end - t);
        let [k1, k2, k3, k4] = &mut k;
        gen.master_rhs(t, &rho, k1);
        for ((s, r), x) in stage.iter_mut().zip(&rho).zip(k1.iter()) {
            *s = r + x * (0.5 * h);
        }
        gen.master_rhs(t + 0.5 * h, &stage, k2);
        for ((s, r), x) in stage.iter_mut().zip(&rho).zip(k2.iter()) {
            *s = r + x * (0.5 * h);
        }
        gen.master_rhs(t + 0.5 * h, &stage, k3);
        for ((s, r), x) in stage.iter_mut().zip(&rho).zip(k3.iter()) {
            *s = r + x * h;
        }
        gen.master_rhs(t + h, &stage, k4);
        let w = h / 6.0;
        for i in 0..rho.len() {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        hermitize(&mut rho, d);

        let t_next = t + h;
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NumericalInstability { t: t_next });
        }
        let drift = ((0..d).map(|i| rho[i * d + i].re).sum::<f64>() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift { t: t_next, drift });
        }
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            recorder.record(t_next, &rho, d);
        }
    }

    Ok(MasterSolution {
        rho_final: DensityMatrix { space: model.space.clone(), data: rho },
        max_trace_drift: max_drift,
        min_eigenvalue: recorder.min_eigenvalue,
        trace: recorder.trace,
    })
}

/// `Tr(C1† C1 ρ(t))`: photon flux detected in the incoming mode.
pub fn c1_flux(trace: &ObservableTrace) -> Result<TimeSeries> {
    trace.series("flux:C1")
}

/// `|Tr(C1 ρ(t))|²`: the part of the `C1` flux carried by the mean field.
pub fn c1_coherent_flux(trace: &ObservableTrace) -> Result<TimeSeries> {
    trace.series("coherent:C1")
}
