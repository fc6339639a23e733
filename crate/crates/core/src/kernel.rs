//! Compiled forms of a [`ScenarioModel`] for the integrator inner loops.
//!
//! The dense operators have only a handful of nonzero entries, so both the
//! trajectory and master-equation integrators work from `(row, col, value)`
//! triplets instead of full matrix products.

use num_complex::Complex64 as C64;

use crate::cascade::{DriveProfile, ScenarioModel};
use crate::operator::Operator;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub(crate) fn from_dense(op: &Operator) -> Self {
        let d = op.dim();
        let entries =
            op.entries().iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(k, z)| (k / d, k % d, *z)).collect();
        Self { entries }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out += factor · A x`
    #[inline]
    pub(crate) fn apply_add(&self, x: &[C64], factor: C64, out: &mut [C64]) {
        for &(r, c, a) in &self.entries {
            out[r] += factor * a * x[c];
        }
    }

    /// True when `A x` is exactly the zero vector; `scratch` is overwritten.
    pub(crate) fn annihilates(&self, x: &[C64], scratch: &mut [C64]) -> bool {
        scratch.iter_mut().for_each(|z| *z = ZERO);
        self.apply_add(x, C64::new(1.0, 0.0), scratch);
        scratch.iter().all(|z| *z == ZERO)
    }

    /// `‖A x‖²`; `scratch` is overwritten.
    pub(crate) fn image_norm2(&self, x: &[C64], scratch: &mut [C64]) -> f64 {
        scratch.iter_mut().for_each(|z| *z = ZERO);
        self.apply_add(x, C64::new(1.0, 0.0), scratch);
        scratch.iter().map(C64::norm_sqr).sum()
    }

    /// `out += factor · A ρ` with ρ row-major `d×d`.
    #[inline]
    pub(crate) fn left_mul_add(&self, rho: &[C64], d: usize, factor: C64, out: &mut [C64]) {
        for &(r, c, a) in &self.entries {
            let fa = factor * a;
            let (src, dst) = (&rho[c * d..(c + 1) * d], &mut out[r * d..(r + 1) * d]);
            for (o, s) in dst.iter_mut().zip(src) {
                *o += fa * s;
            }
        }
    }

    /// `out += factor · ρ A†`
    #[inline]
    pub(crate) fn right_mul_dagger_add(&self, rho: &[C64], d: usize, factor: C64, out: &mut [C64]) {
        // (ρ A†)_{ij} = Σ_k ρ_{ik} conj(A_{jk})
        for &(j, k, a) in &self.entries {
            let fa = factor * a.conj();
            for i in 0..d {
                out[i * d + j] += fa * rho[i * d + k];
            }
        }
    }

    /// `out += A ρ A†`
    #[inline]
    pub(crate) fn sandwich_add(&self, rho: &[C64], d: usize, out: &mut [C64]) {
        for &(a, k, x) in &self.entries {
            for &(b, l, y) in &self.entries {
                out[a * d + b] += x * rho[k * d + l] * y.conj();
            }
        }
    }

    /// `Tr(A ρ)`
    pub(crate) fn trace_with(&self, rho: &[C64], d: usize) -> C64 {
        self.entries.iter().map(|&(r, c, a)| a * rho[c * d + r]).sum()
    }
}

/// `H_eff(t) = static + f(t)·drive`, plus the collapse channels.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    pub dim: usize,
    pub static_part: SparseOp,
    pub drive_part: SparseOp,
    pub drive: DriveProfile,
    pub collapse: Vec<SparseOp>,
    pub labels: Vec<String>,
}

impl Generator {
    pub(crate) fn new(model: &ScenarioModel) -> Self {
        let h_static = model.h_eff_static();
        Self {
            dim: model.space.dim(),
            static_part: SparseOp::from_dense(&h_static),
            drive_part: SparseOp::from_dense(&model.h_drive),
            drive: model.drive,
            collapse: model.collapse_ops.iter().map(|(_, c)| SparseOp::from_dense(c)).collect(),
            labels: model.collapse_ops.iter().map(|(l, _)| l.clone()).collect(),
        }
    }

    /// `out = -i H_eff(t) ψ`
    #[inline]
    pub(crate) fn schrodinger_rhs(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let minus_i = C64::new(0.0, -1.0);
        self.static_part.apply_add(psi, minus_i, out);
        let f = self.drive.coefficient(t);
        if f != 0.0 && !self.drive_part.is_empty() {
            self.drive_part.apply_add(psi, minus_i * f, out);
        }
    }

    /// `out = -i(H_eff ρ - ρ H_eff†) + Σ_k C_k ρ C_k†`
    pub(crate) fn master_rhs(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        let minus_i = C64::new(0.0, -1.0);
        let plus_i = C64::new(0.0, 1.0);
        self.static_part.left_mul_add(rho, d, minus_i, out);
        self.static_part.right_mul_dagger_add(rho, d, plus_i, out);
        let f = self.drive.coefficient(t);
        if f != 0.0 && !self.drive_part.is_empty() {
            self.drive_part.left_mul_add(rho, d, minus_i * f, out);
            self.drive_part.right_mul_dagger_add(rho, d, plus_i * f, out);
        }
        for c in &self.collapse {
            c.sandwich_add(rho, d, out);
        }
    }

    /// The state can never change again: every generator term annihilates it.
    pub(crate) fn is_stationary(&self, psi: &[C64], scratch: &mut [C64]) -> bool {
        self.static_part.annihilates(psi, scratch) && self.drive_part.annihilates(psi, scratch)
    }
}
