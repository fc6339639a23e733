//! Weak coherent drive of a lone Λ target: closed-form optical Bloch
//! results and the matching time-domain model.
//!
//! The incident dipole-mode amplitude `beta` drives the target through the
//! same cascaded coupling as a photon from the source, with the source
//! lowering operator replaced by the c-number `beta`. That fixes the Rabi
//! amplitude to `Ω_c = -i·beta·√(ηΓ31)` for `H = Ω_c σ31 + Ω_c* σ13`, and
//! the output field in the incoming mode is `beta + √(ηΓ31)⟨σ13⟩`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cascade::{DriveProfile, ScenarioModel, TARGET};
use crate::error::{Error, Result};
use crate::operator::{sigma, Operator, StateVector};
use crate::space::CompositeSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObeParams {
    /// Incident dipole-mode field amplitude; `|beta|²` is the photon flux.
    pub beta: f64,
    pub gamma31: f64,
    pub gamma32: f64,
    pub eta: f64,
}

impl Default for ObeParams {
    fn default() -> Self {
        Self { beta: 0.01, gamma31: 1.0, gamma32: 1.0, eta: 1.0 }
    }
}

impl ObeParams {
    pub fn check(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::schema("params.beta", "must be finite"));
        }
        for (name, value) in [("gamma31", self.gamma31), ("gamma32", self.gamma32)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::schema(
                    format!("params.{name}"),
                    format!("rate must be finite and >= 0, got {value}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::schema("params.eta", format!("must lie in [0, 1], got {}", self.eta)));
        }
        Ok(())
    }

    fn linewidth(&self) -> Result<f64> {
        let total = self.gamma31 + self.gamma32;
        if !(total > 0.0) {
            return Err(Error::UndefinedSteadyState);
        }
        Ok(total)
    }
}

pub fn coherent_rabi(p: &ObeParams) -> C64 {
    C64::new(0.0, -p.beta * (p.eta * p.gamma31).sqrt())
}

/// `⟨E_out⟩ = β - 2βη·Γ31/(Γ31 + Γ32)`; zero for equal rates at `η = 1`.
pub fn mean_output_field(p: &ObeParams) -> Result<C64> {
    let total = p.linewidth()?;
    Ok(C64::new(p.beta - 2.0 * p.beta * p.eta * p.gamma31 / total, 0.0))
}

/// Weak-drive quasi-steady `⟨σ13⟩ = -2iΩ_c/(Γ31 + Γ32)`.
pub fn quasi_steady_coherence(p: &ObeParams) -> Result<C64> {
    let total = p.linewidth()?;
    Ok(C64::new(0.0, -2.0) * coherent_rabi(p) / total)
}

/// `(1/Γ31, 1/|Ω_c|)`: after the atom relaxes, before optical pumping.
pub fn quasi_steady_window(p: &ObeParams) -> (f64, f64) {
    (1.0 / p.gamma31, 1.0 / coherent_rabi(p).norm())
}

/// Geometric midpoint of [`quasi_steady_window`], capped at `t_max`.
pub fn window_center(p: &ObeParams, t_max: f64) -> f64 {
    let (lo, hi) = quasi_steady_window(p);
    (lo * hi).sqrt().min(t_max)
}

pub fn target_space() -> CompositeSpace {
    CompositeSpace::new([(TARGET, ["1", "2", "3"])]).expect("static level labels are valid")
}

/// Target-only model under constant coherent drive, starting in `|1>`.
///
/// Collapse operators are the target's own emissions (`C1` into the dipole
/// mode, `C2` elsewhere, `C3` on 3→2). The output field `C1` recorded by the
/// master-equation integrator is `beta·I + √(ηΓ31)σ13`, so its flux includes
/// the transmitted incident light. Observables: `ground`, `pumped` (`|2>`),
/// `excited`.
pub fn build_coherent_drive_model(p: &ObeParams) -> Result<ScenarioModel> {
    p.check()?;
    let space = target_space();
    let s = |i: &str, j: &str| sigma(&space, TARGET, i, j);
    let rabi = coherent_rabi(p);
    let lowering = s("1", "3")?;
    let raising = s("3", "1")?;
    let h_drive = &raising.scale(rabi) + &lowering.scale(rabi.conj());
    let dipole = (p.eta * p.gamma31).sqrt();

    let collapse_ops = vec![
        ("C1".to_string(), lowering.scale(dipole)),
        ("C2".to_string(), lowering.scale((p.gamma31 * (1.0 - p.eta)).max(0.0).sqrt())),
        ("C3".to_string(), s("2", "3")?.scale(p.gamma32.sqrt())),
    ];
    let output = &Operator::identity(&space).scale(p.beta) + &lowering.scale(dipole);

    let mut projectors = BTreeMap::new();
    projectors.insert("ground".to_string(), s("1", "1")?);
    projectors.insert("pumped".to_string(), s("2", "2")?);
    projectors.insert("excited".to_string(), s("3", "3")?);

    let model = ScenarioModel {
        h_static_herm: Operator::zeros(&space),
        h_drive,
        drive: DriveProfile::Constant(1.0),
        h_cascade_herm: Operator::zeros(&space),
        collapse_ops,
        initial_state: StateVector::basis(&space, 0),
        projectors,
        output_fields: vec![("C1".to_string(), output)],
        space,
    };
    model.validate()?;
    Ok(model)
}
