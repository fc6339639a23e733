//! Cascaded source → target emitter models.
//!
//! Units: ħ = 1 and the target's 3→1 decay rate is the rate unit, so every
//! rate is a dimensionless multiple of it and times are in units of its
//! inverse.
//!
//! Two routes to the non-Hermitian Hamiltonian are kept side by side:
//! [`build_h_eff`] writes it out term by term, while [`ScenarioModel::h_eff`]
//! assembles it as `H_herm - (i/2) Σ_k C_k† C_k` from the collapse operators.
//! The tests hold them equal.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{sigma, Operator, StateVector};
use crate::space::CompositeSpace;

pub const SOURCE: &str = "S";
pub const TARGET: &str = "T";

/// Hermiticity tolerance for Hamiltonian parts.
const HERMITIAN_TOL: f64 = 1e-12;

/// Gaussian laser envelope `Ω(t) = omega0 · exp(-(t - t0)² / tau²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseShape {
    pub omega0: f64,
    pub tau: f64,
    pub t0: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self { omega0: 1.0, tau: 10.0, t0: 20.0 }
    }
}

pub fn omega_l(t: f64, pulse: &PulseShape) -> f64 {
    let x = (t - pulse.t0) / pulse.tau;
    pulse.omega0 * (-x * x).exp()
}

/// Physical parameters of the source/target pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeParams {
    /// Source 3 → 1 decay (the photon-emitting transition).
    #[serde(rename = "gamma31_S")]
    pub gamma31_s: f64,
    /// Source 3 → 0 decay; nonzero values jitter the emission time.
    #[serde(rename = "gamma30_S")]
    pub gamma30_s: f64,
    #[serde(rename = "gamma31_T")]
    pub gamma31_t: f64,
    #[serde(rename = "gamma32_T")]
    pub gamma32_t: f64,
    /// Target ground-state dephasing rate.
    #[serde(rename = "gamma21_T")]
    pub gamma21_t: f64,
    /// Overlap of the incident field with the target's dipole mode.
    pub eta: f64,
    /// Source collection efficiency, applied as a classical factor.
    #[serde(rename = "eta_S")]
    pub eta_s: f64,
    pub pulse: PulseShape,
}

impl Default for CascadeParams {
    fn default() -> Self {
        Self {
            gamma31_s: 10.0,
            gamma30_s: 0.0,
            gamma31_t: 1.0,
            gamma32_t: 1.0,
            gamma21_t: 0.0,
            eta: 1.0,
            eta_s: 1.0,
            pulse: PulseShape::default(),
        }
    }
}

impl CascadeParams {
    /// Checks parameter ranges. Errors carry `params.<field>` key paths.
    pub fn check(&self) -> Result<()> {
        let rates = [
            ("gamma31_S", self.gamma31_s),
            ("gamma30_S", self.gamma30_s),
            ("gamma31_T", self.gamma31_t),
            ("gamma32_T", self.gamma32_t),
            ("gamma21_T", self.gamma21_t),
        ];
        for (name, value) in rates {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::schema(
                    format!("params.{name}"),
                    format!("rate must be finite and >= 0, got {value}"),
                ));
            }
        }
        for (name, value) in [("eta", self.eta), ("eta_S", self.eta_s)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::schema(format!("params.{name}"), format!("must lie in [0, 1], got {value}")));
            }
        }
        let p = &self.pulse;
        if !p.omega0.is_finite() || p.omega0 < 0.0 {
            return Err(Error::schema("params.pulse.omega0", format!("must be finite and >= 0, got {}", p.omega0)));
        }
        if !p.tau.is_finite() || p.tau <= 0.0 {
            return Err(Error::schema("params.pulse.tau", format!("must be finite and > 0, got {}", p.tau)));
        }
        if !p.t0.is_finite() {
            return Err(Error::schema("params.pulse.t0", "must be finite"));
        }
        Ok(())
    }
}

/// Time dependence of the drive term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveProfile {
    Gaussian(PulseShape),
    Constant(f64),
}

impl DriveProfile {
    #[inline]
    pub fn coefficient(&self, t: f64) -> f64 {
        match self {
            DriveProfile::Gaussian(p) => omega_l(t, p),
            DriveProfile::Constant(c) => *c,
        }
    }
}

/// A fully assembled simulation problem.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub space: CompositeSpace,
    pub h_static_herm: Operator,
    /// Multiplied by `drive.coefficient(t)` at evaluation time.
    pub h_drive: Operator,
    pub drive: DriveProfile,
    pub h_cascade_herm: Operator,
    pub collapse_ops: Vec<(String, Operator)>,
    pub initial_state: StateVector,
    pub projectors: BTreeMap<String, Operator>,
    /// Output-field operators whose photon flux `<B†B>` and coherent part
    /// `|<B>|²` the master-equation integrator records.
    pub output_fields: Vec<(String, Operator)>,
}

impl ScenarioModel {
    /// Hermitian part of the Hamiltonian at time `t`.
    pub fn h_herm(&self, t: f64) -> Operator {
        let static_part = &self.h_static_herm + &self.h_cascade_herm;
        &static_part + &self.h_drive.scale(self.drive.coefficient(t))
    }

    /// `Σ_k C_k† C_k`
    pub fn decay_operator(&self) -> Operator {
        self.collapse_ops.iter().fold(Operator::zeros(&self.space), |acc, (_, c)| &acc + &(&c.dagger() * c))
    }

    /// Time-independent part of `H_eff`.
    pub fn h_eff_static(&self) -> Operator {
        let herm = &self.h_static_herm + &self.h_cascade_herm;
        &herm - &self.decay_operator().scale(C64::new(0.0, 0.5))
    }

    pub fn h_eff(&self, t: f64) -> Operator {
        &self.h_eff_static() + &self.h_drive.scale(self.drive.coefficient(t))
    }

    pub fn projector(&self, name: &str) -> Result<&Operator> {
        self.projectors.get(name).ok_or_else(|| Error::config(format!("model has no observable `{name}`")))
    }

    pub fn output_field(&self, name: &str) -> Result<&Operator> {
        self.output_fields
            .iter()
            .find(|(label, _)| label == name)
            .map(|(_, op)| op)
            .ok_or_else(|| Error::config(format!("model has no output field `{name}`")))
    }

    /// Checks the structural invariants every constructor must uphold.
    pub fn validate(&self) -> Result<()> {
        for (name, op) in [
            ("h_static_herm", &self.h_static_herm),
            ("h_drive", &self.h_drive),
            ("h_cascade_herm", &self.h_cascade_herm),
        ] {
            if op.space() != &self.space {
                return Err(Error::config(format!("{name} lives on a different space")));
            }
            let defect = op.hermiticity_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::config(format!("{name} is not Hermitian (defect {defect:e})")));
            }
        }
        if (self.initial_state.norm2() - 1.0).abs() > 1e-12 {
            return Err(Error::config("initial state is not normalized"));
        }
        for (name, p) in &self.projectors {
            let idem = (&(p * p) - p).entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if idem > 1e-12 || p.hermiticity_defect() > HERMITIAN_TOL {
                return Err(Error::config(format!("observable `{name}` is not a projector")));
            }
        }
        for (label, c) in self.collapse_ops.iter().chain(&self.output_fields) {
            if c.space() != &self.space {
                return Err(Error::config(format!("operator `{label}` lives on a different space")));
            }
        }
        Ok(())
    }
}

/// Source `{0, 1, 3}` ⊗ target `{1, 2, 3}`.
pub fn basic_space() -> CompositeSpace {
    CompositeSpace::new([(SOURCE, ["0", "1", "3"]), (TARGET, ["1", "2", "3"])]).expect("static level labels are valid")
}

/// Source `{0, 3, 1+, 1-}` ⊗ target `{1, 3+, 3-, 2+, 2-}`.
pub fn entanglement_space() -> CompositeSpace {
    CompositeSpace::new([(SOURCE, vec!["0", "3", "1+", "1-"]), (TARGET, vec!["1", "3+", "3-", "2+", "2-"])])
        .expect("static level labels are valid")
}

fn s(space: &CompositeSpace, i: &str, j: &str) -> Result<Operator> {
    sigma(space, SOURCE, i, j)
}

fn t(space: &CompositeSpace, i: &str, j: &str) -> Result<Operator> {
    sigma(space, TARGET, i, j)
}

/// `(i/2)(s† a - a† s)` for a channel whose field is `s + a`; makes the
/// source drive the target and never the reverse.
fn cascade_coupling(source: &Operator, target: &Operator) -> Operator {
    let forward = &source.dagger() * target;
    let backward = &target.dagger() * source;
    (&forward - &backward).scale(C64::new(0.0, 0.5))
}

fn sqrt_rate(rate: f64) -> f64 {
    rate.max(0.0).sqrt()
}

/// Collapse operators of the basic model, labelled `C1`..`C5`.
///
/// `C1`–`C3` are always present; `C4` (source 3→0) only when
/// `gamma30_S > 0` and `C5` (target ground dephasing) only when
/// `gamma21_T > 0`.
pub fn build_collapse_ops(params: &CascadeParams, space: &CompositeSpace) -> Result<Vec<(String, Operator)>> {
    let s13 = s(space, "1", "3")?;
    let t13 = t(space, "1", "3")?;
    let mut ops = vec![
        (
            "C1".to_string(),
            &s13.scale(sqrt_rate(params.gamma31_s)) + &t13.scale(sqrt_rate(params.gamma31_t * params.eta)),
        ),
        ("C2".to_string(), t13.scale(sqrt_rate(params.gamma31_t * (1.0 - params.eta)))),
        ("C3".to_string(), t(space, "2", "3")?.scale(sqrt_rate(params.gamma32_t))),
    ];
    if params.gamma30_s > 0.0 {
        ops.push(("C4".to_string(), s(space, "0", "3")?.scale(params.gamma30_s.sqrt())));
    }
    if params.gamma21_t > 0.0 {
        let dephase = &t(space, "2", "2")? - &t(space, "1", "1")?;
        ops.push(("C5".to_string(), dephase.scale((params.gamma21_t / 2.0).sqrt())));
    }
    Ok(ops)
}

/// Non-Hermitian Hamiltonian of the basic model, written out term by term:
///
/// `Ω(t)(σ03ˢ + σ30ˢ) - (i/2)(Γ31ˢ + Γ30ˢ)σ33ˢ - (i/2)(Γ31ᵀ + Γ32ᵀ)σ33ᵀ
///  - i√(Γ31ˢΓ31ᵀη) σ13ˢσ31ᵀ - (i/4)γ21ᵀ(σ11ᵀ + σ22ᵀ)`
pub fn build_h_eff(params: &CascadeParams, space: &CompositeSpace, time: f64) -> Result<Operator> {
    let minus_i = C64::new(0.0, -1.0);
    let drive = (&s(space, "0", "3")? + &s(space, "3", "0")?).scale(omega_l(time, &params.pulse));
    let source_decay = s(space, "3", "3")?.scale(minus_i * 0.5 * (params.gamma31_s + params.gamma30_s));
    let target_decay = t(space, "3", "3")?.scale(minus_i * 0.5 * (params.gamma31_t + params.gamma32_t));
    let cross = (&s(space, "1", "3")? * &t(space, "3", "1")?)
        .scale(minus_i * (params.gamma31_s * params.gamma31_t * params.eta).sqrt());
    let dephasing = (&t(space, "1", "1")? + &t(space, "2", "2")?).scale(minus_i * 0.25 * params.gamma21_t);
    Ok(&(&(&(&drive + &source_decay) + &target_decay) + &cross) + &dephasing)
}

/// Hermitian part of the basic model's Hamiltonian:
/// `Ω(t)(σ03ˢ + σ30ˢ) + (i/2)√(Γ31ˢΓ31ᵀη)(σ31ˢσ13ᵀ - σ13ˢσ31ᵀ)`.
pub fn build_h_herm(params: &CascadeParams, space: &CompositeSpace, time: f64) -> Result<Operator> {
    let drive = (&s(space, "0", "3")? + &s(space, "3", "0")?).scale(omega_l(time, &params.pulse));
    let k = (params.gamma31_s * params.gamma31_t * params.eta).sqrt();
    let up_down = &s(space, "3", "1")? * &t(space, "1", "3")?;
    let down_up = &s(space, "1", "3")? * &t(space, "3", "1")?;
    Ok(&drive + &(&up_down - &down_up).scale(C64::new(0.0, 0.5 * k)))
}

/// Any-excited projector `Pˢ + Pᵀ - PˢPᵀ`.
fn any_excited(source_excited: &Operator, target_excited: &Operator) -> Operator {
    &(source_excited + target_excited) - &(source_excited * target_excited)
}

/// Three-level source driven on 0↔3 feeding a three-level Λ target.
///
/// Starts in `|0_S,1_T>`; observables are `absorbed` (`|1_S,2_T>`),
/// `failed` (`|1_S,1_T>`) and `excited` (either emitter in 3).
pub fn build_basic_model(params: &CascadeParams) -> Result<ScenarioModel> {
    params.check()?;
    let space = basic_space();
    let collapse_ops = build_collapse_ops(params, &space)?;
    let source_field = s(&space, "1", "3")?.scale(sqrt_rate(params.gamma31_s));
    let target_field = t(&space, "1", "3")?.scale(sqrt_rate(params.gamma31_t * params.eta));

    let absorbed = space.basis_index(&["1", "2"])?;
    let failed = space.basis_index(&["1", "1"])?;
    let mut projectors = BTreeMap::new();
    projectors.insert("absorbed".to_string(), Operator::outer_basis(&space, absorbed, absorbed));
    projectors.insert("failed".to_string(), Operator::outer_basis(&space, failed, failed));
    projectors.insert("excited".to_string(), any_excited(&s(&space, "3", "3")?, &t(&space, "3", "3")?));

    let output_fields = vec![("C1".to_string(), collapse_ops[0].1.clone())];
    let model = ScenarioModel {
        h_static_herm: Operator::zeros(&space),
        h_drive: &s(&space, "0", "3")? + &s(&space, "3", "0")?,
        drive: DriveProfile::Gaussian(params.pulse),
        h_cascade_herm: cascade_coupling(&source_field, &target_field),
        collapse_ops,
        initial_state: StateVector::basis(&space, space.basis_index(&["0", "1"])?),
        projectors,
        output_fields,
        space,
    };
    model.validate()?;
    Ok(model)
}

/// Polarization-resolved variant: the source Raman-scatters into `1±`
/// emitting a `±` photon, which the target absorbs on `1 → 3±` and decays
/// `3± → 2±`.
///
/// Both `3± → 2±` decays emit the same photon, so they share one collapse
/// operator `C3`; that shared channel is what leaves the pair in the
/// entangled superposition rather than a mixture. Cross-coupling phases are
/// all +1. Observables: `success` (either `|1±_S,2±_T>`), `bell`
/// (`(|1+,2+> + |1-,2->)/√2`) and `excited`.
pub fn build_entanglement_model(params: &CascadeParams) -> Result<ScenarioModel> {
    params.check()?;
    let space = entanglement_space();
    let half_source = sqrt_rate(params.gamma31_s / 2.0);
    let dipole = sqrt_rate(params.gamma31_t * params.eta);
    let non_dipole = sqrt_rate(params.gamma31_t * (1.0 - params.eta));

    let mut collapse_ops = Vec::new();
    let mut output_fields = Vec::new();
    let mut h_cascade = Operator::zeros(&space);
    let mut target_excited = Operator::zeros(&space);
    let mut target_metastable = Operator::zeros(&space);
    let mut c3 = Operator::zeros(&space);
    for pol in ["+", "-"] {
        let ground_s = format!("1{pol}");
        let excited_t = format!("3{pol}");
        let stored_t = format!("2{pol}");
        let source_field = s(&space, &ground_s, "3")?.scale(half_source);
        let target_lowering = t(&space, "1", &excited_t)?;
        let target_field = target_lowering.scale(dipole);
        h_cascade = &h_cascade + &cascade_coupling(&source_field, &target_field);
        let c1 = &source_field + &target_field;
        output_fields.push((format!("C1{pol}"), c1.clone()));
        collapse_ops.push((format!("C1{pol}"), c1));
        collapse_ops.push((format!("C2{pol}"), target_lowering.scale(non_dipole)));
        c3 = &c3 + &t(&space, &stored_t, &excited_t)?;
        target_excited = &target_excited + &t(&space, &excited_t, &excited_t)?;
        target_metastable = &target_metastable + &t(&space, &stored_t, &stored_t)?;
    }
    collapse_ops.push(("C3".to_string(), c3.scale(sqrt_rate(params.gamma32_t))));
    if params.gamma30_s > 0.0 {
        collapse_ops.push(("C4".to_string(), s(&space, "0", "3")?.scale(params.gamma30_s.sqrt())));
    }
    if params.gamma21_t > 0.0 {
        let dephase = &target_metastable - &t(&space, "1", "1")?;
        collapse_ops.push(("C5".to_string(), dephase.scale((params.gamma21_t / 2.0).sqrt())));
    }

    let plus = space.basis_index(&["1+", "2+"])?;
    let minus = space.basis_index(&["1-", "2-"])?;
    let mut bell = StateVector::zeros(&space);
    bell.amplitudes_mut()[plus] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    bell.amplitudes_mut()[minus] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut projectors = BTreeMap::new();
    projectors.insert("bell".to_string(), Operator::outer(&bell, &bell)?);
    projectors.insert(
        "success".to_string(),
        &Operator::outer_basis(&space, plus, plus) + &Operator::outer_basis(&space, minus, minus),
    );
    projectors.insert("excited".to_string(), any_excited(&s(&space, "3", "3")?, &target_excited));

    let model = ScenarioModel {
        h_static_herm: Operator::zeros(&space),
        h_drive: &s(&space, "0", "3")? + &s(&space, "3", "0")?,
        drive: DriveProfile::Gaussian(params.pulse),
        h_cascade_herm: h_cascade,
        collapse_ops,
        initial_state: StateVector::basis(&space, space.basis_index(&["0", "1"])?),
        projectors,
        output_fields,
        space,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{apply, expectation};
    use proptest::prelude::*;

    fn canonical() -> CascadeParams {
        CascadeParams::default()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pulse_envelope() {
        let p = PulseShape::default();
        assert_eq!(omega_l(20.0, &p), 1.0);
        assert!((omega_l(30.0, &p) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(omega_l(1e4, &p) == 0.0 && omega_l(-1e4, &p) == 0.0);
    }

    #[test]
    fn collapse_coefficients_at_full_overlap() {
        let space = basic_space();
        let ops = build_collapse_ops(&canonical(), &space).unwrap();
        assert_eq!(ops.len(), 3);
        let c1 = &ops[0].1;
        let from_s = space.basis_index(&["3", "1"]).unwrap();
        let to_s = space.basis_index(&["1", "1"]).unwrap();
        assert!((c1.get(to_s, from_s).re - 10f64.sqrt()).abs() < 1e-15);
        let from_t = space.basis_index(&["0", "3"]).unwrap();
        let to_t = space.basis_index(&["0", "1"]).unwrap();
        assert_eq!(c1.get(to_t, from_t), c(1.0, 0.0));
        assert!(ops[1].1.is_zero());
    }

    #[test]
    fn zero_overlap_moves_target_decay_out_of_c1() {
        let space = basic_space();
        let params = CascadeParams { eta: 0.0, ..canonical() };
        let ops = build_collapse_ops(&params, &space).unwrap();
        let from_t = space.basis_index(&["0", "3"]).unwrap();
        let to_t = space.basis_index(&["0", "1"]).unwrap();
        assert_eq!(ops[0].1.get(to_t, from_t), c(0.0, 0.0));
        assert_eq!(ops[1].1.get(to_t, from_t), c(1.0, 0.0));
    }

    #[test]
    fn optional_channels() {
        let space = basic_space();
        let params = CascadeParams { gamma30_s: 10.0, gamma21_t: 0.2, ..canonical() };
        let labels: Vec<String> = build_collapse_ops(&params, &space).unwrap().into_iter().map(|(l, _)| l).collect();
        assert_eq!(labels, ["C1", "C2", "C3", "C4", "C5"]);
    }

    /// Σ C†C expanded by hand in the 9-dim basis.
    #[test]
    fn decay_operator_matches_hand_expansion() {
        let params = CascadeParams { gamma30_s: 2.0, eta: 0.7, gamma32_t: 0.4, ..canonical() };
        let space = basic_space();
        let ops = build_collapse_ops(&params, &space).unwrap();
        let sum = ops.iter().fold(Operator::zeros(&space), |acc, (_, op)| &acc + &(&op.dagger() * op));

        let idx = |a: &str, b: &str| space.basis_index(&[a, b]).unwrap();
        let mut expected = Operator::zeros(&space).entries().to_vec();
        let d = 9;
        for src in ["0", "1", "3"] {
            for tgt in ["1", "2", "3"] {
                let k = idx(src, tgt);
                let mut diag = 0.0;
                if src == "3" {
                    diag += params.gamma31_s + params.gamma30_s;
                }
                if tgt == "3" {
                    diag += params.gamma31_t + params.gamma32_t;
                }
                expected[k * d + k] = c(diag, 0.0);
            }
        }
        // cross term √(Γ31ˢΓ31ᵀη)(σ31ˢσ13ᵀ + h.c.) links |3_S,t> with |1_S,3_T>-type states
        let k = (params.gamma31_s * params.gamma31_t * params.eta).sqrt();
        expected[idx("3", "1") * d + idx("1", "3")] = c(k, 0.0);
        expected[idx("1", "3") * d + idx("3", "1")] = c(k, 0.0);
        let expected = Operator::from_entries(&space, expected).unwrap();
        assert!(sum.max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn h_eff_elements_and_unidirectionality() {
        let space = basic_space();
        let h = build_h_eff(&canonical(), &space, 13.0).unwrap();
        let ts = space.basis_index(&["1", "3"]).unwrap();
        let st = space.basis_index(&["3", "1"]).unwrap();
        let forward = h.get(ts, st);
        assert!(forward.re == 0.0 && (forward.im + 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.get(st, ts), c(0.0, 0.0));
    }

    #[test]
    fn undriven_model_leaves_initial_state_fixed() {
        let params = CascadeParams { pulse: PulseShape { omega0: 0.0, ..PulseShape::default() }, ..canonical() };
        let model = build_basic_model(&params).unwrap();
        for time in [0.0, 20.0, 77.0] {
            let out = apply(&model.h_eff(time), &model.initial_state).unwrap();
            assert_eq!(out.norm2(), 0.0);
        }
    }

    #[test]
    fn h_herm_is_hermitian_and_reduces_to_drive() {
        let space = basic_space();
        let h = build_h_herm(&canonical(), &space, 18.0).unwrap();
        assert!(h.hermiticity_defect() <= 1e-12);

        let params = CascadeParams { eta: 0.0, ..canonical() };
        let h0 = build_h_herm(&params, &space, 18.0).unwrap();
        let drive = (&s(&space, "0", "3").unwrap() + &s(&space, "3", "0").unwrap()).scale(omega_l(18.0, &params.pulse));
        assert!(h0.max_abs_diff(&drive).unwrap() == 0.0);
    }

    #[test]
    fn basic_model_structure() {
        let model = build_basic_model(&canonical()).unwrap();
        assert_eq!(model.initial_state.norm2(), 1.0);
        let p = model.projector("absorbed").unwrap();
        assert_eq!(&(p * p), p);
        assert_eq!(model.collapse_ops.len(), 3);
        assert!(model.projector("nope").is_err());
    }

    #[test]
    fn collapse_ops_annihilate_ground_manifold() {
        let params = CascadeParams { gamma30_s: 3.0, eta: 0.6, ..canonical() };
        let model = build_basic_model(&params).unwrap();
        let space = &model.space;
        for src in ["0", "1"] {
            for tgt in ["1", "2"] {
                let g = StateVector::basis(space, space.basis_index(&[src, tgt]).unwrap());
                for (label, op) in &model.collapse_ops {
                    assert_eq!(apply(op, &g).unwrap().norm2(), 0.0, "{label} on |{src},{tgt}>");
                }
            }
        }
    }

    #[test]
    fn zero_overlap_decouples_emitters() {
        let params = CascadeParams { eta: 0.0, ..canonical() };
        let model = build_basic_model(&params).unwrap();
        let h = model.h_eff(20.0);
        let space = &model.space;
        // any element that changes both the source and target level vanishes
        for r in 0..9 {
            for col in 0..9 {
                let (a, b) = (space.multi_index(r), space.multi_index(col));
                if a[0] != b[0] && a[1] != b[1] {
                    assert_eq!(h.get(r, col), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn entanglement_model_structure() {
        let model = build_entanglement_model(&canonical()).unwrap();
        assert_eq!(model.space.dim(), 20);
        let labels: Vec<&str> = model.collapse_ops.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["C1+", "C2+", "C1-", "C2-", "C3"]);
        let bell = model.projector("bell").unwrap();
        let success = model.projector("success").unwrap();
        // bell ⊂ success
        assert!((success * bell).max_abs_diff(bell).unwrap() < 1e-15);
        assert!((expectation(&model.initial_state, success).unwrap().re).abs() == 0.0);
    }

    #[test]
    fn rejects_invalid_params() {
        let bad = CascadeParams { gamma32_t: -1.0, ..canonical() };
        match build_basic_model(&bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "params.gamma32_T"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let bad = CascadeParams { eta: 1.5, ..canonical() };
        assert!(build_entanglement_model(&bad).is_err());
    }

    proptest! {
        #[test]
        fn reconstruction_identity_holds(
            g31s in 0.0f64..20.0, g30s in 0.0f64..20.0, g32t in 0.0f64..3.0,
            g21t in 0.0f64..0.5, eta in 0.0f64..=1.0, time in 0.0f64..100.0,
        ) {
            let params = CascadeParams {
                gamma31_s: g31s, gamma30_s: g30s, gamma32_t: g32t, gamma21_t: g21t, eta,
                ..canonical()
            };
            let space = basic_space();
            let ops = build_collapse_ops(&params, &space).unwrap();
            let decay = ops.iter().fold(Operator::zeros(&space), |acc, (_, op)| &acc + &(&op.dagger() * op));
            let reconstructed = &build_h_herm(&params, &space, time).unwrap() - &decay.scale(c(0.0, 0.5));
            let direct = build_h_eff(&params, &space, time).unwrap();
            prop_assert!(reconstructed.max_abs_diff(&direct).unwrap() <= 1e-12);

            let model = build_basic_model(&params).unwrap();
            prop_assert!(model.h_eff(time).max_abs_diff(&direct).unwrap() <= 1e-12);
            prop_assert!(model.h_herm(time).max_abs_diff(&build_h_herm(&params, &space, time).unwrap()).unwrap() <= 1e-12);
        }
    }
}
