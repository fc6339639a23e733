//! Dense operators and state vectors on a [`CompositeSpace`].

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::space::CompositeSpace;

/// Squared norm below which a state cannot be normalized.
pub const DEGENERATE_NORM2: f64 = 1e-15;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(space: &CompositeSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), data: vec![C64::new(0.0, 0.0); d * d] }
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let mut op = Self::zeros(space);
        for i in 0..space.dim() {
            op.data[i * space.dim() + i] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_fn(space: &CompositeSpace, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = space.dim();
        let data = (0..d * d).map(|k| f(k / d, k % d)).collect();
        Self { space: space.clone(), data }
    }

    pub fn from_entries(space: &CompositeSpace, data: Vec<C64>) -> Result<Self> {
        let d = space.dim();
        if data.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: data.len() });
        }
        Ok(Self { space: space.clone(), data })
    }

    /// `|ket><bra|` between two basis states.
    pub fn outer_basis(space: &CompositeSpace, ket: usize, bra: usize) -> Self {
        let mut op = Self::zeros(space);
        op.data[ket * space.dim() + bra] = C64::new(1.0, 0.0);
        op
    }

    /// `|a><b|` for arbitrary state vectors.
    pub fn outer(a: &StateVector, b: &StateVector) -> Result<Self> {
        check_space(&a.space, &b.space)?;
        Ok(Self::from_fn(&a.space, |i, j| a.amp[i] * b.amp[j].conj()))
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        Self::from_fn(&self.space, |i, j| self.data[j * d + i].conj())
    }

    pub fn scale(&self, factor: impl Into<C64>) -> Self {
        let factor = factor.into();
        Self { space: self.space.clone(), data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { space: self.space.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Self> {
        self.try_add(&other.scale(-1.0))
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        let d = self.dim();
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(Self { space: self.space.clone(), data })
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        check_space(&self.space, &other.space)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max |A - A†|` elementwise.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator spaces differ")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator spaces differ")
    }
}

fn check_space(a: &CompositeSpace, b: &CompositeSpace) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// `|i><j|` on one subsystem, identity on all others.
pub fn sigma(space: &CompositeSpace, subsystem: &str, i: &str, j: &str) -> Result<Operator> {
    let (k, li) = space.level(subsystem, i)?;
    let (_, lj) = space.level(subsystem, j)?;
    let mut op = Operator::zeros(space);
    let d = space.dim();
    for col in 0..d {
        let mut multi = space.multi_index(col);
        if multi[k] != lj {
            continue;
        }
        multi[k] = li;
        let row = space.index(&multi)?;
        op.data[row * d + col] = C64::new(1.0, 0.0);
    }
    Ok(op)
}

/// Kronecker product; the result lives on `a.space() ⊗ b.space()`.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let space = a.space.tensor(&b.space)?;
    kron_in(&space, a, b)
}

/// Kronecker product embedded in an existing composite space.
///
/// Entry `(i·db + k, j·db + l)` is `a[i,j]·b[k,l]`.
pub fn kron_in(space: &CompositeSpace, a: &Operator, b: &Operator) -> Result<Operator> {
    let (da, db) = (a.dim(), b.dim());
    if da * db != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: da * db });
    }
    Ok(Operator::from_fn(space, |r, c| a.get(r / db, c / db) * b.get(r % db, c % db)))
}

/// Complex amplitudes over the basis of a [`CompositeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: CompositeSpace,
    amp: Vec<C64>,
}

impl StateVector {
    pub fn zeros(space: &CompositeSpace) -> Self {
        Self { space: space.clone(), amp: vec![C64::new(0.0, 0.0); space.dim()] }
    }

    pub fn basis(space: &CompositeSpace, index: usize) -> Self {
        let mut psi = Self::zeros(space);
        psi.amp[index] = C64::new(1.0, 0.0);
        psi
    }

    pub fn from_amplitudes(space: &CompositeSpace, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amp.len() });
        }
        Ok(Self { space: space.clone(), amp })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn norm2(&self) -> f64 {
        self.amp.iter().map(C64::norm_sqr).sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm2();
        if !(n2 >= DEGENERATE_NORM2) {
            return Err(Error::DegenerateState(n2));
        }
        Ok(self.scale(1.0 / n2.sqrt()))
    }

    pub fn scale(&self, factor: impl Into<C64>) -> Self {
        let factor = factor.into();
        Self { space: self.space.clone(), amp: self.amp.iter().map(|z| z * factor).collect() }
    }

    pub fn try_add(&self, other: &StateVector) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { space: self.space.clone(), amp: self.amp.iter().zip(&other.amp).map(|(a, b)| a + b).collect() })
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_space(&self.space, &other.space)?;
        Ok(self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.amp.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn apply(op: &Operator, psi: &StateVector) -> Result<StateVector> {
    check_space(&op.space, &psi.space)?;
    let d = op.dim();
    let amp = (0..d).map(|i| op.data[i * d..(i + 1) * d].iter().zip(&psi.amp).map(|(a, x)| a * x).sum()).collect();
    Ok(StateVector { space: psi.space.clone(), amp })
}

/// `<psi|op|psi>` without normalization.
pub fn expectation(psi: &StateVector, op: &Operator) -> Result<C64> {
    psi.inner(&apply(op, psi)?)
}
