//! Tensor-product Hilbert spaces built from labelled subsystems.
//!
//! Basis states are enumerated row-major over the subsystem order: the last
//! subsystem's level index varies fastest. Every operator embedding in the
//! crate goes through this one bijection.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub name: String,
    pub levels: Vec<String>,
}

impl Subsystem {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

#[derive(Debug, PartialEq, Eq)]
struct SpaceInner {
    subsystems: Vec<Subsystem>,
    dims: Vec<usize>,
    /// strides[k] = product of dims[k+1..]
    strides: Vec<usize>,
    dim: usize,
}

/// Cheap-to-clone handle to an immutable composite space.
#[derive(Clone)]
pub struct CompositeSpace {
    inner: Arc<SpaceInner>,
}

impl PartialEq for CompositeSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl Eq for CompositeSpace {}

impl fmt::Debug for CompositeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeSpace")
            .field("subsystems", &self.inner.subsystems)
            .field("dim", &self.inner.dim)
            .finish()
    }
}

impl CompositeSpace {
    /// Builds a space from `(name, levels)` pairs in basis order.
    pub fn new<N, L, S>(subsystems: impl IntoIterator<Item = (N, L)>) -> Result<Self>
    where
        N: Into<String>,
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(name, levels)| Subsystem { name: name.into(), levels: levels.into_iter().map(Into::into).collect() })
            .collect();
        if subsystems.is_empty() {
            return Err(Error::config("composite space needs at least one subsystem"));
        }
        for (k, sub) in subsystems.iter().enumerate() {
            if sub.is_empty() {
                return Err(Error::config(format!("subsystem `{}` has no levels", sub.name)));
            }
            if subsystems[..k].iter().any(|s| s.name == sub.name) {
                return Err(Error::config(format!("duplicate subsystem `{}`", sub.name)));
            }
            for (i, level) in sub.levels.iter().enumerate() {
                if sub.levels[..i].contains(level) {
                    return Err(Error::config(format!("duplicate level `{level}` in subsystem `{}`", sub.name)));
                }
            }
        }
        let dims: Vec<usize> = subsystems.iter().map(Subsystem::len).collect();
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let dim = dims.iter().product();
        Ok(Self { inner: Arc::new(SpaceInner { subsystems, dims, strides, dim }) })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.inner.subsystems
    }

    pub fn subsystem_index(&self, name: &str) -> Result<usize> {
        self.inner
            .subsystems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::config(format!("unknown subsystem `{name}`")))
    }

    /// Resolves a `(subsystem, level)` label pair to indices.
    pub fn level(&self, subsystem: &str, level: &str) -> Result<(usize, usize)> {
        let k = self.subsystem_index(subsystem)?;
        let l = self.inner.subsystems[k]
            .level_index(level)
            .ok_or_else(|| Error::config(format!("unknown level `{level}` in subsystem `{subsystem}`")))?;
        Ok((k, l))
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.dim());
        self.inner.strides.iter().zip(&self.inner.dims).map(|(stride, dim)| (index / stride) % dim).collect()
    }

    pub fn index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.inner.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.inner.dims.len(), found: multi.len() });
        }
        let mut index = 0;
        for ((&m, &d), &s) in multi.iter().zip(&self.inner.dims).zip(&self.inner.strides) {
            if m >= d {
                return Err(Error::config(format!("level index {m} out of range for dimension {d}")));
            }
            index += m * s;
        }
        Ok(index)
    }

    /// Basis index from one level label per subsystem, in subsystem order.
    pub fn basis_index(&self, levels: &[&str]) -> Result<usize> {
        if levels.len() != self.inner.subsystems.len() {
            return Err(Error::DimensionMismatch { expected: self.inner.subsystems.len(), found: levels.len() });
        }
        let multi = self
            .inner
            .subsystems
            .iter()
            .zip(levels)
            .map(|(sub, level)| {
                sub.level_index(level)
                    .ok_or_else(|| Error::config(format!("unknown level `{level}` in subsystem `{}`", sub.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.index(&multi)
    }

    /// Human-readable ket label such as `|1_S,2_T>`.
    pub fn basis_label(&self, index: usize) -> String {
        let parts: Vec<String> = self
            .multi_index(index)
            .into_iter()
            .zip(&self.inner.subsystems)
            .map(|(m, sub)| format!("{}_{}", sub.levels[m], sub.name))
            .collect();
        format!("|{}>", parts.join(","))
    }

    /// Product space with `self`'s subsystems first.
    pub fn tensor(&self, other: &CompositeSpace) -> Result<CompositeSpace> {
        CompositeSpace::new(
            self.subsystems().iter().chain(other.subsystems()).map(|s| (s.name.clone(), s.levels.clone())),
        )
    }

    /// Single-subsystem space for the `k`-th factor.
    pub fn factor(&self, k: usize) -> Result<CompositeSpace> {
        let sub = self.inner.subsystems.get(k).ok_or_else(|| Error::config(format!("no subsystem at position {k}")))?;
        CompositeSpace::new([(sub.name.clone(), sub.levels.clone())])
    }
}
