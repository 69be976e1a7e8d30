//! Boxes in Z^d and R^d, with row-major site enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    Lattice,
    Continuum,
}

/// The centred box `[-radius, radius]^d`, either as lattice sites or as a cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub d: usize,
    pub radius: f64,
    pub kind: BoxKind,
}

impl BoxSpec {
    pub fn lattice(d: usize, radius: usize) -> Self {
        Self { d, radius: radius as f64, kind: BoxKind::Lattice }
    }

    pub fn continuum(d: usize, radius: f64) -> Self {
        Self { d, radius, kind: BoxKind::Continuum }
    }

    pub fn lattice_radius(&self) -> Result<usize> {
        if self.kind != BoxKind::Lattice || self.radius < 0.0 || self.radius.fract() != 0.0 {
            return domain(format!("{self:?} is not a lattice box"));
        }
        Ok(self.radius as usize)
    }

    pub fn region(&self) -> Result<LatticeRegion> {
        Ok(LatticeRegion::centered(self.d, self.lattice_radius()? as i64))
    }
}

/// Rectangular block of sites `lo[i] <= z[i] <= hi[i]`, enumerated with the
/// last coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeRegion {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeRegion {
    pub fn centered(d: usize, radius: i64) -> Self {
        Self { lo: vec![-radius; d], hi: vec![radius; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1).max(0) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.extent(a + 1);
        }
        s
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        z.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        if !self.contains(z) {
            return None;
        }
        let strides = self.strides();
        Some(z.iter().enumerate().map(|(a, &x)| (x - self.lo[a]) as usize * strides[a]).sum())
    }

    pub fn site(&self, mut index: usize) -> Vec<i64> {
        let d = self.dim();
        let mut z = vec![0; d];
        for a in (0..d).rev() {
            let n = self.extent(a);
            z[a] = self.lo[a] + (index % n) as i64;
            index /= n;
        }
        z
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// Intersection with another region of the same dimension.
    pub fn intersect(&self, other: &LatticeRegion) -> LatticeRegion {
        LatticeRegion {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect(),
        }
    }

    /// Whether `self` lies inside `outer`.
    pub fn is_within(&self, outer: &LatticeRegion) -> bool {
        self.lo.iter().zip(&outer.lo).all(|(a, b)| a >= b) && self.hi.iter().zip(&outer.hi).all(|(a, b)| a <= b)
    }

    /// Copies the values of `outer_values` (laid out on `outer`) that lie in `self`.
    pub fn restrict<T: Copy>(&self, outer: &LatticeRegion, outer_values: &[T]) -> Vec<T> {
        self.sites().map(|z| outer_values[outer.index_of(&z).expect("sub-region")]).collect()
    }
}
