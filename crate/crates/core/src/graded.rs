//! Graded cohomology spaces and their elements.
//!
//! A `GradedSpace` is the basis bookkeeping for the (even-parity) Chen-Ruan
//! cohomology of one orbifold, ordinary or compactly supported: class names,
//! the sector each class lives on, the internal degree on the inertia
//! component and the age-shifted Chen-Ruan degree, plus the involution on
//! basis classes. Cup products are stored as sparse structure constants.

use std::collections::HashMap;
use std::sync::Arc;

use crate::scalar::{Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    Ordinary,
    Compact,
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub name: String,
    pub sector: usize,
    /// Ordinary cohomological degree on the inertia component (even).
    pub internal_deg: i64,
    /// Chen-Ruan degree: internal degree shifted by twice the age.
    pub cr_deg: Rat,
}

#[derive(Clone, Debug)]
pub struct GradedSpace {
    pub label: String,
    pub support: Support,
    pub classes: Vec<ClassInfo>,
    /// Involution pullback on basis classes: class i pairs with sector
    /// inv(sector(i)) and corresponds to class inv_class[i] there.
    pub inv_class: Vec<usize>,
}

impl GradedSpace {
    pub fn dim(&self) -> usize {
        self.classes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn classes_of_sector(&self, sector: usize) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&i| self.classes[i].sector == sector)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CohElement {
    pub space: Arc<GradedSpace>,
    pub coeffs: Vec<Scalar>,
}

impl CohElement {
    pub fn zero(space: Arc<GradedSpace>) -> Self {
        let n = space.dim();
        CohElement {
            space,
            coeffs: vec![Scalar::zero(); n],
        }
    }

    pub fn basis(space: Arc<GradedSpace>, i: usize) -> Self {
        let mut e = CohElement::zero(space);
        e.coeffs[i] = Scalar::one();
        e
    }

    pub fn from_coeffs(space: Arc<GradedSpace>, coeffs: Vec<Scalar>) -> Self {
        assert_eq!(space.dim(), coeffs.len(), "coefficient vector length");
        CohElement { space, coeffs }
    }

    pub fn add(&self, other: &CohElement) -> CohElement {
        assert!(Arc::ptr_eq(&self.space, &other.space) || self.space.label == other.space.label);
        CohElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(other.coeffs.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &CohElement) -> CohElement {
        self.add(&other.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> CohElement {
        CohElement {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &CohElement) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }

    /// Keep only components of the given Chen-Ruan degree.
    pub fn cr_degree_part(&self, deg: &Rat) -> CohElement {
        let mut out = CohElement::zero(self.space.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if &self.space.classes[i].cr_deg == deg {
                out.coeffs[i] = c.clone();
            }
        }
        out
    }

    /// Involution pullback inv^*.
    pub fn inv_pullback(&self) -> CohElement {
        let mut out = CohElement::zero(self.space.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            // (inv^* x)_i reads the coefficient of the partner class
            out.coeffs[i] = self.coeffs[self.space.inv_class[i]].clone();
            let _ = c;
        }
        out
    }

    /// Apply a diagonal operator given per-class scalars.
    pub fn diag_apply(&self, d: &[Scalar]) -> CohElement {
        CohElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(d.iter())
                .map(|(a, b)| a.mul(b))
                .collect(),
        }
    }
}

/// Sparse cup-product structure constants: (i, j) -> sum_k c^k_{ij} e_k.
#[derive(Clone, Debug, Default)]
pub struct CupTable {
    pub entries: HashMap<(usize, usize), Vec<(usize, Scalar)>>,
}

impl CupTable {
    pub fn insert(&mut self, i: usize, j: usize, k: usize, c: Scalar) {
        if c.is_zero() {
            return;
        }
        self.entries.entry((i, j)).or_default().push((k, c));
    }

    /// Symmetrized insert for commuting (even-degree) classes.
    pub fn insert_sym(&mut self, i: usize, j: usize, k: usize, c: Scalar) {
        self.insert(i, j, k, c.clone());
        if i != j {
            self.insert(j, i, k, c);
        }
    }

    pub fn cup(&self, a: &[Scalar], b: &[Scalar], out_dim: usize) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); out_dim];
        for ((i, j), terms) in &self.entries {
            if a[*i].is_zero() || b[*j].is_zero() {
                continue;
            }
            let f = a[*i].mul(&b[*j]);
            for (k, c) in terms {
                out[*k] = out[*k].add(&f.mul(c));
            }
        }
        out
    }

    /// Matrix of cup product by the (left) element `x`.
    pub fn cup_matrix(&self, x: &[Scalar], out_dim: usize, in_dim: usize) -> crate::linalg::Mat {
        let mut m = crate::linalg::Mat::zeros(out_dim, in_dim);
        for ((i, j), terms) in &self.entries {
            if x[*i].is_zero() {
                continue;
            }
            for (k, c) in terms {
                let add = x[*i].mul(c);
                m[(*k, *j)] = m[(*k, *j)].add(&add);
            }
        }
        m
    }
}
