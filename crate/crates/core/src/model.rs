//! Core data types shared by all modules: problem parameters, index sets,
//! discrete representations of function pairs and their Gram-matrix form.
//!
//! A *discrete representation* is the tuple set `{(x_i, f_i, g_i, h_i, s_i)}`
//! of first-order data of an objective/kernel pair `(f, h)` at the iterates
//! `x_0..x_N` and the optimum `x_*`. The Gram form `(G, F, H)` collects all
//! pairwise inner products of the vectors `x_i, g_i, s_i` in a fixed block
//! layout `[x-block; g-block; s-block]`, which is what the semidefinite
//! programs operate on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Problem parameters: smoothness constant `L`, step size `lambda`,
/// iteration count `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub l: f64,
    pub lambda: f64,
    pub n_iters: usize,
}

impl ProblemParams {
    pub fn new(l: f64, lambda: f64, n_iters: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("L must be positive, got {l}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if n_iters == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        Ok(Self { l, lambda, n_iters })
    }
}

/// Label of a point in the index set: iterate `0..=N` or the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointIndex {
    Iter(usize),
    Star,
}

impl std::fmt::Display for PointIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointIndex::Iter(k) => write!(f, "{k}"),
            PointIndex::Star => write!(f, "star"),
        }
    }
}

impl Serialize for PointIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PointIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        if raw == "star" {
            Ok(PointIndex::Star)
        } else {
            raw.parse::<usize>()
                .map(PointIndex::Iter)
                .map_err(|_| serde::de::Error::custom(format!("bad point index {raw:?}")))
        }
    }
}

/// Ordered index set `{0, 1, .., N, *}`; the star index is unique and last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexSet {
    pub n_iters: usize,
}

impl IndexSet {
    pub fn new(n_iters: usize) -> Self {
        Self { n_iters }
    }

    /// Number of labels, `N + 2`.
    pub fn len(&self) -> usize {
        self.n_iters + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Canonical position of a label: iterates in order, star last.
    pub fn position(&self, idx: PointIndex) -> usize {
        match idx {
            PointIndex::Iter(k) => {
                assert!(k <= self.n_iters, "iterate index {k} out of range");
                k
            }
            PointIndex::Star => self.n_iters + 1,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PointIndex> + '_ {
        (0..=self.n_iters)
            .map(PointIndex::Iter)
            .chain(std::iter::once(PointIndex::Star))
    }

    /// All ordered pairs `(i, j)` with `i != j`.
    pub fn ordered_pairs(&self) -> Vec<(PointIndex, PointIndex)> {
        let mut out = Vec::with_capacity(self.len() * (self.len() - 1));
        for i in self.iter() {
            for j in self.iter() {
                if i != j {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// First-order data of the pair `(f, h)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePoint {
    pub x: DVector<f64>,
    pub f: f64,
    pub g: DVector<f64>,
    pub h: f64,
    pub s: DVector<f64>,
}

impl DiscretePoint {
    pub fn new(x: DVector<f64>, f: f64, g: DVector<f64>, h: f64, s: DVector<f64>) -> Self {
        Self { x, f, g, h, s }
    }
}

/// Oracle outputs of a pair `(f, h)` at the iterates and the optimum.
///
/// Serializes as `{"params": .., "dim": .., "points": [{"index": "0".."star",
/// "x": [..], "f": .., "g": [..], "h": .., "s": [..]}]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRepresentation {
    pub params: ProblemParams,
    pub dim: usize,
    /// Points in canonical order: `x_0, .., x_N, x_*`.
    pub points: Vec<DiscretePoint>,
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    index: PointIndex,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    h: f64,
    s: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RepRecord {
    params: ProblemParams,
    dim: usize,
    points: Vec<PointRecord>,
}

impl Serialize for DiscreteRepresentation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let index = self.index_set();
        let points = index
            .iter()
            .map(|idx| {
                let p = self.point(idx);
                PointRecord {
                    index: idx,
                    x: p.x.iter().cloned().collect(),
                    f: p.f,
                    g: p.g.iter().cloned().collect(),
                    h: p.h,
                    s: p.s.iter().cloned().collect(),
                }
            })
            .collect();
        RepRecord { params: self.params, dim: self.dim, points }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteRepresentation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = RepRecord::deserialize(d)?;
        let index = IndexSet::new(rec.params.n_iters);
        let mut slots: Vec<Option<DiscretePoint>> = vec![None; index.len()];
        for p in rec.points {
            let pos = match p.index {
                PointIndex::Iter(k) if k <= rec.params.n_iters => k,
                PointIndex::Star => rec.params.n_iters + 1,
                other => {
                    return Err(serde::de::Error::custom(format!(
                        "point index {other} out of range"
                    )))
                }
            };
            slots[pos] = Some(DiscretePoint::new(
                DVector::from_vec(p.x),
                p.f,
                DVector::from_vec(p.g),
                p.h,
                DVector::from_vec(p.s),
            ));
        }
        let points: Option<Vec<_>> = slots.into_iter().collect();
        let points =
            points.ok_or_else(|| serde::de::Error::custom("missing point in representation"))?;
        DiscreteRepresentation::new(rec.params, rec.dim, points)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

impl DiscreteRepresentation {
    pub fn new(params: ProblemParams, dim: usize, points: Vec<DiscretePoint>) -> Result<Self> {
        let index = IndexSet::new(params.n_iters);
        if points.len() != index.len() {
            return Err(Error::InvalidRepresentation(format!(
                "expected {} points, got {}",
                index.len(),
                points.len()
            )));
        }
        for (k, p) in points.iter().enumerate() {
            if p.x.len() != dim || p.g.len() != dim || p.s.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {k} has vectors of dimension ({}, {}, {}), expected {dim}",
                    p.x.len(),
                    p.g.len(),
                    p.s.len()
                )));
            }
            let finite = p.x.iter().chain(p.g.iter()).chain(p.s.iter()).all(|v| v.is_finite())
                && p.f.is_finite()
                && p.h.is_finite();
            if !finite {
                return Err(Error::InvalidRepresentation(format!(
                    "point {k} contains non-finite values"
                )));
            }
        }
        // A function cannot take two values at one point: coincident iterates
        // must agree on both scalar values.
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                if points[a].x == points[b].x
                    && (points[a].f != points[b].f || points[a].h != points[b].h)
                {
                    return Err(Error::InvalidRepresentation(format!(
                        "points {a} and {b} coincide but carry different f/h values"
                    )));
                }
            }
        }
        Ok(Self { params, dim, points })
    }

    pub fn index_set(&self) -> IndexSet {
        IndexSet::new(self.params.n_iters)
    }

    pub fn point(&self, idx: PointIndex) -> &DiscretePoint {
        &self.points[self.index_set().position(idx)]
    }
}

/// Gram-matrix form of a discrete representation.
///
/// `G` is the `3(N+2)` Gram matrix of all `x_i, g_i, s_i` in block order
/// `[x; g; s]`, each block ordered `0..N, *`. `F` and `H` hold the function
/// values in the same within-block order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PepMatrices {
    pub params: ProblemParams,
    pub g: DMatrix<f64>,
    pub f: DVector<f64>,
    pub h: DVector<f64>,
}

/// Block label inside the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramBlock {
    X = 0,
    G = 1,
    S = 2,
}

/// Row of `(block, index)` in the fixed `[x; g; s]` layout.
pub fn gram_row(index: IndexSet, block: GramBlock, idx: PointIndex) -> usize {
    (block as usize) * index.len() + index.position(idx)
}

/// Bregman distance `D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>` from
/// first-order data of the kernel.
pub fn bregman_distance(
    h_at_x: f64,
    h_at_y: f64,
    grad_h_at_y: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    if x.len() != y.len() || grad_h_at_y.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "bregman_distance: got dims {}, {}, {}",
            h_at_x.to_string().len().min(0) + x.len(),
            y.len(),
            grad_h_at_y.len()
        )));
    }
    Ok(h_at_x - h_at_y - grad_h_at_y.dot(&(x - y)))
}

/// Assemble the Gram form of a representation. `G` is positive semidefinite
/// by construction (it is `P^T P` for the stacked vector matrix `P`).
pub fn gram_from_representation(rep: &DiscreteRepresentation) -> PepMatrices {
    let index = rep.index_set();
    let m = index.len();
    let mut p = DMatrix::zeros(rep.dim, 3 * m);
    for (k, pt) in rep.points.iter().enumerate() {
        p.set_column(k, &pt.x);
        p.set_column(m + k, &pt.g);
        p.set_column(2 * m + k, &pt.s);
    }
    let g = p.transpose() * &p;
    let f = DVector::from_iterator(m, rep.points.iter().map(|pt| pt.f));
    let h = DVector::from_iterator(m, rep.points.iter().map(|pt| pt.h));
    PepMatrices { params: rep.params, g, f, h }
}

/// Recover a representation from a Gram form by eigendecomposition.
///
/// The ambient dimension is the number of eigenvalues above
/// `rank_tol * lambda_max`. Eigendecomposition is used instead of Cholesky
/// because the interesting (low-rank worst-case) matrices are rank deficient.
pub fn representation_from_gram(
    mat: &PepMatrices,
    rank_tol: f64,
) -> Result<DiscreteRepresentation> {
    let index = IndexSet::new(mat.params.n_iters);
    let m = index.len();
    if mat.g.nrows() != 3 * m || mat.g.ncols() != 3 * m {
        return Err(Error::DimensionMismatch(format!(
            "G is {}x{}, expected {}",
            mat.g.nrows(),
            mat.g.ncols(),
            3 * m
        )));
    }
    let sym = (&mat.g + mat.g.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::min);
    if lambda_min < -1e-6 * lambda_max.max(1.0) {
        return Err(Error::NotPsd(format!(
            "minimum eigenvalue {lambda_min:.3e} vs maximum {lambda_max:.3e}"
        )));
    }
    let kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > rank_tol * lambda_max)
        .collect();
    let dim = kept.len().max(1);
    // Column j of the factor holds the recovered vector for Gram row j.
    let mut factor = DMatrix::zeros(dim, 3 * m);
    for (r, &i) in kept.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        for j in 0..3 * m {
            factor[(r, j)] = scale * eig.eigenvectors[(j, i)];
        }
    }
    let mut points = Vec::with_capacity(m);
    for k in 0..m {
        points.push(DiscretePoint::new(
            factor.column(k).into_owned(),
            mat.f[k],
            factor.column(m + k).into_owned(),
            mat.h[k],
            factor.column(2 * m + k).into_owned(),
        ));
    }
    DiscreteRepresentation::new(mat.params, dim, points)
}

/// Default relative eigenvalue cutoff used when recovering worst cases.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Numerical rank of a symmetric PSD matrix at a relative tolerance.
pub fn numerical_rank(g: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sym = (g + g.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    eig.eigenvalues.iter().filter(|&&v| v > rank_tol * lambda_max.max(1e-300)).count()
}
