//! Self-contained first-order solver for the conic programs produced by the
//! performance estimation builders: linear objective, linear equality and
//! inequality constraints, one PSD block plus free scalar variables.
//!
//! The method is a two-block ADMM: alternate projection onto the affine
//! subspace of the constraints (a cached factorization) and onto the cone
//! (full symmetric eigendecomposition for the PSD block, clipping for
//! slacks), with scaled dual updates, over-relaxation and a deterministic
//! penalty adaptation rule. Problems here are small (PSD block below ~100),
//! so dense eigendecompositions per iteration are fine.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One affine row: `<mat, X> + <free, y>` compared to `rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicConstraint {
    pub mat: DMatrix<f64>,
    pub free: DVector<f64>,
    pub rhs: f64,
}

/// Maximization problem over a PSD block `X` and free scalars `y`:
///
/// maximize `<obj_mat, X> + <obj_free, y>` subject to the equality rows,
/// the `>=` inequality rows, and `X` PSD.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProgram {
    pub psd_dim: usize,
    pub n_free: usize,
    pub obj_mat: DMatrix<f64>,
    pub obj_free: DVector<f64>,
    pub eq_constraints: Vec<ConicConstraint>,
    /// Sense `>= rhs`.
    pub ineq_constraints: Vec<ConicConstraint>,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<()> {
        let d = self.psd_dim;
        let chk = |c: &ConicConstraint, what: &str| -> Result<()> {
            if c.mat.nrows() != d || c.mat.ncols() != d {
                return Err(Error::InvalidParameter(format!(
                    "{what}: matrix part is {}x{}, expected {d}x{d}",
                    c.mat.nrows(),
                    c.mat.ncols()
                )));
            }
            if c.free.len() != self.n_free {
                return Err(Error::InvalidParameter(format!(
                    "{what}: free part has length {}, expected {}",
                    c.free.len(),
                    self.n_free
                )));
            }
            Ok(())
        };
        if self.obj_mat.nrows() != d || self.obj_mat.ncols() != d {
            return Err(Error::InvalidParameter("objective matrix has wrong shape".into()));
        }
        if self.obj_free.len() != self.n_free {
            return Err(Error::InvalidParameter("objective free part has wrong length".into()));
        }
        for (k, c) in self.eq_constraints.iter().enumerate() {
            chk(c, &format!("equality {k}"))?;
        }
        for (k, c) in self.ineq_constraints.iter().enumerate() {
            chk(c, &format!("inequality {k}"))?;
        }
        Ok(())
    }
}

/// Solver knobs. All tolerances are absolute/relative in the usual sense;
/// `unbounded_cap` is the objective level past which the primal is declared
/// unbounded. The seed is kept for interface stability; the method itself
/// is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub unbounded_cap: f64,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { eps_abs: 1e-8, eps_rel: 1e-8, max_iter: 200_000, unbounded_cap: 1e6, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    UnboundedSuspected,
    Infeasible,
    MaxIter,
}

/// Residual report attached to every solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResiduals {
    pub max_violation: f64,
    pub consensus: f64,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolveStatus,
    /// Objective value (maximization sense) at the returned point.
    pub value: f64,
    pub x: DMatrix<f64>,
    pub free: DVector<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_ineq: Vec<f64>,
    pub residuals: SolveResiduals,
    /// Raw iterates for warm starting a related solve.
    pub warm: WarmStart,
}

/// Opaque iterate snapshot accepted by [`solve_with_start`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarmStart {
    v: DVector<f64>,
    z: DVector<f64>,
    w: DVector<f64>,
    rho: f64,
}

/// Compressed sparse rows; enough for `M v`, `M^T u` and `M M^T`.
#[derive(Debug, Clone)]
struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    fn mul(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(v.len(), self.ncols);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * v[self.indices[k]];
            }
            out[r] = acc;
        }
    }

    fn mul_t(&self, u: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(u.len(), self.nrows);
        out.fill(0.0);
        for r in 0..self.nrows {
            let ur = u[r];
            if ur == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += self.data[k] * ur;
            }
        }
    }

    /// Dense `M M^T`, accumulated column by column.
    fn gram(&self) -> DMatrix<f64> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                cols[self.indices[k]].push((r, self.data[k]));
            }
        }
        let mut out = DMatrix::zeros(self.nrows, self.nrows);
        for col in cols {
            for &(r1, v1) in &col {
                for &(r2, v2) in &col {
                    out[(r1, r2)] += v1 * v2;
                }
            }
        }
        out
    }
}

/// Index pairs of the scaled vectorization of symmetric matrices
/// (`svec`), upper triangle in column-major order; off-diagonal entries
/// carry a factor `sqrt(2)` so Frobenius products become dot products.
fn svec_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..=j {
            out.push((i, j));
        }
    }
    out
}

fn svec_into(m: &DMatrix<f64>, pairs: &[(usize, usize)], out: &mut [f64]) {
    let s = std::f64::consts::SQRT_2;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        out[k] = if i == j { m[(i, j)] } else { s * m[(i, j)] };
    }
}

fn unsvec(v: &[f64], d: usize, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let s = std::f64::consts::SQRT_2;
    let mut m = DMatrix::zeros(d, d);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if i == j {
            m[(i, j)] = v[k];
        } else {
            // Divide by the same constant used in svec so the round trip is
            // exact for exactly representable products.
            m[(i, j)] = v[k] / s;
            m[(j, i)] = v[k] / s;
        }
    }
    m
}

struct Workspace {
    pairs: Vec<(usize, usize)>,
    nsv: usize,
    n_free: usize,
    n_eq: usize,
    n_ineq: usize,
    nvar: usize,
    m: Csr,
    b: DVector<f64>,
    /// Row scales: original row = scale * stored row.
    row_scale: Vec<f64>,
    /// Minimization objective (negated maximization objective), scaled.
    q: DVector<f64>,
    q_scale: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

fn build_workspace(p: &ConicProgram) -> Result<Workspace> {
    let d = p.psd_dim;
    let pairs = svec_pairs(d);
    let nsv = pairs.len();
    let n_eq = p.eq_constraints.len();
    let n_ineq = p.ineq_constraints.len();
    let nvar = nsv + p.n_free + n_ineq;
    let mut rows = Vec::with_capacity(n_eq + n_ineq);
    let mut b = DVector::zeros(n_eq + n_ineq);
    let mut row_scale = vec![1.0; n_eq + n_ineq];
    let mut sv = vec![0.0; nsv];
    for (r, (c, slack)) in p
        .eq_constraints
        .iter()
        .map(|c| (c, None))
        .chain(p.ineq_constraints.iter().enumerate().map(|(k, c)| (c, Some(k))))
        .enumerate()
    {
        svec_into(&c.mat, &pairs, &mut sv);
        let mut row: Vec<(usize, f64)> = sv
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        for (i, &v) in c.free.iter().enumerate() {
            if v != 0.0 {
                row.push((nsv + i, v));
            }
        }
        if let Some(k) = slack {
            // `<A,X> + <a,y> - s = b` with `s >= 0` encodes `>= b`.
            row.push((nsv + p.n_free + k, -1.0));
        }
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        for e in row.iter_mut() {
            e.1 /= scale;
        }
        row_scale[r] = scale;
        b[r] = c.rhs / scale;
        rows.push(row);
    }
    let m = Csr::from_rows(n_eq + n_ineq, nvar, rows);

    let mut q = DVector::zeros(nvar);
    svec_into(&p.obj_mat, &pairs, &mut sv);
    for (i, &v) in sv.iter().enumerate() {
        q[i] = -v;
    }
    for (i, &v) in p.obj_free.iter().enumerate() {
        q[nsv + i] = -v;
    }
    let q_scale = {
        let n = q.norm();
        if n > 0.0 {
            n
        } else {
            1.0
        }
    };
    q /= q_scale;

    let mut gram = m.gram();
    let reg = 1e-10;
    for i in 0..gram.nrows() {
        gram[(i, i)] += reg;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Solver("failed to factorize the constraint Gram matrix".into()))?;
    Ok(Workspace {
        pairs,
        nsv,
        n_free: p.n_free,
        n_eq,
        n_ineq,
        nvar,
        m,
        b,
        row_scale,
        q,
        q_scale,
        chol,
    })
}

impl Workspace {
    /// Project the PSD block of `v` onto the cone and clip the slacks.
    fn cone_project(&self, v: &DVector<f64>, d: usize) -> DVector<f64> {
        let mut out = v.clone();
        let x = unsvec(&v.as_slice()[..self.nsv], d, &self.pairs);
        let mut eig = x.symmetric_eigen();
        for e in eig.eigenvalues.iter_mut() {
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let xp = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues)
            * eig.eigenvectors.transpose();
        let mut sv = vec![0.0; self.nsv];
        svec_into(&xp, &self.pairs, &mut sv);
        out.as_mut_slice()[..self.nsv].copy_from_slice(&sv);
        for k in 0..self.n_ineq {
            let i = self.nsv + self.n_free + k;
            if out[i] < 0.0 {
                out[i] = 0.0;
            }
        }
        out
    }

    /// Distance-to-cone measure of a direction (used by the ray tests).
    fn cone_outside(&self, v: &DVector<f64>, d: usize) -> f64 {
        let proj = self.cone_project(v, d);
        (v - proj).amax()
    }

    /// Maximization objective at a point, in original units.
    fn objective(&self, v: &DVector<f64>) -> f64 {
        -self.q.dot(v) * self.q_scale
    }
}

/// Solve a conic program with cold start.
pub fn solve(p: &ConicProgram, s: &SolverSettings) -> Result<SolverResult> {
    solve_with_start(p, s, None)
}

/// Solve a conic program, optionally resuming from a previous iterate.
pub fn solve_with_start(
    p: &ConicProgram,
    s: &SolverSettings,
    warm: Option<&WarmStart>,
) -> Result<SolverResult> {
    p.validate()?;
    let d = p.psd_dim;
    let ws = build_workspace(p)?;
    let nvar = ws.nvar;
    let nrows = ws.n_eq + ws.n_ineq;

    let (mut v, mut z, mut w, mut rho) = match warm {
        Some(wstart) if wstart.v.len() == nvar => {
            (wstart.v.clone(), wstart.z.clone(), wstart.w.clone(), wstart.rho)
        }
        _ => (DVector::zeros(nvar), DVector::zeros(nvar), DVector::zeros(nvar), 1.0),
    };
    let alpha = 1.6;
    let check_every = 25;
    let ray_window = 250;

    let mut t = DVector::zeros(nrows);
    let mut mv = DVector::zeros(nrows);
    let mut mt = DVector::zeros(nvar);
    let mut z_ray = z.clone();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = s.max_iter;
    let mut last_primal_res = f64::INFINITY;
    let mut last_dual_res = f64::INFINITY;

    let bnorm = ws.b.amax();

    for it in 0..s.max_iter {
        // Affine step: project z - w - q/rho onto {Mv = b}, tracking the
        // multiplier t (the constraint duals are rho * t at convergence).
        let vhalf = &z - &w - &ws.q * (1.0 / rho);
        ws.m.mul(&vhalf, &mut mv);
        mv -= &ws.b;
        t.copy_from(&mv);
        ws.chol.solve_mut(&mut t);
        ws.m.mul_t(&t, &mut mt);
        v = vhalf - &mt;

        // Cone step with over-relaxation.
        let vtilde = &v * alpha + &z * (1.0 - alpha);
        let z_new = ws.cone_project(&(&vtilde + &w), d);
        let dz = (&z_new - &z).amax();
        w += &vtilde - &z_new;
        z = z_new;

        if (it + 1) % check_every == 0 {
            let consensus = (&v - &z).amax();
            let dual_res = rho * dz;
            last_primal_res = consensus;
            last_dual_res = dual_res;

            // True constraint violation of the cone-feasible iterate.
            ws.m.mul(&z, &mut mv);
            let mut viol = 0.0_f64;
            for r in 0..nrows {
                let res = (mv[r] - ws.b[r]) * ws.row_scale[r];
                let res = if r >= ws.n_eq { (-res).max(0.0) } else { res.abs() };
                viol = viol.max(res);
            }

            // With nu_max = -q_scale * rho * t / row_scale the dual bound of
            // the maximization problem is -<nu_max, b>.
            let pobj = ws.objective(&z);
            let dobj: f64 =
                (0..nrows).map(|r| rho * t[r] * ws.b[r]).sum::<f64>() * ws.q_scale;
            let gap = (pobj - dobj).abs();

            if pobj > s.unbounded_cap {
                status = SolveStatus::UnboundedSuspected;
                iterations = it + 1;
                break;
            }
            if (it + 1) % ray_window == 0 {
                // Divergence ray: an improving feasible direction certifies
                // an unbounded primal.
                let dir = &z - &z_ray;
                let dn = dir.norm();
                if dn > 10.0 * (1.0 + bnorm) {
                    let nd = dir / dn;
                    ws.m.mul(&nd, &mut mv);
                    let feas = mv.amax() <= 1e-6;
                    let in_cone = ws.cone_outside(&nd, d) <= 1e-6;
                    let improving = ws.q.dot(&nd) < -1e-8;
                    if feas && in_cone && improving {
                        status = SolveStatus::UnboundedSuspected;
                        iterations = it + 1;
                        break;
                    }
                }
                // Stalled cone iterate with persistent violation and a
                // runaway multiplier indicates primal infeasibility.
                let z_stalled = dn <= 1e-10 * (1.0 + z.norm());
                if z_stalled && viol > 1e3 * s.eps_abs * (1.0 + bnorm) && w.norm() > 1e7 {
                    status = SolveStatus::Infeasible;
                    iterations = it + 1;
                    break;
                }
                z_ray = z.clone();
            }

            let eps_p = s.eps_abs * (1.0 + bnorm);
            let eps_g = s.eps_rel * (1.0 + pobj.abs() + dobj.abs());
            if consensus <= eps_p && viol <= eps_p && gap <= eps_g && dual_res <= eps_p {
                status = SolveStatus::Optimal;
                iterations = it + 1;
                break;
            }

            // Deterministic penalty adaptation keeps the two residuals
            // balanced; w is rescaled so the underlying dual is continuous.
            if (it + 1) % 100 == 0 {
                let ratio = consensus / dual_res.max(1e-300);
                if ratio > 10.0 && rho < 1e6 {
                    rho *= 2.0;
                    w /= 2.0;
                } else if ratio < 0.1 && rho > 1e-6 {
                    rho /= 2.0;
                    w *= 2.0;
                }
            }
        }
    }

    // Final report against the original data.
    let x = unsvec(&z.as_slice()[..ws.nsv], d, &ws.pairs);
    let free =
        DVector::from_iterator(ws.n_free, (0..ws.n_free).map(|i| z[ws.nsv + i]));
    let mut duals: Vec<f64> = (0..nrows)
        .map(|r| rho * t[r] * ws.q_scale / ws.row_scale[r])
        .collect();
    // Sign convention: with `q` the negated objective, the affine multiplier
    // comes out as the negative of the usual Lagrange multiplier for the
    // maximization problem.
    for dv in duals.iter_mut() {
        *dv = -*dv;
    }
    let dual_eq = duals[..ws.n_eq].to_vec();
    let dual_ineq = duals[ws.n_eq..].to_vec();

    ws.m.mul(&z, &mut mv);
    let mut max_violation = 0.0_f64;
    for r in 0..nrows {
        let res = (mv[r] - ws.b[r]) * ws.row_scale[r];
        let res = if r >= ws.n_eq { (-res).max(0.0) } else { res.abs() };
        max_violation = max_violation.max(res);
    }
    let pobj = ws.objective(&z);
    let dobj: f64 = -duals
        .iter()
        .zip(ws.b.iter().zip(ws.row_scale.iter()))
        .map(|(nu, (b, sc))| nu * b * sc)
        .sum::<f64>();
    let residuals = SolveResiduals {
        max_violation,
        consensus: last_primal_res.max(last_dual_res),
        gap: (pobj - dobj).abs(),
        iterations,
    };
    Ok(SolverResult {
        status,
        value: pobj,
        x,
        free,
        dual_eq,
        dual_ineq,
        residuals,
        warm: WarmStart { v, z, w, rho },
    })
}

/// Independent residual report for a solve, recomputed from the program
/// data rather than solver internals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_violation: f64,
    pub min_eig: f64,
    pub gap: f64,
    pub max_complementarity: f64,
}

pub fn verify_solution(p: &ConicProgram, result: &SolverResult, _tol: f64) -> VerifyReport {
    let mut max_violation = 0.0_f64;
    let mut max_comp = 0.0_f64;
    let frob = |a: &DMatrix<f64>, b: &DMatrix<f64>| a.component_mul(b).sum();
    for c in &p.eq_constraints {
        let val = frob(&c.mat, &result.x) + c.free.dot(&result.free) - c.rhs;
        max_violation = max_violation.max(val.abs());
    }
    for (k, c) in p.ineq_constraints.iter().enumerate() {
        let slack = frob(&c.mat, &result.x) + c.free.dot(&result.free) - c.rhs;
        max_violation = max_violation.max((-slack).max(0.0));
        max_comp = max_comp.max((result.dual_ineq[k] * slack).abs());
    }
    let sym = (&result.x + result.x.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigen().eigenvalues.min();
    let pobj = frob(&p.obj_mat, &result.x) + p.obj_free.dot(&result.free);
    let dobj: f64 = -p
        .eq_constraints
        .iter()
        .zip(result.dual_eq.iter())
        .map(|(c, nu)| nu * c.rhs)
        .chain(p.ineq_constraints.iter().zip(result.dual_ineq.iter()).map(|(c, nu)| nu * c.rhs))
        .sum::<f64>();
    VerifyReport { max_violation, min_eig, gap: (pobj - dobj).abs(), max_complementarity: max_comp }
}
