//! Convex polyhedral cones with dual representations.
//!
//! A cone is `{v : a_j . v <= 0 for all rows a_j}` and equally
//! `cone{g_1..g_k}` for finitely many generators. Either representation is
//! derived from the other by the double description method: the lineality
//! space `ker A` is split off first, the pointed remainder is enumerated in
//! the orthogonal complement starting from a simplicial subcone (where the
//! rank-based adjacency test is valid), and the rays are lifted back.
//! Enumeration is guaranteed for dimension <= 4, which covers every use in
//! this crate, and refused above that.

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::sample::dot;

/// Dimension bound for representation conversion.
pub const MAX_ENUM_DIM: usize = 4;

const TOL: f64 = 1e-9;

/// A closed convex polyhedral cone with at least one representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    dim: usize,
    rows: Option<Vec<Vec<f64>>>,
    generators: Option<Vec<Vec<f64>>>,
}

impl ConeSpec {
    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), dim, "halfspace row dimension mismatch");
        }
        ConeSpec { dim, rows: Some(rows), generators: None }
    }

    pub fn from_generators(dim: usize, generators: Vec<Vec<f64>>) -> Self {
        for g in &generators {
            assert_eq!(g.len(), dim, "generator dimension mismatch");
        }
        ConeSpec { dim, rows: None, generators: Some(generators) }
    }

    /// The whole space: no constraints, generated by `{+-e_i}`.
    pub fn full(dim: usize) -> Self {
        let mut gens = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            gens.push(e.clone());
            e[i] = -1.0;
            gens.push(e);
        }
        ConeSpec { dim, rows: Some(Vec::new()), generators: Some(gens) }
    }

    /// The zero cone `{0}`.
    pub fn zero(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            rows.push(e.clone());
            e[i] = -1.0;
            rows.push(e);
        }
        ConeSpec { dim, rows: Some(rows), generators: Some(Vec::new()) }
    }

    /// The nonnegative orthant.
    pub fn orthant(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(dim);
        let mut gens = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = -1.0;
            rows.push(e.clone());
            e[i] = 1.0;
            gens.push(e);
        }
        ConeSpec { dim, rows: Some(rows), generators: Some(gens) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Option<&[Vec<f64>]> {
        self.rows.as_deref()
    }

    pub fn generators(&self) -> Option<&[Vec<f64>]> {
        self.generators.as_deref()
    }

    /// Halfspace rows, derived by double description when absent (the rows
    /// of `C` are the generators of the polar, whose rows are our
    /// generators).
    pub fn compute_rows(&self) -> Result<Vec<Vec<f64>>, GeometryError> {
        if let Some(rows) = &self.rows {
            return Ok(rows.clone());
        }
        let gens = self.generators.as_ref().expect("cone with no representation");
        double_description(gens, self.dim)
    }

    /// Generators, derived by double description when absent.
    pub fn compute_generators(&self) -> Result<Vec<Vec<f64>>, GeometryError> {
        if let Some(gens) = &self.generators {
            return Ok(gens.clone());
        }
        let rows = self.rows.as_ref().expect("cone with no representation");
        double_description(rows, self.dim)
    }

    /// A copy holding both representations.
    pub fn completed(&self) -> Result<ConeSpec, GeometryError> {
        Ok(ConeSpec {
            dim: self.dim,
            rows: Some(self.compute_rows()?),
            generators: Some(self.compute_generators()?),
        })
    }

    /// Membership test. Uses halfspace rows, deriving them if necessary.
    /// The tolerance is scaled by `1 + |v|` so it is meaningful for large
    /// vectors.
    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool, GeometryError> {
        assert_eq!(v.len(), self.dim);
        let scale = 1.0 + crate::sample::sup_norm(v);
        let owned;
        let rows = match &self.rows {
            Some(rows) => rows.as_slice(),
            None => {
                owned = self.compute_rows()?;
                owned.as_slice()
            }
        };
        Ok(rows.iter().all(|r| dot(r, v) <= tol * scale))
    }

    /// The polar cone `{p : <p, v> <= 0 for all v in C}`. Representations
    /// swap: output rows are input generators and vice versa.
    pub fn polar(&self) -> Result<ConeSpec, GeometryError> {
        let full = self.completed()?;
        Ok(ConeSpec { dim: full.dim, rows: full.generators, generators: full.rows })
    }

    /// Pointedness: `C ∩ (-C) = {0}`. With rows `A`, that intersection is
    /// `ker A`, so the cone is pointed iff `rank A = n`.
    pub fn is_pointed(&self) -> Result<bool, GeometryError> {
        let rows = self.compute_rows()?;
        Ok(rank(&rows, self.dim) == self.dim)
    }

    /// Rows active at a point of the cone (for tangent cones of polyhedral
    /// cones at boundary points).
    pub fn active_rows_at(&self, x: &[f64], tol: f64) -> Result<Vec<Vec<f64>>, GeometryError> {
        let rows = self.compute_rows()?;
        let scale = 1.0 + crate::sample::sup_norm(x);
        Ok(rows
            .into_iter()
            .filter(|r| dot(r, x).abs() <= tol * scale)
            .collect())
    }
}

/// Double description: given the rows of `{v : a_j . v <= 0}`, produce a
/// finite generating set for the solution cone (equivalently: generators of
/// the polar of `cone{a_j}`).
pub fn double_description(rows: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>, GeometryError> {
    if dim > MAX_ENUM_DIM {
        return Err(GeometryError::DimensionTooLarge { dim, max: MAX_ENUM_DIM });
    }
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.iter().any(|c| c.abs() > TOL))
        .cloned()
        .collect();

    let mut gens: Vec<Vec<f64>> = Vec::new();

    // lineality space: ker A (the whole space if there are no rows)
    let lin = null_space(&rows, dim);
    for b in &lin {
        gens.push(b.clone());
        gens.push(b.iter().map(|c| -c).collect());
    }

    // pointed part lives in the row space W = (ker A)^perp
    let w = orthonormal_row_space(&rows, dim);
    let k = w.len();
    if k > 0 {
        let proj: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| w.iter().map(|wi| dot(r, wi)).collect())
            .collect();
        let seed = independent_rows(&proj, k);
        let b: Vec<Vec<f64>> = seed.iter().map(|&i| proj[i].clone()).collect();
        let binv = invert(&b, k);

        // simplicial seed: {w : Bw <= 0} = cone of the columns of -B^{-1}
        let mut rays: Vec<Vec<f64>> = (0..k)
            .map(|c| (0..k).map(|r| -binv[r][c]).collect())
            .collect();
        rays = dedupe_dirs(rays);

        let mut processed: Vec<Vec<f64>> = seed.iter().map(|&i| proj[i].clone()).collect();
        for (i, row) in proj.iter().enumerate() {
            if seed.contains(&i) {
                continue;
            }
            rays = dd_step(&rays, row, &processed, k);
            processed.push(row.clone());
        }

        for ray in rays {
            let lifted: Vec<f64> = (0..dim)
                .map(|d| ray.iter().zip(&w).map(|(c, wi)| c * wi[d]).sum())
                .collect();
            gens.push(lifted);
        }
    }

    let mut gens = dedupe_dirs(gens);
    gens.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(gens)
}

/// One pointed-DD refinement: intersect the cone described by `rays` with
/// `{w : row . w <= 0}`. `processed` must contain every halfspace already
/// cut (including the simplicial seed) for the adjacency test.
fn dd_step(rays: &[Vec<f64>], row: &[f64], processed: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let vals: Vec<f64> = rays.iter().map(|g| dot(row, g)).collect();
    let mut next: Vec<Vec<f64>> = Vec::new();
    for (g, s) in rays.iter().zip(&vals) {
        if *s <= TOL {
            next.push(g.clone());
        }
    }
    for (i, gi) in rays.iter().enumerate() {
        if vals[i] <= TOL {
            continue;
        }
        for (j, gj) in rays.iter().enumerate() {
            if vals[j] >= -TOL {
                continue;
            }
            if !adjacent(gi, gj, processed, k) {
                continue;
            }
            // positive combination landing on the new hyperplane
            let w: Vec<f64> = gi
                .iter()
                .zip(gj)
                .map(|(a, b)| vals[i] * b - vals[j] * a)
                .collect();
            next.push(w);
        }
    }
    dedupe_dirs(next)
}

/// Rays of a pointed cone are adjacent iff the processed rows active at both
/// span rank >= k - 2 (trivially true for k <= 2).
fn adjacent(g1: &[f64], g2: &[f64], processed: &[Vec<f64>], k: usize) -> bool {
    if k <= 2 {
        return true;
    }
    let active: Vec<Vec<f64>> = processed
        .iter()
        .filter(|r| dot(r, g1).abs() <= TOL && dot(r, g2).abs() <= TOL)
        .cloned()
        .collect();
    rank(&active, k) >= k - 2
}

fn normalize_dir(v: &[f64]) -> Option<Vec<f64>> {
    let m = crate::sample::sup_norm(v);
    if m <= TOL {
        return None;
    }
    Some(v.iter().map(|c| c / m).collect())
}

fn dedupe_dirs(vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let vn = match normalize_dir(&v) {
            Some(vn) => vn,
            None => continue,
        };
        if !out
            .iter()
            .any(|u| u.iter().zip(&vn).all(|(a, b)| (a - b).abs() <= 1e-7))
        {
            out.push(vn);
        }
    }
    out
}

/// Numerical rank by Gaussian elimination with partial pivoting.
pub fn rank(rows: &[Vec<f64>], dim: usize) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut r = 0;
    for col in 0..dim {
        if r >= m.len() {
            break;
        }
        let pivot = (r..m.len())
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= TOL {
            continue;
        }
        m.swap(r, pivot);
        for i in (r + 1)..m.len() {
            let f = m[i][col] / m[r][col];
            for c in col..dim {
                let sub = f * m[r][c];
                m[i][c] -= sub;
            }
        }
        r += 1;
    }
    r
}

/// Basis of `{v : Av = 0}` via row echelon form and free-variable
/// back-substitution. Returns `dim` unit vectors when `rows` is empty.
pub fn null_space(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..dim {
        if r >= m.len() {
            break;
        }
        let pivot = (r..m.len())
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= TOL {
            continue;
        }
        m.swap(r, pivot);
        let p = m[r][col];
        for c in 0..dim {
            m[r][c] /= p;
        }
        for i in 0..m.len() {
            if i != r && m[i][col].abs() > 0.0 {
                let f = m[i][col];
                for c in 0..dim {
                    let sub = f * m[r][c];
                    m[i][c] -= sub;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let mut basis = Vec::new();
    for free in 0..dim {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; dim];
        v[free] = 1.0;
        for (row_idx, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[row_idx][free];
        }
        basis.push(v);
    }
    basis
}

/// Orthonormal basis of the span of `rows` (Gram-Schmidt with drop
/// tolerance).
fn orthonormal_row_space(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let norm = crate::sample::euclid_norm(&v);
        if norm > 1e-7 {
            basis.push(v.iter().map(|c| c / norm).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}

/// Indices of `k` linearly independent rows (the input must have rank `k`).
fn independent_rows(rows: &[Vec<f64>], k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut picked: Vec<Vec<f64>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut cand = picked.clone();
        cand.push(r.clone());
        if rank(&cand, k) == cand.len() {
            picked = cand;
            chosen.push(i);
            if chosen.len() == k {
                break;
            }
        }
    }
    assert_eq!(chosen.len(), k, "projected rows lost rank");
    chosen
}

/// Inverse of a small (k <= 4) invertible matrix by Gauss-Jordan.
fn invert(m: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > TOL, "singular seed matrix");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for c in 0..k {
            a[col][c] /= p;
            inv[col][c] /= p;
        }
        for i in 0..k {
            if i != col {
                let f = a[i][col];
                for c in 0..k {
                    let s1 = f * a[col][c];
                    a[i][c] -= s1;
                    let s2 = f * inv[col][c];
                    inv[i][c] -= s2;
                }
            }
        }
    }
    inv
}
