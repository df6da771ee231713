//! Vertex enumeration by double description and solid polytopes in the
//! positive orthant with their polars.
//!
//! A [`PolytopeSet`] lives in `R^m` with the pairing `⟨ξ, η⟩ = Σ μ_i ξ_i η_i`.
//! It is known through generators (the set is the solid convex hull
//! `{ξ : 0 ≤ ξ ≤ Σ λ_g g}`) or through normals (`{ξ ≥ 0 : ⟨ξ, w⟩ ≤ 1}`).

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// Default bound on intermediate rays kept by the double description loop.
pub const DEFAULT_RAY_CAP: usize = 200_000;

const ZERO_TOL: f64 = 1e-9;

#[derive(Clone)]
struct Ray {
    w: Vec<f64>,
    zero: Vec<u64>,
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn bit_and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn popcount(a: &[u64]) -> usize {
    a.iter().map(|x| x.count_ones() as usize).sum()
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn normalize(w: &mut [f64]) {
    let m = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m > 0.0 {
        w.iter_mut().for_each(|v| *v /= m);
    }
}

/// Vertices of `{x : A x ≤ b, E x = e}`.
///
/// Returns an empty list for an empty polytope and [`Error::Unbounded`] when
/// the set has a recession direction.
pub fn enumerate_vertices(a: &[Vec<f64>], b: &[f64], e_a: &[Vec<f64>], e_b: &[f64]) -> Result<Vec<Vec<f64>>> {
    enumerate_vertices_capped(a, b, e_a, e_b, DEFAULT_RAY_CAP)
}

pub fn enumerate_vertices_capped(
    a: &[Vec<f64>],
    b: &[f64],
    e_a: &[Vec<f64>],
    e_b: &[f64],
    ray_cap: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = a.first().or(e_a.first()).map(|r| r.len()).unwrap_or(0);
    if n == 0 {
        return Err(Error::InvalidSet("no coordinates".into()));
    }
    if a.len() != b.len() || e_a.len() != e_b.len() {
        return Err(Error::InvalidSet("row and right-hand side counts differ".into()));
    }

    // x = x0 + N z parametrizes the affine hull of the equalities
    let (x0, null) = match affine_parametrization(e_a, e_b, n) {
        Some(p) => p,
        None => return Ok(Vec::new()),
    };
    let k = null.ncols();
    if k == 0 {
        let feasible = a.iter().zip(b).all(|(r, &bi)| dot(r, x0.as_slice()) <= bi + ZERO_TOL);
        return Ok(if feasible { vec![x0.as_slice().to_vec()] } else { Vec::new() });
    }

    // homogenized rows over w = (t, z): t b' - a' z ≥ 0, plus t ≥ 0
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(a.len() + 1);
    let mut t_row = vec![0.0; k + 1];
    t_row[0] = 1.0;
    rows.push(t_row);
    for (r, &bi) in a.iter().zip(b) {
        let ar = DVector::from_row_slice(r);
        let red = null.transpose() * &ar;
        let bb = bi - ar.dot(&x0);
        let norm = red.norm();
        if norm <= 1e-12 * (1.0 + ar.norm()) {
            if bb < -ZERO_TOL * (1.0 + bi.abs()) {
                return Ok(Vec::new());
            }
            continue;
        }
        let mut row = Vec::with_capacity(k + 1);
        row.push(bb / norm);
        row.extend(red.iter().map(|v| -v / norm));
        rows.push(row);
    }
    let nrows = rows.len();
    let words = nrows.div_ceil(64);
    let d = k + 1;

    // pick d independent rows, the t-row first
    let mut basis: Vec<usize> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut v = DVector::from_row_slice(r);
        for q in &ortho {
            let c = q.dot(&v);
            v -= q * c;
        }
        let nv = v.norm();
        if nv > 1e-9 {
            ortho.push(v / nv);
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        if lp_feasible(a, b, e_a, e_b, n)? {
            return Err(Error::Unbounded("constraints leave a line in the set".into()));
        }
        return Ok(Vec::new());
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[basis[i]][j]);
    let minv = m.try_inverse().ok_or_else(|| Error::Solver("singular initial basis".into()))?;
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let mut w: Vec<f64> = minv.column(j).iter().copied().collect();
            normalize(&mut w);
            let mut zero = vec![0u64; words];
            for (i, &bi) in basis.iter().enumerate() {
                if i != j {
                    bit_set(&mut zero, bi);
                }
            }
            Ray { w, zero }
        })
        .collect();
    let in_basis = {
        let mut f = vec![false; nrows];
        basis.iter().for_each(|&i| f[i] = true);
        f
    };

    for i in 0..nrows {
        if in_basis[i] {
            continue;
        }
        let row = &rows[i];
        let vals: Vec<f64> = rays.iter().map(|r| dot(row, &r.w)).collect();
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for (j, &s) in vals.iter().enumerate() {
            if s > ZERO_TOL {
                plus.push(j);
            } else if s < -ZERO_TOL {
                minus.push(j);
            } else {
                bit_set(&mut rays[j].zero, i);
            }
        }
        if minus.is_empty() {
            continue;
        }
        let mut fresh = Vec::new();
        for &p in &plus {
            for &q in &minus {
                let common = bit_and(&rays[p].zero, &rays[q].zero);
                if popcount(&common) + 2 < d {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(r, ray)| r == p || r == q || !subset(&common, &ray.zero));
                if !adjacent {
                    continue;
                }
                let (sp, sq) = (vals[p], vals[q]);
                let mut w: Vec<f64> = rays[q].w.iter().zip(&rays[p].w).map(|(wq, wp)| sp * wq - sq * wp).collect();
                normalize(&mut w);
                let mut zero = common;
                bit_set(&mut zero, i);
                fresh.push(Ray { w, zero });
            }
        }
        let mut keep = vec![true; rays.len()];
        minus.iter().for_each(|&q| keep[q] = false);
        let mut next: Vec<Ray> = rays.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect();
        next.extend(fresh);
        if next.len() > ray_cap {
            return Err(Error::EnumerationCap { what: "double description".into(), size: next.len(), cap: ray_cap });
        }
        rays = next;
    }

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for ray in &rays {
        let t = ray.w[0];
        if t > 1e-9 {
            let z = DVector::from_iterator(k, ray.w[1..].iter().map(|v| v / t));
            let x = &x0 + &null * z;
            vertices.push(x.iter().copied().collect());
        } else if ray.w[1..].iter().any(|v| v.abs() > 1e-9) {
            return Err(Error::Unbounded("the set has a recession direction".into()));
        }
    }
    let polished: Vec<Vec<f64>> = vertices.iter().map(|v| polish_vertex(v, a, b, e_a, e_b)).collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in polished {
        if !out.iter().any(|u| max_abs_diff(u, &v) <= 1e-9 * (1.0 + max_abs(&v))) {
            out.push(v);
        }
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn affine_parametrization(e_a: &[Vec<f64>], e_b: &[f64], n: usize) -> Option<(DVector<f64>, DMatrix<f64>)> {
    if e_a.is_empty() {
        return Some((DVector::zeros(n), DMatrix::identity(n, n)));
    }
    let p = e_a.len();
    // pad to square so the SVD returns the full right basis
    let size = p.max(n);
    let mut m = DMatrix::zeros(size, n);
    for (i, r) in e_a.iter().enumerate() {
        for j in 0..n {
            m[(i, j)] = r[j];
        }
    }
    let mut rhs = DVector::zeros(size);
    for (i, &v) in e_b.iter().enumerate() {
        rhs[i] = v;
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-11 * smax.max(1.0);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut x0 = DVector::zeros(n);
    let mut null_cols = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let c = u.column(i).dot(&rhs) / s;
            x0 += vt.row(i).transpose() * c;
        } else {
            null_cols.push(vt.row(i).transpose());
        }
    }
    // rows beyond min(size, n) are absent from a square n×n SVD only when size > n
    let resid = (&m * &x0 - &rhs).amax();
    if resid > 1e-9 * (1.0 + rhs.amax()) {
        return None;
    }
    let null = if null_cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&null_cols) };
    Some((x0, null))
}

fn lp_feasible(a: &[Vec<f64>], b: &[f64], e_a: &[Vec<f64>], e_b: &[f64], n: usize) -> Result<bool> {
    let mut lp = LinearProgram::minimize();
    let vars: Vec<usize> = (0..n).map(|_| lp.free(0.0)).collect();
    for (r, &bi) in a.iter().zip(b) {
        lp.constraint(vars.iter().zip(r).map(|(&v, &c)| (v, c)).collect(), Cmp::Le, bi);
    }
    for (r, &bi) in e_a.iter().zip(e_b) {
        lp.constraint(vars.iter().zip(r).map(|(&v, &c)| (v, c)).collect(), Cmp::Eq, bi);
    }
    Ok(matches!(lp.solve()?, LpOutcome::Optimal { .. }))
}

/// Re-solves the active constraints of a vertex in least squares.
fn polish_vertex(v: &[f64], a: &[Vec<f64>], b: &[f64], e_a: &[Vec<f64>], e_b: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut rows: Vec<&Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (r, &bi) in e_a.iter().zip(e_b) {
        rows.push(r);
        rhs.push(bi);
    }
    for (r, &bi) in a.iter().zip(b) {
        let scale = 1.0 + max_abs(r) + bi.abs();
        if (dot(r, v) - bi).abs() <= 1e-7 * scale {
            rows.push(r);
            rhs.push(bi);
        }
    }
    if rows.len() < n {
        return v.to_vec();
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let r = DVector::from_vec(rhs);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.rank(1e-10 * smax.max(1e-300)) < n {
        return v.to_vec();
    }
    match svd.solve(&r, 1e-12 * smax) {
        Ok(x) => {
            let x: Vec<f64> = x.iter().copied().collect();
            if max_abs_diff(&x, v) <= 1e-6 * (1.0 + max_abs(v)) {
                x
            } else {
                v.to_vec()
            }
        }
        Err(_) => v.to_vec(),
    }
}

/// Solid polytope in the nonnegative orthant with a weighted pairing.
#[derive(Debug, Clone)]
pub struct PolytopeSet {
    weights: Vec<f64>,
    generators: Option<Vec<Vec<f64>>>,
    normals: Option<Vec<Vec<f64>>>,
    vertex_cache: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for PolytopeSet {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.generators == other.generators && self.normals == other.normals
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidSet("no coordinates".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidSet("pairing weights must be positive".into()));
    }
    Ok(())
}

fn check_points(points: &[Vec<f64>], m: usize, what: &str) -> Result<()> {
    for p in points {
        if p.len() != m {
            return Err(Error::InvalidSet(format!("{what} has {} coordinates, expected {m}", p.len())));
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSet(format!("{what} must be finite and nonnegative")));
        }
    }
    Ok(())
}

impl PolytopeSet {
    /// Solid convex hull of `generators` (together with the origin).
    pub fn from_generators(weights: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        check_weights(&weights)?;
        if generators.is_empty() {
            return Err(Error::InvalidSet("no generators".into()));
        }
        check_points(&generators, weights.len(), "generator")?;
        Ok(PolytopeSet { weights, generators: Some(generators), normals: None, vertex_cache: OnceLock::new() })
    }

    /// `{ξ ≥ 0 : ⟨ξ, w⟩ ≤ 1 for every normal w}`.
    pub fn from_normals(weights: Vec<f64>, normals: Vec<Vec<f64>>) -> Result<Self> {
        check_weights(&weights)?;
        check_points(&normals, weights.len(), "normal")?;
        let m = weights.len();
        if let Some(i) = (0..m).find(|&i| normals.iter().all(|w| w[i] <= 0.0)) {
            return Err(Error::Unbounded(format!("coordinate {i} is not limited by any normal")));
        }
        Ok(PolytopeSet { weights, generators: None, normals: Some(normals), vertex_cache: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn generators(&self) -> Option<&[Vec<f64>]> {
        self.generators.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec<f64>]> {
        self.normals.as_deref()
    }

    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a.iter().zip(b)).map(|(m, (x, y))| m * x * y).sum()
    }

    /// True when some element is strictly positive in every coordinate.
    pub fn has_positive_element(&self) -> bool {
        match (&self.generators, &self.normals) {
            (Some(g), _) => (0..self.dim()).all(|i| g.iter().any(|p| p[i] > 0.0)),
            (None, Some(_)) => true,
            _ => false,
        }
    }

    /// `x · self`.
    pub fn scaled(&self, x: f64) -> Result<Self> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidSet(format!("scale must be positive, got {x}")));
        }
        Ok(PolytopeSet {
            weights: self.weights.clone(),
            generators: self.generators.as_ref().map(|g| g.iter().map(|p| p.iter().map(|v| v * x).collect()).collect()),
            normals: self.normals.as_ref().map(|g| g.iter().map(|p| p.iter().map(|v| v / x).collect()).collect()),
            vertex_cache: match self.vertex_cache.get() {
                Some(vs) => OnceLock::from(vs.iter().map(|p| p.iter().map(|v| v * x).collect()).collect::<Vec<Vec<f64>>>()),
                None => OnceLock::new(),
            },
        })
    }

    /// Points whose solid hull is the set: the generators if known, else the vertices.
    pub fn spanning_points(&self) -> Result<Vec<Vec<f64>>> {
        match &self.generators {
            Some(g) => Ok(g.clone()),
            None => self.vertices(),
        }
    }

    /// `{η ≥ 0 : ⟨ξ, η⟩ ≤ 1 for all ξ in self}` in normal form.
    pub fn polar(&self) -> Result<Self> {
        let pts = self.spanning_points()?;
        PolytopeSet::from_normals(self.weights.clone(), pts).map_err(|e| match e {
            Error::Unbounded(msg) => Error::Unbounded(format!("polar is unbounded: {msg}")),
            other => other,
        })
    }

    /// Normals describing the set, computed from the polar when only
    /// generators are known.
    pub fn facet_normals(&self) -> Result<Vec<Vec<f64>>> {
        if let Some(w) = &self.normals {
            return Ok(w.clone());
        }
        let polar = self.polar()?;
        Ok(polar.vertices()?.into_iter().filter(|v| v.iter().any(|&c| c > 1e-12)).collect())
    }

    /// Extreme points, the origin included.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        if let Some(v) = self.vertex_cache.get() {
            return Ok(v.clone());
        }
        let v = self.compute_vertices()?;
        let _ = self.vertex_cache.set(v.clone());
        Ok(v)
    }

    fn compute_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.dim();
        if let Some(normals) = &self.normals {
            let mut a: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    let mut r = vec![0.0; m];
                    r[i] = -1.0;
                    r
                })
                .collect();
            let mut b = vec![0.0; m];
            for w in normals {
                a.push(w.iter().zip(&self.weights).map(|(x, mu)| x * mu).collect());
                b.push(1.0);
            }
            let mut vs = enumerate_vertices(&a, &b, &[], &[])?;
            for v in vs.iter_mut() {
                // coordinates on a `c_i ≥ 0` facet come back as roundoff
                let tol = 1e-10 * v.iter().fold(1.0f64, |a, c| a.max(c.abs()));
                v.iter_mut().for_each(|c| {
                    if c.abs() < tol {
                        *c = 0.0
                    }
                });
            }
            return Ok(vs);
        }
        let gens = self.generators.as_ref().expect("one representation is present");
        // work on the coordinates some generator reaches
        let live: Vec<usize> = (0..m).filter(|&i| gens.iter().any(|g| g[i] > 0.0)).collect();
        if live.is_empty() {
            return Ok(vec![vec![0.0; m]]);
        }
        let sub_w: Vec<f64> = live.iter().map(|&i| self.weights[i]).collect();
        let sub_g: Vec<Vec<f64>> = gens.iter().map(|g| live.iter().map(|&i| g[i]).collect()).collect();
        let sub = PolytopeSet::from_generators(sub_w.clone(), sub_g)?;
        let normals = sub.facet_normals()?;
        let h = PolytopeSet::from_normals(sub_w, normals)?;
        let vs = h.vertices()?;
        Ok(vs
            .into_iter()
            .map(|v| {
                let mut full = vec![0.0; m];
                for (k, &i) in live.iter().enumerate() {
                    full[i] = v[k];
                }
                full
            })
            .collect())
    }

    /// `sup {⟨ξ, w⟩ : ξ ∈ self}`.
    pub fn support(&self, w: &[f64]) -> Result<f64> {
        if let Some(g) = &self.generators {
            let pos: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
            return Ok(g.iter().map(|p| self.pairing(p, &pos)).fold(0.0, f64::max));
        }
        let normals = self.normals.as_ref().unwrap();
        let mut lp = LinearProgram::maximize();
        let vars: Vec<usize> = (0..self.dim()).map(|i| lp.nonneg(self.weights[i] * w[i])).collect();
        for n in normals {
            lp.constraint(vars.iter().map(|&v| (v, self.weights[v] * n[v])).collect(), Cmp::Le, 1.0);
        }
        Ok(lp.solve_optimal()?.0)
    }

    /// Minkowski gauge `inf {λ ≥ 0 : ξ ∈ λ · self}` of a nonnegative point.
    pub fn gauge(&self, xi: &[f64]) -> Result<f64> {
        if let Some(n) = &self.normals {
            return Ok(n.iter().map(|w| self.pairing(xi, w)).fold(0.0, f64::max));
        }
        let gens = self.generators.as_ref().unwrap();
        let mut lp = LinearProgram::minimize();
        let lam: Vec<usize> = gens.iter().map(|_| lp.nonneg(1.0)).collect();
        for i in 0..self.dim() {
            if xi[i] > 0.0 {
                lp.constraint(lam.iter().zip(gens).map(|(&l, g)| (l, g[i])).collect(), Cmp::Ge, xi[i]);
            }
        }
        match lp.solve()? {
            LpOutcome::Optimal { objective, .. } => Ok(objective),
            LpOutcome::Infeasible => Ok(f64::INFINITY),
            LpOutcome::Unbounded => Err(Error::Lp("gauge program unbounded".into())),
        }
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> Result<bool> {
        if xi.iter().any(|&v| v < -tol) {
            return Ok(false);
        }
        let clipped: Vec<f64> = xi.iter().map(|v| v.max(0.0)).collect();
        Ok(self.gauge(&clipped)? <= 1.0 + tol)
    }
}

/// Two vertex lists agree up to `tol` in both directions.
pub fn same_vertex_sets(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    let covered = |x: &[Vec<f64>], y: &[Vec<f64>]| x.iter().all(|p| y.iter().any(|q| max_abs_diff(p, q) <= tol));
    covered(a, b) && covered(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0, 1.0, 1.0],
        )
    }

    #[test]
    fn square_vertices() {
        let (a, b) = unit_square();
        let vs = enumerate_vertices(&a, &b, &[], &[]).unwrap();
        let expected = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert!(same_vertex_sets(&vs, &expected, 1e-12));
    }

    #[test]
    fn cube_with_redundant_rows() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..3 {
            let mut r = vec![0.0; 3];
            r[i] = 1.0;
            a.push(r.clone());
            b.push(1.0);
            r[i] = -1.0;
            a.push(r);
            b.push(0.0);
        }
        a.push(vec![1.0, 1.0, 1.0]);
        b.push(3.0);
        a.push(vec![1.0, 1.0, 1.0]);
        b.push(5.0);
        let vs = enumerate_vertices(&a, &b, &[], &[]).unwrap();
        assert_eq!(vs.len(), 8);
    }

    #[test]
    fn simplex_with_equality() {
        // q ≥ 0, Σq = 1, 2 q0 + q1 + 0.5 q2 = 1
        let a = vec![vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]];
        let b = vec![0.0; 3];
        let e = vec![vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 0.5]];
        let eb = vec![1.0, 1.0];
        let vs = enumerate_vertices(&a, &b, &e, &eb).unwrap();
        let expected = vec![vec![0.0, 1.0, 0.0], vec![1.0 / 3.0, 0.0, 2.0 / 3.0]];
        assert!(same_vertex_sets(&vs, &expected, 1e-14), "{vs:?}");
    }

    #[test]
    fn empty_and_unbounded() {
        let a = vec![vec![1.0], vec![-1.0]];
        assert!(enumerate_vertices(&a, &[0.0, -1.0], &[], &[]).unwrap().is_empty());
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]];
        assert!(matches!(enumerate_vertices(&a, &[0.0, 0.0, 1.0], &[], &[]), Err(Error::Unbounded(_))));
    }

    #[test]
    fn polar_of_simplex_is_cube() {
        // solid hull of the unit vectors is the simplex; its polar is the unit cube
        let c = PolytopeSet::from_generators(vec![1.0; 3], vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let p = c.polar().unwrap();
        assert_eq!(p.vertices().unwrap().len(), 8);
        assert_eq!(c.vertices().unwrap().len(), 4);
    }

    #[test]
    fn polar_errors() {
        let zero = PolytopeSet::from_generators(vec![1.0, 1.0], vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(zero.polar(), Err(Error::Unbounded(_))));
        assert!(matches!(
            PolytopeSet::from_normals(vec![1.0, 1.0], vec![vec![1.0, 0.0]]),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn weighted_pairing_enters_normals() {
        let h = PolytopeSet::from_normals(vec![2.0, 0.5], vec![vec![1.0, 1.0]]).unwrap();
        let vs = h.vertices().unwrap();
        let expected = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 2.0]];
        assert!(same_vertex_sets(&vs, &expected, 1e-14));
        assert!((h.support(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((h.gauge(&[0.25, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_scales_vertices() {
        let h = PolytopeSet::from_normals(vec![1.0, 1.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let v1 = h.vertices().unwrap();
        let h3 = h.scaled(3.0).unwrap();
        let v3 = PolytopeSet::from_normals(vec![1.0, 1.0], h3.normals().unwrap().to_vec()).unwrap().vertices().unwrap();
        let expect: Vec<Vec<f64>> = v1.iter().map(|v| v.iter().map(|c| 3.0 * c).collect()).collect();
        assert!(same_vertex_sets(&v3, &expect, 1e-12));
    }
}
