//! Derivative-free reference solvers for tiny instances.
//!
//! Values come from a lattice scan of a simplex followed by a pattern
//! search whose poll directions are all `e_i - e_j` plus seeded random
//! directions; the step halves whenever no poll point improves. Primal
//! points are projected radially onto the boundary of `C(x)`, dual points
//! are convex weights over the generators of `D`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstract_core::AbstractProblem;
use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::polytope::PolytopeSet;

/// Largest number of decision variables the oracle accepts.
pub const ORACLE_MAX_VARS: usize = 6;

const LATTICE_POINTS: usize = 5000;
const RANDOM_DIRECTIONS: usize = 48;
const MIN_STEP: f64 = 1e-11;

/// Rows `a` with `a·d ≈ 0` describing the kink ridge through `d` at a
/// given step size; polling along their null space follows the ridge.
pub type Ridge<'a> = &'a dyn Fn(&[f64], f64) -> Vec<Vec<f64>>;

/// Maximizes `f` over the probability simplex in `R^n`.
pub fn simplex_search(n: usize, f: &dyn Fn(&[f64]) -> f64, seed: u64) -> (Vec<f64>, f64) {
    simplex_search_with_ridge(n, f, None, seed)
}

/// [`simplex_search`] with extra poll directions along kink ridges.
pub fn simplex_search_with_ridge(n: usize, f: &dyn Fn(&[f64]) -> f64, ridge: Option<Ridge>, seed: u64) -> (Vec<f64>, f64) {
    if n == 1 {
        return (vec![1.0], f(&[1.0]));
    }
    let mut res = 1;
    while binom(res + 1 + n - 1, n - 1) <= LATTICE_POINTS && res < 4000 {
        res += 1;
    }
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut comp = vec![0usize; n];
    lattice(n, 0, res, &mut comp, &mut |c| {
        let p: Vec<f64> = c.iter().map(|&k| k as f64 / res as f64).collect();
        let v = f(&p);
        if v.is_finite() {
            scored.push((v, p));
        }
    });
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (vec![1.0 / n as f64; n], f(&vec![1.0 / n as f64; n]));
    for (v0, p0) in scored.into_iter().take(3) {
        let (p, v) = pattern_search(p0, v0, 1.0 / res as f64, f, ridge, &mut rng);
        if v > best.1 || !best.1.is_finite() {
            best = (p, v);
        }
    }
    best
}

fn binom(n: usize, k: usize) -> usize {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

fn lattice(n: usize, i: usize, left: usize, comp: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if i == n - 1 {
        comp[i] = left;
        visit(comp);
        return;
    }
    for k in 0..=left {
        comp[i] = k;
        lattice(n, i + 1, left - k, comp, visit);
    }
}

fn pattern_search(
    mut p: Vec<f64>,
    mut v: f64,
    mut step: f64,
    f: &dyn Fn(&[f64]) -> f64,
    ridge: Option<Ridge>,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let n = p.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut d = vec![0.0; n];
                d[i] = 1.0;
                d[j] = -1.0;
                dirs.push(d);
            }
        }
    }
    let base = dirs.len();
    let mut guard = 0;
    while step > MIN_STEP && guard < 20_000 {
        guard += 1;
        dirs.truncate(base);
        for _ in 0..RANDOM_DIRECTIONS {
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = d.iter().sum::<f64>() / n as f64;
            d.iter_mut().for_each(|x| *x -= mean);
            let norm = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if norm > 0.0 {
                d.iter_mut().for_each(|x| *x /= norm);
                dirs.push(d);
            }
        }
        if let Some(r) = ridge {
            let rows = r(&p, step);
            // the full tie set and every tie set with one row released
            for skip in std::iter::once(None).chain((0..rows.len()).map(Some)) {
                let sub: Vec<&Vec<f64>> = rows.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, a)| a).collect();
                for b in null_directions(n, &sub) {
                    dirs.push(b.iter().map(|x| -x).collect());
                    dirs.push(b);
                }
            }
        }
        let mut improved: Option<(Vec<f64>, f64)> = None;
        for d in &dirs {
            let q: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + step * b).collect();
            if q.iter().any(|&x| x < 0.0) {
                continue;
            }
            let fq = f(&q);
            if fq > improved.as_ref().map_or(v, |b| b.1) {
                improved = Some((q, fq));
            }
        }
        match improved {
            Some((q, fq)) => {
                p = q;
                v = fq;
                step *= 1.5;
            }
            None => step *= 0.5,
        }
    }
    (p, v)
}

/// Orthonormal basis of `{d : Σ d = 0, a·d = 0 for each row}`, scaled to unit max-norm.
fn null_directions(n: usize, rows: &[&Vec<f64>]) -> Vec<Vec<f64>> {
    let mut m = DMatrix::from_element(rows.len() + 1, n, 1.0);
    for (i, a) in rows.iter().enumerate() {
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for j in 0..n {
            m[(i, j)] = a[j] / norm;
        }
    }
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    (0..n)
        .filter(|&k| eig.eigenvalues[k] <= 1e-10 * top.max(1.0))
        .map(|k| {
            let col = eig.eigenvectors.column(k);
            let s = col.iter().map(|x| x.abs()).fold(0.0, f64::max);
            col.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Near-ties of `max_k ⟨d, w_k⟩` at `d`: differences between each nearly
/// maximal normal and the maximal one.
fn tie_rows(set: &PolytopeSet, d: &[f64], step: f64) -> Vec<Vec<f64>> {
    let normals = set.normals().unwrap();
    let mu = set.weights();
    let rows: Vec<Vec<f64>> = normals.iter().map(|w| w.iter().zip(mu).map(|(a, b)| a * b).collect()).collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.iter().zip(d).map(|(a, b)| a * b).sum()).collect();
    let (top, g) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let scale = rows.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    // duplicated normals differ by roundoff only and carry no ridge
    (0..rows.len())
        .filter(|&k| k != top && g - vals[k] <= 4.0 * step * scale)
        .map(|k| rows[k].iter().zip(&rows[top]).map(|(a, b)| a - b).collect::<Vec<f64>>())
        .filter(|d| d.iter().fold(0.0f64, |m, x| m.max(x.abs())) > 1e-9 * scale)
        .collect()
}

/// Number of decision variables the oracle would use for each side.
pub fn oracle_sizes(p: &AbstractProblem) -> (usize, usize) {
    let size = |s: &PolytopeSet| match s.normals() {
        Some(_) => s.dim(),
        None => s.generators().map_or(usize::MAX, |g| g.len()),
    };
    (size(p.primal_set()), size(p.dual_set()))
}

fn radial(set: &PolytopeSet, level: f64, d: &[f64]) -> Vec<f64> {
    let g = set.normals().unwrap().iter().map(|w| set.pairing(d, w)).fold(0.0, f64::max);
    d.iter().map(|v| level * v / g).collect()
}

fn spanned(set: &PolytopeSet, level: f64, lambda: &[f64]) -> Vec<f64> {
    let gens = set.generators().unwrap();
    (0..set.dim()).map(|i| level * gens.iter().zip(lambda).map(|(g, l)| l * g[i]).sum::<f64>()).collect()
}

/// Reference value of `u(x)`.
pub fn oracle_primal(p: &AbstractProblem, x: f64, seed: u64) -> Result<f64> {
    let set = p.primal_set();
    let n = oracle_sizes(p).0;
    if n > ORACLE_MAX_VARS {
        return Err(Error::EnumerationCap { what: "primal oracle".into(), size: n, cap: ORACLE_MAX_VARS });
    }
    let f = |d: &[f64]| {
        let xi = if set.normals().is_some() { radial(set, x, d) } else { spanned(set, x, d) };
        let v = p.primal_objective(&xi);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let ridge = |d: &[f64], step: f64| tie_rows(set, d, step);
    let ridge: Option<Ridge> = if set.normals().is_some() { Some(&ridge) } else { None };
    Ok(simplex_search_with_ridge(n, &f, ridge, seed).1)
}

/// Reference value of `v(y)`.
pub fn oracle_dual(p: &AbstractProblem, y: f64, seed: u64) -> Result<f64> {
    let set = p.dual_set();
    let n = oracle_sizes(p).1;
    if n > ORACLE_MAX_VARS {
        return Err(Error::EnumerationCap { what: "dual oracle".into(), size: n, cap: ORACLE_MAX_VARS });
    }
    let f = |d: &[f64]| {
        let eta = if set.normals().is_some() { radial(set, y, d) } else { spanned(set, y, d) };
        let v = -p.dual_objective(&eta);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let ridge = |d: &[f64], step: f64| tie_rows(set, d, step);
    let ridge: Option<Ridge> = if set.normals().is_some() { Some(&ridge) } else { None };
    Ok(-simplex_search_with_ridge(n, &f, ridge, seed).1)
}

/// Vertices of the solid hull of `generators` by brute force: every
/// coordinate restriction of every generator is a candidate, and a
/// candidate is kept when no convex combination of the others reproduces it.
pub fn solid_hull_vertices(generators: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = generators.first().map_or(0, |g| g.len());
    if m > 12 {
        return Err(Error::EnumerationCap { what: "solid hull candidates".into(), size: m, cap: 12 });
    }
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for g in generators {
        for mask in 0u32..(1 << m) {
            let c: Vec<f64> = (0..m).map(|i| if mask & (1 << i) != 0 { g[i] } else { 0.0 }).collect();
            if !cands.iter().any(|d| d.iter().zip(&c).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                cands.push(c);
            }
        }
    }
    let mut out = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let others: Vec<&Vec<f64>> = cands.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| d).collect();
        let mut lp = LinearProgram::minimize();
        let lam: Vec<usize> = others.iter().map(|_| lp.nonneg(0.0)).collect();
        lp.constraint(lam.iter().map(|&l| (l, 1.0)).collect(), Cmp::Eq, 1.0);
        for k in 0..m {
            lp.constraint(lam.iter().zip(&others).map(|(&l, d)| (l, d[k])).collect(), Cmp::Eq, c[k]);
        }
        if matches!(lp.solve()?, LpOutcome::Infeasible) {
            out.push(c.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_search_finds_interior_peak() {
        let target = [0.2, 0.5, 0.3];
        let f = |p: &[f64]| -p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let (p, v) = simplex_search(3, &f, 1);
        assert!(v > -1e-16, "{p:?}");
    }

    #[test]
    fn simplex_search_handles_kinks_off_axis() {
        // sharp ridge along a direction that is not a lattice direction
        let f = |p: &[f64]| -(3.0 * p[0] - p[1] - 0.1).abs() - 0.3 * (p[2] - 0.37).abs() + 0.01 * p[1];
        let (p, v) = simplex_search(3, &f, 7);
        // exact optimum on the segment 3 p0 - p1 = 0.1, p2 = 0.37
        let p0 = (0.63 + 0.1) / 4.0;
        let exact = 0.01 * (3.0 * p0 - 0.1);
        assert!((v - exact).abs() < 1e-8, "{p:?} {v} {exact}");
    }

    #[test]
    fn brute_force_hull_of_segment() {
        let vs = solid_hull_vertices(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(vs.len(), 4);
    }
}
