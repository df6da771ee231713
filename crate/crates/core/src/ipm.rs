//! Log-barrier Newton method for smooth convex objectives under linear
//! constraints `G z ≤ h`, `E z = f`.
//!
//! Each barrier stage minimizes `f(z) - τ Σ log(h - G z)` to full Newton
//! convergence, then `τ` drops by a constant factor. The barrier weights are
//! relative to the objective scale `Σ |∂f/∂z_j · z_j|` at the start point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram};

/// Smooth convex objective; `value` returns `+∞` outside the domain.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64]) -> DVector<f64>;
    fn hessian(&self, z: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub struct LinearConstraints {
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl LinearConstraints {
    pub fn new(n: usize) -> Self {
        LinearConstraints { g: DMatrix::zeros(0, n), h: DVector::zeros(0), e: DMatrix::zeros(0, n), f: DVector::zeros(0) }
    }

    pub fn from_rows(n: usize, ineq: Vec<(Vec<f64>, f64)>, eq: Vec<(Vec<f64>, f64)>) -> Self {
        let g = DMatrix::from_fn(ineq.len(), n, |i, j| ineq[i].0[j]);
        let h = DVector::from_iterator(ineq.len(), ineq.iter().map(|r| r.1));
        let e = DMatrix::from_fn(eq.len(), n, |i, j| eq[i].0[j]);
        let f = DVector::from_iterator(eq.len(), eq.iter().map(|r| r.1));
        LinearConstraints { g, h, e, f }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_factor: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { tau_start: 1e-1, tau_end: 1e-10, tau_factor: 10.0, max_newton: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    /// `τ / slack` for every inequality.
    pub ineq_multipliers: Vec<f64>,
    pub eq_multipliers: Vec<f64>,
    /// `‖∇f + Gᵀλ + Eᵀν‖_∞` relative to the objective scale.
    pub stationarity: f64,
    /// `max λ_j · slack_j` relative to the objective scale.
    pub complementarity: f64,
    pub newton_steps: usize,
    pub scale: f64,
    /// False when some stage hit the Newton iteration limit.
    pub converged: bool,
}

pub fn minimize(obj: &dyn Objective, cons: &LinearConstraints, z0: &[f64], opts: &BarrierOptions) -> Result<BarrierSolution> {
    let n = obj.dim();
    if z0.len() != n || cons.g.ncols() != n || cons.e.ncols() != n {
        return Err(Error::Solver("dimension mismatch in barrier problem".into()));
    }
    let mut z = DVector::from_column_slice(z0);
    let slack0 = &cons.h - &cons.g * &z;
    if slack0.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Solver("start point is not strictly feasible".into()));
    }
    if !obj.value(z.as_slice()).is_finite() {
        return Err(Error::Solver("objective is infinite at the start point".into()));
    }
    let g0 = obj.gradient(z.as_slice());
    let mut scale: f64 = g0.iter().zip(z.iter()).map(|(g, v)| (g * v).abs()).sum();
    if !(scale.is_finite() && scale > 0.0) {
        scale = g0.amax().max(1.0);
    }
    let mut tau = opts.tau_start * scale;
    let tau_end = opts.tau_end * scale;
    let mut steps = 0;
    let mut converged = true;
    let mut nu = DVector::zeros(cons.e.nrows());
    loop {
        let (ok, used, stage_nu) = newton_stage(obj, cons, &mut z, tau, scale, opts.max_newton)?;
        steps += used;
        converged &= ok;
        nu = stage_nu.unwrap_or(nu);
        if tau <= tau_end * (1.0 + 1e-12) {
            break;
        }
        tau = (tau / opts.tau_factor).max(tau_end);
    }
    let slack = &cons.h - &cons.g * &z;
    let grad = obj.gradient(z.as_slice());
    let (mut lam, mut nu) = refine_multipliers(cons, &grad, slack.map(|s| tau / s), nu);
    let mut resid = &grad + cons.g.transpose() * &lam + cons.e.transpose() * &nu;
    // the barrier value is off by about `τ` per active row, so any polished
    // point that is stationary to a tight tolerance replaces it
    let mut bound = 1e-9 * scale;
    let start = z.clone();
    for threshold in POLISH_THRESHOLDS {
        let Some((pz, plam, pnu)) = polish(obj, cons, &start, &slack, threshold, scale) else { continue };
        let pgrad = obj.gradient(pz.as_slice());
        let presid = &pgrad + cons.g.transpose() * &plam + cons.e.transpose() * &pnu;
        if presid.amax() <= bound {
            bound = presid.amax();
            z = pz;
            lam = plam;
            nu = pnu;
            resid = presid;
        }
    }
    let slack = &cons.h - &cons.g * &z;
    let complementarity = lam.iter().zip(slack.iter()).map(|(l, s)| (l * s).abs()).fold(0.0, f64::max);
    Ok(BarrierSolution {
        objective: obj.value(z.as_slice()),
        z: z.iter().copied().collect(),
        ineq_multipliers: lam.iter().copied().collect(),
        eq_multipliers: nu.iter().copied().collect(),
        stationarity: resid.amax() / scale,
        complementarity: complementarity / scale,
        newton_steps: steps,
        scale,
        converged,
    })
}

/// Relative slacks below which a row enters the polish active set, tried
/// in turn: degenerate rows sit near `√τ`, strongly active ones near `τ`.
const POLISH_THRESHOLDS: [f64; 3] = [1e-4, 1e-6, 1e-8];

/// Newton steps on the equality problem whose rows are the nearly active
/// inequalities plus `E z = f`. Near-degenerate rows leave the barrier
/// optimizer `O(√τ)` away from the solution; this removes that offset.
/// Rows whose multiplier turns negative are released and the solve repeats.
fn polish(
    obj: &dyn Objective,
    cons: &LinearConstraints,
    z0: &DVector<f64>,
    slack: &DVector<f64>,
    threshold: f64,
    scale: f64,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let size = cons.g.abs() * z0.abs() + cons.h.abs();
    let rows = slack.len();
    let mut active: Vec<usize> = (0..rows).filter(|&j| slack[j] <= threshold * size[j].max(1.0)).collect();
    let f0 = obj.value(z0.as_slice());
    let n = z0.len();
    let p = cons.e.nrows();
    for _ in 0..=rows {
        let k = active.len() + p;
        let mut a = DMatrix::zeros(k, n);
        let mut b = DVector::zeros(k);
        for (r, &j) in active.iter().enumerate() {
            a.set_row(r, &cons.g.row(j));
            b[r] = cons.h[j];
        }
        for i in 0..p {
            a.set_row(active.len() + i, &cons.e.row(i));
            b[active.len() + i] = cons.f[i];
        }
        let (z, mut mult) = equality_newton(obj, &a, &b, z0)?;
        let worst = (0..active.len()).min_by(|&x, &y| mult[x].partial_cmp(&mult[y]).unwrap());
        if let Some(w) = worst {
            if mult[w] < -1e-10 * scale {
                // on a degenerate vertex the minimum-norm multipliers can be
                // negative while a nonnegative choice exists
                match nonneg_multipliers(&obj.gradient(z.as_slice()), &a, active.len()) {
                    Some(fit) => mult = fit,
                    None => {
                        active.remove(w);
                        continue;
                    }
                }
            }
        }
        let s = &cons.h - &cons.g * &z;
        let size = cons.g.abs() * z.abs() + cons.h.abs();
        if s.iter().zip(size.iter()).any(|(s, m)| *s < -1e-10 * m.max(1.0)) {
            return None;
        }
        if !(obj.value(z.as_slice()) <= f0 + 1e-12 * scale) {
            return None;
        }
        let mut full = DVector::zeros(rows);
        for (r, &j) in active.iter().enumerate() {
            full[j] = mult[r].max(0.0);
        }
        return Some((z, full, mult.rows(active.len(), p).into_owned()));
    }
    None
}

/// Minimizes `f` on `{A z = b}` from `z0`: a projection onto the affine
/// set, damped Newton steps in the null space of `A`, and least-squares
/// multipliers at the end. Working in the null space keeps the curvature
/// and constraint scales apart, which a full KKT solve does not.
fn equality_newton(obj: &dyn Objective, a: &DMatrix<f64>, b: &DVector<f64>, z0: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let (k, n) = a.shape();
    let rows = k.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (k, n)).copy_from(a);
    // the SVD does not terminate on non-finite input
    if padded.iter().chain(z0.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let svd = padded.svd(true, true);
    let v_t = svd.v_t.as_ref()?;
    let smax = svd.singular_values.max();
    let null: Vec<usize> = (0..n).filter(|&i| !(svd.singular_values[i] > 1e-12 * smax)).collect();
    let basis = DMatrix::from_fn(n, null.len(), |i, c| v_t[(null[c], i)]);
    let project = |z: &mut DVector<f64>| {
        for _ in 0..2 {
            let mut r = DVector::zeros(rows);
            r.rows_mut(0, k).copy_from(&(b - a * &*z));
            match svd.solve(&r, 1e-12 * smax) {
                Ok(dz) if dz.iter().all(|v| v.is_finite()) => *z += dz,
                _ => break,
            }
        }
    };
    let mut z = z0.clone();
    if k > 0 {
        project(&mut z);
    }
    let mut f = obj.value(z.as_slice());
    if !f.is_finite() {
        return None;
    }
    if !null.is_empty() {
        for _ in 0..50 {
            let grad = obj.gradient(z.as_slice());
            let hess = obj.hessian(z.as_slice());
            if grad.iter().chain(hess.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            let rg = basis.transpose() * &grad;
            let hr = basis.transpose() * &hess * &basis;
            // the reduced Hessian is singular when `f` is flat along some
            // feasible direction; the minimum-norm step is then used
            let dt = match hr.clone().cholesky() {
                Some(ch) => ch.solve(&(-&rg)),
                None => {
                    let hs = hr.svd(true, true);
                    let top = hs.singular_values.max();
                    hs.solve(&(-&rg), 1e-12 * top).ok()?
                }
            };
            let dz = &basis * dt;
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let trial = &z + &dz * alpha;
                let ft = obj.value(trial.as_slice());
                if ft.is_finite() && ft <= f + 1e-14 * f.abs().max(1.0) {
                    z = trial;
                    f = ft;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved || (&dz * alpha).amax() <= 1e-15 * (1.0 + z.amax()) {
                break;
            }
        }
    }
    if k > 0 {
        project(&mut z);
    }
    if !obj.value(z.as_slice()).is_finite() {
        return None;
    }
    let grad = obj.gradient(z.as_slice());
    if k == 0 {
        return Some((z, DVector::zeros(0)));
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // near-duplicate rows make the minimum-norm solve inaccurate, so the
    // multipliers live on an independent subset of rows, equality rows first
    let order: Vec<usize> = (0..k).rev().collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for &r in &order {
        let row = a.row(r).transpose();
        let mut q = row.clone();
        for o in &ortho {
            q -= o * o.dot(&q);
        }
        let nq = q.norm();
        if nq > 1e-9 * row.norm() {
            ortho.push(q / nq);
            kept.push(r);
        }
    }
    let mut mult = DVector::zeros(k);
    if !kept.is_empty() {
        let sub = DMatrix::from_fn(n, kept.len(), |i, c| a[(kept[c], i)]);
        let fit = sub.svd(true, true).solve(&(-&grad), 0.0).ok()?;
        for (c, &r) in kept.iter().enumerate() {
            mult[r] = fit[c];
        }
    }
    Some((z, mult))
}

/// Multipliers for `∇f + Aᵀ m = 0` with the first `nonneg` entries of `m`
/// nonnegative: an LP picks the support, least squares on that support
/// restores full precision.
fn nonneg_multipliers(grad: &DVector<f64>, a: &DMatrix<f64>, nonneg: usize) -> Option<DVector<f64>> {
    let (k, n) = a.shape();
    let gmax = grad.amax().max(f64::MIN_POSITIVE);
    let mut lp = LinearProgram::minimize();
    let vars: Vec<usize> = (0..k).map(|r| if r < nonneg { lp.nonneg(0.0) } else { lp.free(0.0) }).collect();
    let t = lp.nonneg(1.0);
    for i in 0..n {
        let terms: Vec<(usize, f64)> = (0..k).map(|r| (vars[r], a[(r, i)])).collect();
        let mut up = terms.clone();
        up.push((t, -1.0));
        lp.constraint(up, Cmp::Le, -grad[i] / gmax);
        let mut down = terms;
        down.push((t, 1.0));
        lp.constraint(down, Cmp::Ge, -grad[i] / gmax);
    }
    let (res, x) = lp.solve_optimal().ok()?;
    if res > 1e-7 {
        return None;
    }
    let top = x[..k].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let support: Vec<usize> = (0..k).filter(|&r| r >= nonneg || x[r] > 1e-9 * top).collect();
    if support.is_empty() {
        return (grad.amax() <= 1e-12 * gmax.max(1.0)).then(|| DVector::zeros(k));
    }
    let sub = DMatrix::from_fn(n, support.len(), |i, c| a[(support[c], i)]);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let sol = svd.solve(&(-grad), 1e-13 * smax).ok()?;
    let mut m = DVector::zeros(k);
    for (c, &r) in support.iter().enumerate() {
        if r < nonneg && sol[c] < -1e-10 * gmax {
            return None;
        }
        m[r] = if r < nonneg { sol[c].max(0.0) } else { sol[c] };
    }
    Some(m)
}

/// `τ / slack` loses relative accuracy on nearly active rows, so the
/// multipliers of those rows are re-fitted to the stationarity equation.
fn refine_multipliers(
    cons: &LinearConstraints,
    grad: &DVector<f64>,
    lam: DVector<f64>,
    nu: DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let top = lam.iter().fold(0.0f64, |a, &b| a.max(b));
    let active: Vec<usize> = (0..lam.len()).filter(|&j| lam[j] > 1e-6 * top).collect();
    let p = cons.e.nrows();
    let k = active.len() + p;
    if k == 0 {
        return (lam, nu);
    }
    let n = grad.len();
    let mut a = DMatrix::zeros(n, k);
    for (c, &j) in active.iter().enumerate() {
        a.set_column(c, &cons.g.row(j).transpose());
    }
    for i in 0..p {
        a.set_column(active.len() + i, &cons.e.row(i).transpose());
    }
    let mut rhs = -grad.clone();
    for j in 0..lam.len() {
        if !active.contains(&j) {
            rhs -= cons.g.row(j).transpose() * lam[j];
        }
    }
    if a.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return (lam, nu);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let Ok(sol) = svd.solve(&rhs, 1e-12 * smax) else {
        return (lam, nu);
    };
    let mut refined = lam.clone();
    for (c, &j) in active.iter().enumerate() {
        if sol[c] < 0.0 {
            return (lam, nu);
        }
        refined[j] = sol[c];
    }
    let before = (grad + cons.g.transpose() * &lam + cons.e.transpose() * &nu).amax();
    let new_nu = sol.rows(active.len(), p).into_owned();
    let after = (grad + cons.g.transpose() * &refined + cons.e.transpose() * &new_nu).amax();
    if after < before {
        (refined, new_nu)
    } else {
        (lam, nu)
    }
}

fn barrier_value(obj: &dyn Objective, cons: &LinearConstraints, z: &DVector<f64>, tau: f64) -> f64 {
    let slack = &cons.h - &cons.g * z;
    if slack.iter().any(|&s| !(s > 0.0)) {
        return f64::INFINITY;
    }
    let f = obj.value(z.as_slice());
    if !f.is_finite() {
        return f64::INFINITY;
    }
    f - tau * slack.iter().map(|s| s.ln()).sum::<f64>()
}

type StageOutcome = (bool, usize, Option<DVector<f64>>);

fn newton_stage(
    obj: &dyn Objective,
    cons: &LinearConstraints,
    z: &mut DVector<f64>,
    tau: f64,
    scale: f64,
    max_iter: usize,
) -> Result<StageOutcome> {
    let n = z.len();
    let p = cons.e.nrows();
    let mut nu = None;
    for it in 0..max_iter {
        let slack = &cons.h - &cons.g * &*z;
        let inv = slack.map(|s| 1.0 / s);
        let mut grad = obj.gradient(z.as_slice());
        grad += cons.g.transpose() * (&inv * tau);
        let mut hess = obj.hessian(z.as_slice());
        let mut gs = cons.g.clone();
        for (i, mut row) in gs.row_iter_mut().enumerate() {
            row *= inv[i] * tau.sqrt();
        }
        hess += gs.transpose() * &gs;
        let r_eq = &cons.f - &cons.e * &*z;

        let (dz, step_nu) = if p == 0 {
            let dz = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .clone()
                    .full_piv_lu()
                    .solve(&(-&grad))
                    .ok_or_else(|| Error::Solver("singular Newton system".into()))?,
            };
            (dz, None)
        } else {
            let mut kkt = DMatrix::zeros(n + p, n + p);
            kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
            kkt.view_mut((n, 0), (p, n)).copy_from(&cons.e);
            kkt.view_mut((0, n), (n, p)).copy_from(&cons.e.transpose());
            let mut rhs = DVector::zeros(n + p);
            rhs.rows_mut(0, n).copy_from(&(-&grad));
            rhs.rows_mut(n, p).copy_from(&r_eq);
            let sol = kkt
                .full_piv_lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solver("singular KKT system".into()))?;
            (sol.rows(0, n).into_owned(), Some(sol.rows(n, p).into_owned()))
        };
        if let Some(v) = step_nu {
            nu = Some(v);
        }
        let dec2 = dz.dot(&(&hess * &dz));
        if dec2 <= 1e-15 * scale && r_eq.amax() <= 1e-13 {
            // one more full step lands at machine precision
            let gd = &cons.g * &dz;
            let fits = slack.iter().zip(gd.iter()).all(|(s, d)| *d < 0.5 * s);
            let trial = &*z + &dz;
            if fits && obj.value(trial.as_slice()).is_finite() {
                *z = trial;
            }
            return Ok((true, it + 1, nu));
        }

        // largest step keeping every slack positive
        let gd = &cons.g * &dz;
        let mut alpha: f64 = 1.0;
        for (s, d) in slack.iter().zip(gd.iter()) {
            if *d > 0.0 {
                alpha = alpha.min(0.99 * s / d);
            }
        }
        let phi0 = barrier_value(obj, cons, z, tau);
        let slope = grad.dot(&dz);
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &*z + &dz * alpha;
            let phi = barrier_value(obj, cons, &trial, tau);
            let sufficient = phi <= phi0 + 0.25 * alpha * slope;
            let tiny = dec2 <= 1e-9 * scale && phi.is_finite();
            if sufficient || tiny {
                *z = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no further progress at machine precision
            return Ok((dec2 <= 1e-10 * scale, it + 1, nu));
        }
    }
    Ok((false, max_iter, nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        target: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.target.len()
        }
        fn value(&self, z: &[f64]) -> f64 {
            z.iter().zip(&self.target).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum()
        }
        fn gradient(&self, z: &[f64]) -> DVector<f64> {
            DVector::from_iterator(z.len(), z.iter().zip(&self.target).map(|(a, b)| a - b))
        }
        fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
            DMatrix::identity(z.len(), z.len())
        }
    }

    struct NegLog;

    impl Objective for NegLog {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, z: &[f64]) -> f64 {
            if z.iter().all(|&v| v > 0.0) {
                -(z[0].ln() + z[1].ln())
            } else {
                f64::INFINITY
            }
        }
        fn gradient(&self, z: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![-1.0 / z[0], -1.0 / z[1]])
        }
        fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / (z[0] * z[0]), 1.0 / (z[1] * z[1])]))
        }
    }

    #[test]
    fn projection_onto_box() {
        let obj = Quadratic { target: vec![2.0, -1.0] };
        let cons = LinearConstraints::from_rows(
            2,
            vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 0.0), (vec![0.0, 1.0], 1.0), (vec![0.0, -1.0], 0.0)],
            vec![],
        );
        let sol = minimize(&obj, &cons, &[0.5, 0.5], &BarrierOptions::default()).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-9 && sol.z[1].abs() < 1e-9, "{:?}", sol.z);
        assert!(sol.converged);
        assert!(sol.stationarity < 1e-8, "{sol:?}");
    }

    #[test]
    fn log_budget_with_equality() {
        // max log a + log b with a + 2 b = 2: a = 1, b = 1/2
        let cons = LinearConstraints::from_rows(2, vec![], vec![(vec![1.0, 2.0], 2.0)]);
        let sol = minimize(&NegLog, &cons, &[0.4, 0.8], &BarrierOptions::default()).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-10 && (sol.z[1] - 0.5).abs() < 1e-10, "{sol:?}");
        assert!((sol.eq_multipliers[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_infeasible_start() {
        let cons = LinearConstraints::from_rows(2, vec![(vec![1.0, 1.0], 1.0)], vec![]);
        assert!(minimize(&NegLog, &cons, &[1.0, 1.0], &BarrierOptions::default()).is_err());
    }
}
