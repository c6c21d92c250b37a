use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::constraint::ConstraintRow;
use super::cost::CostFactor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpConfig {
    pub feas_tol: f64,
    /// Bound on `sᵀz / (1 + |f(x)|)` at termination.
    pub gap_tol: f64,
    pub max_ip_iters: usize,
    /// Ridge added to `ΨᵀΨ`, relative to its mean diagonal.
    pub ridge_rel: f64,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            gap_tol: 1e-8,
            max_ip_iters: 100,
            ridge_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpStats {
    pub iterations: usize,
    pub gap: f64,
    pub max_violation: f64,
    /// The active-set refinement replaced the interior-point iterate.
    pub polished: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Lagrange multipliers, one per constraint.
    pub z: DVector<f64>,
    /// `xᵀGx` with the ridge included.
    pub objective: f64,
    pub stats: QpStats,
}

/// Minimizes `xᵀGx` with `G = ΨᵀΨ + ridge·I` subject to `pᵀx ≤ rhs` for
/// every row, by a primal-dual interior-point method with Mehrotra
/// corrector steps, followed by an equality-constrained solve on the
/// detected active set.
pub fn solve_qp(cost: &CostFactor, rows: &[ConstraintRow], cfg: &QpConfig) -> Result<QpSolution> {
    let g = cost.gram();
    let q = g.nrows();
    let ridge = cfg.ridge_rel * g.trace() / q.max(1) as f64;
    let ridge = if ridge > 0.0 { ridge } else { cfg.ridge_rel };
    let g = g + DMatrix::identity(q, q) * ridge;
    let a = DMatrix::from_fn(rows.len(), q, |i, j| rows[i].p[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.rhs));
    solve_dense(&g, &a, &b, cfg)
}

/// `min xᵀGx` subject to `Ax ≤ b` for symmetric positive definite `G`.
pub fn solve_dense(g: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>, cfg: &QpConfig) -> Result<QpSolution> {
    let n = g.nrows();
    let m = a.nrows();
    if m == 0 || b.iter().all(|&v| v >= 0.0) {
        return Ok(QpSolution {
            x: DVector::zeros(n),
            z: DVector::zeros(m),
            objective: 0.0,
            stats: QpStats {
                iterations: 0,
                gap: 0.0,
                max_violation: b.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max).max(0.0),
                polished: false,
            },
        });
    }
    let h: DMatrix<f64> = g * 2.0;
    let chol = Cholesky::new(h.clone()).ok_or_else(|| Error::Qp("cost Hessian is not positive definite".into()))?;
    // H⁻¹Aᵀ and the Schur complement A·H⁻¹·Aᵀ are fixed across iterations.
    let hia = chol.solve(&a.transpose());
    let w = a * &hia;

    let bscale = 1.0 + b.amax();
    let mut x = DVector::zeros(n);
    let mut s = b.map(|v| v.abs().max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut done = false;
    for it in 0..cfg.max_ip_iters {
        iterations = it + 1;
        let rd = &h * &x + a.transpose() * &z;
        let rp = a * &x + &s - b;
        let f = x.dot(&(g * &x));
        gap = s.dot(&z);
        if rp.amax() <= cfg.feas_tol * bscale && rd.amax() <= cfg.feas_tol * (1.0 + h.amax()) && gap <= cfg.gap_tol * (1.0 + f.abs()) {
            done = true;
            break;
        }
        let mu = gap / m as f64;
        let solve = |rc: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
            // (A H⁻¹ Aᵀ + Z⁻¹S) dz = r_p − A H⁻¹ r_d − Z⁻¹ r_c
            let mut k = w.clone();
            for i in 0..m {
                k[(i, i)] += s[i] / z[i];
            }
            let rhs = &rp - &hia.transpose() * &rd - rc.component_div(&z);
            let dz = Cholesky::<f64, Dyn>::new(k)?.solve(&rhs);
            let dx = -chol.solve(&(&rd + a.transpose() * &dz));
            let ds = -(rc + s.component_mul(&dz)).component_div(&z);
            Some((dx, ds, dz))
        };
        let rc_aff = s.component_mul(&z);
        let (_, ds_a, dz_a) = solve(&rc_aff).ok_or_else(|| Error::Qp("Newton system is singular".into()))?;
        let alpha_a = step_len(&s, &ds_a).min(step_len(&z, &dz_a));
        let mu_aff = (&s + &ds_a * alpha_a).dot(&(&z + &dz_a * alpha_a)) / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
        let rc = &rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
        let (dx, ds, dz) = solve(&rc).ok_or_else(|| Error::Qp("Newton system is singular".into()))?;
        let alpha = (0.99 * step_len(&s, &ds).min(step_len(&z, &dz))).min(1.0);
        x += &dx * alpha;
        s += &ds * alpha;
        z += &dz * alpha;
    }
    if !done {
        return Err(Error::Qp(format!(
            "no convergence in {} interior-point iterations (gap {gap:.3e})",
            cfg.max_ip_iters
        )));
    }

    let mut polished = false;
    if let Some((xp, zp)) = polish(&chol, &hia, a, b, &s, &z, cfg.feas_tol * bscale) {
        x = xp;
        z = zp;
        polished = true;
    }
    let max_violation = (a * &x - b).iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let objective = x.dot(&(g * &x));
    Ok(QpSolution {
        x,
        z,
        objective,
        stats: QpStats {
            iterations,
            gap,
            max_violation,
            polished,
        },
    })
}

/// Largest `α ∈ (0, 1]` keeping `v + α·dv ≥ 0`.
fn step_len(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(1.0, f64::min)
}

/// Solves the KKT system with the constraints whose multiplier dominates
/// their slack held as equalities. Accepted only if the result is feasible
/// with non-negative multipliers.
fn polish(
    chol: &Cholesky<f64, Dyn>,
    hia: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    s: &DVector<f64>,
    z: &DVector<f64>,
    tol: f64,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let act: Vec<usize> = (0..b.len()).filter(|&i| z[i] > s[i]).collect();
    if act.is_empty() {
        return None;
    }
    let k = act.len();
    // x = −H⁻¹A_actᵀ λ with A_act·H⁻¹·A_actᵀ λ = −b_act.
    let wa = DMatrix::from_fn(k, k, |i, j| a.row(act[i]).dot(&hia.column(act[j]).transpose()));
    let ba = DVector::from_fn(k, |i, _| b[act[i]]);
    let lam = wa.lu().solve(&(-ba))?;
    if lam.iter().any(|&l| !(l >= 0.0)) {
        return None;
    }
    let mut atl = DVector::zeros(a.ncols());
    for (i, &r) in act.iter().enumerate() {
        atl += a.row(r).transpose() * lam[i];
    }
    let x = -chol.solve(&atl);
    if (a * &x - b).iter().any(|&v| v > tol) {
        return None;
    }
    let mut zf = DVector::zeros(b.len());
    for (i, &r) in act.iter().enumerate() {
        zf[r] = lam[i];
    }
    Some((x, zf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n + 3, n, |_, _| rng.gen_range(-1.0..1.0));
        m.transpose() * m + DMatrix::identity(n, n) * 1e-3
    }

    #[test]
    fn no_active_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = spd(&mut rng, 4);
        let a = DMatrix::from_fn(2, 4, |_, _| rng.gen_range(-1.0..1.0));
        let s = solve_dense(&g, &a, &DVector::from_vec(vec![0.5, 0.0]), &QpConfig::default()).unwrap();
        assert_eq!(s.x, DVector::zeros(4));
        let s = solve_dense(&g, &DMatrix::zeros(0, 4), &DVector::zeros(0), &QpConfig::default()).unwrap();
        assert_eq!(s.x, DVector::zeros(4));
    }

    #[test]
    fn single_constraint_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.gen_range(2..9);
            let g = spd(&mut rng, n);
            let p = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let r = -rng.gen_range(0.01..2.0);
            let gp = g.clone().cholesky().unwrap().solve(&p);
            let want = &gp * (r / p.dot(&gp));
            let a = DMatrix::from_row_slice(1, n, p.as_slice());
            let s = solve_dense(&g, &a, &DVector::from_element(1, r), &QpConfig::default()).unwrap();
            assert!((&s.x - &want).amax() <= 1e-8 * (1.0 + want.amax()), "{}", (&s.x - &want).amax());
        }
    }

    #[test]
    fn separable_constraints_add() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g1 = spd(&mut rng, 3);
        let g2 = spd(&mut rng, 3);
        let mut g = DMatrix::zeros(6, 6);
        g.view_mut((0, 0), (3, 3)).copy_from(&g1);
        g.view_mut((3, 3), (3, 3)).copy_from(&g2);
        let mut a = DMatrix::zeros(2, 6);
        for j in 0..3 {
            a[(0, j)] = rng.gen_range(-1.0..1.0);
            a[(1, 3 + j)] = rng.gen_range(-1.0..1.0);
        }
        let b = DVector::from_vec(vec![-0.3, -0.8]);
        let cfg = QpConfig::default();
        let both = solve_dense(&g, &a, &b, &cfg).unwrap();
        let one = solve_dense(&g, &a.rows(0, 1).clone_owned(), &b.rows(0, 1).clone_owned(), &cfg).unwrap();
        let two = solve_dense(&g, &a.rows(1, 1).clone_owned(), &b.rows(1, 1).clone_owned(), &cfg).unwrap();
        assert!((&both.x - (&one.x + &two.x)).amax() <= 1e-8);
    }

    #[test]
    fn kkt_conditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 12;
            let m = 7;
            let g = spd(&mut rng, n);
            let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            let b = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..0.5));
            let s = solve_dense(&g, &a, &b, &QpConfig::default()).unwrap();
            let res = &a * &s.x - &b;
            assert!(res.max() <= 1e-9);
            assert!(s.z.min() >= 0.0);
            let stat = &g * &s.x * 2.0 + a.transpose() * &s.z;
            assert!(stat.amax() <= 1e-7, "{}", stat.amax());
            for i in 0..m {
                assert!((s.z[i] * res[i]).abs() <= 1e-8);
            }
            assert!(s.objective >= 0.0);
        }
    }
}
