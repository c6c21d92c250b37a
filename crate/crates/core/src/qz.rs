//! Dense real QZ for generalized eigenvalues of a pencil `(A, B)`.
//!
//! Eigenvalues are returned as pairs `(α, β)` with `λ = α/β` and `β ≥ 0`;
//! `β = 0` marks an infinite eigenvalue. The implementation follows the
//! classical Moler–Stewart scheme: Hessenberg-triangular reduction, then
//! implicit Francis double-shift sweeps with deflation of zero diagonal
//! entries of the triangular factor.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// One generalized eigenvalue `λ = alpha / beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenEig {
    pub alpha: Complex64,
    pub beta: f64,
}

impl GenEig {
    /// `α/β`; infinite entries come back as `∞ + 0j`.
    pub fn lambda(&self) -> Complex64 {
        if self.beta == 0.0 {
            Complex64::new(f64::INFINITY, 0.0)
        } else {
            self.alpha / self.beta
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QzFailure(pub String);

/// All `n` generalized eigenvalues of the square pencil `(a, b)`.
pub fn generalized_eigenvalues(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<Vec<GenEig>, QzFailure> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(QzFailure(format!(
            "pencil shapes {:?} and {:?} are not square and equal",
            a.shape(),
            b.shape()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(QzFailure("pencil has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut h, mut t) = hessenberg_triangular(a, b);
    let mut out = vec![
        GenEig {
            alpha: Complex64::new(0.0, 0.0),
            beta: 0.0
        };
        n
    ];
    qz_iterate(&mut h, &mut t, &mut out)?;
    Ok(out)
}

/// Splits pairs into finite eigenvalues and a count of infinite ones.
/// A pair is infinite when `|β| ≤ rel_tol · max|β|`.
pub fn split_finite(pairs: &[GenEig], rel_tol: f64) -> (Vec<Complex64>, usize) {
    let bmax = pairs.iter().map(|p| p.beta.abs()).fold(0.0, f64::max);
    let mut finite = Vec::with_capacity(pairs.len());
    let mut n_inf = 0;
    for p in pairs {
        if bmax == 0.0 || p.beta.abs() <= rel_tol * bmax {
            n_inf += 1;
        } else {
            finite.push(p.alpha / p.beta);
        }
    }
    (finite, n_inf)
}

// Givens rotation: [c s; -s c] [f; g] = [r; 0].
fn givens(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, 1.0, g)
    } else {
        let r = f.hypot(g).copysign(f);
        (f / r, g / r, r)
    }
}

// Rows i1, i2 over columns c0..=c1.
fn rot_rows(m: &mut DMatrix<f64>, i1: usize, i2: usize, c0: usize, c1: usize, c: f64, s: f64) {
    for j in c0..=c1 {
        let (x, y) = (m[(i1, j)], m[(i2, j)]);
        m[(i1, j)] = c * x + s * y;
        m[(i2, j)] = -s * x + c * y;
    }
}

// Columns j1, j2 over rows r0..=r1.
fn rot_cols(m: &mut DMatrix<f64>, j1: usize, j2: usize, r0: usize, r1: usize, c: f64, s: f64) {
    for i in r0..=r1 {
        let (x, y) = (m[(i, j1)], m[(i, j2)]);
        m[(i, j1)] = c * x + s * y;
        m[(i, j2)] = -s * x + c * y;
    }
}

fn hessenberg_triangular(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let qr = b.clone().qr();
    let mut h = qr.q().transpose() * a;
    let mut t = qr.r();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = 0.0;
        }
    }
    if n < 3 {
        return (h, t);
    }
    for j in 0..n - 2 {
        for i in (j + 2..n).rev() {
            let (c, s, r) = givens(h[(i - 1, j)], h[(i, j)]);
            h[(i - 1, j)] = r;
            h[(i, j)] = 0.0;
            rot_rows(&mut h, i - 1, i, j + 1, n - 1, c, s);
            rot_rows(&mut t, i - 1, i, i - 1, n - 1, c, s);
            let (c, s, r) = givens(t[(i, i)], t[(i, i - 1)]);
            t[(i, i)] = r;
            t[(i, i - 1)] = 0.0;
            rot_cols(&mut h, i, i - 1, 0, n - 1, c, s);
            rot_cols(&mut t, i, i - 1, 0, i - 1, c, s);
        }
    }
    (h, t)
}

// Householder reflector `I − β v vᵀ` mapping x to a multiple of e₀.
fn house3(x: [f64; 3]) -> Option<([f64; 3], f64)> {
    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if norm == 0.0 {
        return None;
    }
    let alpha = -norm.copysign(x[0]);
    let v = [x[0] - alpha, x[1], x[2]];
    let vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if vv == 0.0 {
        return None;
    }
    Some((v, 2.0 / vv))
}

fn reflect_rows(m: &mut DMatrix<f64>, k: usize, v: &[f64; 3], beta: f64, c0: usize, c1: usize) {
    for j in c0..=c1 {
        let d = v[0] * m[(k, j)] + v[1] * m[(k + 1, j)] + v[2] * m[(k + 2, j)];
        let f = beta * d;
        m[(k, j)] -= f * v[0];
        m[(k + 1, j)] -= f * v[1];
        m[(k + 2, j)] -= f * v[2];
    }
}

fn reflect_cols(m: &mut DMatrix<f64>, k: usize, v: &[f64; 3], beta: f64, r0: usize, r1: usize) {
    for i in r0..=r1 {
        let d = v[0] * m[(i, k)] + v[1] * m[(i, k + 1)] + v[2] * m[(i, k + 2)];
        let f = beta * d;
        m[(i, k)] -= f * v[0];
        m[(i, k + 1)] -= f * v[1];
        m[(i, k + 2)] -= f * v[2];
    }
}

fn qz_iterate(h: &mut DMatrix<f64>, t: &mut DMatrix<f64>, out: &mut [GenEig]) -> Result<(), QzFailure> {
    let n = h.nrows();
    let last = n - 1;
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let atol = safmin.max(ulp * h.norm());
    let btol = safmin.max(ulp * t.norm());
    let small_sub = |h: &DMatrix<f64>, j: usize| {
        h[(j, j - 1)].abs() <= atol.max(ulp * (h[(j, j)].abs() + h[(j - 1, j - 1)].abs()))
    };

    let maxit = 30 * n.max(1);
    let mut ilast = last as isize;
    let mut iiter = 0usize;
    let mut jiter = 0usize;

    'outer: while ilast >= 0 {
        jiter += 1;
        if jiter > maxit {
            return Err(QzFailure(format!(
                "QZ did not converge within {maxit} sweeps ({} eigenvalues left)",
                ilast + 1
            )));
        }
        let il = ilast as usize;

        // Deflation of a trailing 1x1 block.
        if il == 0 || small_sub(h, il) {
            if il > 0 {
                h[(il, il - 1)] = 0.0;
            }
            let (a, b) = (h[(il, il)], t[(il, il)]);
            out[il] = if b < 0.0 {
                GenEig { alpha: Complex64::new(-a, 0.0), beta: -b }
            } else {
                GenEig { alpha: Complex64::new(a, 0.0), beta: b }
            };
            ilast -= 1;
            iiter = 0;
            continue;
        }
        if t[(il, il)].abs() <= btol {
            t[(il, il)] = 0.0;
            clear_trailing_sub(h, t, il);
            continue;
        }

        // Look for a split point or a zero on the diagonal of T.
        let mut ifirst = None;
        let mut j = il - 1;
        loop {
            let ilazro = if j == 0 {
                true
            } else if small_sub(h, j) {
                h[(j, j - 1)] = 0.0;
                true
            } else {
                false
            };
            if t[(j, j)].abs() < btol {
                t[(j, j)] = 0.0;
                let mut ilazr2 = false;
                if !ilazro {
                    let mut temp = h[(j, j - 1)].abs();
                    let mut temp2 = h[(j, j)].abs();
                    let tempr = temp.max(temp2);
                    if tempr < 1.0 && tempr != 0.0 {
                        temp /= tempr;
                        temp2 /= tempr;
                    }
                    if temp * h[(j + 1, j)].abs() <= temp2 * atol {
                        ilazr2 = true;
                    }
                }
                if ilazro || ilazr2 {
                    // Rotate rows to push the zero of T down and split a 1x1
                    // block with an infinite eigenvalue off the top.
                    for jch in j..il {
                        let (c, s, r) = givens(h[(jch, jch)], h[(jch + 1, jch)]);
                        h[(jch, jch)] = r;
                        h[(jch + 1, jch)] = 0.0;
                        rot_rows(h, jch, jch + 1, jch + 1, last, c, s);
                        rot_rows(t, jch, jch + 1, jch + 1, last, c, s);
                        if ilazr2 {
                            h[(jch, jch - 1)] *= c;
                        }
                        ilazr2 = false;
                        if t[(jch + 1, jch + 1)].abs() >= btol {
                            if jch + 1 >= il {
                                continue 'outer;
                            }
                            ifirst = Some(jch + 1);
                            break;
                        }
                        t[(jch + 1, jch + 1)] = 0.0;
                    }
                    if ifirst.is_none() {
                        clear_trailing_sub(h, t, il);
                        continue 'outer;
                    }
                    break;
                } else {
                    // Chase the zero down to T(ilast, ilast).
                    for jch in j..il {
                        let (c, s, r) = givens(t[(jch, jch + 1)], t[(jch + 1, jch + 1)]);
                        t[(jch, jch + 1)] = r;
                        t[(jch + 1, jch + 1)] = 0.0;
                        if jch + 2 <= last {
                            rot_rows(t, jch, jch + 1, jch + 2, last, c, s);
                        }
                        rot_rows(h, jch, jch + 1, jch - 1, last, c, s);
                        let (c, s, r) = givens(h[(jch + 1, jch)], h[(jch + 1, jch - 1)]);
                        h[(jch + 1, jch)] = r;
                        h[(jch + 1, jch - 1)] = 0.0;
                        rot_cols(h, jch, jch - 1, 0, jch, c, s);
                        if jch >= 1 {
                            rot_cols(t, jch, jch - 1, 0, jch - 1, c, s);
                        }
                    }
                    clear_trailing_sub(h, t, il);
                    continue 'outer;
                }
            } else if ilazro {
                ifirst = Some(j);
                break;
            }
            if j == 0 {
                break;
            }
            j -= 1;
        }
        let Some(ifirst) = ifirst else {
            return Err(QzFailure("internal error: no split point found".into()));
        };

        if ifirst + 1 == il {
            solve_2x2(h, t, ifirst, out);
            ilast -= 2;
            iiter = 0;
            continue;
        }

        iiter += 1;
        double_shift_sweep(h, t, ifirst, il, iiter % 10 == 0);
    }
    Ok(())
}

// T(il, il) = 0: rotate columns to zero H(il, il-1), splitting off an
// infinite eigenvalue at the bottom.
fn clear_trailing_sub(h: &mut DMatrix<f64>, t: &mut DMatrix<f64>, il: usize) {
    let (c, s, r) = givens(h[(il, il)], h[(il, il - 1)]);
    h[(il, il)] = r;
    h[(il, il - 1)] = 0.0;
    rot_cols(h, il, il - 1, 0, il - 1, c, s);
    rot_cols(t, il, il - 1, 0, il - 1, c, s);
}

fn double_shift_sweep(h: &mut DMatrix<f64>, t: &mut DMatrix<f64>, f: usize, l: usize, exceptional: bool) {
    let n = h.nrows();
    let last = n - 1;

    // Sum and product of the shifts from the trailing 2x2 pencil.
    let (sum, prod) = if exceptional {
        let w = (h[(l, l - 1)].abs() + h[(l - 1, l - 2)].abs()) / t[(l, l)].abs();
        let d = 0.75 * w + h[(l, l)] / t[(l, l)];
        (2.0 * d, d * d + 0.4375 * w * w)
    } else {
        let (h00, h01, h10, h11) = (h[(l - 1, l - 1)], h[(l - 1, l)], h[(l, l - 1)], h[(l, l)]);
        let (t00, t01, t11) = (t[(l - 1, l - 1)], t[(l - 1, l)], t[(l, l)]);
        let a = t00 * t11;
        ((h00 * t11 + h11 * t00 - h10 * t01) / a, (h00 * h11 - h01 * h10) / a)
    };

    // First column of the shift polynomial in H·T⁻¹ at the top of the block.
    let (t00, t01, t11) = (t[(f, f)], t[(f, f + 1)], t[(f + 1, f + 1)]);
    let ti00 = 1.0 / t00;
    let ti11 = 1.0 / t11;
    let ti01 = -t01 / (t00 * t11);
    let w00 = h[(f, f)] * ti00;
    let w10 = h[(f + 1, f)] * ti00;
    let w01 = h[(f, f)] * ti01 + h[(f, f + 1)] * ti11;
    let w11 = h[(f + 1, f)] * ti01 + h[(f + 1, f + 1)] * ti11;
    let w21 = h[(f + 2, f + 1)] * ti11;
    let mut x = [
        w00 * w00 + w01 * w10 - sum * w00 + prod,
        w10 * (w00 + w11 - sum),
        w10 * w21,
    ];

    for k in f..l - 1 {
        if k > f {
            x = [h[(k, k - 1)], h[(k + 1, k - 1)], h[(k + 2, k - 1)]];
        }
        if let Some((v, beta)) = house3(x) {
            let c0 = if k > f { k - 1 } else { k };
            reflect_rows(h, k, &v, beta, c0, last);
            reflect_rows(t, k, &v, beta, k, last);
            if k > f {
                h[(k + 1, k - 1)] = 0.0;
                h[(k + 2, k - 1)] = 0.0;
            }
        }
        let rmax = (k + 3).min(l);
        // Zero T(k+2, k..k+1) with a reflector acting on columns k..k+2.
        let r = [t[(k + 2, k)], t[(k + 2, k + 1)], t[(k + 2, k + 2)]];
        if let Some((v, beta)) = house3([r[2], r[1], r[0]]) {
            let v = [v[2], v[1], v[0]];
            reflect_cols(h, k, &v, beta, 0, rmax);
            reflect_cols(t, k, &v, beta, 0, k + 2);
            t[(k + 2, k)] = 0.0;
            t[(k + 2, k + 1)] = 0.0;
        }
        // Zero T(k+1, k).
        let (c, s, rr) = givens(t[(k + 1, k + 1)], t[(k + 1, k)]);
        t[(k + 1, k + 1)] = rr;
        t[(k + 1, k)] = 0.0;
        rot_cols(h, k + 1, k, 0, rmax, c, s);
        rot_cols(t, k + 1, k, 0, k, c, s);
    }

    // Final 2x2 step.
    let (c, s, r) = givens(h[(l - 1, l - 2)], h[(l, l - 2)]);
    h[(l - 1, l - 2)] = r;
    h[(l, l - 2)] = 0.0;
    rot_rows(h, l - 1, l, l - 1, last, c, s);
    rot_rows(t, l - 1, l, l - 1, last, c, s);
    let (c, s, r) = givens(t[(l, l)], t[(l, l - 1)]);
    t[(l, l)] = r;
    t[(l, l - 1)] = 0.0;
    rot_cols(h, l, l - 1, 0, l, c, s);
    rot_cols(t, l, l - 1, 0, l - 1, c, s);
}

// Eigenvalues of the isolated 2x2 block at (k, k+1). T's diagonal is
// nonzero here.
fn solve_2x2(h: &mut DMatrix<f64>, t: &mut DMatrix<f64>, k: usize, out: &mut [GenEig]) {
    let (h00, h01, h10, h11) = (h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
    let (t00, t01, t11) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k + 1)]);
    // det(H − λT) = a λ² − b λ + c
    let a = t00 * t11;
    let b = h00 * t11 + h11 * t00 - h10 * t01;
    let c = h00 * h11 - h01 * h10;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        let beta = a.abs().sqrt();
        let re = b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        out[k] = GenEig { alpha: Complex64::new(re, im) * beta, beta };
        out[k + 1] = GenEig { alpha: Complex64::new(re, -im) * beta, beta };
        return;
    }
    // Real pair: triangularize with one eigenvalue so each gets its own β.
    let q = 0.5 * (b + disc.sqrt().copysign(b));
    let lam = if q != 0.0 { q / a } else { 0.0 };
    let m = [[h00 - lam * t00, h01 - lam * t01], [h10, h11 - lam * t11]];
    let r0 = m[0][0].hypot(m[0][1]);
    let r1 = m[1][0].hypot(m[1][1]);
    let row = if r0 >= r1 { m[0] } else { m[1] };
    // Null vector z = (-row1, row0) becomes the first column of Z.
    let (cz, sz, _) = givens(-row[1], row[0]);
    // Columns (k, k+1) ← [z, z⊥]
    let apply_z = |mm: &mut DMatrix<f64>| {
        for i in k..=k + 1 {
            let (x, y) = (mm[(i, k)], mm[(i, k + 1)]);
            mm[(i, k)] = cz * x + sz * y;
            mm[(i, k + 1)] = -sz * x + cz * y;
        }
    };
    apply_z(h);
    apply_z(t);
    let (c, s, r) = givens(t[(k, k)], t[(k + 1, k)]);
    rot_rows(t, k, k + 1, k + 1, k + 1, c, s);
    t[(k, k)] = r;
    t[(k + 1, k)] = 0.0;
    rot_rows(h, k, k + 1, k, k + 1, c, s);
    h[(k + 1, k)] = 0.0;
    for i in [k, k + 1] {
        let (a, b) = (h[(i, i)], t[(i, i)]);
        out[i] = if b < 0.0 {
            GenEig { alpha: Complex64::new(-a, 0.0), beta: -b }
        } else {
            GenEig { alpha: Complex64::new(a, 0.0), beta: b }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        rand_mat(rng, n).qr().q()
    }

    // Greedy nearest matching; returns the largest distance.
    fn match_sets(mut a: Vec<Complex64>, b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut worst: f64 = 0.0;
        for x in b {
            let (idx, d) = a
                .iter()
                .enumerate()
                .map(|(i, y)| (i, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            worst = worst.max(d / x.norm().max(1.0));
            a.swap_remove(idx);
        }
        worst
    }

    #[test]
    fn matches_standard_eigenproblem() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 3, 5, 8, 13, 30] {
            for _ in 0..5 {
                let a = rand_mat(&mut rng, n);
                let b = rand_mat(&mut rng, n) + DMatrix::identity(n, n) * 3.0;
                let pairs = generalized_eigenvalues(&a, &b).unwrap();
                let (fin, ninf) = split_finite(&pairs, 1e-10);
                assert_eq!(ninf, 0);
                let reference = (b.clone().try_inverse().unwrap() * &a).complex_eigenvalues();
                let err = match_sets(fin, reference.as_slice());
                assert!(err < 1e-9, "n = {n}: {err}");
            }
        }
    }

    #[test]
    fn counts_infinite_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, nz) in [(4, 1), (6, 2), (10, 4), (20, 3)] {
            let q = orthogonal(&mut rng, n);
            let z = orthogonal(&mut rng, n);
            let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let beta: Vec<f64> = (0..n).map(|i| if i < nz { 0.0 } else { rng.gen_range(0.5..2.0) }).collect();
            let a = &q * DMatrix::from_diagonal(&alpha.clone().into()) * z.transpose();
            let b = &q * DMatrix::from_diagonal(&beta.clone().into()) * z.transpose();
            let pairs = generalized_eigenvalues(&a, &b).unwrap();
            let (fin, ninf) = split_finite(&pairs, 1e-10);
            assert_eq!(ninf, nz, "n = {n}");
            let expect: Vec<Complex64> = (nz..n).map(|i| Complex64::new(alpha[i] / beta[i], 0.0)).collect();
            assert!(match_sets(fin, &expect) < 1e-10);
        }
    }

    #[test]
    fn complex_pairs_from_rotation_blocks() {
        // Block-diagonal A with 2x2 rotations, scrambled by orthogonal Q, Z.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let mut a = DMatrix::zeros(n, n);
        let mut expect = Vec::new();
        for k in 0..n / 2 {
            let (re, im) = (-(k as f64) - 0.5, 1.0 + k as f64);
            a[(2 * k, 2 * k)] = re;
            a[(2 * k, 2 * k + 1)] = im;
            a[(2 * k + 1, 2 * k)] = -im;
            a[(2 * k + 1, 2 * k + 1)] = re;
            expect.push(Complex64::new(re, im));
            expect.push(Complex64::new(re, -im));
        }
        let q = orthogonal(&mut rng, n);
        let z = orthogonal(&mut rng, n);
        let pairs = generalized_eigenvalues(&(&q * a * z.transpose()), &(&q * z.transpose())).unwrap();
        let (fin, _) = split_finite(&pairs, 1e-10);
        assert!(match_sets(fin, &expect) < 1e-10);
    }

    #[test]
    fn descriptor_like_pencils() {
        // E = diag(I, 0) with random A: n − k finite eigenvalues equal to
        // those of the Schur complement.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, k) in [(5, 1), (12, 2), (40, 4)] {
            let a = rand_mat(&mut rng, n) + DMatrix::identity(n, n);
            let mut e = DMatrix::identity(n, n);
            for i in n - k..n {
                e[(i, i)] = 0.0;
            }
            let pairs = generalized_eigenvalues(&a, &e).unwrap();
            let (fin, ninf) = split_finite(&pairs, 1e-10);
            assert_eq!(ninf, k);
            let m = n - k;
            let a11 = a.view((0, 0), (m, m));
            let a12 = a.view((0, m), (m, k));
            let a21 = a.view((m, 0), (k, m));
            let a22 = a.view((m, m), (k, k)).clone_owned();
            let schur = a11 - a12 * a22.try_inverse().unwrap() * a21;
            let reference = schur.complex_eigenvalues();
            assert!(match_sets(fin, reference.as_slice()) < 1e-8);
        }
    }

    #[test]
    fn singular_and_zero_pencils() {
        let a = DMatrix::<f64>::zeros(3, 3);
        let b = DMatrix::<f64>::identity(3, 3);
        let pairs = generalized_eigenvalues(&a, &b).unwrap();
        assert!(pairs.iter().all(|p| p.alpha.norm() == 0.0 && p.beta > 0.0));
        let pairs = generalized_eigenvalues(&b, &a).unwrap();
        assert_eq!(split_finite(&pairs, 1e-10).1, 3);
        let mut bad = b.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(generalized_eigenvalues(&bad, &b).is_err());
    }
}
