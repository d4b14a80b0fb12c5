//! Eigen-decomposition of Hermitian matrices of the form `M = i A` with `A`
//! real antisymmetric.
//!
//! 1. Householder reflections reduce `A` to antisymmetric tridiagonal form
//!    `A = Q T Qᵀ` (only the lower triangle is touched).
//! 2. The diagonal unitary `D = diag(i^k)` maps `i T` onto the real symmetric
//!    tridiagonal matrix `S` with zero diagonal and off-diagonal `T_{k+1,k}`.
//! 3. Implicit QL with Wilkinson shifts diagonalises `S = Z Λ Zᵀ`.
//! 4. Eigenvectors of `M` are the columns of `Q D Z`.
//!
//! The reduction and the QL recurrences run in the generic precision `R`.
//! `Q` and `Z` are accumulated in `f64`: they are orthogonal with O(1)
//! entries, so rounding them perturbs eigenvectors only at the 1e-16 level,
//! whereas the reduction itself must resolve the matrix norm.

use super::real::Real;
use crate::error::{QtoaError, Result};

/// Eigenpairs of `M = iA`. Eigenvectors are stored column-major
/// (`re[col * n + row]`), unit-normalised, in ascending eigenvalue order.
#[derive(Debug, Clone)]
pub struct SkewEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors_re: Vec<f64>,
    pub vectors_im: Vec<f64>,
    /// Frobenius norm of `A`, a cheap conditioning diagnostic.
    pub norm: f64,
}

impl SkewEigen {
    pub fn vector(&self, col: usize) -> (&[f64], &[f64]) {
        let n = self.n;
        (
            &self.vectors_re[col * n..(col + 1) * n],
            &self.vectors_im[col * n..(col + 1) * n],
        )
    }
}

/// Diagonalise `M = iA` for a row-major `n × n` antisymmetric `A`. Only the
/// strictly lower triangle of `a` is read.
pub fn skew_eigen<R: Real>(mut a: Vec<R>, n: usize) -> Result<SkewEigen> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(SkewEigen {
            n,
            values: vec![],
            vectors_re: vec![],
            vectors_im: vec![],
            norm: 0.0,
        });
    }
    let mut frob = 0.0;
    for i in 0..n {
        for j in 0..i {
            let v = a[i * n + j].as_f64();
            frob += 2.0 * v * v;
        }
    }
    let norm = frob.sqrt();

    // --- 1. Householder reduction (lower triangle only) -------------------
    let mut sub = vec![R::zero(); n]; // sub[k] = T_{k+1,k}
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n);
    let mut u = vec![R::zero(); n];
    let mut p = vec![R::zero(); n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let off = k + 1;
        if m == 1 {
            sub[k] = a[(k + 1) * n + k];
            continue;
        }
        let mut scale = R::zero();
        for i in 0..m {
            scale = scale.max(a[(off + i) * n + k].abs());
        }
        if scale == R::zero() {
            sub[k] = R::zero();
            continue;
        }
        let mut ss = R::zero();
        for i in 0..m {
            let x = a[(off + i) * n + k] / scale;
            u[i] = x;
            ss += x * x;
        }
        let nrm = ss.sqrt();
        let x0 = u[0];
        let alpha = if x0 > R::zero() { -nrm } else { nrm };
        u[0] = x0 - alpha;
        let h = ss - x0 * alpha; // = |u|² / 2
        sub[k] = alpha * scale;
        if h == R::zero() {
            continue;
        }
        // p = B u / h with B the trailing antisymmetric block.
        for v in p.iter_mut().take(m) {
            *v = R::zero();
        }
        for i in 0..m {
            let row = (off + i) * n + off;
            let ui = u[i];
            let mut acc = R::zero();
            for j in 0..i {
                let bij = a[row + j];
                acc += bij * u[j];
                p[j] -= bij * ui;
            }
            p[i] += acc;
        }
        for v in p.iter_mut().take(m) {
            *v /= h;
        }
        // B += u pᵀ − p uᵀ on the lower triangle.
        for i in 0..m {
            let row = (off + i) * n + off;
            let ui = u[i];
            let pi = p[i];
            for j in 0..i {
                a[row + j] += ui * p[j] - pi * u[j];
            }
        }
        reflectors.push((off, u[..m].iter().map(|v| v.as_f64()).collect()));
    }

    // --- 2/3. Symmetric tridiagonal QL on (d = 0, e = sub) ----------------
    let mut d = vec![R::zero(); n];
    let mut e = sub;
    e[n - 1] = R::zero();
    // Z column-major, identity start.
    let mut z = vec![0.0_f64; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(&mut d, &mut e, &mut z, n, norm)?;

    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i].as_f64()).collect();

    // --- 4. Q accumulation (f64) and V = Q D Z -----------------------------
    let mut q = vec![0.0_f64; n * n]; // row-major
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut w = vec![0.0_f64; n];
    for (off, uf) in reflectors.iter().rev() {
        let m = uf.len();
        let hf: f64 = 0.5 * uf.iter().map(|x| x * x).sum::<f64>();
        if hf == 0.0 {
            continue;
        }
        // Trailing block rows/cols off..n: Q_sub <- (I - u uᵀ/h) Q_sub.
        for v in w.iter_mut() {
            *v = 0.0;
        }
        for i in 0..m {
            let row = (off + i) * n;
            let ui = uf[i];
            for j in *off..n {
                w[j] += ui * q[row + j];
            }
        }
        for i in 0..m {
            let row = (off + i) * n;
            let f = uf[i] / hf;
            for j in *off..n {
                q[row + j] -= f * w[j];
            }
        }
    }
    // Split D Z into its real (even k) and imaginary (odd k) rows.
    let mut vre = vec![0.0_f64; n * n];
    let mut vim = vec![0.0_f64; n * n];
    for (col, &src) in order.iter().enumerate() {
        let zc = &z[src * n..(src + 1) * n];
        let (dre, dim) = (
            &mut vre[col * n..(col + 1) * n],
            &mut vim[col * n..(col + 1) * n],
        );
        for (k, &zk) in zc.iter().enumerate() {
            if zk == 0.0 {
                continue;
            }
            // i^k = 1, i, -1, -i
            let (target, sign): (&mut [f64], f64) = match k % 4 {
                0 => (&mut *dre, 1.0),
                1 => (&mut *dim, 1.0),
                2 => (&mut *dre, -1.0),
                _ => (&mut *dim, -1.0),
            };
            let f = sign * zk;
            for j in 0..n {
                target[j] += q[j * n + k] * f;
            }
        }
    }
    Ok(SkewEigen {
        n,
        values,
        vectors_re: vre,
        vectors_im: vim,
        norm,
    })
}

fn hypot<R: Real>(a: R, b: R) -> R {
    let (x, y) = (a.abs(), b.abs());
    let (big, small) = if x > y { (x, y) } else { (y, x) };
    if big == R::zero() {
        return R::zero();
    }
    let r = small / big;
    big * (R::one() + r * r).sqrt()
}

/// Implicit QL with shifts for a symmetric tridiagonal matrix; `e[i]` couples
/// `i` and `i+1`. Rotations are applied to the column-major `z` in `f64`.
fn tql2<R: Real>(d: &mut [R], e: &mut [R], z: &mut [f64], n: usize, norm: f64) -> Result<()> {
    let eps = R::of(2.0 * R::UNIT_ROUNDOFF);
    let mut f = R::zero();
    let mut tst1 = R::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 80 {
                    return Err(QtoaError::EigensolverFailed {
                        index: l,
                        iterations: iter,
                        norm,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (R::of(2.0) * e[l]);
                let mut r = hypot(p, R::one());
                if p < R::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = R::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = R::zero();
                let mut s2 = R::zero();
                let mut i = m;
                while i > l {
                    i -= 1;
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (cf, sf) = (c.as_f64(), s.as_f64());
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let zi = &mut left[i * n..(i + 1) * n];
                    let zi1 = &mut right[..n];
                    for k in 0..n {
                        let hk = zi1[k];
                        zi1[k] = sf * zi[k] + cf * hk;
                        zi[k] = cf * zi[k] - sf * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = R::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real::DoubleDouble;

    fn random_skew(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = next();
                a[i * n + j] = v;
                a[j * n + i] = -v;
            }
        }
        a
    }

    fn residual(a: &[f64], n: usize, eig: &SkewEigen) -> f64 {
        // |(iA) v - λ v|_∞ over all pairs.
        let mut worst: f64 = 0.0;
        for c in 0..n {
            let (vr, vi) = eig.vector(c);
            let lam = eig.values[c];
            for r in 0..n {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..n {
                    // i A (vr + i vi) = -A vi + i A vr
                    re -= a[r * n + k] * vi[k];
                    im += a[r * n + k] * vr[k];
                }
                worst = worst.max((re - lam * vr[r]).abs()).max((im - lam * vi[r]).abs());
            }
        }
        worst
    }

    #[test]
    fn small_random_matrices() {
        for n in [1, 2, 3, 4, 7, 16, 33] {
            let a = random_skew(n, n as u64 + 3);
            let eig = skew_eigen(a.clone(), n).unwrap();
            assert!(residual(&a, n, &eig) < 1e-12, "n={n}");
            // ± pairing of the spectrum.
            for k in 0..n {
                assert!((eig.values[k] + eig.values[n - 1 - k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn double_double_path_agrees() {
        let n = 24;
        let a = random_skew(n, 11);
        let e64 = skew_eigen(a.clone(), n).unwrap();
        let add: Vec<DoubleDouble> = a.iter().map(|&v| DoubleDouble::of(v)).collect();
        let edd = skew_eigen(add, n).unwrap();
        for k in 0..n {
            assert!((e64.values[k] - edd.values[k]).abs() < 1e-13);
        }
        assert!(residual(&a, n, &edd) < 1e-12);
    }
}
