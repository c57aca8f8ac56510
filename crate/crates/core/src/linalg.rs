//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a base seed and a stream label.
pub fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn hermiticity_residual(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    hermiticity_residual(a) <= tol * a.norm().max(1.0)
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMat::identity(n, n)).norm()
}

/// Real inner product `Re tr(A^dagger B)`.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Stacks real and imaginary parts of a complex matrix into one real vector.
pub fn realify(a: &CMat) -> RVec {
    let n = a.len();
    let mut v = RVec::zeros(2 * n);
    for (k, z) in a.iter().enumerate() {
        v[k] = z.re;
        v[n + k] = z.im;
    }
    v
}

pub fn unrealify(v: &[f64], rows: usize, cols: usize) -> CMat {
    let n = rows * cols;
    CMat::from_fn(rows, cols, |i, j| {
        let k = j * rows + i;
        C64::new(v[k], v[n + k])
    })
}

fn pad_rows(m: &RMat) -> RMat {
    if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        let mut p = RMat::zeros(m.ncols(), m.ncols());
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    }
}

fn threshold(sv: &RVec, rel: f64, abs: f64) -> f64 {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    (rel * smax).max(abs)
}

/// Numerical rank with singular values below `max(rel * sigma_max, abs)` dropped.
pub fn rank(m: &RMat, rel: f64, abs: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let t = threshold(&sv, rel, abs);
    sv.iter().filter(|&&s| s > t).count()
}

/// Orthonormal basis of the column space.
pub fn column_space(m: &RMat, rel: f64, abs: f64) -> RMat {
    if m.ncols() == 0 {
        return RMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let t = threshold(&svd.singular_values, rel, abs);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > t)
        .collect();
    select_columns(&u, &keep)
}

/// Orthonormal basis of the kernel.
pub fn null_space(m: &RMat, rel: f64, abs: f64) -> RMat {
    let n = m.ncols();
    if n == 0 {
        return RMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return RMat::identity(n, n);
    }
    let padded = pad_rows(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let t = threshold(&svd.singular_values, rel, abs);
    let keep: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= t).collect();
    let mut out = RMat::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &vt.row(k).transpose());
    }
    out
}

pub fn select_columns<T: nalgebra::Scalar>(m: &DMatrix<T>, cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])].clone())
}

/// Orthonormal completion: columns spanning the orthogonal complement of `b`
/// (assumed orthonormal).
pub fn complement(b: &RMat) -> RMat {
    let n = b.nrows();
    let k = b.ncols();
    let target = n - k;
    let mut out: Vec<RVec> = Vec::with_capacity(target);
    // Visit coordinate axes in order of how much of them lies outside span(b).
    let mut weight: Vec<(usize, f64)> = (0..n)
        .map(|i| (i, 1.0 - b.row(i).norm_squared()))
        .collect();
    weight.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    // Prefer well-separated axes; relax the cutoff only if the first pass falls short.
    let mut used = vec![false; n];
    for cutoff in [0.5, 0.1, 1e-3, 1e-6] {
        for &(i, _) in &weight {
            if out.len() == target {
                break;
            }
            if used[i] {
                continue;
            }
            let mut v = RVec::zeros(n);
            v[i] = 1.0;
            for _ in 0..3 {
                if k > 0 {
                    let proj = b.tr_mul(&v);
                    v -= b * proj;
                }
                for q in &out {
                    let d = q.dot(&v);
                    v.axpy(-d, q, 1.0);
                }
            }
            let nv = v.norm();
            if nv > cutoff {
                used[i] = true;
                out.push(v / nv);
            }
        }
    }
    assert_eq!(out.len(), target, "orthonormal completion failed");
    if out.is_empty() {
        RMat::zeros(n, 0)
    } else {
        RMat::from_columns(&out)
    }
}

/// Cosines of the principal angles between two orthonormal bases, descending.
pub fn principal_cosines(a: &RMat, b: &RMat) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let m = a.tr_mul(b);
    let mut sv: Vec<f64> = m.singular_values().iter().map(|s| s.min(1.0)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Orthonormal basis of `span(a) ∩ span(b)`; both inputs orthonormal.
pub fn intersect(a: &RMat, b: &RMat, tol: f64) -> RMat {
    if a.ncols() == 0 || b.ncols() == 0 {
        return RMat::zeros(a.nrows(), 0);
    }
    let m = a.tr_mul(b);
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1.0 - tol)
        .collect();
    let x = a * select_columns(&u, &keep);
    orthonormalize_columns(&x)
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass; drops
/// near-dependent columns.
pub fn orthonormalize_columns(m: &RMat) -> RMat {
    let mut gs = GramSchmidt::new(m.nrows());
    for j in 0..m.ncols() {
        gs.push(&m.column(j).into_owned(), 1e-10);
    }
    gs.matrix()
}

/// Incremental orthonormal basis of real vectors.
#[derive(Clone, Debug)]
pub struct GramSchmidt {
    dim: usize,
    pub vectors: Vec<RVec>,
}

impl GramSchmidt {
    pub fn new(dim: usize) -> Self {
        GramSchmidt { dim, vectors: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Component of `v` orthogonal to the current span.
    pub fn residual(&self, v: &RVec) -> RVec {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.vectors {
                let d = q.dot(&r);
                r.axpy(-d, q, 1.0);
            }
        }
        r
    }

    /// Adds `v` if its residual exceeds `tol * max(|v|, 1)`. Returns whether it
    /// was added.
    pub fn push(&mut self, v: &RVec, tol: f64) -> bool {
        let r = self.residual(v);
        let nr = r.norm();
        if nr > tol * v.norm().max(1.0) && nr > 0.0 {
            self.vectors.push(r / nr);
            true
        } else {
            false
        }
    }

    pub fn matrix(&self) -> RMat {
        if self.vectors.is_empty() {
            RMat::zeros(self.dim, 0)
        } else {
            RMat::from_columns(&self.vectors)
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = select_columns(&eig.eigenvectors, &order);
    (vals, vecs)
}

/// Symmetric real eigen-decomposition, ascending.
pub fn eigh_real(a: &RMat) -> (Vec<f64>, RMat) {
    let s = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = select_columns(&eig.eigenvectors, &order);
    (vals, vecs)
}

/// Groups sorted values into runs separated by gaps larger than `gap`.
/// Returns the runs and the smallest gap that separated two runs.
pub fn cluster_sorted(vals: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=vals.len() {
        if k == vals.len() || vals[k] - vals[k - 1] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

pub fn gaussian_vec<R: Rng>(n: usize, r: &mut R) -> RVec {
    RVec::from_fn(n, |_, _| r.sample(StandardNormal))
}

pub fn random_hermitian<R: Rng>(n: usize, r: &mut R) -> CMat {
    let g = ginibre(n, r);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

pub fn ginibre<R: Rng>(n: usize, r: &mut R) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        C64::new(r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal))
            * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary via QR with phase correction.
pub fn haar_unitary<R: Rng>(n: usize, r: &mut R) -> CMat {
    let qr = ginibre(n, r).qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        let d = rr[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

/// Skew-symmetric real matrix -> Hermitian complex matrix `iA`.
pub fn skew_to_hermitian(a: &RMat) -> CMat {
    a.map(|x| C64::new(0.0, x))
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = RMat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_space(&m, 1e-9, 1e-14);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
        assert!((k.transpose() * &k - RMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = orthonormalize_columns(&RMat::from_row_slice(4, 2, &[1., 0., 1., 1., 0., 1., 0., 0.]));
        let q = complement(&b);
        assert_eq!(q.ncols(), 2);
        assert!((b.transpose() * &q).norm() < 1e-12);
        assert!((q.transpose() * &q - RMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn intersection_of_planes() {
        let e = RMat::identity(3, 3);
        let a = e.columns(0, 2).into_owned();
        let b = e.columns(1, 2).into_owned();
        let x = intersect(&a, &b, 1e-8);
        assert_eq!(x.ncols(), 1);
        assert!((x[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_is_unitary() {
        let mut r = rng(3);
        let u = haar_unitary(5, &mut r);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn clusters() {
        let runs = cluster_sorted(&[0.0, 1e-9, 1.0, 2.0, 2.0], 1e-6);
        assert_eq!(runs, vec![0..2, 2..3, 3..5]);
    }

    #[test]
    fn realify_round_trip() {
        let mut r = rng(1);
        let a = ginibre(3, &mut r);
        let v = realify(&a);
        assert!((unrealify(v.as_slice(), 3, 3) - &a).norm() < 1e-15);
        let b = ginibre(3, &mut r);
        assert!((realify(&b).dot(&v) - real_inner(&a, &b)).abs() < 1e-12);
    }
}
