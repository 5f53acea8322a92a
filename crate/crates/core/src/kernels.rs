//! Kernel evaluation, Gram assembly, median-heuristic bandwidths and
//! rank-revealing Cholesky factors.
//!
//! Point sets are `n × p` matrices with one sample per row.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{lit, Error, Real, Result};

/// Relative pivot threshold used when a Gram matrix is factored.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-9;

/// Max-entry reconstruction bound a factor must meet against its Gram matrix.
pub const TOL_CHOL: f64 = 1e-7;

/// Bandwidth returned by [`median_bandwidth`] when every pairwise distance is zero.
pub const DEGENERATE_BANDWIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    RbfGaussian,
    Linear,
    /// `k(s, s') = 1` iff the category codes agree. Inputs are a single column
    /// of codes; equivalent to the linear kernel on one-hot encodings.
    OneHotDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    /// Only meaningful for [`KernelFamily::RbfGaussian`].
    pub bandwidth: T,
    pub input_dim: usize,
}

impl<T: Real> KernelSpec<T> {
    pub fn rbf(bandwidth: T, input_dim: usize) -> Result<Self> {
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(Error::param("bandwidth", "must be positive and finite"));
        }
        if input_dim == 0 {
            return Err(Error::param("input_dim", "must be positive"));
        }
        Ok(Self {
            family: KernelFamily::RbfGaussian,
            bandwidth,
            input_dim,
        })
    }

    pub fn linear(input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::param("input_dim", "must be positive"));
        }
        Ok(Self {
            family: KernelFamily::Linear,
            bandwidth: T::one(),
            input_dim,
        })
    }

    pub fn one_hot_delta() -> Self {
        Self {
            family: KernelFamily::OneHotDelta,
            bandwidth: T::one(),
            input_dim: 1,
        }
    }

    /// Kernel value between two points given as slices of length `input_dim`.
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        match self.family {
            KernelFamily::RbfGaussian => {
                let mut d2 = T::zero();
                for (&x, &y) in a.iter().zip(b) {
                    let t = x - y;
                    d2 += t * t;
                }
                (-d2 / (lit::<T>(2.0) * self.bandwidth * self.bandwidth)).exp()
            }
            KernelFamily::Linear => {
                let mut s = T::zero();
                for (&x, &y) in a.iter().zip(b) {
                    s += x * y;
                }
                s
            }
            KernelFamily::OneHotDelta => {
                if a[0] == b[0] {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    fn check_points(&self, points: &DMatrix<T>, context: &'static str) -> Result<()> {
        if points.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.input_dim,
                found: points.ncols(),
            });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(context));
        }
        Ok(())
    }
}

/// Samples stored column-wise so that each point is a contiguous slice.
pub(crate) struct PointSet<T: Real> {
    data: DMatrix<T>,
}

impl<T: Real> PointSet<T> {
    pub(crate) fn new(points: &DMatrix<T>) -> Self {
        Self {
            data: points.transpose(),
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.data.ncols()
    }

    #[inline]
    pub(crate) fn point(&self, i: usize) -> &[T] {
        let p = self.data.nrows();
        &self.data.as_slice()[i * p..(i + 1) * p]
    }
}

/// Dense Gram matrix `K_ij = k(x_i, x_j)`.
pub fn gram_matrix<T: Real>(points: &DMatrix<T>, spec: &KernelSpec<T>) -> Result<DMatrix<T>> {
    if points.nrows() == 0 {
        return Err(Error::Empty("gram_matrix points"));
    }
    spec.check_points(points, "gram_matrix")?;
    let set = PointSet::new(points);
    let n = set.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        let pj = set.point(j);
        for i in j..n {
            let v = spec.eval(set.point(i), pj);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Rectangular kernel matrix `K_ij = k(a_i, b_j)`.
pub fn cross_gram<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, spec: &KernelSpec<T>) -> Result<DMatrix<T>> {
    spec.check_points(a, "cross_gram left")?;
    spec.check_points(b, "cross_gram right")?;
    let sa = PointSet::new(a);
    let sb = PointSet::new(b);
    Ok(DMatrix::from_fn(sa.len(), sb.len(), |i, j| {
        spec.eval(sa.point(i), sb.point(j))
    }))
}

// Above this many points the pairwise distances are not materialized.
const MEDIAN_DIRECT_LIMIT: usize = 4096;
const MEDIAN_BUCKETS: usize = 1 << 16;

/// Median of the `n(n-1)/2` pairwise Euclidean distances (median heuristic).
///
/// Falls back to [`DEGENERATE_BANDWIDTH`] when the median distance is zero.
pub fn median_bandwidth<T: Real>(points: &DMatrix<T>) -> Result<T> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::param("points", "median bandwidth needs at least two points"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("median_bandwidth"));
    }
    let pairs = n * (n - 1) / 2;
    // Ranks (0-based) of the middle element(s) of the sorted squared distances.
    let hi_rank = pairs / 2;
    let lo_rank = if pairs % 2 == 0 { hi_rank - 1 } else { hi_rank };

    let (lo, hi) = if n <= MEDIAN_DIRECT_LIMIT {
        let mut d2 = Vec::with_capacity(pairs);
        let mut row = vec![T::zero(); n];
        for j in 0..n {
            let tail = distances_after(points, j, &mut row);
            d2.extend_from_slice(tail);
        }
        select_pair(&mut d2, lo_rank, hi_rank)
    } else {
        median_pair_bucketed(points, lo_rank, hi_rank)
    };
    let median = (lo.sqrt() + hi.sqrt()) / lit::<T>(2.0);
    if median > T::zero() {
        Ok(median)
    } else {
        Ok(lit(DEGENERATE_BANDWIDTH))
    }
}

/// Squared distances from point `j` to points `j+1..n`, written to the front of
/// `out`.
fn distances_after<'a, T: Real>(points: &DMatrix<T>, j: usize, out: &'a mut [T]) -> &'a [T] {
    let n = points.nrows();
    let tail = &mut out[..n - j - 1];
    tail.fill(T::zero());
    for col in points.column_iter() {
        let col = col.as_slice();
        let pj = col[j];
        for (acc, &v) in tail.iter_mut().zip(&col[j + 1..]) {
            let t = v - pj;
            *acc += t * t;
        }
    }
    tail
}

fn select_pair<T: Real>(values: &mut [T], lo_rank: usize, hi_rank: usize) -> (T, T) {
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite distances");
    let (_, &mut hi, _) = values.select_nth_unstable_by(hi_rank, cmp);
    if lo_rank == hi_rank {
        return (hi, hi);
    }
    // Elements left of `hi_rank` are all <= hi; the largest of them is rank lo.
    let lo = values[..hi_rank]
        .iter()
        .copied()
        .fold(None, |m: Option<T>, v| match m {
            Some(m) if m >= v => Some(m),
            _ => Some(v),
        })
        .expect("at least one element below the upper median");
    (lo, hi)
}

/// Two-pass exact selection: histogram of squared distances, then an exact
/// selection among the values falling into the bracketing buckets.
fn median_pair_bucketed<T: Real>(points: &DMatrix<T>, lo_rank: usize, hi_rank: usize) -> (T, T) {
    let n = points.nrows();
    let mut bound = T::zero();
    for c in 0..points.ncols() {
        let col = points.column(c);
        let range = col.max() - col.min();
        bound += range * range;
    }
    if bound <= T::zero() {
        return (T::zero(), T::zero());
    }
    let buckets = MEDIAN_BUCKETS;
    let scale = lit::<T>(buckets as f64) / bound;
    let bucket_of = |d2: T| -> usize {
        let b = crate::to_f64(d2 * scale) as usize;
        b.min(buckets - 1)
    };
    let mut hist = vec![0usize; buckets];
    let mut row = vec![T::zero(); n];
    for j in 0..n {
        for &d2 in distances_after(points, j, &mut row) {
            hist[bucket_of(d2)] += 1;
        }
    }
    let mut cum = 0usize;
    let mut below = 0usize;
    let mut first = None;
    let mut last = 0usize;
    for (b, &count) in hist.iter().enumerate() {
        if first.is_none() && cum + count > lo_rank {
            first = Some(b);
            below = cum;
        }
        cum += count;
        if cum > hi_rank {
            last = b;
            break;
        }
    }
    let first = first.expect("median bucket exists");
    let mut kept = Vec::new();
    for j in 0..n {
        for &d2 in distances_after(points, j, &mut row) {
            let b = bucket_of(d2);
            if b >= first && b <= last {
                kept.push(d2);
            }
        }
    }
    select_pair(&mut kept, lo_rank - below, hi_rank - below)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorSource {
    ExactCholesky,
    RffDirect,
}

/// Full-column-rank factor `L` with `L·Lᵀ ≈ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor<T: Real> {
    pub factor: DMatrix<T>,
    pub source: FactorSource,
}

impl<T: Real> GramFactor<T> {
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn rows(&self) -> usize {
        self.factor.nrows()
    }

    /// `H·L`, the column-centered factor.
    pub fn centered(&self) -> DMatrix<T> {
        center_factor(&self.factor)
    }
}

/// Outcome of a greedy pivoted Cholesky run.
pub(crate) struct PivotedCholesky<T: Real> {
    pub factor: DMatrix<T>,
    pub residual_diag: Vec<T>,
    pub scale: T,
}

/// Greedy (rank-revealing) pivoted Cholesky driven by kernel callbacks, so the
/// Gram matrix never has to be materialized. Rows of the returned factor are in
/// the original sample order.
///
/// Stops once the largest residual diagonal falls to `tol · max diag` or below,
/// or after `max_rank` columns.
pub(crate) fn pivoted_cholesky<T, D, C>(
    n: usize,
    diag: D,
    mut column: C,
    tol: T,
    max_rank: Option<usize>,
) -> Result<PivotedCholesky<T>>
where
    T: Real,
    D: Fn(usize) -> T,
    C: FnMut(usize, &mut [T]),
{
    let mut d: Vec<T> = (0..n).map(&diag).collect();
    let scale = d.iter().fold(T::zero(), |m, &v| if v > m { v } else { m });
    let roundoff = lit::<T>(16.0 * n.max(1) as f64) * T::default_epsilon() * scale;
    if let Some(&neg) = d.iter().find(|&&v| v < -roundoff) {
        return Err(Error::NotPsd(crate::to_f64(neg)));
    }
    let threshold = tol * scale;
    let limit = max_rank.unwrap_or(n).min(n);
    let mut pivoted = vec![false; n];
    let mut cols: Vec<T> = Vec::new();
    let mut buf = vec![T::zero(); n];
    let mut rank = 0;

    while rank < limit {
        let mut best = None;
        let mut best_val = T::zero();
        for (i, &v) in d.iter().enumerate() {
            if !pivoted[i] && (best.is_none() || v > best_val) {
                best = Some(i);
                best_val = v;
            }
        }
        let Some(j) = best else { break };
        if !(best_val > threshold) || best_val <= T::zero() {
            break;
        }
        column(j, &mut buf);
        for m in 0..rank {
            let lm = &cols[m * n..(m + 1) * n];
            let ljm = lm[j];
            if ljm != T::zero() {
                for (b, &l) in buf.iter_mut().zip(lm) {
                    *b -= ljm * l;
                }
            }
        }
        let pivot = best_val.sqrt();
        let inv = T::one() / pivot;
        for b in buf.iter_mut() {
            *b *= inv;
        }
        pivoted[j] = true;
        for (i, &p) in pivoted.iter().enumerate() {
            if p {
                buf[i] = T::zero();
            }
        }
        buf[j] = pivot;
        for (di, &l) in d.iter_mut().zip(buf.iter()) {
            *di -= l * l;
        }
        d[j] = T::zero();
        cols.extend_from_slice(&buf);
        rank += 1;
        if let Some((_, &neg)) = d
            .iter()
            .enumerate()
            .find(|&(i, &v)| !pivoted[i] && v < -(threshold + roundoff))
        {
            return Err(Error::NotPsd(crate::to_f64(neg)));
        }
    }
    Ok(PivotedCholesky {
        factor: DMatrix::from_vec(n, rank, cols),
        residual_diag: d,
        scale,
    })
}

/// Rank-revealing factorization of a dense symmetric PSD matrix.
///
/// Pivots whose residual falls below `tol · max diag` are truncated, so the
/// rank of the result is the numerical rank of `gram`.
pub fn cholesky_factor<T: Real>(gram: &DMatrix<T>, tol: T) -> Result<GramFactor<T>> {
    let n = gram.nrows();
    if n == 0 {
        return Err(Error::Empty("cholesky_factor gram"));
    }
    if gram.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "cholesky_factor (square)",
            expected: n,
            found: gram.ncols(),
        });
    }
    if !(tol > T::zero()) {
        return Err(Error::param("tol", "must be positive"));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cholesky_factor"));
    }
    let max_abs = gram.amax();
    let mut asym = T::zero();
    for j in 0..n {
        for i in (j + 1)..n {
            let a = (gram[(i, j)] - gram[(j, i)]).abs();
            if a > asym {
                asym = a;
            }
        }
    }
    if asym > lit::<T>(1e-9) * max_abs.max(T::one()) {
        return Err(Error::NotSymmetric(crate::to_f64(asym)));
    }

    let run = pivoted_cholesky(
        n,
        |i| gram[(i, i)],
        |j, out: &mut [T]| out.copy_from_slice(gram.column(j).as_slice()),
        tol,
        None,
    )?;

    // A PSD residual satisfies |R_ij| <= sqrt(R_ii R_jj); larger off-diagonal
    // entries expose negative curvature the diagonal pivots never saw.
    let l = &run.factor;
    let recon = l * l.transpose();
    let slack = tol * run.scale + lit::<T>(64.0 * n as f64) * T::default_epsilon() * max_abs.max(T::one());
    let rd = &run.residual_diag;
    for j in 0..n {
        for i in 0..n {
            let r = (gram[(i, j)] - recon[(i, j)]).abs();
            let bound = (rd[i].max(T::zero()) * rd[j].max(T::zero())).sqrt();
            if r > bound + slack {
                return Err(Error::NotPsd(crate::to_f64(-(r - bound))));
            }
        }
    }
    Ok(GramFactor {
        factor: run.factor,
        source: FactorSource::ExactCholesky,
    })
}

/// Factor of the Gram matrix of `points` computed column by column; memory is
/// `O(n · rank)`.
pub fn factor_points<T: Real>(points: &DMatrix<T>, spec: &KernelSpec<T>, tol: T) -> Result<GramFactor<T>> {
    factor_points_capped(points, spec, tol, None)
}

pub fn factor_points_capped<T: Real>(
    points: &DMatrix<T>,
    spec: &KernelSpec<T>,
    tol: T,
    max_rank: Option<usize>,
) -> Result<GramFactor<T>> {
    if points.nrows() == 0 {
        return Err(Error::Empty("factor_points points"));
    }
    if !(tol > T::zero()) {
        return Err(Error::param("tol", "must be positive"));
    }
    spec.check_points(points, "factor_points")?;
    let set = PointSet::new(points);
    let n = set.len();
    let run = pivoted_cholesky(
        n,
        |i| spec.eval(set.point(i), set.point(i)),
        |j, out: &mut [T]| {
            let pj = set.point(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o = spec.eval(set.point(i), pj);
            }
        },
        tol,
        max_rank,
    )?;
    Ok(GramFactor {
        factor: run.factor,
        source: FactorSource::ExactCholesky,
    })
}

/// `H·M` with `H = I - (1/n)·11ᵀ`, computed by subtracting column means.
pub fn center_factor<T: Real>(factor: &DMatrix<T>) -> DMatrix<T> {
    let n = factor.nrows();
    let mut out = factor.clone();
    if n == 0 {
        return out;
    }
    let inv_n = T::one() / lit::<T>(n as f64);
    for mut col in out.column_iter_mut() {
        let mean = col.sum() * inv_n;
        for v in col.iter_mut() {
            *v -= mean;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn identical_points_rbf() {
        let x = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 0.3, -1.0]);
        let k = gram_matrix(&x, &KernelSpec::rbf(0.5, 2).unwrap()).unwrap();
        assert_eq!(k, DMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn unit_distance_rbf() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let k = gram_matrix(&x, &KernelSpec::rbf(1.0, 1).unwrap()).unwrap();
        assert!((k[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(k[(0, 0)], 1.0);
    }

    #[test]
    fn linear_matches_pairwise_dots() {
        let x = random(5, 3, 1);
        let k = gram_matrix(&x, &KernelSpec::linear(3).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = (0..3).map(|c| x[(i, c)] * x[(j, c)]).sum();
                assert!((k[(i, j)] - dot).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn one_hot_delta_is_linear_on_one_hot() {
        let codes = [0.0, 2.0, 1.0, 2.0, 0.0];
        let c = DMatrix::from_column_slice(5, 1, &codes);
        let k = gram_matrix(&c, &KernelSpec::one_hot_delta()).unwrap();
        let oh = DMatrix::from_fn(5, 3, |i, j| if codes[i] as usize == j { 1.0 } else { 0.0 });
        assert_eq!(k, &oh * oh.transpose());
    }

    #[test]
    fn gram_errors() {
        let spec = KernelSpec::rbf(1.0, 2).unwrap();
        assert!(matches!(
            gram_matrix(&DMatrix::zeros(3, 3), &spec),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut x = DMatrix::zeros(3, 2);
        x[(1, 1)] = f64::NAN;
        assert!(matches!(gram_matrix(&x, &spec), Err(Error::NonFinite(_))));
        assert!(KernelSpec::rbf(0.0, 2).is_err());
    }

    #[test]
    fn cross_gram_block_of_gram() {
        let x = random(7, 2, 2);
        let spec = KernelSpec::rbf(0.9, 2).unwrap();
        let k = gram_matrix(&x, &spec).unwrap();
        let c = cross_gram(&x.rows(0, 3).into_owned(), &x, &spec).unwrap();
        assert_eq!(c, k.rows(0, 3).into_owned());
    }

    fn median_oracle(x: &DMatrix<f64>) -> f64 {
        let n = x.nrows();
        let mut d = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                d.push((x.row(i) - x.row(j)).norm());
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = d.len();
        if m % 2 == 1 {
            d[m / 2]
        } else {
            (d[m / 2 - 1] + d[m / 2]) / 2.0
        }
    }

    #[test]
    fn median_examples() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 2.0]);
        assert_eq!(median_bandwidth(&x).unwrap(), 2.0);
        let same = DMatrix::from_element(6, 3, 0.25);
        assert_eq!(median_bandwidth(&same).unwrap(), DEGENERATE_BANDWIDTH);
        assert!(median_bandwidth(&DMatrix::<f64>::zeros(1, 2)).is_err());
        let r = random(50, 3, 3);
        let got = median_bandwidth(&r).unwrap();
        assert!((got - median_oracle(&r)).abs() <= 1e-14 * got);
    }

    #[test]
    fn median_bucketed_path_is_exact() {
        let r = random(MEDIAN_DIRECT_LIMIT + 300, 2, 4);
        let got = median_bandwidth(&r).unwrap();
        assert!((got - median_oracle(&r)).abs() <= 1e-14 * got);
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky_factor(&DMatrix::<f64>::identity(3, 3), 1e-10).unwrap();
        assert_eq!(f.rank(), 3);
        assert_eq!(f.factor, DMatrix::identity(3, 3));
        assert_eq!(f.source, FactorSource::ExactCholesky);
    }

    #[test]
    fn cholesky_rank_one() {
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let g = &v * v.transpose();
        let f = cholesky_factor(&g, 1e-9).unwrap();
        assert_eq!((f.rows(), f.rank()), (2, 1));
        assert!((&f.factor * f.factor.transpose() - &g).amax() < 1e-14);
    }

    #[test]
    fn cholesky_low_rank_round_trip() {
        let a = random(20, 7, 5);
        let g = &a * a.transpose();
        let f = cholesky_factor(&g, 1e-9).unwrap();
        assert_eq!(f.rank(), 7);
        assert!((&f.factor * f.factor.transpose() - &g).amax() <= 1e-8);
    }

    #[test]
    fn cholesky_rejects_bad_input() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_factor(&indefinite, 1e-9), Err(Error::NotPsd(_))));
        let neg_diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(cholesky_factor(&neg_diag, 1e-9), Err(Error::NotPsd(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(cholesky_factor(&asym, 1e-9), Err(Error::NotSymmetric(_))));
        assert!(matches!(cholesky_factor(&indefinite, 1e-9).unwrap_err().kind(), crate::ErrorKind::Numerical));
    }

    #[test]
    fn lazy_factor_matches_dense() {
        let x = random(40, 2, 6);
        let spec = KernelSpec::rbf(0.7, 2).unwrap();
        let k = gram_matrix(&x, &spec).unwrap();
        let lazy = factor_points(&x, &spec, DEFAULT_PIVOT_TOL).unwrap();
        let dense = cholesky_factor(&k, DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(lazy.factor, dense.factor);
        assert!((&lazy.factor * lazy.factor.transpose() - k).amax() <= TOL_CHOL);
    }

    #[test]
    fn capped_rank() {
        let x = random(30, 3, 7);
        let spec = KernelSpec::rbf(0.5, 3).unwrap();
        let f = factor_points_capped(&x, &spec, 1e-12, Some(4)).unwrap();
        assert_eq!(f.rank(), 4);
    }

    #[test]
    fn centering_examples() {
        assert_eq!(center_factor(&DMatrix::from_element(4, 1, 1.0)), DMatrix::zeros(4, 1));
        let c = center_factor(&DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]));
        assert_eq!(c, DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 1.0]));
        let m = random(30, 5, 8);
        let h = DMatrix::<f64>::identity(30, 30) - DMatrix::from_element(30, 30, 1.0 / 30.0);
        assert!((center_factor(&m) - h * &m).amax() < 1e-14);
    }

    #[test]
    fn generic_over_f32() {
        let x = DMatrix::<f32>::from_fn(10, 2, |i, j| (i as f32 * 0.3 + j as f32).sin());
        let spec = KernelSpec::<f32>::rbf(1.0, 2).unwrap();
        let f = factor_points(&x, &spec, 1e-5).unwrap();
        let k = gram_matrix(&x, &spec).unwrap();
        assert!((&f.factor * f.factor.transpose() - k).amax() < 1e-4);
    }
}
