//! Dependence measures between an embedding and a semantic attribute.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::kernels::{center_factor, factor_points, median_bandwidth, GramFactor, KernelSpec, PointSet};
use crate::{lit, Error, Real, Result};

/// Default ridge for the regularized kernel canonical correlation.
pub const DEFAULT_KCC_REG: f64 = 1e-3;

/// Relative pivot threshold for the low-rank factors used by KCC.
pub const KCC_FACTOR_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub dep_zs: f64,
    pub dep_zy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hsic_zs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kcc_zs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dpv: Option<f64>,
}

fn check_rows(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

fn inv_n2<T: Real>(n: usize) -> T {
    let n = lit::<T>(n as f64);
    T::one() / (n * n)
}

/// `(1/n²) ‖Θ K_X H L_S‖²_F`.
pub fn dep_emp<T: Real>(theta: &DMatrix<T>, gram_x: &DMatrix<T>, factor_s: &GramFactor<T>) -> Result<T> {
    let n = gram_x.nrows();
    check_rows("dep_emp gram_x (square)", n, gram_x.ncols())?;
    check_rows("dep_emp theta columns", n, theta.ncols())?;
    check_rows("dep_emp factor_s rows", n, factor_s.rows())?;
    if n == 0 {
        return Err(Error::Empty("dep_emp"));
    }
    let hs = center_factor(&factor_s.factor);
    let m = theta * (gram_x * hs);
    Ok(m.norm_squared() * inv_n2::<T>(n))
}

/// `(1/n²) ‖Θ_w L_Xᵀ H L_S‖²_F` without forming any `n × n` matrix.
pub fn dep_emp_rff<T: Real>(theta_w: &DMatrix<T>, factor_x: &GramFactor<T>, factor_s: &GramFactor<T>) -> Result<T> {
    let n = factor_x.rows();
    check_rows("dep_emp_rff factor_s rows", n, factor_s.rows())?;
    check_rows("dep_emp_rff theta_w columns", factor_x.rank(), theta_w.ncols())?;
    if n == 0 {
        return Err(Error::Empty("dep_emp_rff"));
    }
    let hs = center_factor(&factor_s.factor);
    let m = theta_w * (factor_x.factor.transpose() * hs);
    Ok(m.norm_squared() * inv_n2::<T>(n))
}

/// `(1/n²) ‖Zᵀ H L_S‖²_F` for an embedding with one sample per row.
///
/// Equals [`dep_emp`] when `Zᵀ = Θ K_X`.
pub fn dep_from_embedding<T: Real>(z: &DMatrix<T>, factor_s: &GramFactor<T>) -> Result<T> {
    let n = z.nrows();
    check_rows("dep_from_embedding factor_s rows", n, factor_s.rows())?;
    if n == 0 {
        return Err(Error::Empty("dep_from_embedding"));
    }
    if z.ncols() == 0 {
        return Ok(T::zero());
    }
    let m = z.transpose() * center_factor(&factor_s.factor);
    Ok(m.norm_squared() * inv_n2::<T>(n))
}

/// `(1/n²) Σ_ij k_S(s_i, s_j) ⟨z̃_i, z̃_j⟩` with `z̃` the centered embedding.
///
/// Same value as [`dep_from_embedding`] on an exact factor of `K_S`, computed
/// in `O(n²)` time and `O(n)` memory.
pub fn dep_from_embedding_kernel<T: Real>(z: &DMatrix<T>, s: &DMatrix<T>, spec_s: &KernelSpec<T>) -> Result<T> {
    let n = z.nrows();
    check_rows("dep_from_embedding_kernel s rows", n, s.nrows())?;
    check_rows("dep_from_embedding_kernel s columns", spec_s.input_dim, s.ncols())?;
    if n == 0 {
        return Err(Error::Empty("dep_from_embedding_kernel"));
    }
    if z.ncols() == 0 {
        return Ok(T::zero());
    }
    let zc = PointSet::new(&center_factor(z));
    let sp = PointSet::new(s);
    let mut total = T::zero();
    for i in 0..n {
        let zi = zc.point(i);
        let si = sp.point(i);
        let mut row = T::zero();
        for j in 0..i {
            let mut dot = T::zero();
            for (&a, &b) in zi.iter().zip(zc.point(j)) {
                dot += a * b;
            }
            row += spec_s.eval(si, sp.point(j)) * dot;
        }
        let mut self_dot = T::zero();
        for &a in zi {
            self_dot += a * a;
        }
        total += lit::<T>(2.0) * row + spec_s.eval(si, si) * self_dot;
    }
    Ok((total * inv_n2::<T>(n)).max(T::zero()))
}

/// Biased empirical HSIC `(1/n²) Tr[K_A H K_B H]`.
pub fn hsic_emp<T: Real>(gram_a: &DMatrix<T>, gram_b: &DMatrix<T>) -> Result<T> {
    let n = gram_a.nrows();
    check_rows("hsic_emp gram_a (square)", n, gram_a.ncols())?;
    check_rows("hsic_emp gram_b rows", n, gram_b.nrows())?;
    check_rows("hsic_emp gram_b columns", n, gram_b.ncols())?;
    if n == 0 {
        return Err(Error::Empty("hsic_emp"));
    }
    // H K_A H, then the trace of a product of symmetric matrices is an
    // elementwise dot.
    let ac = center_factor(&center_factor(gram_a).transpose());
    Ok(ac.dot(gram_b) * inv_n2::<T>(n))
}

/// Attribute side of the KCC computation, reusable across many embeddings
/// evaluated against the same attribute sample.
#[derive(Debug, Clone)]
pub struct KccSide<T: Real> {
    /// `U_s · diag(σ²/(σ² + c))` from the thin SVD of the centered factor.
    weighted_basis: DMatrix<T>,
    shift: T,
}

impl<T: Real> KccSide<T> {
    /// `centered` is `H L` for a factor `L` of the attribute Gram matrix, `reg`
    /// the per-sample ridge (the shift is `c = n · reg`).
    pub fn new(centered: &DMatrix<T>, reg: T) -> Result<Self> {
        if !(reg > T::zero()) {
            return Err(Error::param("reg", "must be positive"));
        }
        let n = centered.nrows();
        if n == 0 {
            return Err(Error::Empty("kcc attribute sample"));
        }
        let shift = lit::<T>(n as f64) * reg;
        let q = centered.ncols();
        if q == 0 {
            return Ok(Self {
                weighted_basis: DMatrix::zeros(n, 0),
                shift,
            });
        }
        let gram = centered.transpose() * centered;
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().fold(T::zero(), |m, &v| m.max(v));
        let floor = top * lit::<T>(1e-12);
        let keep: Vec<usize> = (0..q).filter(|&k| eig.eigenvalues[k] > floor && eig.eigenvalues[k] > T::zero()).collect();
        let mut v = DMatrix::zeros(q, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let s2 = eig.eigenvalues[k];
            // U_s D_s = G V diag(σ / (σ² + c)).
            let w = s2.sqrt() / (s2 + shift);
            v.set_column(c, &(eig.eigenvectors.column(k) * w));
        }
        Ok(Self {
            weighted_basis: centered * v,
            shift,
        })
    }

    pub fn rows(&self) -> usize {
        self.weighted_basis.nrows()
    }

    /// KCC against an embedding side given by its centered factor `H L_Z`.
    pub fn kcc(&self, centered_z: &DMatrix<T>) -> Result<T> {
        check_rows("kcc factor rows", self.rows(), centered_z.nrows())?;
        if centered_z.ncols() == 0 || self.weighted_basis.ncols() == 0 {
            return Ok(T::zero());
        }
        let c = self.shift;
        let mut a = centered_z.transpose() * centered_z;
        for i in 0..a.nrows() {
            a[(i, i)] += c;
        }
        let chol = a.cholesky().ok_or(Error::SingularMetric)?;
        let p = centered_z.transpose() * &self.weighted_basis;
        let y = chol.solve(&p);
        let mut m = y.transpose() * &p - (y.transpose() * &y) * c;
        m = (&m + m.transpose()) * lit::<T>(0.5);
        let top = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v));
        Ok(top.sqrt().min(T::one()).max(T::zero()))
    }
}

/// Centered low-rank factor of an RBF Gram matrix with median bandwidth, as
/// used by the KCC estimator.
pub fn kcc_factor<T: Real>(points: &DMatrix<T>) -> Result<DMatrix<T>> {
    if points.ncols() == 0 {
        return Ok(DMatrix::zeros(points.nrows(), 0));
    }
    let bw = median_bandwidth(points)?;
    let spec = KernelSpec::rbf(bw, points.ncols())?;
    kcc_factor_with(points, &spec)
}

pub fn kcc_factor_with<T: Real>(points: &DMatrix<T>, spec: &KernelSpec<T>) -> Result<DMatrix<T>> {
    let f = factor_points(points, spec, lit(KCC_FACTOR_TOL))?;
    Ok(center_factor(&f.factor))
}

/// Regularized kernel canonical correlation `‖R_Z R_S‖₂` with
/// `R = K̃(K̃ + n·reg·I)⁻¹` and `K̃ = H K H`, clamped to `[0, 1]`.
pub fn kcc_emp<T: Real>(
    z: &DMatrix<T>,
    s: &DMatrix<T>,
    spec_z: &KernelSpec<T>,
    spec_s: &KernelSpec<T>,
    reg: T,
) -> Result<T> {
    let n = z.nrows();
    check_rows("kcc_emp s rows", n, s.nrows())?;
    if n < 3 {
        return Err(Error::param("z", "kcc needs at least three samples"));
    }
    if !(reg > T::zero()) {
        return Err(Error::param("reg", "must be positive"));
    }
    if z.ncols() == 0 {
        return Ok(T::zero());
    }
    let side = KccSide::new(&kcc_factor_with(s, spec_s)?, reg)?;
    side.kcc(&kcc_factor_with(z, spec_z)?)
}

/// Demographic parity violation of hard predictions.
///
/// For each predicted class `y`, `p(y | s)` is estimated per group and its
/// variance taken with uniform weight over groups; classes are then averaged
/// with weights `P̂[Ŷ = y]`. With `num_groups` given, every group in
/// `0..num_groups` must occur; otherwise the groups present are used.
pub fn dpv(predictions: &[usize], groups: &[usize], num_groups: Option<usize>) -> Result<f64> {
    check_rows("dpv groups", predictions.len(), groups.len())?;
    if predictions.is_empty() {
        return Err(Error::Empty("dpv"));
    }
    let mut table: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut group_size: BTreeMap<usize, usize> = BTreeMap::new();
    let mut class_count: BTreeMap<usize, usize> = BTreeMap::new();
    for (&p, &g) in predictions.iter().zip(groups) {
        *table.entry(p).or_default().entry(g).or_default() += 1;
        *group_size.entry(g).or_default() += 1;
        *class_count.entry(p).or_default() += 1;
    }
    if let Some(k) = num_groups {
        if let Some(missing) = (0..k).find(|g| !group_size.contains_key(g)) {
            return Err(Error::param("groups", format!("group {missing} has no samples")));
        }
        if let Some(&extra) = group_size.keys().find(|&&g| g >= k) {
            return Err(Error::param("groups", format!("group code {extra} out of range 0..{k}")));
        }
    }
    let n = predictions.len() as f64;
    let num_g = group_size.len() as f64;
    let mut total = 0.0;
    for (class, by_group) in &table {
        let probs: Vec<f64> = group_size
            .iter()
            .map(|(g, &size)| *by_group.get(g).unwrap_or(&0) as f64 / size as f64)
            .collect();
        let mean = probs.iter().sum::<f64>() / num_g;
        let var = probs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / num_g;
        total += class_count[class] as f64 / n * var;
    }
    Ok(total)
}

/// Something that maps raw inputs to an embedding, one sample per row.
pub trait Embedding {
    fn embed(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>>;
}

/// Source of i.i.d. `(X, S)` pairs.
pub trait JointSampler {
    fn sample(&mut self, n: usize, rng: &mut ChaCha20Rng) -> (DMatrix<f64>, DMatrix<f64>);
}

/// Number of cyclic shifts used to form independent pairs in [`dep_population_mc`].
pub const MC_SHIFTS: usize = 1024;

/// Monte-Carlo estimate of the population dependence
/// `Σ_j E[f_j f_j′ k] + E[f_j]² E[k] − 2 E[f_j] E[f_j(X) k(S, S′)]`, where
/// primes denote an independent copy and `k = k_S(S, S′)`.
///
/// Independent copies are formed by pairing sample `i` with `i + t (mod n)`
/// for `t = 1..=MC_SHIFTS`.
pub fn dep_population_mc<E: Embedding, S: JointSampler>(
    encoder: &E,
    sampler: &mut S,
    spec_s: &KernelSpec<f64>,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    if n_mc <= MC_SHIFTS {
        return Err(Error::param("n_mc", format!("must exceed {MC_SHIFTS}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (x, s) = sampler.sample(n_mc, &mut rng);
    let f = encoder.embed(&x)?;
    check_rows("dep_population_mc embedding rows", n_mc, f.nrows())?;
    check_rows("dep_population_mc s columns", spec_s.input_dim, s.ncols())?;
    let r = f.ncols();
    if r == 0 {
        return Ok(0.0);
    }
    let sp = PointSet::new(&s);
    let fp = PointSet::new(&f);
    let mean_f: Vec<f64> = (0..r).map(|j| f.column(j).mean()).collect();
    let pairs = (n_mc * MC_SHIFTS) as f64;
    let mut e_ffk = 0.0;
    let mut e_k = 0.0;
    let mut e_fk = vec![0.0; r];
    for t in 1..=MC_SHIFTS {
        for i in 0..n_mc {
            let i2 = (i + t) % n_mc;
            let k = spec_s.eval(sp.point(i), sp.point(i2));
            let fi = fp.point(i);
            let fi2 = fp.point(i2);
            let mut ff = 0.0;
            for j in 0..r {
                ff += fi[j] * fi2[j];
                e_fk[j] += fi[j] * k;
            }
            e_ffk += ff * k;
            e_k += k;
        }
    }
    e_ffk /= pairs;
    e_k /= pairs;
    let mut dep = e_ffk;
    for j in 0..r {
        dep += mean_f[j] * mean_f[j] * e_k - 2.0 * mean_f[j] * (e_fk[j] / pairs);
    }
    Ok(dep.max(0.0))
}
