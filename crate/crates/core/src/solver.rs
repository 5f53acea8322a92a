//! Generalized eigenproblem for the optimal encoder, optimal dimensionality and
//! the fitted encoder model.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::config::{KernelConfig, ResolvedKernels};
use crate::data::Dataset;
use crate::kernels::{center_factor, cross_gram, factor_points, GramFactor, KernelSpec};
use crate::rff::RffProjection;
use crate::{lit, Error, Real, Result};

/// Largest admissible trade-off weight.
pub const LAMBDA_MAX: f64 = 1.0 - 1e-6;

/// Rows encoded per block in [`EncoderModel::encode`].
const ENCODE_BLOCK: usize = 2048;

/// `B u = τ C u` with `B = (1-λ) Lᵀ_X H K_Y H L_X − λ Lᵀ_X H K_S H L_X` and
/// `C = (1/n) Lᵀ_X H L_X + γ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPencil<T: Real> {
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub lambda: T,
    pub gamma: T,
    pub n: usize,
    /// Upper-triangular `R` with `C = Rᵀ R`; the Cholesky factor of `c` is used
    /// when absent.
    pub c_root: Option<DMatrix<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<T: Real> {
    /// Sorted descending.
    pub eigenvalues: DVector<T>,
    /// Column `j` pairs with `eigenvalues[j]`; `Uᵀ C U = I`.
    pub eigenvectors: DMatrix<T>,
}

fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

/// λ-independent pieces of the pencil for one training set.
///
/// `B(λ) = (1-λ) G_Y − λ G_S` with `G_Y = P_Y P_Yᵀ`, `P_Y = (H L_X)ᵀ L_Y`, so a
/// sweep rebuilds `B` in `O(d²)` per λ.
#[derive(Debug, Clone)]
pub struct PencilBlocks<T: Real> {
    pub g_y: DMatrix<T>,
    pub g_s: DMatrix<T>,
    /// `(1/n) (H L_X)ᵀ (H L_X)`, without the γ shift.
    pub cov_x: DMatrix<T>,
    /// Triangular QR factor of `H L_X / √n`.
    pub root_x: DMatrix<T>,
    pub n: usize,
}

impl<T: Real> PencilBlocks<T> {
    pub fn new(factor_x: &GramFactor<T>, factor_y: &GramFactor<T>, factor_s: &GramFactor<T>) -> Result<Self> {
        let n = factor_x.rows();
        if n == 0 {
            return Err(Error::Empty("pencil factors"));
        }
        for (ctx, rows) in [("build_pencil factor_y rows", factor_y.rows()), ("build_pencil factor_s rows", factor_s.rows())] {
            if rows != n {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    found: rows,
                });
            }
        }
        let hx = center_factor(&factor_x.factor);
        let hxt = hx.transpose();
        let p_y = &hxt * &factor_y.factor;
        let p_s = &hxt * &factor_s.factor;
        let g_y = symmetrize(&(&p_y * p_y.transpose()));
        let g_s = symmetrize(&(&p_s * p_s.transpose()));
        let scaled = hx / lit::<T>(n as f64).sqrt();
        let cov_x = symmetrize(&(scaled.transpose() * &scaled));
        let root_x = scaled.qr().r();
        Ok(Self {
            g_y,
            g_s,
            cov_x,
            root_x,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.cov_x.nrows()
    }

    pub fn pencil(&self, lambda: T, gamma: T) -> Result<EigenPencil<T>> {
        check_lambda_gamma(lambda, gamma)?;
        let b = &self.g_y * (T::one() - lambda) - &self.g_s * lambda;
        let d = self.dim();
        let mut c = self.cov_x.clone();
        for i in 0..d {
            c[(i, i)] += gamma;
        }
        let m = self.root_x.nrows();
        let mut stacked = DMatrix::zeros(m + d, d);
        stacked.rows_mut(0, m).copy_from(&self.root_x);
        stacked.rows_mut(m, d).fill_diagonal(gamma.sqrt());
        let mut root = stacked.qr().r();
        for (i, mut row) in root.row_iter_mut().enumerate() {
            if row[i] < T::zero() {
                row.neg_mut();
            }
        }
        Ok(EigenPencil {
            b,
            c,
            lambda,
            gamma,
            n: self.n,
            c_root: Some(root),
        })
    }
}

fn check_lambda_gamma<T: Real>(lambda: T, gamma: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(Error::param("lambda", format!("{} is outside [0, 1)", crate::to_f64(lambda))));
    }
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::param("gamma", "must be positive and finite"));
    }
    Ok(())
}

/// Assembles the pencil from `d × q` intermediate products only.
pub fn build_pencil<T: Real>(
    factor_x: &GramFactor<T>,
    factor_y: &GramFactor<T>,
    factor_s: &GramFactor<T>,
    lambda: T,
    gamma: T,
) -> Result<EigenPencil<T>> {
    check_lambda_gamma(lambda, gamma)?;
    PencilBlocks::new(factor_x, factor_y, factor_s)?.pencil(lambda, gamma)
}

/// Solves `B u = τ C u` through the Cholesky factor `C = L Lᵀ` and the standard
/// symmetric problem on `L⁻¹ B L⁻ᵀ`.
///
/// Eigenvectors get a deterministic sign: the entry of largest magnitude (first
/// on ties) is positive.
pub fn solve_pencil<T: Real>(pencil: &EigenPencil<T>) -> Result<EigenSolution<T>> {
    let d = pencil.c.nrows();
    if pencil.c.ncols() != d || pencil.b.nrows() != d || pencil.b.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "solve_pencil operators",
            expected: d,
            found: pencil.b.nrows(),
        });
    }
    if pencil.b.iter().chain(pencil.c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solve_pencil"));
    }
    if d == 0 {
        return Ok(EigenSolution {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let l = match &pencil.c_root {
        Some(r) if r.shape() == (d, d) => r.transpose(),
        Some(_) => {
            return Err(Error::DimensionMismatch {
                context: "solve_pencil metric root",
                expected: d,
                found: pencil.c_root.as_ref().map_or(0, |r| r.nrows()),
            })
        }
        None => pencil.c.clone().cholesky().ok_or(Error::SingularMetric)?.l(),
    };
    if (0..d).any(|i| !(l[(i, i)] > T::zero())) {
        return Err(Error::SingularMetric);
    }
    let max_c = (0..d).map(|i| pencil.c[(i, i)]).fold(T::zero(), |m, v| m.max(v));
    let min_l = (0..d).map(|i| l[(i, i)]).fold(T::max_value().unwrap(), |m, v| m.min(v));
    if min_l * min_l <= lit::<T>(16.0 * d as f64) * T::default_epsilon() * max_c {
        return Err(Error::SingularMetric);
    }
    let lb = l.solve_lower_triangular(&pencil.b).ok_or(Error::SingularMetric)?;
    let a = l.solve_lower_triangular(&lb.transpose()).ok_or(Error::SingularMetric)?;
    let eig = SymmetricEigen::new(symmetrize(&a));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut v = DMatrix::zeros(d, d);
    for (c, &k) in order.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(k));
    }
    let mut u = l.transpose().solve_upper_triangular(&v).ok_or(Error::SingularMetric)?;
    for mut col in u.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < T::zero() {
            col.neg_mut();
        }
    }
    Ok(EigenSolution {
        eigenvalues: values,
        eigenvectors: u,
    })
}

/// Sign tolerance used by [`optimal_dim`].
pub fn eig_tolerance<T: Real>(eigenvalues: &DVector<T>) -> T {
    let top = eigenvalues.iter().next().map(|v| v.abs()).unwrap_or(T::zero());
    lit::<T>(1e-9) * top.max(T::one())
}

/// Number of eigenvalues at or above `-1e-9 · max(1, |τ₁|)`.
pub fn optimal_dim<T: Real>(eigenvalues: &DVector<T>) -> usize {
    let tol = eig_tolerance(eigenvalues);
    eigenvalues.iter().take_while(|&&v| v >= -tol).count()
}

/// Relative eigen residual `‖B u − τ C u‖ / ((‖B‖ + |τ| ‖C‖) ‖u‖)` of pair `j`,
/// with spectral norms bounded by Frobenius norms.
pub fn eigen_residual<T: Real>(pencil: &EigenPencil<T>, sol: &EigenSolution<T>, j: usize) -> T {
    let u = sol.eigenvectors.column(j);
    let tau = sol.eigenvalues[j];
    let r = &pencil.b * u - (&pencil.c * u) * tau;
    let scale = (pencil.b.norm() + tau.abs() * pencil.c.norm()) * u.norm();
    if scale > T::zero() {
        r.norm() / scale
    } else {
        r.norm()
    }
}

/// How the encoder evaluates `k_X` on new points.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelContext<T: Real> {
    Exact {
        spec: KernelSpec<T>,
        train_points: DMatrix<T>,
    },
    Rff {
        projection: RffProjection<T>,
    },
}

impl<T: Real> KernelContext<T> {
    pub fn input_dim(&self) -> usize {
        match self {
            KernelContext::Exact { spec, .. } => spec.input_dim,
            KernelContext::Rff { projection } => projection.input_dim(),
        }
    }

    /// Number of coefficient columns of Θ (`n` for exact, `d` for RFF).
    pub fn width(&self) -> usize {
        match self {
            KernelContext::Exact { train_points, .. } => train_points.nrows(),
            KernelContext::Rff { projection } => projection.num_features(),
        }
    }

    /// Kernel vectors `[k(x, x_1), …]` (exact) or features `r(x)` (RFF), one row per point.
    pub fn features(&self, points: &DMatrix<T>) -> Result<DMatrix<T>> {
        match self {
            KernelContext::Exact { spec, train_points } => cross_gram(points, train_points, spec),
            KernelContext::Rff { projection } => projection.feature_matrix(points),
        }
    }

    /// Gram factor of the training points under this context.
    pub fn factor(&self, points: &DMatrix<T>, tol: T) -> Result<GramFactor<T>> {
        match self {
            KernelContext::Exact { spec, .. } => factor_points(points, spec, tol),
            KernelContext::Rff { projection } => projection.factor(points),
        }
    }
}

/// Trained encoder `f(x) = Θ φ(x)`, where `φ` is the kernel vector against the
/// training points or the random-feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T: Real> {
    pub(crate) theta: DMatrix<T>,
    pub(crate) kernel_ctx: KernelContext<T>,
    pub(crate) lambda: T,
    pub(crate) gamma: T,
    pub(crate) eigenvalues: DVector<T>,
    pub(crate) objective: T,
    pub(crate) n_train: usize,
}

impl<T: Real> EncoderModel<T> {
    /// Assembles a model from stored parts, checking shapes.
    pub fn from_parts(
        theta: DMatrix<T>,
        kernel_ctx: KernelContext<T>,
        lambda: T,
        gamma: T,
        eigenvalues: DVector<T>,
        objective: T,
        n_train: usize,
    ) -> Result<Self> {
        if theta.ncols() != kernel_ctx.width() {
            return Err(Error::DimensionMismatch {
                context: "encoder theta columns",
                expected: kernel_ctx.width(),
                found: theta.ncols(),
            });
        }
        if theta.nrows() > eigenvalues.len() {
            return Err(Error::param("r", "exceeds the number of eigenvalues"));
        }
        check_lambda_gamma(lambda, gamma)?;
        Ok(Self {
            theta,
            kernel_ctx,
            lambda,
            gamma,
            eigenvalues,
            objective,
            n_train,
        })
    }

    pub fn theta(&self) -> &DMatrix<T> {
        &self.theta
    }

    pub fn kernel_ctx(&self) -> &KernelContext<T> {
        &self.kernel_ctx
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn r(&self) -> usize {
        self.theta.nrows()
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// `J^emp = (1/n²) Σ_{j≤r} τ_j` for the unscaled pencil.
    pub fn objective(&self) -> T {
        self.objective
    }

    /// `Σ_{j≤r} τ_j`.
    pub fn eigen_sum(&self) -> T {
        self.eigenvalues.rows(0, self.r()).sum()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn input_dim(&self) -> usize {
        self.kernel_ctx.input_dim()
    }

    /// Embeds points, one output row per input row.
    pub fn encode(&self, points: &DMatrix<T>) -> Result<DMatrix<T>> {
        if points.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "encode points (model input dim)",
                expected: self.input_dim(),
                found: points.ncols(),
            });
        }
        let m = points.nrows();
        let r = self.r();
        let mut out = DMatrix::zeros(m, r);
        if r == 0 {
            return Ok(out);
        }
        let theta_t = self.theta.transpose();
        let mut start = 0;
        while start < m {
            let len = ENCODE_BLOCK.min(m - start);
            let block = points.rows(start, len).into_owned();
            let feats = self.kernel_ctx.features(&block)?;
            out.rows_mut(start, len).copy_from(&(feats * &theta_t));
            start += len;
        }
        Ok(out)
    }
}

impl crate::dependence::Embedding for EncoderModel<f64> {
    fn embed(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.encode(x)
    }
}

/// Factors and cached pencil blocks for one training set; fits for many
/// `(λ, γ)` pairs reuse them.
#[derive(Debug, Clone)]
pub struct FitContext<T: Real> {
    pub kernel_ctx: KernelContext<T>,
    pub factor_x: GramFactor<T>,
    pub factor_y: GramFactor<T>,
    pub factor_s: GramFactor<T>,
    pub blocks: PencilBlocks<T>,
    // Θ = U_rᵀ R⁻¹ Qᵀ from the thin QR of L_X (exact path only).
    qr: Option<(DMatrix<T>, DMatrix<T>)>,
}

/// A fitted encoder together with the spectral data it came from.
#[derive(Debug, Clone)]
pub struct Fit<T: Real> {
    pub model: EncoderModel<T>,
    pub pencil: EigenPencil<T>,
    pub solution: EigenSolution<T>,
}

impl<T: Real> FitContext<T> {
    pub fn new(kernel_ctx: KernelContext<T>, factor_x: GramFactor<T>, factor_y: GramFactor<T>, factor_s: GramFactor<T>) -> Result<Self> {
        let blocks = PencilBlocks::new(&factor_x, &factor_y, &factor_s)?;
        let qr = match &kernel_ctx {
            KernelContext::Exact { train_points, .. } => {
                if train_points.nrows() != factor_x.rows() {
                    return Err(Error::DimensionMismatch {
                        context: "fit context training points",
                        expected: factor_x.rows(),
                        found: train_points.nrows(),
                    });
                }
                let qr = factor_x.factor.clone().qr();
                Some((qr.q(), qr.r()))
            }
            KernelContext::Rff { projection } => {
                if projection.num_features() != factor_x.rank() {
                    return Err(Error::DimensionMismatch {
                        context: "fit context rff width",
                        expected: projection.num_features(),
                        found: factor_x.rank(),
                    });
                }
                None
            }
        };
        Ok(Self {
            kernel_ctx,
            factor_x,
            factor_y,
            factor_s,
            blocks,
            qr,
        })
    }

    pub fn n(&self) -> usize {
        self.blocks.n
    }

    pub fn dim(&self) -> usize {
        self.blocks.dim()
    }

    /// Solves the pencil at `(λ, γ)` and keeps the leading `r` eigenvectors
    /// (`r^Opt` when `r` is `None`).
    pub fn fit(&self, lambda: T, gamma: T, r: Option<usize>) -> Result<Fit<T>> {
        let pencil = self.blocks.pencil(lambda, gamma)?;
        let solution = solve_pencil(&pencil)?;
        let d = solution.eigenvalues.len();
        let r = match r {
            Some(r) if r > d => {
                return Err(Error::param("r", format!("{r} exceeds the factor rank {d}")));
            }
            Some(r) => r,
            None => optimal_dim(&solution.eigenvalues),
        };
        let u_r = solution.eigenvectors.columns(0, r).into_owned();
        let theta = match &self.qr {
            Some((q, rr)) => {
                // (U_rᵀ R⁻¹)ᵀ = R⁻ᵀ U_r.
                let m = rr
                    .transpose()
                    .solve_lower_triangular(&u_r)
                    .ok_or(Error::SingularMetric)?;
                m.transpose() * q.transpose()
            }
            None => u_r.transpose(),
        };
        let n = lit::<T>(self.n() as f64);
        let objective = solution.eigenvalues.rows(0, r).sum() / (n * n);
        let model = EncoderModel {
            theta,
            kernel_ctx: self.kernel_ctx.clone(),
            lambda,
            gamma,
            eigenvalues: solution.eigenvalues.clone(),
            objective,
            n_train: self.n(),
        };
        Ok(Fit {
            model,
            pencil,
            solution,
        })
    }

    /// `Θ L_X` for a model fitted on this context.
    pub fn theta_lx(&self, model: &EncoderModel<T>) -> DMatrix<T> {
        match self.kernel_ctx {
            KernelContext::Exact { .. } => &model.theta * &self.factor_x.factor,
            KernelContext::Rff { .. } => model.theta.clone(),
        }
    }

    /// Max-entry deviation of `Θ L_X C L_Xᵀ Θᵀ` from `I_r`, evaluated as
    /// `(1/n) (H L_X U)ᵀ (H L_X U) + γ Uᵀ U` with `U = (Θ L_X)ᵀ`.
    pub fn constraint_residual(&self, model: &EncoderModel<T>) -> T {
        let u = self.theta_lx(model).transpose();
        let w = crate::kernels::center_factor(&self.factor_x.factor) * &u;
        let n = lit::<T>(self.factor_x.rows() as f64);
        let g = (w.transpose() * &w) / n + u.transpose() * &u * model.gamma;
        let r = g.nrows();
        (g - DMatrix::<T>::identity(r, r)).amax()
    }
}

/// Builds the fit context for the training data of `dataset` under `cfg`.
pub fn fit_context(dataset: &Dataset, cfg: &KernelConfig) -> Result<FitContext<f64>> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    fit_context_with(dataset, cfg, &cfg.resolve(dataset)?)
}

/// As [`fit_context`] with kernels already resolved.
pub fn fit_context_with(dataset: &Dataset, cfg: &KernelConfig, kernels: &ResolvedKernels) -> Result<FitContext<f64>> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let x = &dataset.x;
    let kernel_ctx = match &cfg.rff {
        Some(rff) => KernelContext::Rff {
            projection: crate::rff::sample_projection(x.ncols(), rff.dim, kernels.x.bandwidth, rff.seed)?,
        },
        None => KernelContext::Exact {
            spec: kernels.x.clone(),
            train_points: x.clone(),
        },
    };
    let factor_x = kernel_ctx.factor(x, cfg.pivot_tol)?;
    let factor_y = factor_points(&dataset.y.kernel_points(), &kernels.y, cfg.pivot_tol)?;
    let factor_s = factor_points(&dataset.s.kernel_points(), &kernels.s, cfg.pivot_tol)?;
    FitContext::new(kernel_ctx, factor_x, factor_y, factor_s)
}

/// Fits the optimal encoder on the whole of `dataset`.
pub fn fit_encoder(dataset: &Dataset, cfg: &KernelConfig, lambda: f64, gamma: f64, r: Option<usize>) -> Result<EncoderModel<f64>> {
    check_lambda_gamma(lambda, gamma)?;
    Ok(fit_context(dataset, cfg)?.fit(lambda, gamma, r)?.model)
}
