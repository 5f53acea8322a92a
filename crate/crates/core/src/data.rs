//! Datasets: the synthetic Gaussian toy, CSV ingestion, preprocessing and splits.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dependence::JointSampler;
use crate::{Error, Result};

/// Threshold on `|U_i|` for the toy target bits.
pub const TOY_THRESHOLD: f64 = 0.6744;

/// Scale of the additive noise on the toy inputs.
pub const TOY_NOISE: f64 = 0.005;

pub const TOY_DIM: usize = 4;

pub const TOY_CLASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FeatureKind {
    Continuous,
    Categorical { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Attribute {
    Continuous {
        values: DMatrix<f64>,
        names: Vec<String>,
    },
    Categorical {
        codes: Vec<usize>,
        labels: Vec<String>,
        name: String,
    },
}

impl Attribute {
    pub fn len(&self) -> usize {
        match self {
            Attribute::Continuous { values, .. } => values.nrows(),
            Attribute::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Attribute::Categorical { .. })
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            Attribute::Categorical { labels, .. } => Some(labels.len()),
            Attribute::Continuous { .. } => None,
        }
    }

    pub fn codes(&self) -> Option<&[usize]> {
        match self {
            Attribute::Categorical { codes, .. } => Some(codes),
            Attribute::Continuous { .. } => None,
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self {
            Attribute::Continuous { names, .. } => names.clone(),
            Attribute::Categorical { name, .. } => vec![name.clone()],
        }
    }

    /// Kernel inputs: the values themselves, or a single column of codes.
    pub fn kernel_points(&self) -> DMatrix<f64> {
        match self {
            Attribute::Continuous { values, .. } => values.clone(),
            Attribute::Categorical { codes, .. } => DMatrix::from_iterator(codes.len(), 1, codes.iter().map(|&c| c as f64)),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Attribute {
        match self {
            Attribute::Continuous { values, names } => Attribute::Continuous {
                values: values.select_rows(idx),
                names: names.clone(),
            },
            Attribute::Categorical { codes, labels, name } => Attribute::Categorical {
                codes: idx.iter().map(|&i| codes[i]).collect(),
                labels: labels.clone(),
                name: name.clone(),
            },
        }
    }

    fn validate(&self, role: &'static str, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                context: role,
                expected: n,
                found: self.len(),
            });
        }
        match self {
            Attribute::Continuous { values, names } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(role));
                }
                if names.len() != values.ncols() {
                    return Err(Error::DimensionMismatch {
                        context: role,
                        expected: values.ncols(),
                        found: names.len(),
                    });
                }
            }
            Attribute::Categorical { codes, labels, .. } => {
                if let Some(&c) = codes.iter().find(|&&c| c >= labels.len()) {
                    return Err(Error::param(role, format!("category code {c} outside 0..{}", labels.len())));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub x_names: Vec<String>,
    /// One entry per column of `x`; categorical columns hold codes.
    pub feature_meta: Vec<FeatureKind>,
    pub y: Attribute,
    pub s: Attribute,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, x_names: Vec<String>, feature_meta: Vec<FeatureKind>, y: Attribute, s: Attribute) -> Result<Self> {
        let ds = Self {
            x,
            x_names,
            feature_meta,
            y,
            s,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.nrows();
        let p = self.x.ncols();
        for (ctx, len) in [("x names", self.x_names.len()), ("feature meta", self.feature_meta.len())] {
            if len != p {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: p,
                    found: len,
                });
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x"));
        }
        for (j, meta) in self.feature_meta.iter().enumerate() {
            if let FeatureKind::Categorical { labels } = meta {
                let k = labels.len() as f64;
                if self.x.column(j).iter().any(|&v| v < 0.0 || v >= k || v.fract() != 0.0) {
                    return Err(Error::param("x", format!("column `{}` holds an invalid category code", self.x_names[j])));
                }
            }
        }
        self.y.validate("y", n)?;
        self.s.validate("s", n)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            x_names: self.x_names.clone(),
            feature_meta: self.feature_meta.clone(),
            y: self.y.select(idx),
            s: self.s.select(idx),
        }
    }
}

/// One toy draw: `U, N ~ N(0, I₄)` in that order from the stream.
fn toy_row(rng: &mut ChaCha20Rng) -> ([f64; TOY_DIM], [f64; TOY_DIM]) {
    let mut u = [0.0; TOY_DIM];
    let mut noise = [0.0; TOY_DIM];
    for v in u.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for v in noise.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    (u, noise)
}

fn toy_features(u: &[f64; TOY_DIM], noise: &[f64; TOY_DIM]) -> ([f64; TOY_DIM], [f64; TOY_DIM], usize) {
    let a = std::f64::consts::PI / 6.0;
    let mut x = [0.0; TOY_DIM];
    for j in 0..TOY_DIM {
        x[j] = (a * u[j]).cos() + TOY_NOISE * noise[j];
    }
    let s = [(a * u[0]).sin(), (a * u[1]).sin(), (a * u[2]).cos(), (a * u[3]).cos()];
    let mut code = 0;
    for (i, &ui) in u.iter().enumerate() {
        if ui.abs() > TOY_THRESHOLD {
            code |= 1 << i;
        }
    }
    (x, s, code)
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Synthetic Gaussian dataset.
///
/// `X = cos(πU/6) + 0.005 N`, `S = [sin(πU₁/6), sin(πU₂/6), cos(πU₃/6),
/// cos(πU₄/6)]` and `Y = Σ 2^{i-1} 1{|U_i| > 0.6744}` (bit 1 least significant),
/// with standard normals drawn by the ChaCha20 generator (Ziggurat method).
pub fn gen_gaussian_toy(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, TOY_DIM);
    let mut s = DMatrix::zeros(n, TOY_DIM);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let (u, noise) = toy_row(&mut rng);
        let (xi, si, code) = toy_features(&u, &noise);
        for j in 0..TOY_DIM {
            x[(i, j)] = xi[j];
            s[(i, j)] = si[j];
        }
        y.push(code);
    }
    Dataset::new(
        x,
        names("x", TOY_DIM),
        vec![FeatureKind::Continuous; TOY_DIM],
        Attribute::Categorical {
            codes: y,
            labels: (0..TOY_CLASSES).map(|c| c.to_string()).collect(),
            name: "y".into(),
        },
        Attribute::Continuous {
            values: s,
            names: names("s", TOY_DIM),
        },
    )
}

/// Draws `(X, S)` pairs from the toy distribution.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToySampler;

impl JointSampler for ToySampler {
    fn sample(&mut self, n: usize, rng: &mut ChaCha20Rng) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut x = DMatrix::zeros(n, TOY_DIM);
        let mut s = DMatrix::zeros(n, TOY_DIM);
        for i in 0..n {
            let (u, noise) = toy_row(rng);
            let (xi, si, _) = toy_features(&u, &noise);
            for j in 0..TOY_DIM {
                x[(i, j)] = xi[j];
                s[(i, j)] = si[j];
            }
        }
        (x, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    X,
    Y,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub role: Role,
    #[serde(rename = "type")]
    pub kind: ColumnType,
}

/// `{column: {role, type}}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: BTreeMap<String, ColumnSpec>,
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: format!("{}:{}", path.display(), e.path()),
            reason: e.inner().to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Schema describing the columns written by [`save_csv`].
    pub fn for_dataset(ds: &Dataset) -> Self {
        let mut columns = BTreeMap::new();
        for (name, meta) in ds.x_names.iter().zip(&ds.feature_meta) {
            let kind = match meta {
                FeatureKind::Continuous => ColumnType::Continuous,
                FeatureKind::Categorical { .. } => ColumnType::Categorical,
            };
            columns.insert(name.clone(), ColumnSpec { role: Role::X, kind });
        }
        for (role, attr) in [(Role::Y, &ds.y), (Role::S, &ds.s)] {
            let kind = if attr.is_categorical() {
                ColumnType::Categorical
            } else {
                ColumnType::Continuous
            };
            for name in attr.column_names() {
                columns.insert(name, ColumnSpec { role, kind });
            }
        }
        Self { columns }
    }
}

enum Column {
    Continuous(Vec<f64>),
    Categorical { codes: Vec<usize>, labels: Vec<String> },
}

/// Reads a headed, comma-separated file. Categorical columns are
/// dictionary-encoded in order of first appearance; columns absent from the
/// schema are ignored.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::Format(format!("{}: empty file", path.display())));
    }
    let header_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    for name in schema.columns.keys() {
        if !header_names.contains(name) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.clone(),
            });
        }
    }
    let used: Vec<(usize, String, ColumnSpec)> = header_names
        .iter()
        .enumerate()
        .filter_map(|(i, h)| schema.columns.get(h).map(|c| (i, h.clone(), c.clone())))
        .collect();
    for h in header_names.iter().filter(|h| !schema.columns.contains_key(*h)) {
        log::warn!("{}: column `{h}` is not in the schema and is ignored", path.display());
    }

    let mut columns: Vec<Column> = used
        .iter()
        .map(|(_, _, spec)| match spec.kind {
            ColumnType::Continuous => Column::Continuous(Vec::new()),
            ColumnType::Categorical => Column::Categorical {
                codes: Vec::new(),
                labels: Vec::new(),
            },
        })
        .collect();
    let mut dictionaries: Vec<HashMap<String, usize>> = vec![HashMap::new(); used.len()];
    let mut n = 0;
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        for (k, (col_idx, name, _)) in used.iter().enumerate() {
            let cell = record.get(*col_idx).ok_or_else(|| Error::Cell {
                path: path.to_path_buf(),
                row,
                column: name.clone(),
                reason: "missing cell".into(),
            })?;
            let cell = cell.trim();
            match &mut columns[k] {
                Column::Continuous(values) => {
                    let v: f64 = cell.parse().map_err(|_| Error::Cell {
                        path: path.to_path_buf(),
                        row,
                        column: name.clone(),
                        reason: format!("`{cell}` is not a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Cell {
                            path: path.to_path_buf(),
                            row,
                            column: name.clone(),
                            reason: "non-finite value".into(),
                        });
                    }
                    values.push(v);
                }
                Column::Categorical { codes, labels } => {
                    let dict = &mut dictionaries[k];
                    let code = *dict.entry(cell.to_string()).or_insert_with(|| {
                        labels.push(cell.to_string());
                        labels.len() - 1
                    });
                    codes.push(code);
                }
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Format(format!("{}: no data rows", path.display())));
    }

    let mut x_cols = Vec::new();
    let mut x_names = Vec::new();
    let mut meta = Vec::new();
    let mut y_parts = Vec::new();
    let mut s_parts = Vec::new();
    for ((_, name, spec), col) in used.into_iter().zip(columns) {
        match spec.role {
            Role::X => {
                match col {
                    Column::Continuous(v) => {
                        x_cols.push(v);
                        meta.push(FeatureKind::Continuous);
                    }
                    Column::Categorical { codes, labels } => {
                        x_cols.push(codes.into_iter().map(|c| c as f64).collect());
                        meta.push(FeatureKind::Categorical { labels });
                    }
                }
                x_names.push(name);
            }
            Role::Y => y_parts.push((name, col)),
            Role::S => s_parts.push((name, col)),
        }
    }
    if x_cols.is_empty() {
        return Err(Error::param("schema", "no column has role x"));
    }
    let x = DMatrix::from_fn(n, x_cols.len(), |i, j| x_cols[j][i]);
    let y = assemble_attribute("y", n, y_parts)?;
    let s = assemble_attribute("s", n, s_parts)?;
    Dataset::new(x, x_names, meta, y, s)
}

/// Several continuous columns stack into a matrix; several categorical columns
/// combine into one joint category whose labels join the parts with `|`.
fn assemble_attribute(role: &'static str, n: usize, parts: Vec<(String, Column)>) -> Result<Attribute> {
    if parts.is_empty() {
        return Err(Error::param("schema", format!("no column has role {role}")));
    }
    let all_cont = parts.iter().all(|(_, c)| matches!(c, Column::Continuous(_)));
    let all_cat = parts.iter().all(|(_, c)| matches!(c, Column::Categorical { .. }));
    if all_cont {
        let names = parts.iter().map(|(n, _)| n.clone()).collect();
        let cols: Vec<Vec<f64>> = parts
            .into_iter()
            .map(|(_, c)| match c {
                Column::Continuous(v) => v,
                Column::Categorical { .. } => unreachable!(),
            })
            .collect();
        return Ok(Attribute::Continuous {
            values: DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]),
            names,
        });
    }
    if !all_cat {
        return Err(Error::param(
            "schema",
            format!("columns with role {role} mix categorical and continuous types"),
        ));
    }
    if parts.len() == 1 {
        let (name, col) = parts.into_iter().next().unwrap();
        let Column::Categorical { codes, labels } = col else { unreachable!() };
        return Ok(Attribute::Categorical { codes, labels, name });
    }
    let name = parts.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join("|");
    let mut dict: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut codes = Vec::with_capacity(n);
    for i in 0..n {
        let key = parts
            .iter()
            .map(|(_, c)| match c {
                Column::Categorical { codes, labels } => labels[codes[i]].as_str(),
                Column::Continuous(_) => unreachable!(),
            })
            .collect::<Vec<_>>()
            .join("|");
        let code = *dict.entry(key.clone()).or_insert_with(|| {
            labels.push(key);
            labels.len() - 1
        });
        codes.push(code);
    }
    Ok(Attribute::Categorical { codes, labels, name })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `x`, then `y`, then `s` columns. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> = ds.x_names.clone();
    header.extend(ds.y.column_names());
    header.extend(ds.s.column_names());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        row.clear();
        for (j, meta) in ds.feature_meta.iter().enumerate() {
            let v = ds.x[(i, j)];
            row.push(match meta {
                FeatureKind::Continuous => format_float(v),
                FeatureKind::Categorical { labels } => labels[v as usize].clone(),
            });
        }
        for attr in [&ds.y, &ds.s] {
            match attr {
                Attribute::Continuous { values, .. } => {
                    row.extend(values.row(i).iter().map(|&v| format_float(v)));
                }
                Attribute::Categorical { codes, labels, .. } => row.push(labels[codes[i]].clone()),
            }
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn format_float(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalePolicy {
    #[default]
    MaxDivide,
    None,
}

/// Column scaling and one-hot expansion learned on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub policy: ScalePolicy,
    /// Per input column; `1.0` for categorical columns and zero maxima.
    pub divisors: Vec<f64>,
    pub feature_meta: Vec<FeatureKind>,
    pub x_names: Vec<String>,
}

impl Preprocessor {
    /// Learns divisors from the maximum absolute value of each continuous column.
    pub fn fit(train: &Dataset, policy: ScalePolicy) -> Self {
        let divisors = train
            .feature_meta
            .iter()
            .enumerate()
            .map(|(j, meta)| match (meta, policy) {
                (FeatureKind::Continuous, ScalePolicy::MaxDivide) => {
                    let m = train.x.column(j).amax();
                    if m > 0.0 {
                        m
                    } else {
                        log::warn!("column `{}` has zero maximum; left unscaled", train.x_names[j]);
                        1.0
                    }
                }
                _ => 1.0,
            })
            .collect();
        Self {
            policy,
            divisors,
            feature_meta: train.feature_meta.clone(),
            x_names: train.x_names.clone(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.divisors.len()
    }

    /// Width of the transformed feature matrix.
    pub fn output_dim(&self) -> usize {
        self.feature_meta
            .iter()
            .map(|m| match m {
                FeatureKind::Continuous => 1,
                FeatureKind::Categorical { labels } => labels.len(),
            })
            .sum()
    }

    pub fn transform_x(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "preprocess input columns",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let mut out = DMatrix::zeros(x.nrows(), self.output_dim());
        let mut c = 0;
        for (j, meta) in self.feature_meta.iter().enumerate() {
            match meta {
                FeatureKind::Continuous => {
                    let d = self.divisors[j];
                    for i in 0..x.nrows() {
                        out[(i, c)] = x[(i, j)] / d;
                    }
                    c += 1;
                }
                FeatureKind::Categorical { labels } => {
                    for i in 0..x.nrows() {
                        let code = x[(i, j)] as usize;
                        if code < labels.len() {
                            out[(i, c + code)] = 1.0;
                        }
                    }
                    c += labels.len();
                }
            }
        }
        Ok(out)
    }

    /// Continuous features after scaling and one-hot expansion.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        let x = self.transform_x(&ds.x)?;
        let mut names = Vec::with_capacity(x.ncols());
        for (name, meta) in ds.x_names.iter().zip(&self.feature_meta) {
            match meta {
                FeatureKind::Continuous => names.push(name.clone()),
                FeatureKind::Categorical { labels } => {
                    names.extend(labels.iter().map(|l| format!("{name}={l}")));
                }
            }
        }
        let width = x.ncols();
        Dataset::new(x, names, vec![FeatureKind::Continuous; width], ds.y.clone(), ds.s.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    /// Train, validation and test fractions.
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            fractions: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(Error::param("fractions", "each fraction must be positive"));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("fractions", format!("sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Sizes `round(f₀ n)`, `round(f₁ n)` and the remainder.
    pub fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        self.validate()?;
        let a = (self.fractions[0] * n as f64).round() as usize;
        let b = (self.fractions[1] * n as f64).round() as usize;
        if a + b >= n || a == 0 || b == 0 {
            return Err(Error::param("fractions", format!("a split would be empty for n = {n}")));
        }
        Ok([a, b, n - a - b])
    }

    /// Seeded shuffle followed by a contiguous partition.
    pub fn indices(&self, n: usize) -> Result<[Vec<usize>; 3]> {
        let [a, b, _] = self.sizes(n)?;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha20Rng::seed_from_u64(self.seed));
        let test = idx.split_off(a + b);
        let val = idx.split_off(a);
        Ok([idx, val, test])
    }
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let [a, b, c] = spec.indices(ds.len())?;
    Ok((ds.select(&a), ds.select(&b), ds.select(&c)))
}
