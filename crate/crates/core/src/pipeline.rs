//! End-to-end commands: toy generation, λ sweeps and model evaluation.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{digest, DatasetSource, ResolvedKernels, RunConfig, SplitName};
use crate::data::{self, Attribute, Dataset, FeatureKind, Preprocessor, Schema};
use crate::dependence::DependenceReport;
use crate::kernels::KernelSpec;
use crate::model_io::{ModelContext, ModelDocument};
use crate::solver::{fit_context_with, KernelContext};
use crate::tradeoff::{self, evaluate_full, plot_data, EvalSettings, EvalSplit, Panel, SweepSettings, Task, TradeoffCurve};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema path written next to a generated CSV: `toy.csv` → `toy.schema.json`.
pub fn schema_path_for(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    csv.with_file_name(format!("{stem}.schema.json"))
}

/// Writes the toy dataset and its schema; returns the schema path.
pub fn gen_toy(n: usize, seed: u64, out: &Path) -> Result<PathBuf> {
    let ds = data::gen_gaussian_toy(n, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    data::save_csv(&ds, out)?;
    let schema_path = schema_path_for(out);
    Schema::for_dataset(&ds).save(&schema_path)?;
    Ok(schema_path)
}

/// Bytes of every value in the dataset, for hashing.
pub fn dataset_fingerprint(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    for v in ds.x.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for attr in [&ds.y, &ds.s] {
        match attr {
            Attribute::Continuous { values, .. } => {
                for v in values.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Attribute::Categorical { codes, labels, .. } => {
                for c in codes {
                    out.extend_from_slice(labels[*c].as_bytes());
                    out.push(0);
                }
            }
        }
    }
    out
}

pub fn load_source(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Toy { n, seed } => data::gen_gaussian_toy(*n, *seed),
        DatasetSource::Csv { path, schema } => data::load_csv(path, &Schema::load(schema)?),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_digest: String,
    pub dataset_digest: String,
    pub config: RunConfig,
    pub split_sizes: [usize; 3],
    pub lambdas: Vec<f64>,
    /// Seconds per stage.
    pub wall_times: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

pub struct SweepOutputs {
    pub curve: TradeoffCurve,
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

fn write_file(dir: &Path, rel: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    files.push(rel.to_string());
    Ok(())
}

fn labels_of(attr: &Attribute) -> Option<Vec<String>> {
    match attr {
        Attribute::Categorical { labels, .. } => Some(labels.clone()),
        Attribute::Continuous { .. } => None,
    }
}

/// Runs data → kernels → solver → trade-off and writes all artifacts under the
/// configured output directory.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutputs> {
    cfg.validate()?;
    let mut times = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, times: &mut BTreeMap<String, f64>| {
        times.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let raw = load_source(&cfg.dataset)?;
    let dataset_digest = digest(&[&dataset_fingerprint(&raw)]);
    let config_digest = digest(&[cfg.canonical_json().as_bytes(), dataset_digest.as_bytes()]);
    let [i_train, i_val, i_test] = cfg.split.indices(raw.len())?;
    let raw_splits = [raw.select(&i_train), raw.select(&i_val), raw.select(&i_test)];
    let pre = Preprocessor::fit(&raw_splits[0], cfg.preprocess);
    let train = pre.transform(&raw_splits[0])?;
    let val = pre.transform(&raw_splits[1])?;
    let test = pre.transform(&raw_splits[2])?;
    lap("load", &mut times);

    let kernels = cfg.kernel.resolve(&train)?;
    let ctx = fit_context_with(&train, &cfg.kernel, &kernels)?;
    lap("factorize", &mut times);

    let task = Task::of(&train.y);
    let settings = EvalSettings {
        pivot_tol: cfg.kernel.pivot_tol,
        kcc_reg: cfg.kcc_reg,
        metric: cfg.invariance,
    };
    let mut requested: Vec<SplitName> = Vec::new();
    for s in &cfg.splits {
        if !requested.contains(s) {
            requested.push(*s);
        }
    }
    let mut evals = Vec::new();
    for name in &requested {
        let data = match name {
            SplitName::Train => &train,
            SplitName::Val => &val,
            SplitName::Test => &test,
        };
        evals.push(EvalSplit::new(*name, data, &kernels, task, &settings)?);
    }
    lap("prepare_eval", &mut times);

    let lambdas = cfg.lambda_grid.values()?;
    let eval_refs: Vec<&EvalSplit> = evals.iter().collect();
    let result = tradeoff::sweep(
        &ctx,
        &train,
        Some(&val),
        &eval_refs,
        &SweepSettings {
            lambdas: &lambdas,
            gammas: &cfg.gamma,
            head_ridge: cfg.head_ridge,
            task,
        },
        &config_digest,
    )?;
    lap("sweep", &mut times);

    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    write_file(&dir, "curve.csv", &result.curve.to_csv(), &mut files)?;
    write_file(&dir, "curve.json", &(result.curve.to_json() + "\n"), &mut files)?;
    let plot_split = requested[0];
    for panel in Panel::ALL {
        write_file(
            &dir,
            &format!("plots/{}.csv", panel.name()),
            &plot_data(&result.curve, panel, plot_split),
            &mut files,
        )?;
    }
    if cfg.save_models {
        let invariance = tradeoff::invariance_kind(cfg.invariance, task, &train.s);
        let mctx = ModelContext {
            config_digest: &config_digest,
            kernels: &kernels,
            pivot_tol: cfg.kernel.pivot_tol,
            kcc_reg: cfg.kcc_reg,
            invariance,
            preprocessor: &pre,
            y_labels: labels_of(&train.y),
            s_labels: labels_of(&train.s),
        };
        for (i, fit) in result.fits.iter().enumerate() {
            let doc = ModelDocument::new(&fit.model, &fit.head, &mctx);
            write_file(&dir, &format!("models/model_{i:03}.json"), &(doc.to_json() + "\n"), &mut files)?;
        }
    }
    let data_dir = dir.join("data");
    std::fs::create_dir_all(&data_dir).map_err(|e| Error::io(&data_dir, e))?;
    for (name, ds) in ["train", "val", "test"].iter().zip(&raw_splits) {
        data::save_csv(ds, &data_dir.join(format!("{name}.csv")))?;
        files.push(format!("data/{name}.csv"));
    }
    Schema::for_dataset(&raw).save(&data_dir.join("schema.json"))?;
    files.push("data/schema.json".into());
    lap("write", &mut times);

    let manifest = Manifest {
        tool_version: VERSION.into(),
        config_digest,
        dataset_digest,
        config: cfg.clone(),
        split_sizes: [i_train.len(), i_val.len(), i_test.len()],
        lambdas,
        wall_times: times,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    let mpath = dir.join("manifest.json");
    std::fs::write(&mpath, text + "\n").map_err(|e| Error::io(&mpath, e))?;
    Ok(SweepOutputs {
        curve: result.curve,
        manifest,
        output_dir: dir,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub r: usize,
    pub utility: f64,
    pub invariance: f64,
    pub dependence: DependenceReport,
}

/// Re-codes a categorical attribute onto the label order stored in a model;
/// labels the model never saw get fresh codes after the known ones.
fn recode(attr: &Attribute, model_labels: &[String], allow_new: bool, role: &'static str) -> Result<Attribute> {
    let Attribute::Categorical { codes, labels, name } = attr else {
        return Err(Error::param(role, "model expects a categorical column"));
    };
    let mut all: Vec<String> = model_labels.to_vec();
    let mut index: HashMap<String, usize> = all.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let mut map = Vec::with_capacity(labels.len());
    for l in labels {
        let code = match index.get(l) {
            Some(&c) => c,
            None if allow_new => {
                all.push(l.clone());
                index.insert(l.clone(), all.len() - 1);
                all.len() - 1
            }
            None => return Err(Error::param(role, format!("label `{l}` unknown to the model"))),
        };
        map.push(code);
    }
    Ok(Attribute::Categorical {
        codes: codes.iter().map(|&c| map[c]).collect(),
        labels: all,
        name: name.clone(),
    })
}

/// Maps the categorical input codes of freshly loaded data onto the
/// preprocessor's training dictionaries; unseen labels get an all-zero one-hot
/// row.
fn align_inputs(ds: &Dataset, pre: &Preprocessor) -> Result<nalgebra::DMatrix<f64>> {
    if ds.x.ncols() != pre.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "eval input columns (model vs data)",
            expected: pre.input_dim(),
            found: ds.x.ncols(),
        });
    }
    let mut x = ds.x.clone();
    for (j, (meta_m, meta_d)) in pre.feature_meta.iter().zip(&ds.feature_meta).enumerate() {
        match (meta_m, meta_d) {
            (FeatureKind::Categorical { labels: lm }, FeatureKind::Categorical { labels: ld }) => {
                let map: Vec<f64> = ld
                    .iter()
                    .map(|l| lm.iter().position(|m| m == l).unwrap_or(lm.len()) as f64)
                    .collect();
                for v in x.column_mut(j).iter_mut() {
                    *v = map[*v as usize];
                }
            }
            (FeatureKind::Continuous, FeatureKind::Continuous) => {}
            _ => {
                return Err(Error::param(
                    "schema",
                    format!("column `{}` type differs from training", ds.x_names[j]),
                ))
            }
        }
    }
    pre.transform_x(&x)
}

/// Encodes a dataset with a saved model and reports utility and dependence.
pub fn eval_model(model_path: &Path, data_path: &Path, schema_path: &Path) -> Result<EvalReport> {
    let doc = ModelDocument::load(model_path)?;
    let encoder = doc.encoder()?;
    let head = doc.head()?;
    let (ky, ks) = doc.kernels()?;
    let raw = data::load_csv(data_path, &Schema::load(schema_path)?)?;
    let x = align_inputs(&raw, &doc.preprocessor)?;
    if x.ncols() != encoder.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "eval features (model vs data)",
            expected: encoder.input_dim(),
            found: x.ncols(),
        });
    }
    let y = match &doc.y_labels {
        Some(l) => recode(&raw.y, l, false, "y")?,
        None => raw.y.clone(),
    };
    let s = match &doc.s_labels {
        Some(l) => recode(&raw.s, l, true, "s")?,
        None => raw.s.clone(),
    };
    let width = x.ncols();
    let names = (0..width).map(|j| format!("f{j}")).collect();
    let ds = Dataset::new(x, names, vec![FeatureKind::Continuous; width], y, s)?;
    let kx = match encoder.kernel_ctx() {
        KernelContext::Exact { spec, .. } => spec.clone(),
        KernelContext::Rff { projection } => KernelSpec::rbf(projection.bandwidth, projection.input_dim())?,
    };
    let kernels = ResolvedKernels { x: kx, y: ky, s: ks };
    let settings = EvalSettings {
        pivot_tol: doc.pivot_tol,
        kcc_reg: doc.kcc_reg,
        metric: doc.invariance,
    };
    let split = EvalSplit::new(SplitName::Test, &ds, &kernels, head.task, &settings)?;
    let e = evaluate_full(&encoder, &head, &split)?;
    Ok(EvalReport {
        n: ds.len(),
        lambda: encoder.lambda(),
        gamma: encoder.gamma(),
        r: encoder.r(),
        utility: e.utility,
        invariance: e.invariance,
        dependence: e.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScalePolicy;
    use nalgebra::DMatrix;

    fn cat(codes: Vec<usize>, labels: &[&str]) -> Attribute {
        Attribute::Categorical {
            codes,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            name: "a".into(),
        }
    }

    #[test]
    fn schema_path_next_to_csv() {
        assert_eq!(schema_path_for(Path::new("/d/toy.csv")), PathBuf::from("/d/toy.schema.json"));
        assert_eq!(schema_path_for(Path::new("rel.csv")), PathBuf::from("rel.schema.json"));
    }

    #[test]
    fn recode_maps_onto_model_labels() {
        let attr = cat(vec![0, 1, 0], &["b", "a"]);
        let model = vec!["a".to_string(), "b".to_string()];
        let got = recode(&attr, &model, false, "y").unwrap();
        assert_eq!(got.codes().unwrap(), &[1, 0, 1]);
        let fresh = cat(vec![0, 1], &["c", "a"]);
        assert!(recode(&fresh, &model, false, "y").is_err());
        let grown = recode(&fresh, &model, true, "s").unwrap();
        assert_eq!(grown.codes().unwrap(), &[2, 0]);
        assert_eq!(grown.num_classes(), Some(3));
    }

    #[test]
    fn inputs_align_to_training_dictionary() {
        let meta = |labels: &[&str]| FeatureKind::Categorical {
            labels: labels.iter().map(|s| s.to_string()).collect(),
        };
        let train = Dataset::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]),
            vec!["v".into(), "c".into()],
            vec![FeatureKind::Continuous, meta(&["p", "q"])],
            cat(vec![0, 0], &["y"]),
            cat(vec![0, 0], &["s"]),
        )
        .unwrap();
        let pre = Preprocessor::fit(&train, ScalePolicy::MaxDivide);
        let fresh = Dataset::new(
            DMatrix::from_row_slice(3, 2, &[4.0, 0.0, 1.0, 1.0, 2.0, 2.0]),
            vec!["v".into(), "c".into()],
            vec![FeatureKind::Continuous, meta(&["q", "r", "p"])],
            cat(vec![0, 0, 0], &["y"]),
            cat(vec![0, 0, 0], &["s"]),
        )
        .unwrap();
        let x = align_inputs(&fresh, &pre).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(x, expected);
        let narrow = fresh.select(&[0]);
        let narrow = Dataset::new(
            narrow.x.columns(0, 1).into_owned(),
            vec!["v".into()],
            vec![FeatureKind::Continuous],
            narrow.y,
            narrow.s,
        )
        .unwrap();
        assert!(matches!(align_inputs(&narrow, &pre), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fingerprint_tracks_values() {
        let a = data::gen_gaussian_toy(10, 1).unwrap();
        let b = data::gen_gaussian_toy(10, 2).unwrap();
        assert_eq!(dataset_fingerprint(&a), dataset_fingerprint(&a.clone()));
        assert_ne!(dataset_fingerprint(&a), dataset_fingerprint(&b));
    }
}
