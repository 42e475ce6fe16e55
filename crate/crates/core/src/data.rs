//! Data generation and dataset I/O.
//!
//! Synthetic features come from diagonal Gaussian class conditionals. Tuple
//! label vectors are drawn from the subset with probability proportional to
//! their prior product (inverse CDF over the canonical enumeration order);
//! a rejection sampler that draws i.i.d. labeled points and keeps tuples
//! whose label vector satisfies the constraint serves as a statistical
//! oracle for the direct sampler.
//!
//! Ground-truth labels travel with the datasets in a separate diagnostics
//! channel (`hidden_labels`); the training path never reads them.
//!
//! All sampling is reproducible from a 64-bit seed. Independent streams are
//! derived with [`child_seed`], which hashes the master seed together with
//! a purpose label.

use std::io::Write as _;
use std::path::Path;

use rand::distributions::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::coefficients::{mixture_closed_form, Priors};
use crate::error::{Error, Result};
use crate::scenario::{LabelVector, ScenarioSpec};

/// Minimum subset prior mass accepted by the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Derives an independent child seed from a master seed and a purpose
/// label; this is the documented split scheme behind every `--seed` flag.
pub fn child_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Seeded generator used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Diagonal-Gaussian class conditionals plus class priors.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DataModel {
    pub dim: usize,
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub stdev: Vec<f64>,
    pub priors: Priors,
}

impl DataModel {
    pub fn new(
        mean_pos: Vec<f64>,
        mean_neg: Vec<f64>,
        stdev: Vec<f64>,
        priors: Priors,
    ) -> Result<Self> {
        let dim = mean_pos.len();
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if mean_neg.len() != dim || stdev.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mean_neg.len().max(stdev.len()),
            });
        }
        if stdev.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("stdev must be positive in every dimension"));
        }
        if mean_pos == mean_neg {
            return Err(Error::invalid(
                "class-conditional means must differ for a non-degenerate model",
            ));
        }
        Ok(DataModel {
            dim,
            mean_pos,
            mean_neg,
            stdev,
            priors,
        })
    }

    /// Symmetric 1-D or 2-D helper: means at +/- `separation`, shared stdev.
    pub fn symmetric(dim: usize, separation: f64, stdev: f64, priors: Priors) -> Result<Self> {
        DataModel::new(
            vec![separation; dim],
            vec![-separation; dim],
            vec![stdev; dim],
            priors,
        )
    }

    fn sample_feature_into(&self, label: i8, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        let mean = if label == 1 { &self.mean_pos } else { &self.mean_neg };
        for d in 0..self.dim {
            let g: f64 = StandardNormal.sample(rng);
            out.push(mean[d] + self.stdev[d] * g);
        }
    }
}

/// N-tuple features with optional hidden ground-truth label vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleDataset {
    n: usize,
    dim: usize,
    features: Vec<f64>,
    pub hidden_labels: Option<Vec<LabelVector>>,
}

impl TupleDataset {
    pub fn from_parts(
        n: usize,
        dim: usize,
        features: Vec<f64>,
        hidden_labels: Option<Vec<LabelVector>>,
    ) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("tuple size and dimension must be positive"));
        }
        if features.len() % (n * dim) != 0 {
            return Err(Error::ShapeMismatch {
                detail: format!(
                    "{} feature values do not fill tuples of {n} x {dim}",
                    features.len()
                ),
            });
        }
        let count = features.len() / (n * dim);
        if let Some(labels) = &hidden_labels {
            if labels.len() != count {
                return Err(Error::ShapeMismatch {
                    detail: format!("{} hidden labels for {count} tuples", labels.len()),
                });
            }
            if let Some(bad) = labels.iter().find(|v| v.len() != n) {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: bad.len(),
                });
            }
        }
        Ok(TupleDataset {
            n,
            dim,
            features,
            hidden_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len() / (self.n * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, tuple: usize, slot: usize) -> &[f64] {
        let start = (tuple * self.n + slot) * self.dim;
        &self.features[start..start + self.dim]
    }
}

/// Pointwise features with optional hidden ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    dim: usize,
    features: Vec<f64>,
    pub hidden_labels: Option<Vec<i8>>,
}

impl UnlabeledDataset {
    pub fn from_parts(
        dim: usize,
        features: Vec<f64>,
        hidden_labels: Option<Vec<i8>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if features.len() % dim != 0 {
            return Err(Error::ShapeMismatch {
                detail: format!("{} feature values at dimension {dim}", features.len()),
            });
        }
        if let Some(labels) = &hidden_labels {
            if labels.len() != features.len() / dim {
                return Err(Error::ShapeMismatch {
                    detail: "hidden label count differs from point count".into(),
                });
            }
        }
        Ok(UnlabeledDataset {
            dim,
            features,
            hidden_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

/// Fully labeled points; the supervised oracle's training input.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
}

impl LabeledPool {
    pub fn from_parts(dim: usize, features: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch {
                detail: "feature count does not match label count".into(),
            });
        }
        Ok(LabeledPool {
            dim,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

/// Inverse-CDF sampler over the canonical enumeration of a label subset.
pub struct LabelVectorSampler {
    labels: Vec<LabelVector>,
    cumulative: Vec<f64>,
    total: f64,
}

impl LabelVectorSampler {
    pub fn new(spec: &ScenarioSpec, priors: &Priors) -> Result<Self> {
        let labels = spec.enumerate_labels()?;
        let mut cumulative = Vec::with_capacity(labels.len());
        let mut running = 0.0;
        for v in &labels {
            let mut product = 1.0;
            for &e in v.entries() {
                product *= if e == 1 {
                    priors.tau_plus()
                } else {
                    priors.tau_minus()
                };
            }
            running += product;
            cumulative.push(running);
        }
        Ok(LabelVectorSampler {
            labels,
            cumulative,
            total: running,
        })
    }

    /// Exact sampling probabilities in canonical order (for tests).
    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / self.total;
                prev = c;
                p
            })
            .collect()
    }

    pub fn labels(&self) -> &[LabelVector] {
        &self.labels
    }

    pub fn sample<'a>(&'a self, rng: &mut ChaCha8Rng) -> &'a LabelVector {
        let u: f64 = rng.gen::<f64>() * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        &self.labels[idx.min(self.labels.len() - 1)]
    }
}

/// One label vector drawn with probability proportional to its prior mass.
pub fn sample_label_vector(
    spec: &ScenarioSpec,
    priors: &Priors,
    rng: &mut ChaCha8Rng,
) -> Result<LabelVector> {
    Ok(LabelVectorSampler::new(spec, priors)?.sample(rng).clone())
}

/// Direct tuple sampler: label vector first, then one class-conditional
/// feature draw per position.
pub fn sample_tuples(
    model: &DataModel,
    spec: &ScenarioSpec,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TupleDataset> {
    if count == 0 {
        return Err(Error::invalid("tuple count must be at least 1"));
    }
    let sampler = LabelVectorSampler::new(spec, priors_of(model))?;
    let n = spec.n();
    let mut features = Vec::with_capacity(count * n * model.dim);
    let mut hidden = Vec::with_capacity(count);
    for _ in 0..count {
        let v = sampler.sample(rng).clone();
        for &e in v.entries() {
            model.sample_feature_into(e, rng, &mut features);
        }
        hidden.push(v);
    }
    TupleDataset::from_parts(n, model.dim, features, Some(hidden))
}

fn priors_of(model: &DataModel) -> &Priors {
    &model.priors
}

/// Attempt/acceptance counts from the rejection oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RejectionStats {
    pub attempts: u64,
    pub accepted: u64,
}

impl RejectionStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.attempts as f64
    }
}

/// Oracle sampler: draws N i.i.d. labeled points per attempt and keeps
/// the tuple when its label vector lies in the subset. Distributionally
/// identical to [`sample_tuples`]; used to cross-check it statistically.
pub fn rejection_sample_tuples(
    model: &DataModel,
    spec: &ScenarioSpec,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(TupleDataset, RejectionStats)> {
    if count == 0 {
        return Err(Error::invalid("tuple count must be at least 1"));
    }
    let z = subset_prior_mass(spec, &model.priors)?;
    if z < MIN_ACCEPTANCE {
        return Err(Error::AcceptanceTooLow {
            z,
            min: MIN_ACCEPTANCE,
        });
    }
    let n = spec.n();
    let tau_plus = model.priors.tau_plus();
    let mut features = Vec::with_capacity(count * n * model.dim);
    let mut hidden = Vec::with_capacity(count);
    let mut stats = RejectionStats {
        attempts: 0,
        accepted: 0,
    };
    let mut scratch = Vec::with_capacity(n * model.dim);
    let mut entries = Vec::with_capacity(n);
    while hidden.len() < count {
        stats.attempts += 1;
        scratch.clear();
        entries.clear();
        for _ in 0..n {
            let label: i8 = if rng.gen::<f64>() < tau_plus { 1 } else { -1 };
            entries.push(label);
            model.sample_feature_into(label, rng, &mut scratch);
        }
        let v = LabelVector::new(entries.clone())?;
        if spec.contains(&v)? {
            stats.accepted += 1;
            features.extend_from_slice(&scratch);
            hidden.push(v);
        }
    }
    let ds = TupleDataset::from_parts(n, model.dim, features, Some(hidden))?;
    Ok((ds, stats))
}

/// Prior mass of the subset (the rejection acceptance probability).
pub fn subset_prior_mass(spec: &ScenarioSpec, priors: &Priors) -> Result<f64> {
    match spec.kind() {
        Some(kind) => Ok(mixture_closed_form(kind, spec.n(), priors)?.z),
        None => {
            let sampler = LabelVectorSampler::new(spec, priors)?;
            Ok(sampler.total)
        }
    }
}

/// Labeled sample from the joint distribution: Bernoulli class label,
/// then the matching class conditional.
pub fn sample_labeled_pool(
    model: &DataModel,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledPool> {
    if count == 0 {
        return Err(Error::invalid("point count must be at least 1"));
    }
    let tau_plus = model.priors.tau_plus();
    let mut features = Vec::with_capacity(count * model.dim);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let label: i8 = if rng.gen::<f64>() < tau_plus { 1 } else { -1 };
        labels.push(label);
        model.sample_feature_into(label, rng, &mut features);
    }
    LabeledPool::from_parts(model.dim, features, labels)
}

/// Unlabeled sample from the marginal; ground-truth labels are retained
/// in the diagnostics channel.
pub fn sample_unlabeled(
    model: &DataModel,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<UnlabeledDataset> {
    let pool = sample_labeled_pool(model, count, rng)?;
    UnlabeledDataset::from_parts(pool.dim, pool.features, Some(pool.labels))
}

/// Builds tuples by drawing a label vector and filling each position with
/// a uniform draw (with replacement) from the matching class sub-pool.
pub fn build_tuples_from_labeled(
    pool: &LabeledPool,
    spec: &ScenarioSpec,
    priors: &Priors,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TupleDataset> {
    if count == 0 {
        return Err(Error::invalid("tuple count must be at least 1"));
    }
    let pos_idx: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) == 1).collect();
    let neg_idx: Vec<usize> = (0..pool.len()).filter(|&i| pool.label(i) == -1).collect();
    if pos_idx.is_empty() {
        return Err(Error::MissingClass { class: "positive" });
    }
    if neg_idx.is_empty() {
        return Err(Error::MissingClass { class: "negative" });
    }
    let sampler = LabelVectorSampler::new(spec, priors)?;
    let n = spec.n();
    let mut features = Vec::with_capacity(count * n * pool.dim);
    let mut hidden = Vec::with_capacity(count);
    for _ in 0..count {
        let v = sampler.sample(rng).clone();
        for &e in v.entries() {
            let side = if e == 1 { &pos_idx } else { &neg_idx };
            let pick = side[rng.gen_range(0..side.len())];
            features.extend_from_slice(pool.point(pick));
        }
        hidden.push(v);
    }
    TupleDataset::from_parts(n, pool.dim, features, Some(hidden))
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Points with optional labels, mirroring the point CSV format:
/// header `label,f0,...,f{d-1}`, label in {-1,1} or empty for unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<Option<i8>>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn from_labeled(pool: &LabeledPool) -> Self {
        PointSet {
            dim: pool.dim,
            features: pool.features.clone(),
            labels: pool.labels.iter().map(|&l| Some(l)).collect(),
        }
    }

    pub fn from_unlabeled(ds: &UnlabeledDataset, expose_hidden: bool) -> Self {
        let labels = match (&ds.hidden_labels, expose_hidden) {
            (Some(hidden), true) => hidden.iter().map(|&l| Some(l)).collect(),
            _ => vec![None; ds.len()],
        };
        PointSet {
            dim: ds.dim,
            features: ds.features.clone(),
            labels,
        }
    }

    /// All points must be labeled; used for supervised pools and test sets.
    pub fn to_labeled(&self) -> Result<LabeledPool> {
        let labels = self
            .labels
            .iter()
            .map(|l| l.ok_or(Error::MissingClass { class: "labeled" }))
            .collect::<Result<Vec<i8>>>()?;
        LabeledPool::from_parts(self.dim, self.features.clone(), labels)
    }

    /// Drops label visibility; labels that were present stay available as
    /// diagnostics.
    pub fn to_unlabeled(&self) -> Result<UnlabeledDataset> {
        let hidden = if self.labels.iter().all(Option::is_some) {
            Some(self.labels.iter().map(|l| l.unwrap()).collect())
        } else {
            None
        };
        UnlabeledDataset::from_parts(self.dim, self.features.clone(), hidden)
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|e| parse_error(path, line, format!("invalid float {tok:?}: {e}")))
}

/// Loads a point CSV. Empty label fields yield unlabeled points.
pub fn load_points_csv(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let fields: Vec<&str> = header.trim().split(',').collect();
    if fields.first() != Some(&"label") || fields.len() < 2 {
        return Err(parse_error(
            path,
            1,
            format!("expected header label,f0,...; got {header:?}"),
        ));
    }
    for (i, name) in fields[1..].iter().enumerate() {
        if *name != format!("f{i}") {
            return Err(parse_error(path, 1, format!("expected column f{i}, got {name:?}")));
        }
    }
    let dim = fields.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != dim + 1 {
            return Err(parse_error(
                path,
                line_no,
                format!("expected {} fields, got {}", dim + 1, toks.len()),
            ));
        }
        let label_tok = toks[0].trim();
        let label = if label_tok.is_empty() {
            None
        } else {
            match label_tok.parse::<i8>() {
                Ok(1) => Some(1),
                Ok(-1) => Some(-1),
                _ => {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("label must be -1, 1 or empty, got {label_tok:?}"),
                    ))
                }
            }
        };
        labels.push(label);
        for tok in &toks[1..] {
            features.push(parse_f64(path, line_no, tok)?);
        }
    }
    Ok(PointSet {
        dim,
        features,
        labels,
    })
}

/// Writes a point CSV; floats use the shortest lossless representation.
pub fn save_points_csv(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "label")?;
    for d in 0..points.dim {
        write!(out, ",f{d}")?;
    }
    writeln!(out)?;
    for i in 0..points.len() {
        match points.labels[i] {
            Some(l) => write!(out, "{l}")?,
            None => {}
        }
        for v in points.point(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn labels_sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".labels.csv");
    path.with_file_name(name)
}

/// Writes a tuple CSV (`tuple_id,slot,f0,...`, rows grouped by tuple).
/// Hidden label vectors, when present, go to a `<stem>.labels.csv` sidecar
/// so the training-visible file stays label-free.
pub fn save_tuples(path: impl AsRef<Path>, ds: &TupleDataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "tuple_id,slot")?;
    for d in 0..ds.dim() {
        write!(out, ",f{d}")?;
    }
    writeln!(out)?;
    for i in 0..ds.len() {
        for slot in 0..ds.n() {
            write!(out, "{i},{slot}")?;
            for v in ds.feature(i, slot) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
    }
    out.flush()?;

    if let Some(hidden) = &ds.hidden_labels {
        let mut out = std::io::BufWriter::new(std::fs::File::create(labels_sidecar(path))?);
        write!(out, "tuple_id")?;
        for slot in 0..ds.n() {
            write!(out, ",y{slot}")?;
        }
        writeln!(out)?;
        for (i, v) in hidden.iter().enumerate() {
            write!(out, "{i}")?;
            for &e in v.entries() {
                write!(out, ",{e}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Loads a tuple CSV; reads the hidden-label sidecar when present.
pub fn load_tuples(path: impl AsRef<Path>) -> Result<TupleDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let fields: Vec<&str> = header.trim().split(',').collect();
    if fields.len() < 3 || fields[0] != "tuple_id" || fields[1] != "slot" {
        return Err(parse_error(
            path,
            1,
            format!("expected header tuple_id,slot,f0,...; got {header:?}"),
        ));
    }
    let dim = fields.len() - 2;
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != dim + 2 {
            return Err(parse_error(
                path,
                line_no,
                format!("expected {} fields, got {}", dim + 2, toks.len()),
            ));
        }
        let tuple_id: usize = toks[0]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("invalid tuple_id: {e}")))?;
        let slot: usize = toks[1]
            .trim()
            .parse()
            .map_err(|e| parse_error(path, line_no, format!("invalid slot: {e}")))?;
        let feats = toks[2..]
            .iter()
            .map(|t| parse_f64(path, line_no, t))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((tuple_id, slot, feats));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no tuple rows"));
    }
    let n = rows.iter().map(|(_, s, _)| s + 1).max().unwrap();
    let count = rows.iter().map(|(t, _, _)| t + 1).max().unwrap();
    if rows.len() != n * count {
        return Err(parse_error(
            path,
            1,
            format!("expected {count} tuples x {n} slots = {} rows, got {}", n * count, rows.len()),
        ));
    }
    let mut features = vec![f64::NAN; count * n * dim];
    let mut seen = vec![false; count * n];
    for (tuple_id, slot, feats) in rows {
        let cell = tuple_id * n + slot;
        if seen[cell] {
            return Err(parse_error(
                path,
                1,
                format!("duplicate row for tuple {tuple_id} slot {slot}"),
            ));
        }
        seen[cell] = true;
        features[cell * dim..(cell + 1) * dim].copy_from_slice(&feats);
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(parse_error(
            path,
            1,
            format!("missing row for tuple {} slot {}", missing / n, missing % n),
        ));
    }

    let sidecar = labels_sidecar(path);
    let hidden = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        let mut labels = vec![None; count];
        for (idx, line) in text.lines().enumerate().skip(1) {
            let line_no = idx + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split(',').collect();
            if toks.len() != n + 1 {
                return Err(parse_error(
                    &sidecar,
                    line_no,
                    format!("expected {} fields, got {}", n + 1, toks.len()),
                ));
            }
            let tuple_id: usize = toks[0]
                .trim()
                .parse()
                .map_err(|e| parse_error(&sidecar, line_no, format!("invalid tuple_id: {e}")))?;
            if tuple_id >= count {
                return Err(parse_error(&sidecar, line_no, "tuple_id out of range"));
            }
            let entries = toks[1..]
                .iter()
                .map(|t| {
                    t.trim().parse::<i8>().map_err(|e| {
                        parse_error(&sidecar, line_no, format!("invalid label {t:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<i8>>>()?;
            labels[tuple_id] =
                Some(LabelVector::new(entries).map_err(|e| {
                    parse_error(&sidecar, line_no, e.to_string())
                })?);
        }
        if labels.iter().all(Option::is_some) {
            Some(labels.into_iter().map(Option::unwrap).collect())
        } else {
            None
        }
    } else {
        None
    };

    TupleDataset::from_parts(n, dim, features, hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioKind;
    use approx::assert_abs_diff_eq;

    fn priors(tau: f64) -> Priors {
        Priors::new(tau).unwrap()
    }

    fn model_1d(tau: f64) -> DataModel {
        DataModel::symmetric(1, 1.0, 1.0, priors(tau)).unwrap()
    }

    #[test]
    fn label_sampler_probabilities_sim() {
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let sampler = LabelVectorSampler::new(&spec, &priors(0.8)).unwrap();
        let probs = sampler.probabilities();
        // 0.512 / 0.52 for all-positive, 0.008 / 0.52 for all-negative
        assert_abs_diff_eq!(probs[0], 0.512 / 0.52, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], 0.008 / 0.52, epsilon = 1e-12);
    }

    #[test]
    fn label_sampler_uniform_over_mixed_at_equal_priors() {
        let spec = ScenarioSpec::named(ScenarioKind::Mix, 3).unwrap();
        let sampler = LabelVectorSampler::new(&spec, &priors(0.5)).unwrap();
        for p in sampler.probabilities() {
            assert_abs_diff_eq!(p, 1.0 / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn label_vector_frequencies_match_exact_probabilities() {
        let spec = ScenarioSpec::named(ScenarioKind::NotAllNeg, 3).unwrap();
        let pr = priors(0.3);
        let sampler = LabelVectorSampler::new(&spec, &pr).unwrap();
        let exact = sampler.probabilities();
        let draws = 100_000usize;
        let mut counts = vec![0usize; sampler.labels().len()];
        let mut rng = rng_from_seed(11);
        for _ in 0..draws {
            let v = sampler.sample(&mut rng);
            let idx = sampler.labels().iter().position(|l| l == v).unwrap();
            counts[idx] += 1;
        }
        for (i, &p) in exact.iter().enumerate() {
            let freq = counts[i] as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * sigma,
                "vector {i}: freq {freq} vs exact {p}"
            );
        }
    }

    #[test]
    fn sim_tuples_have_constant_hidden_labels() {
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let model = model_1d(0.7);
        let mut rng = rng_from_seed(5);
        let ds = sample_tuples(&model, &spec, 500, &mut rng).unwrap();
        for v in ds.hidden_labels.as_ref().unwrap() {
            let m = v.positives();
            assert!(m == 0 || m == 3);
        }
    }

    #[test]
    fn samplers_are_seed_deterministic() {
        let spec = ScenarioSpec::named(ScenarioKind::Mix, 3).unwrap();
        let model = model_1d(0.6);
        let a = sample_tuples(&model, &spec, 50, &mut rng_from_seed(9)).unwrap();
        let b = sample_tuples(&model, &spec, 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        let (ra, sa) = rejection_sample_tuples(&model, &spec, 50, &mut rng_from_seed(9)).unwrap();
        let (rb, sb) = rejection_sample_tuples(&model, &spec, 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(sa, sb);
        let u = sample_unlabeled(&model, 50, &mut rng_from_seed(9)).unwrap();
        let v = sample_unlabeled(&model, 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn child_seeds_differ_by_label_and_are_stable() {
        let a = child_seed(7, "tuples");
        let b = child_seed(7, "unlabeled");
        assert_ne!(a, b);
        assert_eq!(a, child_seed(7, "tuples"));
    }

    #[test]
    fn unlabeled_positive_fraction_and_mean() {
        let model = model_1d(0.7);
        let mut rng = rng_from_seed(3);
        let count = 100_000usize;
        let ds = sample_unlabeled(&model, count, &mut rng).unwrap();
        let hidden = ds.hidden_labels.as_ref().unwrap();
        let pos_frac = hidden.iter().filter(|&&l| l == 1).count() as f64 / count as f64;
        let sigma = (0.7 * 0.3 / count as f64).sqrt();
        assert!((pos_frac - 0.7).abs() <= 4.0 * sigma, "pos_frac = {pos_frac}");

        // mixture mean 0.7 * 1 + 0.3 * (-1) = 0.4
        let mean: f64 = (0..count).map(|i| ds.point(i)[0]).sum::<f64>() / count as f64;
        let var = 0.7 * (1.0 + 1.0) + 0.3 * (1.0 + 1.0) - 0.4 * 0.4;
        let sigma_mean = (var / count as f64).sqrt();
        assert!((mean - 0.4).abs() <= 4.0 * sigma_mean, "mean = {mean}");
    }

    #[test]
    fn rejection_acceptance_rate_near_subset_mass() {
        let spec = ScenarioSpec::named(ScenarioKind::Sim, 3).unwrap();
        let model = DataModel::symmetric(1, 1.0, 1.0, priors(0.9)).unwrap();
        let mut rng = rng_from_seed(21);
        let (_, stats) = rejection_sample_tuples(&model, &spec, 20_000, &mut rng).unwrap();
        let z = subset_prior_mass(&spec, &priors(0.9)).unwrap();
        assert_abs_diff_eq!(z, 0.730, epsilon = 1e-12);
        let rate = stats.acceptance_rate();
        let sigma = (z * (1.0 - z) / stats.attempts as f64).sqrt();
        assert!((rate - z).abs() <= 4.0 * sigma, "rate = {rate}, z = {z}");
    }

    #[test]
    fn rejection_guard_rejects_vanishing_mass() {
        // a single 20-long all-positive vector at tau_+ = 0.1 has mass 1e-20
        let v = LabelVector::new(vec![1; 20]).unwrap();
        let spec = ScenarioSpec::custom(20, vec![v]).unwrap();
        let model = DataModel::symmetric(1, 1.0, 1.0, priors(0.1)).unwrap();
        let mut rng = rng_from_seed(2);
        assert!(matches!(
            rejection_sample_tuples(&model, &spec, 1, &mut rng),
            Err(Error::AcceptanceTooLow { .. })
        ));
    }

    #[test]
    fn tuples_from_labeled_pool_respect_scenario() {
        let model = model_1d(0.6);
        let mut rng = rng_from_seed(17);
        let pool = sample_labeled_pool(&model, 1000, &mut rng).unwrap();
        let spec = ScenarioSpec::named(ScenarioKind::Mix, 3).unwrap();
        let ds = build_tuples_from_labeled(&pool, &spec, &priors(0.6), 300, &mut rng).unwrap();
        for v in ds.hidden_labels.as_ref().unwrap() {
            let m = v.positives();
            assert!(m >= 1 && m <= 2);
        }
        // deterministic under a fixed seed
        let mut r1 = rng_from_seed(4);
        let mut r2 = rng_from_seed(4);
        let a = build_tuples_from_labeled(&pool, &spec, &priors(0.6), 20, &mut r1).unwrap();
        let b = build_tuples_from_labeled(&pool, &spec, &priors(0.6), 20, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_class_is_reported() {
        let pool = LabeledPool::from_parts(1, vec![0.1, 0.2], vec![1, 1]).unwrap();
        let spec = ScenarioSpec::named(ScenarioKind::Mix, 2).unwrap();
        let mut rng = rng_from_seed(1);
        assert!(matches!(
            build_tuples_from_labeled(&pool, &spec, &priors(0.5), 5, &mut rng),
            Err(Error::MissingClass { class: "negative" })
        ));
    }

    #[test]
    fn point_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        let points = PointSet {
            dim: 2,
            features: vec![0.1, -2.5, 1.0 / 3.0, 7e-12, -0.0, 42.0],
            labels: vec![Some(1), None, Some(-1)],
        };
        save_points_csv(&path, &points).unwrap();
        let loaded = load_points_csv(&path).unwrap();
        assert_eq!(points, loaded);
    }

    #[test]
    fn point_csv_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        std::fs::write(&path, "label,f0\n1,0.5\n-1,oops\n").unwrap();
        match load_points_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "label,f0\n2,0.5\n").unwrap();
        assert!(load_points_csv(&path).is_err());
    }

    #[test]
    fn three_line_file_parses_two_points() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        std::fs::write(&path, "label,f0\n1,0.5\n,1.25\n").unwrap();
        let points = load_points_csv(&path).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points.labels, vec![Some(1), None]);
    }

    #[test]
    fn tuple_csv_round_trip_with_hidden_labels() {
        let spec = ScenarioSpec::named(ScenarioKind::NotAllNeg, 3).unwrap();
        let model = DataModel::symmetric(2, 1.5, 1.0, priors(0.4)).unwrap();
        let mut rng = rng_from_seed(33);
        let ds = sample_tuples(&model, &spec, 25, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuples.csv");
        save_tuples(&path, &ds).unwrap();
        let loaded = load_tuples(&path).unwrap();
        assert_eq!(ds, loaded);

        // without the sidecar the features still round-trip, labels drop
        std::fs::remove_file(dir.path().join("tuples.labels.csv")).unwrap();
        let loaded = load_tuples(&path).unwrap();
        assert_eq!(loaded.hidden_labels, None);
        assert_eq!(loaded.feature(3, 1), ds.feature(3, 1));
    }
}
