//! Synthetic multimodal benchmark with controllable cross-modal agreement,
//! conflict, and uninformative-modality samples, so misclassification and
//! confidence degradation occur naturally at desk scale.
//!
//! Per class and modality a fixed prototype is drawn once from a seeded
//! standard normal. A clean sample is its label's prototype plus σ-scaled
//! noise in every modality. A conflict sample substitutes a different class's
//! prototype in modality 2. A noisy sample replaces one uniformly chosen
//! modality with pure large-scale noise and no prototype at all.

use crate::error::{AcrError, Result};
use crate::numerics::{Matrix, RandomStream};
use crate::{real, Real};
use std::fmt;
use std::path::Path;

/// Scale multiplier for the prototype-free noisy modality.
const NOISY_SCALE_FACTOR: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub modalities: usize,
    pub d_in: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub sigma: f64,
    pub rho_conflict: f64,
    pub rho_noise: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// The reference benchmark used throughout the test suite.
    pub fn reference(seed: u64) -> Self {
        Self {
            classes: 6,
            modalities: 2,
            d_in: 16,
            n_train: 2000,
            n_val: 500,
            n_test: 1000,
            sigma: 1.2,
            rho_conflict: 0.25,
            rho_noise: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(AcrError::invalid_config("need at least two classes"));
        }
        if self.modalities == 0 {
            return Err(AcrError::invalid_config("need at least one modality"));
        }
        if self.d_in == 0 {
            return Err(AcrError::invalid_config("d_in must be positive"));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(AcrError::invalid_config("split sizes must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(AcrError::invalid_config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        for (name, rho) in [("rho_conflict", self.rho_conflict), ("rho_noise", self.rho_noise)] {
            if !(0.0..1.0).contains(&rho) {
                return Err(AcrError::invalid_config(format!(
                    "{name} must lie in [0, 1), got {rho}"
                )));
            }
        }
        if self.rho_conflict + self.rho_noise >= 1.0 {
            return Err(AcrError::invalid_config(
                "rho_conflict + rho_noise must be < 1",
            ));
        }
        if self.rho_conflict > 0.0 && self.modalities < 2 {
            return Err(AcrError::invalid_config(
                "conflict samples need at least two modalities",
            ));
        }
        Ok(())
    }
}

/// Provenance of a sample's corruption, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFlag {
    Clean,
    /// Modality 2 carries a wrong-class prototype.
    Conflict,
    /// The named modality (0-based) is pure noise.
    Noisy { modality: usize },
}

impl fmt::Display for SampleFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Clean => write!(f, "clean"),
            Self::Conflict => write!(f, "conflict"),
            Self::Noisy { modality } => write!(f, "noisy:{}", modality + 1),
        }
    }
}

impl SampleFlag {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "clean" => Ok(Self::Clean),
            "conflict" => Ok(Self::Conflict),
            other => {
                if let Some(idx) = other.strip_prefix("noisy:") {
                    let modality: usize = idx.parse().map_err(|_| {
                        AcrError::invalid_input(format!("bad noisy modality '{idx}'"))
                    })?;
                    if modality == 0 {
                        return Err(AcrError::invalid_input(
                            "noisy modality index is 1-based",
                        ));
                    }
                    Ok(Self::Noisy { modality: modality - 1 })
                } else {
                    Err(AcrError::invalid_input(format!("unknown flag '{other}'")))
                }
            }
        }
    }
}

/// Per-modality raw feature matrices with labels and provenance flags.
#[derive(Clone, Debug, PartialEq)]
pub struct MultimodalBatch<T> {
    /// One `n × d_in` matrix per modality.
    pub x: Vec<Matrix<T>>,
    pub labels: Vec<usize>,
    pub flags: Vec<SampleFlag>,
}

impl<T: Real> MultimodalBatch<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn modalities(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplits<T> {
    pub train: MultimodalBatch<T>,
    pub val: MultimodalBatch<T>,
    pub test: MultimodalBatch<T>,
}

fn balanced_labels(n: usize, classes: usize, rng: &mut RandomStream) -> Vec<usize> {
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        labels.push(i % classes);
    }
    rng.shuffle(&mut labels);
    labels
}

fn flag_multiset(n: usize, cfg: &SynthConfig, rng: &mut RandomStream) -> Vec<SampleFlag> {
    let n_conflict = (cfg.rho_conflict * n as f64).round() as usize;
    let n_noisy = ((cfg.rho_noise * n as f64).round() as usize).min(n - n_conflict);
    let mut flags = Vec::with_capacity(n);
    flags.extend(std::iter::repeat_n(SampleFlag::Conflict, n_conflict));
    // Placeholder modality; the actual corrupted stream is drawn per sample.
    flags.extend(std::iter::repeat_n(SampleFlag::Noisy { modality: 0 }, n_noisy));
    flags.extend(std::iter::repeat_n(SampleFlag::Clean, n - n_conflict - n_noisy));
    rng.shuffle(&mut flags);
    flags
}

fn generate_split<T: Real>(
    cfg: &SynthConfig,
    prototypes: &[Vec<Vec<T>>],
    n: usize,
    rng: &mut RandomStream,
) -> MultimodalBatch<T> {
    let labels = balanced_labels(n, cfg.classes, rng);
    let mut flags = flag_multiset(n, cfg, rng);
    let sigma: T = real(cfg.sigma);
    let sigma_big: T = real(cfg.sigma * NOISY_SCALE_FACTOR);
    let mut x: Vec<Matrix<T>> = (0..cfg.modalities)
        .map(|_| Matrix::zeros(n, cfg.d_in))
        .collect();
    for i in 0..n {
        let y = labels[i];
        // Per-sample draws happen in a fixed order: the conflict class or
        // noisy modality first, then features modality by modality.
        let (wrong_class, noisy_modality) = match flags[i] {
            SampleFlag::Conflict => {
                let mut y_prime = rng.uniform_usize(0, cfg.classes - 2).expect("classes >= 2");
                if y_prime >= y {
                    y_prime += 1;
                }
                (Some(y_prime), None)
            }
            SampleFlag::Noisy { .. } => {
                let modality = rng
                    .uniform_usize(0, cfg.modalities - 1)
                    .expect("modalities >= 1");
                flags[i] = SampleFlag::Noisy { modality };
                (None, Some(modality))
            }
            SampleFlag::Clean => (None, None),
        };
        for k in 0..cfg.modalities {
            let row = x[k].row_mut(i);
            if noisy_modality == Some(k) {
                for v in row.iter_mut() {
                    *v = sigma_big * rng.normal();
                }
            } else {
                let class = if k == 1 { wrong_class.unwrap_or(y) } else { y };
                for (v, &proto) in row.iter_mut().zip(&prototypes[class][k]) {
                    *v = proto + sigma * rng.normal();
                }
            }
        }
    }
    MultimodalBatch { x, labels, flags }
}

/// Generates disjoint train/val/test splits, deterministic per seed.
/// Prototypes are shared across splits, so the splits are identically
/// distributed.
pub fn make_dataset<T: Real>(cfg: &SynthConfig) -> Result<DatasetSplits<T>> {
    cfg.validate()?;
    let root = RandomStream::new(cfg.seed);
    let mut proto_rng = root.fork("prototypes");
    let prototypes: Vec<Vec<Vec<T>>> = (0..cfg.classes)
        .map(|_| {
            (0..cfg.modalities)
                .map(|_| (0..cfg.d_in).map(|_| proto_rng.normal()).collect())
                .collect()
        })
        .collect();
    let split = |name: &str, n: usize| {
        let mut rng = root.fork(&format!("split/{name}"));
        generate_split(cfg, &prototypes, n, &mut rng)
    };
    Ok(DatasetSplits {
        train: split("train", cfg.n_train),
        val: split("val", cfg.n_val),
        test: split("test", cfg.n_test),
    })
}

/// Adds seeded noise of scale `sigma_shift` to one modality's inputs,
/// leaving labels and the other modalities untouched. A zero shift returns
/// the batch bitwise unchanged.
pub fn apply_shift<T: Real>(
    batch: &MultimodalBatch<T>,
    modality: usize,
    sigma_shift: f64,
    rng: &mut RandomStream,
) -> Result<MultimodalBatch<T>> {
    if modality >= batch.modalities() {
        return Err(AcrError::invalid_input(format!(
            "shift modality {modality} out of range for {} modalities",
            batch.modalities()
        )));
    }
    if !(sigma_shift.is_finite() && sigma_shift >= 0.0) {
        return Err(AcrError::invalid_input(format!(
            "sigma_shift must be non-negative, got {sigma_shift}"
        )));
    }
    let mut shifted = batch.clone();
    if sigma_shift == 0.0 {
        return Ok(shifted);
    }
    let scale: T = real(sigma_shift);
    for v in shifted.x[modality].data_mut() {
        *v = *v + scale * rng.normal();
    }
    Ok(shifted)
}

/// Writes one CSV per modality into `dir` with the header
/// `sample_id,label,flag,f0..f{d_in-1}`; files are named
/// `{split}_mod{k}.csv` with `k` 1-based.
pub fn write_csv<T: Real>(batch: &MultimodalBatch<T>, dir: &Path, split: &str) -> Result<()> {
    use std::fmt::Write as _;
    std::fs::create_dir_all(dir)?;
    for (k, x) in batch.x.iter().enumerate() {
        let mut out = String::from("sample_id,label,flag");
        for d in 0..x.cols() {
            let _ = write!(out, ",f{d}");
        }
        out.push('\n');
        for i in 0..batch.len() {
            let _ = write!(out, "{i},{},{}", batch.labels[i], batch.flags[i]);
            for &v in x.row(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        std::fs::write(dir.join(format!("{split}_mod{}.csv", k + 1)), out)?;
    }
    Ok(())
}

/// Reads the per-modality CSVs written by [`write_csv`] back into a batch,
/// validating that labels and flags agree across modality files.
pub fn read_csv<T: Real>(dir: &Path, split: &str, modalities: usize) -> Result<MultimodalBatch<T>> {
    if modalities == 0 {
        return Err(AcrError::invalid_input("need at least one modality"));
    }
    let mut x = Vec::with_capacity(modalities);
    let mut labels: Option<Vec<usize>> = None;
    let mut flags: Option<Vec<SampleFlag>> = None;
    for k in 0..modalities {
        let path = dir.join(format!("{split}_mod{}.csv", k + 1));
        let text = std::fs::read_to_string(&path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| AcrError::Parse { line: 1, message: "empty file".to_string() })?;
        let d_in = header.split(',').count().saturating_sub(3);
        if d_in == 0 {
            return Err(AcrError::Parse {
                line: 1,
                message: "header must be sample_id,label,flag,f0,...".to_string(),
            });
        }
        let mut file_labels = Vec::new();
        let mut file_flags = Vec::new();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d_in + 3 {
                return Err(AcrError::Parse {
                    line: lineno,
                    message: format!("expected {} fields, got {}", d_in + 3, fields.len()),
                });
            }
            let label: usize = fields[1].parse().map_err(|_| AcrError::Parse {
                line: lineno,
                message: format!("bad label '{}'", fields[1]),
            })?;
            let flag = SampleFlag::parse(fields[2]).map_err(|e| AcrError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let mut row = Vec::with_capacity(d_in);
            for f in &fields[3..] {
                let v: f64 = f.parse().map_err(|_| AcrError::Parse {
                    line: lineno,
                    message: format!("bad feature value '{f}'"),
                })?;
                row.push(real::<T>(v));
            }
            file_labels.push(label);
            file_flags.push(flag);
            rows.push(row);
        }
        match (&labels, &flags) {
            (None, _) => {
                labels = Some(file_labels);
                flags = Some(file_flags);
            }
            (Some(l), Some(f)) => {
                if *l != file_labels || *f != file_flags {
                    return Err(AcrError::invalid_input(format!(
                        "labels/flags in {} disagree with the first modality file",
                        path.display()
                    )));
                }
            }
            _ => unreachable!(),
        }
        x.push(Matrix::from_rows(&rows)?);
    }
    Ok(MultimodalBatch {
        x,
        labels: labels.unwrap_or_default(),
        flags: flags.unwrap_or_default(),
    })
}
