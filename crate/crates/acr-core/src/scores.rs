//! Confidence-scoring functions κ(·): logits or probabilities in, one scalar
//! out, where higher always means "more likely correct".
//!
//! MSP, Entropy, DOCTOR, and GEN consume probabilities; MaxLogit and Energy
//! consume raw logits. For the fused head, which carries an extra outlier
//! class, [`score_fused_logits`] restricts to the first `C` entries of the
//! softmax over all `C+1` logits without renormalizing (the default; a
//! `renormalize` switch enables the alternative).

use crate::error::{AcrError, Result};
use crate::numerics::{logsumexp, softmax};
use crate::{real, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DoctorVariant {
    Alpha,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    Msp,
    MaxLogit,
    Energy,
    Entropy,
    DoctorAlpha,
    DoctorBeta,
    Gen,
}

/// A scorer plus its hyperparameters. `temperature` applies to Energy only,
/// `gamma` and `top_m` to GEN only; `top_m = None` resolves to `min(C, 100)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    pub temperature: f64,
    pub gamma: f64,
    pub top_m: Option<usize>,
}

impl ScorerSpec {
    pub fn new(kind: ScorerKind) -> Self {
        Self {
            kind,
            temperature: 1.0,
            gamma: 0.1,
            top_m: None,
        }
    }

    /// Parses the CLI / config scorer name.
    pub fn from_name(name: &str) -> Result<Self> {
        let kind = match name {
            "msp" => ScorerKind::Msp,
            "maxlogit" => ScorerKind::MaxLogit,
            "energy" => ScorerKind::Energy,
            "entropy" => ScorerKind::Entropy,
            "doctor" | "doctor_a" => ScorerKind::DoctorAlpha,
            "doctor_b" => ScorerKind::DoctorBeta,
            "gen" => ScorerKind::Gen,
            other => {
                return Err(AcrError::invalid_config(format!(
                    "unknown scorer '{other}' (expected msp|maxlogit|energy|entropy|doctor_a|doctor_b|gen)"
                )))
            }
        };
        Ok(Self::new(kind))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScorerKind::Msp => "msp",
            ScorerKind::MaxLogit => "maxlogit",
            ScorerKind::Energy => "energy",
            ScorerKind::Entropy => "entropy",
            ScorerKind::DoctorAlpha => "doctor_a",
            ScorerKind::DoctorBeta => "doctor_b",
            ScorerKind::Gen => "gen",
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.temperature <= 0.0 || !self.temperature.is_finite() {
            return Err(AcrError::invalid_config(format!(
                "energy temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(AcrError::invalid_config(format!(
                "gen gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        let top_m = self.resolved_top_m(classes);
        if top_m == 0 || top_m > classes {
            return Err(AcrError::invalid_config(format!(
                "gen top_m must lie in [1, {classes}], got {top_m}"
            )));
        }
        Ok(())
    }

    pub fn resolved_top_m(&self, classes: usize) -> usize {
        self.top_m.unwrap_or_else(|| classes.min(100))
    }
}

/// Maximum softmax probability.
pub fn score_msp<T: Real>(probs: &[T]) -> Result<T> {
    if probs.is_empty() {
        return Err(AcrError::invalid_input("msp of an empty vector"));
    }
    Ok(probs.iter().copied().fold(T::neg_infinity(), T::max))
}

/// Largest raw logit.
pub fn score_maxlogit<T: Real>(logits: &[T]) -> Result<T> {
    if logits.is_empty() {
        return Err(AcrError::invalid_input("maxlogit of an empty vector"));
    }
    Ok(logits.iter().copied().fold(T::neg_infinity(), T::max))
}

/// Negative free energy `T·logsumexp(logits/T)`; higher is more confident.
pub fn score_energy<T: Real>(logits: &[T], temperature: T) -> Result<T> {
    if temperature <= T::zero() {
        return Err(AcrError::invalid_input(format!(
            "energy temperature must be positive, got {temperature}"
        )));
    }
    let scaled: Vec<T> = logits.iter().map(|&z| z / temperature).collect();
    Ok(temperature * logsumexp(&scaled)?)
}

/// Negated Shannon entropy `Σ pᵢ ln pᵢ`, with `0·ln 0 := 0`.
pub fn score_entropy<T: Real>(probs: &[T]) -> Result<T> {
    if probs.is_empty() {
        return Err(AcrError::invalid_input("entropy of an empty vector"));
    }
    let mut acc = T::zero();
    for &p in probs {
        if p > T::zero() {
            acc = acc + p * p.ln();
        }
    }
    Ok(acc)
}

/// DOCTOR scores, sign-flipped so higher means more confident.
///
/// Alpha: with `ĝ = Σ pᵢ²`, returns `−(1−ĝ)/ĝ`.
/// Beta: with `p̂e = 1 − max p`, returns `−p̂e/(1−p̂e)`, and 0 when `max p = 1`.
pub fn score_doctor<T: Real>(probs: &[T], variant: DoctorVariant) -> Result<T> {
    if probs.is_empty() {
        return Err(AcrError::invalid_input("doctor of an empty vector"));
    }
    match variant {
        DoctorVariant::Alpha => {
            let g = probs.iter().fold(T::zero(), |a, &p| a + p * p);
            Ok(-((T::one() - g) / g))
        }
        DoctorVariant::Beta => {
            let top = score_msp(probs)?;
            let pe = T::one() - top;
            if pe <= T::zero() {
                return Ok(T::zero());
            }
            Ok(-(pe / (T::one() - pe)))
        }
    }
}

/// Generalized entropy score `−Σ_{j ∈ top-m} pⱼ^γ (1−pⱼ)^γ` over the `top_m`
/// largest probabilities; the one-hot distribution attains the maximum, 0.
pub fn score_gen<T: Real>(probs: &[T], gamma: T, top_m: usize) -> Result<T> {
    if probs.is_empty() {
        return Err(AcrError::invalid_input("gen of an empty vector"));
    }
    if gamma <= T::zero() || gamma >= T::one() {
        return Err(AcrError::invalid_input(format!(
            "gen gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if top_m == 0 || top_m > probs.len() {
        return Err(AcrError::invalid_input(format!(
            "gen top_m must lie in [1, {}], got {top_m}",
            probs.len()
        )));
    }
    let mut sorted: Vec<T> = probs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite probabilities"));
    let mut acc = T::zero();
    for &p in sorted.iter().take(top_m) {
        acc = acc + p.powf(gamma) * (T::one() - p).powf(gamma);
    }
    Ok(-acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Correct,
    Misclassified,
}

/// Accept the prediction as correct iff `score ≥ tau` (boundary inclusive).
pub fn decide<T: Real>(score: T, tau: T) -> Decision {
    if score >= tau {
        Decision::Correct
    } else {
        Decision::Misclassified
    }
}

/// Applies a scorer to one fused-logit row over `classes + 1` entries, where
/// the last entry is the reserved outlier class.
///
/// Logit-based scorers see only the first `classes` logits. Probability-based
/// scorers see the softmax over all `classes + 1` logits restricted to the
/// first `classes` entries; with `renormalize` the restriction is rescaled to
/// sum to one.
pub fn score_fused_logits<T: Real>(
    spec: &ScorerSpec,
    logits: &[T],
    classes: usize,
    renormalize: bool,
) -> Result<T> {
    if logits.len() != classes + 1 {
        return Err(AcrError::shape_mismatch(format!(
            "fused logits must have {} entries (classes + outlier), got {}",
            classes + 1,
            logits.len()
        )));
    }
    match spec.kind {
        ScorerKind::MaxLogit => score_maxlogit(&logits[..classes]),
        ScorerKind::Energy => score_energy(&logits[..classes], real(spec.temperature)),
        _ => {
            let full = softmax(logits)?;
            let mut restricted = full[..classes].to_vec();
            if renormalize {
                let sum = restricted.iter().copied().fold(T::zero(), |a, b| a + b);
                for p in &mut restricted {
                    *p = *p / sum;
                }
            }
            score_probs(spec, &restricted)
        }
    }
}

/// Applies a probability-based scorer to a probability vector.
pub fn score_probs<T: Real>(spec: &ScorerSpec, probs: &[T]) -> Result<T> {
    match spec.kind {
        ScorerKind::Msp => score_msp(probs),
        ScorerKind::Entropy => score_entropy(probs),
        ScorerKind::DoctorAlpha => score_doctor(probs, DoctorVariant::Alpha),
        ScorerKind::DoctorBeta => score_doctor(probs, DoctorVariant::Beta),
        ScorerKind::Gen => score_gen(probs, real(spec.gamma), spec.resolved_top_m(probs.len())),
        ScorerKind::MaxLogit | ScorerKind::Energy => Err(AcrError::invalid_input(
            "maxlogit/energy consume logits, not probabilities",
        )),
    }
}
