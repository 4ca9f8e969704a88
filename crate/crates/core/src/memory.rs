//! Class-level memory bank: one prototype per cluster, a softmax
//! contrastive loss over prototype similarities, and momentum updates.
//!
//! Storage is `K x dim` values regardless of how many instances are
//! clustered.

use serde::{Deserialize, Serialize};

use crate::dbscan::Clustering;
use crate::embedding::{dot, normalize_in_place, EmbeddingSet};
use crate::error::{Result, UcfError};
use crate::ucis::SelectionMask;

/// Default prototype momentum.
pub const DEFAULT_MOMENTUM: f64 = 0.2;
/// Default softmax temperature.
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryBank {
    k: usize,
    dim: usize,
    prototypes: Vec<f64>,
    momentum: f64,
    tau: f64,
    renormalize: bool,
}

impl MemoryBank {
    /// Builds a bank from explicit prototype rows.
    pub fn from_prototypes(
        k: usize,
        dim: usize,
        prototypes: Vec<f64>,
        momentum: f64,
        tau: f64,
    ) -> Result<Self> {
        check_params(momentum, tau)?;
        if prototypes.len() != k * dim {
            return Err(UcfError::Shape {
                expected: k * dim,
                got: prototypes.len(),
            });
        }
        Ok(Self {
            k,
            dim,
            prototypes,
            momentum,
            tau,
            renormalize: true,
        })
    }

    /// Disables (or re-enables) re-normalization after each update.
    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn prototype(&self, k: usize) -> &[f64] {
        &self.prototypes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn prototypes(&self) -> &[f64] {
        &self.prototypes
    }

    /// Number of stored values, always `K * dim`.
    pub fn storage_len(&self) -> usize {
        self.prototypes.len()
    }

    fn check_index(&self, pos: usize) -> Result<()> {
        if pos >= self.k {
            return Err(UcfError::BadIndex {
                index: pos,
                k: self.k,
            });
        }
        Ok(())
    }

    fn check_feature(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim {
            return Err(UcfError::Shape {
                expected: self.dim,
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Softmax over `<f, c_k> / tau`, computed with max subtraction.
    fn probabilities(&self, f: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.k)
            .map(|k| dot(f, self.prototype(k)) / self.tau)
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    /// `-log softmax(<f, c> / tau)[pos]`.
    pub fn contrastive_loss(&self, f: &[f64], pos: usize) -> Result<f64> {
        self.check_index(pos)?;
        self.check_feature(f)?;
        Ok(log_softmax_loss(
            &(0..self.k)
                .map(|k| dot(f, self.prototype(k)) / self.tau)
                .collect::<Vec<_>>(),
            pos,
        ))
    }

    /// Gradient of [`contrastive_loss`](Self::contrastive_loss) with respect
    /// to `f`: `(1 / tau) * sum_k (p_k - [k == pos]) c_k`.
    pub fn contrastive_grad(&self, f: &[f64], pos: usize) -> Result<Vec<f64>> {
        self.check_index(pos)?;
        self.check_feature(f)?;
        let p = self.probabilities(f);
        let mut grad = vec![0.0; self.dim];
        for (k, &pk) in p.iter().enumerate() {
            let w = (pk - if k == pos { 1.0 } else { 0.0 }) / self.tau;
            if w != 0.0 {
                for (g, c) in grad.iter_mut().zip(self.prototype(k)) {
                    *g += w * c;
                }
            }
        }
        Ok(grad)
    }

    /// `c_k <- m c_k + (1 - m) f`, then re-normalized. Other rows are untouched.
    pub fn update_prototype(&mut self, k: usize, f: &[f64]) -> Result<()> {
        self.check_index(k)?;
        self.check_feature(f)?;
        let m = self.momentum;
        let dim = self.dim;
        let row = &mut self.prototypes[k * dim..(k + 1) * dim];
        for (c, x) in row.iter_mut().zip(f) {
            *c = m * *c + (1.0 - m) * x;
        }
        if self.renormalize {
            normalize_in_place(row);
        }
        Ok(())
    }
}

/// Numerically stable `-log(exp(z_pos) / sum_k exp(z_k))`.
pub fn log_softmax_loss(logits: &[f64], pos: usize) -> f64 {
    let top = (0..logits.len())
        .max_by(|&a, &b| logits[a].total_cmp(&logits[b]).then(b.cmp(&a)))
        .expect("at least one logit");
    let max = logits[top];
    // log-sum-exp as max + ln(1 + rest), so a dominant positive keeps full precision
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, z)| (z - max).exp())
        .sum();
    ((max - logits[pos]) + rest.ln_1p()).max(0.0)
}

fn check_params(momentum: f64, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&momentum) {
        return Err(UcfError::BadParam(format!(
            "momentum must lie in [0, 1], got {momentum}"
        )));
    }
    if !(tau > 0.0) {
        return Err(UcfError::BadParam(format!(
            "tau must be positive, got {tau}"
        )));
    }
    Ok(())
}

/// Prototype `k` is the normalized mean of the selected members of cluster `k`.
pub fn init_memory(
    emb: &EmbeddingSet,
    clustering: &Clustering,
    mask: &SelectionMask,
    momentum: f64,
    tau: f64,
) -> Result<MemoryBank> {
    check_params(momentum, tau)?;
    if emb.n() != clustering.n() {
        return Err(UcfError::LengthMismatch(emb.n(), clustering.n()));
    }
    if mask.n != clustering.n() {
        return Err(UcfError::LengthMismatch(mask.n, clustering.n()));
    }
    let (k, dim) = (clustering.k(), emb.dim());
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for i in 0..emb.n() {
        if let (Some(l), true) = (clustering.label(i), mask.selected[i]) {
            counts[l] += 1;
            for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(emb.row(i)) {
                *s += x;
            }
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(UcfError::EmptyCluster(empty));
    }
    for (row, &count) in sums.chunks_exact_mut(dim).zip(&counts) {
        row.iter_mut().for_each(|s| *s /= count as f64);
        normalize_in_place(row);
    }
    MemoryBank::from_prototypes(k, dim, sums, momentum, tau)
}
