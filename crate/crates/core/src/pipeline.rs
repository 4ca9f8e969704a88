//! One epoch of pseudo-label generation: distances and hierarchical
//! clustering on both views, collaborative selection, then a memory-bank
//! sweep over the selected instances.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dbscan::{Clustering, DEFAULT_EPS, DEFAULT_MIN_PTS};
use crate::distance::{build_distances, DistanceKind, DEFAULT_K1};
use crate::embedding::EmbeddingSet;
use crate::error::{Result, UcfError};
use crate::memory::{init_memory, MemoryBank, DEFAULT_MOMENTUM, DEFAULT_TAU};
use crate::metrics::{nmi, purity};
use crate::reliability::{hierarchical_cluster_detailed, DEFAULT_ALPHA};
use crate::ucis::{select_reliable, SelectionMask, DEFAULT_BETA, DEFAULT_SIGMA};

/// Version tag written into every report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub eps: f64,
    pub min_pts: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub momentum: f64,
    pub tau: f64,
    pub k1: usize,
    pub distance: DistanceKind,
    pub seed: u64,
    pub renormalize: bool,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            min_pts: DEFAULT_MIN_PTS,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            sigma: DEFAULT_SIGMA,
            momentum: DEFAULT_MOMENTUM,
            tau: DEFAULT_TAU,
            k1: DEFAULT_K1,
            distance: DistanceKind::Jaccard,
            seed: 0,
            renormalize: true,
        }
    }
}

impl EpochConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| UcfError::BadParam(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "eps" | "d" => self.eps = parse(key, value)?,
            "min_pts" => self.min_pts = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "m" | "momentum" => self.momentum = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "k1" => self.k1 = parse(key, value)?,
            "dist" | "distance" => self.distance = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "renorm" | "renormalize" => self.renormalize = parse(key, value)?,
            other => return Err(UcfError::BadParam(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key=value` file on top of the defaults. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut offset = 0;
        for line in text.lines() {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                let (key, value) = trimmed.split_once('=').ok_or_else(|| UcfError::Malformed {
                    offset,
                    reason: format!("expected key=value, got `{trimmed}`"),
                })?;
                cfg.set(key.trim(), value.trim())?;
            }
            offset += line.len() + 1;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to the `key=value` format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eps={}", self.eps);
        let _ = writeln!(s, "min_pts={}", self.min_pts);
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "beta={}", self.beta);
        let _ = writeln!(s, "sigma={}", self.sigma);
        let _ = writeln!(s, "m={}", self.momentum);
        let _ = writeln!(s, "tau={}", self.tau);
        let _ = writeln!(s, "k1={}", self.k1);
        let _ = writeln!(s, "dist={}", self.distance);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "renorm={}", self.renormalize);
        s
    }
}

/// Summary of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub schema_version: u32,
    pub n: usize,
    pub k_coarse: usize,
    pub k_final: usize,
    pub decomposed: usize,
    pub selected: usize,
    pub selected_fraction: f64,
    pub nmi_vs_truth: Option<f64>,
    pub nmi_coarse_vs_truth: Option<f64>,
    pub purity_selected: Option<f64>,
    pub purity_all: Option<f64>,
    pub mean_loss: f64,
    /// The sweep only updates the memory bank; no encoder is trained.
    pub loss_scope: String,
}

impl EpochReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| UcfError::Malformed {
                offset: 0,
                reason: "missing schema_version".into(),
            })?;
        if version != u64::from(REPORT_SCHEMA_VERSION) {
            return Err(UcfError::UnsupportedVersion(version as u32));
        }
        Ok(serde_json::from_value(value)?)
    }
}

pub fn write_report(path: &Path, report: &EpochReport) -> Result<()> {
    let mut text = report.to_json()?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<EpochReport> {
    EpochReport::from_json(&std::fs::read_to_string(path)?)
}

/// Everything an epoch produces.
#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub clustering: Clustering,
    pub mask: SelectionMask,
    pub bank: MemoryBank,
    pub report: EpochReport,
}

/// Runs one epoch over the main view and its temporally averaged view.
pub fn run_epoch(
    main: &EmbeddingSet,
    mean: &EmbeddingSet,
    cfg: &EpochConfig,
    truth: Option<&[i32]>,
) -> Result<EpochOutcome> {
    if main.n() != mean.n() {
        return Err(UcfError::LengthMismatch(main.n(), mean.n()));
    }
    if let Some(t) = truth {
        if t.len() != main.n() {
            return Err(UcfError::LengthMismatch(main.n(), t.len()));
        }
    }

    let main_dist = build_distances(main, cfg.distance, cfg.k1)?;
    let mean_dist = build_distances(mean, cfg.distance, cfg.k1)?;
    let main_hc = hierarchical_cluster_detailed(&main_dist, cfg.eps, cfg.alpha, cfg.min_pts)?;
    let mean_hc = hierarchical_cluster_detailed(&mean_dist, cfg.eps, cfg.alpha, cfg.min_pts)?;

    let mask = select_reliable(&main_hc.refined, &mean_hc.refined, cfg.beta)?;
    let selected = mask.selected_count();
    if selected == 0 {
        return Err(UcfError::NoSelectedInstances);
    }

    let mut kept = vec![false; main_hc.refined.k()];
    for i in 0..main.n() {
        if mask.selected[i] {
            kept[main_hc
                .refined
                .label(i)
                .expect("selected instances are clustered")] = true;
        }
    }
    let emptied: Vec<usize> = (0..kept.len()).filter(|&k| !kept[k]).collect();
    let clustering = main_hc.refined.drop_clusters(&emptied);

    let mut bank = init_memory(main, &clustering, &mask, cfg.momentum, cfg.tau)?
        .with_renormalize(cfg.renormalize);
    let mut total_loss = 0.0;
    for i in (0..main.n()).filter(|&i| mask.selected[i]) {
        let k = clustering
            .label(i)
            .expect("selected instances are clustered");
        total_loss += bank.contrastive_loss(main.row(i), k)?;
        bank.update_prototype(k, main.row(i))?;
    }

    let (nmi_vs_truth, nmi_coarse_vs_truth, purity_selected, purity_all) = match truth {
        Some(t) => (
            Some(nmi(clustering.labels(), t)?),
            Some(nmi(main_hc.coarse.labels(), t)?),
            Some(purity(clustering.labels(), t, Some(&mask.selected))?),
            Some(purity(clustering.labels(), t, None)?),
        ),
        None => (None, None, None, None),
    };

    let report = EpochReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: main.n(),
        k_coarse: main_hc.coarse.k(),
        k_final: clustering.k(),
        decomposed: main_hc.decomposed.len(),
        selected,
        selected_fraction: mask.selected_fraction(),
        nmi_vs_truth,
        nmi_coarse_vs_truth,
        purity_selected,
        purity_all,
        mean_loss: total_loss / selected as f64,
        loss_scope: "bank-only".to_string(),
    };
    Ok(EpochOutcome {
        clustering,
        mask,
        bank,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = EpochConfig::default();
        assert_eq!(EpochConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn defaults() {
        let cfg = EpochConfig::default();
        assert_eq!(cfg.eps, 0.6);
        assert_eq!(cfg.min_pts, 4);
        assert_eq!(cfg.alpha, 0.0);
        assert_eq!(cfg.beta, 0.8);
        assert_eq!(cfg.sigma, 0.999);
        assert_eq!(cfg.momentum, 0.2);
        assert_eq!(cfg.tau, 0.05);
        assert_eq!(cfg.k1, 30);
        assert_eq!(cfg.distance, DistanceKind::Jaccard);
    }

    #[test]
    fn config_file_overrides() {
        let cfg = EpochConfig::parse("# tuned\neps = 0.5\n\nbeta=0.6\ndist=euclidean\n").unwrap();
        assert_eq!(cfg.eps, 0.5);
        assert_eq!(cfg.beta, 0.6);
        assert_eq!(cfg.distance, DistanceKind::Euclidean);
        assert_eq!(cfg.min_pts, 4);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            EpochConfig::parse("eps=0.5\nnonsense\n"),
            Err(UcfError::Malformed { offset: 8, .. })
        ));
        assert!(EpochConfig::parse("colour=red").is_err());
        assert!(EpochConfig::parse("k1=-3").is_err());
    }

    #[test]
    fn report_version_is_checked() {
        let report = EpochReport {
            schema_version: REPORT_SCHEMA_VERSION,
            n: 1,
            k_coarse: 1,
            k_final: 1,
            decomposed: 0,
            selected: 1,
            selected_fraction: 1.0,
            nmi_vs_truth: None,
            nmi_coarse_vs_truth: None,
            purity_selected: None,
            purity_all: None,
            mean_loss: 0.0,
            loss_scope: "bank-only".into(),
        };
        let json = report.to_json().unwrap();
        assert_eq!(EpochReport::from_json(&json).unwrap(), report);
        let bumped = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(
            EpochReport::from_json(&bumped),
            Err(UcfError::UnsupportedVersion(2))
        ));
    }
}
