use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ucf_core::io::{
    read_embeddings, read_json, read_raw, write_emb1, write_embeddings, write_json,
};
use ucf_core::memory::MemoryBank;
use ucf_core::pipeline::write_report;
use ucf_core::{
    build_distances, dbscan, ema_update, generate_synthetic, hierarchical_cluster_detailed, nmi,
    purity, run_epoch, select_reliable, Clustering, DistanceKind, EpochConfig, ParamVector,
    SynthConfig, UcfError,
};

const EXIT_MALFORMED: u8 = 2;
const EXIT_EMPTY_SELECTION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ucf",
    version,
    about = "Uncertainty-aware clustering of embedding matrices"
)]
struct Cli {
    /// Seed for synthetic data and the epoch config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value config file applied before command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate main and mean views with ground truth.
    Synth(SynthArgs),
    /// Pairwise distance matrix of an embedding file.
    Dist {
        input: PathBuf,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Plain DBSCAN.
    Cluster {
        input: PathBuf,
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
    },
    /// Coarse DBSCAN followed by decomposition of low-silhouette clusters.
    Refine {
        input: PathBuf,
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
    },
    /// Instance uncertainty and selection from two clustering files.
    Select {
        main: PathBuf,
        mean: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Contrastive loss of each feature row against a prototype bank.
    Loss {
        bank: PathBuf,
        features: PathBuf,
        /// Positive prototype per feature row, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        pos: Vec<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Exponential moving average of two embedding files.
    Ema {
        avg: PathBuf,
        current: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// One full epoch: clustering, selection and a memory-bank sweep.
    Epoch(EpochArgs),
    /// NMI and purity of a clustering against ground truth.
    Eval {
        clustering: PathBuf,
        /// JSON label array, or an embedding file carrying labels.
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    identities: Option<usize>,
    #[arg(long)]
    per_id: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    confusable_pairs: Option<usize>,
    #[arg(long)]
    view_drift: Option<f64>,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long)]
    dist: Option<DistanceKind>,
    #[arg(long)]
    k1: Option<usize>,
}

#[derive(Args)]
struct EpochArgs {
    main: PathBuf,
    mean: PathBuf,
    /// Ground truth; defaults to labels stored in the main file.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Keep prototypes unnormalized after momentum updates.
    #[arg(long)]
    no_renorm: bool,
}

fn load_config(cli: &Cli) -> Result<EpochConfig> {
    let mut cfg = match &cli.config {
        Some(path) => EpochConfig::load(path)?,
        None => EpochConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_dist(cfg: &mut EpochConfig, d: &DistArgs) {
    if let Some(kind) = d.dist {
        cfg.distance = kind;
    }
    if let Some(k1) = d.k1 {
        cfg.k1 = k1;
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(cli.out.join(name))
}

fn emit<T: Serialize>(cli: &Cli, name: &str, value: &T) -> Result<()> {
    let path = out_path(cli, name)?;
    write_json(&path, value)?;
    println!("{}", path.display());
    Ok(())
}

fn read_truth(path: &Path) -> Result<Vec<i32>> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(read_json(path)?);
    }
    match read_raw(path)?.labels {
        Some(labels) => Ok(labels),
        None => bail!(UcfError::Malformed {
            offset: 0,
            reason: format!("{} carries no labels", path.display()),
        }),
    }
}

#[derive(Serialize)]
struct SilhouetteOut<'a> {
    per_instance: &'a [Option<f64>],
    per_cluster: &'a [f64],
    alpha: f64,
    decomposed: &'a [usize],
}

#[derive(Serialize)]
struct SelectionOut<'a> {
    uncertainty: &'a [f64],
    selected: &'a [bool],
}

#[derive(Serialize)]
struct LossOut {
    tau: f64,
    loss: Vec<f64>,
}

#[derive(Serialize)]
struct EvalOut {
    nmi: f64,
    purity: f64,
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth(a) => {
            let mut sc = SynthConfig::fixture(cfg.seed);
            set(&mut sc.identities, a.identities);
            set(&mut sc.per_id, a.per_id);
            set(&mut sc.dim, a.dim);
            set(&mut sc.noise_scale, a.noise_scale);
            set(&mut sc.confusable_pairs, a.confusable_pairs);
            set(&mut sc.view_drift, a.view_drift);
            let data = generate_synthetic(&sc)?;
            write_embeddings(&out_path(cli, "main.emb1")?, &data.main, Some(&data.truth))?;
            write_embeddings(&out_path(cli, "mean.emb1")?, &data.mean, Some(&data.truth))?;
            emit(cli, "truth.json", &data.truth)?;
        }
        Command::Dist { input, dist } => {
            apply_dist(&mut cfg, dist);
            let emb = read_embeddings(input)?.set;
            emit(
                cli,
                "distances.json",
                &build_distances(&emb, cfg.distance, cfg.k1)?,
            )?;
        }
        Command::Cluster {
            input,
            dist,
            eps,
            min_pts,
        } => {
            apply_dist(&mut cfg, dist);
            set(&mut cfg.eps, *eps);
            set(&mut cfg.min_pts, *min_pts);
            let emb = read_embeddings(input)?.set;
            let d = build_distances(&emb, cfg.distance, cfg.k1)?;
            emit(cli, "clustering.json", &dbscan(&d, cfg.eps, cfg.min_pts)?)?;
        }
        Command::Refine {
            input,
            dist,
            eps,
            alpha,
            min_pts,
        } => {
            apply_dist(&mut cfg, dist);
            set(&mut cfg.eps, *eps);
            set(&mut cfg.alpha, *alpha);
            set(&mut cfg.min_pts, *min_pts);
            let emb = read_embeddings(input)?.set;
            let d = build_distances(&emb, cfg.distance, cfg.k1)?;
            let out = hierarchical_cluster_detailed(&d, cfg.eps, cfg.alpha, cfg.min_pts)?;
            let sil = &out.coarse_silhouette;
            emit(cli, "clustering.json", &out.refined)?;
            emit(
                cli,
                "silhouette.json",
                &SilhouetteOut {
                    per_instance: &sil.per_instance,
                    per_cluster: &sil.per_cluster,
                    alpha: sil.alpha,
                    decomposed: &out.decomposed,
                },
            )?;
        }
        Command::Select { main, mean, beta } => {
            set(&mut cfg.beta, *beta);
            let main: Clustering = read_json(main)?;
            let mean: Clustering = read_json(mean)?;
            let mask = select_reliable(&main, &mean, cfg.beta)?;
            emit(
                cli,
                "selection.json",
                &SelectionOut {
                    uncertainty: &mask.uncertainty,
                    selected: &mask.selected,
                },
            )?;
            if mask.selected_count() == 0 {
                eprintln!("error: no instance passed the selection threshold");
                return Ok(ExitCode::from(EXIT_EMPTY_SELECTION));
            }
        }
        Command::Loss {
            bank,
            features,
            pos,
            tau,
        } => {
            set(&mut cfg.tau, *tau);
            let raw = read_raw(bank)?;
            let bank =
                MemoryBank::from_prototypes(raw.n, raw.dim, raw.data, cfg.momentum, cfg.tau)?;
            let feats = read_embeddings(features)?.set;
            if feats.dim() != bank.dim() {
                bail!(UcfError::Shape {
                    expected: bank.dim(),
                    got: feats.dim()
                });
            }
            if pos.len() != feats.n() {
                bail!(UcfError::LengthMismatch(feats.n(), pos.len()));
            }
            let loss = feats
                .rows()
                .zip(pos)
                .map(|(f, &p)| bank.contrastive_loss(f, p))
                .collect::<ucf_core::Result<Vec<f64>>>()?;
            emit(cli, "loss.json", &LossOut { tau: cfg.tau, loss })?;
        }
        Command::Ema {
            avg,
            current,
            sigma,
        } => {
            set(&mut cfg.sigma, *sigma);
            let a = read_raw(avg)?;
            let c = read_raw(current)?;
            if (a.n, a.dim) != (c.n, c.dim) {
                bail!(UcfError::Shape {
                    expected: a.n * a.dim,
                    got: c.n * c.dim
                });
            }
            let next = ema_update(&ParamVector(a.data), &ParamVector(c.data), cfg.sigma)?;
            let path = out_path(cli, "ema.emb1")?;
            write_emb1(&path, c.n, c.dim, next.as_slice(), c.labels.as_deref())?;
            println!("{}", path.display());
        }
        Command::Epoch(a) => {
            apply_dist(&mut cfg, &a.dist);
            set(&mut cfg.eps, a.eps);
            set(&mut cfg.min_pts, a.min_pts);
            set(&mut cfg.alpha, a.alpha);
            set(&mut cfg.beta, a.beta);
            set(&mut cfg.momentum, a.momentum);
            set(&mut cfg.tau, a.tau);
            if a.no_renorm {
                cfg.renormalize = false;
            }
            let main = read_embeddings(&a.main)?;
            let mean = read_embeddings(&a.mean)?.set;
            let truth = match &a.truth {
                Some(path) => Some(read_truth(path)?),
                None => main.labels.clone(),
            };
            let out = match run_epoch(&main.set, &mean, &cfg, truth.as_deref()) {
                Err(UcfError::NoSelectedInstances) => {
                    eprintln!("error: {}", UcfError::NoSelectedInstances);
                    return Ok(ExitCode::from(EXIT_EMPTY_SELECTION));
                }
                other => other?,
            };
            emit(cli, "clustering.json", &out.clustering)?;
            emit(
                cli,
                "selection.json",
                &SelectionOut {
                    uncertainty: &out.mask.uncertainty,
                    selected: &out.mask.selected,
                },
            )?;
            let bank_path = out_path(cli, "bank.emb1")?;
            write_emb1(
                &bank_path,
                out.bank.k(),
                out.bank.dim(),
                out.bank.prototypes(),
                None,
            )?;
            let report_path = out_path(cli, "report.json")?;
            write_report(&report_path, &out.report)?;
            println!("{}", report_path.display());
        }
        Command::Eval { clustering, truth } => {
            let c: Clustering = read_json(clustering)?;
            let truth = read_truth(truth)?;
            emit(
                cli,
                "eval.json",
                &EvalOut {
                    nmi: nmi(c.labels(), &truth)?,
                    purity: purity(c.labels(), &truth, None)?,
                },
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<UcfError>() {
                Some(UcfError::NoSelectedInstances) => ExitCode::from(EXIT_EMPTY_SELECTION),
                Some(_) => ExitCode::from(EXIT_MALFORMED),
                None => ExitCode::FAILURE,
            }
        }
    }
}
