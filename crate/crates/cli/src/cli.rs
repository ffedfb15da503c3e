use std::path::PathBuf;

use boxel::config::ConfigOverrides;
use boxel::{EntityMode, RelationMode, VolumeKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Box embeddings for EL++ knowledge bases.
///
/// Exit status: 0 on success, 1 on invalid input (or a failed check), 2 on
/// runtime errors.
#[derive(Debug, Parser)]
#[command(name = "boxel", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite a knowledge base into normal forms.
    Normalize {
        /// Knowledge base to read.
        input: PathBuf,
        /// Normalized output, one tagged axiom per line.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train an embedding and write a checkpoint.
    Train(Box<TrainArgs>),
    /// Rank held-out subsumptions.
    EvalSubsumption(EvalArgs),
    /// Rank held-out role assertions.
    EvalLinks(EvalArgs),
    /// Check every normalized axiom against a checkpoint.
    Check {
        checkpoint: PathBuf,
        /// Knowledge base to check, normalized the same way as for training.
        kb: PathBuf,
        /// Per-face tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Draw a 2-dimensional checkpoint as SVG.
    Viz {
        checkpoint: PathBuf,
        /// SVG file to write.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Split subclass lines (or relation lines) into train/valid/test files.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Knowledge base to embed.
    pub kb: PathBuf,
    /// Config file with `key = value` lines; flags override it.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Checkpoint to write; a JSON name manifest goes next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Line-delimited JSON training log [default: <OUTPUT>.log.jsonl]
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags mirroring the config keys. Precedence: flag, config file, then
/// `BOXEL_SEED` for the seed, then the built-in default.
#[derive(Debug, Args)]
pub struct Overrides {
    /// Embedding dimension [default: 50]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Seed for initialization and sampling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Role maps [default: affine]
    #[arg(long, value_enum)]
    pub relation_mode: Option<RelationArg>,
    /// Individuals as points or boxes [default: point]
    #[arg(long, value_enum)]
    pub entity_mode: Option<EntityArg>,
    /// Volume offset ε [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Softplus temperature [default: 1]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Margin of the negative role hinge [default: 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Weight of negative subsumption terms [default: 0.05]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Weight of the regularizer [default: 1]
    #[arg(long)]
    pub reg_weight: Option<f64>,
    /// Store boxes without a positivity constraint [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unconstrained: Option<bool>,
    /// Training epochs [default: 1000]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Axioms per step, 0 for full batch [default: 0]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam step size [default: 0.005]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Adam β1 [default: 0.9]
    #[arg(long)]
    pub adam_beta1: Option<f64>,
    /// Adam β2 [default: 0.999]
    #[arg(long)]
    pub adam_beta2: Option<f64>,
    /// Adam ε [default: 1e-8]
    #[arg(long)]
    pub adam_eps: Option<f64>,
    /// Epochs between extra checkpoints, 0 to disable [default: 0]
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Epochs between log lines, 0 to disable [default: 1]
    #[arg(long)]
    pub log_every: Option<usize>,
    /// Stop once the total loss falls below this [default: 0]
    #[arg(long)]
    pub early_stop_loss: Option<f64>,
    /// Negatives per positive [default: 1]
    #[arg(long)]
    pub neg_ratio: Option<usize>,
    /// Sample negatives once [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fixed_negatives: Option<bool>,
    /// Keep role scales fixed [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub freeze_role_scale: Option<bool>,
}

impl Overrides {
    pub fn to_config(&self) -> ConfigOverrides {
        ConfigOverrides {
            dim: self.dim,
            seed: self.seed,
            relation_mode: self.relation_mode.map(Into::into),
            entity_mode: self.entity_mode.map(Into::into),
            epsilon: self.epsilon,
            temperature: self.temperature,
            gamma: self.gamma,
            phi: self.phi,
            reg_weight: self.reg_weight,
            unconstrained: self.unconstrained,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            checkpoint_every: self.checkpoint_every,
            log_every: self.log_every,
            early_stop_loss: self.early_stop_loss,
            neg_ratio: self.neg_ratio,
            fixed_negatives: self.fixed_negatives,
            freeze_role_scale: self.freeze_role_scale,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    /// Knowledge base the checkpoint was trained on.
    pub train: PathBuf,
    /// Held-out `subclass(C, D)` or `relation(r, a, b)` lines.
    pub test: PathBuf,
    /// Further files whose facts count as known for filtered metrics.
    #[arg(long)]
    pub known: Vec<PathBuf>,
    /// Volume used for subsumption scores.
    #[arg(long, value_enum, default_value_t = VolumeArg::Softplus)]
    pub volume: VolumeArg,
    /// JSON record with per-query ranks.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Knowledge base to split; other axioms go to the train file.
    pub kb: PathBuf,
    /// Train, valid and test fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.2,0.1")]
    pub ratios: Vec<f64>,
    /// Shuffle seed [default: $BOXEL_SEED or 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Split role assertions instead of subclass axioms.
    #[arg(long)]
    pub links: bool,
    /// Directory for `<stem>.train.kb`, `<stem>.valid.kb` and `<stem>.test.kb`.
    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RelationArg {
    Affine,
    Translation,
}

impl From<RelationArg> for RelationMode {
    fn from(a: RelationArg) -> Self {
        match a {
            RelationArg::Affine => RelationMode::Affine,
            RelationArg::Translation => RelationMode::Translation,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EntityArg {
    Point,
    Box,
}

impl From<EntityArg> for EntityMode {
    fn from(a: EntityArg) -> Self {
        match a {
            EntityArg::Point => EntityMode::Point,
            EntityArg::Box => EntityMode::Box,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VolumeArg {
    Softplus,
    Modified,
}

impl From<VolumeArg> for VolumeKind {
    fn from(a: VolumeArg) -> Self {
        match a {
            VolumeArg::Softplus => VolumeKind::Softplus,
            VolumeArg::Modified => VolumeKind::Modified,
        }
    }
}
