use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, Parser, Subcommand};
use multigo_core::{jla, metrics, sle, wlr};

use crate::config::{PipelineConfig, DEFAULT_EXPORT_RESOLUTION, DEFAULT_IMAGE_SIZE, DEFAULT_SEED};

/// `HxW`, or a single number for a square image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageSize(pub [usize; 2]);

impl fmt::Display for ImageSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0[0], self.0[1])
    }
}

impl FromStr for ImageSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| format!("`{s}` is not a positive size (expected N or HxW)"))
        };
        match s.split_once(['x', 'X']) {
            Some((h, w)) => Ok(Self([parse(h)?, parse(w)?])),
            None => {
                let n = parse(s)?;
                Ok(Self([n, n]))
            }
        }
    }
}

/// Three comma-separated channel values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Color(pub [f64; 3]);

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [r, g, b] if parts.iter().all(|v| (0.0..=1.0).contains(v)) => Ok(Self([r, g, b])),
            _ => Err(format!("`{s}` is not three values in [0, 1]")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "multigo", version, about = "Clothed-human reconstruction geometry pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project Fourier-expanded body points into three feature stacks
    Sle(SleArgs),
    /// Perturb depth-related body parameters with masked uniform noise
    #[command(name = "jla-perturb", visible_alias = "jla")]
    Jla(JlaArgs),
    /// Build the default depth-related mask for labelled parameters
    DepthMask(DepthMaskArgs),
    /// Rasterize camera-space normal maps of a mesh
    RenderNormals(RenderNormalsArgs),
    /// Optimize mesh vertices toward multi-view target normal maps
    Remesh(RemeshArgs),
    /// Render Gaussian splats to RGB and alpha images
    Render(RenderArgs),
    /// Extract an isosurface mesh from the splat density
    Export(ExportArgs),
    /// Chamfer distance, normal consistency and f-score between two meshes
    Metrics(MetricsArgs),
    /// PSNR and SSIM between two images
    ImageMetrics(ImageMetricsArgs),
    /// Run sle, normal rendering, refinement, remeshing and metrics on a directory
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; flags given on the command line override its fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; the effective config is written here too
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Imaging {
    /// Image size in pixels, `N` or `HxW`
    #[arg(long, default_value_t = ImageSize([DEFAULT_IMAGE_SIZE; 2]), value_name = "HxW")]
    pub size: ImageSize,
    /// World extent of each view in cm [default: fit the input]
    #[arg(long, value_name = "CM")]
    pub ortho_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SleArgs {
    /// Body mesh (.obj or .ply)
    #[arg(long)]
    pub mesh: PathBuf,
    /// Fourier order
    #[arg(long, default_value_t = sle::DEFAULT_ORDER)]
    pub q: usize,
    /// Point count after densification
    #[arg(long, default_value_t = sle::DEFAULT_POINT_COUNT)]
    pub m: usize,
    /// RNG seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// View preset
    #[arg(long, default_value = "sle3")]
    pub views: String,
    #[command(flatten)]
    pub imaging: Imaging,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct JlaArgs {
    /// Body parameters JSON `{"values": [...], "labels": [...]}`
    #[arg(long)]
    pub params: PathBuf,
    /// Mask JSON `{"bits": [...]}` [default: depth-related labels]
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Perturbation bound
    #[arg(long, default_value_t = jla::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// RNG seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DepthMaskArgs {
    /// Labelled body parameters JSON
    #[arg(long)]
    pub params: PathBuf,
    /// Label set JSON `{"labels": [...]}` [default: built-in set]
    #[arg(long, value_name = "FILE")]
    pub label_set: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RenderNormalsArgs {
    /// Mesh (.obj or .ply)
    #[arg(long)]
    pub mesh: PathBuf,
    /// View preset
    #[arg(long, default_value = "ring8tb")]
    pub views: String,
    /// Output encoding: png or fst
    #[arg(long, default_value = "png", value_parser = ["png", "fst"])]
    pub format: String,
    #[command(flatten)]
    pub imaging: Imaging,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RemeshArgs {
    /// Coarse mesh (.obj or .ply)
    #[arg(long)]
    pub mesh: PathBuf,
    /// Directory with `normal_<i>.fst` or `normal_<i>.png` per view
    #[arg(long, value_name = "DIR")]
    pub targets: PathBuf,
    /// Learning rate
    #[arg(long, default_value_t = wlr::DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    /// Laplacian regularization weight
    #[arg(long, default_value_t = wlr::DEFAULT_LAPLACIAN_WEIGHT)]
    pub laplacian_weight: f64,
    /// Optimization steps
    #[arg(long, default_value_t = wlr::DEFAULT_STEPS)]
    pub steps: usize,
    /// View preset, used when the targets carry no `views.json`
    #[arg(long, default_value = "ring8tb")]
    pub views: String,
    /// Mesh codec for the result: obj, ply or ply-ascii
    #[arg(long, default_value = "obj")]
    pub format: String,
    #[command(flatten)]
    pub imaging: Imaging,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Splat PLY
    #[arg(long)]
    pub splats: PathBuf,
    /// View preset
    #[arg(long, default_value = "ring8")]
    pub views: String,
    /// Background color `r,g,b`
    #[arg(long, default_value_t = Color([0.0; 3]))]
    pub background: Color,
    #[command(flatten)]
    pub imaging: Imaging,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Splat PLY
    #[arg(long)]
    pub splats: PathBuf,
    /// Grid resolution per axis
    #[arg(long, default_value_t = DEFAULT_EXPORT_RESOLUTION)]
    pub resolution: usize,
    /// Iso level [default: 0.3 of the field maximum]
    #[arg(long)]
    pub iso: Option<f64>,
    /// Mesh codec: obj, ply or ply-ascii
    #[arg(long, default_value = "obj")]
    pub format: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predicted mesh
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth mesh
    #[arg(long)]
    pub gt: PathBuf,
    /// Samples per surface
    #[arg(long, default_value_t = metrics::DEFAULT_SAMPLES)]
    pub n_samples: usize,
    /// f-score distance threshold in cm
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    pub tau: f64,
    /// Surface sampler: surface or vertices
    #[arg(long, default_value = "surface")]
    pub sampler: String,
    /// RNG seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ImageMetricsArgs {
    /// First image (PNG)
    #[arg(long)]
    pub a: PathBuf,
    /// Second image (PNG)
    #[arg(long)]
    pub b: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Input directory with `coarse.obj|ply`, optional `gt.obj|ply` and
    /// optional `targets/` [default: config paths.input]
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Output directory [default: config paths.output]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// JSON config; flags given on the command line override its fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Fourier order
    #[arg(long, default_value_t = sle::DEFAULT_ORDER)]
    pub q: usize,
    /// Point count after densification
    #[arg(long, default_value_t = sle::DEFAULT_POINT_COUNT)]
    pub m: usize,
    /// RNG seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Learning rate
    #[arg(long, default_value_t = wlr::DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    /// Laplacian regularization weight
    #[arg(long, default_value_t = wlr::DEFAULT_LAPLACIAN_WEIGHT)]
    pub laplacian_weight: f64,
    /// Optimization steps
    #[arg(long, default_value_t = wlr::DEFAULT_STEPS)]
    pub steps: usize,
    /// Normal refiner
    #[arg(long, default_value = "identity")]
    pub refiner: String,
    /// Samples per surface for metrics
    #[arg(long, default_value_t = metrics::DEFAULT_SAMPLES)]
    pub n_samples: usize,
    /// f-score distance threshold in cm
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    pub tau: f64,
    #[command(flatten)]
    pub imaging: Imaging,
}

/// Whether `id` was set on the command line rather than by its default.
pub fn given(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

macro_rules! overlay {
    ($m:expr, $($id:literal => $dst:expr, $src:expr;)*) => {
        $(if given($m, $id) { $dst = $src; })*
    };
}

impl Imaging {
    fn overlay(&self, cfg: &mut PipelineConfig, m: &ArgMatches) {
        overlay!(m,
            "size" => cfg.image_size, self.size.0;
            "ortho_scale" => cfg.ortho_scale, self.ortho_scale;
        );
    }
}

impl Command {
    pub fn config_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Sle(a) => a.common.config.as_ref(),
            Command::Jla(a) => a.common.config.as_ref(),
            Command::DepthMask(a) => a.common.config.as_ref(),
            Command::RenderNormals(a) => a.common.config.as_ref(),
            Command::Remesh(a) => a.common.config.as_ref(),
            Command::Render(a) => a.common.config.as_ref(),
            Command::Export(a) => a.common.config.as_ref(),
            Command::Metrics(a) => a.common.config.as_ref(),
            Command::ImageMetrics(a) => a.common.config.as_ref(),
            Command::Pipeline(a) => a.config.as_ref(),
        }
    }

    /// Applies the flags given on the command line on top of `cfg`.
    pub fn overlay(&self, cfg: &mut PipelineConfig, m: &ArgMatches) {
        match self {
            Command::Sle(a) => {
                overlay!(m,
                    "q" => cfg.q, a.q;
                    "m" => cfg.m, a.m;
                    "seed" => cfg.seed, a.seed;
                    "views" => cfg.views.sle, a.views.clone();
                );
                a.imaging.overlay(cfg, m);
            }
            Command::Jla(a) => {
                overlay!(m,
                    "alpha" => cfg.alpha, a.alpha;
                    "seed" => cfg.seed, a.seed;
                );
            }
            Command::RenderNormals(a) => {
                overlay!(m, "views" => cfg.views.remesh, a.views.clone(););
                a.imaging.overlay(cfg, m);
            }
            Command::Remesh(a) => {
                overlay!(m,
                    "lr" => cfg.remesh.learning_rate, a.lr;
                    "laplacian_weight" => cfg.remesh.laplacian_weight, a.laplacian_weight;
                    "steps" => cfg.remesh.steps, a.steps;
                    "views" => cfg.views.remesh, a.views.clone();
                );
                a.imaging.overlay(cfg, m);
            }
            Command::Render(a) => {
                overlay!(m, "views" => cfg.views.render, a.views.clone(););
                a.imaging.overlay(cfg, m);
            }
            Command::Metrics(a) => {
                overlay!(m,
                    "n_samples" => cfg.metrics.n_samples, a.n_samples;
                    "tau" => cfg.metrics.tau, a.tau;
                    "sampler" => cfg.metrics.sampler, a.sampler.clone();
                    "seed" => cfg.seed, a.seed;
                );
            }
            Command::Pipeline(a) => {
                overlay!(m,
                    "input" => cfg.paths.input, a.input.clone();
                    "out" => cfg.paths.output, a.out.clone();
                    "q" => cfg.q, a.q;
                    "m" => cfg.m, a.m;
                    "seed" => cfg.seed, a.seed;
                    "lr" => cfg.remesh.learning_rate, a.lr;
                    "laplacian_weight" => cfg.remesh.laplacian_weight, a.laplacian_weight;
                    "steps" => cfg.remesh.steps, a.steps;
                    "refiner" => cfg.refiner, a.refiner.clone();
                    "n_samples" => cfg.metrics.n_samples, a.n_samples;
                    "tau" => cfg.metrics.tau, a.tau;
                );
                a.imaging.overlay(cfg, m);
            }
            Command::DepthMask(_) | Command::Export(_) | Command::ImageMetrics(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{CommandFactory, FromArgMatches};

    fn merged(argv: &[&str], base: PipelineConfig) -> PipelineConfig {
        let matches = Cli::command().get_matches_from(argv);
        let cli = Cli::from_arg_matches(&matches).unwrap();
        let (_, sub) = matches.subcommand().unwrap();
        let mut cfg = base;
        cli.command.overlay(&mut cfg, sub);
        cfg
    }

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn only_given_flags_override() {
        let base = PipelineConfig {
            q: 3,
            m: 500,
            ..PipelineConfig::default()
        };
        let cfg = merged(&["multigo", "sle", "--mesh", "a.obj", "--out", "o", "--m", "700"], base);
        assert_eq!((cfg.q, cfg.m), (3, 700));
        let cfg = merged(
            &[
                "multigo",
                "remesh",
                "--mesh",
                "a",
                "--targets",
                "t",
                "--out",
                "o",
                "--size",
                "32x16",
            ],
            PipelineConfig::default(),
        );
        assert_eq!(cfg.image_size, [32, 16]);
        assert_eq!(cfg.remesh.steps, 100);
    }

    #[test]
    fn value_parsers() {
        assert_eq!("64".parse::<ImageSize>().unwrap(), ImageSize([64, 64]));
        assert_eq!("48x32".parse::<ImageSize>().unwrap(), ImageSize([48, 32]));
        assert!("0x3".parse::<ImageSize>().is_err());
        assert_eq!("1,0.5,0".parse::<Color>().unwrap(), Color([1.0, 0.5, 0.0]));
        assert!("1,2,0".parse::<Color>().is_err());
        assert!("1,0".parse::<Color>().is_err());
    }
}
