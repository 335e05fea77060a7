use std::path::{Path, PathBuf};

use multigo_core::jla::{self, AugmentConfig, BodyParams, DepthLabelSet, JointMask};
use multigo_core::mesh::{load_mesh, save_mesh, CameraPose, MeshFormat, TriangleMesh, Vec3};
use multigo_core::metrics::{self, MeshMetricsReport, MetricsConfig};
use multigo_core::splat::{self, GaussianSplatSet, RenderedImage};
use multigo_core::wlr::{self, NormalMap, RemeshConfig, RemeshOutcome};
use multigo_core::{sle, Error};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{
    Color, DepthMaskArgs, ExportArgs, ImageMetricsArgs, JlaArgs, MetricsArgs, RemeshArgs, RenderArgs,
    RenderNormalsArgs, SleArgs,
};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::views::{auto_ortho_scale, cameras, ortho_for_radius};
use crate::write_file;

/// Splat bounds margin, in standard deviations, for rendering and export.
pub const SPLAT_EXTENT_SIGMA: f64 = 3.0;
pub const VIEWS_FILE: &str = "views.json";

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create directory {}: {e}", dir.display())))
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh, CliError> {
    Ok(load_mesh(path, MeshFormat::from_path(path)?)?.mesh)
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("invalid {what} {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_file(path, format!("{text}\n").as_bytes())
}

fn mesh_extension(codec: &str) -> &'static str {
    if codec.starts_with("ply") {
        "ply"
    } else {
        "obj"
    }
}

fn write_mesh(dir: &Path, stem: &str, mesh: &TriangleMesh, codec: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{stem}.{}", mesh_extension(codec)));
    save_mesh(&path, mesh, codec)?;
    Ok(path)
}

fn mesh_ortho(cfg: &PipelineConfig, points: &[Vec3]) -> f64 {
    cfg.ortho_scale.unwrap_or_else(|| auto_ortho_scale(points))
}

fn write_loss_csv(path: &Path, outcome: &RemeshOutcome) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in &outcome.history {
        w.serialize(rec)
            .map_err(|e| CliError::Input(format!("loss.csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("loss.csv: {e}")))?;
    write_file(path, &bytes)
}

/// `normal_<i>.fst`, else `normal_<i>.png`.
fn target_path(dir: &Path, i: usize) -> Result<PathBuf, CliError> {
    ["fst", "png"]
        .iter()
        .map(|ext| dir.join(format!("normal_{i}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| CliError::Input(format!("missing normal_{i}.fst or normal_{i}.png in {}", dir.display())))
}

/// Views saved next to normal maps, or the configured preset.
fn target_views(dir: &Path, cfg: &PipelineConfig, coarse: &TriangleMesh) -> Result<Vec<CameraPose>, CliError> {
    let saved = dir.join(VIEWS_FILE);
    if saved.is_file() {
        let views: Vec<CameraPose> = read_json(&saved, "view list")?;
        for v in &views {
            CameraPose::new(v.azimuth_deg, v.elevation_deg, v.height, v.width, v.ortho_scale)?;
        }
        return Ok(views);
    }
    Ok(cameras(
        &cfg.views.remesh,
        cfg.image_size,
        mesh_ortho(cfg, coarse.vertices()),
    )?)
}

fn load_targets(dir: &Path, views: &[CameraPose]) -> Result<Vec<NormalMap>, CliError> {
    views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = target_path(dir, i)?;
            let map = wlr::load_normal_map(&path)?;
            if (map.height(), map.width()) != (v.height, v.width) {
                return Err(CliError::Core(Error::ShapeMismatch(format!(
                    "{} is {}x{}, view {i} is {}x{}",
                    path.display(),
                    map.height(),
                    map.width(),
                    v.height,
                    v.width
                ))));
            }
            Ok(map)
        })
        .collect()
}

fn save_normal_maps(dir: &Path, stem: &str, maps: &[NormalMap], ext: &str) -> Result<(), CliError> {
    for (i, m) in maps.iter().enumerate() {
        wlr::save_normal_map(&dir.join(format!("{stem}_{i}.{ext}")), m)?;
    }
    Ok(())
}

fn remesh_config(cfg: &PipelineConfig, views: Vec<CameraPose>) -> RemeshConfig {
    let mut rc = RemeshConfig::new(views);
    rc.learning_rate = cfg.remesh.learning_rate;
    rc.laplacian_weight = cfg.remesh.laplacian_weight;
    rc.steps = cfg.remesh.steps;
    rc
}

fn metrics_config(cfg: &PipelineConfig) -> MetricsConfig {
    MetricsConfig {
        n_samples: cfg.metrics.n_samples,
        tau: cfg.metrics.tau,
        seed: cfg.seed,
        sampler: cfg.metrics.sampler.clone(),
    }
}

fn write_sle(dir: &Path, mesh: &TriangleMesh, cfg: &PipelineConfig, ortho: f64) -> Result<(), CliError> {
    let views = cameras(&cfg.views.sle, cfg.image_size, ortho)?;
    let stacks = sle::build_sle_stacks(mesh, cfg.q, cfg.m, &views, cfg.seed)?;
    ensure_dir(dir)?;
    for (i, s) in stacks.iter().enumerate() {
        write_file(&dir.join(format!("view{i}.fst")), &s.to_fst_bytes())?;
        write_file(&dir.join(format!("view{i}.png")), &s.identity_preview_png()?)?;
    }
    write_json(&dir.join(VIEWS_FILE), &views)
}

pub fn sle(a: &SleArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mesh = read_mesh(&a.mesh)?;
    let out = &a.common.out;
    write_sle(out, &mesh, cfg, mesh_ortho(cfg, mesh.vertices()))?;
    cfg.write_effective(out)
}

#[derive(Serialize)]
struct PerturbedParams<'a> {
    #[serde(flatten)]
    params: &'a BodyParams,
    seed: u64,
    alpha: f64,
}

fn read_params(path: &Path) -> Result<BodyParams, CliError> {
    let params: BodyParams = read_json(path, "body parameters")?;
    params.validate()?;
    Ok(params)
}

fn labels_of(params: &BodyParams) -> Result<&[String], CliError> {
    params
        .labels
        .as_deref()
        .ok_or_else(|| CliError::Usage("body parameters carry no labels; pass an explicit --mask".into()))
}

pub fn jla(a: &JlaArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let params = read_params(&a.params)?;
    let mask = match &a.mask {
        Some(path) => read_json::<JointMask>(path, "mask")?,
        None => jla::default_depth_mask(labels_of(&params)?, &DepthLabelSet::shipped()),
    };
    let out_params = jla::perturb(&params, &mask, &AugmentConfig::new(cfg.alpha, cfg.seed)?)?;
    let out = &a.common.out;
    ensure_dir(out)?;
    write_json(
        &out.join("params.json"),
        &PerturbedParams {
            params: &out_params,
            seed: cfg.seed,
            alpha: cfg.alpha,
        },
    )?;
    cfg.write_effective(out)
}

pub fn depth_mask(a: &DepthMaskArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let params = read_params(&a.params)?;
    let set = match &a.label_set {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read label set {}: {e}", path.display())))?;
            DepthLabelSet::from_json(&text)?
        }
        None => DepthLabelSet::shipped(),
    };
    let mask = jla::default_depth_mask(labels_of(&params)?, &set);
    let out = &a.common.out;
    ensure_dir(out)?;
    write_json(&out.join("mask.json"), &mask)?;
    cfg.write_effective(out)
}

fn render_normal_maps(mesh: &TriangleMesh, views: &[CameraPose]) -> Vec<NormalMap> {
    views.par_iter().map(|v| wlr::render_normals(mesh, v)).collect()
}

pub fn render_normals(a: &RenderNormalsArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let mesh = read_mesh(&a.mesh)?;
    let views = cameras(&cfg.views.remesh, cfg.image_size, mesh_ortho(cfg, mesh.vertices()))?;
    let out = &a.common.out;
    ensure_dir(out)?;
    save_normal_maps(out, "normal", &render_normal_maps(&mesh, &views), &a.format)?;
    write_json(&out.join(VIEWS_FILE), &views)?;
    cfg.write_effective(out)
}

pub fn remesh(a: &RemeshArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let coarse = read_mesh(&a.mesh)?;
    let views = target_views(&a.targets, cfg, &coarse)?;
    let targets = load_targets(&a.targets, &views)?;
    let outcome = wlr::remesh(&coarse, &targets, &remesh_config(cfg, views))?;
    let out = &a.common.out;
    ensure_dir(out)?;
    write_mesh(out, "refined", &outcome.mesh, &a.format)?;
    write_loss_csv(&out.join("loss.csv"), &outcome)?;
    cfg.write_effective(out)
}

fn splat_ortho(cfg: &PipelineConfig, set: &GaussianSplatSet) -> f64 {
    cfg.ortho_scale.unwrap_or_else(|| match set.bounds(SPLAT_EXTENT_SIGMA) {
        Some(b) => ortho_for_radius(b.min.abs().sup(&b.max.abs()).norm()),
        None => ortho_for_radius(0.0),
    })
}

pub fn render_splat_views(set: &GaussianSplatSet, views: &[CameraPose], background: Color) -> Vec<RenderedImage> {
    views.iter().map(|v| splat::render(set, v, background.0)).collect()
}

pub fn render(a: &RenderArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let set = splat::load_splats(&a.splats)?;
    let views = cameras(&cfg.views.render, cfg.image_size, splat_ortho(cfg, &set))?;
    let out = &a.common.out;
    ensure_dir(out)?;
    for (i, img) in render_splat_views(&set, &views, a.background).iter().enumerate() {
        write_file(&out.join(format!("rgb_{i}.png")), &img.rgb_png()?)?;
        write_file(&out.join(format!("alpha_{i}.png")), &img.alpha_png()?)?;
    }
    write_json(&out.join(VIEWS_FILE), &views)?;
    cfg.write_effective(out)
}

pub fn export(a: &ExportArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    if a.resolution < 2 {
        return Err(CliError::Usage(format!(
            "--resolution must be >= 2, got {}",
            a.resolution
        )));
    }
    let set = splat::load_splats(&a.splats)?;
    let bounds = set.bounds(SPLAT_EXTENT_SIGMA).ok_or(Error::EmptySurface)?;
    let field = splat::density_grid(&set, a.resolution, bounds)?;
    let iso = a.iso.unwrap_or_else(|| splat::default_iso(&field));
    let mesh = splat::export_mesh(&field, iso)?;
    let out = &a.common.out;
    ensure_dir(out)?;
    write_mesh(out, "mesh", &mesh, &a.format)?;
    cfg.write_effective(out)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

pub fn metrics(a: &MetricsArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let pred = read_mesh(&a.pred)?;
    let gt = read_mesh(&a.gt)?;
    let report = metrics::mesh_metrics(&pred, &gt, &metrics_config(cfg))?;
    let out = &a.common.out;
    ensure_dir(out)?;
    write_json(&out.join("metrics.json"), &report)?;
    print_json(&report);
    cfg.write_effective(out)
}

fn read_image(path: &Path) -> Result<RenderedImage, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read image {}: {e}", path.display())))?;
    Ok(RenderedImage::from_png(&bytes)?)
}

pub fn image_metrics(a: &ImageMetricsArgs, cfg: &PipelineConfig) -> Result<(), CliError> {
    let report = metrics::image_metrics(&read_image(&a.a)?, &read_image(&a.b)?)?;
    let out = &a.common.out;
    ensure_dir(out)?;
    write_json(&out.join("image_metrics.json"), &report)?;
    print_json(&report);
    cfg.write_effective(out)
}

/// `<stem>.obj` or `<stem>.ply` in `dir`.
fn find_mesh(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["obj", "ply"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

#[derive(Serialize)]
struct PipelineMetrics {
    coarse: MeshMetricsReport,
    refined: MeshMetricsReport,
}

/// Layout under the output directory:
///
/// ```text
/// sle/view{0,1,2}.{fst,png}, sle/views.json
/// normals/coarse_<i>.png, normals/normal_<i>.{fst,png}, normals/views.json
/// remesh/refined.obj, remesh/loss.csv
/// metrics.json            (when the input holds gt.obj|ply)
/// config.json
/// ```
///
/// Targets come from `input/targets/` when present, else from the ground
/// truth rendered in the same views, else from the coarse mesh itself; the
/// configured refiner is applied to them before remeshing.
pub fn pipeline(cfg: &PipelineConfig) -> Result<(), CliError> {
    let input = cfg
        .paths
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("no input directory (pass --input or set paths.input)".into()))?;
    let out = cfg
        .paths
        .output
        .clone()
        .ok_or_else(|| CliError::Usage("no output directory (pass --out or set paths.output)".into()))?;
    let coarse_path = find_mesh(&input, "coarse")
        .ok_or_else(|| CliError::Input(format!("no coarse.obj or coarse.ply in {}", input.display())))?;
    let coarse = read_mesh(&coarse_path)?;
    let gt = find_mesh(&input, "gt").map(|p| read_mesh(&p)).transpose()?;
    let refiners = wlr::normal_refiners();
    let refiner = refiners.get(&cfg.refiner)?;

    let mut extent: Vec<Vec3> = coarse.vertices().to_vec();
    if let Some(g) = &gt {
        extent.extend_from_slice(g.vertices());
    }
    let ortho = mesh_ortho(cfg, &extent);
    ensure_dir(&out)?;

    log::info!("sle: q={} m={}", cfg.q, cfg.m);
    write_sle(&out.join("sle"), &coarse, cfg, ortho)?;

    let normals_dir = out.join("normals");
    ensure_dir(&normals_dir)?;
    let target_dir = input.join("targets");
    let (views, raw_targets) = if target_dir.is_dir() {
        let views = target_views(&target_dir, cfg, &coarse)?;
        let targets = load_targets(&target_dir, &views)?;
        (views, targets)
    } else {
        let views = cameras(&cfg.views.remesh, cfg.image_size, ortho)?;
        let source = gt.as_ref().unwrap_or(&coarse);
        let targets = render_normal_maps(source, &views);
        (views, targets)
    };
    save_normal_maps(&normals_dir, "coarse", &render_normal_maps(&coarse, &views), "png")?;
    log::info!("refine: {} maps with `{}`", raw_targets.len(), cfg.refiner);
    let refined = wlr::refine_checked(refiner, &raw_targets, &[], cfg.remesh.steps)?;
    save_normal_maps(&normals_dir, "normal", &refined, "fst")?;
    save_normal_maps(&normals_dir, "normal", &refined, "png")?;
    write_json(&normals_dir.join(VIEWS_FILE), &views)?;
    // Remesh from the written maps so a rerun of the stage reproduces it.
    let targets = load_targets(&normals_dir, &views)?;

    log::info!("remesh: {} views, {} steps", views.len(), cfg.remesh.steps);
    let outcome = wlr::remesh(&coarse, &targets, &remesh_config(cfg, views))?;
    let remesh_dir = out.join("remesh");
    ensure_dir(&remesh_dir)?;
    write_mesh(&remesh_dir, "refined", &outcome.mesh, "obj")?;
    write_loss_csv(&remesh_dir.join("loss.csv"), &outcome)?;

    if let Some(g) = &gt {
        log::info!("metrics: {} samples", cfg.metrics.n_samples);
        let mc = metrics_config(cfg);
        let report = PipelineMetrics {
            coarse: metrics::mesh_metrics(&coarse, g, &mc)?,
            refined: metrics::mesh_metrics(&outcome.mesh, g, &mc)?,
        };
        write_json(&out.join("metrics.json"), &report)?;
    }
    cfg.write_effective(&out)
}
