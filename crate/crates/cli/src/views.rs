use multigo_core::mesh::{CameraPose, Vec3};
use multigo_core::{Registry, Result};

/// Margin applied around the farthest point when fitting the ortho scale.
pub const AUTO_ORTHO_MARGIN: f64 = 1.1;

/// A named list of (azimuth, elevation) pairs in degrees.
pub trait ViewPreset: Send + Sync {
    fn angles(&self) -> Vec<(f64, f64)>;
}

struct Angles(Vec<(f64, f64)>);

impl ViewPreset for Angles {
    fn angles(&self) -> Vec<(f64, f64)> {
        self.0.clone()
    }
}

fn ring8() -> Vec<(f64, f64)> {
    (0..8).map(|k| (45.0 * k as f64, 0.0)).collect()
}

/// | name      | views                                   |
/// |-----------|-----------------------------------------|
/// | `front`   | azimuth 0                               |
/// | `sle3`    | azimuths 0, 120, 240                    |
/// | `ring8`   | azimuths 0, 45, ..., 315                |
/// | `ring8tb` | `ring8` plus top and bottom             |
pub fn view_presets() -> Registry<dyn ViewPreset> {
    let mut reg: Registry<dyn ViewPreset> = Registry::new("view preset");
    reg.register("front", Box::new(Angles(vec![(0.0, 0.0)])));
    reg.register(
        "sle3",
        Box::new(Angles(
            multigo_core::sle::DEFAULT_VIEW_AZIMUTHS
                .iter()
                .map(|&a| (a, 0.0))
                .collect(),
        )),
    );
    reg.register("ring8", Box::new(Angles(ring8())));
    let mut tb = ring8();
    tb.extend([(0.0, 90.0), (0.0, -90.0)]);
    reg.register("ring8tb", Box::new(Angles(tb)));
    reg
}

pub fn cameras(preset: &str, size: [usize; 2], ortho_scale: f64) -> Result<Vec<CameraPose>> {
    view_presets()
        .get(preset)?
        .angles()
        .into_iter()
        .map(|(az, el)| CameraPose::new(az, el, size[0], size[1], ortho_scale))
        .collect()
}

/// Image extent covering a sphere of radius `radius` around the origin.
pub fn ortho_for_radius(radius: f64) -> f64 {
    if radius > 0.0 && radius.is_finite() {
        2.0 * AUTO_ORTHO_MARGIN * radius
    } else {
        1.0
    }
}

pub fn auto_ortho_scale(points: &[Vec3]) -> f64 {
    ortho_for_radius(points.iter().map(|p| p.norm()).fold(0.0, f64::max))
}
