use super::NormalMap;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::splat::RenderedImage;

/// Maps coarse normal maps (plus optional image guidance) to refined ones.
pub trait NormalRefiner: Send + Sync {
    fn refine(&self, coarse: &[NormalMap], guidance: &[RenderedImage], steps: usize) -> Result<Vec<NormalMap>>;
}

/// Returns the coarse maps unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRefiner;

impl NormalRefiner for IdentityRefiner {
    fn refine(&self, coarse: &[NormalMap], _guidance: &[RenderedImage], _steps: usize) -> Result<Vec<NormalMap>> {
        Ok(coarse.to_vec())
    }
}

pub fn normal_refiners() -> Registry<dyn NormalRefiner> {
    let mut reg: Registry<dyn NormalRefiner> = Registry::new("normal refiner");
    reg.register("identity", Box::new(IdentityRefiner));
    reg
}

/// Runs `refiner` and rejects output whose count, sizes or pixels break the
/// normal map invariants.
pub fn refine_checked(
    refiner: &dyn NormalRefiner,
    coarse: &[NormalMap],
    guidance: &[RenderedImage],
    steps: usize,
) -> Result<Vec<NormalMap>> {
    let out = refiner.refine(coarse, guidance, steps)?;
    if out.len() != coarse.len() {
        return Err(Error::RefinerContract(format!(
            "{} maps in, {} out",
            coarse.len(),
            out.len()
        )));
    }
    for (i, (a, b)) in coarse.iter().zip(&out).enumerate() {
        if (a.height, a.width) != (b.height, b.width) {
            return Err(Error::RefinerContract(format!(
                "map {i} changed size from {}x{} to {}x{}",
                a.height, a.width, b.height, b.width
            )));
        }
        b.validate()
            .map_err(|e| Error::RefinerContract(format!("map {i}: {e}")))?;
    }
    Ok(out)
}
