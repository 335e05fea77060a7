use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::splat::RenderedImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// PSNR in dB; identical images give `+∞`, serialized as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr(pub f64);

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr(v)),
            Raw::Text(t) if t == "inf" => Ok(Psnr(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid PSNR `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetricsReport {
    pub psnr: Psnr,
    pub ssim: f64,
}

fn check_shape(a: &RenderedImage, b: &RenderedImage) -> Result<()> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(())
}

/// `10·log10(1 / MSE)` over all RGB values.
pub fn psnr(a: &RenderedImage, b: &RenderedImage) -> Result<Psnr> {
    check_shape(a, b)?;
    let mse = a.rgb.iter().zip(&b.rgb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.rgb.len().max(1) as f64;
    Ok(Psnr(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() }))
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = g.iter().sum();
    g.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian filter over valid positions only.
fn filter_valid(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = (0..k).map(|i| kernel[i] * plane[r * w + c + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = (0..k).map(|i| kernel[i] * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Single-scale SSIM with an 11×11 Gaussian window (σ = 1.5) and dynamic
/// range 1, averaged over valid window positions and the three channels.
pub fn ssim(a: &RenderedImage, b: &RenderedImage) -> Result<f64> {
    check_shape(a, b)?;
    let (h, w) = (a.height, a.width);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let plane = h * w;
    let mut total = 0.0;
    for ch in 0..3 {
        let x = &a.rgb[ch * plane..(ch + 1) * plane];
        let y = &b.rgb[ch * plane..(ch + 1) * plane];
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
        let mx = filter_valid(x, h, w, &kernel);
        let my = filter_valid(y, h, w, &kernel);
        let sxx = filter_valid(&xx, h, w, &kernel);
        let syy = filter_valid(&yy, h, w, &kernel);
        let sxy = filter_valid(&xy, h, w, &kernel);
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / 3.0)
}

pub fn image_metrics(a: &RenderedImage, b: &RenderedImage) -> Result<ImageMetricsReport> {
    Ok(ImageMetricsReport {
        psnr: psnr(a, b)?,
        ssim: ssim(a, b)?,
    })
}
