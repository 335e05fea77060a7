//! 8-bit PNG encoding with pinned encoder settings so output bytes are
//! reproducible.

use std::path::Path;

use crate::error::{Error, Result};

/// `floor(v·255 + 0.5)` clamped to `[0, 255]`; non-finite maps to 0.
pub fn quantize(v: f64) -> u8 {
    if !v.is_finite() {
        return 0;
    }
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn encode(width: usize, height: usize, color: png::ColorType, pixels: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::NoFilter);
        let mut w = enc
            .write_header()
            .map_err(|e| Error::InvalidArgument(format!("PNG header: {e}")))?;
        w.write_image_data(pixels)
            .map_err(|e| Error::InvalidArgument(format!("PNG data: {e}")))?;
    }
    Ok(out)
}

/// Interleaved 8-bit RGB.
pub fn encode_rgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Rgb, rgb)
}

pub fn encode_gray8(width: usize, height: usize, gray: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Grayscale, gray)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decoded 8-bit image, `channels` interleaved per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Png8 {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn decode(bytes: &[u8]) -> Result<Png8> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| Error::Parse(format!("PNG: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Parse(format!("PNG: {e}")))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::Parse("indexed PNG after expansion".into())),
    };
    buf.truncate(info.buffer_size());
    Ok(Png8 {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        data: buf,
    })
}

pub fn read_file(path: &Path) -> Result<Png8> {
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.49 / 255.0), 0);
        assert_eq!(quantize(2.0), 255);
        assert_eq!(quantize(-1.0), 0);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn encode_decode_and_determinism() {
        let rgb: Vec<u8> = (0..2 * 3 * 3).map(|i| (i * 13) as u8).collect();
        let a = encode_rgb8(3, 2, &rgb).unwrap();
        assert_eq!(a, encode_rgb8(3, 2, &rgb).unwrap());
        let d = decode(&a).unwrap();
        assert_eq!((d.width, d.height, d.channels), (3, 2, 3));
        assert_eq!(d.data, rgb);
        let g = decode(&encode_gray8(2, 2, &[0, 1, 2, 3]).unwrap()).unwrap();
        assert_eq!((g.channels, g.data), (1, vec![0, 1, 2, 3]));
    }
}
