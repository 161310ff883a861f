//! Grayscale image decoding and encoding: binary PGM (P5) and PNG, at 8 or
//! 16 bits per sample. Sample values are kept as-is, never rescaled.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{GrayImage, SampleDepth};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Loads a PGM or PNG file, detected from its leading bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(PNG_SIGNATURE) {
        return decode_png(bytes);
    }
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(bytes),
        Some([b'P', d]) if d.is_ascii_digit() => Err(Error::UnsupportedFormat(format!(
            "netpbm type P{} (only binary graymap P5 is supported)",
            *d as char
        ))),
        _ => Err(Error::UnsupportedFormat(
            "expected a P5 PGM or PNG signature".into(),
        )),
    }
}

/// Writes PNG when the extension is `.png`, PGM otherwise.
pub fn save_image(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(image)?
    } else {
        encode_pgm(image)
    };
    fs::write(path, bytes)?;
    Ok(())
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or_else(|| Error::format(start, format!("{what} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format(start, format!("expected {what}")));
        }
        Ok(value)
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::format(0, "missing P5 magic"));
    }
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    rd.skip_space_and_comments();
    let maxval_at = rd.pos;
    let maxval = rd.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(2, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(rd.pos) {
        Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
        _ => return Err(Error::format(rd.pos, "expected whitespace after maxval")),
    }
    let wide = maxval > 255;
    let sample_bytes = if wide { 2 } else { 1 };
    let needed = width * height * sample_bytes;
    let data = &bytes[rd.pos..];
    if data.len() < needed {
        return Err(Error::format(
            rd.pos + data.len(),
            format!("raster truncated: need {needed} bytes, found {}", data.len()),
        ));
    }
    let pixels: Vec<f64> = if wide {
        data[..needed]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    } else {
        data[..needed].iter().map(|&b| f64::from(b)).collect()
    };
    if let Some(k) = pixels.iter().position(|&p| p > f64::from(maxval)) {
        return Err(Error::format(rd.pos + k * sample_bytes, "sample exceeds maxval"));
    }
    let depth = if wide {
        SampleDepth::Sixteen
    } else {
        SampleDepth::Eight
    };
    Ok(GrayImage::new(width, height, pixels)?.with_depth(depth, maxval as u16))
}

fn quantize(image: &GrayImage) -> impl Iterator<Item = u16> + '_ {
    let max = f64::from(image.maxval());
    image
        .pixels()
        .iter()
        .map(move |&p| p.round().clamp(0.0, max) as u16)
}

/// Encodes as P5 with the image's maxval; pixels are rounded to the nearest
/// level and clamped.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!(
        "P5\n{} {}\n{}\n",
        image.width(),
        image.height(),
        image.maxval()
    )
    .into_bytes();
    if image.maxval() > 255 {
        for v in quantize(image) {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(quantize(image).map(|v| v as u8));
    }
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(0, format!("png header: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "png color type {:?} (only grayscale is supported)",
            info.color_type
        )));
    }
    let bit_depth = info.bit_depth;
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(0, format!("png data: {e}")))?;
    let data = &buf[..frame.buffer_size()];
    let (pixels, depth, maxval): (Vec<f64>, _, u16) = match bit_depth {
        png::BitDepth::Eight => (
            data.iter().map(|&b| f64::from(b)).collect(),
            SampleDepth::Eight,
            255,
        ),
        png::BitDepth::Sixteen => (
            data.chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
                .collect(),
            SampleDepth::Sixteen,
            u16::MAX,
        ),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "png bit depth {other:?} (only 8 and 16 are supported)"
            )))
        }
    };
    Ok(GrayImage::new(width, height, pixels)?.with_depth(depth, maxval))
}

pub fn encode_png(image: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        let data: Vec<u8> = if image.maxval() > 255 {
            encoder.set_depth(png::BitDepth::Sixteen);
            quantize(image).flat_map(u16::to_be_bytes).collect()
        } else {
            encoder.set_depth(png::BitDepth::Eight);
            quantize(image).map(|v| v as u8).collect()
        };
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer
            .write_image_data(&data)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_tiny_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 85, 170, 255]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.pixels(), &[0.0, 85.0, 170.0, 255.0]);
        assert_eq!(img.depth(), SampleDepth::Eight);
    }

    #[test]
    fn header_comments() {
        let mut bytes = b"P5 # comment\n3 # w\n1\n# maxval next\n9\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 9]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.maxval()), (3, 1, 9));
    }

    #[test]
    fn rejects_color_and_garbage() {
        assert!(matches!(
            decode_image(b"P6\n1 1\n255\n\0\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(decode_image(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
        match decode_image(b"P5\n2 x\n255\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        match decode_image(b"P5\n2 2\n255\n\x01\x02") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode_image(b"P5\n1 1\n70000\n\0"),
            Err(Error::Format { offset: 7, .. })
        ));
    }

    #[test]
    fn sixteen_bit_pgm_round_trip() {
        let px: Vec<f64> = [0u16, 1, 255, 256, 4095, 65535].iter().map(|&v| f64::from(v)).collect();
        let img = GrayImage::new(3, 2, px).unwrap().with_depth(SampleDepth::Sixteen, 65535);
        let bytes = encode_pgm(&img);
        let back = decode_pgm(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(encode_pgm(&back), bytes);
    }

    #[test]
    fn png_round_trip_both_depths() {
        let img8 = GrayImage::from_fn(5, 3, |r, c| (r * 50 + c) as f64).unwrap();
        assert_eq!(decode_image(&encode_png(&img8).unwrap()).unwrap(), img8);
        let img16 = GrayImage::from_fn(4, 4, |r, c| (r * 16000 + c * 7) as f64)
            .unwrap()
            .with_depth(SampleDepth::Sixteen, 65535);
        assert_eq!(decode_image(&encode_png(&img16).unwrap()).unwrap(), img16);
    }

    #[test]
    fn color_png_rejected() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[1, 2, 3]).unwrap();
        }
        assert!(matches!(decode_image(&out), Err(Error::UnsupportedFormat(_))));
    }
}
