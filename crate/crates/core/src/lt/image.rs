//! RGB images, PFM/PPM encoding and error metrics.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::lt::math::Rgb;

/// Row-major RGB image, top row first.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Image {
        Image {
            width,
            height,
            pixels: vec![Rgb::BLACK; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Rgb) -> Image {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image { width, height, pixels }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn add(&mut self, other: &Image) -> Result<()> {
        same_shape(self, other)?;
        for (a, b) in self.pixels.iter_mut().zip(&other.pixels) {
            *a += *b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for p in &mut self.pixels {
            *p = *p * s;
        }
    }

    /// 32-bit little-endian PFM; rows are stored bottom to top.
    pub fn write_pfm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.width * self.height * 12);
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                for c in self.get(x, y).0 {
                    buf.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// 8-bit binary PPM with gamma 2.2, clamped to `[0,1]`.
    pub fn write_ppm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.width * self.height * 3);
        for p in &self.pixels {
            for c in p.0 {
                let v = c.clamp(0.0, 1.0).powf(1.0 / 2.2);
                buf.push((v * 255.0 + 0.5) as u8);
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads colour PFM of either byte order.
    pub fn read_pfm(mut r: impl Read) -> Result<Image> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut pos = 0;
        let mut token = || -> Result<String> {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::InvalidArgument("truncated PFM header".into()));
            }
            let t = String::from_utf8_lossy(&data[start..pos]).into_owned();
            pos += 1;
            Ok(t)
        };
        let bad = |what: &str| Error::InvalidArgument(format!("bad PFM {what}"));
        if token()? != "PF" {
            return Err(bad("magic (colour PFM expected)"));
        }
        let width: usize = token()?.parse().map_err(|_| bad("width"))?;
        let height: usize = token()?.parse().map_err(|_| bad("height"))?;
        let scale: f64 = token()?.parse().map_err(|_| bad("scale"))?;
        let body = &data[pos.min(data.len())..];
        let n = width * height * 3;
        if body.len() < n * 4 {
            return Err(bad("body length"));
        }
        let little = scale < 0.0;
        let mut img = Image::new(width, height);
        for (i, chunk) in body.chunks_exact(4).take(n).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            let (pix, c) = (i / 3, i % 3);
            let (x, row) = (pix % width, pix / width);
            let y = height - 1 - row;
            img.pixels[y * width + x].0[c] = f64::from(v);
        }
        Ok(img)
    }
}

fn same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Mean over pixels and channels of the squared difference.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    if a.pixels.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]) * (p[c] - q[c])))
        .sum();
    Ok(sum / (3 * a.pixels.len()) as f64)
}

/// `Σ(a−b)² / Σ b²` over pixels and channels.
pub fn relative_mse(img: &Image, reference: &Image) -> Result<f64> {
    let num = mse(img, reference)?;
    let den = mse(reference, &Image::new(reference.width, reference.height))?;
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("reference image is black".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_plug_ins() {
        let a = Image::new(3, 2);
        let b = Image::from_fn(3, 2, |_, _| Rgb::splat(1.0));
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        assert!(matches!(mse(&a, &Image::new(2, 3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn mse_matches_two_pass_accumulation() {
        let a = Image::from_fn(5, 4, |x, y| Rgb([x as f64 * 0.1, y as f64 * 0.3, (x * y) as f64 * 0.01]));
        let b = Image::from_fn(5, 4, |x, y| Rgb([y as f64 * 0.2, x as f64 * 0.05, 0.5]));
        let mut diffs = Vec::new();
        for y in 0..4 {
            for x in 0..5 {
                for c in 0..3 {
                    diffs.push(a.get(x, y)[c] - b.get(x, y)[c]);
                }
            }
        }
        let mean = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
        assert!((mse(&a, &b).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn pfm_round_trip_is_exact_for_f32_values() {
        let img = Image::from_fn(4, 3, |x, y| Rgb([x as f64 + 0.25, y as f64 * 0.5, -1.0]));
        let mut buf = Vec::new();
        img.write_pfm(&mut buf).unwrap();
        assert!(buf.starts_with(b"PF\n4 3\n-1.0\n"));
        let back = Image::read_pfm(&buf[..]).unwrap();
        assert_eq!(back, img);
        assert!(Image::read_pfm(&buf[..20]).is_err());
    }

    #[test]
    fn ppm_header_and_gamma() {
        let img = Image::from_fn(1, 1, |_, _| Rgb([0.0, 1.0, 0.5]));
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        let n = buf.len();
        assert!(buf.starts_with(b"P6\n1 1\n255\n"));
        assert_eq!(&buf[n - 3..n - 1], &[0, 255]);
        assert_eq!(buf[n - 1], (0.5f64.powf(1.0 / 2.2) * 255.0 + 0.5) as u8);
    }
}
