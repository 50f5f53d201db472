//! Image <-> bit-sequence conversion and the Euclidean-distance metric.
//!
//! Pixels are quantized to 8 bits, most-significant bit first. Bits are laid
//! out channel-major, then row-major, then by bit position, so a BitSeq for a
//! full image is `3 * 96 * 96 * 8 = 221_184` bits long.

use std::path::Path;

use image::{imageops::FilterType, RgbImage};

use crate::{Error, Result};

pub const CHANNELS: usize = 3;
pub const HEIGHT: usize = 96;
pub const WIDTH: usize = 96;
pub const PIXELS: usize = CHANNELS * HEIGHT * WIDTH;
pub const BITS_PER_PIXEL: usize = 8;
pub const IMAGE_BITS: usize = PIXELS * BITS_PER_PIXEL;

/// A 3x96x96 image with values in `[0, 1]`, stored channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(data: Vec<f32>) -> Result<Self> {
        if data.len() != PIXELS {
            return Err(Error::InvalidInput(format!(
                "image tensor needs {PIXELS} values, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(ImageTensor { data })
    }

    /// Builds an image from arbitrary reals, clamping into `[0, 1]` (NaN maps to 0).
    pub fn from_clamped(mut data: Vec<f32>) -> Result<Self> {
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(data)
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(PIXELS);
        for c in 0..CHANNELS {
            for y in 0..HEIGHT {
                for x in 0..WIDTH {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(data)
    }

    pub fn filled(value: f32) -> Result<Self> {
        Self::new(vec![value; PIXELS])
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn into_values(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * HEIGHT + y) * WIDTH + x]
    }

    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(WIDTH as u32, HEIGHT as u32, |x, y| {
            let px = |c| quantize_value(self.get(c, y as usize, x as usize));
            image::Rgb([px(0), px(1), px(2)])
        })
    }

    /// Converts an RGB image, resizing bilinearly to 96x96 when needed.
    pub fn from_rgb8(img: &RgbImage) -> Self {
        let resized;
        let img = if img.width() as usize != WIDTH || img.height() as usize != HEIGHT {
            resized = image::imageops::resize(img, WIDTH as u32, HEIGHT as u32, FilterType::Triangle);
            &resized
        } else {
            img
        };
        let mut data = vec![0.0f32; PIXELS];
        for (x, y, p) in img.enumerate_pixels() {
            for c in 0..CHANNELS {
                data[(c * HEIGHT + y as usize) * WIDTH + x as usize] = f32::from(p[c]) / 255.0;
            }
        }
        ImageTensor { data }
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image { path: path.into(), source })?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    /// Decodes an in-memory image (PNG by default) and resizes it to 96x96.
    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes).map_err(|e| Error::InvalidInput(format!("cannot decode image: {e}")))?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_rgb8()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image { path: path.into(), source })
    }
}

/// An ordered sequence of bits, one bit per byte (values 0 or 1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitSeq(Vec<u8>);

impl BitSeq {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidInput(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitSeq(bits))
    }

    pub fn zeros(len: usize) -> Self {
        BitSeq(vec![0; len])
    }

    pub(crate) fn from_vec_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|b| *b <= 1));
        BitSeq(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    /// Number of positions where the two sequences differ.
    pub fn hamming_distance(&self, other: &BitSeq) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(format!(
                "bit sequences differ in length ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    pub fn bit_error_rate(&self, truth: &BitSeq) -> Result<f64> {
        if truth.is_empty() {
            return Ok(0.0);
        }
        Ok(self.hamming_distance(truth)? as f64 / truth.len() as f64)
    }
}

impl std::ops::Deref for BitSeq {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

/// Maps a real in `[0, 1]` to `round(v * 255)`; out-of-range values are clamped.
#[inline]
pub fn quantize_value(v: f32) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0).round() as u8
}

/// Appends the 8 bits of `byte`, MSB first.
#[inline]
pub(crate) fn push_byte_bits(out: &mut Vec<u8>, byte: u8) {
    for j in (0..8).rev() {
        out.push((byte >> j) & 1);
    }
}

/// Reads 8 MSB-first bits as a byte.
#[inline]
pub(crate) fn byte_from_bits(bits: &[u8]) -> u8 {
    bits.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1))
}

pub fn quantize_image(img: &ImageTensor) -> BitSeq {
    let mut bits = Vec::with_capacity(IMAGE_BITS);
    for &v in &img.data {
        push_byte_bits(&mut bits, quantize_value(v));
    }
    BitSeq(bits)
}

pub fn dequantize_image(bits: &BitSeq) -> Result<ImageTensor> {
    if bits.len() != IMAGE_BITS {
        return Err(Error::InvalidInput(format!(
            "image bit sequence needs {IMAGE_BITS} bits, got {}",
            bits.len()
        )));
    }
    let data = bits
        .chunks_exact(BITS_PER_PIXEL)
        .map(|b| f32::from(byte_from_bits(b)) / 255.0)
        .collect();
    Ok(ImageTensor { data })
}

/// Square root of the summed squared differences, on the `[0, 1]` scale.
pub fn euclidean_distance(a: &ImageTensor, b: &ImageTensor) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two raw value slices.
pub fn euclidean_distance_values(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// One labelled record from a CIFAR-10 binary batch, upscaled to 96x96.
#[derive(Debug, Clone)]
pub struct CifarRecord {
    pub label: u8,
    pub image: ImageTensor,
}

const CIFAR_SIDE: usize = 32;
const CIFAR_RECORD: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;

/// Parses a CIFAR-10 binary batch (label byte followed by 3x1024 channel bytes per record).
pub fn parse_cifar_batch(bytes: &[u8]) -> Result<Vec<CifarRecord>> {
    if bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::InvalidInput(format!(
            "CIFAR batch length {} is not a multiple of {CIFAR_RECORD}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(CIFAR_RECORD)
        .map(|rec| {
            let plane = CIFAR_SIDE * CIFAR_SIDE;
            let small = RgbImage::from_fn(CIFAR_SIDE as u32, CIFAR_SIDE as u32, |x, y| {
                let i = y as usize * CIFAR_SIDE + x as usize;
                image::Rgb([rec[1 + i], rec[1 + plane + i], rec[1 + 2 * plane + i]])
            });
            CifarRecord { label: rec[0], image: ImageTensor::from_rgb8(&small) }
        })
        .collect())
}

pub fn load_cifar_batch(path: impl AsRef<Path>) -> Result<Vec<CifarRecord>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_cifar_batch(&bytes)
}
