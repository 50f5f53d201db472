//! Convolution and transposed-convolution forward passes (no padding).

use crate::{Error, Result};

/// A dense `channels x height x width` tensor, row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::InvalidInput(format!(
                "tensor {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Tensor { channels, height, width, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    TransposedConv,
}

impl LayerKind {
    pub fn code(self) -> u8 {
        match self {
            LayerKind::Conv => 0,
            LayerKind::TransposedConv => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LayerKind::Conv),
            1 => Some(LayerKind::TransposedConv),
            _ => None,
        }
    }
}

/// One (transposed) convolution layer. Weights are stored `(out, in, kh, kw)`
/// for both kinds, followed by one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Layer {
    pub fn weight_count(&self) -> usize {
        self.out_ch * self.in_ch * self.kh * self.kw
    }

    pub fn is_well_formed(&self) -> bool {
        self.stride >= 1
            && self.kh >= 1
            && self.kw >= 1
            && self.weights.len() == self.weight_count()
            && self.bias.len() == self.out_ch
    }

    /// Spatial output size, or `None` when the input is too small.
    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        match self.kind {
            LayerKind::Conv => {
                if h < self.kh || w < self.kw {
                    return None;
                }
                Some(((h - self.kh) / self.stride + 1, (w - self.kw) / self.stride + 1))
            }
            LayerKind::TransposedConv => {
                if h == 0 || w == 0 {
                    return None;
                }
                Some(((h - 1) * self.stride + self.kh, (w - 1) * self.stride + self.kw))
            }
        }
    }

    #[inline]
    fn w(&self, o: usize, c: usize, ky: usize, kx: usize) -> f32 {
        self.weights[((o * self.in_ch + c) * self.kh + ky) * self.kw + kx]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.channels != self.in_ch {
            return Err(Error::InvalidInput(format!(
                "layer expects {} input channels, got {}",
                self.in_ch, x.channels
            )));
        }
        let (oh, ow) = self.output_hw(x.height, x.width).ok_or_else(|| {
            Error::InvalidInput(format!("input {}x{} too small for layer", x.height, x.width))
        })?;
        let mut out = Tensor::zeros(self.out_ch, oh, ow);
        for o in 0..self.out_ch {
            out.data[o * oh * ow..(o + 1) * oh * ow].fill(self.bias[o]);
        }
        match self.kind {
            LayerKind::Conv => self.conv_into(x, &mut out),
            LayerKind::TransposedConv => self.tconv_into(x, &mut out),
        }
        Ok(out)
    }

    fn conv_into(&self, x: &Tensor, out: &mut Tensor) {
        let (oh, ow, s) = (out.height, out.width, self.stride);
        for o in 0..self.out_ch {
            let plane = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
            for c in 0..self.in_ch {
                let input = &x.data[c * x.height * x.width..(c + 1) * x.height * x.width];
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let w = self.w(o, c, ky, kx);
                        for oy in 0..oh {
                            let row = &input[(oy * s + ky) * x.width + kx..];
                            let dst = &mut plane[oy * ow..(oy + 1) * ow];
                            if s == 1 {
                                dst.iter_mut().zip(row).for_each(|(d, v)| *d += w * v);
                            } else {
                                dst.iter_mut().zip(row.iter().step_by(s)).for_each(|(d, v)| *d += w * v);
                            }
                        }
                    }
                }
            }
        }
    }

    fn tconv_into(&self, x: &Tensor, out: &mut Tensor) {
        let (oh, ow, s) = (out.height, out.width, self.stride);
        for o in 0..self.out_ch {
            let plane = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
            for c in 0..self.in_ch {
                let input = &x.data[c * x.height * x.width..(c + 1) * x.height * x.width];
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let w = self.w(o, c, ky, kx);
                        for iy in 0..x.height {
                            let src = &input[iy * x.width..(iy + 1) * x.width];
                            let row = &mut plane[(iy * s + ky) * ow + kx..];
                            for (ix, v) in src.iter().enumerate() {
                                row[ix * s] += w * v;
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, t: &mut Tensor) {
        match self {
            Activation::Relu => t.data.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Sigmoid => t.data.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
        }
    }
}
