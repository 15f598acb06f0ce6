//! Image and mask value types plus the pixel-space metrics shared by the
//! renderer, the classifiers, and the attack reward.
//!
//! Pixels are stored as real RGB triples in `[0, 1]`; quantization to 8 bits
//! happens only at file I/O (companion crate) and inside [`mse`], which is
//! deliberately computed on the `[0, 255]` scale so the published reward
//! weights stay meaningful.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Errors from image and mask construction or per-pixel operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImagingError {
    /// Width or height was zero.
    EmptyDimensions,
    /// Pixel buffer length does not equal `width * height`.
    PixelCount { expected: usize, got: usize },
    /// A channel value was non-finite or outside `[0, 1]`.
    ChannelOutOfRange,
    /// Two operands have different dimensions.
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Downsample factor is zero or does not divide the dimensions.
    BadFactor {
        width: usize,
        height: usize,
        factor: usize,
    },
}

impl fmt::Display for ImagingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImagingError::EmptyDimensions => write!(f, "image dimensions must be at least 1x1"),
            ImagingError::PixelCount { expected, got } => {
                write!(f, "pixel buffer holds {got} entries, expected {expected}")
            }
            ImagingError::ChannelOutOfRange => {
                write!(f, "channel values must be finite and within [0, 1]")
            }
            ImagingError::DimensionMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            ImagingError::BadFactor {
                width,
                height,
                factor,
            } => write!(
                f,
                "factor {factor} must be nonzero and divide {width}x{height}"
            ),
        }
    }
}

impl core::error::Error for ImagingError {}

/// Immutable RGB image with row-major real-valued pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    /// Builds an image, validating dimensions and channel ranges.
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyDimensions);
        }
        if pixels.len() != width * height {
            return Err(ImagingError::PixelCount {
                expected: width * height,
                got: pixels.len(),
            });
        }
        for p in &pixels {
            for &c in p {
                if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                    return Err(ImagingError::ChannelOutOfRange);
                }
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant-color image.
    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![color; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel (row-major).
    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Result<Self, ImagingError>
    where
        F: FnMut(usize, usize) -> [f64; 3],
    {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyDimensions);
        }
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    /// Pixel at `(x, y)`; panics when out of bounds.
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.pixels[y * self.width + x]
    }

    fn same_size(&self, other: &Image) -> Result<(), ImagingError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImagingError::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        Ok(())
    }

    /// Arithmetic mean of each channel over all pixels.
    pub fn mean_color(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for p in &self.pixels {
            acc[0] += p[0];
            acc[1] += p[1];
            acc[2] += p[2];
        }
        let n = self.pixels.len() as f64;
        [acc[0] / n, acc[1] / n, acc[2] / n]
    }
}

/// Boolean foreground mask with an optional class label from the segmenter
/// that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    label: Option<String>,
}

impl Mask {
    pub fn new(
        width: usize,
        height: usize,
        bits: Vec<bool>,
        label: Option<String>,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyDimensions);
        }
        if bits.len() != width * height {
            return Err(ImagingError::PixelCount {
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
            label,
        })
    }

    /// All-foreground mask.
    pub fn full(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![true; width * height], None)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

/// Mean squared error between two same-size images on the 8-bit `[0, 255]`
/// scale, averaged over all `width * height * 3` channel entries.
pub fn mse(a: &Image, b: &Image) -> Result<f64, ImagingError> {
    a.same_size(b)?;
    let mut acc = 0.0;
    for (pa, pb) in a.pixels.iter().zip(&b.pixels) {
        for c in 0..3 {
            let d = (pa[c] - pb[c]) * 255.0;
            acc += d * d;
        }
    }
    Ok(acc / (a.pixels.len() * 3) as f64)
}

/// Keeps image pixels where the mask bit is set and substitutes `background`
/// elsewhere.
pub fn apply_mask(img: &Image, mask: &Mask, background: [f64; 3]) -> Result<Image, ImagingError> {
    if img.width != mask.width || img.height != mask.height {
        return Err(ImagingError::DimensionMismatch {
            left: (img.width, img.height),
            right: (mask.width, mask.height),
        });
    }
    let pixels = img
        .pixels
        .iter()
        .zip(&mask.bits)
        .map(|(p, &bit)| if bit { *p } else { background })
        .collect();
    Image::new(img.width, img.height, pixels)
}

/// Block-average downsampling by an integer factor that must divide both
/// dimensions.
pub fn downsample(img: &Image, factor: usize) -> Result<Image, ImagingError> {
    if factor == 0 || img.width % factor != 0 || img.height % factor != 0 {
        return Err(ImagingError::BadFactor {
            width: img.width,
            height: img.height,
            factor,
        });
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let ow = img.width / factor;
    let oh = img.height / factor;
    let inv = 1.0 / (factor * factor) as f64;
    let mut pixels = Vec::with_capacity(ow * oh);
    for by in 0..oh {
        for bx in 0..ow {
            let mut acc = [0.0; 3];
            for dy in 0..factor {
                let row = (by * factor + dy) * img.width + bx * factor;
                for dx in 0..factor {
                    let p = img.pixels[row + dx];
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            }
            pixels.push([acc[0] * inv, acc[1] * inv, acc[2] * inv]);
        }
    }
    Image::new(ow, oh, pixels)
}

/// Marks pixels whose color differs from `background` by more than
/// `threshold` (Euclidean distance) as foreground. A crude segmenter for
/// synthetic fixtures rendered on a known background.
pub fn chroma_mask(
    img: &Image,
    background: [f64; 3],
    threshold: f64,
    label: Option<String>,
) -> Result<Mask, ImagingError> {
    let bits = img
        .pixels
        .iter()
        .map(|p| {
            let d = [
                p[0] - background[0],
                p[1] - background[1],
                p[2] - background[2],
            ];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] > threshold * threshold
        })
        .collect();
    Mask::new(img.width, img.height, bits, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img1x1(c: [f64; 3]) -> Image {
        Image::new(1, 1, vec![c]).unwrap()
    }

    #[test]
    fn mse_identity_is_zero() {
        let img = Image::filled(3, 2, [0.25, 0.5, 0.75]).unwrap();
        assert_eq!(mse(&img, &img).unwrap(), 0.0);
    }

    #[test]
    fn mse_single_channel_offset() {
        // One channel differs by 10 8-bit units: (10^2 + 0 + 0) / 3.
        let a = img1x1([10.0 / 255.0, 0.0, 0.0]);
        let b = img1x1([0.0, 0.0, 0.0]);
        let got = mse(&a, &b).unwrap();
        assert!((got - 100.0 / 3.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn mse_black_vs_white() {
        let a = Image::filled(2, 2, [0.0, 0.0, 0.0]).unwrap();
        let b = Image::filled(2, 2, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
    }

    #[test]
    fn mse_rejects_dimension_mismatch() {
        let a = Image::filled(2, 2, [0.0; 3]).unwrap();
        let b = Image::filled(2, 3, [0.0; 3]).unwrap();
        assert!(matches!(
            mse(&a, &b),
            Err(ImagingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_mask_full_is_identity() {
        let img = Image::from_fn(4, 4, |x, y| [x as f64 / 4.0, y as f64 / 4.0, 0.5]).unwrap();
        let mask = Mask::full(4, 4).unwrap();
        assert_eq!(apply_mask(&img, &mask, [0.0; 3]).unwrap(), img);
    }

    #[test]
    fn apply_mask_empty_gives_background() {
        let img = Image::filled(2, 2, [0.9, 0.1, 0.4]).unwrap();
        let mask = Mask::new(2, 2, vec![false; 4], None).unwrap();
        let out = apply_mask(&img, &mask, [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, Image::filled(2, 2, [0.0; 3]).unwrap());
    }

    #[test]
    fn apply_mask_checkerboard_alternates() {
        let img = Image::filled(4, 4, [1.0, 0.0, 0.0]).unwrap();
        let bits = (0..16).map(|i| (i / 4 + i % 4) % 2 == 0).collect();
        let mask = Mask::new(4, 4, bits, None).unwrap();
        let bg = [0.0, 0.0, 1.0];
        let out = apply_mask(&img, &mask, bg).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let want = if (x + y) % 2 == 0 { [1.0, 0.0, 0.0] } else { bg };
                assert_eq!(out.pixel(x, y), want);
            }
        }
    }

    #[test]
    fn apply_mask_is_idempotent() {
        let img = Image::from_fn(4, 2, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.3]).unwrap();
        let bits = (0..8).map(|i| i % 3 == 0).collect();
        let mask = Mask::new(4, 2, bits, None).unwrap();
        let once = apply_mask(&img, &mask, [0.1, 0.2, 0.3]).unwrap();
        let twice = apply_mask(&once, &mask, [0.1, 0.2, 0.3]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn downsample_factor_one_is_identity() {
        let img = Image::from_fn(3, 3, |x, y| [x as f64 / 3.0, y as f64 / 3.0, 0.0]).unwrap();
        assert_eq!(downsample(&img, 1).unwrap(), img);
    }

    #[test]
    fn downsample_constant_block() {
        let img = Image::filled(2, 2, [0.3, 0.6, 0.9]).unwrap();
        let out = downsample(&img, 2).unwrap();
        assert_eq!(out.width(), 1);
        assert_eq!(out.pixel(0, 0), [0.3, 0.6, 0.9]);
    }

    #[test]
    fn downsample_averages_block() {
        let pixels = vec![[0.0; 3], [0.0; 3], [1.0; 3], [1.0; 3]];
        let img = Image::new(2, 2, pixels).unwrap();
        let out = downsample(&img, 2).unwrap();
        assert_eq!(out.pixel(0, 0), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn downsample_rejects_non_divisible() {
        let img = Image::filled(3, 2, [0.0; 3]).unwrap();
        assert!(matches!(
            downsample(&img, 2),
            Err(ImagingError::BadFactor { .. })
        ));
    }

    #[test]
    fn image_rejects_out_of_range() {
        assert!(matches!(
            Image::new(1, 1, vec![[1.5, 0.0, 0.0]]),
            Err(ImagingError::ChannelOutOfRange)
        ));
        assert!(matches!(
            Image::new(1, 1, vec![[f64::NAN, 0.0, 0.0]]),
            Err(ImagingError::ChannelOutOfRange)
        ));
    }

    #[test]
    fn chroma_mask_separates_foreground() {
        let mut pixels = vec![[0.0; 3]; 4];
        pixels[2] = [1.0, 0.0, 0.0];
        let img = Image::new(2, 2, pixels).unwrap();
        let mask = chroma_mask(&img, [0.0; 3], 0.5, None).unwrap();
        assert_eq!(mask.bits(), &[false, false, true, false]);
    }
}
