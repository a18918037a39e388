//! Degradation operators, noise, SNR and image I/O.

mod io;

pub use io::{
    decode_pdf64, encode_pdf64, encode_pgm, read_pdf64, read_pgm, read_pgm_bytes, write_pdf64,
    write_pgm, PDF64_MAGIC,
};

use crate::error::{check_len, Error, Result};
use crate::linop::{Axis, LinearMap};
use crate::rng::CounterRng;

/// Grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        check_len("image pixels", width * height, pixels.len())?;
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Same dimensions, new pixel values.
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, pixels)
    }

    /// Apply a square operator on the pixel vector.
    pub fn map(&self, op: &LinearMap) -> Result<Self> {
        self.with_pixels(op.apply(&self.pixels)?)
    }
}

/// Odd-sized square kernel, nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        check_len("kernel taps", size * size, taps.len())?;
        if taps.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel taps must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "kernel must sum to 1, got {sum}"
            )));
        }
        Ok(Kernel { size, taps })
    }

    /// `size x size` box average.
    pub fn uniform(size: usize) -> Result<Self> {
        let n = size * size;
        Self::new(size, vec![1.0 / n as f64; n])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Periodic convolution with `kernel` on `width x height` images.
pub fn make_blur(kernel: &Kernel, width: usize, height: usize) -> Result<LinearMap> {
    LinearMap::convolution_2d(width, height, kernel.size, kernel.taps.clone())
}

/// Horizontal and vertical forward differences.
pub fn make_gradients(width: usize, height: usize) -> (LinearMap, LinearMap) {
    (
        LinearMap::forward_difference_2d(width, height, Axis::Horizontal),
        LinearMap::forward_difference_2d(width, height, Axis::Vertical),
    )
}

/// Add i.i.d. `N(0, variance)` noise drawn from stream 0 of `seed`.
pub fn add_gaussian_noise(image: &Image, variance: f64, seed: u64) -> Result<Image> {
    add_gaussian_noise_stream(image, variance, seed, 0)
}

pub fn add_gaussian_noise_stream(
    image: &Image,
    variance: f64,
    seed: u64,
    stream: u64,
) -> Result<Image> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(image.clone());
    }
    let sd = variance.sqrt();
    let noise = CounterRng::new(seed, stream).gauss_vec(image.len());
    image.with_pixels(
        image
            .pixels
            .iter()
            .zip(noise)
            .map(|(p, g)| p + sd * g)
            .collect(),
    )
}

/// `20 log10(‖reference‖ / ‖x − reference‖)`; `+∞` when they coincide.
pub fn snr_db(reference: &Image, x: &Image) -> Result<f64> {
    if reference.width != x.width || reference.height != x.height {
        return Err(Error::InvalidArgument(format!(
            "SNR needs equal dimensions, got {}x{} and {}x{}",
            reference.width, reference.height, x.width, x.height
        )));
    }
    Ok(snr_db_slices(&reference.pixels, &x.pixels))
}

pub fn snr_db_slices(reference: &[f64], x: &[f64]) -> f64 {
    let signal: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err: f64 = reference
        .iter()
        .zip(x)
        .map(|(r, v)| (r - v) * (r - v))
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (signal / err).log10()
    }
}

/// Blur kernel, noise variances `(θ₁², θ₂²)` and seed for the two
/// observations `w₁ = x + n₁`, `w₂ = H x + n₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationSpec {
    pub kernel: Kernel,
    pub noise_variances: (f64, f64),
    pub seed: u64,
}

impl DegradationSpec {
    pub const NOISE_STREAM_1: u64 = 1;
    pub const NOISE_STREAM_2: u64 = 2;

    pub fn apply(&self, image: &Image) -> Result<(Image, Image)> {
        let blur = make_blur(&self.kernel, image.width, image.height)?;
        let w1 = add_gaussian_noise_stream(
            image,
            self.noise_variances.0,
            self.seed,
            Self::NOISE_STREAM_1,
        )?;
        let w2 = add_gaussian_noise_stream(
            &image.map(&blur)?,
            self.noise_variances.1,
            self.seed,
            Self::NOISE_STREAM_2,
        )?;
        Ok((w1, w2))
    }
}
