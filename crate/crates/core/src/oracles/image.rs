//! RGB image buffers, Gaussian noise, and procedurally drawn icon grids.

use std::io::Cursor;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_IMAGE_SIDE: u32 = 512;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error("count {count} exceeds the {cells} cells of the grid")]
    CountExceedsCells { count: usize, cells: usize },
    #[error("icon set has {available} icons, grid needs {needed}")]
    NotEnoughIcons { available: usize, needed: usize },
    #[error("target icon {0} not in icon set")]
    UnknownIcon(u32),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("png codec: {0}")]
    Codec(String),
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage(width, height));
        }
        let samples = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Ok(Self { width, height, samples })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.samples[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies `src` with its top-left corner at `(x0, y0)`, clipping at the edge.
    pub fn blit(&mut self, src: &ImageBuffer, x0: u32, y0: u32) {
        for y in 0..src.height.min(self.height.saturating_sub(y0)) {
            for x in 0..src.width.min(self.width.saturating_sub(x0)) {
                self.put(x0 + x, y0 + y, src.pixel(x, y));
            }
        }
    }

    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> ImageBuffer {
        let mut out = ImageBuffer::filled(w, h, [0, 0, 0]).expect("non-empty crop");
        for y in 0..h {
            for x in 0..w {
                out.put(x, y, self.pixel(x0 + x, y0 + y));
            }
        }
        out
    }

    pub fn mean_squared_difference(&self, other: &ImageBuffer) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| {
                let d = f64::from(a) - f64::from(b);
                d * d
            })
            .sum();
        sum / self.samples.len() as f64
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let img = image::RgbImage::from_raw(self.width, self.height, self.samples.clone())
            .ok_or_else(|| ImageError::Codec("buffer size mismatch".into()))?;
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| ImageError::Codec(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, ImageError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| ImageError::Codec(e.to_string()))?
            .to_rgb8();
        let (width, height) = img.dimensions();
        Ok(Self {
            width,
            height,
            samples: img.into_raw(),
        })
    }

    /// Hex SHA-256 of dimensions and samples; used as the content address.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_be_bytes());
        h.update(self.height.to_be_bytes());
        h.update(&self.samples);
        hex::encode(h.finalize())
    }
}

/// Adds zero-mean Gaussian noise of the given variance to every sample,
/// clamping to `[0, 255]`.
pub fn add_gaussian_noise<R: Rng + ?Sized>(
    img: &ImageBuffer,
    variance: f64,
    rng: &mut R,
) -> Result<ImageBuffer, ImageError> {
    if variance.is_nan() || variance < 0.0 {
        return Err(ImageError::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite std dev");
    let samples = img
        .samples
        .iter()
        .map(|&s| (f64::from(s) + normal.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(ImageBuffer {
        width: img.width,
        height: img.height,
        samples,
    })
}

/// Source of base images for the noise-perception task.
pub trait ImageSource: Send + Sync {
    fn render(&self, prompt: &str, seed: u64, side: u32) -> Result<ImageBuffer, ImageError>;
}

/// Deterministic scenes built from gradients and shapes, seeded by the
/// prompt text and seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProceduralScenes;

impl ImageSource for ProceduralScenes {
    fn render(&self, prompt: &str, seed: u64, side: u32) -> Result<ImageBuffer, ImageError> {
        let digest = Sha256::digest(prompt.as_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        for (k, b) in key.iter_mut().zip(seed.to_le_bytes()) {
            *k ^= b;
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        let top: [u8; 3] = rng.gen();
        let bottom: [u8; 3] = rng.gen();
        let mut img = ImageBuffer::filled(side, side, top)?;
        for y in 0..side {
            let t = f64::from(y) / f64::from(side.max(2) - 1);
            let row: [u8; 3] =
                std::array::from_fn(|c| (f64::from(top[c]) * (1.0 - t) + f64::from(bottom[c]) * t) as u8);
            for x in 0..side {
                img.put(x, y, row);
            }
        }
        for _ in 0..rng.gen_range(4..12) {
            let color: [u8; 3] = rng.gen();
            let cx = rng.gen_range(0..side) as i64;
            let cy = rng.gen_range(0..side) as i64;
            let r = rng.gen_range(side / 16..=side / 4).max(1) as i64;
            let disc = rng.gen_bool(0.5);
            for y in (cy - r).max(0)..(cy + r).min(side as i64) {
                for x in (cx - r).max(0)..(cx + r).min(side as i64) {
                    let inside = !disc || (x - cx).pow(2) + (y - cy).pow(2) <= r * r;
                    if inside {
                        img.put(x as u32, y as u32, color);
                    }
                }
            }
        }
        Ok(img)
    }
}

const SHAPES: u32 = 8;

/// A procedurally drawn glyph. Distinct ids always draw distinct glyphs:
/// the shape is `id % 8` and the colour is an injective scramble of
/// `id / 8` (ids below 2^21).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Icon(pub u32);

impl Icon {
    pub fn color(self) -> [u8; 3] {
        // odd multiplier is a bijection mod 2^18; 6 bits per channel, scaled
        // to stay darker than the near-white background
        let k = (self.0 / SHAPES).wrapping_mul(0x9E_37_79) & 0x3_FF_FF;
        [
            ((k >> 12) & 0x3F) as u8 * 3,
            ((k >> 6) & 0x3F) as u8 * 3,
            (k & 0x3F) as u8 * 3,
        ]
    }

    pub fn render(self, side: u32) -> ImageBuffer {
        let bg = [250, 250, 250];
        let mut img = ImageBuffer::filled(side, side, bg).expect("positive side");
        let fg = self.color();
        let s = side as i64;
        let c = s / 2;
        let r = (s * 3 / 8).max(1);
        let b = (s / 8).max(1);
        for y in 0..s {
            for x in 0..s {
                let (dx, dy) = (x - c, y - c);
                let on = match self.0 % SHAPES {
                    0 => dx * dx + dy * dy <= r * r,
                    1 => dx.abs() <= r && dy.abs() <= r,
                    2 => dy >= -r && dy <= r && dx.abs() <= (dy + r) / 2,
                    3 => dx.abs() + dy.abs() <= r,
                    4 => (dx.abs() <= b && dy.abs() <= r) || (dy.abs() <= b && dx.abs() <= r),
                    5 => {
                        let d = dx * dx + dy * dy;
                        d <= r * r && d >= (r - b) * (r - b)
                    }
                    6 => dx.abs() <= r && dy.abs() <= r && (y / b.max(1)) % 2 == 0,
                    _ => (dx - dy).abs() <= b || (dx + dy).abs() <= b,
                };
                if on {
                    img.put(x as u32, y as u32, fg);
                }
            }
        }
        // a one-pixel corner tag makes every id's raster unique even when
        // tiny cells clip the shape
        img.put(0, 0, fg);
        img
    }
}

/// A finite set of icons `0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IconSet {
    pub count: u32,
}

impl IconSet {
    pub fn new(count: u32) -> Self {
        Self { count }
    }

    pub fn contains(&self, icon: Icon) -> bool {
        icon.0 < self.count
    }
}

impl Default for IconSet {
    fn default() -> Self {
        Self::new(128)
    }
}

/// A composed grid and the icon placed in each cell, row-major.
#[derive(Debug, Clone)]
pub struct IconGrid {
    pub image: ImageBuffer,
    pub cells: Vec<Icon>,
    pub grid: u32,
    pub cell_side: u32,
    pub count: usize,
}

/// Places `count` copies of `target` and distinct non-target icons in the
/// remaining cells of a `grid x grid` image.
pub fn compose_icon_grid<R: Rng + ?Sized>(
    icons: &IconSet,
    target: Icon,
    count: usize,
    grid: u32,
    cell_side: u32,
    rng: &mut R,
) -> Result<IconGrid, ImageError> {
    let cells = (grid * grid) as usize;
    if count == 0 {
        return Err(ImageError::ZeroCount);
    }
    if count > cells {
        return Err(ImageError::CountExceedsCells { count, cells });
    }
    if !icons.contains(target) {
        return Err(ImageError::UnknownIcon(target.0));
    }
    let needed = cells - count + 1;
    if (icons.count as usize) < needed.max(2) {
        return Err(ImageError::NotEnoughIcons {
            available: icons.count as usize,
            needed: needed.max(2),
        });
    }
    let mut others: Vec<Icon> = (0..icons.count).map(Icon).filter(|&i| i != target).collect();
    others.shuffle(rng);
    let mut layout: Vec<Icon> = std::iter::repeat_n(target, count)
        .chain(others.into_iter().take(cells - count))
        .collect();
    layout.shuffle(rng);
    let side = grid * cell_side;
    let mut image = ImageBuffer::filled(side, side, [255, 255, 255])?;
    for (i, icon) in layout.iter().enumerate() {
        let (row, col) = (i as u32 / grid, i as u32 % grid);
        image.blit(&icon.render(cell_side), col * cell_side, row * cell_side);
    }
    Ok(IconGrid {
        image,
        cells: layout,
        grid,
        cell_side,
        count,
    })
}
