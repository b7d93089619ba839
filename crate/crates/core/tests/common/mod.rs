#![allow(dead_code)]

use chaostego::{Channels, ImageDims, RasterImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Texture families for synthetic covers.
#[derive(Clone, Copy, Debug)]
pub enum Texture {
    Gradient,
    Waves,
    Blobs,
    Blocks,
    Mixed,
}

pub const TEXTURES: [Texture; 5] = [
    Texture::Gradient,
    Texture::Waves,
    Texture::Blobs,
    Texture::Blocks,
    Texture::Mixed,
];

fn base_value(texture: Texture, r: f64, c: f64, ch: f64, params: &[f64; 8]) -> f64 {
    use std::f64::consts::TAU;
    match texture {
        Texture::Gradient => 40.0 + 170.0 * (0.6 * c + 0.4 * r) + 12.0 * ch,
        Texture::Waves => {
            128.0
                + 60.0 * (TAU * (params[0] * r + params[1] * c)).sin()
                + 35.0 * (TAU * (params[2] * c + 0.1 * ch)).cos()
        }
        Texture::Blobs => {
            let mut v = 50.0;
            for k in 0..3 {
                let (cy, cx) = (params[2 * k], params[2 * k + 1]);
                let d2 = (r - cy).powi(2) + (c - cx).powi(2);
                v += 90.0 * (-d2 / 0.03).exp();
            }
            v + 20.0 * ch
        }
        Texture::Blocks => {
            let cell = ((r * 6.0).floor() + (c * 6.0).floor()) as i64;
            60.0 + 25.0 * (cell.rem_euclid(6) as f64) + 10.0 * ch
        }
        Texture::Mixed => {
            128.0
                + 45.0 * (TAU * params[3] * r * c).sin()
                + 40.0 * (2.0 * c - 1.0) * (2.0 * r - 1.0)
                + 25.0 * (TAU * params[4] * (r + ch * 0.2)).cos()
        }
    }
}

/// A textured cover with Gaussian noise, clamped to the sample range.
pub fn textured_cover(
    texture: Texture,
    dims: ImageDims,
    channels: Channels,
    noise_sigma: f64,
    seed: u64,
) -> RasterImage {
    let mut rng = rng(seed);
    let params: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.5..4.0) / 4.0 + 0.1);
    let noise = Normal::new(0.0, noise_sigma).expect("valid sigma");
    let nch = channels.count();
    let mut samples = Vec::with_capacity(dims.cells() * nch);
    for row in 0..dims.rows() {
        for col in 0..dims.cols() {
            let r = row as f64 / dims.rows() as f64;
            let c = col as f64 / dims.cols() as f64;
            for ch in 0..nch {
                let v = base_value(texture, r, c, ch as f64, &params) + noise.sample(&mut rng);
                samples.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(dims, channels, samples).expect("sample count matches")
}

/// A cover whose samples are uniformly random.
pub fn random_cover(dims: ImageDims, channels: Channels, seed: u64) -> RasterImage {
    let mut rng = rng(seed);
    let mut samples = vec![0u8; dims.cells() * channels.count()];
    rng.fill(&mut samples[..]);
    RasterImage::new(dims, channels, samples).expect("sample count matches")
}

/// A cover with a strongly uneven pairs-of-values histogram: samples are
/// pushed to even values except for a small odd share.
pub fn comb_cover(dims: ImageDims, seed: u64, odd_share: f64) -> RasterImage {
    let mut image = textured_cover(Texture::Mixed, dims, Channels::Gray, 6.0, seed);
    let mut rng = rng(seed ^ 0x5eed);
    for s in image.samples_mut() {
        *s &= 0xfe;
        if rng.random_bool(odd_share) {
            *s |= 1;
        }
    }
    image
}

pub fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut bytes = vec![0u8; len];
    rng(seed).fill(&mut bytes[..]);
    bytes
}
