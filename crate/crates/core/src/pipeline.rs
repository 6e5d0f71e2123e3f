//! End-to-end stylization.
//!
//! `stylize` runs: pad content -> encode -> mix style summaries -> AdaIN ->
//! build mask `M = alpha * D` at feature resolution -> per-pixel blend ->
//! decode -> crop. With no mask source, `M` is the constant `alpha`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

use log::warn;
use sha2::{Digest, Sha256};

use crate::adain::{adain, blend_spatial, mix_styles, StyleSummary, DEFAULT_EPSILON};
use crate::depth::{normalize_depth, resample_to, shape_mask, DepthControls, DepthMask, RawDepth};
use crate::error::{Error, Result};
use crate::image_io::{crop_to, from_tensor, pad_to_multiple, to_tensor, RasterImage};
use crate::nn::{build_decoder, build_encoder, synthetic_store, Manifest, Network, Section, WeightStore};
use crate::tensor::Tensor3;

/// Three 2x2 pools: inputs are padded to a multiple of 8.
pub const SPATIAL_MULTIPLE: usize = 8;

pub const ENCODER_FILE: &str = "encoder.adsw";
pub const DECODER_FILE: &str = "decoder.adsw";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Default)]
pub enum MaskSource {
    #[default]
    None,
    /// Relative depth; min-max normalized before shaping.
    Depth(RawDepth),
    /// Strength values already in `[0, 1]`; shaped but not normalized.
    Mask(DepthMask),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StylizeParams {
    pub alpha: f32,
    pub depth_controls: DepthControls,
    /// Defaults to equal weights across the given styles.
    pub style_weights: Option<Vec<f32>>,
    pub mask_source: MaskSource,
}

impl Default for StylizeParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            depth_controls: DepthControls::default(),
            style_weights: None,
            mask_source: MaskSource::None,
        }
    }
}

impl StylizeParams {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Feature-space intermediates of one stylization, before decoding.
#[derive(Debug, Clone)]
pub struct FeatureBlend {
    pub content: Tensor3,
    pub styled: Tensor3,
    pub mask: DepthMask,
    pub blended: Tensor3,
    /// Content size before divisibility padding.
    pub original_dims: (usize, usize),
}

type CacheKey = [u8; 32];

/// Style summaries keyed by a SHA-256 of the style's bytes.
#[derive(Debug, Default)]
pub struct StyleCache {
    entries: RwLock<HashMap<CacheKey, StyleSummary>>,
}

impl StyleCache {
    pub fn key_for_bytes(bytes: &[u8]) -> CacheKey {
        Sha256::digest(bytes).into()
    }

    pub fn key_for_image(img: &RasterImage) -> CacheKey {
        let mut h = Sha256::new();
        h.update((img.height() as u64).to_le_bytes());
        h.update((img.width() as u64).to_le_bytes());
        h.update(img.pixels());
        h.finalize().into()
    }

    pub fn get(&self, key: &CacheKey) -> Option<StyleSummary> {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, summary: StyleSummary) {
        self.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key, summary);
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Encoder/decoder pair plus a style summary cache. Safe to share across
/// threads.
#[derive(Debug)]
pub struct Engine {
    encoder: Network,
    decoder: Network,
    cache: StyleCache,
}

impl Engine {
    pub fn new(encoder: Network, decoder: Network) -> Result<Self> {
        if encoder.output_channels() != decoder.input_channels() {
            return Err(Error::invalid(format!(
                "encoder emits {:?} channels, decoder expects {:?}",
                encoder.output_channels(),
                decoder.input_channels()
            )));
        }
        if encoder.input_channels() != Some(3) || decoder.output_channels() != Some(3) {
            return Err(Error::invalid("encoder input and decoder output must be RGB"));
        }
        Ok(Self { encoder, decoder, cache: StyleCache::default() })
    }

    pub fn from_stores(encoder: &WeightStore, decoder: &WeightStore) -> Result<Self> {
        Self::new(build_encoder(encoder)?, build_decoder(decoder)?)
    }

    /// Loads `encoder.adsw` and `decoder.adsw` from `dir`. If the directory
    /// also carries a `manifest.txt` it must match the built-in manifest.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST_FILE);
        if manifest_path.exists() {
            let exported = Manifest::parse(&std::fs::read_to_string(&manifest_path)?)?;
            let builtin = Manifest::builtin();
            if exported.encoder != builtin.encoder
                || exported.decoder != builtin.decoder
                || exported.pixel_range != builtin.pixel_range
            {
                return Err(Error::manifest(format!(
                    "{} does not match the engine's layer manifest",
                    manifest_path.display()
                )));
            }
        }
        let encoder = WeightStore::read_file(dir.join(ENCODER_FILE))?;
        let decoder = WeightStore::read_file(dir.join(DECODER_FILE))?;
        Self::from_stores(&encoder, &decoder)
    }

    /// Random weights; geometry and determinism tests only.
    pub fn synthetic(seed: u64) -> Self {
        let m = Manifest::builtin();
        let enc = synthetic_store(m, Section::Encoder, seed);
        let dec = synthetic_store(m, Section::Decoder, seed.wrapping_add(1));
        Self::from_stores(&enc, &dec).expect("synthetic stores follow the manifest")
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    pub fn cache(&self) -> &StyleCache {
        &self.cache
    }

    /// Pads to a multiple of 8 and encodes. Returns features and original
    /// dimensions.
    pub fn encode(&self, img: &RasterImage) -> Result<(Tensor3, (usize, usize))> {
        let (padded, dims) = pad_to_multiple(&to_tensor(img), SPATIAL_MULTIPLE)?;
        Ok((self.encoder.forward(&padded)?, dims))
    }

    pub fn decode(&self, features: &Tensor3, dims: (usize, usize)) -> Result<RasterImage> {
        let out = self.decoder.forward(features)?;
        from_tensor(&crop_to(&out, dims.0, dims.1)?)
    }

    /// Encodes a style image without consulting the cache.
    pub fn summarize_style(&self, style: &RasterImage) -> Result<StyleSummary> {
        let (features, _) = self.encode(style)?;
        StyleSummary::from_features(&features)
    }

    /// Cached by a hash of the pixel data.
    pub fn style_summary(&self, style: &RasterImage) -> Result<StyleSummary> {
        let key = StyleCache::key_for_image(style);
        self.cached(key, || self.summarize_style(style))
    }

    /// Cached by a hash of the encoded file bytes.
    pub fn style_summary_from_file_bytes(&self, bytes: &[u8]) -> Result<StyleSummary> {
        let key = StyleCache::key_for_bytes(bytes);
        self.cached(key, || self.summarize_style(&RasterImage::decode(bytes)?))
    }

    fn cached(&self, key: CacheKey, compute: impl FnOnce() -> Result<StyleSummary>) -> Result<StyleSummary> {
        if let Some(s) = self.cache.get(&key) {
            return Ok(s);
        }
        let summary = compute()?;
        self.cache.insert(key, summary.clone());
        Ok(summary)
    }

    pub fn reconstruct(&self, content: &RasterImage) -> Result<RasterImage> {
        let (features, dims) = self.encode(content)?;
        self.decode(&features, dims)
    }

    /// Uniform-strength AdaIN with a single style, no blending.
    pub fn stylize_plain(&self, content: &RasterImage, style: &RasterImage) -> Result<RasterImage> {
        let (features, dims) = self.encode(content)?;
        let styled = adain(&features, &self.style_summary(style)?, DEFAULT_EPSILON)?;
        self.decode(&styled, dims)
    }

    pub fn stylize(
        &self,
        content: &RasterImage,
        styles: &[RasterImage],
        params: &StylizeParams,
    ) -> Result<RasterImage> {
        let summaries = styles.iter().map(|s| self.style_summary(s)).collect::<Result<Vec<_>>>()?;
        self.stylize_with_summaries(content, &summaries, params)
    }

    pub fn stylize_with_summaries(
        &self,
        content: &RasterImage,
        summaries: &[StyleSummary],
        params: &StylizeParams,
    ) -> Result<RasterImage> {
        let blend = self.blend_features(content, summaries, params)?;
        self.decode(&blend.blended, blend.original_dims)
    }

    /// Everything up to (not including) decoding.
    pub fn blend_features(
        &self,
        content: &RasterImage,
        summaries: &[StyleSummary],
        params: &StylizeParams,
    ) -> Result<FeatureBlend> {
        params.validate()?;
        if summaries.is_empty() {
            return Err(Error::invalid("at least one style is required"));
        }
        let weights = match &params.style_weights {
            Some(w) => w.clone(),
            None => vec![1.0 / summaries.len() as f32; summaries.len()],
        };
        let style = if summaries.len() == 1 && weights == [1.0] {
            summaries[0].clone()
        } else {
            mix_styles(summaries, &weights)?
        };

        let (features, dims) = self.encode(content)?;
        let styled = adain(&features, &style, DEFAULT_EPSILON)?;
        let (fh, fw) = (features.height(), features.width());
        let (ph, pw) = (
            dims.0.div_ceil(SPATIAL_MULTIPLE) * SPATIAL_MULTIPLE,
            dims.1.div_ceil(SPATIAL_MULTIPLE) * SPATIAL_MULTIPLE,
        );

        let strength = match &params.mask_source {
            MaskSource::None => None,
            MaskSource::Depth(raw) => {
                check_dims(raw.height(), raw.width(), dims, "depth map")?;
                match normalize_depth(raw) {
                    Ok(mask) => Some(mask),
                    Err(Error::DegenerateDepth(v)) => {
                        warn!("depth map is constant ({v}); falling back to uniform strength");
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
            MaskSource::Mask(mask) => {
                check_dims(mask.height(), mask.width(), dims, "mask")?;
                Some(mask.clone())
            }
        };
        let mask = match strength {
            Some(full) => {
                let shaped = shape_mask(&full, &params.depth_controls);
                let padded = shaped.pad_reflect(ph, pw)?;
                resample_to(&padded, fh, fw)?.scaled(params.alpha)?
            }
            None => DepthMask::constant(fh, fw, params.alpha),
        };

        let blended = blend_spatial(&styled, &features, &mask)?;
        Ok(FeatureBlend { content: features, styled, mask, blended, original_dims: dims })
    }
}

fn check_dims(h: usize, w: usize, content: (usize, usize), what: &str) -> Result<()> {
    if (h, w) != content {
        return Err(Error::invalid(format!(
            "{what} is {h}x{w} but content image is {}x{}",
            content.0, content.1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn engine() -> &'static Engine {
        static E: OnceLock<Engine> = OnceLock::new();
        E.get_or_init(|| Engine::synthetic(42))
    }

    fn random_image(seed: u64, h: usize, w: usize) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterImage::new(h, w, (0..h * w * 3).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn alpha_zero_reproduces_reconstruction() {
        let content = random_image(1, 24, 32);
        let style = random_image(2, 16, 16);
        let params = StylizeParams { alpha: 0.0, ..Default::default() };
        assert_eq!(
            engine().stylize(&content, &[style], &params).unwrap(),
            engine().reconstruct(&content).unwrap()
        );
    }

    #[test]
    fn full_mask_reproduces_plain_adain() {
        let content = random_image(3, 16, 24);
        let style = random_image(4, 24, 16);
        let flat = RawDepth::new(16, 24, vec![0.3; 16 * 24]).unwrap();
        let params = StylizeParams { mask_source: MaskSource::Depth(flat), ..Default::default() };
        assert_eq!(
            engine().stylize(&content, std::slice::from_ref(&style), &params).unwrap(),
            engine().stylize_plain(&content, &style).unwrap()
        );
    }

    #[test]
    fn hard_mask_selects_pure_features() {
        let content = random_image(5, 32, 32);
        let style = engine().style_summary(&random_image(6, 16, 16)).unwrap();
        // Left half 0, right half 1 at image resolution; feature columns
        // 0..2 and 2..4 come out exactly 0 and 1 except at the seam.
        let values: Vec<f32> = (0..32 * 32).map(|p| if p % 32 < 16 { 0.0 } else { 1.0 }).collect();
        let mask = DepthMask::new(32, 32, values).unwrap();
        let params = StylizeParams { mask_source: MaskSource::Mask(mask), ..Default::default() };
        let fb = engine().blend_features(&content, &[style], &params).unwrap();
        let (c, h, w) = fb.blended.shape();
        let mut checked = 0;
        for i in 0..h {
            for j in 0..w {
                let m = fb.mask.get(i, j);
                if m != 0.0 && m != 1.0 {
                    continue;
                }
                checked += 1;
                let src = if m == 1.0 { &fb.styled } else { &fb.content };
                for k in 0..c {
                    assert_eq!(fb.blended.get(k, i, j).to_bits(), src.get(k, i, j).to_bits());
                }
            }
        }
        assert!(checked >= h * (w - 2));
    }

    #[test]
    fn output_keeps_content_dims() {
        let style = random_image(7, 16, 16);
        for (h, w) in [(16, 16), (17, 23), (9, 31)] {
            let out = engine()
                .stylize(&random_image(8, h, w), std::slice::from_ref(&style), &StylizeParams::default())
                .unwrap();
            assert_eq!((out.height(), out.width()), (h, w));
        }
    }

    #[test]
    fn mismatched_depth_rejected() {
        let content = random_image(9, 16, 16);
        let depth = RawDepth::new(8, 8, (0..64).map(|v| v as f64).collect()).unwrap();
        let params = StylizeParams { mask_source: MaskSource::Depth(depth), ..Default::default() };
        let err = engine().stylize(&content, std::slice::from_ref(&content), &params).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("depth map")));
    }

    #[test]
    fn parameter_validation() {
        let content = random_image(10, 16, 16);
        assert!(engine().stylize(&content, &[], &StylizeParams::default()).is_err());
        let bad_alpha = StylizeParams { alpha: 1.2, ..Default::default() };
        assert!(engine().stylize(&content, std::slice::from_ref(&content), &bad_alpha).is_err());
        let bad_weights = StylizeParams { style_weights: Some(vec![0.7, 0.7]), ..Default::default() };
        assert!(engine().stylize(&content, &[content.clone(), content.clone()], &bad_weights).is_err());
    }

    #[test]
    fn cache_is_transparent() {
        let engine = Engine::synthetic(7);
        let content = random_image(11, 16, 16);
        let style = random_image(12, 16, 16);
        let uncached = engine.summarize_style(&style).unwrap();
        let direct = engine
            .stylize_with_summaries(&content, std::slice::from_ref(&uncached), &StylizeParams::default())
            .unwrap();
        assert!(engine.cache().is_empty());
        let first =
            engine.stylize(&content, std::slice::from_ref(&style), &StylizeParams::default()).unwrap();
        let second =
            engine.stylize(&content, std::slice::from_ref(&style), &StylizeParams::default()).unwrap();
        assert_eq!(engine.cache().len(), 1);
        assert_eq!(first, direct);
        assert_eq!(second, direct);
        assert_eq!(engine.style_summary(&style).unwrap(), uncached);
        assert_eq!(uncached.channels(), 512);
    }

    #[test]
    fn distinct_style_files_get_distinct_keys() {
        let dir = tempfile::tempdir().unwrap();
        let a = random_image(13, 16, 16);
        let mut b = a.clone();
        let mut px = b.pixels().to_vec();
        px[0] ^= 1;
        b = RasterImage::new(16, 16, px).unwrap();
        a.save(dir.path().join("a.png")).unwrap();
        b.save(dir.path().join("b.png")).unwrap();
        let ba = std::fs::read(dir.path().join("a.png")).unwrap();
        let bb = std::fs::read(dir.path().join("b.png")).unwrap();
        assert_ne!(StyleCache::key_for_bytes(&ba), StyleCache::key_for_bytes(&bb));
        let engine = Engine::synthetic(8);
        let sa = engine.style_summary_from_file_bytes(&ba).unwrap();
        let sb = engine.style_summary_from_file_bytes(&bb).unwrap();
        assert_eq!(engine.cache().len(), 2);
        assert_ne!(sa, sb);
        assert_eq!(sa, engine.summarize_style(&a).unwrap());
    }

    #[test]
    fn concurrent_stylizations_agree() {
        let content = random_image(14, 16, 16);
        let style = random_image(15, 16, 16);
        let expected =
            engine().stylize(&content, std::slice::from_ref(&style), &StylizeParams::default()).unwrap();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| {
                    s.spawn(|| {
                        engine()
                            .stylize(&content, std::slice::from_ref(&style), &StylizeParams::default())
                            .unwrap()
                    })
                })
                .collect();
            for h in handles {
                assert_eq!(h.join().unwrap(), expected);
            }
        });
    }

    #[test]
    fn dir_loading_checks_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::builtin();
        synthetic_store(m, Section::Encoder, 1).write_file(dir.path().join(ENCODER_FILE)).unwrap();
        synthetic_store(m, Section::Decoder, 2).write_file(dir.path().join(DECODER_FILE)).unwrap();
        Engine::from_dir(dir.path()).unwrap();

        std::fs::write(dir.path().join(MANIFEST_FILE), crate::nn::manifest::BUILTIN_MANIFEST).unwrap();
        Engine::from_dir(dir.path()).unwrap();

        let altered =
            crate::nn::manifest::BUILTIN_MANIFEST.replacen("conv conv1_1 64 3", "conv conv1_1 64 3\nrelu", 1);
        std::fs::write(dir.path().join(MANIFEST_FILE), altered).unwrap();
        assert!(matches!(Engine::from_dir(dir.path()), Err(Error::Manifest(_))));

        // Swapped files fail manifest validation.
        std::fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
        std::fs::rename(dir.path().join(ENCODER_FILE), dir.path().join("tmp")).unwrap();
        std::fs::rename(dir.path().join(DECODER_FILE), dir.path().join(ENCODER_FILE)).unwrap();
        std::fs::rename(dir.path().join("tmp"), dir.path().join(DECODER_FILE)).unwrap();
        assert!(Engine::from_dir(dir.path()).is_err());
    }
}
