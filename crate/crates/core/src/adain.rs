//! Adaptive instance normalization and the feature-space blends built on it.
//!
//! `adain` renormalizes each content channel to the style's mean and standard
//! deviation. `blend_global` and `blend_spatial` mix stylized and content
//! features with a scalar or a per-pixel weight; the per-pixel form is what
//! lets depth control how much style each location receives.

use crate::depth::DepthMask;
use crate::error::{Error, Result};
use crate::tensor::{channel_moments, elementwise_affine, ChannelStats, Tensor3};

/// Stabilizer added to the content variance before taking the square root.
pub const DEFAULT_EPSILON: f32 = 1e-5;

/// Channel moments of a style image's encoder features. This is all of the
/// style that AdaIN needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleSummary {
    pub stats: ChannelStats,
}

impl StyleSummary {
    pub fn new(stats: ChannelStats) -> Self {
        Self { stats }
    }

    pub fn from_features(features: &Tensor3) -> Result<Self> {
        Ok(Self { stats: channel_moments(features)? })
    }

    pub fn channels(&self) -> usize {
        self.stats.channels()
    }
}

/// `out = sigma_s * (x - mu_x) / sqrt(sigma_x^2 + eps) + mu_s`, per channel.
pub fn adain(x: &Tensor3, style: &StyleSummary, epsilon: f32) -> Result<Tensor3> {
    if style.channels() != x.channels() {
        return Err(Error::invalid(format!(
            "style summary has {} channels, content features have {}",
            style.channels(),
            x.channels()
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let content = channel_moments(x)?;
    let c = x.channels();

    let neg_means: Vec<f32> = content.means.iter().map(|m| -m).collect();
    let centered = elementwise_affine(x, &vec![1.0; c], &neg_means)?;

    let mut scale = Vec::with_capacity(c);
    for k in 0..c {
        let denom = ((content.stds[k] as f64).powi(2) + epsilon as f64).sqrt();
        // A constant channel has a zero numerator everywhere; any finite
        // scale yields the style mean.
        let s = if denom > 0.0 { style.stats.stds[k] as f64 / denom } else { 0.0 };
        scale.push(s as f32);
    }
    elementwise_affine(&centered, &scale, &style.stats.means)
}

#[inline]
fn mix(weight: f32, styled: f32, content: f32) -> f32 {
    // The endpoints select one side exactly so that hard masks and the
    // alpha = 0 / alpha = 1 limits reproduce the pure paths bit for bit.
    if weight == 1.0 {
        styled
    } else if weight == 0.0 {
        content
    } else {
        weight * styled + (1.0 - weight) * content
    }
}

fn check_same_shape(styled: &Tensor3, content: &Tensor3) -> Result<()> {
    if styled.shape() != content.shape() {
        return Err(Error::invalid(format!(
            "styled features {:?} and content features {:?} differ in shape",
            styled.shape(),
            content.shape()
        )));
    }
    Ok(())
}

/// `alpha * styled + (1 - alpha) * content`
pub fn blend_global(styled: &Tensor3, content: &Tensor3, alpha: f32) -> Result<Tensor3> {
    check_same_shape(styled, content)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let data = styled.data().iter().zip(content.data()).map(|(&s, &c)| mix(alpha, s, c)).collect();
    Ok(Tensor3::from_parts(styled.channels(), styled.height(), styled.width(), data))
}

/// Per-pixel blend `mask * styled + (1 - mask) * content`, mask broadcast
/// over channels.
pub fn blend_spatial(styled: &Tensor3, content: &Tensor3, mask: &DepthMask) -> Result<Tensor3> {
    check_same_shape(styled, content)?;
    if (mask.height(), mask.width()) != (styled.height(), styled.width()) {
        return Err(Error::invalid(format!(
            "mask is {}x{} but features are {}x{}",
            mask.height(),
            mask.width(),
            styled.height(),
            styled.width()
        )));
    }
    // DepthMask guarantees [0, 1]; re-check in case a caller built one from
    // raw parts.
    if let Some(v) = mask.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("mask value {v} outside [0, 1]")));
    }
    let plane = styled.plane_len();
    let mut data = Vec::with_capacity(styled.data().len());
    for (s_plane, c_plane) in styled.data().chunks(plane).zip(content.data().chunks(plane)) {
        data.extend(s_plane.iter().zip(c_plane).zip(mask.values()).map(|((&s, &c), &m)| mix(m, s, c)));
    }
    Ok(Tensor3::from_parts(styled.channels(), styled.height(), styled.width(), data))
}

/// Convex combination of style moments. Weights must be non-negative and sum
/// to 1 within 1e-6.
pub fn mix_styles(summaries: &[StyleSummary], weights: &[f32]) -> Result<StyleSummary> {
    let first = summaries.first().ok_or_else(|| Error::invalid("no styles to mix"))?;
    if weights.len() != summaries.len() {
        return Err(Error::invalid(format!(
            "{} style weights for {} styles",
            weights.len(),
            summaries.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("style weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().map(|&w| w as f64).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("style weights sum to {total}, expected 1")));
    }
    let c = first.channels();
    if summaries.iter().any(|s| s.channels() != c) {
        return Err(Error::invalid("styles to mix have different channel counts"));
    }

    let mut means = vec![0.0f64; c];
    let mut stds = vec![0.0f64; c];
    for (summary, &w) in summaries.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let w = w as f64;
        for k in 0..c {
            means[k] += w * summary.stats.means[k] as f64;
            stds[k] += w * summary.stats.stds[k] as f64;
        }
    }
    let stats = ChannelStats::new(
        means.into_iter().map(|v| v as f32).collect(),
        stds.into_iter().map(|v| v as f32).collect(),
    )?;
    Ok(StyleSummary { stats })
}
