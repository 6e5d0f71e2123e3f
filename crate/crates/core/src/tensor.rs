//! Dense `channels x height x width` feature arrays and per-channel moments.
//!
//! Storage is row-major C-H-W in `f32`. Moments are accumulated in `f64` and
//! use the population (divide by `H*W`) variance.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    /// Builds a tensor, rejecting length mismatches and non-finite values.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let expected = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| Error::invalid("tensor dimensions overflow"))?;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "tensor {channels}x{height}x{width} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite tensor value at index {pos}")));
        }
        Ok(Self { channels, height, width, data })
    }

    /// Length-checked only. Used by kernels whose outputs are finite by
    /// construction from finite inputs.
    pub(crate) fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self { channels, height, width, data }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Self::from_parts(channels, height, width, vec![value; channels * height * width])
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f32 {
        self.data[(c * self.height + i) * self.width + j]
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }
}

/// Per-channel spatial mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub means: Vec<f32>,
    pub stds: Vec<f32>,
}

impl ChannelStats {
    pub fn new(means: Vec<f32>, stds: Vec<f32>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::invalid(format!("{} means but {} stds", means.len(), stds.len())));
        }
        if means.iter().chain(&stds).any(|v| !v.is_finite()) {
            return Err(Error::invalid("channel statistics must be finite"));
        }
        if stds.iter().any(|&s| s < 0.0) {
            return Err(Error::invalid("standard deviations must be non-negative"));
        }
        Ok(Self { means, stds })
    }

    pub fn channels(&self) -> usize {
        self.means.len()
    }
}

pub fn channel_moments(x: &Tensor3) -> Result<ChannelStats> {
    let n = x.plane_len();
    if n == 0 || x.channels() == 0 {
        return Err(Error::invalid(format!(
            "channel moments of an empty {}x{}x{} tensor",
            x.channels(),
            x.height(),
            x.width()
        )));
    }
    let mut means = Vec::with_capacity(x.channels());
    let mut stds = Vec::with_capacity(x.channels());
    for c in 0..x.channels() {
        let plane = x.channel(c);
        let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let var = plane
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        means.push(mean as f32);
        stds.push(var.sqrt() as f32);
    }
    Ok(ChannelStats { means, stds })
}

/// `out[c,i,j] = scale[c] * x[c,i,j] + shift[c]`
pub fn elementwise_affine(x: &Tensor3, scale: &[f32], shift: &[f32]) -> Result<Tensor3> {
    if scale.len() != x.channels() || shift.len() != x.channels() {
        return Err(Error::invalid(format!(
            "affine parameters have {} scales and {} shifts for {} channels",
            scale.len(),
            shift.len(),
            x.channels()
        )));
    }
    let n = x.plane_len();
    let mut data = Vec::with_capacity(x.data().len());
    for c in 0..x.channels() {
        let (s, b) = (scale[c], shift[c]);
        data.extend(x.data()[c * n..(c + 1) * n].iter().map(|&v| s * v + b));
    }
    let out = Tensor3::from_parts(x.channels(), x.height(), x.width(), data);
    out.ensure_finite("elementwise_affine")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor3 {
        Tensor3::from_fn(c, h, w, |_, _, _| rng.random_range(-3.0..3.0)).unwrap()
    }

    #[test]
    fn constant_channel_has_zero_std() {
        let t = Tensor3::filled(1, 2, 2, 5.0);
        let m = channel_moments(&t).unwrap();
        assert_eq!(m.means, vec![5.0]);
        assert_eq!(m.stds, vec![0.0]);
    }

    #[test]
    fn moments_of_one_to_four() {
        let t = Tensor3::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = channel_moments(&t).unwrap();
        assert_eq!(m.means[0], 2.5);
        assert!((m.stds[0] - 1.25f32.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn negated_channel_negates_mean_keeps_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base: Vec<f32> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut data = base.clone();
        data.extend(base.iter().map(|v| -v));
        let t = Tensor3::new(2, 3, 4, data).unwrap();
        let m = channel_moments(&t).unwrap();
        assert_eq!(m.means[1], -m.means[0]);
        assert_eq!(m.stds[1], m.stds[0]);
    }

    #[test]
    fn empty_tensor_rejected() {
        let t = Tensor3::zeros(3, 0, 4);
        assert!(matches!(channel_moments(&t), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn construction_checks_length_and_finiteness() {
        assert!(Tensor3::new(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor3::new(1, 1, 2, vec![0.0, f32::NAN]).is_err());
        assert!(Tensor3::new(1, 1, 2, vec![0.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn affine_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&mut rng, 3, 4, 4);
        assert_eq!(elementwise_affine(&x, &[1.0; 3], &[0.0; 3]).unwrap(), x);
        let k = elementwise_affine(&x, &[0.0; 3], &[7.5; 3]).unwrap();
        assert!(k.data().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn affine_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, 3, 4, 4);
        let scale: Vec<f32> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let shift: Vec<f32> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let out = elementwise_affine(&x, &scale, &shift).unwrap();
        for c in 0..3 {
            for i in 0..4 {
                for j in 0..4 {
                    let expected = scale[c] * x.get(c, i, j) + shift[c];
                    assert_eq!(out.get(c, i, j), expected);
                }
            }
        }
    }

    #[test]
    fn affine_length_mismatch() {
        let x = Tensor3::zeros(2, 2, 2);
        assert!(elementwise_affine(&x, &[1.0], &[0.0, 0.0]).is_err());
        assert!(elementwise_affine(&x, &[1.0, 1.0], &[0.0]).is_err());
    }

    fn tensor_strategy() -> impl Strategy<Value = Tensor3> {
        (1usize..4, 1usize..6, 1usize..6).prop_flat_map(|(c, h, w)| {
            prop::collection::vec(-10.0f32..10.0, c * h * w)
                .prop_map(move |d| Tensor3::new(c, h, w, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn affine_moves_moments_predictably(
            x in tensor_strategy(),
            s in -3.0f32..3.0,
            b in -3.0f32..3.0,
        ) {
            let c = x.channels();
            let before = channel_moments(&x).unwrap();
            let after = channel_moments(&elementwise_affine(&x, &vec![s; c], &vec![b; c]).unwrap()).unwrap();
            for k in 0..c {
                let mean = s * before.means[k] + b;
                let std = s.abs() * before.stds[k];
                // Relative tolerance, floored at 1 for moments near zero.
                prop_assert!((after.means[k] - mean).abs() <= 1e-5 * mean.abs().max(1.0));
                prop_assert!((after.stds[k] - std).abs() <= 1e-5 * std.max(1.0));
            }
        }

        #[test]
        fn moments_ignore_spatial_order(x in tensor_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = x.plane_len();
            let mut data = x.data().to_vec();
            for plane in data.chunks_mut(n) {
                plane.shuffle(&mut rng);
            }
            let shuffled = Tensor3::new(x.channels(), x.height(), x.width(), data).unwrap();
            let a = channel_moments(&x).unwrap();
            let b = channel_moments(&shuffled).unwrap();
            for k in 0..x.channels() {
                prop_assert!((a.means[k] - b.means[k]).abs() <= 1e-6 * a.means[k].abs().max(1.0));
                prop_assert!((a.stds[k] - b.stds[k]).abs() <= 1e-6 * a.stds[k].max(1.0));
            }
        }
    }
}
