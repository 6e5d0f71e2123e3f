//! The checked-in layer manifest: layer order, tensor names and shapes, and
//! the preprocessing conventions a weight file is expected to follow.

use std::fmt;

use crate::error::{Error, Result};
use crate::nn::weights::WeightStore;

pub const BUILTIN_MANIFEST: &str = include_str!("../../manifest/vgg19_relu4_1.manifest");

/// Pixel convention used by `image_io::to_tensor`.
pub const ENGINE_PIXEL_RANGE: &str = "0..1";
pub const ENGINE_PADDING: &str = "reflect1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerDef {
    Conv { name: String, in_channels: usize, out_channels: usize },
    Relu,
    MaxPool,
    Upsample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Encoder,
    Decoder,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Encoder => "encoder",
            Section::Decoder => "decoder",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub variant: String,
    pub pixel_range: String,
    pub padding: String,
    pub encoder: Vec<LayerDef>,
    pub decoder: Vec<LayerDef>,
}

impl Manifest {
    pub fn builtin() -> &'static Manifest {
        static BUILTIN: std::sync::OnceLock<Manifest> = std::sync::OnceLock::new();
        BUILTIN.get_or_init(|| Manifest::parse(BUILTIN_MANIFEST).expect("built-in manifest is valid"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut variant = None;
        let mut pixel_range = None;
        let mut padding = None;
        let mut encoder = Vec::new();
        let mut decoder = Vec::new();
        let mut current: Option<Section> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::manifest(format!("line {}: {msg}: `{line}`", lineno + 1));
            match line {
                "[encoder]" => current = Some(Section::Encoder),
                "[decoder]" => current = Some(Section::Decoder),
                _ => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    let Some(section) = current else {
                        let value = fields.get(1..).map(|v| v.join(" ")).unwrap_or_default();
                        match fields[0] {
                            "variant" => variant = Some(value),
                            "pixel_range" => pixel_range = Some(value),
                            "padding" => padding = Some(value),
                            _ => return Err(err("unknown header key")),
                        }
                        continue;
                    };
                    let layer = match fields.as_slice() {
                        ["conv", name, cin, cout] => LayerDef::Conv {
                            name: name.to_string(),
                            in_channels: cin.parse().map_err(|_| err("bad channel count"))?,
                            out_channels: cout.parse().map_err(|_| err("bad channel count"))?,
                        },
                        ["relu"] => LayerDef::Relu,
                        ["maxpool"] => LayerDef::MaxPool,
                        ["upsample"] => LayerDef::Upsample,
                        _ => return Err(err("unknown layer")),
                    };
                    match section {
                        Section::Encoder => encoder.push(layer),
                        Section::Decoder => decoder.push(layer),
                    }
                }
            }
        }

        let manifest = Manifest {
            variant: variant.ok_or_else(|| Error::manifest("missing `variant`"))?,
            pixel_range: pixel_range.ok_or_else(|| Error::manifest("missing `pixel_range`"))?,
            padding: padding.ok_or_else(|| Error::manifest("missing `padding`"))?,
            encoder,
            decoder,
        };
        manifest.check()?;
        Ok(manifest)
    }

    /// Structural checks: conventions match the engine, channels chain, and
    /// the encoder/decoder have the mirrored pool/upsample geometry.
    fn check(&self) -> Result<()> {
        if self.pixel_range != ENGINE_PIXEL_RANGE {
            return Err(Error::manifest(format!(
                "pixel_range `{}` does not match engine convention `{ENGINE_PIXEL_RANGE}`",
                self.pixel_range
            )));
        }
        if self.padding != ENGINE_PADDING {
            return Err(Error::manifest(format!(
                "padding `{}` does not match engine convention `{ENGINE_PADDING}`",
                self.padding
            )));
        }
        for section in [Section::Encoder, Section::Decoder] {
            let layers = self.section(section);
            check_channel_chain(section, layers)?;
            let pools = layers.iter().filter(|l| **l == LayerDef::MaxPool).count();
            let ups = layers.iter().filter(|l| **l == LayerDef::Upsample).count();
            let (want_pools, want_ups) = match section {
                Section::Encoder => (3, 0),
                Section::Decoder => (0, 3),
            };
            if pools != want_pools || ups != want_ups {
                return Err(Error::manifest(format!(
                    "{section} must have {want_pools} maxpool and {want_ups} upsample layers, found {pools} and {ups}"
                )));
            }
        }
        if !matches!(self.decoder.last(), Some(LayerDef::Conv { .. })) {
            return Err(Error::manifest("decoder must end with a conv layer"));
        }
        let enc_out = last_conv_channels(&self.encoder).map(|(_, out)| out);
        let dec_in = first_conv_channels(&self.decoder).map(|(cin, _)| cin);
        if enc_out != dec_in {
            return Err(Error::manifest(format!(
                "encoder emits {enc_out:?} channels but decoder expects {dec_in:?}"
            )));
        }
        Ok(())
    }

    pub fn section(&self, section: Section) -> &[LayerDef] {
        match section {
            Section::Encoder => &self.encoder,
            Section::Decoder => &self.decoder,
        }
    }

    /// Feature channels at the encoder output.
    pub fn feature_channels(&self) -> usize {
        last_conv_channels(&self.encoder).map(|(_, out)| out).unwrap_or(0)
    }

    /// Expected `(name, shape)` pairs for one section, in manifest order.
    pub fn tensor_shapes(&self, section: Section) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::new();
        for layer in self.section(section) {
            if let LayerDef::Conv { name, in_channels, out_channels } = layer {
                shapes.push((format!("{name}.weight"), vec![*out_channels, *in_channels, 3, 3]));
                shapes.push((format!("{name}.bias"), vec![*out_channels]));
            }
        }
        shapes
    }

    /// Checks that `store` holds exactly the section's tensors with the
    /// manifest shapes.
    pub fn validate_store(&self, section: Section, store: &WeightStore) -> Result<()> {
        let expected = self.tensor_shapes(section);
        for (name, shape) in &expected {
            let entry = store
                .get(name)
                .ok_or_else(|| Error::manifest(format!("{section} weights missing tensor `{name}`")))?;
            if entry.shape != *shape {
                return Err(Error::manifest(format!(
                    "{section} tensor `{name}` has shape {:?}, manifest expects {shape:?}",
                    entry.shape
                )));
            }
        }
        if let Some(extra) = store.names().find(|n| !expected.iter().any(|(e, _)| e == n)) {
            return Err(Error::manifest(format!("{section} weights contain unexpected tensor `{extra}`")));
        }
        Ok(())
    }
}

fn check_channel_chain(section: Section, layers: &[LayerDef]) -> Result<()> {
    let mut channels: Option<usize> = None;
    for layer in layers {
        if let LayerDef::Conv { name, in_channels, out_channels } = layer {
            if let Some(c) = channels {
                if c != *in_channels {
                    return Err(Error::manifest(format!(
                        "{section} conv `{name}` expects {in_channels} channels but receives {c}"
                    )));
                }
            }
            channels = Some(*out_channels);
        }
    }
    Ok(())
}

fn first_conv_channels(layers: &[LayerDef]) -> Option<(usize, usize)> {
    layers.iter().find_map(|l| match l {
        LayerDef::Conv { in_channels, out_channels, .. } => Some((*in_channels, *out_channels)),
        _ => None,
    })
}

fn last_conv_channels(layers: &[LayerDef]) -> Option<(usize, usize)> {
    layers.iter().rev().find_map(|l| match l {
        LayerDef::Conv { in_channels, out_channels, .. } => Some((*in_channels, *out_channels)),
        _ => None,
    })
}
