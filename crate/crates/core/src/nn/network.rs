use crate::error::{Error, Result};
use crate::nn::layers::{conv2d_reflect, maxpool2x2, relu_in_place, upsample_nearest_2x, ConvSpec};
use crate::nn::manifest::{LayerDef, Manifest, Section};
use crate::nn::weights::WeightStore;
use crate::tensor::Tensor3;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvSpec),
    Relu,
    MaxPool2x2,
    UpsampleNearest2x,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub layers: Vec<Layer>,
}

impl Network {
    /// Rejects conv layers whose input channels do not match the previous
    /// conv's output channels.
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Result<Self> {
        let name = name.into();
        let mut channels = None;
        for layer in &layers {
            if let Layer::Conv(spec) = layer {
                if let Some(c) = channels {
                    if c != spec.in_channels {
                        return Err(Error::invalid(format!(
                            "{name}: conv `{}` expects {} channels, previous layer emits {c}",
                            spec.name, spec.in_channels
                        )));
                    }
                }
                channels = Some(spec.out_channels);
            }
        }
        Ok(Self { name, layers })
    }

    pub fn count(&self, pred: impl Fn(&Layer) -> bool) -> usize {
        self.layers.iter().filter(|l| pred(l)).count()
    }

    pub fn input_channels(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l {
            Layer::Conv(spec) => Some(spec.in_channels),
            _ => None,
        })
    }

    pub fn output_channels(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(|l| match l {
            Layer::Conv(spec) => Some(spec.out_channels),
            _ => None,
        })
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        let mut t = x.clone();
        for layer in &self.layers {
            t = match layer {
                Layer::Conv(spec) => conv2d_reflect(&t, spec)?,
                Layer::Relu => {
                    relu_in_place(&mut t);
                    t
                }
                Layer::MaxPool2x2 => maxpool2x2(&t)?,
                Layer::UpsampleNearest2x => upsample_nearest_2x(&t),
            };
        }
        Ok(t)
    }
}

pub fn build_encoder(store: &WeightStore) -> Result<Network> {
    build_section(Manifest::builtin(), Section::Encoder, store)
}

pub fn build_decoder(store: &WeightStore) -> Result<Network> {
    build_section(Manifest::builtin(), Section::Decoder, store)
}

pub fn build_section(manifest: &Manifest, section: Section, store: &WeightStore) -> Result<Network> {
    manifest.validate_store(section, store)?;
    let mut layers = Vec::new();
    for def in manifest.section(section) {
        layers.push(match def {
            LayerDef::Conv { name, in_channels, out_channels } => {
                // Presence and shapes were checked by validate_store.
                let weight = store.get(&format!("{name}.weight")).unwrap();
                let bias = store.get(&format!("{name}.bias")).unwrap();
                Layer::Conv(ConvSpec::new(
                    name.clone(),
                    *in_channels,
                    *out_channels,
                    weight.values.clone(),
                    bias.values.clone(),
                )?)
            }
            LayerDef::Relu => Layer::Relu,
            LayerDef::MaxPool => Layer::MaxPool2x2,
            LayerDef::Upsample => Layer::UpsampleNearest2x,
        });
    }
    Network::new(section.to_string(), layers)
}
