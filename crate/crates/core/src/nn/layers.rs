//! Forward kernels for the four layer kinds the networks use.
//!
//! Convolution is lowered to a patch matrix over horizontal strips of output
//! rows and multiplied with `matrixmultiply::sgemm`. Strip boundaries depend
//! only on the layer geometry, never on the thread count, so results are
//! bit-identical across rayon pool sizes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// 3x3, stride 1, reflection padding of width 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `[out, in, 3, 3]`, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvSpec {
    pub fn new(
        name: impl Into<String>,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        let name = name.into();
        if in_channels == 0 || out_channels == 0 {
            return Err(Error::invalid(format!("conv {name}: zero channels")));
        }
        if weights.len() != out_channels * in_channels * 9 {
            return Err(Error::invalid(format!(
                "conv {name}: expected {} weights, got {}",
                out_channels * in_channels * 9,
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::invalid(format!(
                "conv {name}: expected {out_channels} biases, got {}",
                bias.len()
            )));
        }
        Ok(Self { name, in_channels, out_channels, weights, bias })
    }
}

/// Edge-exclusive reflection of `idx` into `0..len` (requires `len >= 2`).
#[inline]
pub(crate) fn reflect_index(idx: isize, len: usize) -> usize {
    let period = 2 * (len as isize - 1);
    let mut m = idx.rem_euclid(period);
    if m >= len as isize {
        m = period - m;
    }
    m as usize
}

// Patch-matrix columns per strip are capped so a strip buffer stays near 8 MiB.
const STRIP_BUDGET: usize = 1 << 21;

struct OutPtr(*mut f32);
// SAFETY: strips write disjoint column ranges of the output.
unsafe impl Send for OutPtr {}
unsafe impl Sync for OutPtr {}

pub fn conv2d_reflect(x: &Tensor3, spec: &ConvSpec) -> Result<Tensor3> {
    let (c_in, h, w) = x.shape();
    if c_in != spec.in_channels {
        return Err(Error::invalid(format!(
            "conv {}: input has {c_in} channels, layer expects {}",
            spec.name, spec.in_channels
        )));
    }
    if h < 2 || w < 2 {
        return Err(Error::invalid(format!(
            "conv {}: reflection padding needs at least 2x2, got {h}x{w}",
            spec.name
        )));
    }
    let c_out = spec.out_channels;
    let k = c_in * 9;
    let plane = h * w;

    let mut out = vec![0.0f32; c_out * plane];
    for (dst, &b) in out.chunks_mut(plane).zip(&spec.bias) {
        dst.fill(b);
    }

    let strip_rows = (STRIP_BUDGET / (k * w)).clamp(1, h);
    let strips: Vec<(usize, usize)> =
        (0..h).step_by(strip_rows).map(|r0| (r0, (r0 + strip_rows).min(h))).collect();

    let out_ptr = OutPtr(out.as_mut_ptr());
    let input = x.data();
    strips.into_par_iter().for_each(|(r0, r1)| {
        let n = (r1 - r0) * w;
        let mut cols = vec![0.0f32; k * n];
        fill_patch_rows(input, c_in, h, w, r0, r1, &mut cols);
        let out_ptr = &out_ptr;
        // SAFETY: `cols` is k x n row-major, weights are c_out x k row-major,
        // and the destination block (all channels, pixels r0*w..r1*w) lies
        // inside `out` and is touched by this strip only.
        unsafe {
            matrixmultiply::sgemm(
                c_out,
                k,
                n,
                1.0,
                spec.weights.as_ptr(),
                k as isize,
                1,
                cols.as_ptr(),
                n as isize,
                1,
                1.0,
                out_ptr.0.add(r0 * w),
                plane as isize,
                1,
            );
        }
    });

    let out = Tensor3::from_parts(c_out, h, w, out);
    out.ensure_finite(&format!("conv {}", spec.name))?;
    Ok(out)
}

/// Writes patch rows for output rows `r0..r1`. Row `ci*9 + ky*3 + kx` of
/// `cols` holds the reflected input sample under kernel tap `(ky, kx)`.
fn fill_patch_rows(input: &[f32], c_in: usize, h: usize, w: usize, r0: usize, r1: usize, cols: &mut [f32]) {
    let n = (r1 - r0) * w;
    for ci in 0..c_in {
        let chan = &input[ci * h * w..(ci + 1) * h * w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(ci * 9 + ky * 3 + kx) * n..][..n];
                for (oi, r) in (r0..r1).enumerate() {
                    let src_r = reflect_index(r as isize + ky as isize - 1, h);
                    let src = &chan[src_r * w..(src_r + 1) * w];
                    let dst = &mut row[oi * w..(oi + 1) * w];
                    match kx {
                        0 => {
                            dst[0] = src[1];
                            dst[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => dst.copy_from_slice(src),
                        _ => {
                            dst[..w - 1].copy_from_slice(&src[1..]);
                            dst[w - 1] = src[w - 2];
                        }
                    }
                }
            }
        }
    }
}

pub fn relu(x: &Tensor3) -> Tensor3 {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub(crate) fn relu_in_place(x: &mut Tensor3) {
    for v in x.data_mut() {
        *v = v.max(0.0);
    }
}

pub fn maxpool2x2(x: &Tensor3) -> Result<Tensor3> {
    let (c, h, w) = x.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::invalid(format!("maxpool2x2 needs even dimensions, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = x.channel(ch);
        for i in 0..oh {
            let top = &plane[2 * i * w..(2 * i + 1) * w];
            let bottom = &plane[(2 * i + 1) * w..(2 * i + 2) * w];
            for j in 0..ow {
                let a = top[2 * j].max(top[2 * j + 1]);
                let b = bottom[2 * j].max(bottom[2 * j + 1]);
                out.push(a.max(b));
            }
        }
    }
    Ok(Tensor3::from_parts(c, oh, ow, out))
}

pub fn upsample_nearest_2x(x: &Tensor3) -> Tensor3 {
    let (c, h, w) = x.shape();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = x.channel(ch);
        for i in 0..oh {
            let src = &plane[(i / 2) * w..(i / 2 + 1) * w];
            for &v in src {
                out.push(v);
                out.push(v);
            }
        }
    }
    Tensor3::from_parts(c, oh, ow, out)
}
