use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rodkit_core::{Error, Result, Scalar, NUM_CLASSES};

use crate::conv::{Conv3dSpec, Deconv3dSpec};
use crate::graph::{NodeId, Tape};
use crate::inception::InceptionSpec;
use crate::loss::sigmoid_clamped;
use crate::params::ParamStore;
use crate::tensor::Tensor5;

/// Real and imaginary RAMap parts.
pub const INPUT_CHANNELS: usize = 2;

/// Output clamp applied by [`Model::forward`].
pub const OUTPUT_CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Cdc,
    Hg,
    Hgwi,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cdc" => Ok(Variant::Cdc),
            "hg" => Ok(Variant::Hg),
            "hgwi" => Ok(Variant::Hgwi),
            other => Err(Error::config(format!("unknown model variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: Variant,
    /// Hourglass stacks (HG / HGwI only).
    pub num_stacks: usize,
    pub base_channels: usize,
    /// Frames per input snippet (τ).
    pub snippet_len: usize,
    pub num_classes: usize,
    pub inception_kernels: Vec<usize>,
    /// Initial bias of every output head, as a logit. Negative values start
    /// the network near the mostly-empty background.
    pub head_bias_init: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            variant: Variant::Cdc,
            num_stacks: 1,
            base_channels: 8,
            snippet_len: 16,
            num_classes: NUM_CLASSES,
            inception_kernels: vec![5, 9, 13],
            head_bias_init: -4.6,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_stacks == 0 || self.base_channels == 0 || self.snippet_len == 0 || self.num_classes == 0 {
            return Err(Error::config("model stacks, channels, snippet length and classes must all be at least 1"));
        }
        if self.variant == Variant::Hgwi {
            let kmax = self.inception_kernels.iter().copied().max().unwrap_or(0);
            if self.snippet_len < kmax {
                return Err(Error::config(format!("HGwI needs snippets of at least {kmax} frames, got {}", self.snippet_len)));
            }
            InceptionSpec::new(1, 1, &self.inception_kernels).validate()?;
        }
        if !self.head_bias_init.is_finite() {
            return Err(Error::config("head bias init must be finite"));
        }
        Ok(())
    }

    /// Channel width inside the hourglasses.
    fn hourglass_width(&self) -> usize {
        match self.variant {
            Variant::Hgwi => self.base_channels * self.inception_kernels.len(),
            _ => self.base_channels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Conv(Conv3dSpec),
    Deconv(Deconv3dSpec),
    Inception(InceptionSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    /// Parameter indices: `[weight, bias]`, or one pair per inception branch.
    params: Vec<usize>,
}

impl Layer {
    fn pairs(&self) -> Vec<(usize, usize)> {
        self.params.chunks_exact(2).map(|p| (p[0], p[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub spec: ModelSpec,
    pub params: ParamStore<T>,
    layers: Vec<Layer>,
    heads: Vec<usize>,
}

struct Builder<T> {
    params: ParamStore<T>,
    layers: Vec<Layer>,
    fan_in: Vec<f64>,
}

impl<T: Scalar> Builder<T> {
    fn conv(&mut self, name: &str, spec: Conv3dSpec) -> usize {
        let w = self.params.add(format!("{name}.weight"), spec.weight_shape());
        let b = self.params.add(format!("{name}.bias"), vec![spec.out_channels]);
        self.fan_in.push((spec.in_channels * spec.kernel_volume()) as f64);
        self.fan_in.push(0.0);
        self.layers.push(Layer { name: name.into(), kind: LayerKind::Conv(spec), params: vec![w, b] });
        self.layers.len() - 1
    }

    fn deconv(&mut self, name: &str, spec: Deconv3dSpec) -> usize {
        let w = self.params.add(format!("{name}.weight"), spec.weight_shape());
        let b = self.params.add(format!("{name}.bias"), vec![spec.out_channels]);
        // each output cell sees about kernel/stride taps per input channel
        let taps = spec.kernel_volume() as f64 / spec.stride.iter().product::<usize>() as f64;
        self.fan_in.push(spec.in_channels as f64 * taps.max(1.0));
        self.fan_in.push(0.0);
        self.layers.push(Layer { name: name.into(), kind: LayerKind::Deconv(spec), params: vec![w, b] });
        self.layers.len() - 1
    }

    fn inception(&mut self, name: &str, spec: InceptionSpec) -> usize {
        let mut params = vec![];
        for (conv, kt) in spec.branches().iter().zip(&spec.temporal_kernels) {
            params.push(self.params.add(format!("{name}.t{kt}.weight"), conv.weight_shape()));
            params.push(self.params.add(format!("{name}.t{kt}.bias"), vec![conv.out_channels]));
            self.fan_in.push((conv.in_channels * conv.kernel_volume()) as f64);
            self.fan_in.push(0.0);
        }
        self.layers.push(Layer { name: name.into(), kind: LayerKind::Inception(spec), params });
        self.layers.len() - 1
    }

    /// Hourglass conv slot: a plain conv, or an inception block for HGwI.
    fn hg_conv(&mut self, name: &str, spec: &ModelSpec, width: usize, spatial_stride: usize) -> usize {
        if spec.variant == Variant::Hgwi {
            let mut inc = InceptionSpec::new(width, spec.base_channels, &spec.inception_kernels);
            inc.spatial_stride = spatial_stride;
            self.inception(name, inc)
        } else {
            self.conv(name, Conv3dSpec { in_channels: width, out_channels: width, kernel: [3; 3], stride: [1, spatial_stride, spatial_stride], padding: [1; 3] })
        }
    }
}

fn head_spec(in_channels: usize, classes: usize) -> Conv3dSpec {
    Conv3dSpec { in_channels, out_channels: classes, kernel: [1, 3, 3], stride: [1; 3], padding: [0, 1, 1] }
}

/// Builds the layer table of `spec` with fan-in scaled uniform weights,
/// zero biases and `head_bias_init` on the output heads.
pub fn build_model<T: Scalar>(spec: &ModelSpec, rng_seed: u64) -> Result<Model<T>> {
    spec.validate()?;
    let mut b = Builder { params: ParamStore::new(), layers: vec![], fan_in: vec![] };
    let c = spec.base_channels;
    let mut heads = vec![];
    match spec.variant {
        Variant::Cdc => {
            b.conv("enc1", Conv3dSpec { in_channels: INPUT_CHANNELS, out_channels: c, kernel: [3; 3], stride: [1, 2, 2], padding: [1; 3] });
            b.conv("enc2", Conv3dSpec { in_channels: c, out_channels: 2 * c, kernel: [3; 3], stride: [2, 2, 2], padding: [1; 3] });
            b.conv("enc3", Conv3dSpec { in_channels: 2 * c, out_channels: 4 * c, kernel: [3; 3], stride: [1; 3], padding: [1; 3] });
            b.deconv("dec1", Deconv3dSpec { in_channels: 4 * c, out_channels: 2 * c, kernel: [3; 3], stride: [2, 2, 2], padding: [1; 3] });
            b.deconv("dec2", Deconv3dSpec { in_channels: 2 * c, out_channels: c, kernel: [3; 3], stride: [1, 2, 2], padding: [1; 3] });
            heads.push(b.conv("head", head_spec(c, spec.num_classes)));
        }
        Variant::Hg | Variant::Hgwi => {
            let w = spec.hourglass_width();
            b.conv("stem", Conv3dSpec::same(INPUT_CHANNELS, w, [3; 3]));
            for s in 0..spec.num_stacks {
                b.hg_conv(&format!("hg{s}.skip0"), spec, w, 1);
                b.hg_conv(&format!("hg{s}.down1"), spec, w, 2);
                b.hg_conv(&format!("hg{s}.skip1"), spec, w, 1);
                b.hg_conv(&format!("hg{s}.down2"), spec, w, 2);
                b.hg_conv(&format!("hg{s}.mid"), spec, w, 1);
                let up = Deconv3dSpec { in_channels: w, out_channels: w, kernel: [3; 3], stride: [1, 2, 2], padding: [1; 3] };
                b.deconv(&format!("hg{s}.up1"), up);
                b.deconv(&format!("hg{s}.up0"), up);
                heads.push(b.conv(&format!("head{s}"), head_spec(w, spec.num_classes)));
                if s + 1 < spec.num_stacks {
                    b.conv(&format!("remap{s}"), Conv3dSpec { in_channels: spec.num_classes, out_channels: w, kernel: [1; 3], stride: [1; 3], padding: [0; 3] });
                }
            }
        }
    }
    let Builder { mut params, layers, fan_in } = b;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for (i, fan) in fan_in.iter().enumerate() {
        if *fan > 0.0 {
            let bound = (6.0 / fan).sqrt();
            for v in params.get_mut(i).data.iter_mut() {
                *v = T::lit(rng.random_range(-bound..bound));
            }
        }
    }
    for &h in &heads {
        let bias = layers[h].params[1];
        params.get_mut(bias).data.fill(T::lit(spec.head_bias_init));
    }
    Ok(Model { spec: spec.clone(), params, layers, heads })
}

impl<T: Scalar> Model<T> {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.params.num_scalars()
    }

    /// Parameter indices of the output head convs, one per stack.
    pub fn head_params(&self) -> Vec<(usize, usize)> {
        self.heads.iter().map(|&h| (self.layers[h].params[0], self.layers[h].params[1])).collect()
    }

    pub fn check_input(&self, x: &Tensor5<T>) -> Result<()> {
        if x.channels() != INPUT_CHANNELS || x.volume()[0] != self.spec.snippet_len {
            return Err(Error::dims("model input (channels, frames)", (INPUT_CHANNELS, self.spec.snippet_len), (x.channels(), x.volume()[0])));
        }
        Ok(())
    }

    fn apply(&self, tape: &mut Tape<'_, T>, layer: usize, x: NodeId, target: Option<[usize; 3]>) -> Result<NodeId> {
        let l = &self.layers[layer];
        match &l.kind {
            LayerKind::Conv(s) => tape.conv(x, l.params[0], l.params[1], s),
            LayerKind::Deconv(s) => {
                let target = target.ok_or_else(|| Error::config(format!("deconv {} needs a target volume", l.name)))?;
                tape.deconv(x, l.params[0], l.params[1], s, target)
            }
            LayerKind::Inception(s) => tape.inception(x, &l.pairs(), s),
        }
    }

    /// Records the network on `tape` and returns the logit node of every
    /// head, the final head last.
    pub fn forward_graph(&self, tape: &mut Tape<'_, T>, input: NodeId) -> Result<Vec<NodeId>> {
        self.check_input(tape.value(input))?;
        let vol = |tape: &Tape<'_, T>, n: NodeId| tape.value(n).volume();
        let mut heads = vec![];
        match self.spec.variant {
            Variant::Cdc => {
                let e1 = self.apply(tape, 0, input, None)?;
                let e1 = tape.relu(e1);
                let e2 = self.apply(tape, 1, e1, None)?;
                let e2 = tape.relu(e2);
                let e3 = self.apply(tape, 2, e2, None)?;
                let e3 = tape.relu(e3);
                let d1 = self.apply(tape, 3, e3, Some(vol(tape, e1)))?;
                let d1 = tape.relu(d1);
                let d2 = self.apply(tape, 4, d1, Some(vol(tape, input)))?;
                let d2 = tape.relu(d2);
                heads.push(self.apply(tape, 5, d2, None)?);
            }
            Variant::Hg | Variant::Hgwi => {
                let stem = self.apply(tape, 0, input, None)?;
                let mut x = tape.relu(stem);
                let mut l = 1;
                for s in 0..self.spec.num_stacks {
                    let mut step = |tape: &mut Tape<'_, T>, x: NodeId, target: Option<[usize; 3]>| -> Result<NodeId> {
                        let y = self.apply(tape, l, x, target)?;
                        l += 1;
                        Ok(tape.relu(y))
                    };
                    let s0 = step(tape, x, None)?;
                    let d1 = step(tape, x, None)?;
                    let s1 = step(tape, d1, None)?;
                    let d2 = step(tape, d1, None)?;
                    let m = step(tape, d2, None)?;
                    let u1 = step(tape, m, Some(vol(tape, d1)))?;
                    let u1 = tape.add(u1, s1)?;
                    let u0 = step(tape, u1, Some(vol(tape, x)))?;
                    let feat = tape.add(u0, s0)?;
                    let logits = self.apply(tape, l, feat, None)?;
                    l += 1;
                    heads.push(logits);
                    if s + 1 < self.spec.num_stacks {
                        let r = self.apply(tape, l, logits, None)?;
                        l += 1;
                        let merged = tape.add(x, feat)?;
                        x = tape.add(merged, r)?;
                    }
                }
            }
        }
        Ok(heads)
    }

    /// Clamped sigmoid outputs of every head, `(batch, classes, τ, h, w)`
    /// each, the final prediction last.
    pub fn forward(&self, x: &Tensor5<T>) -> Result<Vec<Tensor5<T>>> {
        let mut tape = Tape::new(&self.params);
        let input = tape.input(x.clone());
        let heads = self.forward_graph(&mut tape, input)?;
        let eps = T::lit(OUTPUT_CLAMP_EPS);
        Ok(heads.iter().map(|&h| tape.value(h).map(|z| sigmoid_clamped(z, eps))).collect())
    }

    /// Final-head prediction only.
    pub fn predict(&self, x: &Tensor5<T>) -> Result<Tensor5<T>> {
        Ok(self.forward(x)?.pop().expect("every model has a head"))
    }

    /// Layer table: one row per parameter tensor with its shape and size,
    /// then the total.
    pub fn describe(&self) -> String {
        let mut rows: Vec<(String, String, String)> = vec![("name".into(), "shape".into(), "params".into())];
        for p in self.params.iter() {
            let shape = p.shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
            rows.push((p.name.clone(), shape, p.data.len().to_string()));
        }
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "# {:?} base_channels={} snippet_len={} stacks={}", self.spec.variant, self.spec.base_channels, self.spec.snippet_len, self.spec.num_stacks);
        for (a, b, c) in &rows {
            let _ = writeln!(out, "{a:<w0$}  {b:<w1$}  {c:>10}");
        }
        let _ = writeln!(out, "{:<w0$}  {:<w1$}  {:>10}", "total", "", self.num_params());
        out
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model { spec: self.spec.clone(), params: self.params.cast(), layers: self.layers.clone(), heads: self.heads.clone() }
    }
}
