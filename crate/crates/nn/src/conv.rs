//! 3-D convolution and transposed convolution via im2col and GEMM.

use serde::{Deserialize, Serialize};

use rodkit_core::{Error, Result, Scalar, Strides};

use crate::tensor::Tensor5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv3dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `[time, range, azimuth]` extents.
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl Conv3dSpec {
    /// Kernel `k` in every axis, stride 1, same padding.
    pub fn same(in_channels: usize, out_channels: usize, kernel: [usize; 3]) -> Self {
        Conv3dSpec { in_channels, out_channels, kernel, stride: [1; 3], padding: kernel.map(|k| k / 2) }
    }

    pub fn kernel_volume(&self) -> usize {
        self.kernel.iter().product()
    }

    /// Weight shape `[out, in, kt, kr, ka]`.
    pub fn weight_shape(&self) -> Vec<usize> {
        vec![self.out_channels, self.in_channels, self.kernel[0], self.kernel[1], self.kernel[2]]
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_volume()
    }

    pub fn output_volume(&self, input: [usize; 3]) -> Result<[usize; 3]> {
        let mut out = [0; 3];
        for i in 0..3 {
            let padded = input[i] + 2 * self.padding[i];
            if self.kernel[i] == 0 || self.stride[i] == 0 {
                return Err(Error::config(format!("degenerate conv kernel/stride {:?}/{:?}", self.kernel, self.stride)));
            }
            if self.kernel[i] > padded {
                return Err(Error::dims("conv kernel vs padded input", padded, self.kernel[i]));
            }
            out[i] = (padded - self.kernel[i]) / self.stride[i] + 1;
        }
        Ok(out)
    }
}

/// Transposed convolution. The output volume is chosen per call so that a
/// decoder can restore an encoder's exact dims; see [`Deconv3dSpec::output_volume`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deconv3dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub padding: [usize; 3],
}

impl Deconv3dSpec {
    pub fn kernel_volume(&self) -> usize {
        self.kernel.iter().product()
    }

    /// Weight shape `[in, out, kt, kr, ka]`.
    pub fn weight_shape(&self) -> Vec<usize> {
        vec![self.in_channels, self.out_channels, self.kernel[0], self.kernel[1], self.kernel[2]]
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_volume()
    }

    /// The conv this layer transposes: it maps outputs back to inputs.
    fn adjoint(&self) -> Conv3dSpec {
        Conv3dSpec { in_channels: self.out_channels, out_channels: self.in_channels, kernel: self.kernel, stride: self.stride, padding: self.padding }
    }

    /// `(i - 1) s - 2 p + k + output_padding` per axis, with
    /// `0 <= output_padding < s`.
    pub fn output_volume(&self, input: [usize; 3], output_padding: [usize; 3]) -> Result<[usize; 3]> {
        let mut out = [0; 3];
        for i in 0..3 {
            if output_padding[i] >= self.stride[i].max(1) {
                return Err(Error::config(format!("output padding {output_padding:?} must be below stride {:?}", self.stride)));
            }
            let full = (input[i] - 1) * self.stride[i] + self.kernel[i] + output_padding[i];
            if full <= 2 * self.padding[i] {
                return Err(Error::dims("deconv output extent", 2 * self.padding[i] + 1, full));
            }
            out[i] = full - 2 * self.padding[i];
        }
        Ok(out)
    }

    /// Output padding that makes the output volume equal `target`.
    pub fn output_padding_for(&self, input: [usize; 3], target: [usize; 3]) -> Result<[usize; 3]> {
        let mut op = [0; 3];
        for i in 0..3 {
            let base = ((input[i] - 1) * self.stride[i] + self.kernel[i]) as isize - 2 * self.padding[i] as isize;
            let diff = target[i] as isize - base;
            if diff < 0 || diff >= self.stride[i] as isize {
                return Err(Error::dims("deconv target volume", target, input));
            }
            op[i] = diff as usize;
        }
        Ok(op)
    }
}

/// Geometry of an im2col lowering: `channels` planes of `input` volume,
/// sampled at `output` positions.
#[derive(Debug, Clone, Copy)]
struct Lowering {
    channels: usize,
    input: [usize; 3],
    output: [usize; 3],
    kernel: [usize; 3],
    stride: [usize; 3],
    padding: [usize; 3],
}

impl Lowering {
    fn rows(&self) -> usize {
        self.channels * self.kernel.iter().product::<usize>()
    }

    fn cols(&self) -> usize {
        self.output.iter().product()
    }

    /// Calls `f(col_index, src_index)` for every in-bounds pairing of a
    /// lowered-matrix entry with an input element.
    #[inline]
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize)) {
        let [it, ih, iw] = self.input;
        let [ot_n, oh_n, ow_n] = self.output;
        let [kt, kh, kw] = self.kernel;
        let [st, sh, sw] = self.stride;
        let [pt, ph, pw] = self.padding;
        let ncols = self.cols();
        for c in 0..self.channels {
            for dt in 0..kt {
                for dh in 0..kh {
                    for dw in 0..kw {
                        let row = (((c * kt + dt) * kh + dh) * kw + dw) * ncols;
                        for ot in 0..ot_n {
                            let t = (ot * st + dt) as isize - pt as isize;
                            if t < 0 || t >= it as isize {
                                continue;
                            }
                            for oh in 0..oh_n {
                                let h = (oh * sh + dh) as isize - ph as isize;
                                if h < 0 || h >= ih as isize {
                                    continue;
                                }
                                let src_row = ((c * it + t as usize) * ih + h as usize) * iw;
                                let col_row = row + (ot * oh_n + oh) * ow_n;
                                for ow in 0..ow_n {
                                    let w = (ow * sw + dw) as isize - pw as isize;
                                    if w >= 0 && w < iw as isize {
                                        f(col_row + ow, src_row + w as usize);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn im2col<T: Scalar>(&self, src: &[T], cols: &mut Vec<T>) {
        cols.clear();
        cols.resize(self.rows() * self.cols(), T::zero());
        self.for_each_tap(|dst, s| cols[dst] = src[s]);
    }

    fn col2im_add<T: Scalar>(&self, cols: &[T], dst: &mut [T]) {
        self.for_each_tap(|c, d| dst[d] += cols[c]);
    }
}

fn conv_lowering(spec: &Conv3dSpec, input: [usize; 3], output: [usize; 3]) -> Lowering {
    Lowering { channels: spec.in_channels, input, output, kernel: spec.kernel, stride: spec.stride, padding: spec.padding }
}

fn check_input<T: Scalar>(x: &Tensor5<T>, channels: usize, what: &'static str) -> Result<()> {
    if x.channels() != channels {
        return Err(Error::dims(what, channels, x.channels()));
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::dims(what, expected, actual));
    }
    Ok(())
}

pub fn conv3d_forward<T: Scalar>(x: &Tensor5<T>, weight: &[T], bias: &[T], spec: &Conv3dSpec) -> Result<Tensor5<T>> {
    check_input(x, spec.in_channels, "conv input channels")?;
    check_len("conv weight", spec.weight_len(), weight.len())?;
    check_len("conv bias", spec.out_channels, bias.len())?;
    let out_vol = spec.output_volume(x.volume())?;
    let low = conv_lowering(spec, x.volume(), out_vol);
    let (k, n) = (low.rows(), low.cols());
    let mut y = Tensor5::zeros([x.batch(), spec.out_channels, out_vol[0], out_vol[1], out_vol[2]]);
    let mut cols = Vec::new();
    for b in 0..x.batch() {
        low.im2col(x.sample(b), &mut cols);
        let ys = y.sample_mut(b);
        for (o, row) in ys.chunks_exact_mut(n).enumerate() {
            row.fill(bias[o]);
        }
        T::gemm(spec.out_channels, k, n, weight, Strides::row_major(k), &cols, Strides::row_major(n), T::one(), ys, Strides::row_major(n));
    }
    Ok(y)
}

/// Gradients `(d x, d weight, d bias)` of a conv given the output gradient.
pub fn conv3d_backward<T: Scalar>(grad_out: &Tensor5<T>, x: &Tensor5<T>, weight: &[T], spec: &Conv3dSpec) -> Result<(Tensor5<T>, Vec<T>, Vec<T>)> {
    check_input(x, spec.in_channels, "conv input channels")?;
    check_len("conv weight", spec.weight_len(), weight.len())?;
    let out_vol = spec.output_volume(x.volume())?;
    let expect = [x.batch(), spec.out_channels, out_vol[0], out_vol[1], out_vol[2]];
    if grad_out.dims() != expect {
        return Err(Error::dims("conv output gradient", expect, grad_out.dims()));
    }
    let low = conv_lowering(spec, x.volume(), out_vol);
    let (k, n, m) = (low.rows(), low.cols(), spec.out_channels);
    let mut gx = Tensor5::zeros(x.dims());
    let mut gw = vec![T::zero(); weight.len()];
    let mut gb = vec![T::zero(); m];
    let mut cols = Vec::new();
    let mut gcols = vec![T::zero(); k * n];
    for b in 0..x.batch() {
        let gy = grad_out.sample(b);
        for (o, row) in gy.chunks_exact(n).enumerate() {
            gb[o] += row.iter().copied().sum::<T>();
        }
        low.im2col(x.sample(b), &mut cols);
        // dW += dY · colsᵀ
        T::gemm(m, n, k, gy, Strides::row_major(n), &cols, Strides::transposed(n), T::one(), &mut gw, Strides::row_major(k));
        // dcols = Wᵀ · dY
        T::gemm(k, m, n, weight, Strides::transposed(k), gy, Strides::row_major(n), T::zero(), &mut gcols, Strides::row_major(n));
        low.col2im_add(&gcols, gx.sample_mut(b));
    }
    Ok((gx, gw, gb))
}

pub fn deconv3d_forward<T: Scalar>(x: &Tensor5<T>, weight: &[T], bias: &[T], spec: &Deconv3dSpec, output_padding: [usize; 3]) -> Result<Tensor5<T>> {
    check_input(x, spec.in_channels, "deconv input channels")?;
    check_len("deconv weight", spec.weight_len(), weight.len())?;
    check_len("deconv bias", spec.out_channels, bias.len())?;
    let out_vol = spec.output_volume(x.volume(), output_padding)?;
    let adj = spec.adjoint();
    let low = conv_lowering(&adj, out_vol, x.volume());
    let (rows, n, cin) = (low.rows(), low.cols(), spec.in_channels);
    let mut y = Tensor5::zeros([x.batch(), spec.out_channels, out_vol[0], out_vol[1], out_vol[2]]);
    let plane: usize = out_vol.iter().product();
    let mut cols = vec![T::zero(); rows * n];
    for b in 0..x.batch() {
        // cols = Wᵀ · x, then scattered back onto the output volume
        T::gemm(rows, cin, n, weight, Strides::transposed(rows), x.sample(b), Strides::row_major(n), T::zero(), &mut cols, Strides::row_major(n));
        let ys = y.sample_mut(b);
        for (o, chunk) in ys.chunks_exact_mut(plane).enumerate() {
            chunk.fill(bias[o]);
        }
        low.col2im_add(&cols, ys);
    }
    Ok(y)
}

pub fn deconv3d_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    x: &Tensor5<T>,
    weight: &[T],
    spec: &Deconv3dSpec,
    output_padding: [usize; 3],
) -> Result<(Tensor5<T>, Vec<T>, Vec<T>)> {
    check_input(x, spec.in_channels, "deconv input channels")?;
    check_len("deconv weight", spec.weight_len(), weight.len())?;
    let out_vol = spec.output_volume(x.volume(), output_padding)?;
    let expect = [x.batch(), spec.out_channels, out_vol[0], out_vol[1], out_vol[2]];
    if grad_out.dims() != expect {
        return Err(Error::dims("deconv output gradient", expect, grad_out.dims()));
    }
    let adj = spec.adjoint();
    let low = conv_lowering(&adj, out_vol, x.volume());
    let (rows, n, cin) = (low.rows(), low.cols(), spec.in_channels);
    let plane: usize = out_vol.iter().product();
    let mut gx = Tensor5::zeros(x.dims());
    let mut gw = vec![T::zero(); weight.len()];
    let mut gb = vec![T::zero(); spec.out_channels];
    let mut cols = Vec::new();
    for b in 0..x.batch() {
        let gy = grad_out.sample(b);
        for (o, chunk) in gy.chunks_exact(plane).enumerate() {
            gb[o] += chunk.iter().copied().sum::<T>();
        }
        low.im2col(gy, &mut cols);
        // dx = W · cols(dY)
        T::gemm(cin, rows, n, weight, Strides::row_major(rows), &cols, Strides::row_major(n), T::zero(), gx.sample_mut(b), Strides::row_major(n));
        // dW += x · cols(dY)ᵀ
        T::gemm(cin, n, rows, x.sample(b), Strides::row_major(n), &cols, Strides::transposed(n), T::one(), &mut gw, Strides::row_major(rows));
    }
    Ok((gx, gw, gb))
}
