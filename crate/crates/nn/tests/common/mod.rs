//! Direct-loop reference implementations and finite-difference harnesses
//! shared by the layer tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodkit_nn::gradcheck::{central_differences, max_relative_error};
use rodkit_nn::{conv3d_backward, conv3d_forward, deconv3d_backward, deconv3d_forward, sigmoid_bce, temporal_inception_backward, temporal_inception_forward};
use rodkit_nn::{Conv3dSpec, Deconv3dSpec, InceptionSpec, Reduction, Tensor5};

pub const FD_EPS: f64 = 1e-5;
/// Denominator floor for the relative error of near-zero gradient entries.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 5]) -> Tensor5<f64> {
    Tensor5::from_vec(dims, random_vec(rng, dims.iter().product())).unwrap()
}

pub fn naive_conv(x: &Tensor5<f64>, w: &[f64], b: &[f64], s: &Conv3dSpec) -> Tensor5<f64> {
    let [nb, _, it, ih, iw] = x.dims();
    let [kt, kh, kw] = s.kernel;
    let out: Vec<usize> = (0..3).map(|i| (x.volume()[i] + 2 * s.padding[i] - s.kernel[i]) / s.stride[i] + 1).collect();
    let mut y = Tensor5::zeros([nb, s.out_channels, out[0], out[1], out[2]]);
    for bi in 0..nb {
        for o in 0..s.out_channels {
            for ot in 0..out[0] {
                for oh in 0..out[1] {
                    for ow in 0..out[2] {
                        let mut acc = b[o];
                        for c in 0..s.in_channels {
                            for dt in 0..kt {
                                for dh in 0..kh {
                                    for dw in 0..kw {
                                        let t = (ot * s.stride[0] + dt) as isize - s.padding[0] as isize;
                                        let h = (oh * s.stride[1] + dh) as isize - s.padding[1] as isize;
                                        let ww = (ow * s.stride[2] + dw) as isize - s.padding[2] as isize;
                                        if t < 0 || h < 0 || ww < 0 || t >= it as isize || h >= ih as isize || ww >= iw as isize {
                                            continue;
                                        }
                                        let wi = (((o * s.in_channels + c) * kt + dt) * kh + dh) * kw + dw;
                                        acc += w[wi] * x.at(bi, c, t as usize, h as usize, ww as usize);
                                    }
                                }
                            }
                        }
                        let idx = y.index(bi, o, ot, oh, ow);
                        y.data_mut()[idx] = acc;
                    }
                }
            }
        }
    }
    y
}

/// Scatter definition of the transposed conv: every input cell adds its
/// kernel-weighted copy at `i * stride - padding + k`.
pub fn naive_deconv(x: &Tensor5<f64>, w: &[f64], b: &[f64], s: &Deconv3dSpec, op: [usize; 3]) -> Tensor5<f64> {
    let [nb, _, it, ih, iw] = x.dims();
    let [kt, kh, kw] = s.kernel;
    let out: Vec<usize> = (0..3).map(|i| (x.volume()[i] - 1) * s.stride[i] + s.kernel[i] + op[i] - 2 * s.padding[i]).collect();
    let mut y = Tensor5::zeros([nb, s.out_channels, out[0], out[1], out[2]]);
    for bi in 0..nb {
        for o in 0..s.out_channels {
            for t in 0..out[0] {
                for h in 0..out[1] {
                    for ww in 0..out[2] {
                        let idx = y.index(bi, o, t, h, ww);
                        y.data_mut()[idx] = b[o];
                    }
                }
            }
        }
        for c in 0..s.in_channels {
            for t in 0..it {
                for h in 0..ih {
                    for ww in 0..iw {
                        let v = x.at(bi, c, t, h, ww);
                        for o in 0..s.out_channels {
                            for dt in 0..kt {
                                for dh in 0..kh {
                                    for dw in 0..kw {
                                        let ot = (t * s.stride[0] + dt) as isize - s.padding[0] as isize;
                                        let oh = (h * s.stride[1] + dh) as isize - s.padding[1] as isize;
                                        let ow = (ww * s.stride[2] + dw) as isize - s.padding[2] as isize;
                                        if ot < 0 || oh < 0 || ow < 0 || ot >= out[0] as isize || oh >= out[1] as isize || ow >= out[2] as isize {
                                            continue;
                                        }
                                        let wi = (((c * s.out_channels + o) * kt + dt) * kh + dh) * kw + dw;
                                        let idx = y.index(bi, o, ot as usize, oh as usize, ow as usize);
                                        y.data_mut()[idx] += v * w[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_conv_case(rng: &mut ChaCha8Rng) -> (Conv3dSpec, [usize; 5]) {
    loop {
        let spec = Conv3dSpec {
            in_channels: rng.random_range(1..=3),
            out_channels: rng.random_range(1..=3),
            kernel: [rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3)],
            stride: [rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(1..=2)],
            padding: [rng.random_range(0..=1), rng.random_range(0..=1), rng.random_range(0..=1)],
        };
        let dims = [rng.random_range(1..=2), spec.in_channels, rng.random_range(1..=4), rng.random_range(2..=5), rng.random_range(2..=5)];
        if spec.output_volume([dims[2], dims[3], dims[4]]).is_ok() {
            return (spec, dims);
        }
    }
}

pub fn random_deconv_case(rng: &mut ChaCha8Rng) -> (Deconv3dSpec, [usize; 5], [usize; 3]) {
    loop {
        let spec = Deconv3dSpec {
            in_channels: rng.random_range(1..=3),
            out_channels: rng.random_range(1..=3),
            kernel: [rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3)],
            stride: [rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(1..=2)],
            padding: [rng.random_range(0..=1), rng.random_range(0..=1), rng.random_range(0..=1)],
        };
        let dims = [rng.random_range(1..=2), spec.in_channels, rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4)];
        let op = spec.stride.map(|s| rng.random_range(0..s));
        if spec.output_volume([dims[2], dims[3], dims[4]], op).is_ok() {
            return (spec, dims, op);
        }
    }
}

pub fn random_inception_case(rng: &mut ChaCha8Rng) -> (InceptionSpec, [usize; 5]) {
    let mut spec = InceptionSpec::new(rng.random_range(1..=2), rng.random_range(1..=2), &[5, 9, 13]);
    spec.spatial_stride = rng.random_range(1..=2);
    let dims = [1, spec.in_channels, rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4)];
    (spec, dims)
}

/// Max relative error of the analytic (x, weight, bias) gradients of
/// `Σ r · conv(x)` against central differences.
pub fn conv_gradient_error(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (spec, dims) = random_conv_case(&mut g);
    let x = random_tensor(&mut g, dims);
    let w = random_vec(&mut g, spec.weight_len());
    let b = random_vec(&mut g, spec.out_channels);
    let y = conv3d_forward(&x, &w, &b, &spec).unwrap();
    let r = random_tensor(&mut g, y.dims());
    let dot = |t: &Tensor5<f64>| t.data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>();
    let (gx, gw, gb) = conv3d_backward(&r, &x, &w, &spec).unwrap();
    let nx = central_differences(|v| dot(&conv3d_forward(&Tensor5::from_vec(dims, v.to_vec()).unwrap(), &w, &b, &spec).unwrap()), x.data(), FD_EPS);
    let nw = central_differences(|v| dot(&conv3d_forward(&x, v, &b, &spec).unwrap()), &w, FD_EPS);
    let nb = central_differences(|v| dot(&conv3d_forward(&x, &w, v, &spec).unwrap()), &b, FD_EPS);
    max_relative_error(gx.data(), &nx, REL_FLOOR).max(max_relative_error(&gw, &nw, REL_FLOOR)).max(max_relative_error(&gb, &nb, REL_FLOOR))
}

pub fn deconv_gradient_error(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (spec, dims, op) = random_deconv_case(&mut g);
    let x = random_tensor(&mut g, dims);
    let w = random_vec(&mut g, spec.weight_len());
    let b = random_vec(&mut g, spec.out_channels);
    let y = deconv3d_forward(&x, &w, &b, &spec, op).unwrap();
    let r = random_tensor(&mut g, y.dims());
    let dot = |t: &Tensor5<f64>| t.data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>();
    let (gx, gw, gb) = deconv3d_backward(&r, &x, &w, &spec, op).unwrap();
    let nx = central_differences(|v| dot(&deconv3d_forward(&Tensor5::from_vec(dims, v.to_vec()).unwrap(), &w, &b, &spec, op).unwrap()), x.data(), FD_EPS);
    let nw = central_differences(|v| dot(&deconv3d_forward(&x, v, &b, &spec, op).unwrap()), &w, FD_EPS);
    let nb = central_differences(|v| dot(&deconv3d_forward(&x, &w, v, &spec, op).unwrap()), &b, FD_EPS);
    max_relative_error(gx.data(), &nx, REL_FLOOR).max(max_relative_error(&gw, &nw, REL_FLOOR)).max(max_relative_error(&gb, &nb, REL_FLOOR))
}

pub fn inception_gradient_error(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (spec, dims) = random_inception_case(&mut g);
    let branches = spec.branches();
    let params: Vec<(Vec<f64>, Vec<f64>)> = branches.iter().map(|b| (random_vec(&mut g, b.weight_len()), random_vec(&mut g, b.out_channels))).collect();
    let x = random_tensor(&mut g, dims);
    let view = |p: &[(Vec<f64>, Vec<f64>)]| -> Vec<(Vec<f64>, Vec<f64>)> { p.to_vec() };
    let fwd = |x: &Tensor5<f64>, p: &[(Vec<f64>, Vec<f64>)]| {
        let refs: Vec<(&[f64], &[f64])> = p.iter().map(|(w, b)| (w.as_slice(), b.as_slice())).collect();
        temporal_inception_forward(x, &refs, &spec).unwrap()
    };
    let y = fwd(&x, &params);
    assert_eq!(y.channels(), 3 * spec.branch_channels);
    let r = random_tensor(&mut g, y.dims());
    let dot = |t: &Tensor5<f64>| t.data().iter().zip(r.data()).map(|(a, b)| a * b).sum::<f64>();
    let refs: Vec<(&[f64], &[f64])> = params.iter().map(|(w, b)| (w.as_slice(), b.as_slice())).collect();
    let (gx, gp) = temporal_inception_backward(&r, &x, &refs, &spec).unwrap();
    let nx = central_differences(|v| dot(&fwd(&Tensor5::from_vec(dims, v.to_vec()).unwrap(), &params)), x.data(), FD_EPS);
    let mut err = max_relative_error(gx.data(), &nx, REL_FLOOR);
    for (i, (gw, gb)) in gp.iter().enumerate() {
        let nw = central_differences(
            |v| {
                let mut p = view(&params);
                p[i].0 = v.to_vec();
                dot(&fwd(&x, &p))
            },
            &params[i].0,
            FD_EPS,
        );
        let nb = central_differences(
            |v| {
                let mut p = view(&params);
                p[i].1 = v.to_vec();
                dot(&fwd(&x, &p))
            },
            &params[i].1,
            FD_EPS,
        );
        err = err.max(max_relative_error(gw, &nw, REL_FLOOR)).max(max_relative_error(gb, &nb, REL_FLOOR));
    }
    err
}

/// Logit gradient of the clamped sigmoid + BCE loss against central
/// differences, for both reductions.
pub fn sigmoid_bce_gradient_error(seed: u64) -> f64 {
    let mut g = rng(seed);
    let dims = [g.random_range(1..=2), 3, g.random_range(1..=3), g.random_range(2..=5), g.random_range(2..=5)];
    let z = Tensor5::from_vec(dims, (0..dims.iter().product::<usize>()).map(|_| g.random_range(-4.0..4.0)).collect()).unwrap();
    let d = Tensor5::from_vec(dims, (0..dims.iter().product::<usize>()).map(|_| g.random_range(0.0..1.0)).collect()).unwrap();
    let mut err: f64 = 0.0;
    for red in [Reduction::Sum, Reduction::Mean] {
        let (_, grad) = sigmoid_bce(&z, &d, 1e-7, red).unwrap();
        let num = central_differences(|v| sigmoid_bce(&Tensor5::from_vec(dims, v.to_vec()).unwrap(), &d, 1e-7, red).unwrap().0, z.data(), FD_EPS);
        err = err.max(max_relative_error(grad.data(), &num, REL_FLOOR));
    }
    err
}
