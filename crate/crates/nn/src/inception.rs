//! Temporal inception: parallel 3-D convs with different temporal extents,
//! concatenated along channels.

use serde::{Deserialize, Serialize};

use rodkit_core::{Error, Result, Scalar};

use crate::conv::{conv3d_backward, conv3d_forward, Conv3dSpec};
use crate::tensor::Tensor5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InceptionSpec {
    pub in_channels: usize,
    /// Output channels of each branch; the block emits `branches × this`.
    pub branch_channels: usize,
    /// Odd temporal kernel extents, one branch each.
    pub temporal_kernels: Vec<usize>,
    /// Spatial kernel extent shared by all branches.
    pub spatial_kernel: usize,
    /// Spatial stride shared by all branches (temporal stride is 1).
    pub spatial_stride: usize,
}

impl InceptionSpec {
    pub fn new(in_channels: usize, branch_channels: usize, temporal_kernels: &[usize]) -> Self {
        InceptionSpec { in_channels, branch_channels, temporal_kernels: temporal_kernels.to_vec(), spatial_kernel: 3, spatial_stride: 1 }
    }

    pub fn out_channels(&self) -> usize {
        self.branch_channels * self.temporal_kernels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.temporal_kernels.is_empty() || self.temporal_kernels.iter().any(|k| k % 2 == 0) {
            return Err(Error::config(format!("temporal kernels must be odd and non-empty, got {:?}", self.temporal_kernels)));
        }
        if self.spatial_kernel % 2 == 0 {
            return Err(Error::config("spatial inception kernel must be odd"));
        }
        Ok(())
    }

    /// Same-padded conv of each branch.
    pub fn branches(&self) -> Vec<Conv3dSpec> {
        let s = self.spatial_kernel;
        self.temporal_kernels
            .iter()
            .map(|&kt| Conv3dSpec {
                in_channels: self.in_channels,
                out_channels: self.branch_channels,
                kernel: [kt, s, s],
                stride: [1, self.spatial_stride, self.spatial_stride],
                padding: [kt / 2, s / 2, s / 2],
            })
            .collect()
    }
}

fn check_branches<T>(spec: &InceptionSpec, params: &[(&[T], &[T])]) -> Result<()> {
    spec.validate()?;
    if params.len() != spec.temporal_kernels.len() {
        return Err(Error::dims("inception branch parameters", spec.temporal_kernels.len(), params.len()));
    }
    Ok(())
}

/// `params` holds `(weight, bias)` for each branch in kernel order.
pub fn temporal_inception_forward<T: Scalar>(x: &Tensor5<T>, params: &[(&[T], &[T])], spec: &InceptionSpec) -> Result<Tensor5<T>> {
    check_branches(spec, params)?;
    let outs = spec
        .branches()
        .iter()
        .zip(params)
        .map(|(b, (w, bias))| conv3d_forward(x, w, bias, b))
        .collect::<Result<Vec<_>>>()?;
    Tensor5::concat_channels(&outs.iter().collect::<Vec<_>>())
}

/// Input gradient and per-branch `(d weight, d bias)`.
pub fn temporal_inception_backward<T: Scalar>(
    grad_out: &Tensor5<T>,
    x: &Tensor5<T>,
    params: &[(&[T], &[T])],
    spec: &InceptionSpec,
) -> Result<(Tensor5<T>, Vec<(Vec<T>, Vec<T>)>)> {
    check_branches(spec, params)?;
    let widths = vec![spec.branch_channels; spec.temporal_kernels.len()];
    let grads = grad_out.split_channels(&widths)?;
    let mut gx = Tensor5::zeros(x.dims());
    let mut gp = Vec::with_capacity(widths.len());
    for ((b, (w, _)), g) in spec.branches().iter().zip(params).zip(&grads) {
        let (dx, dw, db) = conv3d_backward(g, x, w, b)?;
        gx.add_assign(&dx)?;
        gp.push((dw, db));
    }
    Ok((gx, gp))
}
