//! Reverse-mode differentiation over a recorded sequence of layer calls.

use rodkit_core::{Error, Result, Scalar};

use crate::conv::{conv3d_backward, conv3d_forward, deconv3d_backward, deconv3d_forward, Conv3dSpec, Deconv3dSpec};
use crate::inception::{temporal_inception_backward, temporal_inception_forward, InceptionSpec};
use crate::params::ParamStore;
use crate::tensor::Tensor5;

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Input,
    Conv { x: NodeId, w: usize, b: usize, spec: Conv3dSpec },
    Deconv { x: NodeId, w: usize, b: usize, spec: Deconv3dSpec, output_padding: [usize; 3] },
    Inception { x: NodeId, params: Vec<(usize, usize)>, spec: InceptionSpec },
    Relu { x: NodeId },
    Add { a: NodeId, b: NodeId },
}

/// Records a forward pass against a parameter store so it can be replayed
/// backwards.
pub struct Tape<'p, T> {
    params: &'p ParamStore<T>,
    values: Vec<Tensor5<T>>,
    ops: Vec<Op>,
}

pub struct Gradients<T> {
    pub params: ParamStore<T>,
    /// Gradient for each input node, in creation order.
    pub inputs: Vec<Tensor5<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Tape { params, values: Vec::new(), ops: Vec::new() }
    }

    fn push(&mut self, v: Tensor5<T>, op: Op) -> NodeId {
        self.values.push(v);
        self.ops.push(op);
        self.values.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Tensor5<T> {
        &self.values[id]
    }

    pub fn input(&mut self, x: Tensor5<T>) -> NodeId {
        self.push(x, Op::Input)
    }

    pub fn conv(&mut self, x: NodeId, w: usize, b: usize, spec: &Conv3dSpec) -> Result<NodeId> {
        let y = conv3d_forward(&self.values[x], self.params.data(w), self.params.data(b), spec)?;
        Ok(self.push(y, Op::Conv { x, w, b, spec: *spec }))
    }

    /// Transposed conv whose output volume is `target`.
    pub fn deconv(&mut self, x: NodeId, w: usize, b: usize, spec: &Deconv3dSpec, target: [usize; 3]) -> Result<NodeId> {
        let output_padding = spec.output_padding_for(self.values[x].volume(), target)?;
        let y = deconv3d_forward(&self.values[x], self.params.data(w), self.params.data(b), spec, output_padding)?;
        Ok(self.push(y, Op::Deconv { x, w, b, spec: *spec, output_padding }))
    }

    pub fn inception(&mut self, x: NodeId, params: &[(usize, usize)], spec: &InceptionSpec) -> Result<NodeId> {
        let y = {
            let p: Vec<(&[T], &[T])> = params.iter().map(|&(w, b)| (self.params.data(w), self.params.data(b))).collect();
            temporal_inception_forward(&self.values[x], &p, spec)?
        };
        Ok(self.push(y, Op::Inception { x, params: params.to_vec(), spec: spec.clone() }))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let y = self.values[x].map(|v| v.max(T::zero()));
        self.push(y, Op::Relu { x })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let mut y = self.values[a].clone();
        y.add_assign(&self.values[b])?;
        Ok(self.push(y, Op::Add { a, b }))
    }

    /// Back-propagates the given output gradients.
    pub fn backward(&self, seeds: Vec<(NodeId, Tensor5<T>)>) -> Result<Gradients<T>> {
        let mut grads: Vec<Option<Tensor5<T>>> = vec![None; self.values.len()];
        fn acc<T: Scalar>(slot: &mut Option<Tensor5<T>>, g: Tensor5<T>) -> Result<()> {
            match slot {
                Some(s) => s.add_assign(&g),
                None => {
                    *slot = Some(g);
                    Ok(())
                }
            }
        }
        for (id, g) in seeds {
            if g.dims() != self.values[id].dims() {
                return Err(Error::dims("output gradient", self.values[id].dims(), g.dims()));
            }
            acc(&mut grads[id], g)?;
        }
        let mut pgrads = self.params.zeros_like();
        let mut inputs = Vec::new();
        for id in (0..self.values.len()).rev() {
            let Some(g) = grads[id].take() else {
                if matches!(self.ops[id], Op::Input) {
                    inputs.push(Tensor5::zeros(self.values[id].dims()));
                }
                continue;
            };
            match &self.ops[id] {
                Op::Input => inputs.push(g),
                Op::Conv { x, w, b, spec } => {
                    let (gx, gw, gb) = conv3d_backward(&g, &self.values[*x], self.params.data(*w), spec)?;
                    add_into(&mut pgrads.get_mut(*w).data, &gw);
                    add_into(&mut pgrads.get_mut(*b).data, &gb);
                    acc(&mut grads[*x], gx)?;
                }
                Op::Deconv { x, w, b, spec, output_padding } => {
                    let (gx, gw, gb) = deconv3d_backward(&g, &self.values[*x], self.params.data(*w), spec, *output_padding)?;
                    add_into(&mut pgrads.get_mut(*w).data, &gw);
                    add_into(&mut pgrads.get_mut(*b).data, &gb);
                    acc(&mut grads[*x], gx)?;
                }
                Op::Inception { x, params, spec } => {
                    let p: Vec<(&[T], &[T])> = params.iter().map(|&(w, b)| (self.params.data(w), self.params.data(b))).collect();
                    let (gx, gp) = temporal_inception_backward(&g, &self.values[*x], &p, spec)?;
                    for (&(w, b), (gw, gb)) in params.iter().zip(gp) {
                        add_into(&mut pgrads.get_mut(w).data, &gw);
                        add_into(&mut pgrads.get_mut(b).data, &gb);
                    }
                    acc(&mut grads[*x], gx)?;
                }
                Op::Relu { x } => {
                    let mut gx = g;
                    for (d, y) in gx.data_mut().iter_mut().zip(self.values[id].data()) {
                        if *y <= T::zero() {
                            *d = T::zero();
                        }
                    }
                    acc(&mut grads[*x], gx)?;
                }
                Op::Add { a, b } => {
                    acc(&mut grads[*b], g.clone())?;
                    acc(&mut grads[*a], g)?;
                }
            }
        }
        inputs.reverse();
        Ok(Gradients { params: pgrads, inputs })
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}
