use rodkit_core::{Error, Result, Scalar};

/// Dense 5-D tensor laid out as `[batch, channel, time, range, azimuth]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor5<T> {
    dims: [usize; 5],
    data: Vec<T>,
}

impl<T: Scalar> Tensor5<T> {
    /// Panics if any dimension is zero.
    pub fn zeros(dims: [usize; 5]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive: {dims:?}");
        Tensor5 { dims, data: vec![T::zero(); dims.iter().product()] }
    }

    pub fn filled(dims: [usize; 5], v: T) -> Self {
        let mut t = Self::zeros(dims);
        t.data.fill(v);
        t
    }

    pub fn from_vec(dims: [usize; 5], data: Vec<T>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::config(format!("tensor dims must be positive: {dims:?}")));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::dims("tensor data length", dims.iter().product::<usize>(), data.len()));
        }
        Ok(Tensor5 { dims, data })
    }

    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn channels(&self) -> usize {
        self.dims[1]
    }

    /// `[time, range, azimuth]`.
    pub fn volume(&self) -> [usize; 3] {
        [self.dims[2], self.dims[3], self.dims[4]]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Elements per batch entry.
    pub fn sample_len(&self) -> usize {
        self.dims[1..].iter().product()
    }

    pub fn sample(&self, b: usize) -> &[T] {
        let n = self.sample_len();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn sample_mut(&mut self, b: usize) -> &mut [T] {
        let n = self.sample_len();
        &mut self.data[b * n..(b + 1) * n]
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, t: usize, r: usize, a: usize) -> usize {
        let [_, nc, nt, nr, na] = self.dims;
        (((b * nc + c) * nt + t) * nr + r) * na + a
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, t: usize, r: usize, a: usize) -> T {
        self.data[self.index(b, c, t, r, a)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor5 { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor5<U> {
        Tensor5 { dims: self.dims, data: self.data.iter().map(|v| U::lit(v.to_f64().unwrap_or(f64::NAN))).collect() }
    }

    /// Batch entry `b` as a batch of one.
    pub fn slice_batch(&self, b: usize) -> Self {
        let mut dims = self.dims;
        dims[0] = 1;
        Tensor5 { dims, data: self.sample(b).to_vec() }
    }

    /// Concatenates along the batch axis.
    pub fn stack(parts: &[Tensor5<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::config("cannot stack zero tensors"))?;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        let mut batch = 0;
        for p in parts {
            if p.dims[1..] != first.dims[1..] {
                return Err(Error::dims("stacked tensor", first.dims, p.dims));
            }
            batch += p.dims[0];
            data.extend_from_slice(&p.data);
        }
        let mut dims = first.dims;
        dims[0] = batch;
        Ok(Tensor5 { dims, data })
    }

    /// Concatenates along the channel axis.
    pub fn concat_channels(parts: &[&Tensor5<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::config("cannot concatenate zero tensors"))?;
        for p in parts {
            if p.dims[0] != first.dims[0] || p.dims[2..] != first.dims[2..] {
                return Err(Error::dims("concatenated tensor", first.dims, p.dims));
            }
        }
        let mut dims = first.dims;
        dims[1] = parts.iter().map(|p| p.dims[1]).sum();
        let mut data = Vec::with_capacity(dims.iter().product());
        for b in 0..dims[0] {
            for p in parts {
                data.extend_from_slice(p.sample(b));
            }
        }
        Ok(Tensor5 { dims, data })
    }

    /// Splits along the channel axis into pieces of the given widths.
    pub fn split_channels(&self, widths: &[usize]) -> Result<Vec<Self>> {
        if widths.iter().sum::<usize>() != self.dims[1] {
            return Err(Error::dims("channel split", self.dims[1], widths.iter().sum::<usize>()));
        }
        let plane: usize = self.dims[2..].iter().product();
        let mut out: Vec<Self> = widths
            .iter()
            .map(|&w| Tensor5 { dims: [self.dims[0], w, self.dims[2], self.dims[3], self.dims[4]], data: Vec::with_capacity(self.dims[0] * w * plane) })
            .collect();
        for b in 0..self.dims[0] {
            let mut offset = 0;
            let s = self.sample(b);
            for (o, &w) in out.iter_mut().zip(widths) {
                o.data.extend_from_slice(&s[offset * plane..(offset + w) * plane]);
                offset += w;
            }
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::dims("tensor sum", self.dims, other.dims));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }
}
