use rodkit_core::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Named parameter tensors in a fixed, deterministic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { entries: Vec::new() }
    }

    /// Appends a zero tensor and returns its index.
    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>) -> usize {
        let n = shape.iter().product();
        self.entries.push(Param { name: name.into(), shape, data: vec![T::zero(); n] });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &Param<T> {
        &self.entries[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Param<T> {
        &mut self.entries[i]
    }

    pub fn data(&self, i: usize) -> &[T] {
        &self.entries[i].data
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.name == name)
    }

    pub fn by_name(&self, name: &str) -> Option<&Param<T>> {
        self.entries.iter().find(|p| p.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.entries.iter_mut()
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|p| p.data.len()).sum()
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        ParamStore { entries: self.entries.iter().map(|p| Param { name: p.name.clone(), shape: p.shape.clone(), data: vec![T::zero(); p.data.len()] }).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|p| Param { name: p.name.clone(), shape: p.shape.clone(), data: p.data.iter().map(|v| U::lit(v.to_f64().unwrap_or(f64::NAN))).collect() })
                .collect(),
        }
    }

    /// `self += other`, element-wise; both must have identical layout.
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::dims("parameter store", self.entries.len(), other.entries.len()));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            if a.shape != b.shape {
                return Err(Error::dims("parameter shape", &a.shape, &b.shape));
            }
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
        Ok(())
    }

    /// Replaces values from `other`, matching tensors by name and shape.
    pub fn load_from(&mut self, other: &Self) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Format(format!("checkpoint holds {} tensors, model expects {}", other.entries.len(), self.entries.len())));
        }
        for p in self.entries.iter_mut() {
            let src = other.by_name(&p.name).ok_or_else(|| Error::Format(format!("checkpoint lacks tensor {:?}", p.name)))?;
            if src.shape != p.shape {
                return Err(Error::Format(format!("tensor {:?} has shape {:?}, model expects {:?}", p.name, src.shape, p.shape)));
            }
            p.data.clone_from(&src.data);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|p| p.data.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn push(&mut self, p: Param<T>) {
        self.entries.push(p);
    }
}
