use ndarray::Array2;

/// Named, ordered collection of 2-D parameter tensors. Vectors are stored as
/// `1 x n` rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Array2<f64>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Array2<f64>) -> usize {
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, i: usize) -> &Array2<f64> {
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Array2<f64> {
        &mut self.tensors[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<f64>)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        self.tensors.iter_mut()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    /// `self += alpha * other`.
    pub fn scaled_add(&mut self, alpha: f64, other: &ParamSet) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.scaled_add(alpha, b);
        }
    }

    /// Sum of squares over every scalar.
    pub fn squared_norm(&self) -> f64 {
        self.tensors.iter().map(|t| t.iter().map(|v| v * v).sum::<f64>()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Scalar at flat position `k` across all tensors, in push order.
    pub fn flat_get(&self, mut k: usize) -> f64 {
        for t in &self.tensors {
            if k < t.len() {
                return t.as_slice().expect("standard layout")[k];
            }
            k -= t.len();
        }
        panic!("flat index out of range")
    }

    pub fn flat_set(&mut self, mut k: usize, v: f64) {
        for t in &mut self.tensors {
            if k < t.len() {
                t.as_slice_mut().expect("standard layout")[k] = v;
                return;
            }
            k -= t.len();
        }
        panic!("flat index out of range")
    }
}
