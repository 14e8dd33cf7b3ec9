use crate::error::{check_len, Error, Result};
use crate::numeric::SeededRng;
use crate::scalar::Scalar;

/// Fully connected layer `y = W·x + b` with `W` stored row-major (out×in).
#[derive(Clone, Debug)]
pub struct DenseLayer<T> {
    inputs: usize,
    outputs: usize,
    weight: Vec<T>,
    bias: Vec<T>,
    cached_input: Option<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads<T> {
    pub input: Vec<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero bias.
    pub fn new(inputs: usize, outputs: usize, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| T::of(rng.uniform_range(-limit, limit)))
            .collect();
        Self {
            inputs,
            outputs,
            weight,
            bias: vec![T::zero(); outputs],
            cached_input: None,
        }
    }

    pub fn from_parts(inputs: usize, outputs: usize, weight: Vec<T>, bias: Vec<T>) -> Result<Self> {
        check_len("DenseLayer weight", inputs * outputs, weight.len())?;
        check_len("DenseLayer bias", outputs, bias.len())?;
        Ok(Self {
            inputs,
            outputs,
            weight,
            bias,
            cached_input: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn weight_mut(&mut self) -> &mut [T] {
        &mut self.weight
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    pub fn params_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.weight, &mut self.bias)
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&mut self, x: &[T]) -> Result<Vec<T>> {
        let y = self.apply(x)?;
        self.cached_input = Some(x.to_vec());
        Ok(y)
    }

    /// Forward without touching the cache.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("DenseLayer::forward input", self.inputs, x.len())?;
        Ok(self
            .weight
            .chunks_exact(self.inputs.max(1))
            .take(self.outputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &xi)| acc + w * xi))
            .collect())
    }

    /// Consumes the cached input of the preceding forward.
    pub fn backward(&mut self, upstream: &[T]) -> Result<DenseGrads<T>> {
        check_len("DenseLayer::backward upstream", self.outputs, upstream.len())?;
        let x = self
            .cached_input
            .take()
            .ok_or(Error::BackwardBeforeForward("DenseLayer"))?;
        let mut input = vec![T::zero(); self.inputs];
        let mut weight = Vec::with_capacity(self.weight.len());
        for (row, &g) in self.weight.chunks_exact(self.inputs.max(1)).zip(upstream) {
            for ((gi, &w), &xi) in input.iter_mut().zip(row).zip(&x) {
                *gi = *gi + w * g;
                weight.push(g * xi);
            }
        }
        Ok(DenseGrads {
            input,
            weight,
            bias: upstream.to_vec(),
        })
    }
}
