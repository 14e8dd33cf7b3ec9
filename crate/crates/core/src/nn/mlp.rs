use crate::error::{Error, Result};
use crate::nn::activation::{relu, relu_backward};
use crate::nn::dense::DenseLayer;
use crate::nn::NamedArray;
use crate::numeric::SeededRng;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

/// Stack of dense layers with ReLU between them and a configurable output
/// activation.
#[derive(Clone, Debug)]
pub struct Mlp<T> {
    layers: Vec<DenseLayer<T>>,
    output_activation: Activation,
    pre_activations: Vec<Vec<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// `widths` lists input width followed by every layer's output width.
    pub fn new(widths: &[usize], output_activation: Activation, rng: &mut SeededRng) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| DenseLayer::new(w[0], w[1], rng)).collect();
        Ok(Self {
            layers,
            output_activation,
            pre_activations: Vec::new(),
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer<T>>, output_activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch {
                    context: "Mlp::from_layers",
                    expected: pair[0].outputs().to_string(),
                    found: pair[1].inputs().to_string(),
                });
            }
        }
        Ok(Self {
            layers,
            output_activation,
            pre_activations: Vec::new(),
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Multiply-accumulate count of one forward pass.
    pub fn macs(&self) -> u64 {
        self.layers.iter().map(|l| (l.inputs() * l.outputs()) as u64).sum()
    }

    fn activation_after(&self, idx: usize) -> Activation {
        if idx + 1 == self.layers.len() {
            self.output_activation
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&mut self, x: &[T]) -> Result<Vec<T>> {
        self.pre_activations.clear();
        let mut h = x.to_vec();
        for idx in 0..self.layers.len() {
            let act = self.activation_after(idx);
            let z = self.layers[idx].forward(&h)?;
            h = match act {
                Activation::Relu => relu(&z),
                Activation::Identity => z.clone(),
            };
            self.pre_activations.push(z);
        }
        Ok(h)
    }

    /// Forward pass that leaves the caches untouched.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let mut h = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&h)?;
            h = match self.activation_after(idx) {
                Activation::Relu => relu(&z),
                Activation::Identity => z,
            };
        }
        Ok(h)
    }

    /// Returns the gradient with respect to the input and one flat block per
    /// weight and bias, in `param_slices_mut` order.
    pub fn backward(&mut self, upstream: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        if self.pre_activations.len() != self.layers.len() {
            return Err(Error::BackwardBeforeForward("Mlp"));
        }
        let pre = std::mem::take(&mut self.pre_activations);
        let mut g = upstream.to_vec();
        let mut blocks = vec![Vec::new(); 2 * self.layers.len()];
        for idx in (0..self.layers.len()).rev() {
            if self.activation_after(idx) == Activation::Relu {
                g = relu_backward(&pre[idx], &g);
            }
            let grads = self.layers[idx].backward(&g)?;
            blocks[2 * idx] = grads.weight;
            blocks[2 * idx + 1] = grads.bias;
            g = grads.input;
        }
        Ok((g, blocks))
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            let (w, b) = layer.params_mut();
            out.push(w);
            out.push(b);
        }
        out
    }

    pub fn named_params(&self, prefix: &str) -> Vec<NamedArray> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            out.push(NamedArray::new(
                format!("{prefix}.{i}.weight"),
                vec![layer.outputs(), layer.inputs()],
                layer.weight().iter().map(|v| v.to_f64_lossy()).collect(),
            ));
            out.push(NamedArray::new(
                format!("{prefix}.{i}.bias"),
                vec![layer.outputs()],
                layer.bias().iter().map(|v| v.to_f64_lossy()).collect(),
            ));
        }
        out
    }

    /// Overwrites parameters from arrays produced by `named_params`.
    pub fn load_named(&mut self, prefix: &str, arrays: &[NamedArray]) -> Result<()> {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for (suffix, target) in [("weight", true), ("bias", false)] {
                let name = format!("{prefix}.{i}.{suffix}");
                let arr = arrays
                    .iter()
                    .find(|a| a.name == name)
                    .ok_or_else(|| Error::Format(format!("checkpoint lacks array {name}")))?;
                let dst = if target { layer.weight_mut() } else { layer.bias_mut() };
                if dst.len() != arr.data.len() {
                    return Err(Error::DimensionMismatch {
                        context: "Mlp::load_named",
                        expected: dst.len().to_string(),
                        found: arr.data.len().to_string(),
                    });
                }
                for (d, &v) in dst.iter_mut().zip(&arr.data) {
                    *d = T::of(v);
                }
            }
        }
        Ok(())
    }

    pub fn zero_params(&mut self) {
        for slice in self.param_slices_mut() {
            slice.iter_mut().for_each(|v| *v = T::zero());
        }
    }
}
