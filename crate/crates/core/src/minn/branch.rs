use crate::error::{check_len, Error, Result};
use crate::nn::{Activation, Mlp, NamedArray};
use crate::numeric::SeededRng;
use crate::scalar::Scalar;

/// Dense network with an optional side input.
///
/// The main input passes through a ReLU trunk; the side input (CSI
/// features) through its own ReLU branch; both are concatenated and fed
/// to a two-layer head. Without a side branch it is a plain MLP whose
/// hidden widths are `hidden` and whose output is linear.
#[derive(Clone, Debug)]
pub struct BranchNet<T> {
    trunk: Option<Mlp<T>>,
    side: Option<Mlp<T>>,
    head: Mlp<T>,
    input_dim: usize,
    trunk_out: usize,
}

impl<T: Scalar> BranchNet<T> {
    /// `hidden` must be non-empty; its last width is the head's hidden
    /// layer. `side` gives `(side_input_dim, side_widths)`.
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        side: Option<(usize, &[usize])>,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let (last, rest) = hidden
            .split_last()
            .ok_or_else(|| Error::InvalidArgument("BranchNet needs at least one hidden width".into()))?;
        let trunk = if rest.is_empty() {
            None
        } else {
            let mut w = vec![input_dim];
            w.extend_from_slice(rest);
            Some(Mlp::new(&w, Activation::Relu, rng)?)
        };
        let trunk_out = rest.last().copied().unwrap_or(input_dim);
        let side = match side {
            Some((dim, widths)) => {
                let mut w = vec![dim];
                w.extend_from_slice(widths);
                Some(Mlp::new(&w, Activation::Relu, rng)?)
            }
            None => None,
        };
        let side_out = side.as_ref().map_or(0, |s| s.output_width());
        let head = Mlp::new(&[trunk_out + side_out, *last, output_dim], Activation::Identity, rng)?;
        Ok(Self {
            trunk,
            side,
            head,
            input_dim,
            trunk_out,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_width()
    }

    pub fn has_side(&self) -> bool {
        self.side.is_some()
    }

    fn nets(&self) -> impl Iterator<Item = &Mlp<T>> {
        self.trunk.iter().chain(self.side.iter()).chain(std::iter::once(&self.head))
    }

    pub fn param_count(&self) -> usize {
        self.nets().map(Mlp::param_count).sum()
    }

    pub fn macs(&self) -> u64 {
        self.nets().map(Mlp::macs).sum()
    }

    /// Number of gradient blocks returned by `backward`.
    pub fn block_count(&self) -> usize {
        self.nets().map(|n| 2 * n.layers().len()).sum()
    }

    fn check_side(&self, side: Option<&[T]>) -> Result<()> {
        if self.side.is_some() != side.is_some() {
            return Err(Error::InvalidArgument(format!(
                "side input {} but the network was built {} a side branch",
                if side.is_some() { "given" } else { "missing" },
                if self.side.is_some() { "with" } else { "without" }
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &[T], side: Option<&[T]>) -> Result<Vec<T>> {
        check_len("BranchNet input", self.input_dim, x.len())?;
        self.check_side(side)?;
        let mut z = match &mut self.trunk {
            Some(t) => t.forward(x)?,
            None => x.to_vec(),
        };
        if let (Some(net), Some(s)) = (&mut self.side, side) {
            z.extend(net.forward(s)?);
        }
        self.head.forward(&z)
    }

    pub fn apply(&self, x: &[T], side: Option<&[T]>) -> Result<Vec<T>> {
        check_len("BranchNet input", self.input_dim, x.len())?;
        self.check_side(side)?;
        let mut z = match &self.trunk {
            Some(t) => t.apply(x)?,
            None => x.to_vec(),
        };
        if let (Some(net), Some(s)) = (&self.side, side) {
            z.extend(net.apply(s)?);
        }
        self.head.apply(&z)
    }

    /// Gradient with respect to the main input and one block per weight
    /// and bias, ordered trunk, side branch, head.
    pub fn backward(&mut self, upstream: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        let (gz, head_blocks) = self.head.backward(upstream)?;
        let (g_trunk, g_side) = gz.split_at(self.trunk_out);
        let mut blocks = Vec::with_capacity(self.block_count());
        let gx = match &mut self.trunk {
            Some(t) => {
                let (gx, b) = t.backward(g_trunk)?;
                blocks.extend(b);
                gx
            }
            None => g_trunk.to_vec(),
        };
        if let Some(net) = &mut self.side {
            let (_, b) = net.backward(g_side)?;
            blocks.extend(b);
        }
        blocks.extend(head_blocks);
        Ok((gx, blocks))
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        if let Some(t) = &mut self.trunk {
            out.extend(t.param_slices_mut());
        }
        if let Some(s) = &mut self.side {
            out.extend(s.param_slices_mut());
        }
        out.extend(self.head.param_slices_mut());
        out
    }

    pub fn named_params(&self, prefix: &str) -> Vec<NamedArray> {
        let mut out = Vec::new();
        if let Some(t) = &self.trunk {
            out.extend(t.named_params(&format!("{prefix}.trunk")));
        }
        if let Some(s) = &self.side {
            out.extend(s.named_params(&format!("{prefix}.csi")));
        }
        out.extend(self.head.named_params(&format!("{prefix}.head")));
        out
    }

    pub fn load_named(&mut self, prefix: &str, arrays: &[NamedArray]) -> Result<()> {
        if let Some(t) = &mut self.trunk {
            t.load_named(&format!("{prefix}.trunk"), arrays)?;
        }
        if let Some(s) = &mut self.side {
            s.load_named(&format!("{prefix}.csi"), arrays)?;
        }
        self.head.load_named(&format!("{prefix}.head"), arrays)
    }

    pub fn zero_params(&mut self) {
        for s in self.param_slices_mut() {
            s.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn head_mut(&mut self) -> &mut Mlp<T> {
        &mut self.head
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{finite_diff_gradient, max_relative_error};

    fn flat(n: &mut BranchNet<f64>) -> Vec<f64> {
        n.param_slices_mut().into_iter().flat_map(|s| s.to_vec()).collect()
    }

    fn set(n: &mut BranchNet<f64>, p: &[f64]) {
        let mut off = 0;
        for s in n.param_slices_mut() {
            let k = s.len();
            s.copy_from_slice(&p[off..off + k]);
            off += k;
        }
    }

    #[test]
    fn gradients_with_side_branch() {
        let mut rng = SeededRng::new(1);
        let mut net = BranchNet::<f64>::new(5, &[7, 6], 3, Some((4, &[5, 3])), &mut rng).unwrap();
        assert_eq!(net.block_count(), 2 + 4 + 4);
        let x: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
        let side: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
        let c = [0.3, -1.0, 0.7];
        let loss = |y: &[f64]| y.iter().zip(&c).map(|(a, b)| a * b + 0.1 * a * a).sum::<f64>();
        let y = net.forward(&x, Some(&side)).unwrap();
        let up: Vec<f64> = y.iter().zip(&c).map(|(a, b)| b + 0.2 * a).collect();
        let (gx, blocks) = net.backward(&up).unwrap();
        let probe = net.clone();
        let base = flat(&mut net);
        let fd = finite_diff_gradient(
            |p| {
                let mut n = probe.clone();
                set(&mut n, p);
                loss(&n.apply(&x, Some(&side)).unwrap())
            },
            &base,
            1e-5,
        )
        .unwrap();
        assert!(max_relative_error(&blocks.concat(), &fd, 1e-7) < 1e-5);
        let fdx = finite_diff_gradient(|xp| loss(&probe.apply(xp, Some(&side)).unwrap()), &x, 1e-5).unwrap();
        assert!(max_relative_error(&gx, &fdx, 1e-7) < 1e-5);
    }

    #[test]
    fn side_presence_must_match() {
        let mut rng = SeededRng::new(2);
        let plain = BranchNet::<f64>::new(3, &[4], 2, None, &mut rng).unwrap();
        assert!(plain.apply(&[0.0; 3], Some(&[1.0])).is_err());
        let aware = BranchNet::<f64>::new(3, &[4], 2, Some((2, &[3])), &mut rng).unwrap();
        assert!(aware.apply(&[0.0; 3], None).is_err());
    }

    #[test]
    fn single_hidden_width_is_two_layers() {
        let net = BranchNet::<f64>::new(3, &[4], 2, None, &mut SeededRng::new(0)).unwrap();
        assert_eq!(net.macs(), 3 * 4 + 4 * 2);
        let deep = BranchNet::<f64>::new(10, &[8, 6], 2, None, &mut SeededRng::new(0)).unwrap();
        assert_eq!(deep.macs(), 80 + 48 + 12);
    }
}
