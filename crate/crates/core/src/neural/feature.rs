use serde::{Deserialize, Serialize};

use super::params::{Arch, Layer, NetworkParams};
use crate::choice::{Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};
use crate::rng;

/// Multilayer perceptron with ReLU hidden layers and a linear last layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    pub fn glorot(dims: &[usize], rng: &mut rng::Rng) -> Self {
        Self {
            layers: dims
                .windows(2)
                .map(|w| Layer::glorot(w[1], w[0], rng))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    /// Returns the inputs of every layer followed by the output.
    pub fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut outs = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut a = l.affine(outs.last().unwrap());
            if k < last {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            outs.push(a);
        }
        outs
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().unwrap()
    }

    /// Accumulates parameter gradients given `g = d loss / d output`.
    pub fn backward(&self, outs: &[Vec<f64>], g: &[f64], grad: &mut [Vec<f64>]) {
        let mut g = g.to_vec();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate().rev() {
            if k < last {
                g.iter_mut().zip(&outs[k + 1]).for_each(|(gi, &o)| {
                    if o <= 0.0 {
                        *gi = 0.0
                    }
                });
            }
            let (dw, db) = grad[2 * k..2 * k + 2].split_at_mut(1);
            g = l.backward(&outs[k], &g, &mut dw[0], &mut db[0]);
        }
    }

    fn zero_grad(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]])
            .collect()
    }
}

/// Feature-based assortment network.
///
/// Product features `f_i` and customer features `f_c` are encoded to a
/// common latent dimension; `u_i = <P(f_i), C(f_c)>`. The gated variant
/// feeds `u * S` to the network, the residual variant feeds `(u, S)`.
/// Features of unoffered products are replaced by zeros; a missing customer
/// feature vector is the constant `[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNet {
    pub product_encoder: Mlp,
    pub customer_encoder: Mlp,
    pub net: NetworkParams,
    pub product_features: Vec<Vec<f64>>,
}

struct Pass {
    enc: Vec<Vec<Vec<f64>>>,
    cust: Vec<Vec<f64>>,
    input: Vec<f64>,
}

impl FeatureNet {
    /// `encoder_hidden` are the hidden widths of both encoders; `depth` and
    /// `width_mult` shape the choice network.
    #[allow(clippy::too_many_arguments)]
    pub fn glorot(
        arch: Arch,
        product_features: Vec<Vec<f64>>,
        customer_dim: usize,
        latent: usize,
        encoder_hidden: &[usize],
        depth: usize,
        width_mult: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = product_features.len();
        let d = product_features.first().map(Vec::len).unwrap_or(0);
        if n < 2 || d == 0 || product_features.iter().any(|r| r.len() != d) {
            return Err(ChoiceError::Config(
                "product feature table must be n x d with d >= 1".into(),
            ));
        }
        let mut r = rng::seeded(seed);
        let dims = |input: usize| {
            let mut v = vec![input];
            v.extend_from_slice(encoder_hidden);
            v.push(latent);
            v
        };
        let product_encoder = Mlp::glorot(&dims(d), &mut r);
        let customer_encoder = Mlp::glorot(&dims(customer_dim.max(1)), &mut r);
        let (input, hidden) = match arch {
            Arch::Gasn => (n, n * width_mult.max(1)),
            Arch::Rasn => (2 * n, 2 * n),
        };
        let mut net_dims = vec![input];
        for _ in 1..depth.max(1) {
            net_dims.push(hidden);
        }
        net_dims.push(n);
        let net = NetworkParams::glorot(arch, &net_dims, rng::child_seed(seed, 1))?;
        Ok(Self {
            product_encoder,
            customer_encoder,
            net,
            product_features,
        })
    }

    pub fn n(&self) -> usize {
        self.net.n
    }

    fn pass(&self, assortment: &Assortment, customer: Option<&[f64]>) -> Result<Pass> {
        let n = self.n();
        if assortment.n() != n {
            return Err(ChoiceError::Dimension {
                expected: n,
                got: assortment.n(),
                context: "assortment",
            });
        }
        let one = [1.0];
        let c = customer.unwrap_or(&one);
        if c.len() != self.customer_encoder.input_dim() {
            return Err(ChoiceError::Dimension {
                expected: self.customer_encoder.input_dim(),
                got: c.len(),
                context: "customer features",
            });
        }
        let cust = self.customer_encoder.forward(c);
        let cvec = cust.last().unwrap();
        let zero = vec![0.0; self.product_encoder.input_dim()];
        let enc: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| {
                let f = if assortment.contains(i) {
                    &self.product_features[i]
                } else {
                    &zero
                };
                self.product_encoder.forward(f)
            })
            .collect();
        let u: Vec<f64> = enc
            .iter()
            .map(|e| e.last().unwrap().iter().zip(cvec).map(|(a, b)| a * b).sum())
            .collect();
        let input = match self.net.arch {
            Arch::Gasn => u
                .iter()
                .zip(assortment.mask())
                .map(|(&x, &s)| if s { x } else { 0.0 })
                .collect(),
            Arch::Rasn => u.iter().copied().chain(assortment.as_f64()).collect(),
        };
        Ok(Pass { enc, cust, input })
    }

    /// Latent utilities `u_i` for the given context.
    pub fn latent_utilities(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let p = self.pass(assortment, customer)?;
        Ok(match self.net.arch {
            Arch::Gasn => {
                let c = p.cust.last().unwrap();
                p.enc
                    .iter()
                    .map(|e| e.last().unwrap().iter().zip(c).map(|(a, b)| a * b).sum())
                    .collect()
            }
            Arch::Rasn => p.input[..self.n()].to_vec(),
        })
    }

    /// Output logits `z_L` for the given context.
    pub fn logits(&self, assortment: &Assortment, customer: Option<&[f64]>) -> Result<Vec<f64>> {
        let p = self.pass(assortment, customer)?;
        Ok(self.net.activations(&p.input)?.logits().to_vec())
    }

    pub fn zero_grad(&self) -> Vec<Vec<f64>> {
        let mut g = self.net.zero_grad();
        g.extend(self.product_encoder.zero_grad());
        g.extend(self.customer_encoder.zero_grad());
        g
    }

    /// Accumulates the gradient of `-log Y_chosen`; returns the loss.
    pub fn backward(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
        chosen: usize,
        grad: &mut [Vec<f64>],
    ) -> Result<f64> {
        let n = self.n();
        let pass = self.pass(assortment, customer)?;
        let k_net = 2 * self.net.layers.len();
        let k_prod = 2 * self.product_encoder.layers.len();
        let (gnet, rest) = grad.split_at_mut(k_net);
        let (gprod, gcust) = rest.split_at_mut(k_prod);
        let (loss, dx) = self
            .net
            .backward_input(&pass.input, assortment, chosen, gnet)?;
        let du: Vec<f64> = match self.net.arch {
            Arch::Gasn => dx
                .iter()
                .zip(assortment.mask())
                .map(|(&g, &s)| if s { g } else { 0.0 })
                .collect(),
            Arch::Rasn => dx[..n].to_vec(),
        };
        let c = pass.cust.last().unwrap();
        let mut dc = vec![0.0; c.len()];
        for (i, e) in pass.enc.iter().enumerate() {
            if du[i] == 0.0 {
                continue;
            }
            let ei = e.last().unwrap();
            dc.iter_mut().zip(ei).for_each(|(d, &x)| *d += du[i] * x);
            let de: Vec<f64> = c.iter().map(|&x| du[i] * x).collect();
            self.product_encoder.backward(e, &de, gprod);
        }
        self.customer_encoder.backward(&pass.cust, &dc, gcust);
        Ok(loss)
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.net.param_slices();
        for l in self
            .product_encoder
            .layers
            .iter()
            .chain(&self.customer_encoder.layers)
        {
            v.push(&l.w);
            v.push(&l.b);
        }
        v
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.net.param_slices_mut();
        for l in self
            .product_encoder
            .layers
            .iter_mut()
            .chain(self.customer_encoder.layers.iter_mut())
        {
            v.push(&mut l.w);
            v.push(&mut l.b);
        }
        v
    }
}

impl ChoiceModel for FeatureNet {
    fn n(&self) -> usize {
        self.net.n
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        self.probabilities_for(assortment, None)
    }

    fn probabilities_for(
        &self,
        assortment: &Assortment,
        customer: Option<&[f64]>,
    ) -> Result<ProbVector> {
        let pass = self.pass(assortment, customer)?;
        Ok(self.net.forward_input(&pass.input, assortment)?.0)
    }
}
