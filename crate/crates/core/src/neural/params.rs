use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::choice::{gated_softmax, Assortment, ChoiceModel, ProbVector};
use crate::error::{ChoiceError, Result};
use crate::rng::{self, Rng};

/// Initial bias of [`NetworkParams::glorot`]. A logit unit that is inactive on
/// every assortment it appears in never receives a gradient again.
pub const INIT_BIAS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// `z_l = (W_l z_{l-1} + b_l)^+`
    Gasn,
    /// `z_l = (W_l z_{l-1} + b_l)^+ + z_{l-1}` on square layers.
    Rasn,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Gasn => "gasn",
            Arch::Rasn => "rasn",
        })
    }
}

impl FromStr for Arch {
    type Err = ChoiceError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gasn" => Ok(Arch::Gasn),
            "rasn" => Ok(Arch::Rasn),
            _ => Err(ChoiceError::Config(format!(
                "unknown architecture {s:?} (gasn|rasn)"
            ))),
        }
    }
}

/// Dense affine map, weights stored row-major (`rows x cols`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    /// Uniform on `+-sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let r = (6.0 / (rows + cols) as f64).sqrt();
        Self {
            rows,
            cols,
            w: (0..rows * cols).map(|_| rng.random_range(-r..=r)).collect(),
            b: vec![0.0; rows],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.w[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.cols..(i + 1) * self.cols]
    }

    /// `W x + b`
    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.w[i * self.cols + j] * xj;
            }
        }
        out
    }

    /// Accumulates `dW += g x^T`, `db += g` and returns `W^T g`.
    pub fn backward(&self, x: &[f64], g: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.cols];
        for (i, &gi) in g.iter().enumerate() {
            if gi == 0.0 {
                continue;
            }
            db[i] += gi;
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            let drow = &mut dw[i * self.cols..(i + 1) * self.cols];
            for j in 0..self.cols {
                drow[j] += gi * x[j];
                dx[j] += gi * row[j];
            }
        }
        dx
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Scales rows into `||W||_inf <= w_bar` and clamps `b` into `[-b_bar, b_bar]`.
    pub fn project(&mut self, w_bar: f64, b_bar: f64) {
        for i in 0..self.rows {
            let s: f64 = self.row(i).iter().map(|x| x.abs()).sum();
            if s > w_bar {
                let k = w_bar / s;
                self.w[i * self.cols..(i + 1) * self.cols]
                    .iter_mut()
                    .for_each(|x| *x *= k);
            }
        }
        self.b.iter_mut().for_each(|x| *x = x.clamp(-b_bar, b_bar));
    }
}

/// Per-layer pre-activations `a_l` and outputs `z_l` (`z[0]` is the input).
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub pre: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl Activations {
    pub fn logits(&self) -> &[f64] {
        self.z.last().expect("input layer present")
    }
}

/// Weights of a gated (GAsN) or residual (RAsN) assortment network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub arch: Arch,
    pub layers: Vec<Layer>,
    /// Number of items (output logits).
    pub n: usize,
    /// Input width; `n` for the feature-free networks.
    pub input: usize,
}

impl NetworkParams {
    /// Network with the given layer widths `dims = [n_0, .., n_L]`; the last
    /// width is the item count.
    pub fn new(arch: Arch, layers: Vec<Layer>, input: usize, n: usize) -> Result<Self> {
        let p = Self {
            arch,
            layers,
            n,
            input,
        };
        p.validate()?;
        Ok(p)
    }

    /// Glorot weights with every bias at [`INIT_BIAS`], so that each unit
    /// starts active on every offer vector.
    pub fn glorot(arch: Arch, dims: &[usize], seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        Self::from_dims(arch, dims, |rows, cols| {
            let mut l = Layer::glorot(rows, cols, &mut r);
            l.b.iter_mut().for_each(|b| *b = INIT_BIAS);
            l
        })
    }

    pub fn zeros(arch: Arch, dims: &[usize]) -> Result<Self> {
        Self::from_dims(arch, dims, Layer::zeros)
    }

    fn from_dims(
        arch: Arch,
        dims: &[usize],
        mut make: impl FnMut(usize, usize) -> Layer,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(ChoiceError::Config(
                "network needs at least an input width".into(),
            ));
        }
        let layers = dims.windows(2).map(|w| make(w[1], w[0])).collect();
        let n = *dims.last().unwrap();
        Self::new(arch, layers, dims[0], n)
    }

    /// `L` hidden layers of width `n * width_mult` ending in `n` logits; `L=1`
    /// is the single `n x n` layer.
    pub fn standard_dims(n: usize, depth: usize, width_mult: usize) -> Vec<usize> {
        let mut dims = vec![n];
        for l in 0..depth {
            dims.push(if l + 1 == depth {
                n
            } else {
                n * width_mult.max(1)
            });
        }
        dims
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input];
        d.extend(self.layers.iter().map(|l| l.rows));
        d
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input;
        for (k, l) in self.layers.iter().enumerate() {
            if l.cols != width || l.w.len() != l.rows * l.cols || l.b.len() != l.rows {
                return Err(ChoiceError::Dimension {
                    expected: width,
                    got: l.cols,
                    context: "layer input width",
                });
            }
            if l.w.iter().chain(&l.b).any(|x| !x.is_finite()) {
                return Err(ChoiceError::Model(format!(
                    "layer {k} has non-finite parameters"
                )));
            }
            width = l.rows;
        }
        if width != self.n {
            return Err(ChoiceError::Dimension {
                expected: self.n,
                got: width,
                context: "output width",
            });
        }
        if self.arch == Arch::Rasn
            && self.input == self.n
            && self.layers.iter().any(|l| l.rows != l.cols)
        {
            return Err(ChoiceError::Model("residual layers must be square".into()));
        }
        Ok(())
    }

    fn residual(&self, l: &Layer) -> bool {
        self.arch == Arch::Rasn && l.rows == l.cols
    }

    /// Layer outputs for an arbitrary input vector.
    pub fn activations(&self, input: &[f64]) -> Result<Activations> {
        if input.len() != self.input {
            return Err(ChoiceError::Dimension {
                expected: self.input,
                got: input.len(),
                context: "network input",
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut z = Vec::with_capacity(self.layers.len() + 1);
        z.push(input.to_vec());
        for l in &self.layers {
            let a = l.affine(z.last().unwrap());
            let mut out: Vec<f64> = a.iter().map(|&x| x.max(0.0)).collect();
            if self.residual(l) {
                out.iter_mut()
                    .zip(z.last().unwrap())
                    .for_each(|(o, p)| *o += p);
            }
            pre.push(a);
            z.push(out);
        }
        Ok(Activations { pre, z })
    }

    /// Gated probabilities plus the activations, input `z_0 = S`.
    pub fn forward(&self, assortment: &Assortment) -> Result<(ProbVector, Activations)> {
        self.forward_input(&assortment.as_f64(), assortment)
    }

    pub fn forward_input(
        &self,
        input: &[f64],
        assortment: &Assortment,
    ) -> Result<(ProbVector, Activations)> {
        if assortment.n() != self.n {
            return Err(ChoiceError::Dimension {
                expected: self.n,
                got: assortment.n(),
                context: "assortment",
            });
        }
        let act = self.activations(input)?;
        Ok((gated_softmax(act.logits(), assortment), act))
    }

    pub fn zero_grad(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .flat_map(|l| [vec![0.0; l.w.len()], vec![0.0; l.b.len()]])
            .collect()
    }

    /// Accumulates the gradient of `-log Y_chosen` into `grad` (layout of
    /// [`Self::zero_grad`]) and returns `(loss, d loss / d input)`.
    pub fn backward_input(
        &self,
        input: &[f64],
        assortment: &Assortment,
        chosen: usize,
        grad: &mut [Vec<f64>],
    ) -> Result<(f64, Vec<f64>)> {
        if !assortment.contains(chosen) {
            return Err(ChoiceError::Dataset(format!(
                "chosen item {chosen} not offered"
            )));
        }
        let (p, act) = self.forward_input(input, assortment)?;
        let mut g: Vec<f64> = (0..self.n)
            .map(|i| {
                if assortment.contains(i) {
                    p.get(i) - if i == chosen { 1.0 } else { 0.0 }
                } else {
                    0.0
                }
            })
            .collect();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let da: Vec<f64> = g
                .iter()
                .zip(&act.pre[k])
                .map(|(&gi, &a)| if a > 0.0 { gi } else { 0.0 })
                .collect();
            let (dw, db) = grad[2 * k..2 * k + 2].split_at_mut(1);
            let mut dx = l.backward(&act.z[k], &da, &mut dw[0], &mut db[0]);
            if self.residual(l) {
                dx.iter_mut().zip(&g).for_each(|(d, gi)| *d += gi);
            }
            g = dx;
        }
        let loss = -p.get(chosen).max(crate::choice::PROB_FLOOR).ln();
        Ok((loss, g))
    }

    /// Gradient of `-log Y_chosen` for input `z_0 = S`.
    pub fn backward(&self, assortment: &Assortment, chosen: usize) -> Result<Vec<Vec<f64>>> {
        let mut grad = self.zero_grad();
        self.backward_input(&assortment.as_f64(), assortment, chosen, &mut grad)?;
        Ok(grad)
    }

    pub fn project(&mut self, w_bar: f64, b_bar: f64) {
        self.layers.iter_mut().for_each(|l| l.project(w_bar, b_bar));
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [&l.w[..], &l.b[..]])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w[..], &mut l.b[..]])
            .collect()
    }
}

impl ChoiceModel for NetworkParams {
    fn n(&self) -> usize {
        self.n
    }

    fn probabilities(&self, assortment: &Assortment) -> Result<ProbVector> {
        if self.input != self.n {
            return Err(ChoiceError::Unsupported(
                "network expects latent utilities; use the feature network".into(),
            ));
        }
        Ok(self.forward(assortment)?.0)
    }
}
