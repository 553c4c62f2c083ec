use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Tensor;
use crate::numerics::{Field2D, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    #[default]
    Softplus,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            // ln(1 + eˣ) without overflow for large x.
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Which features enter the frequency split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSource {
    /// Spatial-diffusion features only.
    #[default]
    FaOnly,
    /// Both path outputs, stacked along the channel axis.
    Concat,
}

/// Shapes and hyperparameters of a dissipation block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockConfig {
    pub channels: usize,
    /// Query/key width of the semantic-attenuation attention.
    pub attn_dim: usize,
    /// Heads of the derivative attention; must divide `channels`.
    pub heads: usize,
    pub kernel_size: usize,
    pub gate_hidden: usize,
    pub activation: Activation,
    /// Low-band radius in cycles/pixel.
    pub freq_cutoff: f64,
    pub split_source: SplitSource,
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            channels: 4,
            attn_dim: 4,
            heads: 2,
            kernel_size: 3,
            gate_hidden: 4,
            activation: Activation::Softplus,
            freq_cutoff: 0.25,
            split_source: SplitSource::FaOnly,
        }
    }
}

impl BlockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::config("channels", "must be ≥ 1"));
        }
        if self.attn_dim == 0 {
            return Err(Error::config("attn_dim", "must be ≥ 1"));
        }
        if self.heads == 0 || self.channels % self.heads != 0 {
            return Err(Error::config(
                "heads",
                format!("must divide channels ({}), got {}", self.channels, self.heads),
            ));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::config("kernel_size", "must be odd"));
        }
        if self.gate_hidden == 0 {
            return Err(Error::config("gate_hidden", "must be ≥ 1"));
        }
        if !(self.freq_cutoff > 0.0 && self.freq_cutoff <= 0.5) {
            return Err(Error::config("freq_cutoff", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn uniform(rng: &mut Rng, rows: usize, cols: usize, bound: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect(),
        }
    }

    fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.rows, self.cols], self.data.clone()).expect("matrix shape is consistent")
    }

    fn from_tensor(t: &Tensor, rows: usize, cols: usize, name: &str) -> Result<Self> {
        if t.dims() != [rows, cols] {
            return Err(Error::Format(format!(
                "{name}: expected {rows}x{cols}, got {:?}",
                t.dims()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            data: t.data().to_vec(),
        })
    }
}

/// Every weight of one dissipation block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub config: BlockConfig,
    /// One odd kernel per channel.
    pub kappa_a: Vec<Field2D>,
    pub b_a: Vec<f64>,
    /// `C × attn_dim`.
    pub w_q: Matrix,
    pub w_k: Matrix,
    /// `C × C`, so attention output has the input's channel count.
    pub w_v: Matrix,
    pub b_b: Vec<f64>,
    /// Derivative-attention projections, `C × C`, columns split by head.
    pub w_qd: Matrix,
    pub w_kd: Matrix,
    pub w_vd: Matrix,
    /// Gate chain weights `1 → gate_hidden → 1`.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

const NAMES: [&str; 11] = [
    "kappa_a", "b_a", "w_q", "w_k", "w_v", "b_b", "w_qd", "w_kd", "w_vd", "w1", "w2",
];

impl BlockParams {
    /// Weights drawn uniformly from `±1/√fan_in`, each tensor from its own
    /// substream of `seed`.
    pub fn seeded(config: BlockConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let root = Rng::new(seed);
        let stream = |i: usize| root.substream(i as u64);
        let c = config.channels;
        let k = config.kernel_size;
        let kb = 1.0 / k as f64;
        let cb = 1.0 / (c as f64).sqrt();
        let hb = 1.0 / (config.gate_hidden as f64).sqrt();

        let mut rng = stream(0);
        let kappa_a = (0..c).map(|_| rng.uniform_field(k, k, -kb, kb)).collect();
        let mut rng = stream(1);
        let b_a = (0..c).map(|_| rng.uniform(-kb, kb)).collect();
        let w_q = Matrix::uniform(&mut stream(2), c, config.attn_dim, cb);
        let w_k = Matrix::uniform(&mut stream(3), c, config.attn_dim, cb);
        let w_v = Matrix::uniform(&mut stream(4), c, c, cb);
        let mut rng = stream(5);
        let b_b = (0..c).map(|_| rng.uniform(-cb, cb)).collect();
        let w_qd = Matrix::uniform(&mut stream(6), c, c, cb);
        let w_kd = Matrix::uniform(&mut stream(7), c, c, cb);
        let w_vd = Matrix::uniform(&mut stream(8), c, c, cb);
        let mut rng = stream(9);
        let w1 = (0..config.gate_hidden).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut rng = stream(10);
        let w2 = (0..config.gate_hidden).map(|_| rng.uniform(-hb, hb)).collect();

        Ok(BlockParams {
            config,
            kappa_a,
            b_a,
            w_q,
            w_k,
            w_v,
            b_b,
            w_qd,
            w_kd,
            w_vd,
            w1,
            w2,
        })
    }

    pub fn channels(&self) -> usize {
        self.config.channels
    }

    /// Checks every weight against the configured shapes.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let c = self.config.channels;
        let d = self.config.attn_dim;
        let bad = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "parameter `{what}` has the wrong shape"
            )))
        };
        if self.kappa_a.len() != c || self.b_a.len() != c {
            return bad("kappa_a/b_a");
        }
        if let Some(k) = self.kappa_a.iter().find(|k| k.height() % 2 == 0 || k.width() % 2 == 0) {
            return Err(Error::InvalidKernel(format!(
                "kappa_a kernel {:?} is not odd-sized",
                k.dims()
            )));
        }
        for (name, m, cols) in [("w_q", &self.w_q, d), ("w_k", &self.w_k, d), ("w_v", &self.w_v, c)] {
            if m.rows != c || m.cols != cols {
                return bad(name);
            }
        }
        for (name, m) in [("w_qd", &self.w_qd), ("w_kd", &self.w_kd), ("w_vd", &self.w_vd)] {
            if m.rows != c || m.cols != c {
                return bad(name);
            }
        }
        if self.b_b.len() != c {
            return bad("b_b");
        }
        if self.w1.len() != self.config.gate_hidden || self.w2.len() != self.config.gate_hidden {
            return bad("w1/w2");
        }
        Ok(())
    }

    /// Named tensors for the binary bundle format.
    pub fn to_records(&self) -> Vec<(String, Tensor)> {
        let c = self.config.channels;
        let k = self.config.kernel_size;
        let kappa: Vec<f64> = self.kappa_a.iter().flat_map(|f| f.data().iter().copied()).collect();
        let tensors = [
            Tensor::new(vec![c, k, k], kappa).expect("kernel shapes match config"),
            Tensor::vector(self.b_a.clone()),
            self.w_q.to_tensor(),
            self.w_k.to_tensor(),
            self.w_v.to_tensor(),
            Tensor::vector(self.b_b.clone()),
            self.w_qd.to_tensor(),
            self.w_kd.to_tensor(),
            self.w_vd.to_tensor(),
            Tensor::vector(self.w1.clone()),
            Tensor::vector(self.w2.clone()),
        ];
        NAMES.iter().map(|n| n.to_string()).zip(tensors).collect()
    }

    pub fn from_records(config: BlockConfig, records: &[(String, Tensor)]) -> Result<Self> {
        config.validate()?;
        let find = |name: &str| {
            records
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Format(format!("missing record `{name}`")))
        };
        let c = config.channels;
        let d = config.attn_dim;
        let vector = |name: &str, len: usize| -> Result<Vec<f64>> {
            let t = find(name)?;
            if t.dims() != [len] {
                return Err(Error::Format(format!(
                    "{name}: expected length {len}, got {:?}",
                    t.dims()
                )));
            }
            Ok(t.data().to_vec())
        };
        let kappa = find("kappa_a")?;
        let k = config.kernel_size;
        if kappa.dims() != [c, k, k] {
            return Err(Error::Format(format!(
                "kappa_a: expected {c}x{k}x{k}, got {:?}",
                kappa.dims()
            )));
        }
        let kappa_a = kappa
            .data()
            .chunks(k * k)
            .map(|ch| Field2D::from_vec(k, k, ch.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let params = BlockParams {
            kappa_a,
            b_a: vector("b_a", c)?,
            w_q: Matrix::from_tensor(find("w_q")?, c, d, "w_q")?,
            w_k: Matrix::from_tensor(find("w_k")?, c, d, "w_k")?,
            w_v: Matrix::from_tensor(find("w_v")?, c, c, "w_v")?,
            b_b: vector("b_b", c)?,
            w_qd: Matrix::from_tensor(find("w_qd")?, c, c, "w_qd")?,
            w_kd: Matrix::from_tensor(find("w_kd")?, c, c, "w_kd")?,
            w_vd: Matrix::from_tensor(find("w_vd")?, c, c, "w_vd")?,
            w1: vector("w1", config.gate_hidden)?,
            w2: vector("w2", config.gate_hidden)?,
            config,
        };
        params.validate()?;
        Ok(params)
    }
}
