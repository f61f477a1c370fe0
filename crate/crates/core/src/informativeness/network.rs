use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::{self, Tensor};
use crate::seed;
use crate::text::{Alphabet, CharSequence, DEFAULT_MAX_LEN};

/// One temporal convolution followed by ReLU and non-overlapping max-pooling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub filters: usize,
    pub width: usize,
    pub pool: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub alphabet: Alphabet,
    pub max_len: usize,
    pub conv: Vec<ConvLayer>,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Loss weight per class (not informative, informative). `None` uses
    /// inverse class frequency of the training set.
    pub class_weights: Option<[f64; 2]>,
    /// Extra loss multiplier for messages from the crowd-labeled corpus.
    pub ccsid_weight: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            alphabet: Alphabet::default(),
            max_len: DEFAULT_MAX_LEN,
            conv: vec![
                ConvLayer {
                    filters: 64,
                    width: 7,
                    pool: 3,
                },
                ConvLayer {
                    filters: 64,
                    width: 3,
                    pool: 3,
                },
            ],
            hidden: vec![128],
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 100,
            class_weights: None,
            ccsid_weight: 2.0,
            seed: 0,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.conv.is_empty() {
            return bad("at least one convolution layer is required".into());
        }
        if self.max_len == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("max_len, batch_size and max_epochs must be positive".into());
        }
        if self.conv.iter().any(|c| c.filters == 0 || c.width == 0 || c.pool == 0) || self.hidden.contains(&0) {
            return bad("layer sizes must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.class_weights.is_some_and(|w| w.iter().any(|&x| !(x > 0.0 && x.is_finite())))
            || !(self.ccsid_weight > 0.0 && self.ccsid_weight.is_finite())
        {
            return bad("class and source weights must be positive".into());
        }
        Layout::new(self).map(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvShape {
    pub in_ch: usize,
    pub filters: usize,
    pub width: usize,
    pub pool: usize,
    pub in_len: usize,
    pub conv_len: usize,
    pub out_len: usize,
    pub w: usize,
    pub b: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct DenseShape {
    pub inp: usize,
    pub out: usize,
    pub w: usize,
    pub b: usize,
    pub relu: bool,
}

/// Offsets of every parameter tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub conv: Vec<ConvShape>,
    pub dense: Vec<DenseShape>,
    pub total: usize,
}

impl Layout {
    pub fn new(config: &CnnConfig) -> Result<Self> {
        let mut total = 0;
        let mut conv = Vec::new();
        let (mut len, mut ch) = (config.max_len, config.alphabet.len());
        for (i, c) in config.conv.iter().enumerate() {
            if len < c.width || (len - c.width + 1) / c.pool == 0 {
                return Err(Error::Config(format!(
                    "convolution layer {} leaves no output for input length {len}",
                    i + 1
                )));
            }
            let conv_len = len - c.width + 1;
            let w = total;
            total += c.filters * c.width * ch;
            let b = total;
            total += c.filters;
            conv.push(ConvShape {
                in_ch: ch,
                filters: c.filters,
                width: c.width,
                pool: c.pool,
                in_len: len,
                conv_len,
                out_len: conv_len / c.pool,
                w,
                b,
            });
            len = conv_len / c.pool;
            ch = c.filters;
        }
        let mut inp = len * ch;
        let mut dense = Vec::new();
        for (i, &out) in config.hidden.iter().chain(std::iter::once(&2)).enumerate() {
            let w = total;
            total += out * inp;
            let b = total;
            total += out;
            dense.push(DenseShape {
                inp,
                out,
                w,
                b,
                relu: i < config.hidden.len(),
            });
            inp = out;
        }
        Ok(Layout { conv, dense, total })
    }

    /// (name, offset, dims, fan_in) per parameter tensor, input to output.
    pub fn tensors(&self) -> Vec<(String, usize, Vec<usize>, usize)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            let fan_in = c.width * c.in_ch;
            out.push((format!("conv{}.weight", i + 1), c.w, vec![c.filters, c.width, c.in_ch], fan_in));
            out.push((format!("conv{}.bias", i + 1), c.b, vec![c.filters], fan_in));
        }
        for (i, d) in self.dense.iter().enumerate() {
            out.push((format!("dense{}.weight", i + 1), d.w, vec![d.out, d.inp], d.inp));
            out.push((format!("dense{}.bias", i + 1), d.b, vec![d.out], d.inp));
        }
        out
    }
}

/// A named slice of the parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamTensor {
    pub name: String,
    pub offset: usize,
    pub dims: Vec<usize>,
}

impl ParamTensor {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    config: CnnConfig,
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
}

/// Weights and biases drawn from U(-sqrt(6/fan_in), sqrt(6/fan_in)).
pub fn init_model(config: &CnnConfig) -> Result<CnnModel> {
    config.validate()?;
    let layout = Layout::new(config)?;
    let mut rng = seed::rng(seed::derive_seed(config.seed, "init"));
    let mut params = vec![0.0; layout.total];
    for (_, offset, dims, fan_in) in layout.tensors() {
        let bound = (6.0 / fan_in as f64).sqrt();
        let n: usize = dims.iter().product();
        for p in &mut params[offset..offset + n] {
            *p = rng.gen_range(-bound..bound);
        }
    }
    Ok(CnnModel {
        config: config.clone(),
        layout,
        params,
    })
}

/// Intermediate values kept for back-propagation.
#[derive(Clone, Debug, Default)]
pub(crate) struct Cache {
    /// Pre-activation convolution output per layer, `[t][filter]`.
    conv_pre: Vec<Vec<f64>>,
    /// Pooled activations per layer, `[p][filter]`.
    pooled: Vec<Vec<f64>>,
    /// Position in `conv_pre` that won each pooling window.
    arg: Vec<Vec<u32>>,
    /// Output of each dense layer; hidden layers after ReLU, the last holds logits.
    dense: Vec<Vec<f64>>,
    pub probs: [f64; 2],
    pub log_probs: [f64; 2],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CnnModel {
    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_tensors(&self) -> Vec<ParamTensor> {
        self.layout
            .tensors()
            .into_iter()
            .map(|(name, offset, dims, _)| ParamTensor { name, offset, dims })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn check_input(&self, chars: &CharSequence) -> Result<()> {
        if chars.len() != self.config.max_len {
            return Err(Error::LengthMismatch {
                left: chars.len(),
                right: self.config.max_len,
            });
        }
        let limit = self.config.alphabet.len() as u16;
        if let Some(&bad) = chars.indices().iter().find(|&&i| i > limit) {
            return Err(Error::Config(format!("character index {bad} outside alphabet of {limit}")));
        }
        Ok(())
    }

    /// Class probabilities `[not informative, informative]`.
    pub fn forward(&self, chars: &CharSequence) -> Result<[f64; 2]> {
        Ok(self.forward_cached(chars)?.probs)
    }

    pub(crate) fn forward_cached(&self, chars: &CharSequence) -> Result<Cache> {
        self.check_input(chars)?;
        let p = &self.params;
        let mut cache = Cache::default();
        for (l, s) in self.layout.conv.iter().enumerate() {
            let mut pre = vec![0.0; s.conv_len * s.filters];
            for f in 0..s.filters {
                let wf = &p[s.w + f * s.width * s.in_ch..s.w + (f + 1) * s.width * s.in_ch];
                let bias = p[s.b + f];
                for t in 0..s.conv_len {
                    let v = if l == 0 {
                        // One-hot input: gather the matching weight column per offset.
                        let mut acc = bias;
                        for (k, &idx) in chars.indices()[t..t + s.width].iter().enumerate() {
                            if idx > 0 {
                                acc += wf[k * s.in_ch + idx as usize - 1];
                            }
                        }
                        acc
                    } else {
                        let input = &cache.pooled[l - 1];
                        bias + dot(wf, &input[t * s.in_ch..(t + s.width) * s.in_ch])
                    };
                    pre[t * s.filters + f] = v;
                }
            }
            let mut pooled = vec![0.0; s.out_len * s.filters];
            let mut arg = vec![0u32; s.out_len * s.filters];
            for q in 0..s.out_len {
                for f in 0..s.filters {
                    let mut best_t = q * s.pool;
                    let mut best = pre[best_t * s.filters + f];
                    for t in q * s.pool + 1..(q + 1) * s.pool {
                        if pre[t * s.filters + f] > best {
                            best = pre[t * s.filters + f];
                            best_t = t;
                        }
                    }
                    // max(relu(x)) = relu(max(x))
                    pooled[q * s.filters + f] = best.max(0.0);
                    arg[q * s.filters + f] = best_t as u32;
                }
            }
            cache.conv_pre.push(pre);
            cache.pooled.push(pooled);
            cache.arg.push(arg);
        }
        for d in &self.layout.dense {
            let input = cache.dense.last().unwrap_or_else(|| cache.pooled.last().expect("conv layer"));
            let out: Vec<f64> = (0..d.out)
                .map(|o| {
                    let v = p[d.b + o] + dot(&p[d.w + o * d.inp..d.w + (o + 1) * d.inp], input);
                    if d.relu {
                        v.max(0.0)
                    } else {
                        v
                    }
                })
                .collect();
            cache.dense.push(out);
        }
        let z = cache.dense.last().expect("output layer");
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        cache.log_probs = [z[0] - lse, z[1] - lse];
        cache.probs = [cache.log_probs[0].exp(), cache.log_probs[1].exp()];
        Ok(cache)
    }

    /// Add `weight * d(-ln p[class]) / d(params)` into `grad`.
    pub(crate) fn backward(&self, chars: &CharSequence, cache: &Cache, class: usize, weight: f64, grad: &mut [f64]) {
        let p = &self.params;
        let mut delta: Vec<f64> = (0..2)
            .map(|k| weight * (cache.probs[k] - if k == class { 1.0 } else { 0.0 }))
            .collect();
        for (di, d) in self.layout.dense.iter().enumerate().rev() {
            let input = if di == 0 {
                cache.pooled.last().expect("conv layer")
            } else {
                &cache.dense[di - 1]
            };
            let mut d_in = vec![0.0; d.inp];
            for (o, &g) in delta.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[d.b + o] += g;
                let row = d.w + o * d.inp;
                for i in 0..d.inp {
                    grad[row + i] += g * input[i];
                    d_in[i] += p[row + i] * g;
                }
            }
            // Inputs to every dense layer are non-negative ReLU or pooled outputs.
            for (g, &a) in d_in.iter_mut().zip(input) {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
            delta = d_in;
        }
        for (l, s) in self.layout.conv.iter().enumerate().rev() {
            // Route pooled gradients to the winning positions (ReLU already masked).
            let mut d_pre = vec![0.0; s.conv_len * s.filters];
            for (qf, &g) in delta.iter().enumerate() {
                if g != 0.0 {
                    let f = qf % s.filters;
                    d_pre[cache.arg[l][qf] as usize * s.filters + f] += g;
                }
            }
            let mut d_in = if l > 0 { vec![0.0; s.in_len * s.in_ch] } else { Vec::new() };
            let span = s.width * s.in_ch;
            for f in 0..s.filters {
                let wf = s.w + f * span;
                for t in 0..s.conv_len {
                    let g = d_pre[t * s.filters + f];
                    if g == 0.0 {
                        continue;
                    }
                    grad[s.b + f] += g;
                    if l == 0 {
                        for (k, &idx) in chars.indices()[t..t + s.width].iter().enumerate() {
                            if idx > 0 {
                                grad[wf + k * s.in_ch + idx as usize - 1] += g;
                            }
                        }
                    } else {
                        let input = &cache.pooled[l - 1][t * s.in_ch..t * s.in_ch + span];
                        for j in 0..span {
                            grad[wf + j] += g * input[j];
                            d_in[t * s.in_ch + j] += p[wf + j] * g;
                        }
                    }
                }
            }
            if l > 0 {
                for (g, &a) in d_in.iter_mut().zip(&cache.pooled[l - 1]) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = d_in;
        }
    }

    /// Weighted negative log-likelihood of one example.
    pub fn loss(&self, chars: &CharSequence, class: usize, weight: f64) -> Result<f64> {
        Ok(-weight * self.forward_cached(chars)?.log_probs[class])
    }

    /// Gradient of [`CnnModel::loss`] with respect to every parameter.
    pub fn gradient(&self, chars: &CharSequence, class: usize, weight: f64) -> Result<Vec<f64>> {
        let cache = self.forward_cached(chars)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(chars, &cache, class, weight, &mut grad);
        Ok(grad)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let tensors: Vec<Tensor> = self
            .parameter_tensors()
            .into_iter()
            .map(|t| Tensor::new(t.dims.clone(), self.params[t.range()].to_vec()))
            .collect();
        persist::encode(MAGIC, VERSION, &self.config, &tensors)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (config, tensors): (CnnConfig, Vec<Tensor>) = persist::decode(MAGIC, VERSION, bytes)?;
        config.validate()?;
        let layout = Layout::new(&config)?;
        let expected = layout.tensors();
        if expected.len() != tensors.len() {
            return Err(Error::ModelFormat(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        let mut params = Vec::with_capacity(layout.total);
        for ((name, _, dims, _), t) in expected.iter().zip(tensors) {
            if *dims != t.dims {
                return Err(Error::ModelFormat(format!("{name} has shape {:?}, expected {dims:?}", t.dims)));
            }
            params.extend(t.data);
        }
        Ok(CnnModel { config, layout, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        persist::write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&persist::read_file(path)?)
    }
}

const MAGIC: &[u8; 8] = b"CTINFCNN";
const VERSION: u32 = 1;
