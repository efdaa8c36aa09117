use std::fmt;

use crate::scalar::Scalar;

/// Activation tensor shape, channel-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width }
    }

    pub const fn flat(n: usize) -> Self {
        Self::new(n, 1, 1)
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// One layer of the patch classifier.
///
/// Convolutions zero-pad by `(k - 1) / 2` on each side, so a stride-1 convolution
/// with an odd kernel preserves spatial size. Max-pooling uses non-overlapping
/// windows and drops any remainder rows/columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv {
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
    },
    MaxPool {
        window: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Relu,
    Dropout {
        rate: f64,
    },
    Softmax,
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Softmax => "softmax",
        }
    }

    /// Output shape for `input`, or a description of why they do not compose.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, String> {
        match *self {
            LayerSpec::Conv { kernel_h, kernel_w, in_channels, out_channels, stride } => {
                if in_channels != input.channels {
                    return Err(format!("conv expects {in_channels} channels, got {}", input.channels));
                }
                if kernel_h == 0 || kernel_w == 0 || stride == 0 || out_channels == 0 {
                    return Err("conv dimensions must be positive".into());
                }
                let (ph, pw) = ((kernel_h - 1) / 2, (kernel_w - 1) / 2);
                if input.height + 2 * ph < kernel_h || input.width + 2 * pw < kernel_w {
                    return Err(format!("conv kernel larger than padded input {input}"));
                }
                Ok(Shape::new(
                    out_channels,
                    (input.height + 2 * ph - kernel_h) / stride + 1,
                    (input.width + 2 * pw - kernel_w) / stride + 1,
                ))
            }
            LayerSpec::MaxPool { window } => {
                if window == 0 || input.height < window || input.width < window {
                    return Err(format!("pool window {window} does not fit {input}"));
                }
                Ok(Shape::new(input.channels, input.height / window, input.width / window))
            }
            LayerSpec::Dense { inputs, outputs } => {
                if inputs != input.len() {
                    return Err(format!("dense expects {inputs} inputs, got {}", input.len()));
                }
                if outputs == 0 {
                    return Err("dense needs at least one output".into());
                }
                Ok(Shape::flat(outputs))
            }
            LayerSpec::Relu => Ok(input),
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(format!("dropout rate {rate} outside [0, 1)"));
                }
                Ok(input)
            }
            LayerSpec::Softmax => {
                if input.len() != 2 {
                    return Err(format!("softmax must see exactly 2 classes, got {}", input.len()));
                }
                Ok(Shape::flat(2))
            }
        }
    }

    /// `(weight count, bias count)` of parametric layers.
    pub fn param_counts(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv { kernel_h, kernel_w, in_channels, out_channels, .. } => {
                (out_channels * in_channels * kernel_h * kernel_w, out_channels)
            }
            LayerSpec::Dense { inputs, outputs } => (inputs * outputs, outputs),
            _ => (0, 0),
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv { kernel_h, kernel_w, in_channels, .. } => in_channels * kernel_h * kernel_w,
            LayerSpec::Dense { inputs, .. } => inputs,
            _ => 0,
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::Dense { .. })
    }
}

/// A layer with its resolved shapes and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    pub input: Shape,
    pub output: Shape,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

/// Per-layer state needed by the backward pass.
#[derive(Debug, Clone)]
pub(crate) enum Cache<T> {
    None,
    /// Input activations (conv, dense, relu).
    Input(Vec<T>),
    /// Flat input index of each pooled maximum.
    Argmax(Vec<usize>),
    /// Per-unit multiplier applied by dropout (0 or 1/(1-p)).
    Mask(Vec<T>),
    /// Softmax output.
    Probs(Vec<T>),
}

impl<T: Scalar> Layer<T> {
    /// Forward pass. `mask` supplies the per-unit multiplier for dropout layers;
    /// `None` means the deterministic pass (identity).
    pub(crate) fn forward(&self, x: &[T], mask: Option<&[T]>, keep_cache: bool) -> (Vec<T>, Cache<T>) {
        match self.spec {
            LayerSpec::Conv { kernel_h, kernel_w, in_channels, out_channels, stride } => {
                let out = conv_forward(
                    x,
                    self.input,
                    self.output,
                    &self.weights,
                    &self.biases,
                    (kernel_h, kernel_w, in_channels, out_channels, stride),
                );
                (out, if keep_cache { Cache::Input(x.to_vec()) } else { Cache::None })
            }
            LayerSpec::MaxPool { window } => {
                let (out, arg) = maxpool_forward(x, self.input, self.output, window);
                (out, if keep_cache { Cache::Argmax(arg) } else { Cache::None })
            }
            LayerSpec::Dense { inputs, outputs } => {
                let mut out = self.biases.clone();
                for (o, acc) in out.iter_mut().enumerate().take(outputs) {
                    let row = &self.weights[o * inputs..(o + 1) * inputs];
                    *acc = *acc + dot(row, x);
                }
                (out, if keep_cache { Cache::Input(x.to_vec()) } else { Cache::None })
            }
            LayerSpec::Relu => {
                let out = x.iter().map(|v| if *v > T::zero() { *v } else { T::zero() }).collect();
                (out, if keep_cache { Cache::Input(x.to_vec()) } else { Cache::None })
            }
            LayerSpec::Dropout { .. } => match mask {
                Some(m) => {
                    let out = x.iter().zip(m).map(|(v, k)| *v * *k).collect();
                    (out, if keep_cache { Cache::Mask(m.to_vec()) } else { Cache::None })
                }
                None => (x.to_vec(), Cache::None),
            },
            LayerSpec::Softmax => {
                let p = softmax(x);
                let cache = if keep_cache { Cache::Probs(p.clone()) } else { Cache::None };
                (p, cache)
            }
        }
    }

    /// Backward pass. Accumulates parameter gradients into `gw`/`gb` and returns
    /// the gradient with respect to the layer input. Softmax backward is the full
    /// Jacobian product; training short-circuits it through the cross-entropy.
    pub(crate) fn backward(&self, cache: &Cache<T>, dy: &[T], gw: &mut [T], gb: &mut [T], need_dx: bool) -> Vec<T> {
        match (self.spec, cache) {
            (LayerSpec::Conv { kernel_h, kernel_w, in_channels, out_channels, stride }, Cache::Input(x)) => conv_backward(
                x,
                dy,
                self.input,
                self.output,
                &self.weights,
                gw,
                gb,
                (kernel_h, kernel_w, in_channels, out_channels, stride),
                need_dx,
            ),
            (LayerSpec::MaxPool { .. }, Cache::Argmax(arg)) => {
                let mut dx = vec![T::zero(); self.input.len()];
                for (g, &i) in dy.iter().zip(arg) {
                    dx[i] = dx[i] + *g;
                }
                dx
            }
            (LayerSpec::Dense { inputs, outputs }, Cache::Input(x)) => {
                let mut dx = vec![T::zero(); if need_dx { inputs } else { 0 }];
                for o in 0..outputs {
                    let g = dy[o];
                    gb[o] = gb[o] + g;
                    if g == T::zero() {
                        continue;
                    }
                    let row = &self.weights[o * inputs..(o + 1) * inputs];
                    let grow = &mut gw[o * inputs..(o + 1) * inputs];
                    for (gwi, xi) in grow.iter_mut().zip(x) {
                        *gwi = *gwi + g * *xi;
                    }
                    if need_dx {
                        for (dxi, wi) in dx.iter_mut().zip(row) {
                            *dxi = *dxi + g * *wi;
                        }
                    }
                }
                dx
            }
            (LayerSpec::Relu, Cache::Input(x)) => {
                dy.iter().zip(x).map(|(g, v)| if *v > T::zero() { *g } else { T::zero() }).collect()
            }
            (LayerSpec::Dropout { .. }, Cache::Mask(m)) => dy.iter().zip(m).map(|(g, k)| *g * *k).collect(),
            (LayerSpec::Dropout { .. }, Cache::None) => dy.to_vec(),
            (LayerSpec::Softmax, Cache::Probs(p)) => {
                let s: T = dy.iter().zip(p).map(|(g, pi)| *g * *pi).sum();
                dy.iter().zip(p).map(|(g, pi)| *pi * (*g - s)).collect()
            }
            (spec, _) => panic!("backward through {} without its forward cache", spec.kind_name()),
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

/// Max-subtracted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|v| (*v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

type ConvDims = (usize, usize, usize, usize, usize);

/// Valid output columns `[lo, hi)` for kernel offset `k` so that the input index
/// `o * stride + k - pad` stays inside `[0, n)`.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, n_in: usize, n_out: usize) -> (usize, usize) {
    // o * stride + k >= pad  and  o * stride + k - pad < n_in
    let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
    let limit = n_in + pad; // o * stride + k < limit
    let hi = if limit > k { ((limit - k - 1) / stride + 1).min(n_out) } else { 0 };
    (lo, hi.max(lo))
}

fn conv_forward<T: Scalar>(x: &[T], inp: Shape, out: Shape, w: &[T], b: &[T], dims: ConvDims) -> Vec<T> {
    let (kh, kw, ic_n, oc_n, stride) = dims;
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let plane = out.height * out.width;
    let mut y = vec![T::zero(); out.len()];
    for oc in 0..oc_n {
        let yo = &mut y[oc * plane..(oc + 1) * plane];
        yo.iter_mut().for_each(|v| *v = b[oc]);
        for ic in 0..ic_n {
            let xi = &x[ic * inp.height * inp.width..(ic + 1) * inp.height * inp.width];
            for ky in 0..kh {
                let (oy_lo, oy_hi) = valid_range(ky, ph, stride, inp.height, out.height);
                for kx in 0..kw {
                    let wv = w[((oc * ic_n + ic) * kh + ky) * kw + kx];
                    let (ox_lo, ox_hi) = valid_range(kx, pw, stride, inp.width, out.width);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + ky - ph;
                        let xrow = &xi[iy * inp.width..(iy + 1) * inp.width];
                        let yrow = &mut yo[oy * out.width..(oy + 1) * out.width];
                        if stride == 1 {
                            let ix0 = ox_lo + kx - pw;
                            let n = ox_hi - ox_lo;
                            for (yv, xv) in yrow[ox_lo..ox_hi].iter_mut().zip(&xrow[ix0..ix0 + n]) {
                                *yv = *yv + wv * *xv;
                            }
                        } else {
                            #[allow(clippy::needless_range_loop)]
                            for ox in ox_lo..ox_hi {
                                let ix = ox * stride + kx - pw;
                                yrow[ox] = yrow[ox] + wv * xrow[ix];
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    x: &[T],
    dy: &[T],
    inp: Shape,
    out: Shape,
    w: &[T],
    gw: &mut [T],
    gb: &mut [T],
    dims: ConvDims,
    need_dx: bool,
) -> Vec<T> {
    let (kh, kw, ic_n, oc_n, stride) = dims;
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let plane = out.height * out.width;
    let iplane = inp.height * inp.width;
    let mut dx = vec![T::zero(); if need_dx { inp.len() } else { 0 }];
    for oc in 0..oc_n {
        let dyo = &dy[oc * plane..(oc + 1) * plane];
        gb[oc] = gb[oc] + dyo.iter().copied().sum();
        for ic in 0..ic_n {
            let xi = &x[ic * iplane..(ic + 1) * iplane];
            for ky in 0..kh {
                let (oy_lo, oy_hi) = valid_range(ky, ph, stride, inp.height, out.height);
                for kx in 0..kw {
                    let widx = ((oc * ic_n + ic) * kh + ky) * kw + kx;
                    let wv = w[widx];
                    let (ox_lo, ox_hi) = valid_range(kx, pw, stride, inp.width, out.width);
                    let mut acc = T::zero();
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + ky - ph;
                        let drow = &dyo[oy * out.width..(oy + 1) * out.width];
                        if stride == 1 {
                            let ix0 = ox_lo + kx - pw;
                            let n = ox_hi - ox_lo;
                            let xrow = &xi[iy * inp.width + ix0..iy * inp.width + ix0 + n];
                            acc = acc + dot(&drow[ox_lo..ox_hi], xrow);
                            if need_dx {
                                let base = ic * iplane + iy * inp.width + ix0;
                                for (dv, g) in dx[base..base + n].iter_mut().zip(&drow[ox_lo..ox_hi]) {
                                    *dv = *dv + wv * *g;
                                }
                            }
                        } else {
                            #[allow(clippy::needless_range_loop)]
                            for ox in ox_lo..ox_hi {
                                let ix = ox * stride + kx - pw;
                                acc = acc + drow[ox] * xi[iy * inp.width + ix];
                                if need_dx {
                                    let di = ic * iplane + iy * inp.width + ix;
                                    dx[di] = dx[di] + wv * drow[ox];
                                }
                            }
                        }
                    }
                    gw[widx] = gw[widx] + acc;
                }
            }
        }
    }
    dx
}

fn maxpool_forward<T: Scalar>(x: &[T], inp: Shape, out: Shape, window: usize) -> (Vec<T>, Vec<usize>) {
    let mut y = Vec::with_capacity(out.len());
    let mut arg = Vec::with_capacity(out.len());
    for c in 0..out.channels {
        for oy in 0..out.height {
            for ox in 0..out.width {
                let first = (c * inp.height + oy * window) * inp.width + ox * window;
                let mut best = x[first];
                let mut best_i = first;
                for dy in 0..window {
                    for dx in 0..window {
                        let i = (c * inp.height + oy * window + dy) * inp.width + ox * window + dx;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                y.push(best);
                arg.push(best_i);
            }
        }
    }
    (y, arg)
}
