//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use midecon::neuralnet::{Label, LayerSpec, Masks, NetworkParams, Shape};
use midecon::rng::SplitMix64;

pub fn mean_oracle(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

/// Mean absolute difference over unordered distinct pairs, as a double loop.
pub fn pairwise_oracle(v: &[f64]) -> f64 {
    let m = v.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            s += (v[i] - v[j]).abs();
        }
    }
    2.0 * s / (m * (m - 1)) as f64
}

pub fn variance_oracle(v: &[f64]) -> f64 {
    let mu = mean_oracle(v);
    let mut s = 0.0;
    for x in v {
        s += (x - mu) * (x - mu);
    }
    s / v.len() as f64
}

/// Mean squared difference over all ordered pairs, including i == j.
pub fn ordered_pair_sq_oracle(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in v {
        for b in v {
            s += (a - b) * (a - b);
        }
    }
    s / (v.len() * v.len()) as f64
}

/// Threshold rule by enumeration: every impostor score plus a value above all
/// of them, smallest one whose impostor acceptance rate meets the target.
pub fn threshold_oracle(genuine: &[f64], impostor: &[f64], fmr: f64) -> (f64, f64) {
    let max = impostor.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cands: Vec<f64> = impostor.to_vec();
    cands.push(max.next_up());
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for t in cands {
        let accepted = impostor.iter().filter(|&&s| s >= t).count();
        if accepted as f64 / impostor.len() as f64 <= fmr {
            let rejected = genuine.iter().filter(|&&s| s < t).count();
            return (t, rejected as f64 / genuine.len() as f64);
        }
    }
    unreachable!("the value above every impostor always qualifies")
}

/// Lowest FNMR over every admissible candidate of the threshold rule
/// (impostor scores and the value above all of them), by exhaustive scan.
pub fn best_fnmr_oracle(genuine: &[f64], impostor: &[f64], fmr: f64) -> f64 {
    let max = impostor.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = 1.0f64;
    for &t in impostor.iter().chain(std::iter::once(&max.next_up())) {
        let fm = impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64;
        if fm <= fmr {
            best = best.min(genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64);
        }
    }
    best
}

/// Small network exercising every layer kind, with shapes drawn from `seed`.
pub fn random_network(seed: u64) -> NetworkParams<f64> {
    let mut g = SplitMix64::new(seed);
    let mut pick = |n: u64| (g.next_u64() % n) as usize;
    let input = Shape::new(1 + pick(2), 7 + pick(3), 7 + pick(3));
    let k1 = [1, 3, 5][pick(3)];
    let c1 = 2 + pick(2);
    let k2 = [2, 3][pick(2)];
    let stride2 = 1 + pick(2);
    let c2 = 2 + pick(3);
    let hidden = 4 + pick(6);
    let mut specs = vec![
        LayerSpec::Conv { kernel_h: k1, kernel_w: k1, in_channels: input.channels, out_channels: c1, stride: 1 },
        LayerSpec::Relu,
        LayerSpec::MaxPool { window: 2 },
        LayerSpec::Conv { kernel_h: k2, kernel_w: 3, in_channels: c1, out_channels: c2, stride: stride2 },
        LayerSpec::Relu,
    ];
    let mut shape = input;
    for s in &specs {
        shape = s.output_shape(shape).unwrap();
    }
    specs.extend([
        LayerSpec::Dense { inputs: shape.len(), outputs: hidden },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.3 },
        LayerSpec::Dense { inputs: hidden, outputs: 2 },
        LayerSpec::Softmax,
    ]);
    let mut net = NetworkParams::he_uniform(input, &specs, seed ^ 0x5eed).unwrap();
    // Non-zero biases so ReLU and pooling see generic inputs.
    for l in net.layers_mut() {
        for b in l.biases.iter_mut() {
            *b = g.next_f64() * 0.2 - 0.1;
        }
    }
    net
}

/// Result of a finite-difference check on one network.
#[derive(Debug, Clone, Default)]
pub struct GradCheck {
    /// Largest relative error per layer kind. Parametric layers report their
    /// own parameters; the other kinds report every parameter whose gradient
    /// flows back through them.
    pub worst: Vec<(&'static str, f64)>,
    pub checked: usize,
}

impl GradCheck {
    fn record(&mut self, kind: &'static str, err: f64) {
        match self.worst.iter_mut().find(|(k, _)| *k == kind) {
            Some((_, w)) => *w = w.max(err),
            None => self.worst.push((kind, err)),
        }
    }

    pub fn max(&self) -> f64 {
        self.worst.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

/// Denominator floor: below it the comparison is effectively absolute, which
/// keeps gradients that are zero up to rounding from dominating.
pub const REL_FLOOR: f64 = 1e-4;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Central differences with step `h` against the analytic gradient, on every
/// parameter (or every `stride`-th one).
pub fn grad_check(net: &NetworkParams<f64>, seed: u64, h: f64, stride: usize) -> GradCheck {
    let mut g = SplitMix64::new(seed);
    let x: Vec<f64> = (0..net.input_shape().len()).map(|_| g.next_f64()).collect();
    let label = if g.next_u64().is_multiple_of(2) { Label::Minutia } else { Label::NonMinutia };
    let masks = Masks::Fixed(
        net.layers()
            .iter()
            .map(|l| match l.spec {
                LayerSpec::Dropout { rate } => Some(
                    (0..l.input.len())
                        .map(|_| if g.next_f64() < rate { 0.0 } else { 1.0 / (1.0 - rate) })
                        .collect(),
                ),
                _ => None,
            })
            .collect(),
    );
    let (_, _, grad) = net.loss_and_gradient(&x, label, &masks, 0).unwrap();
    let loss = |n: &NetworkParams<f64>| n.loss_and_gradient(&x, label, &masks, n.layers().len()).unwrap().0;

    let mut out = GradCheck::default();
    let mut work = net.clone();
    let mut counter = 0usize;
    for li in 0..net.layers().len() {
        let downstream: Vec<&'static str> = net.layers()[li..].iter().map(|l| l.spec.kind_name()).collect();
        for which in 0..2 {
            let len = if which == 0 { net.layers()[li].weights.len() } else { net.layers()[li].biases.len() };
            for j in 0..len {
                counter += 1;
                if !counter.is_multiple_of(stride) {
                    continue;
                }
                let set = |n: &mut NetworkParams<f64>, v: f64| {
                    let l = &mut n.layers_mut()[li];
                    if which == 0 {
                        l.weights[j] = v
                    } else {
                        l.biases[j] = v
                    }
                };
                let orig = if which == 0 { net.layers()[li].weights[j] } else { net.layers()[li].biases[j] };
                set(&mut work, orig + h);
                let up = loss(&work);
                set(&mut work, orig - h);
                let down = loss(&work);
                set(&mut work, orig);
                let numeric = (up - down) / (2.0 * h);
                let analytic = if which == 0 { grad.weights[li][j] } else { grad.biases[li][j] };
                let err = rel_err(analytic, numeric);
                for kind in &downstream {
                    out.record(kind, err);
                }
                out.checked += 1;
            }
        }
    }
    out
}
