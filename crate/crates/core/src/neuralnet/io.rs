use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::layer::{Layer, LayerSpec, Shape};
use super::network::NetworkParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const HEADER: &str = "MIDECON-NET 1";

/// Canonical text form: header, `input c h w`, one declaration line per layer,
/// then for each parametric layer a line of weights (row-major) followed by a
/// line of biases. Numbers use the shortest exact decimal representation, so
/// saving a loaded model reproduces the file byte for byte.
pub fn write_model<T: Scalar>(net: &NetworkParams<T>) -> String {
    let mut s = String::new();
    let i = net.input_shape();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "input {} {} {}", i.channels, i.height, i.width);
    for l in net.layers() {
        let _ = match l.spec {
            LayerSpec::Conv { kernel_h, kernel_w, in_channels, out_channels, stride } => {
                writeln!(s, "conv {kernel_h} {kernel_w} {in_channels} {out_channels} {stride}")
            }
            LayerSpec::MaxPool { window } => writeln!(s, "maxpool {window}"),
            LayerSpec::Dense { inputs, outputs } => writeln!(s, "dense {inputs} {outputs}"),
            LayerSpec::Relu => writeln!(s, "relu"),
            LayerSpec::Dropout { rate } => writeln!(s, "dropout {rate}"),
            LayerSpec::Softmax => writeln!(s, "softmax"),
        };
    }
    for l in net.layers().iter().filter(|l| l.spec.is_parametric()) {
        for block in [&l.weights, &l.biases] {
            let mut first = true;
            for v in block.iter() {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{:e}", v.as_f64());
            }
            s.push('\n');
        }
    }
    s
}

pub fn save_model<T: Scalar>(net: &NetworkParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<NetworkParams<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

pub fn parse_model<T: Scalar>(text: &str, origin: impl AsRef<Path>) -> Result<NetworkParams<T>> {
    let origin = origin.as_ref();
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);
    let lines: Vec<&str> = text.lines().collect();
    match lines.first() {
        Some(&HEADER) => {}
        Some(other) if other.starts_with("MIDECON-NET") => {
            return Err(Error::Format(format!("{}: unsupported model version {other:?}", origin.display())))
        }
        _ => return Err(err(1, format!("expected {HEADER:?}"))),
    }
    let dims = |n: usize, toks: &[&str], want: usize| -> Result<Vec<usize>> {
        if toks.len() != want {
            return Err(err(n, format!("expected {want} integers")));
        }
        toks.iter().map(|t| t.parse::<usize>().map_err(|_| err(n, format!("bad integer {t:?}")))).collect()
    };

    let input_toks: Vec<&str> = lines.get(1).map(|l| l.split_whitespace().collect()).unwrap_or_default();
    if input_toks.first() != Some(&"input") {
        return Err(err(2, "expected `input c h w`".into()));
    }
    let d = dims(2, &input_toks[1..], 3)?;
    let input = Shape::new(d[0], d[1], d[2]);

    let mut specs = Vec::new();
    let mut idx = 2;
    while idx < lines.len() {
        let toks: Vec<&str> = lines[idx].split_whitespace().collect();
        let n = idx + 1;
        let spec = match toks.first().copied() {
            Some("conv") => {
                let d = dims(n, &toks[1..], 5)?;
                LayerSpec::Conv { kernel_h: d[0], kernel_w: d[1], in_channels: d[2], out_channels: d[3], stride: d[4] }
            }
            Some("maxpool") => LayerSpec::MaxPool { window: dims(n, &toks[1..], 1)?[0] },
            Some("dense") => {
                let d = dims(n, &toks[1..], 2)?;
                LayerSpec::Dense { inputs: d[0], outputs: d[1] }
            }
            Some("relu") => LayerSpec::Relu,
            Some("softmax") => LayerSpec::Softmax,
            Some("dropout") => {
                let rate = toks.get(1).and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| err(n, "bad dropout rate".into()))?;
                LayerSpec::Dropout { rate }
            }
            _ => break,
        };
        specs.push(spec);
        idx += 1;
    }

    let mut shape = input;
    let mut layers = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let out = spec.output_shape(shape).map_err(|m| Error::Config(format!("layer {i}: {m}")))?;
        layers.push(Layer { spec: *spec, input: shape, output: out, weights: Vec::new(), biases: Vec::new() });
        shape = out;
    }

    let mut blocks = lines[idx..].iter().enumerate().filter(|(_, l)| !l.trim().is_empty());
    for layer in layers.iter_mut().filter(|l| l.spec.is_parametric()) {
        let (nw, nb) = layer.spec.param_counts();
        for (target, count) in [(&mut layer.weights, nw), (&mut layer.biases, nb)] {
            let (off, line) = blocks
                .next()
                .ok_or_else(|| Error::Config(format!("{}: missing parameter block", origin.display())))?;
            let n = idx + off + 1;
            let values: Vec<T> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map(T::lit).map_err(|_| err(n, format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if values.len() != count {
                return Err(Error::Config(format!(
                    "{}:{n}: expected {count} values for a {} layer, found {}",
                    origin.display(),
                    layer.spec.kind_name(),
                    values.len()
                )));
            }
            *target = values;
        }
    }
    if let Some((off, _)) = blocks.next() {
        return Err(Error::Config(format!("{}:{}: trailing parameter data", origin.display(), idx + off + 1)));
    }
    NetworkParams::from_parts(input, layers)
}
