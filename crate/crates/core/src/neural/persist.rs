//! Plain-text model files.
//!
//! ```text
//! xai-chest-mlp 1
//! layer_dims 104 15 15 15 104
//! hidden_activation relu
//! output_activation identity
//! weights 0
//! <one line per output neuron, `in` space-separated values>
//! biases 0
//! <one line, `out` space-separated values>
//! weights 1
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip `f64` formatting, so a
//! loaded model is bit-identical to the saved one.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::{Activation, Mlp, Params};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "xai-chest-mlp";

pub fn model_to_string(model: &Mlp) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {MODEL_FORMAT_VERSION}");
    let dims: Vec<String> = model.layer_dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(s, "layer_dims {}", dims.join(" "));
    let _ = writeln!(s, "hidden_activation {}", model.hidden_activation.name());
    let _ = writeln!(s, "output_activation {}", model.output_activation.name());
    for l in 0..model.num_layers() {
        let fan_in = model.layer_dims[l];
        let _ = writeln!(s, "weights {l}");
        for row in model.params.weights[l].chunks(fan_in) {
            write_row(&mut s, row);
        }
        let _ = writeln!(s, "biases {l}");
        write_row(&mut s, &model.params.biases[l]);
    }
    s
}

fn write_row(s: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, field: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(parse_err(self.last + 1, field, "unexpected end of file")),
        }
    }
}

fn parse_err(line: usize, field: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn keyed<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, &'a str)> {
    let l = lines.next(key)?;
    let line = lines.last;
    match l.split_once(' ') {
        Some((k, rest)) if k == key => Ok((line, rest.trim())),
        _ => Err(parse_err(line, key, format!("expected `{key} ...`, found `{l}`"))),
    }
}

fn parse_values(line: usize, field: &str, text: &str, expected: usize) -> Result<Vec<f64>> {
    let values = text
        .split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            tok.parse::<f64>()
                .map_err(|e| parse_err(line, field, format!("value {i} `{tok}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(parse_err(line, field, format!("expected {expected} values, found {}", values.len())));
    }
    Ok(values)
}

pub fn model_from_str(text: &str) -> Result<Mlp> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, version) = keyed(&mut lines, MAGIC)?;
    let found: u32 = version
        .parse()
        .map_err(|_| parse_err(line, "version", format!("`{version}` is not an integer")))?;
    if found != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            found,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let (line, dims_text) = keyed(&mut lines, "layer_dims")?;
    let layer_dims = dims_text
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(line, "layer_dims", format!("`{t}` is not a dimension"))))
        .collect::<Result<Vec<usize>>>()?;
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(parse_err(line, "layer_dims", "need at least two positive dims"));
    }
    let mut activation = |key: &str| -> Result<Activation> {
        let (line, name) = keyed(&mut lines, key)?;
        Activation::parse(name).ok_or_else(|| parse_err(line, key, format!("unknown activation `{name}`")))
    };
    let hidden_activation = activation("hidden_activation")?;
    let output_activation = activation("output_activation")?;

    let mut params = Params::zeros(&layer_dims);
    for l in 0..layer_dims.len() - 1 {
        let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
        let (line, idx) = keyed(&mut lines, "weights")?;
        if idx != l.to_string() {
            return Err(parse_err(line, "weights", format!("expected layer {l}, found `{idx}`")));
        }
        let field = format!("weights[{l}]");
        let mut w = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_out {
            let row = lines.next(&field)?;
            w.extend(parse_values(lines.last, &field, row, fan_in)?);
        }
        params.weights[l] = w;
        let (line, idx) = keyed(&mut lines, "biases")?;
        if idx != l.to_string() {
            return Err(parse_err(line, "biases", format!("expected layer {l}, found `{idx}`")));
        }
        let field = format!("biases[{l}]");
        let row = lines.next(&field)?;
        params.biases[l] = parse_values(lines.last, &field, row, fan_out)?;
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(i + 1, "trailing", format!("unexpected content `{extra}`")));
    }
    let model = Mlp {
        layer_dims,
        params,
        hidden_activation,
        output_activation,
    };
    model
        .validate()
        .map_err(|e| parse_err(lines.last, "activations", e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &Mlp, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Mlp> {
    model_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn random_model() -> Mlp {
        let mut m = Mlp::init(&[6, 5, 4, 3], Activation::Sigmoid, &mut rng_from_seed(17)).unwrap();
        for (i, b) in m.params.biases.iter_mut().flatten().enumerate() {
            *b = (i as f64 * 0.1).sin() / 3.0;
        }
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = random_model();
        let back = model_from_str(&model_to_string(&m)).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.params.iter().zip(m.params.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let text = model_to_string(&random_model());
        let cut: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        match model_from_str(&cut) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_value_names_line_and_field() {
        let text = model_to_string(&random_model()).replacen("biases 0\n", "biases 0\nzzz ", 1);
        match model_from_str(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "biases[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let text = model_to_string(&random_model()).replacen("xai-chest-mlp 1", "xai-chest-mlp 7", 1);
        assert!(matches!(model_from_str(&text), Err(Error::Version { found: 7, expected: 1 })));
    }
}
