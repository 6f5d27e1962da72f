//! Versioned plain-text model files. Floats use Rust's shortest
//! round-trip formatting, so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use super::{GazeRegressor, Kernel, Standardizer, SvrModel};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSet};

const MODEL_MAGIC: &str = "eyegaze-svr 1";
const REGRESSOR_MAGIC: &str = "eyegaze-regressor 1";

pub(super) fn write_model(m: &SvrModel) -> String {
    let mut out = String::new();
    write_model_into(m, &mut out);
    out
}

fn write_model_into(m: &SvrModel, out: &mut String) {
    writeln!(out, "{MODEL_MAGIC}").unwrap();
    match m.kernel {
        Kernel::Linear => writeln!(out, "kernel linear").unwrap(),
        Kernel::Rbf { gamma } => writeln!(out, "kernel rbf {gamma}").unwrap(),
    }
    writeln!(out, "c {}", m.c).unwrap();
    writeln!(out, "epsilon {}", m.epsilon).unwrap();
    writeln!(out, "dim {}", m.dim).unwrap();
    writeln!(out, "bias {}", m.bias).unwrap();
    writeln!(out, "mean").unwrap();
    m.standardizer.mean.iter().for_each(|v| writeln!(out, "{v}").unwrap());
    writeln!(out, "std").unwrap();
    m.standardizer.std.iter().for_each(|v| writeln!(out, "{v}").unwrap());
    writeln!(out, "coefficients {}", m.coef.len()).unwrap();
    m.coef.iter().for_each(|v| writeln!(out, "{v}").unwrap());
    writeln!(out, "vectors {}", m.support.len()).unwrap();
    m.support.iter().flatten().for_each(|v| writeln!(out, "{v}").unwrap());
    writeln!(out, "end").unwrap();
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end())
            }
            None => Err(self.err("unexpected end of model file")),
        }
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let l = self.next_line()?;
        if l == want {
            Ok(())
        } else {
            Err(self.err(format!("expected `{want}`, found `{l}`")))
        }
    }

    /// Reads `key value` and returns `value`.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected `{key} <value>`, found `{l}`"))),
        }
    }

    fn keyed_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        self.parse(v)
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn float(&mut self) -> Result<f64> {
        let l = self.next_line()?;
        self.parse(l)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.float()).collect()
    }
}

fn read_model_from(lines: &mut Lines<'_>) -> Result<SvrModel> {
    lines.expect(MODEL_MAGIC)?;
    let kernel_spec = lines.keyed("kernel")?;
    let kernel = match kernel_spec.split_once(' ') {
        None if kernel_spec == "linear" => Kernel::Linear,
        Some(("rbf", g)) => Kernel::Rbf { gamma: lines.parse(g)? },
        _ => return Err(lines.err(format!("unknown kernel `{kernel_spec}`"))),
    };
    let c = lines.keyed_parse("c")?;
    let epsilon = lines.keyed_parse("epsilon")?;
    let dim: usize = lines.keyed_parse("dim")?;
    let bias = lines.keyed_parse("bias")?;
    lines.expect("mean")?;
    let mean = lines.floats(dim)?;
    lines.expect("std")?;
    let std = lines.floats(dim)?;
    let n_coef: usize = lines.keyed_parse("coefficients")?;
    let coef = lines.floats(n_coef)?;
    let n_vec: usize = lines.keyed_parse("vectors")?;
    if n_vec != n_coef {
        return Err(lines.err("vector count does not match coefficient count"));
    }
    let support = (0..n_vec).map(|_| lines.floats(dim)).collect::<Result<Vec<_>>>()?;
    lines.expect("end")?;
    Ok(SvrModel {
        kernel,
        c,
        epsilon,
        dim,
        standardizer: Standardizer { mean, std },
        support,
        coef,
        bias,
    })
}

pub(super) fn read_model(text: &str) -> Result<SvrModel> {
    read_model_from(&mut Lines::new(text))
}

pub(super) fn write_regressor(r: &GazeRegressor) -> String {
    let mut out = String::new();
    writeln!(out, "{REGRESSOR_MAGIC}").unwrap();
    writeln!(out, "features {}", r.features.set).unwrap();
    writeln!(out, "rotation_normalize {}", r.features.rotation_normalize).unwrap();
    writeln!(out, "[pitch]").unwrap();
    write_model_into(&r.pitch, &mut out);
    writeln!(out, "[yaw]").unwrap();
    write_model_into(&r.yaw, &mut out);
    out
}

pub(super) fn read_regressor(text: &str) -> Result<GazeRegressor> {
    let mut lines = Lines::new(text);
    lines.expect(REGRESSOR_MAGIC)?;
    let set: FeatureSet = lines.keyed("features")?.parse()?;
    let rotation_normalize = lines.keyed_parse("rotation_normalize")?;
    lines.expect("[pitch]")?;
    let pitch = read_model_from(&mut lines)?;
    lines.expect("[yaw]")?;
    let yaw = read_model_from(&mut lines)?;
    if pitch.dim != set.dim() || yaw.dim != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: pitch.dim,
        });
    }
    Ok(GazeRegressor {
        features: FeatureConfig { set, rotation_normalize },
        pitch,
        yaw,
    })
}
