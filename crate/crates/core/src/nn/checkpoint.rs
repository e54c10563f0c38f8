//! Text checkpoint format for [`DenseNet`].
//!
//! ```text
//! ris-sim-net 1
//! aux <layer> <width>            (or: aux none)
//! layers <count>
//! layer <fan_in> <fan_out> <tanh|linear> <bn|plain>
//! weight <hex> <hex> ...          row-major (fan_in × fan_out)
//! bias <hex> ...
//! gamma ... / beta ... / running_mean ... / running_var ...   (bn layers only)
//! ```
//!
//! Every value is the 16-digit hexadecimal of its IEEE-754 bit pattern, so a
//! save/load cycle is bitwise exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, BatchNorm, DenseNet, Layer};
use crate::error::{Error, Result};

const MAGIC: &str = "ris-sim-net 1";

fn write_values<W: Write>(out: &mut W, tag: &str, values: &[f64]) -> std::io::Result<()> {
    write!(out, "{tag}")?;
    for v in values {
        write!(out, " {:016x}", v.to_bits())?;
    }
    writeln!(out)
}

pub fn write_net<W: Write>(net: &DenseNet, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    match net.aux() {
        Some((l, d)) => writeln!(out, "aux {l} {d}")?,
        None => writeln!(out, "aux none")?,
    }
    writeln!(out, "layers {}", net.layers().len())?;
    for layer in net.layers() {
        let act = match layer.activation {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        };
        let bn = if layer.norm.is_some() { "bn" } else { "plain" };
        writeln!(out, "layer {} {} {act} {bn}", layer.fan_in(), layer.fan_out())?;
        write_values(out, "weight", layer.weight.as_slice().expect("standard layout"))?;
        write_values(out, "bias", layer.bias.as_slice().expect("standard layout"))?;
        if let Some(norm) = &layer.norm {
            write_values(out, "gamma", norm.gamma.as_slice().expect("standard layout"))?;
            write_values(out, "beta", norm.beta.as_slice().expect("standard layout"))?;
            write_values(out, "running_mean", norm.running_mean.as_slice().expect("standard layout"))?;
            write_values(out, "running_var", norm.running_var.as_slice().expect("standard layout"))?;
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::Checkpoint(format!("line {}: {e}", self.line_no))),
            None => Err(Error::Checkpoint(format!("unexpected end of file at line {}", self.line_no))),
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Checkpoint(format!("line {}: {msg}", self.line_no))
    }

    fn values(&mut self, tag: &str, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.err(format!("expected `{tag}`")));
        }
        let values = parts
            .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| self.err(e))?;
        if values.len() != expected {
            return Err(self.err(format!("`{tag}` has {} values, expected {expected}", values.len())));
        }
        Ok(values)
    }

    fn vector(&mut self, tag: &str, n: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.values(tag, n)?))
    }
}

fn parse_usize(s: Option<&str>) -> Option<usize> {
    s.and_then(|v| v.parse().ok())
}

pub fn read_net<R: BufRead>(input: R) -> Result<DenseNet> {
    let mut lines = Lines {
        inner: input.lines(),
        line_no: 0,
    };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err("missing header"));
    }
    let aux_line = lines.next_line()?;
    let mut parts = aux_line.split_ascii_whitespace();
    if parts.next() != Some("aux") {
        return Err(lines.err("expected `aux`"));
    }
    let aux = match parts.next() {
        Some("none") => None,
        first => {
            let l = parse_usize(first).ok_or_else(|| lines.err("bad aux layer"))?;
            let d = parse_usize(parts.next()).ok_or_else(|| lines.err("bad aux width"))?;
            Some((l, d))
        }
    };
    let count_line = lines.next_line()?;
    let mut parts = count_line.split_ascii_whitespace();
    let count = match (parts.next(), parse_usize(parts.next())) {
        (Some("layers"), Some(c)) => c,
        _ => return Err(lines.err("expected `layers <count>`")),
    };

    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let header = lines.next_line()?;
        let p: Vec<&str> = header.split_ascii_whitespace().collect();
        if p.len() != 5 || p[0] != "layer" {
            return Err(lines.err("expected `layer <in> <out> <act> <norm>`"));
        }
        let fan_in = parse_usize(Some(p[1])).ok_or_else(|| lines.err("bad fan-in"))?;
        let fan_out = parse_usize(Some(p[2])).ok_or_else(|| lines.err("bad fan-out"))?;
        let activation = match p[3] {
            "tanh" => Activation::Tanh,
            "linear" => Activation::Linear,
            other => return Err(lines.err(format!("unknown activation `{other}`"))),
        };
        let has_norm = match p[4] {
            "bn" => true,
            "plain" => false,
            other => return Err(lines.err(format!("unknown norm flag `{other}`"))),
        };
        let weight = Array2::from_shape_vec((fan_in, fan_out), lines.values("weight", fan_in * fan_out)?)
            .map_err(|e| lines.err(e))?;
        let bias = lines.vector("bias", fan_out)?;
        let norm = if has_norm {
            Some(BatchNorm {
                gamma: lines.vector("gamma", fan_out)?,
                beta: lines.vector("beta", fan_out)?,
                running_mean: lines.vector("running_mean", fan_out)?,
                running_var: lines.vector("running_var", fan_out)?,
            })
        } else {
            None
        };
        layers.push(Layer {
            weight,
            bias,
            norm,
            activation,
        });
    }
    DenseNet::from_layers(layers, aux)
}

pub fn save_net(net: &DenseNet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_net(net, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_net(path: &Path) -> Result<DenseNet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_net(BufReader::new(file))
}
