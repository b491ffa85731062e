//! Checkpoint container.
//!
//! ```text
//! ahc-checkpoint 1
//! meta <key>=<value>            (any number, order preserved)
//! net <name> widths=4,256,1 activations=relu,tanh
//! blob <name> len=<n>
//! end
//! <binary payload>
//! ```
//!
//! The payload holds, in header order, each network's parameters (per
//! layer: weights row-major, then biases) followed by each blob, all as
//! little-endian `f64`.

use std::io::{BufRead, Write};

use super::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "ahc-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub nets: Vec<(String, Mlp)>,
    pub blobs: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn net(&self, name: &str) -> Option<&Mlp> {
        self.nets.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn blob(&self, name: &str) -> Option<&[f64]> {
        self.blobs.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}")?;
        for (k, v) in &self.meta {
            check_token(k)?;
            if v.contains('\n') {
                return Err(Error::parse(format!("meta value for `{k}` contains a newline")));
            }
            writeln!(w, "meta {k}={v}")?;
        }
        for (name, net) in &self.nets {
            check_token(name)?;
            let widths: Vec<String> = net.widths().iter().map(|w| w.to_string()).collect();
            let acts: Vec<&str> = net.activations().iter().map(|a| a.name()).collect();
            writeln!(w, "net {name} widths={} activations={}", widths.join(","), acts.join(","))?;
        }
        for (name, blob) in &self.blobs {
            check_token(name)?;
            writeln!(w, "blob {name} len={}", blob.len())?;
        }
        writeln!(w, "end")?;
        for (_, net) in &self.nets {
            for p in net.params() {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        for (_, blob) in &self.blobs {
            for p in blob {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("in-memory write");
        buf
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Checkpoint> {
        let mut line = String::new();
        let mut next_line = |r: &mut R| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::parse("checkpoint header ended before `end`"));
            }
            Ok(line.trim_end_matches('\n').to_string())
        };
        let first = next_line(&mut r)?;
        let expected = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        if first != expected {
            return Err(Error::parse(format!("not a checkpoint (expected `{expected}`, got `{first}`)")));
        }

        let mut meta = Vec::new();
        let mut net_shapes: Vec<(String, Vec<usize>, Vec<Activation>)> = Vec::new();
        let mut blob_lens: Vec<(String, usize)> = Vec::new();
        loop {
            let l = next_line(&mut r)?;
            if l == "end" {
                break;
            }
            let (kind, rest) = l.split_once(' ').ok_or_else(|| Error::parse(format!("bad header line `{l}`")))?;
            match kind {
                "meta" => {
                    let (k, v) = rest
                        .split_once('=')
                        .ok_or_else(|| Error::parse(format!("bad meta line `{l}`")))?;
                    meta.push((k.to_string(), v.to_string()));
                }
                "net" => {
                    let mut parts = rest.split(' ');
                    let name = parts.next().unwrap_or_default().to_string();
                    let widths = field(parts.next(), "widths")?
                        .split(',')
                        .map(|s| s.parse::<usize>().map_err(|_| Error::parse(format!("bad width in `{l}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    let acts = field(parts.next(), "activations")?
                        .split(',')
                        .map(Activation::parse)
                        .collect::<Result<Vec<_>>>()?;
                    if widths.len() != acts.len() + 1 {
                        return Err(Error::parse(format!("widths/activations disagree in `{l}`")));
                    }
                    net_shapes.push((name, widths, acts));
                }
                "blob" => {
                    let mut parts = rest.split(' ');
                    let name = parts.next().unwrap_or_default().to_string();
                    let len = field(parts.next(), "len")?
                        .parse::<usize>()
                        .map_err(|_| Error::parse(format!("bad blob length in `{l}`")))?;
                    blob_lens.push((name, len));
                }
                _ => return Err(Error::parse(format!("unknown header line `{l}`"))),
            }
        }

        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; n * 8];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::parse("checkpoint payload is truncated"))?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let mut nets = Vec::with_capacity(net_shapes.len());
        for (name, widths, acts) in net_shapes {
            let mut layers = Vec::with_capacity(acts.len());
            for (i, act) in acts.into_iter().enumerate() {
                let (n_in, n_out) = (widths[i], widths[i + 1]);
                let w = read_f64s(n_in * n_out)?;
                let b = read_f64s(n_out)?;
                layers.push(Dense::new(n_in, n_out, w, b, act)?);
            }
            nets.push((name, Mlp::new(layers)?));
        }
        let mut blobs = Vec::with_capacity(blob_lens.len());
        for (name, len) in blob_lens {
            blobs.push((name, read_f64s(len)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::parse("trailing bytes after checkpoint payload"));
        }
        Ok(Checkpoint { meta, nets, blobs })
    }
}

fn field<'a>(part: Option<&'a str>, key: &str) -> Result<&'a str> {
    part.and_then(|p| p.strip_prefix(key).and_then(|p| p.strip_prefix('=')))
        .ok_or_else(|| Error::parse(format!("checkpoint header is missing `{key}=`")))
}

fn check_token(s: &str) -> Result<()> {
    if s.is_empty() || s.contains([' ', '\n', '=']) {
        return Err(Error::parse(format!("`{s}` cannot be used as a checkpoint name")));
    }
    Ok(())
}
