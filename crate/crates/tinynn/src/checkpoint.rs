//! Checkpoint files: a short textual header followed by raw parameters.
//!
//! ```text
//! lantern-checkpoint 1
//! seed=7
//! step=204800
//! model name=policy head=softmax sizes=95,64,64,12 params=11020
//! model name=value head=linear sizes=95,64,64,1 params=10369
//! end
//! <little-endian f64 parameters of each model, in header order>
//! ```

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::mlp::{Head, Mlp};

const MAGIC: &str = "lantern-checkpoint 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint header: {0}")]
    Header(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub step: u64,
    pub models: Vec<(String, Mlp)>,
}

impl Checkpoint {
    pub fn model(&self, name: &str) -> Option<&Mlp> {
        self.models.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "seed={}", self.seed)?;
        writeln!(w, "step={}", self.step)?;
        for (name, m) in &self.models {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(CheckpointError::Header(format!("invalid model name {name:?}")));
            }
            let sizes: Vec<String> = m.sizes().iter().map(|s| s.to_string()).collect();
            writeln!(
                w,
                "model name={} head={} sizes={} params={}",
                name,
                m.head().name(),
                sizes.join(","),
                m.num_params()
            )?;
        }
        writeln!(w, "end")?;
        for (_, m) in &self.models {
            let mut buf = Vec::with_capacity(m.num_params() * 8);
            for p in m.params() {
                buf.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self, CheckpointError> {
        let mut line = String::new();
        let mut next_line = |r: &mut R| -> Result<String, CheckpointError> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(CheckpointError::Header("unexpected end of header".into()));
            }
            Ok(line.trim_end_matches('\n').to_string())
        };
        if next_line(&mut r)? != MAGIC {
            return Err(CheckpointError::Header("missing magic line".into()));
        }
        let seed = parse_kv(&next_line(&mut r)?, "seed")?;
        let step = parse_kv(&next_line(&mut r)?, "step")?;
        let mut specs = Vec::new();
        loop {
            let l = next_line(&mut r)?;
            if l == "end" {
                break;
            }
            specs.push(parse_model_line(&l)?);
        }
        let mut models = Vec::with_capacity(specs.len());
        for (name, head, sizes, count) in specs {
            let mut bytes = vec![0u8; count * 8];
            r.read_exact(&mut bytes)?;
            let params: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            let expected = Mlp::zeros(&sizes, head).num_params();
            if expected != count {
                return Err(CheckpointError::Header(format!(
                    "model {name}: sizes imply {expected} params, header says {count}"
                )));
            }
            models.push((name, Mlp::from_params(&sizes, head, params)));
        }
        Ok(Self { seed, step, models })
    }
}

fn parse_kv(line: &str, key: &str) -> Result<u64, CheckpointError> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CheckpointError::Header(format!("expected `{key}=<int>`, got {line:?}")))
}

fn parse_model_line(line: &str) -> Result<(String, Head, Vec<usize>, usize), CheckpointError> {
    let bad = || CheckpointError::Header(format!("bad model line {line:?}"));
    let rest = line.strip_prefix("model ").ok_or_else(bad)?;
    let (mut name, mut head, mut sizes, mut params) = (None, None, None, None);
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(bad)?;
        match k {
            "name" => name = Some(v.to_string()),
            "head" => head = Head::from_name(v),
            "sizes" => {
                sizes = v.split(',').map(|s| s.parse().ok()).collect::<Option<Vec<usize>>>();
            }
            "params" => params = v.parse().ok(),
            _ => return Err(bad()),
        }
    }
    match (name, head, sizes, params) {
        (Some(n), Some(h), Some(s), Some(p)) if s.len() >= 2 => Ok((n, h, s, p)),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ckpt = Checkpoint {
            seed: 9,
            step: 1234,
            models: vec![
                ("policy".into(), Mlp::new(&[4, 3, 2], Head::Softmax, &mut rng)),
                ("value".into(), Mlp::new(&[4, 3, 1], Head::Linear, &mut rng)),
            ],
        };
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        let header_end = buf.windows(4).position(|w| w == b"end\n").unwrap();
        assert!(std::str::from_utf8(&buf[..header_end]).unwrap().contains("sizes=4,3,2"));
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        assert_eq!(back, ckpt);
    }

    #[test]
    fn truncated_body_is_an_error() {
        let ckpt = Checkpoint {
            seed: 0,
            step: 0,
            models: vec![("m".into(), Mlp::zeros(&[2, 1], Head::Sigmoid))],
        };
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(Checkpoint::read_from(&buf[..]), Err(CheckpointError::Io(_))));
    }

    #[test]
    fn bad_magic_is_an_error() {
        let err = Checkpoint::read_from(&b"not-a-checkpoint\n"[..]).unwrap_err();
        assert!(matches!(err, CheckpointError::Header(_)));
    }
}
