//! Flat named-tensor weight files.
//!
//! ```text
//! magic "GNNW" | u32 version | u32 hidden | u32 rounds | f64 target_mean | f64 target_std
//! u32 tensor_count, then per tensor: u32 name_len | name | u32 ndim | u64 dims.. | f64 data..
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{GraphNet, EDGE_FEATURES, NODE_FEATURES};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GNNW";
pub const WEIGHTS_VERSION: u32 = 1;

fn tensors(net: &GraphNet) -> Vec<(&'static str, Vec<usize>, std::ops::Range<usize>)> {
    let l = net.layout;
    let h = l.hidden;
    vec![
        ("encoder.weight", vec![h, NODE_FEATURES], l.enc_w..l.enc_b),
        ("encoder.bias", vec![h], l.enc_b..l.msg_w),
        ("message.weight", vec![h, 2 * h + EDGE_FEATURES], l.msg_w..l.msg_b),
        ("message.bias", vec![h], l.msg_b..l.upd_w),
        ("update.weight", vec![h, 2 * h], l.upd_w..l.upd_b),
        ("update.bias", vec![h], l.upd_b..l.out_w),
        ("readout.weight", vec![h], l.out_w..l.out_b),
        ("readout.bias", vec![1], l.out_b..l.len),
    ]
}

pub fn write_net<W: Write>(net: &GraphNet, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
    w.write_all(&(net.hidden() as u32).to_le_bytes())?;
    w.write_all(&(net.rounds as u32).to_le_bytes())?;
    w.write_all(&net.target_mean.to_le_bytes())?;
    w.write_all(&net.target_std.to_le_bytes())?;
    let ts = tensors(net);
    w.write_all(&(ts.len() as u32).to_le_bytes())?;
    for (name, dims, range) in ts {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for x in &net.params[range] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| parse_err(self.pos, "unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn parse_err(offset: usize, message: &str) -> Error {
    Error::Parse { path: format!("byte {offset}"), message: message.to_string() }
}

pub fn read_net<R: Read>(mut r: R) -> Result<GraphNet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<weights>", e))?;
    let mut rd = Reader { bytes: &bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(parse_err(0, "not a weight file"));
    }
    let version = rd.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::SchemaVersion { expected: WEIGHTS_VERSION, found: version });
    }
    let hidden = rd.u32()? as usize;
    let rounds = rd.u32()? as usize;
    if hidden == 0 || hidden > 4096 || rounds > 64 {
        return Err(parse_err(8, "implausible network shape"));
    }
    let mut net = GraphNet::zeros(hidden, rounds);
    net.target_mean = rd.f64()?;
    net.target_std = rd.f64()?;
    let expected = tensors(&net);
    let count = rd.u32()? as usize;
    if count != expected.len() {
        return Err(parse_err(rd.pos, "wrong tensor count"));
    }
    for (name, dims, range) in expected {
        let at = rd.pos;
        let len = rd.u32()? as usize;
        if rd.take(len)? != name.as_bytes() {
            return Err(parse_err(at, &format!("expected tensor `{name}`")));
        }
        let ndim = rd.u32()? as usize;
        let got: Result<Vec<u64>> = (0..ndim).map(|_| rd.u64()).collect();
        if got? != dims.iter().map(|&d| d as u64).collect::<Vec<_>>() {
            return Err(parse_err(at, &format!("shape mismatch for `{name}`")));
        }
        for i in range {
            net.params[i] = rd.f64()?;
        }
    }
    if rd.pos != bytes.len() {
        return Err(parse_err(rd.pos, "trailing bytes"));
    }
    if !net.params.iter().all(|x| x.is_finite()) || !net.target_std.is_finite() || net.target_std <= 0.0 {
        return Err(parse_err(0, "non-finite parameters"));
    }
    Ok(net)
}

pub fn save_net(net: &GraphNet, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_net(net, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_net(path: &Path) -> Result<GraphNet> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_net(std::io::BufReader::new(f)).map_err(|e| match e {
        Error::Parse { path: at, message } => Error::Parse { path: format!("{}: {at}", path.display()), message },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip() {
        let mut net = GraphNet::random(5, 2, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
        net.target_mean = 0.4;
        net.target_std = 2.5;
        let mut buf = Vec::new();
        write_net(&net, &mut buf).unwrap();
        assert_eq!(read_net(&buf[..]).unwrap(), net);
    }

    #[test]
    fn rejects_corruption() {
        let net = GraphNet::zeros(3, 1);
        let mut buf = Vec::new();
        write_net(&net, &mut buf).unwrap();
        assert!(read_net(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_net(&bad[..]), Err(Error::SchemaVersion { found: 9, .. })));
        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_net(&trailing[..]).is_err());
        assert!(read_net(&b"nope"[..]).is_err());
    }
}
