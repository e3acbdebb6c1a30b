//! Binary dump of (x, y) sample records for estimator replay.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "PNDUMP\0\x01"
//! config_hash  u64      FNV-1a of the config text
//! config_len   u32
//! config       config_len bytes of UTF-8 key=value lines
//! count        u64      number of records
//! records      count x (x.re, x.im, y.re, y.im) as f64
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"PNDUMP\x00\x01";

/// 64-bit FNV-1a.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub config_hash: u64,
    pub config_text: String,
    /// Per receiver sample: the transmitted symbol and the observation.
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl Dump {
    pub fn new(config_text: String, x: Vec<Complex64>, y: Vec<Complex64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Length(format!(
                "{} inputs vs {} outputs",
                x.len(),
                y.len()
            )));
        }
        Ok(Dump {
            config_hash: config_hash(&config_text),
            config_text,
            x,
            y,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&self.config_hash.to_le_bytes())?;
        let len = u32::try_from(self.config_text.len())
            .map_err(|_| Error::Format("config text too long".into()))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(self.config_text.as_bytes())?;
        w.write_all(&(self.x.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.x.len() * 32);
        for (x, y) in self.x.iter().zip(&self.y) {
            for v in [x.re, x.im, y.re, y.im] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let hash = u64::from_le_bytes(read_array(&mut r, "config hash")?);
        let len = u32::from_le_bytes(read_array(&mut r, "config length")?) as usize;
        let mut text = vec![0u8; len];
        read_exact(&mut r, &mut text, "config text")?;
        let text =
            String::from_utf8(text).map_err(|_| Error::Format("config is not UTF-8".into()))?;
        if config_hash(&text) != hash {
            return Err(Error::Format(
                "config hash does not match config text".into(),
            ));
        }
        let count = u64::from_le_bytes(read_array(&mut r, "record count")?) as usize;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != count * 32 {
            return Err(Error::Format(format!(
                "expected {} record bytes, found {}",
                count * 32,
                body.len()
            )));
        }
        let vals: Vec<f64> = body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let mut x = Vec::with_capacity(count);
        let mut y = Vec::with_capacity(count);
        for rec in vals.chunks_exact(4) {
            x.push(Complex64::new(rec[0], rec[1]));
            y.push(Complex64::new(rec[2], rec[3]));
        }
        Ok(Dump {
            config_hash: hash,
            config_text: text,
            x,
            y,
        })
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated {what}")))
}

fn read_array<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b, what)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(config_hash(""), 0xcbf29ce484222325);
        assert_eq!(config_hash("a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn round_trip_and_corruption() {
        let x = vec![Complex64::new(1.0, -1.0), Complex64::new(0.5, 0.25)];
        let y = vec![Complex64::new(0.1, 0.2), Complex64::new(-3.0, 1e-300)];
        let d = Dump::new("l=2\nseed=1\n".into(), x, y).unwrap();
        let mut bytes = Vec::new();
        d.write(&mut bytes).unwrap();
        assert_eq!(Dump::read(bytes.as_slice()).unwrap(), d);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Dump::read(bad.as_slice()), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[22] ^= 1;
        assert!(Dump::read(bad.as_slice()).is_err());
        assert!(Dump::read(&bytes[..bytes.len() - 3]).is_err());
        assert!(Dump::new(String::new(), vec![], vec![Complex64::new(0.0, 0.0)]).is_err());
    }
}
