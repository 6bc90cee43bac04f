//! Binary formats for functions (`.mrf`) and nets (`.uns`).
//!
//! Both are little-endian. A `.mrf` file is the magic `MRF1`, four `u32`
//! fields (domain tag, resolution, channels, basis tag) and the coefficients
//! as `f64`. A `.uns` file is the magic `UNS1`, a `u32` format version, the
//! spec as length-prefixed JSON, the frozen flags, and every parameter
//! tensor as owner, shape and values.

use std::io::{Read, Write};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::spaces::{Basis, Domain, MultiResFunction};
use crate::unet::{Owner, Param, UNetSpec, UNetState};

const MRF_MAGIC: &[u8; 4] = b"MRF1";
const UNS_MAGIC: &[u8; 4] = b"UNS1";
const UNS_VERSION: u32 = 1;

fn format_err(kind: &'static str, detail: impl Into<String>) -> Error {
    Error::Format { kind, detail: detail.into() }
}

struct Reader<'a> {
    buf: &'a [u8],
    kind: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(format_err(self.kind, "unexpected end of data"));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self, max: usize) -> Result<usize> {
        let n = self.u64()?;
        if n > max as u64 {
            return Err(format_err(self.kind, format!("length {n} exceeds the remaining data")));
        }
        Ok(n as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| format_err(self.kind, "length overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn finish(&self) -> Result<()> {
        if !self.buf.is_empty() {
            return Err(format_err(self.kind, format!("{} trailing bytes", self.buf.len())));
        }
        Ok(())
    }
}

pub fn encode_mrf(f: &MultiResFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * f.coeffs().len());
    out.extend_from_slice(MRF_MAGIC);
    for v in [f.domain().tag(), f.resolution(), f.channels() as u32, f.basis().tag()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in f.coeffs() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_mrf(bytes: &[u8]) -> Result<MultiResFunction> {
    let mut r = Reader { buf: bytes, kind: "mrf" };
    if r.take(4)? != MRF_MAGIC {
        return Err(format_err("mrf", "bad magic"));
    }
    let domain = r.u32()?;
    let domain = Domain::from_tag(domain).ok_or_else(|| format_err("mrf", format!("unknown domain tag {domain}")))?;
    let resolution = r.u32()?;
    let channels = r.u32()? as usize;
    let basis = r.u32()?;
    let basis = Basis::from_tag(basis).ok_or_else(|| format_err("mrf", format!("unknown basis tag {basis}")))?;
    if resolution > crate::wavelet::MAX_RESOLUTION {
        return Err(Error::ResolutionTooLarge { requested: resolution, limit: crate::wavelet::MAX_RESOLUTION });
    }
    let n = domain
        .cells(resolution)
        .checked_mul(channels)
        .ok_or_else(|| format_err("mrf", "size overflow"))?;
    let coeffs = r.f64s(n)?;
    r.finish()?;
    MultiResFunction::new(domain, resolution, channels, basis, coeffs)
}

pub fn write_mrf(mut w: impl Write, f: &MultiResFunction) -> Result<()> {
    w.write_all(&encode_mrf(f))?;
    Ok(())
}

pub fn read_mrf(mut r: impl Read) -> Result<MultiResFunction> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_mrf(&buf)
}

fn owner_code(o: Owner) -> (u8, u32) {
    match o {
        Owner::Encoder(i) => (0, i),
        Owner::Decoder(i) => (1, i),
        Owner::Bottleneck => (2, 0),
        Owner::Head(i) => (3, i),
        Owner::Tail(i) => (4, i),
    }
}

fn owner_from(code: u8, i: u32) -> Result<Owner> {
    Ok(match code {
        0 => Owner::Encoder(i),
        1 => Owner::Decoder(i),
        2 => Owner::Bottleneck,
        3 => Owner::Head(i),
        4 => Owner::Tail(i),
        c => return Err(format_err("uns", format!("unknown owner code {c}"))),
    })
}

pub fn encode_uns(u: &UNetState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(UNS_MAGIC);
    out.extend_from_slice(&UNS_VERSION.to_le_bytes());
    let spec = serde_json::to_vec(u.spec()).expect("spec serializes");
    out.extend_from_slice(&(spec.len() as u64).to_le_bytes());
    out.extend_from_slice(&spec);
    out.extend_from_slice(&(u.frozen().len() as u64).to_le_bytes());
    out.extend(u.frozen().iter().map(|&f| u8::from(f)));
    out.extend_from_slice(&(u.params().len() as u64).to_le_bytes());
    for p in u.params() {
        let (code, i) = owner_code(p.owner);
        out.push(code);
        out.extend_from_slice(&i.to_le_bytes());
        out.extend_from_slice(&(p.tensor.shape().len() as u64).to_le_bytes());
        for &d in p.tensor.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_uns(bytes: &[u8]) -> Result<UNetState> {
    let mut r = Reader { buf: bytes, kind: "uns" };
    if r.take(4)? != UNS_MAGIC {
        return Err(format_err("uns", "bad magic"));
    }
    let version = r.u32()?;
    if version != UNS_VERSION {
        return Err(format_err("uns", format!("unsupported version {version}")));
    }
    let n = r.len(bytes.len())?;
    let spec: UNetSpec = serde_json::from_slice(r.take(n)?).map_err(|e| format_err("uns", format!("spec: {e}")))?;
    let n = r.len(bytes.len())?;
    let frozen = r.take(n)?.iter().map(|&b| b != 0).collect();
    let count = r.len(bytes.len())?;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let code = r.u8()?;
        let i = r.u32()?;
        let owner = owner_from(code, i)?;
        let rank = r.len(8)?;
        let shape = (0..rank).map(|_| r.len(bytes.len())).collect::<Result<Vec<_>>>()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| format_err("uns", "size overflow"))?;
        let tensor = Tensor::new(shape, r.f64s(n)?)?;
        params.push(Param { owner, tensor });
    }
    r.finish()?;
    UNetState::from_parts(spec, params, frozen)
}

pub fn write_uns(mut w: impl Write, u: &UNetState) -> Result<()> {
    w.write_all(&encode_uns(u))?;
    Ok(())
}

pub fn read_uns(mut r: impl Read) -> Result<UNetState> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_uns(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unet::build_unet;

    #[test]
    fn mrf_round_trip() {
        let f = MultiResFunction::new(Domain::Square, 1, 2, Basis::Haar, vec![1., 2., 3., 4., -1., 0.5, 0.25, 8.]).unwrap();
        let bytes = encode_mrf(&f);
        assert_eq!(&bytes[..4], b"MRF1");
        assert_eq!(bytes.len(), 20 + 64);
        assert_eq!(decode_mrf(&bytes).unwrap(), f);
    }

    #[test]
    fn mrf_rejects_corruption() {
        let f = MultiResFunction::constant(Domain::Interval, 2, 1, 1.0).unwrap();
        let bytes = encode_mrf(&f);
        assert!(decode_mrf(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_mrf(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_mrf(&bad).is_err());
        let mut tag = bytes;
        tag[4] = 9;
        assert!(decode_mrf(&tag).is_err());
    }

    #[test]
    fn uns_round_trip() {
        let mut spec = crate::unet::UNetSpec::residual_unet(Domain::Interval, 2, 1, 2);
        spec.adapters = true;
        let mut u = build_unet(&spec, 4).unwrap();
        u.set_frozen(1, true).unwrap();
        let bytes = encode_uns(&u);
        assert_eq!(decode_uns(&bytes).unwrap(), u);
        assert!(decode_uns(&bytes[..bytes.len() - 3]).is_err());
    }
}
