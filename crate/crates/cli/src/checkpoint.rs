//! Binary checkpoint of a simulation state.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `RNSA` |
//! | 4 | format version (u32, currently 1) |
//! | 4 | endianness tag `0x01020304` (u32) |
//! | 12 | `N` (3 x u32) |
//! | 24 | `a` (3 x f64) |
//! | 8 | dealias fraction (f64) |
//! | 24 | `nu`, `alpha`, `f` (f64) |
//! | 8 | `t` (f64) |
//! | 8 | payload length in bytes (u64) |
//! | 4 | CRC-32 of the payload (u32) |
//! | 4 | CRC-32 of every preceding header byte (u32) |
//!
//! The payload lists every wave vector of the full map in lexicographic
//! order over `n_j in (-N_j/2, N_j/2)`, each as six f64 values
//! `re u1, im u1, re u2, im u2, re u3, im u3`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rnsa_core::{Lattice, LatticeSpec, SimState, SpectralField};

pub const MAGIC: [u8; 4] = *b"RNSA";
pub const FORMAT_VERSION: u32 = 1;
pub const ENDIAN_TAG: u32 = 0x0102_0304;
const HEADER_LEN: usize = 4 + 4 + 4 + 12 + 24 + 8 + 24 + 8 + 8 + 4 + 4;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("byte order tag {0:#010x} does not match")]
    Endianness(u32),
    #[error("CRC mismatch in {0}")]
    Crc(&'static str),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Physical parameters stored alongside the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointParams {
    pub nu: f64,
    pub alpha: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: SimState,
    pub params: CheckpointParams,
}

pub fn encode(state: &SimState, params: CheckpointParams) -> Vec<u8> {
    let l = state.v.lattice();
    let spec = l.spec();
    let mut payload = Vec::new();
    for n in l.canonical_modes() {
        let v = state.v.mode(n).expect("canonical mode lies on the lattice");
        for z in v {
            payload.extend_from_slice(&z.re.to_le_bytes());
            payload.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&ENDIAN_TAG.to_le_bytes());
    for n in spec.n {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for x in spec.a.iter().chain([&spec.dealias_fraction, &params.nu, &params.alpha, &params.f, &state.t]) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    let header_crc = crc32fast::hash(&out);
    out.extend_from_slice(&header_crc.to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let out: [u8; K] = self.bytes[self.pos..self.pos + K].try_into().expect("length checked");
        self.pos += K;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Crc("header"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32();
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let stored = u32::from_le_bytes(bytes[HEADER_LEN - 4..HEADER_LEN].try_into().expect("4 bytes"));
    if crc32fast::hash(&bytes[..HEADER_LEN - 4]) != stored {
        return Err(CheckpointError::Crc("header"));
    }
    let tag = r.u32();
    if tag != ENDIAN_TAG {
        return Err(CheckpointError::Endianness(tag));
    }
    let n = [r.u32() as usize, r.u32() as usize, r.u32() as usize];
    let a = [r.f64(), r.f64(), r.f64()];
    let dealias = r.f64();
    let params = CheckpointParams {
        nu: r.f64(),
        alpha: r.f64(),
        f: r.f64(),
    };
    let t = r.f64();
    let payload_len = r.u64() as usize;
    let payload_crc = r.u32();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != payload_len || crc32fast::hash(payload) != payload_crc {
        return Err(CheckpointError::Crc("payload"));
    }

    let spec = LatticeSpec::new(a, n, dealias);
    let lattice: Arc<Lattice> = if a[0] == 1.0 {
        Lattice::new(spec)
    } else {
        Lattice::new_allow_any_a1(spec)
    }
    .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    let modes = lattice.canonical_modes().count();
    if payload_len != modes * 48 {
        return Err(CheckpointError::Invalid(format!(
            "payload holds {payload_len} bytes, lattice needs {}",
            modes * 48
        )));
    }
    let mut v = SpectralField::zeros(&lattice);
    let mut r = Reader { bytes: payload, pos: 0 };
    for m in lattice.canonical_modes() {
        let mut z = [Complex64::new(0.0, 0.0); 3];
        for c in &mut z {
            *c = Complex64::new(r.f64(), r.f64());
        }
        // conjugate slots are implied by their partners
        let (idx, conj) = lattice.index(m).expect("canonical mode lies on the lattice");
        if !conj {
            v.set_at(idx, z);
        }
    }
    Ok(Checkpoint {
        state: SimState::new(v, t),
        params,
    })
}

pub fn write_checkpoint(path: &Path, state: &SimState, params: CheckpointParams) -> Result<(), CheckpointError> {
    fs::write(path, encode(state, params))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&fs::read(path)?)
}
