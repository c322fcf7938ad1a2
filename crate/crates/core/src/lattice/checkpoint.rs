//! Binary checkpoints of a sampler state.
//!
//! Layout (little endian):
//!
//! ```text
//! magic    8 bytes  "ISDROPCK"
//! version  u16
//! L        u32
//! beta     f64
//! mode     u8      0 = glauber, 1 = local exchange, 2 = nonlocal exchange
//! boundary u8      0 = plus, 1 = free
//! seed     u64
//! stream   u64
//! word_pos u128
//! spins    ceil(L²/8) bytes, row-major, bit set = minus spin (LSB first)
//! ```

use std::io::{Read, Write};

use super::dynamics::ExchangeMode;
use super::spin::{Boundary, SpinConfig};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MAGIC: &[u8; 8] = b"ISDROPCK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Glauber,
    Exchange(ExchangeMode),
}

impl SamplerKind {
    fn code(self) -> u8 {
        match self {
            SamplerKind::Glauber => 0,
            SamplerKind::Exchange(ExchangeMode::Local) => 1,
            SamplerKind::Exchange(ExchangeMode::Nonlocal) => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => SamplerKind::Glauber,
            1 => SamplerKind::Exchange(ExchangeMode::Local),
            2 => SamplerKind::Exchange(ExchangeMode::Nonlocal),
            _ => return Err(Error::Checkpoint(format!("unknown sampler code {c}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: SpinConfig,
    pub kind: SamplerKind,
    pub rng: RngStream,
}

impl Checkpoint {
    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        let c = &self.config;
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(c.side() as u32).to_le_bytes())?;
        out.write_all(&c.beta().to_le_bytes())?;
        out.write_all(&[self.kind.code(), match c.boundary() {
            Boundary::Plus => 0,
            Boundary::Free => 1,
        }])?;
        out.write_all(&self.rng.seed().to_le_bytes())?;
        out.write_all(&self.rng.stream_id().to_le_bytes())?;
        out.write_all(&self.rng.word_pos().to_le_bytes())?;
        let mut packed = vec![0u8; c.sites().div_ceil(8)];
        for (i, s) in c.to_spins().into_iter().enumerate() {
            if s < 0 {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        out.write_all(&packed)?;
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> Result<Self> {
        fn take<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
            let mut buf = [0u8; N];
            input.read_exact(&mut buf).map_err(|e| Error::Checkpoint(format!("truncated: {e}")))?;
            Ok(buf)
        }
        if &take::<8>(input)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = u16::from_le_bytes(take(input)?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let l = u32::from_le_bytes(take(input)?) as usize;
        let beta = f64::from_le_bytes(take(input)?);
        let [kind, boundary] = take::<2>(input)?;
        let kind = SamplerKind::from_code(kind)?;
        let boundary = match boundary {
            0 => Boundary::Plus,
            1 => Boundary::Free,
            b => return Err(Error::Checkpoint(format!("unknown boundary code {b}"))),
        };
        let seed = u64::from_le_bytes(take(input)?);
        let stream = u64::from_le_bytes(take(input)?);
        let word_pos = u128::from_le_bytes(take(input)?);
        let mut packed = vec![0u8; (l * l).div_ceil(8)];
        input.read_exact(&mut packed).map_err(|e| Error::Checkpoint(format!("truncated spins: {e}")))?;
        let spins: Vec<i8> =
            (0..l * l).map(|i| if packed[i / 8] >> (i % 8) & 1 == 1 { -1 } else { 1 }).collect();
        Ok(Self {
            config: SpinConfig::from_spins(l, beta, boundary, &spins)?,
            kind,
            rng: RngStream::restore(seed, stream, word_pos),
        })
    }
}
