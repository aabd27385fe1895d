//! Canonical byte encoding for everything that gets hashed, signed, or
//! written to a transcript.
//!
//! Fields are written in a fixed order. Every field is a 4-byte big-endian
//! length followed by the payload:
//!
//! * integers (`BigUint`, `u64`) use their minimal big-endian bytes; zero is
//!   the empty string,
//! * byte strings are copied verbatim,
//! * tags are the UTF-8 bytes of a short ASCII label.
//!
//! There is no other framing, so the encoding of a record is the plain
//! concatenation of its fields.

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input while reading {0}")]
    Truncated(&'static str),
    #[error("field {field} is {len} bytes, limit is {limit}")]
    TooLong {
        field: &'static str,
        len: usize,
        limit: usize,
    },
    #[error("integer field {0} is not minimally encoded")]
    NonMinimal(&'static str),
    #[error("expected tag {expected:?}, found {found:?}")]
    Tag { expected: String, found: String },
    #[error("{0} trailing bytes after record")]
    Trailing(usize),
    #[error("invalid field {0}")]
    Invalid(&'static str),
}

/// Append-only canonical encoder.
#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    fn field(&mut self, bytes: &[u8]) -> &mut Self {
        let len = u32::try_from(bytes.len()).expect("field longer than 4 GiB");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn tag(&mut self, tag: &str) -> &mut Self {
        self.field(tag.as_bytes())
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.field(bytes)
    }

    pub fn int(&mut self, value: &BigUint) -> &mut Self {
        if value.is_zero() {
            self.field(&[])
        } else {
            self.field(&value.to_bytes_be())
        }
    }

    pub fn u64(&mut self, value: u64) -> &mut Self {
        let bytes = value.to_be_bytes();
        let start = bytes.iter().position(|&b| b != 0).unwrap_or(bytes.len());
        self.field(&bytes[start..])
    }

    pub fn ints<'a>(&mut self, values: impl IntoIterator<Item = &'a BigUint>) -> &mut Self {
        for v in values {
            self.int(v);
        }
        self
    }

    pub fn finish(&self) -> Vec<u8> {
        self.buf.clone()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.buf
    }
}

/// Reader for [`Encoder`] output.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    input: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input }
    }

    fn field(&mut self, name: &'static str) -> Result<&'a [u8], DecodeError> {
        if self.input.len() < 4 {
            return Err(DecodeError::Truncated(name));
        }
        let (len, rest) = self.input.split_at(4);
        let len = u32::from_be_bytes(len.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(DecodeError::Truncated(name));
        }
        let (field, rest) = rest.split_at(len);
        self.input = rest;
        Ok(field)
    }

    pub fn expect_tag(&mut self, tag: &str) -> Result<(), DecodeError> {
        let found = self.field("tag")?;
        if found != tag.as_bytes() {
            return Err(DecodeError::Tag {
                expected: tag.to_string(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        Ok(())
    }

    pub fn tag(&mut self) -> Result<String, DecodeError> {
        let found = self.field("tag")?;
        String::from_utf8(found.to_vec()).map_err(|_| DecodeError::Invalid("tag"))
    }

    pub fn bytes(&mut self, name: &'static str) -> Result<Vec<u8>, DecodeError> {
        self.field(name).map(<[u8]>::to_vec)
    }

    pub fn int(&mut self, name: &'static str) -> Result<BigUint, DecodeError> {
        let raw = self.field(name)?;
        if raw.first() == Some(&0) {
            return Err(DecodeError::NonMinimal(name));
        }
        Ok(BigUint::from_bytes_be(raw))
    }

    pub fn u64(&mut self, name: &'static str) -> Result<u64, DecodeError> {
        let raw = self.field(name)?;
        if raw.len() > 8 {
            return Err(DecodeError::TooLong {
                field: name,
                len: raw.len(),
                limit: 8,
            });
        }
        if raw.first() == Some(&0) {
            return Err(DecodeError::NonMinimal(name));
        }
        Ok(raw.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.input.is_empty() {
            Ok(())
        } else {
            Err(DecodeError::Trailing(self.input.len()))
        }
    }
}
