//! OSC 1.0 packet codec.
//!
//! Supports the four core argument types (`i`, `f`, `s`, `b`), messages and
//! bundles. Everything on the wire is big-endian and padded to 4 bytes.

use thiserror::Error;

const BUNDLE_TAG: &[u8; 8] = b"#bundle\0";

/// Timetag value meaning "execute immediately".
pub const TIMETAG_IMMEDIATE: u64 = 1;

const RESERVED_ADDRESS_CHARS: &[char] = &[' ', '#', '*', ',', '?', '[', ']', '{', '}'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OscError {
    #[error("invalid OSC address {0:?}")]
    InvalidAddress(String),
    #[error("string argument contains an interior NUL byte")]
    InteriorNul,
    #[error("blob of {0} bytes exceeds the i32 size limit")]
    BlobTooLarge(usize),
    #[error("packet truncated: {0}")]
    TruncatedPacket(&'static str),
    #[error("packet length {0} is not a multiple of 4")]
    MisalignedLength(usize),
    #[error("unknown type tag {0:?}")]
    UnknownTypeTag(char),
    #[error("malformed address: {0}")]
    MalformedAddress(&'static str),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OscValue {
    Int32(i32),
    Float32(f32),
    Str(String),
    Blob(Vec<u8>),
}

impl OscValue {
    fn type_tag(&self) -> u8 {
        match self {
            OscValue::Int32(_) => b'i',
            OscValue::Float32(_) => b'f',
            OscValue::Str(_) => b's',
            OscValue::Blob(_) => b'b',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscValue>,
}

impl OscMessage {
    /// Builds a message after checking the address.
    pub fn new(address: impl Into<String>, args: Vec<OscValue>) -> Result<Self, OscError> {
        let address = address.into();
        validate_address(&address)?;
        Ok(Self { address, args })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscBundle {
    /// 64-bit NTP fixed-point timetag (32.32).
    pub timetag: u64,
    pub elements: Vec<OscPacket>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OscPacket {
    Message(OscMessage),
    Bundle(OscBundle),
}

impl From<OscMessage> for OscPacket {
    fn from(m: OscMessage) -> Self {
        OscPacket::Message(m)
    }
}

impl From<OscBundle> for OscPacket {
    fn from(b: OscBundle) -> Self {
        OscPacket::Bundle(b)
    }
}

pub fn validate_address(address: &str) -> Result<(), OscError> {
    if !address.starts_with('/')
        || address.contains(RESERVED_ADDRESS_CHARS)
        || address.contains('\0')
    {
        return Err(OscError::InvalidAddress(address.to_owned()));
    }
    Ok(())
}

#[inline]
fn padded_len(n: usize) -> usize {
    (n + 3) & !3
}

fn write_padded_str(out: &mut Vec<u8>, s: &[u8]) {
    out.extend_from_slice(s);
    // at least one terminating NUL, then pad to 4
    let total = padded_len(s.len() + 1);
    out.resize(out.len() + total - s.len(), 0);
}

pub fn encode_message(msg: &OscMessage) -> Result<Vec<u8>, OscError> {
    let mut out = Vec::with_capacity(32 + 4 * msg.args.len());
    encode_message_into(msg, &mut out)?;
    Ok(out)
}

fn encode_message_into(msg: &OscMessage, out: &mut Vec<u8>) -> Result<(), OscError> {
    validate_address(&msg.address)?;
    write_padded_str(out, msg.address.as_bytes());

    let mut tags = Vec::with_capacity(msg.args.len() + 1);
    tags.push(b',');
    tags.extend(msg.args.iter().map(OscValue::type_tag));
    write_padded_str(out, &tags);

    for arg in &msg.args {
        match arg {
            OscValue::Int32(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscValue::Float32(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscValue::Str(s) => {
                if s.as_bytes().contains(&0) {
                    return Err(OscError::InteriorNul);
                }
                write_padded_str(out, s.as_bytes());
            }
            OscValue::Blob(b) => {
                let len = i32::try_from(b.len()).map_err(|_| OscError::BlobTooLarge(b.len()))?;
                out.extend_from_slice(&len.to_be_bytes());
                out.extend_from_slice(b);
                out.resize(out.len() + padded_len(b.len()) - b.len(), 0);
            }
        }
    }
    Ok(())
}

pub fn encode_bundle(bundle: &OscBundle) -> Result<Vec<u8>, OscError> {
    let mut out = Vec::with_capacity(16);
    encode_bundle_into(bundle, &mut out)?;
    Ok(out)
}

fn encode_bundle_into(bundle: &OscBundle, out: &mut Vec<u8>) -> Result<(), OscError> {
    out.extend_from_slice(BUNDLE_TAG);
    out.extend_from_slice(&bundle.timetag.to_be_bytes());
    for element in &bundle.elements {
        let size_at = out.len();
        out.extend_from_slice(&[0; 4]);
        encode_packet_into(element, out)?;
        let size = out.len() - size_at - 4;
        let size = i32::try_from(size).map_err(|_| OscError::BlobTooLarge(size))?;
        out[size_at..size_at + 4].copy_from_slice(&size.to_be_bytes());
    }
    Ok(())
}

pub fn encode_packet(packet: &OscPacket) -> Result<Vec<u8>, OscError> {
    let mut out = Vec::new();
    encode_packet_into(packet, &mut out)?;
    Ok(out)
}

fn encode_packet_into(packet: &OscPacket, out: &mut Vec<u8>) -> Result<(), OscError> {
    match packet {
        OscPacket::Message(m) => encode_message_into(m, out),
        OscPacket::Bundle(b) => encode_bundle_into(b, out),
    }
}

/// Decodes one packet occupying the whole of `bytes`.
pub fn decode_packet(bytes: &[u8]) -> Result<OscPacket, OscError> {
    if bytes.len() < 4 {
        return Err(OscError::TruncatedPacket("shorter than one word"));
    }
    if bytes.len() % 4 != 0 {
        return Err(OscError::MisalignedLength(bytes.len()));
    }
    if bytes.starts_with(BUNDLE_TAG) {
        decode_bundle(bytes).map(OscPacket::Bundle)
    } else {
        decode_message(bytes).map(OscPacket::Message)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], OscError> {
        if self.remaining() < n {
            return Err(OscError::TruncatedPacket(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn word(&mut self, what: &'static str) -> Result<[u8; 4], OscError> {
        let s = self.take(4, what)?;
        Ok([s[0], s[1], s[2], s[3]])
    }

    /// NUL-terminated, 4-byte padded string; returns bytes before the NUL.
    fn padded_str(&mut self, what: &'static str) -> Result<&'a [u8], OscError> {
        let rest = &self.buf[self.pos..];
        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or(OscError::TruncatedPacket(what))?;
        let total = padded_len(nul + 1);
        if total > rest.len() {
            return Err(OscError::TruncatedPacket(what));
        }
        if rest[nul..total].iter().any(|&b| b != 0) {
            return Err(OscError::Malformed("non-zero string padding"));
        }
        self.pos += total;
        Ok(&rest[..nul])
    }
}

fn decode_message(bytes: &[u8]) -> Result<OscMessage, OscError> {
    let mut r = Reader::new(bytes);
    let address = r.padded_str("address")?;
    let address = std::str::from_utf8(address)
        .map_err(|_| OscError::MalformedAddress("address is not UTF-8"))?;
    if !address.starts_with('/') {
        return Err(OscError::MalformedAddress("address must start with '/'"));
    }
    if address.contains(RESERVED_ADDRESS_CHARS) {
        return Err(OscError::MalformedAddress("address contains a reserved character"));
    }

    // A message with no type tag string at all is tolerated by older senders.
    let tags: &[u8] = if r.remaining() == 0 {
        b","
    } else {
        r.padded_str("type tags")?
    };
    if tags.first() != Some(&b',') {
        return Err(OscError::Malformed("type tag string must start with ','"));
    }

    let mut args = Vec::with_capacity(tags.len() - 1);
    for &tag in &tags[1..] {
        let value = match tag {
            b'i' => OscValue::Int32(i32::from_be_bytes(r.word("int32 argument")?)),
            b'f' => OscValue::Float32(f32::from_be_bytes(r.word("float32 argument")?)),
            b's' => {
                let s = r.padded_str("string argument")?;
                let s = std::str::from_utf8(s)
                    .map_err(|_| OscError::Malformed("string argument is not UTF-8"))?;
                OscValue::Str(s.to_owned())
            }
            b'b' => {
                let len = i32::from_be_bytes(r.word("blob size")?);
                let len = usize::try_from(len).map_err(|_| OscError::Malformed("negative blob size"))?;
                if len > r.remaining() {
                    return Err(OscError::TruncatedPacket("blob data"));
                }
                let data = r.take(len, "blob data")?.to_vec();
                let pad = padded_len(len) - len;
                if r.take(pad, "blob padding")?.iter().any(|&b| b != 0) {
                    return Err(OscError::Malformed("non-zero blob padding"));
                }
                OscValue::Blob(data)
            }
            other => return Err(OscError::UnknownTypeTag(other as char)),
        };
        args.push(value);
    }
    if r.remaining() != 0 {
        return Err(OscError::Malformed("trailing bytes after arguments"));
    }
    Ok(OscMessage {
        address: address.to_owned(),
        args,
    })
}

fn decode_bundle(bytes: &[u8]) -> Result<OscBundle, OscError> {
    let mut r = Reader::new(bytes);
    r.take(BUNDLE_TAG.len(), "bundle tag")?;
    let tt = r.take(8, "bundle timetag")?;
    let timetag = u64::from_be_bytes(tt.try_into().expect("8 bytes"));
    let mut elements = Vec::new();
    while r.remaining() > 0 {
        let size = i32::from_be_bytes(r.word("bundle element size")?);
        let size = usize::try_from(size)
            .map_err(|_| OscError::Malformed("negative bundle element size"))?;
        if size > r.remaining() {
            return Err(OscError::TruncatedPacket("bundle element"));
        }
        let body = r.take(size, "bundle element")?;
        elements.push(decode_packet(body)?);
    }
    Ok(OscBundle { timetag, elements })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(addr: &str, args: Vec<OscValue>) -> OscMessage {
        OscMessage::new(addr, args).unwrap()
    }

    #[test]
    fn golden_float_message() {
        let bytes = encode_message(&msg("/z", vec![OscValue::Float32(1.0)])).unwrap();
        assert_eq!(
            bytes,
            [0x2F, 0x7A, 0, 0, 0x2C, 0x66, 0, 0, 0x3F, 0x80, 0, 0]
        );
    }

    #[test]
    fn golden_no_arg_message() {
        let bytes = encode_message(&msg("/run", vec![])).unwrap();
        assert_eq!(bytes, [0x2F, 0x72, 0x75, 0x6E, 0, 0, 0, 0, 0x2C, 0, 0, 0]);
    }

    #[test]
    fn golden_int_message() {
        let bytes = encode_message(&msg("/n", vec![OscValue::Int32(5)])).unwrap();
        assert_eq!(bytes, [0x2F, 0x6E, 0, 0, 0x2C, 0x69, 0, 0, 0, 0, 0, 5]);
    }

    #[test]
    fn rejects_bad_addresses() {
        for bad in ["", "bad", "/a b", "/a#", "/a*", "/a,b", "/a?", "/[x]", "/{x}"] {
            let m = OscMessage {
                address: bad.into(),
                args: vec![],
            };
            assert!(matches!(encode_message(&m), Err(OscError::InvalidAddress(_))), "{bad}");
        }
    }

    #[test]
    fn interior_nul_string_rejected() {
        let m = msg("/s", vec![OscValue::Str("a\0b".into())]);
        assert_eq!(encode_message(&m), Err(OscError::InteriorNul));
    }

    #[test]
    fn short_input_is_truncated() {
        assert!(matches!(
            decode_packet(&[0x2F, 0x7A, 0]),
            Err(OscError::TruncatedPacket(_))
        ));
    }

    #[test]
    fn misaligned_input() {
        assert_eq!(
            decode_packet(&[0x2F, 0x7A, 0, 0, 0x2C]),
            Err(OscError::MisalignedLength(5))
        );
    }

    #[test]
    fn unknown_tag_rejected() {
        let bytes = [0x2F, 0x7A, 0, 0, 0x2C, b'T', 0, 0];
        assert_eq!(decode_packet(&bytes), Err(OscError::UnknownTypeTag('T')));
    }

    #[test]
    fn address_without_slash_is_malformed() {
        let bytes = [b'z', 0, 0, 0, 0x2C, 0, 0, 0];
        assert!(matches!(decode_packet(&bytes), Err(OscError::MalformedAddress(_))));
    }

    #[test]
    fn hand_built_bundle_decodes() {
        let mut bytes = b"#bundle\0".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 1]);
        bytes.extend_from_slice(&[0, 0, 0, 12]);
        bytes.extend_from_slice(&[0x2F, 0x72, 0x75, 0x6E, 0, 0, 0, 0, 0x2C, 0, 0, 0]);
        let expected = OscPacket::Bundle(OscBundle {
            timetag: 1,
            elements: vec![msg("/run", vec![]).into()],
        });
        assert_eq!(decode_packet(&bytes).unwrap(), expected);
    }

    #[test]
    fn bundle_lengths() {
        let empty = OscBundle {
            timetag: TIMETAG_IMMEDIATE,
            elements: vec![],
        };
        let bytes = encode_bundle(&empty).unwrap();
        assert_eq!(&bytes[..8], b"#bundle\0");
        assert_eq!(&bytes[8..], &[0, 0, 0, 0, 0, 0, 0, 1]);

        let one = OscBundle {
            timetag: 1,
            elements: vec![msg("/run", vec![]).into()],
        };
        assert_eq!(encode_bundle(&one).unwrap().len(), 32);

        let nested = OscBundle {
            timetag: 1,
            elements: vec![empty.into()],
        };
        assert_eq!(encode_bundle(&nested).unwrap().len(), 36);
    }

    #[test]
    fn blob_and_string_padding() {
        let m = msg(
            "/mix",
            vec![
                OscValue::Str("abcd".into()),
                OscValue::Blob(vec![1, 2, 3, 4, 5]),
                OscValue::Int32(-7),
            ],
        );
        let bytes = encode_message(&m).unwrap();
        // "/mix" 8 + ",sbi" 8 + "abcd" 8 + blob 4+8 + int 4
        assert_eq!(bytes.len(), 40);
        assert_eq!(decode_packet(&bytes).unwrap(), OscPacket::Message(m));
    }

    #[test]
    fn bundle_element_size_overrun() {
        let mut bytes = b"#bundle\0".to_vec();
        bytes.extend_from_slice(&[0; 7]);
        bytes.push(1);
        bytes.extend_from_slice(&[0, 0, 0, 64]);
        bytes.extend_from_slice(&[0x2F, 0x72, 0x75, 0x6E, 0, 0, 0, 0, 0x2C, 0, 0, 0]);
        assert!(matches!(decode_packet(&bytes), Err(OscError::TruncatedPacket(_))));
    }
}
