//! Minimal NPY v1.0 reader and writer.
//!
//! Only C-ordered, little-endian arrays of the element types in [`NpyDtype`]
//! are supported. The writer reproduces numpy's own header layout
//! (including the spare room numpy reserves for growing the first axis), so a
//! file saved by `numpy.save` and re-saved by [`write_npy`] is byte-identical.

use std::fs;
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ARRAY_ALIGN: usize = 64;
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpyDtype {
    F64,
    F32,
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    U64,
    I64,
}

impl NpyDtype {
    pub fn descr(self) -> &'static str {
        match self {
            NpyDtype::F64 => "<f8",
            NpyDtype::F32 => "<f4",
            NpyDtype::U8 => "|u1",
            NpyDtype::I8 => "|i1",
            NpyDtype::U16 => "<u2",
            NpyDtype::I16 => "<i2",
            NpyDtype::U32 => "<u4",
            NpyDtype::I32 => "<i4",
            NpyDtype::U64 => "<u8",
            NpyDtype::I64 => "<i8",
        }
    }

    pub fn from_descr(descr: &str) -> Result<Self> {
        Ok(match descr {
            "<f8" => NpyDtype::F64,
            "<f4" => NpyDtype::F32,
            "|u1" | "<u1" | "u1" => NpyDtype::U8,
            "|i1" | "<i1" | "i1" => NpyDtype::I8,
            "<u2" => NpyDtype::U16,
            "<i2" => NpyDtype::I16,
            "<u4" => NpyDtype::U32,
            "<i4" => NpyDtype::I32,
            "<u8" => NpyDtype::U64,
            "<i8" => NpyDtype::I64,
            other => return Err(Error::Npy(format!("unsupported dtype '{other}'"))),
        })
    }

    pub fn size(self) -> usize {
        match self {
            NpyDtype::U8 | NpyDtype::I8 => 1,
            NpyDtype::U16 | NpyDtype::I16 => 2,
            NpyDtype::F32 | NpyDtype::U32 | NpyDtype::I32 => 4,
            NpyDtype::F64 | NpyDtype::U64 | NpyDtype::I64 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, NpyDtype::F64 | NpyDtype::F32)
    }
}

/// Typed payload of an NPY file, in C order.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F64(Vec<f64>),
    F32(Vec<f32>),
    U8(Vec<u8>),
    I8(Vec<i8>),
    U16(Vec<u16>),
    I16(Vec<i16>),
    U32(Vec<u32>),
    I32(Vec<i32>),
    U64(Vec<u64>),
    I64(Vec<i64>),
}

macro_rules! for_each_variant {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            NpyData::F64($v) => $body,
            NpyData::F32($v) => $body,
            NpyData::U8($v) => $body,
            NpyData::I8($v) => $body,
            NpyData::U16($v) => $body,
            NpyData::I16($v) => $body,
            NpyData::U32($v) => $body,
            NpyData::I32($v) => $body,
            NpyData::U64($v) => $body,
            NpyData::I64($v) => $body,
        }
    };
}

impl NpyData {
    pub fn dtype(&self) -> NpyDtype {
        match self {
            NpyData::F64(_) => NpyDtype::F64,
            NpyData::F32(_) => NpyDtype::F32,
            NpyData::U8(_) => NpyDtype::U8,
            NpyData::I8(_) => NpyDtype::I8,
            NpyData::U16(_) => NpyDtype::U16,
            NpyData::I16(_) => NpyDtype::I16,
            NpyData::U32(_) => NpyDtype::U32,
            NpyData::I32(_) => NpyDtype::I32,
            NpyData::U64(_) => NpyDtype::U64,
            NpyData::I64(_) => NpyDtype::I64,
        }
    }

    pub fn len(&self) -> usize {
        for_each_variant!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn decode(dtype: NpyDtype, bytes: &[u8]) -> Self {
        macro_rules! le {
            ($t:ty) => {
                bytes
                    .chunks_exact(std::mem::size_of::<$t>())
                    .map(|c| <$t>::from_le_bytes(c.try_into().unwrap()))
                    .collect()
            };
        }
        match dtype {
            NpyDtype::F64 => NpyData::F64(le!(f64)),
            NpyDtype::F32 => NpyData::F32(le!(f32)),
            NpyDtype::U8 => NpyData::U8(bytes.to_vec()),
            NpyDtype::I8 => NpyData::I8(le!(i8)),
            NpyDtype::U16 => NpyData::U16(le!(u16)),
            NpyDtype::I16 => NpyData::I16(le!(i16)),
            NpyDtype::U32 => NpyData::U32(le!(u32)),
            NpyDtype::I32 => NpyData::I32(le!(i32)),
            NpyDtype::U64 => NpyData::U64(le!(u64)),
            NpyDtype::I64 => NpyData::I64(le!(i64)),
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        for_each_variant!(self, v => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        })
    }
}

/// An array loaded from (or destined for) an NPY file.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn new(shape: Vec<usize>, data: NpyData) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Npy(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_f64(array: &ArrayD<f64>) -> Self {
        Self {
            shape: array.shape().to_vec(),
            data: NpyData::F64(array.iter().copied().collect()),
        }
    }

    pub fn dtype(&self) -> NpyDtype {
        self.data.dtype()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Converts any supported element type to `f64`.
    #[allow(clippy::unnecessary_cast)]
    pub fn to_f64(&self) -> ArrayD<f64> {
        let values: Vec<f64> =
            for_each_variant!(&self.data, v => v.iter().map(|&x| x as f64).collect());
        ArrayD::from_shape_vec(IxDyn(&self.shape), values).expect("shape checked on construction")
    }

    /// Converts an integer array to non-negative class ids.
    pub fn to_labels(&self) -> Result<ArrayD<u32>> {
        if self.dtype().is_float() {
            return Err(Error::Npy(format!(
                "expected an integer array for class ids, found '{}'",
                self.dtype().descr()
            )));
        }
        let values: Vec<i128> = match &self.data {
            NpyData::U8(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::I8(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::U16(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::I16(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::U32(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::I32(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::U64(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::I64(v) => v.iter().map(|&x| x as i128).collect(),
            NpyData::F64(_) | NpyData::F32(_) => unreachable!(),
        };
        let ids = values
            .into_iter()
            .map(|x| u32::try_from(x).map_err(|_| Error::Npy(format!("class id {x} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ArrayD::from_shape_vec(IxDyn(&self.shape), ids).expect("shape checked on construction"))
    }
}

pub fn load_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_npy(&bytes)
}

pub fn write_npy(path: impl AsRef<Path>, array: &NpyArray) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_npy_bytes(array)).map_err(|e| Error::io(path, e))
}

pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Npy("bad magic string".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::Npy(format!("unsupported version {major}.{minor}")));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let start = 10 + header_len;
    if bytes.len() < start {
        return Err(Error::Npy("truncated header".into()));
    }
    let header = std::str::from_utf8(&bytes[10..start])
        .map_err(|_| Error::Npy("header is not ASCII".into()))?;
    let header = Header::parse(header)?;
    if header.fortran_order {
        return Err(Error::Npy("fortran_order arrays are not supported".into()));
    }
    let dtype = NpyDtype::from_descr(&header.descr)?;
    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Npy("shape overflows".into()))?;
    let expected = count * dtype.size();
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(Error::Npy(format!(
            "truncated payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Npy(format!(
            "trailing bytes after payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    NpyArray::new(header.shape, NpyData::decode(dtype, payload))
}

pub fn to_npy_bytes(array: &NpyArray) -> Vec<u8> {
    let shape = match array.shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", array.shape[0]),
        _ => format!(
            "({})",
            array
                .shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        array.dtype().descr(),
        shape
    );
    if let Some(first) = array.shape.first() {
        let digits = first.to_string().len();
        header.push_str(&" ".repeat(GROWTH_AXIS_MAX_DIGITS.saturating_sub(digits)));
    }
    let pad = ARRAY_ALIGN - (MAGIC.len() + 2 + 2 + header.len() + 1) % ARRAY_ALIGN;
    if pad != ARRAY_ALIGN {
        header.push_str(&" ".repeat(pad));
    }
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + array.data.len() * array.dtype().size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    array.data.encode(&mut out);
    out
}

#[derive(Debug)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl Header {
    /// Parses the Python dict literal numpy writes, e.g.
    /// `{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }`.
    fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Npy(format!("malformed header: {msg}"));
        let body = text
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| bad("not a dict"))?;

        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;
        let mut rest = body.trim_start();
        while !rest.is_empty() {
            let (key, after_key) = take_quoted(rest).ok_or_else(|| bad("expected quoted key"))?;
            let after_colon = after_key
                .trim_start()
                .strip_prefix(':')
                .ok_or_else(|| bad("expected ':'"))?
                .trim_start();
            let after_value = match key {
                "descr" => {
                    let (v, r) = take_quoted(after_colon).ok_or_else(|| bad("descr"))?;
                    descr = Some(v.to_string());
                    r
                }
                "fortran_order" => {
                    if let Some(r) = after_colon.strip_prefix("False") {
                        fortran_order = Some(false);
                        r
                    } else if let Some(r) = after_colon.strip_prefix("True") {
                        fortran_order = Some(true);
                        r
                    } else {
                        return Err(bad("fortran_order"));
                    }
                }
                "shape" => {
                    let inner = after_colon.strip_prefix('(').ok_or_else(|| bad("shape"))?;
                    let close = inner.find(')').ok_or_else(|| bad("shape"))?;
                    let dims = inner[..close]
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.trim_end_matches('L').parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("shape entries must be integers"))?;
                    shape = Some(dims);
                    &inner[close + 1..]
                }
                other => return Err(bad(&format!("unexpected key '{other}'"))),
            };
            rest = after_value.trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        }
        Ok(Header {
            descr: descr.ok_or_else(|| bad("missing 'descr'"))?,
            fortran_order: fortran_order.ok_or_else(|| bad("missing 'fortran_order'"))?,
            shape: shape.ok_or_else(|| bad("missing 'shape'"))?,
        })
    }
}

fn take_quoted(s: &str) -> Option<(&str, &str)> {
    let quote = s.chars().next().filter(|c| *c == '\'' || *c == '"')?;
    let rest = &s[1..];
    let end = rest.find(quote)?;
    Some((&rest[..end], &rest[end + 1..]))
}
