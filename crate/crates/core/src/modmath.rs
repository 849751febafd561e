//! Width-checked operands, bit slicing/segmentation, and the golden modulo
//! oracle the datapath engines are validated against.
//!
//! Widths are explicit metadata: a hardware bus keeps its declared width no
//! matter how many leading zeros the current value has, so widths are never
//! inferred from value magnitude.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// An n-bit modulus with its most significant bit set (a true n-bit number).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modulus {
    value: BigUint,
    width_n: u32,
}

impl Modulus {
    /// Builds an n-bit modulus, rejecting zero, widths below 2, and values
    /// whose most significant bit is not bit `width_n - 1`.
    pub fn new(value: BigUint, width_n: u32) -> Result<Self> {
        if value.is_zero() {
            return Err(Error::InvalidModulus("modulus must be nonzero".into()));
        }
        if width_n < 2 {
            return Err(Error::InvalidModulus(format!(
                "modulus width must be at least 2 bits, got {width_n}"
            )));
        }
        if value.bits() != u64::from(width_n) {
            return Err(Error::InvalidModulus(format!(
                "modulus must occupy exactly {width_n} bits (most significant bit set); \
                 value has {} significant bits",
                value.bits()
            )));
        }
        Ok(Self { value, width_n })
    }

    pub fn from_hex(hex: &str, width_n: u32) -> Result<Self> {
        Self::new(parse_hex(hex)?, width_n)
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn width(&self) -> u32 {
        self.width_n
    }

    pub fn to_hex(&self) -> String {
        hex_padded(&self.value, self.width_n)
    }
}

/// An unsigned value carrying a declared bit width, with `value < 2^width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operand {
    value: BigUint,
    width: u32,
}

impl Operand {
    pub fn new(value: BigUint, width: u32) -> Result<Self> {
        if value.bits() > u64::from(width) {
            return Err(Error::WidthOverflow { width });
        }
        Ok(Self { value, width })
    }

    pub fn from_hex(hex: &str, width: u32) -> Result<Self> {
        Self::new(parse_hex(hex)?, width)
    }

    pub fn zero(width: u32) -> Self {
        Self {
            value: BigUint::zero(),
            width,
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Lowercase hex, zero-padded to the digit count of the declared width.
    pub fn to_hex(&self) -> String {
        hex_padded(&self.value, self.width)
    }
}

/// A k-bit slice of an operand's upper bits, indexed least-significant first
/// so that segment `i` weighs `2^(base + k*i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub value: u64,
    pub index_i: u32,
    pub width_k: u32,
}

/// Reference semantics of the reduction: plain arbitrary-precision remainder.
/// Every datapath engine must agree with this on all inputs.
pub fn mod_oracle(a: &Operand, m: &Modulus) -> Operand {
    Operand {
        value: a.value() % m.value(),
        width: m.width(),
    }
}

/// Extracts `width` bits of `a` starting at bit `offset`:
/// `floor(a / 2^offset) mod 2^width`.
pub fn slice_bits(a: &Operand, offset: u32, width: u32) -> Result<BigUint> {
    if offset.checked_add(width).map_or(true, |end| end > a.width()) {
        return Err(Error::SliceOutOfRange {
            offset,
            width,
            operand_width: a.width(),
        });
    }
    Ok(slice_value(a.value(), offset, width))
}

/// Bit slice of a bare value (no declared-width check).
pub(crate) fn slice_value(value: &BigUint, offset: u32, width: u32) -> BigUint {
    let shifted = value >> offset;
    let mask = (BigUint::one() << width) - BigUint::one();
    shifted & mask
}

/// Splits the low `width_bits` of `value` into `ceil(width_bits / k)` k-bit
/// segments, least significant first. The top segment is zero-padded when
/// `width_bits` is not a multiple of `k`.
pub fn segment_value(value: &BigUint, width_bits: u32, k: u32) -> Vec<Segment> {
    assert!(k >= 1, "segment width k must be at least 1");
    assert!(
        k <= MAX_SEGMENT_BITS,
        "segment width k = {k} exceeds the supported maximum of {MAX_SEGMENT_BITS}"
    );
    debug_assert!(
        value.bits() <= u64::from(width_bits),
        "value has more bits than the declared slice width"
    );
    let count = width_bits.div_ceil(k);
    (0..count)
        .map(|i| {
            let bits = slice_value(value, k * i, k);
            let seg = u64::try_from(bits).expect("segment fits in u64 for k <= 32");
            Segment {
                value: seg,
                index_i: i,
                width_k: k,
            }
        })
        .collect()
}

/// Largest supported table input width. Keeps segment values in `u64` and
/// table sizes addressable.
pub const MAX_SEGMENT_BITS: u32 = 32;

fn parse_hex(s: &str) -> Result<BigUint> {
    let trimmed = s.trim();
    let digits = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    if digits.is_empty() {
        return Err(Error::Parse {
            what: "hex value",
            detail: "empty string".into(),
        });
    }
    BigUint::parse_bytes(digits.as_bytes(), 16).ok_or_else(|| Error::Parse {
        what: "hex value",
        detail: format!("not a hexadecimal number: {trimmed:?}"),
    })
}

fn hex_padded(value: &BigUint, width: u32) -> String {
    let digits = (width.div_ceil(4)).max(1) as usize;
    format!("{value:0digits$x}")
}
