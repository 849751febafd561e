//! Functional model of the pure LUT-based reduction: table precomputation,
//! first-round parallel lookup plus aggregation, second-round lookup of the
//! carry bits, and the final subtraction adjust.

use std::io::{self, Read, Write};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::modmath::{segment_value, slice_bits, slice_value, Modulus, Operand, MAX_SEGMENT_BITS};
use crate::perf::{ceil_log2, latency_lut_based};
use crate::trace::{event, ReductionTrace, TraceUnit};

/// BRAM-derived table shape: input width `k` chosen as the largest value
/// whose `2^k` n-bit entries still fit one block, and segment count
/// `d = ceil(n / k)` for the pure method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutGeometry {
    n: u32,
    capacity_bits: u64,
    k: u32,
    d: u32,
}

impl LutGeometry {
    /// Explicit segment width. The capacity bound `2^k * n <= capacity_bits`
    /// still applies.
    pub fn with_k(n: u32, capacity_bits: u64, k: u32) -> Result<Self> {
        if k < 1 || k > MAX_SEGMENT_BITS {
            return Err(Error::ConfigMismatch(format!(
                "segment width k = {k} outside supported range 1..={MAX_SEGMENT_BITS}"
            )));
        }
        if n < 2 {
            return Err(Error::ConfigMismatch(format!(
                "modulus width n = {n} must be at least 2"
            )));
        }
        let needed = (1u128 << k) * u128::from(n);
        if needed > u128::from(capacity_bits) {
            return Err(Error::ConfigMismatch(format!(
                "2^{k} entries of {n} bits need {needed} bits; capacity is {capacity_bits}"
            )));
        }
        Ok(Self {
            n,
            capacity_bits,
            k,
            d: n.div_ceil(k),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn capacity_bits(&self) -> u64 {
        self.capacity_bits
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }
}

/// Largest `k` such that a `2^k`-entry table of n-bit residues fits a block
/// of `capacity_bits`, with `d = ceil(n / k)`.
pub fn derive_geometry(n: u32, capacity_bits: u64) -> Result<LutGeometry> {
    if n < 2 {
        return Err(Error::ConfigMismatch(format!(
            "modulus width n = {n} must be at least 2"
        )));
    }
    let ratio = capacity_bits / u64::from(n);
    if ratio < 2 {
        return Err(Error::InfeasibleGeometry { n, capacity_bits });
    }
    let k = (ratio.ilog2()).min(MAX_SEGMENT_BITS);
    LutGeometry::with_k(n, capacity_bits, k)
}

/// Precomputed residues: `tables[i][a] = (a * 2^(base_exponent + k*i)) mod M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    modulus: Modulus,
    base_exponent: u32,
    input_bits: u32,
    tables: Vec<Vec<BigUint>>,
}

/// Builds `count` tables of `2^k` residues each. Entries are generated by
/// repeated addition of `2^(base + k*i) mod M`, so every stored value stays
/// below the modulus by construction.
pub fn precompute_tables(m: &Modulus, k: u32, count: u32, base_exponent: u32) -> LookupTable {
    assert!(k >= 1 && k <= MAX_SEGMENT_BITS, "unsupported input width k = {k}");
    let entries = u64::from(count) << k;
    assert!(
        entries <= 1 << 28,
        "refusing to materialize {entries} table entries"
    );
    let rows = 1usize << k;
    let modulus = m.value();
    let mut tables = Vec::with_capacity(count as usize);
    for i in 0..count {
        let step = (BigUint::from(1u8) << (base_exponent + k * i)) % modulus;
        let mut row = Vec::with_capacity(rows);
        let mut cur = BigUint::zero();
        for _ in 0..rows {
            row.push(cur.clone());
            cur += &step;
            if &cur >= modulus {
                cur -= modulus;
            }
        }
        tables.push(row);
    }
    LookupTable {
        modulus: m.clone(),
        base_exponent,
        input_bits: k,
        tables,
    }
}

impl LookupTable {
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn base_exponent(&self) -> u32 {
        self.base_exponent
    }

    pub fn input_bits(&self) -> u32 {
        self.input_bits
    }

    pub fn count(&self) -> u32 {
        self.tables.len() as u32
    }

    pub fn lookup(&self, i: usize, a: u64) -> &BigUint {
        &self.tables[i][a as usize]
    }

    /// Storage footprint of one table: `2^k` entries of n bits.
    pub fn bits_per_table(&self) -> u64 {
        (1u64 << self.input_bits) * u64::from(self.modulus.width())
    }
}

/// Reduces the carry bits of an accumulated value through the tables again:
/// returns `(bits of r0 above position n, reduced mod M) + (low n bits)`.
/// Carry chunks wider than `k` chain through successive tables.
pub fn second_round(r0: &BigUint, m: &Modulus, tables: &LookupTable) -> BigUint {
    let n = m.width();
    debug_assert_eq!(
        tables.base_exponent(),
        n,
        "second-round tables must cover exponents starting at n"
    );
    let overflow = r0 >> n;
    let low = slice_value(r0, 0, n);
    if overflow.is_zero() {
        return low;
    }
    let of_bits = overflow.bits() as u32;
    let segs = segment_value(&overflow, of_bits, tables.input_bits());
    assert!(
        segs.len() <= tables.count() as usize,
        "carry bits span more chunks than there are tables"
    );
    segs.iter().fold(low, |acc, s| {
        acc + tables.lookup(s.index_i as usize, s.value)
    })
}

/// Full result of one LUT-based reduction, including intermediates the
/// invariants are checked against.
#[derive(Debug, Clone)]
pub struct LutReduction {
    pub result: Operand,
    pub trace: ReductionTrace,
    /// First-round aggregate: segment residues plus the low half.
    pub r0: BigUint,
    /// Second-round output, before the subtract adjust.
    pub pre_adjust: BigUint,
    pub adjust_subtractions: u32,
}

/// Reusable LUT-based reduction engine. Tables are immutable after
/// construction; `reduce` is a pure function and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct LutEngine {
    geometry: LutGeometry,
    modulus: Modulus,
    tables: LookupTable,
}

impl LutEngine {
    pub fn new(modulus: Modulus, geometry: LutGeometry) -> Result<Self> {
        if geometry.n() != modulus.width() {
            return Err(Error::ConfigMismatch(format!(
                "geometry is for n = {} but modulus is {} bits",
                geometry.n(),
                modulus.width()
            )));
        }
        let tables = precompute_tables(&modulus, geometry.k(), geometry.d(), geometry.n());
        Ok(Self {
            geometry,
            modulus,
            tables,
        })
    }

    pub fn geometry(&self) -> &LutGeometry {
        &self.geometry
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn tables(&self) -> &LookupTable {
        &self.tables
    }

    pub fn reduce(&self, a: &Operand) -> Result<LutReduction> {
        let n = self.modulus.width();
        let k = self.geometry.k();
        let d = self.geometry.d();
        if a.width() != 2 * n {
            return Err(Error::ConfigMismatch(format!(
                "operand is {} bits; engine expects {}",
                a.width(),
                2 * n
            )));
        }

        let low = slice_bits(a, 0, n)?;
        let high = slice_bits(a, n, n)?;
        let segments = segment_value(&high, n, k);
        debug_assert_eq!(segments.len(), d as usize);

        let r0 = segments.iter().fold(low, |acc, s| {
            acc + self.tables.lookup(s.index_i as usize, s.value)
        });

        let pre_adjust = second_round(&r0, &self.modulus, &self.tables);

        let mut r = pre_adjust.clone();
        let mut subtractions = 0u32;
        while &r >= self.modulus.value() {
            r -= self.modulus.value();
            subtractions += 1;
        }

        let tree_levels = ceil_log2(u64::from(d)) + 1;
        let mut events = vec![event(
            1,
            TraceUnit::Lookup,
            format!("{d} parallel segment lookups"),
        )];
        for level in 1..=tree_levels {
            events.push(event(
                1 + level,
                TraceUnit::TreeAdd,
                format!("aggregate tree level {level}"),
            ));
        }
        let after_tree = 1 + tree_levels;
        events.push(event(
            after_tree + 1,
            TraceUnit::Lookup,
            "second-round lookup of carry bits",
        ));
        events.push(event(
            after_tree + 2,
            TraceUnit::TreeAdd,
            "add second-round residues to low bits",
        ));
        events.push(event(
            after_tree + 3,
            TraceUnit::Adjust,
            format!("{subtractions} conditional subtraction(s)"),
        ));
        let total = after_tree + 3;
        debug_assert_eq!(total, latency_lut_based(n, k));
        let trace = ReductionTrace::new(events, total);

        Ok(LutReduction {
            result: Operand::new(r, n).expect("reduced value fits the modulus width"),
            trace,
            r0,
            pre_adjust,
            adjust_subtractions: subtractions,
        })
    }
}

/// One-shot reduction. Builds the tables on every call; hold a [`LutEngine`]
/// when reducing many operands against the same modulus.
pub fn reduce_lut(
    a: &Operand,
    m: &Modulus,
    geometry: &LutGeometry,
) -> Result<(Operand, ReductionTrace)> {
    let engine = LutEngine::new(m.clone(), *geometry)?;
    let red = engine.reduce(a)?;
    Ok((red.result, red.trace))
}

const TABLE_MAGIC: &[u8; 8] = b"MRLUT\0v1";

/// Serializes a table: header (magic, n, k, count, base exponent, modulus as
/// lowercase hex) followed by row-major residues, each little-endian and
/// padded to `ceil(n / 8)` bytes.
pub fn write_table(w: &mut impl Write, t: &LookupTable) -> io::Result<()> {
    let n = t.modulus.width();
    let hex = t.modulus.to_hex();
    w.write_all(TABLE_MAGIC)?;
    for v in [n, t.input_bits, t.count(), t.base_exponent, hex.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(hex.as_bytes())?;
    let entry_len = n.div_ceil(8) as usize;
    let mut buf = vec![0u8; entry_len];
    for row in &t.tables {
        for value in row {
            let bytes = value.to_bytes_le();
            buf[..bytes.len()].copy_from_slice(&bytes);
            buf[bytes.len()..].fill(0);
            w.write_all(&buf)?;
        }
    }
    Ok(())
}

pub fn read_table(r: &mut impl Read) -> Result<LookupTable> {
    let corrupt = |detail: String| Error::Parse {
        what: "lookup table file",
        detail,
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TABLE_MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let n = next_u32(r)?;
    let k = next_u32(r)?;
    let count = next_u32(r)?;
    let base_exponent = next_u32(r)?;
    let hex_len = next_u32(r)? as usize;
    if k < 1 || k > MAX_SEGMENT_BITS || hex_len > 1 << 20 {
        return Err(corrupt(format!("implausible header: k = {k}, hex length {hex_len}")));
    }
    let mut hex = vec![0u8; hex_len];
    r.read_exact(&mut hex)?;
    let hex = String::from_utf8(hex).map_err(|e| corrupt(e.to_string()))?;
    let modulus = Modulus::from_hex(&hex, n)?;

    let entry_len = n.div_ceil(8) as usize;
    let rows = 1usize << k;
    let mut tables = Vec::with_capacity(count as usize);
    let mut buf = vec![0u8; entry_len];
    for i in 0..count {
        let mut row = Vec::with_capacity(rows);
        for a in 0..rows {
            r.read_exact(&mut buf)?;
            let value = BigUint::from_bytes_le(&buf);
            if &value >= modulus.value() {
                return Err(corrupt(format!("entry [{i}][{a}] is not below the modulus")));
            }
            row.push(value);
        }
        tables.push(row);
    }
    Ok(LookupTable {
        modulus,
        base_exponent,
        input_bits: k,
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::mod_oracle;

    fn modulus(v: u64, n: u32) -> Modulus {
        Modulus::new(BigUint::from(v), n).unwrap()
    }

    fn operand(v: u64, w: u32) -> Operand {
        Operand::new(BigUint::from(v), w).unwrap()
    }

    #[test]
    fn geometry_examples() {
        let g = derive_geometry(128, 36864).unwrap();
        assert_eq!((g.k(), g.d()), (8, 16));
        let g = derive_geometry(8192, 36864).unwrap();
        assert_eq!((g.k(), g.d()), (2, 4096));
        let g = derive_geometry(256, 36864).unwrap();
        assert_eq!((g.k(), g.d()), (7, 37));
    }

    #[test]
    fn geometry_all_standard_widths() {
        let expect = [
            (128, 8, 16),
            (256, 7, 37),
            (512, 6, 86),
            (1024, 5, 205),
            (2048, 4, 512),
            (4096, 3, 1366),
            (8192, 2, 4096),
        ];
        for (n, k, d) in expect {
            let g = derive_geometry(n, 36864).unwrap();
            assert_eq!((g.k(), g.d()), (k, d), "n = {n}");
        }
    }

    #[test]
    fn geometry_infeasible_when_capacity_below_two_entries() {
        assert!(matches!(
            derive_geometry(128, 255),
            Err(Error::InfeasibleGeometry { .. })
        ));
        // Exactly 2n bits: k = 1 works.
        let g = derive_geometry(128, 256).unwrap();
        assert_eq!(g.k(), 1);
    }

    #[test]
    fn with_k_validates_capacity() {
        assert!(LutGeometry::with_k(128, 36864, 8).is_ok());
        assert!(LutGeometry::with_k(128, 36864, 9).is_err());
        assert!(LutGeometry::with_k(128, 36864, 0).is_err());
    }

    #[test]
    fn precompute_example_table() {
        let m = modulus(13, 4);
        let t = precompute_tables(&m, 2, 1, 4);
        let row: Vec<u64> = (0..4)
            .map(|a| u64::try_from(t.lookup(0, a)).unwrap())
            .collect();
        assert_eq!(row, [0, 3, 6, 9]); // a * 16 mod 13
    }

    #[test]
    fn precompute_zero_entry_and_bound() {
        let m = modulus(0b1011_0111, 8);
        let t = precompute_tables(&m, 3, 4, 8);
        for i in 0..4 {
            assert!(t.lookup(i, 0).is_zero());
            for a in 0..8 {
                assert!(t.lookup(i, a) < m.value());
            }
        }
    }

    #[test]
    fn precompute_power_of_two_modulus_is_bit_mask() {
        // M = 2^(n-1): residues are plain low-bit masks.
        let m = modulus(1 << 7, 8);
        let t = precompute_tables(&m, 4, 2, 8);
        for i in 0..2u32 {
            for a in 0..16u64 {
                let expect = (a << (8 + 4 * i)) % (1 << 7);
                assert_eq!(u64::try_from(t.lookup(i as usize, a)).unwrap(), expect);
            }
        }
    }

    #[test]
    fn reduce_example() {
        let m = modulus(13, 4);
        let g = LutGeometry::with_k(4, 36864, 2).unwrap();
        let (r, trace) = reduce_lut(&operand(200, 8), &m, &g).unwrap();
        assert_eq!(u64::try_from(r.value()).unwrap(), 5);
        assert_eq!(trace.total_cycles, latency_lut_based(4, 2));
    }

    #[test]
    fn reduce_exact_multiple_and_low_half() {
        let m = modulus(13, 4);
        let g = LutGeometry::with_k(4, 36864, 2).unwrap();
        let engine = LutEngine::new(m.clone(), g).unwrap();
        // High part = M, low part = 0: an exact multiple of M * 2^n.
        let a = operand(13 << 4, 8);
        assert!(engine.reduce(&a).unwrap().result.value().is_zero());
        // High half zero: only the low addend and adjust path run.
        for v in 0..16u64 {
            let red = engine.reduce(&operand(v, 8)).unwrap();
            assert_eq!(red.result.value(), mod_oracle(&operand(v, 8), &m).value());
        }
    }

    #[test]
    fn reduce_rejects_width_mismatch() {
        let m = modulus(13, 4);
        let g = LutGeometry::with_k(4, 36864, 2).unwrap();
        let engine = LutEngine::new(m, g).unwrap();
        assert!(matches!(
            engine.reduce(&operand(5, 4)),
            Err(Error::ConfigMismatch(_))
        ));
        let m8 = modulus(200, 8);
        assert!(LutEngine::new(m8, g).is_err());
    }

    #[test]
    fn second_round_examples() {
        let m = modulus(13, 4);
        let t = precompute_tables(&m, 2, 2, 4);
        // Below 2^n: unchanged.
        assert_eq!(
            u64::try_from(&second_round(&BigUint::from(9u8), &m, &t)).unwrap(),
            9
        );
        // 2^n: (16 mod 13) + 0 = 3.
        assert_eq!(
            u64::try_from(&second_round(&BigUint::from(16u8), &m, &t)).unwrap(),
            3
        );
        // 2^n + 5: 3 + 5 = 8.
        assert_eq!(
            u64::try_from(&second_round(&BigUint::from(21u8), &m, &t)).unwrap(),
            8
        );
    }

    #[test]
    fn table_serialization_round_trip() {
        let m = modulus(0b1101_1011, 8);
        let t = precompute_tables(&m, 3, 3, 9);
        let mut buf = Vec::new();
        write_table(&mut buf, &t).unwrap();
        let back = read_table(&mut &buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn table_file_layout_is_pinned() {
        let m = modulus(13, 4);
        let t = precompute_tables(&m, 1, 1, 4);
        let mut buf = Vec::new();
        write_table(&mut buf, &t).unwrap();
        let mut expect = Vec::new();
        expect.extend_from_slice(b"MRLUT\0v1");
        for v in [4u32, 1, 1, 4, 1] {
            expect.extend_from_slice(&v.to_le_bytes());
        }
        expect.extend_from_slice(b"d");
        expect.push(0); // (0 * 16) mod 13
        expect.push(3); // (1 * 16) mod 13
        assert_eq!(buf, expect);
    }

    #[test]
    fn table_reader_rejects_out_of_range_entries() {
        let m = modulus(13, 4);
        let t = precompute_tables(&m, 1, 1, 4);
        let mut buf = Vec::new();
        write_table(&mut buf, &t).unwrap();
        let last = buf.len() - 1;
        buf[last] = 13; // not below the modulus
        assert!(read_table(&mut &buf[..]).is_err());
    }
}
