//! The hybrid reduction engine: split the 2n-bit operand, reduce the high
//! bits through parallel lookup plus serial accumulation, reduce the low
//! bits by shift-subtract iteration, then fuse the partial results and
//! adjust into the canonical range.

use std::io::{self, Read, Write};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::iterative::{run_iterations, IterConfig};
use crate::lut::{precompute_tables, read_table, write_table, LookupTable};
use crate::modmath::{segment_value, slice_bits, slice_value, Modulus, Operand, MAX_SEGMENT_BITS};
use crate::perf::{ceil_log2, latency_hybrid_core, latency_hybrid_end_to_end};
use crate::trace::{event, ReductionTrace, TraceUnit};

/// Split point that balances the two workloads: the lookup path takes
/// `d + 1` cycles (one lookup, then `d = (n-m)/k` serial adds) while the
/// iterative path takes `m`, so `m = (n + k) / (k + 1)` equalizes them.
pub fn balanced_m(n: u32, k: u32) -> u32 {
    (n + k) / (k + 1)
}

/// A design point's operand partition: the high `n - m` bits go through the
/// lookup path, the low `n + m` bits through the iterative path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridSplit {
    n: u32,
    k: u32,
    m: u32,
    d: u32,
}

impl HybridSplit {
    pub fn new(n: u32, k: u32, m: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::ConfigMismatch(format!(
                "modulus width n = {n} must be at least 2"
            )));
        }
        if k < 1 || k > MAX_SEGMENT_BITS {
            return Err(Error::ConfigMismatch(format!(
                "segment width k = {k} outside supported range 1..={MAX_SEGMENT_BITS}"
            )));
        }
        if m > n {
            return Err(Error::ConfigMismatch(format!(
                "split point m = {m} exceeds the modulus width {n}"
            )));
        }
        Ok(Self {
            n,
            k,
            m,
            d: (n - m).div_ceil(k),
        })
    }

    pub fn balanced(n: u32, k: u32) -> Result<Self> {
        Self::new(n, k, balanced_m(n, k))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Lookup-path segment count, `ceil((n - m) / k)`.
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn high_width(&self) -> u32 {
        self.n - self.m
    }

    pub fn low_width(&self) -> u32 {
        self.n + self.m
    }

    /// Input width of the dedicated carry table: the accumulated lookup sum
    /// stays below `d * M`, so its bits above position n fit in
    /// `ceil(log2(d + 1))` positions.
    pub fn overflow_bits(&self) -> u32 {
        (ceil_log2(u64::from(self.d) + 1) as u32).max(1)
    }
}

/// Splits a 2n-bit operand into the lookup-path high bits and the
/// iterative-path low bits: `high * 2^(n+m) + low == a`.
pub fn split_operand(a: &Operand, split: &HybridSplit) -> Result<(BigUint, BigUint)> {
    if a.width() != 2 * split.n() {
        return Err(Error::ConfigMismatch(format!(
            "operand is {} bits; split expects {}",
            a.width(),
            2 * split.n()
        )));
    }
    let high = if split.high_width() == 0 {
        BigUint::zero()
    } else {
        slice_bits(a, split.low_width(), split.high_width())?
    };
    let low = slice_bits(a, 0, split.low_width())?;
    Ok((high, low))
}

/// Exact running sum of the looked-up residues, one serial add per cycle.
pub fn serial_accumulate(values: &[BigUint]) -> (BigUint, u64) {
    assert!(!values.is_empty(), "nothing to accumulate");
    let sum = values.iter().fold(BigUint::zero(), |acc, v| acc + v);
    (sum, values.len() as u64)
}

/// Outcome of the fuse-and-adjust stage.
#[derive(Debug, Clone)]
pub struct FuseAdjust {
    pub value: BigUint,
    /// Sum before the conditional subtractions; bounded by `2^n + 3M`.
    pub pre_adjust: BigUint,
    pub subtractions: u32,
}

/// Fuses the three partial results with one addition and adjusts into
/// `[0, M)` with conditional subtractions. The input bounds
/// (`acc_low < 2^n`, `overflow_residue < M`, `iter_result < 2M`) cap the
/// fused sum below `2^n + 3M`, so at most four subtractions fire; a
/// violation signals an engine bug.
pub fn fuse_and_adjust(
    acc_low: &BigUint,
    overflow_residue: &BigUint,
    iter_result: &BigUint,
    m: &Modulus,
) -> FuseAdjust {
    let n = m.width();
    assert!(
        acc_low.bits() <= u64::from(n),
        "accumulator low bits exceed n"
    );
    assert!(overflow_residue < m.value(), "carry residue not reduced");
    assert!(
        iter_result < &(m.value() << 1u32),
        "iterative result not below 2M"
    );
    let pre_adjust = acc_low + overflow_residue + iter_result;
    let mut value = pre_adjust.clone();
    let mut subtractions = 0u32;
    while &value >= m.value() {
        value -= m.value();
        subtractions += 1;
    }
    assert!(subtractions <= 4, "adjust needed {subtractions} subtractions");
    FuseAdjust {
        value,
        pre_adjust,
        subtractions,
    }
}

/// The two precomputed table banks of a hybrid design: `main` covers the
/// high-bit segments at exponents `n + m + k*i`, `overflow` reduces the
/// accumulated carry bits at exponent n in one lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridTables {
    main: LookupTable,
    overflow: LookupTable,
}

impl HybridTables {
    pub fn build(m_mod: &Modulus, split: &HybridSplit) -> Result<Self> {
        if m_mod.width() != split.n() {
            return Err(Error::ConfigMismatch(format!(
                "modulus is {} bits; split expects {}",
                m_mod.width(),
                split.n()
            )));
        }
        let main = precompute_tables(m_mod, split.k(), split.d(), split.n() + split.m());
        let overflow = precompute_tables(m_mod, split.overflow_bits(), 1, split.n());
        Ok(Self { main, overflow })
    }

    pub fn main(&self) -> &LookupTable {
        &self.main
    }

    pub fn overflow(&self) -> &LookupTable {
        &self.overflow
    }

    /// Bits the carry table occupies; it rides in the spare capacity of the
    /// first block alongside one main table.
    pub fn overflow_storage_bits(&self) -> u64 {
        self.overflow.bits_per_table()
    }

    /// Whether one main table plus the carry table fit a single block, i.e.
    /// the design needs exactly `d` blocks.
    pub fn fits_capacity(&self, capacity_bits: u64) -> bool {
        if self.main.count() == 0 {
            return self.overflow_storage_bits() <= capacity_bits;
        }
        self.main.bits_per_table() + self.overflow_storage_bits() <= capacity_bits
    }

    fn check_matches(&self, m_mod: &Modulus, split: &HybridSplit) -> Result<()> {
        let ok = self.main.modulus() == m_mod
            && self.main.base_exponent() == split.n() + split.m()
            && self.main.input_bits() == split.k()
            && self.main.count() == split.d()
            && self.overflow.modulus() == m_mod
            && self.overflow.base_exponent() == split.n()
            && self.overflow.input_bits() == split.overflow_bits()
            && self.overflow.count() == 1;
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigMismatch(
                "tables were not built for this modulus and split".into(),
            ))
        }
    }
}

/// Full result of one hybrid reduction, with the intermediates the fusion
/// and adjust bounds are checked against.
#[derive(Debug, Clone)]
pub struct HybridReduction {
    pub result: Operand,
    pub trace: ReductionTrace,
    /// Serial accumulation of the main-table lookups.
    pub acc: BigUint,
    pub overflow_residue: BigUint,
    /// Raw iterative-path state, in `[0, 2M)` (the low bits unchanged when
    /// m = 0).
    pub iter_raw: BigUint,
    /// Fused sum before the adjust subtractions.
    pub pre_adjust: BigUint,
    pub adjust_subtractions: u32,
}

/// Reusable hybrid engine. Tables are immutable after construction and
/// distinct reductions may run concurrently against them.
#[derive(Debug, Clone)]
pub struct HybridEngine {
    split: HybridSplit,
    modulus: Modulus,
    tables: HybridTables,
}

impl HybridEngine {
    pub fn new(modulus: Modulus, split: HybridSplit) -> Result<Self> {
        let tables = HybridTables::build(&modulus, &split)?;
        Ok(Self {
            split,
            modulus,
            tables,
        })
    }

    /// Wraps previously built (e.g. deserialized) tables, verifying they
    /// match the modulus and split.
    pub fn from_parts(modulus: Modulus, split: HybridSplit, tables: HybridTables) -> Result<Self> {
        tables.check_matches(&modulus, &split)?;
        Ok(Self {
            split,
            modulus,
            tables,
        })
    }

    pub fn split(&self) -> &HybridSplit {
        &self.split
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn tables(&self) -> &HybridTables {
        &self.tables
    }

    pub fn reduce(&self, a: &Operand) -> Result<HybridReduction> {
        let split = &self.split;
        let m_mod = &self.modulus;
        let n = split.n();
        let m = split.m();
        let d = split.d();

        let (high, low) = split_operand(a, split)?;

        // Lookup path: parallel lookup, then serial accumulation.
        let lookups: Vec<BigUint> = segment_value(&high, split.high_width(), split.k())
            .iter()
            .map(|s| self.tables.main().lookup(s.index_i as usize, s.value).clone())
            .collect();
        debug_assert_eq!(lookups.len(), d as usize);
        let acc = if lookups.is_empty() {
            BigUint::zero()
        } else {
            serial_accumulate(&lookups).0
        };

        // Second round: the carry bits of the accumulated sum in one lookup.
        let carry = u64::try_from(&acc >> n).expect("carry bounded by the segment count");
        debug_assert!(carry < u64::from(d) + 1);
        let overflow_residue = self.tables.overflow().lookup(0, carry).clone();
        let acc_low = slice_value(&acc, 0, n);

        // Iterative path on the low bits; raw (non-canonical) state, the
        // adjust stage owns the final subtractions. With m = 0 there is
        // nothing to iterate: the low half is already below 2^n <= 2M.
        let (iter_raw, fired) = if m == 0 {
            (low, Vec::new())
        } else {
            let cfg = IterConfig::new(split.low_width(), n)?;
            let low_op = Operand::new(low, split.low_width())
                .expect("low slice fits its declared width");
            run_iterations(&low_op, m_mod, &cfg)?
        };

        let fused = fuse_and_adjust(&acc_low, &overflow_residue, &iter_raw, m_mod);

        let trace = self.build_trace(&fired, fused.subtractions);
        Ok(HybridReduction {
            result: Operand::new(fused.value, n).expect("reduced value fits the modulus width"),
            trace,
            acc,
            overflow_residue,
            iter_raw,
            pre_adjust: fused.pre_adjust,
            adjust_subtractions: fused.subtractions,
        })
    }

    fn build_trace(&self, fired: &[bool], subtractions: u32) -> ReductionTrace {
        let split = &self.split;
        let (n, k, m, d) = (split.n(), split.k(), split.m(), split.d());
        let core = latency_hybrid_core(n, k, m, 0);
        let total = latency_hybrid_end_to_end(n, k, m, 0);

        let mut events = Vec::with_capacity(d as usize + m as usize + 5);
        if d > 0 {
            events.push(event(
                1,
                TraceUnit::Lookup,
                format!("{d} parallel segment lookups"),
            ));
            for j in 1..=u64::from(d) {
                events.push(event(
                    1 + j,
                    TraceUnit::SerialAdd,
                    format!("acc += lookup[{}]", j - 1),
                ));
            }
        }
        for (idx, f) in fired.iter().enumerate() {
            let shift = m - idx as u32;
            events.push(event(
                idx as u64 + 1,
                TraceUnit::Subtract,
                format!("shift {shift}: {}", if *f { "subtract" } else { "hold" }),
            ));
        }
        events.push(event(
            core + 1,
            TraceUnit::Lookup,
            "carry-bit residue lookup",
        ));
        events.push(event(
            core + 2,
            TraceUnit::Fuse,
            "acc low bits + carry residue + iterative result",
        ));
        events.push(event(core + 3, TraceUnit::Adjust, "conditional subtract"));
        events.push(event(
            core + 4,
            TraceUnit::Adjust,
            format!("{subtractions} subtraction(s) performed in total"),
        ));
        ReductionTrace::new(events, total)
    }
}

/// One-shot hybrid reduction against caller-supplied tables; validates that
/// the tables belong to `(m_mod, split)`.
pub fn reduce_hybrid(
    a: &Operand,
    m_mod: &Modulus,
    split: &HybridSplit,
    tables: &HybridTables,
) -> Result<(Operand, ReductionTrace)> {
    let engine = HybridEngine::from_parts(m_mod.clone(), *split, tables.clone())?;
    let red = engine.reduce(a)?;
    Ok((red.result, red.trace))
}

const BUNDLE_MAGIC: &[u8; 8] = b"MRHYB\0v1";

/// Serializes a scheme bundle: a small header with (n, k, m, width_tree)
/// followed by the two table banks in the standard table format.
pub fn write_bundle(
    w: &mut impl Write,
    split: &HybridSplit,
    width_tree: u32,
    tables: &HybridTables,
) -> io::Result<()> {
    w.write_all(BUNDLE_MAGIC)?;
    for v in [split.n(), split.k(), split.m(), width_tree] {
        w.write_all(&v.to_le_bytes())?;
    }
    write_table(w, tables.main())?;
    write_table(w, tables.overflow())?;
    Ok(())
}

pub fn read_bundle(r: &mut impl Read) -> Result<(HybridSplit, u32, HybridTables)> {
    let corrupt = |detail: &str| Error::Parse {
        what: "scheme bundle file",
        detail: detail.into(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BUNDLE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 4];
    let mut fields = [0u32; 4];
    for f in &mut fields {
        r.read_exact(&mut word)?;
        *f = u32::from_le_bytes(word);
    }
    let [n, k, m, width_tree] = fields;
    let split = HybridSplit::new(n, k, m)?;
    let main = read_table(r)?;
    let overflow = read_table(r)?;
    let tables = HybridTables { main, overflow };
    tables.check_matches(tables.main.modulus(), &split)?;
    Ok((split, width_tree, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::{derive_geometry, LutEngine, LutGeometry};
    use crate::modmath::mod_oracle;

    fn modulus(v: u64, n: u32) -> Modulus {
        Modulus::new(BigUint::from(v), n).unwrap()
    }

    fn operand(v: u64, w: u32) -> Operand {
        Operand::new(BigUint::from(v), w).unwrap()
    }

    #[test]
    fn balanced_m_examples() {
        assert_eq!(balanced_m(128, 8), 15);
        assert_eq!(balanced_m(8192, 2), 2731);
        assert_eq!(balanced_m(8, 8), 1);
    }

    #[test]
    fn split_examples() {
        let split = HybridSplit::new(4, 2, 1).unwrap();
        let (high, low) = split_operand(&operand(0b1011_0100, 8), &split).unwrap();
        assert_eq!(u64::try_from(&high).unwrap(), 0b101);
        assert_eq!(u64::try_from(&low).unwrap(), 0b10100);

        let pure_lut = HybridSplit::new(4, 2, 0).unwrap();
        let (high, low) = split_operand(&operand(0b1011_0100, 8), &pure_lut).unwrap();
        assert_eq!(u64::try_from(&high).unwrap(), 0b1011);
        assert_eq!(u64::try_from(&low).unwrap(), 0b0100);

        let pure_iter = HybridSplit::new(4, 2, 4).unwrap();
        let (high, low) = split_operand(&operand(0b1011_0100, 8), &pure_iter).unwrap();
        assert!(high.is_zero());
        assert_eq!(u64::try_from(&low).unwrap(), 0b1011_0100);
    }

    #[test]
    fn split_reconstructs_operand() {
        let split = HybridSplit::new(4, 2, 1).unwrap();
        for av in 0..256u64 {
            let a = operand(av, 8);
            let (high, low) = split_operand(&a, &split).unwrap();
            assert_eq!((high << split.low_width()) + low, *a.value());
        }
    }

    #[test]
    fn reduce_example() {
        let m = modulus(13, 4);
        for mm in [1u32, 2] {
            let split = HybridSplit::new(4, 2, mm).unwrap();
            let engine = HybridEngine::new(m.clone(), split).unwrap();
            let red = engine.reduce(&operand(200, 8)).unwrap();
            assert_eq!(u64::try_from(red.result.value()).unwrap(), 5);
            assert_eq!(
                red.trace.total_cycles,
                latency_hybrid_end_to_end(4, 2, mm, 0)
            );
        }
        assert_eq!(balanced_m(4, 2), 2);
    }

    #[test]
    fn reduce_zero() {
        let m = modulus(13, 4);
        let engine = HybridEngine::new(m, HybridSplit::balanced(4, 2).unwrap()).unwrap();
        assert!(engine.reduce(&operand(0, 8)).unwrap().result.value().is_zero());
    }

    #[test]
    fn degenerate_m0_matches_lut_engine() {
        let g = LutGeometry::with_k(4, 36864, 2).unwrap();
        for mv in 8..=15u64 {
            let m = modulus(mv, 4);
            let lut = LutEngine::new(m.clone(), g).unwrap();
            let hybrid =
                HybridEngine::new(m.clone(), HybridSplit::new(4, 2, 0).unwrap()).unwrap();
            for av in 0..256u64 {
                let a = operand(av, 8);
                assert_eq!(
                    hybrid.reduce(&a).unwrap().result,
                    lut.reduce(&a).unwrap().result,
                    "A={av} M={mv}"
                );
            }
        }
    }

    #[test]
    fn degenerate_mn_matches_iterative_engine() {
        use crate::iterative::{reduce_iterative, IterConfig};
        let cfg = IterConfig::new(8, 4).unwrap();
        for mv in 8..=15u64 {
            let m = modulus(mv, 4);
            let hybrid =
                HybridEngine::new(m.clone(), HybridSplit::new(4, 2, 4).unwrap()).unwrap();
            for av in 0..256u64 {
                let a = operand(av, 8);
                let (iter_result, _) = reduce_iterative(&a, &m, &cfg).unwrap();
                assert_eq!(hybrid.reduce(&a).unwrap().result, iter_result);
            }
        }
    }

    #[test]
    fn serial_accumulate_examples() {
        let zeros = vec![BigUint::zero(); 3];
        assert_eq!(serial_accumulate(&zeros), (BigUint::zero(), 3));
        let vals: Vec<BigUint> = [3u8, 6, 9].iter().map(|&v| BigUint::from(v)).collect();
        assert_eq!(serial_accumulate(&vals), (BigUint::from(18u8), 3));
    }

    #[test]
    fn fuse_examples() {
        let m = modulus(13, 4);
        let out = fuse_and_adjust(&BigUint::zero(), &BigUint::zero(), &BigUint::zero(), &m);
        assert!(out.value.is_zero());
        assert_eq!(out.subtractions, 0);

        let out = fuse_and_adjust(
            &BigUint::from(5u8),
            &BigUint::from(3u8),
            &BigUint::from(12u8),
            &m,
        );
        assert_eq!(u64::try_from(&out.value).unwrap(), 7);
        assert_eq!(u64::try_from(&out.pre_adjust).unwrap(), 20);
    }

    #[test]
    fn fuse_bound_over_exhaustive_inputs() {
        // Sweep the full precondition ranges for n = 4 moduli and record the
        // worst-case subtraction count: it never exceeds 4.
        let mut max_subs = 0;
        for mv in 8..=15u64 {
            let m = modulus(mv, 4);
            for acc in 0..16u64 {
                for ov in 0..mv {
                    for it in 0..(2 * mv) {
                        let out = fuse_and_adjust(
                            &BigUint::from(acc),
                            &BigUint::from(ov),
                            &BigUint::from(it),
                            &m,
                        );
                        max_subs = max_subs.max(out.subtractions);
                        assert_eq!(
                            u64::try_from(&out.value).unwrap(),
                            (acc + ov + it) % mv
                        );
                    }
                }
            }
        }
        assert_eq!(max_subs, 4);
    }

    #[test]
    fn overflow_table_fits_spare_block_capacity() {
        // n = 128, k = 8, balanced m = 15: one 2^8-entry main table uses
        // 32768 of 36864 bits, the 2^4-entry carry table needs 2048 more.
        let n = 128;
        let geom = derive_geometry(n, 36864).unwrap();
        let split = HybridSplit::balanced(n, geom.k()).unwrap();
        assert_eq!(split.overflow_bits(), 4);
        let m = Modulus::new((BigUint::from(1u8) << 127u32) + 1u8, n).unwrap();
        let tables = HybridTables::build(&m, &split).unwrap();
        assert_eq!(tables.overflow_storage_bits(), 2048);
        assert!(tables.fits_capacity(36864));
    }

    #[test]
    fn tables_reject_mismatched_split() {
        let m = modulus(13, 4);
        let split = HybridSplit::new(4, 2, 1).unwrap();
        let other = HybridSplit::new(4, 2, 2).unwrap();
        let tables = HybridTables::build(&m, &split).unwrap();
        assert!(matches!(
            reduce_hybrid(&operand(200, 8), &m, &other, &tables),
            Err(Error::ConfigMismatch(_))
        ));
        let ok = reduce_hybrid(&operand(200, 8), &m, &split, &tables).unwrap();
        assert_eq!(u64::try_from(ok.0.value()).unwrap(), 5);
    }

    #[test]
    fn bundle_round_trip() {
        let m = modulus(201, 8);
        let split = HybridSplit::balanced(8, 2).unwrap();
        let tables = HybridTables::build(&m, &split).unwrap();
        let mut buf = Vec::new();
        write_bundle(&mut buf, &split, 3, &tables).unwrap();
        let (split2, wt, tables2) = read_bundle(&mut &buf[..]).unwrap();
        assert_eq!(split2, split);
        assert_eq!(wt, 3);
        assert_eq!(tables2, tables);
    }
}
