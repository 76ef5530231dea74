//! Transmit frame construction.
//!
//! A frame is `[SP | Π_k(spread(data ∥ VP)) | guard]`: the group's
//! synchronization pilot, the user-interleaved repetition-coded chips
//! (verification-pilot chips included) and a silent guard interval.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;

const VP_STREAM: u64 = 0x5650;
const INTERLEAVER_STREAM: u64 = 0x494c;

/// Slot geometry of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    /// Data bits per frame.
    pub l_b: usize,
    /// Chips per bit.
    pub n_c: usize,
    /// Verification pilot length in chips.
    pub l_q: usize,
    /// Synchronization pilot length in slots.
    pub l_p: usize,
    /// Guard interval in slots.
    pub l_g: usize,
}

impl Default for FrameLayout {
    fn default() -> Self {
        Self {
            l_b: 1024,
            n_c: 10,
            l_q: 320,
            l_p: 511,
            l_g: 10,
        }
    }
}

impl FrameLayout {
    pub fn new(l_b: usize, n_c: usize, l_q: usize, l_p: usize, l_g: usize) -> Result<Self> {
        let layout = Self { l_b, n_c, l_q, l_p, l_g };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("l_b", self.l_b),
            ("n_c", self.n_c),
            ("l_q", self.l_q),
            ("l_p", self.l_p),
            ("l_g", self.l_g),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        if self.l_q % self.n_c != 0 {
            return Err(invalid("l_q", format!("{} not divisible by n_c = {}", self.l_q, self.n_c)));
        }
        Ok(())
    }

    /// Total frame length `L_s` in slots.
    pub fn l_s(&self) -> usize {
        self.l_p + self.chip_len() + self.l_g
    }

    /// Verification pilot bits before spreading.
    pub fn vp_bits(&self) -> usize {
        self.l_q / self.n_c
    }

    /// Coded data chips, `L_b·N_c`.
    pub fn data_chips(&self) -> usize {
        self.l_b * self.n_c
    }

    /// Interleaved chip section length, `L_b·N_c + L_q`.
    pub fn chip_len(&self) -> usize {
        self.data_chips() + self.l_q
    }

    /// First slot of the chip section.
    pub fn chip_start(&self) -> usize {
        self.l_p
    }

    /// First guard slot.
    pub fn guard_start(&self) -> usize {
        self.l_p + self.chip_len()
    }
}

/// One user's transmitted frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub data_bits: Vec<u8>,
    /// Interleaved chips, `L_b·N_c + L_q` long.
    pub chips: Vec<u8>,
    pub sp: Vec<u8>,
    /// Full slot sequence, `L_s` long.
    pub symbols: Vec<u8>,
}

/// Bipolar (±1) periodic cross-correlation normalized by the length.
pub fn periodic_xcorr(a: &[u8], b: &[u8], lag: usize) -> f64 {
    let n = a.len();
    let mut acc = 0i64;
    for i in 0..n {
        let x = 2 * i64::from(a[i]) - 1;
        let y = 2 * i64::from(b[(i + lag) % n]) - 1;
        acc += x * y;
    }
    acc as f64 / n as f64
}

fn lfsr_degree(len: usize) -> Option<u32> {
    let n = len + 1;
    if n >= 4 && n.is_power_of_two() {
        Some(n.trailing_zeros())
    } else {
        None
    }
}

/// Runs the recurrence `a[t+n] = Σ c_i a[t+i]` from state `0…01` and returns
/// the sequence if its period is the maximal `2^n - 1`.
fn maximal_sequence(degree: u32, coeffs: u32) -> Option<Vec<u8>> {
    let n = degree as usize;
    let len = (1usize << n) - 1;
    let start: u32 = 1;
    let mask = (1u32 << n) - 1;
    let mut state = start;
    let mut out = Vec::with_capacity(len);
    for step in 0..len {
        out.push((state & 1) as u8);
        let fb = (state & coeffs).count_ones() & 1;
        state = ((state >> 1) | (fb << (n - 1))) & mask;
        if state == start && step + 1 < len {
            return None;
        }
    }
    (state == start).then_some(out)
}

/// Family of maximal-length sequences with pairwise bounded cross-correlation,
/// one per user group.
#[derive(Debug, Clone)]
pub struct SpFamily {
    sequences: Vec<Vec<u8>>,
}

/// Largest normalized bipolar cross-correlation tolerated between two groups.
pub const SP_XCORR_LIMIT: f64 = 0.2;

impl SpFamily {
    /// Builds `groups` sequences of length `l_p`. Candidate feedback
    /// polynomials are scanned in increasing order and kept greedily when
    /// they are maximal and stay under [`SP_XCORR_LIMIT`] against every
    /// sequence already chosen.
    pub fn new(l_p: usize, groups: usize) -> Result<Self> {
        let degree = lfsr_degree(l_p).ok_or(Error::PilotLength(l_p))?;
        let mut sequences: Vec<Vec<u8>> = Vec::with_capacity(groups);
        let mut coeffs = 1u32;
        while sequences.len() < groups {
            if coeffs >= (1 << degree) {
                return Err(invalid("groups", format!("only {} pilots of length {l_p} available", sequences.len())));
            }
            if let Some(seq) = maximal_sequence(degree, coeffs) {
                let ok = sequences.iter().all(|other| {
                    (0..l_p).all(|lag| periodic_xcorr(other, &seq, lag).abs() <= SP_XCORR_LIMIT)
                });
                if ok {
                    sequences.push(seq);
                }
            }
            coeffs += 2;
        }
        Ok(Self { sequences })
    }

    pub fn get(&self, group: usize) -> &[u8] {
        &self.sequences[group]
    }

    pub fn pilots(&self) -> &[Vec<u8>] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// The synchronization pilot of `group`, an m-sequence of length `l_p`.
pub fn gen_sp(group: usize, l_p: usize) -> Result<Vec<u8>> {
    Ok(SpFamily::new(l_p, group + 1)?.sequences.swap_remove(group))
}

/// Pseudo-random verification pilot bits shared by all users. Draws are
/// repeated until the ones fraction lies in `[0.25, 0.75]`.
pub fn gen_vp(seed: u64, length: usize) -> Vec<u8> {
    let mut rng = stream_rng(seed, VP_STREAM);
    loop {
        let bits: Vec<u8> = (0..length).map(|_| rng.random_range(0..2u8)).collect();
        let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
        let frac = ones / length.max(1) as f64;
        if length == 0 || (0.25..=0.75).contains(&frac) {
            return bits;
        }
    }
}

/// Repeats every bit `n_c` times.
pub fn spread(bits: &[u8], n_c: usize) -> Vec<u8> {
    bits.iter().flat_map(|&b| std::iter::repeat_n(b, n_c)).collect()
}

/// User-specific chip permutation: `interleaved[i] = coded[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
    inv: Vec<u32>,
}

impl Interleaver {
    /// Seeded Fisher–Yates shuffle of `0..length`.
    pub fn new(seed: u64, length: usize) -> Self {
        let mut perm: Vec<u32> = (0..length as u32).collect();
        let mut rng = stream_rng(seed, INTERLEAVER_STREAM);
        perm.shuffle(&mut rng);
        let mut inv = vec![0u32; length];
        for (i, &p) in perm.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Self { perm, inv }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Coded index carried by interleaved position `i`.
    #[inline]
    pub fn source(&self, i: usize) -> usize {
        self.perm[i] as usize
    }

    /// Interleaved position of coded index `c`.
    #[inline]
    pub fn position(&self, c: usize) -> usize {
        self.inv[c] as usize
    }

    pub fn interleave<T: Copy>(&self, coded: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| coded[p as usize]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, interleaved: &[T]) -> Vec<T> {
        self.inv.iter().map(|&i| interleaved[i as usize]).collect()
    }
}

pub fn build_interleaver(seed: u64, length: usize) -> Interleaver {
    Interleaver::new(seed, length)
}

/// Assembles `[sp | Π(spread(data ∥ vp)) | zeros(L_g)]`.
pub fn assemble_frame(
    data_bits: &[u8],
    layout: &FrameLayout,
    vp: &[u8],
    sp: &[u8],
    interleaver: &Interleaver,
) -> Result<Frame> {
    check_len("data bits", layout.l_b, data_bits.len())?;
    check_len("verification pilot", layout.vp_bits(), vp.len())?;
    check_len("synchronization pilot", layout.l_p, sp.len())?;
    check_len("interleaver", layout.chip_len(), interleaver.len())?;

    let mut coded = spread(data_bits, layout.n_c);
    coded.extend(spread(vp, layout.n_c));
    let chips = interleaver.interleave(&coded);

    let mut symbols = Vec::with_capacity(layout.l_s());
    symbols.extend_from_slice(sp);
    symbols.extend_from_slice(&chips);
    symbols.resize(layout.l_s(), 0);

    Ok(Frame {
        data_bits: data_bits.to_vec(),
        chips,
        sp: sp.to_vec(),
        symbols,
    })
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { what, expected, got });
    }
    Ok(())
}

/// Inverse of [`assemble_frame`] on hard symbols: deinterleave, then
/// majority-despread. Ties resolve to 0. Returns `(data bits, vp bits)`.
pub fn deassemble(symbols: &[u8], layout: &FrameLayout, interleaver: &Interleaver) -> (Vec<u8>, Vec<u8>) {
    let chips = &symbols[layout.chip_start()..layout.guard_start()];
    let coded = interleaver.deinterleave(chips);
    let bits: Vec<u8> = coded
        .chunks(layout.n_c)
        .map(|c| {
            let ones = c.iter().filter(|&&x| x == 1).count();
            u8::from(2 * ones > c.len())
        })
        .collect();
    let (data, vp) = bits.split_at(layout.l_b);
    (data.to_vec(), vp.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn default_layout_is_11081_slots() {
        let l = FrameLayout::default();
        assert_eq!(l.l_s(), 10240 + 320 + 511 + 10);
        assert_eq!(l.l_s(), 11081);
        // 11.081 ms at 1 µs per slot
        assert!((l.l_s() as f64 * 1e-6 - 11.081e-3).abs() < 1e-12);
        assert_eq!(l.vp_bits(), 32);
    }

    #[test]
    fn layout_validation() {
        assert!(FrameLayout::new(8, 3, 10, 7, 2).is_err());
        assert!(FrameLayout::new(0, 3, 9, 7, 2).is_err());
        assert!(FrameLayout::new(8, 3, 9, 7, 2).is_ok());
    }

    fn bipolar_autocorr(seq: &[u8], lag: usize) -> f64 {
        periodic_xcorr(seq, seq, lag)
    }

    #[test]
    fn sp_is_m_sequence() {
        let sp = gen_sp(0, 511).unwrap();
        assert_eq!(sp.len(), 511);
        assert_eq!(sp.iter().filter(|&&b| b == 1).count(), 256);
        assert!((bipolar_autocorr(&sp, 0) - 1.0).abs() < 1e-15);
        for lag in 1..511 {
            assert!((bipolar_autocorr(&sp, lag) + 1.0 / 511.0).abs() < 1e-12, "lag {lag}");
        }
    }

    #[test]
    fn sp_groups_have_low_cross_correlation() {
        let fam = SpFamily::new(511, 4).unwrap();
        for a in 0..4 {
            for b in (a + 1)..4 {
                let worst = (0..511)
                    .map(|lag| periodic_xcorr(fam.get(a), fam.get(b), lag).abs())
                    .fold(0.0, f64::max);
                assert!(worst <= 0.2, "groups {a},{b}: {worst}");
            }
        }
        assert_eq!(gen_sp(1, 511).unwrap(), fam.get(1));
    }

    #[test]
    fn sp_rejects_bad_length() {
        assert!(matches!(gen_sp(0, 500), Err(Error::PilotLength(500))));
        assert!(gen_sp(0, 31).is_ok());
    }

    #[test]
    fn vp_examples() {
        let l = FrameLayout::default();
        let a = gen_vp(11, l.l_q / l.n_c);
        assert_eq!(a.len(), 32);
        assert_eq!(a, gen_vp(11, 32));
        for seed in 0..50 {
            let v = gen_vp(seed, 32);
            let frac = v.iter().filter(|&&b| b == 1).count() as f64 / 32.0;
            assert!((0.25..=0.75).contains(&frac));
        }
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(&[1, 0], 3), vec![1, 1, 1, 0, 0, 0]);
        assert_eq!(spread(&[1, 0, 1], 1), vec![1, 0, 1]);
        assert_eq!(spread(&vec![1u8; 1024], 10).len(), 10240);
    }

    #[test]
    fn interleaver_examples() {
        let len = 10560;
        let pi = Interleaver::new(3, len);
        let data: Vec<u32> = (0..len as u32).collect();
        assert_eq!(pi.deinterleave(&pi.interleave(&data)), data);
        for c in 0..len {
            assert_eq!(pi.source(pi.position(c)), c);
        }
        assert_eq!(pi, Interleaver::new(3, len));
        let perms: Vec<Interleaver> = (1..=10).map(|k| Interleaver::new(k, len)).collect();
        for a in 0..10 {
            for b in (a + 1)..10 {
                assert_ne!(perms[a], perms[b]);
            }
        }
    }

    fn random_bits(seed: u64, n: usize) -> Vec<u8> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn assembled_frame_structure() {
        let l = FrameLayout::default();
        let sp = gen_sp(0, l.l_p).unwrap();
        let vp = gen_vp(1, l.vp_bits());
        let pi = Interleaver::new(5, l.chip_len());
        let data = random_bits(2, l.l_b);
        let f = assemble_frame(&data, &l, &vp, &sp, &pi).unwrap();
        assert_eq!(f.symbols.len(), 11081);
        assert_eq!(&f.symbols[..l.l_p], &sp[..]);
        assert!(f.symbols[l.guard_start()..].iter().all(|&s| s == 0));
        let (d, v) = deassemble(&f.symbols, &l, &pi);
        assert_eq!(d, data);
        assert_eq!(v, vp);
    }

    #[test]
    fn all_zero_payload_only_lights_pilot() {
        let l = FrameLayout::default();
        let sp = gen_sp(0, l.l_p).unwrap();
        let pi = Interleaver::new(5, l.chip_len());
        let f = assemble_frame(&vec![0; l.l_b], &l, &vec![0; l.vp_bits()], &sp, &pi).unwrap();
        assert!(f.chips.iter().all(|&c| c == 0));
        assert!(f.symbols[l.l_p..].iter().all(|&c| c == 0));
    }

    #[test]
    fn assemble_rejects_length_mismatch() {
        let l = FrameLayout::default();
        let sp = gen_sp(0, l.l_p).unwrap();
        let pi = Interleaver::new(5, l.chip_len());
        let err = assemble_frame(&[0; 10], &l, &vec![0; l.vp_bits()], &sp, &pi);
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn round_trip_and_ones_invariant(seed in 0u64..10_000, iseed in 0u64..10_000) {
                let l = FrameLayout::new(64, 4, 16, 31, 3).unwrap();
                let sp = gen_sp(0, l.l_p).unwrap();
                let vp = gen_vp(seed, l.vp_bits());
                let pi = Interleaver::new(iseed, l.chip_len());
                let data = random_bits(seed ^ 0xff, l.l_b);
                let f = assemble_frame(&data, &l, &vp, &sp, &pi).unwrap();
                let (d, v) = deassemble(&f.symbols, &l, &pi);
                prop_assert_eq!(d, data.clone());
                prop_assert_eq!(v, vp.clone());
                let mut coded = spread(&data, l.n_c);
                coded.extend(spread(&vp, l.n_c));
                let ones = |x: &[u8]| x.iter().filter(|&&b| b == 1).count();
                prop_assert_eq!(ones(&coded), ones(&f.chips));
                prop_assert!(f.symbols[l.guard_start()..].iter().all(|&s| s == 0));
            }
        }
    }
}
