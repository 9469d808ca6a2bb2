//! Bit-exact Keccak-f[1600] and the SHA3 sponge (FIPS 202 ordering).
//!
//! Lane `A[x, y]` is word `x + 5y`; bit `z` of a lane is bit `z` of the
//! word, and lanes serialise little-endian.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LANES: usize = 25;
pub const LANE_BITS: usize = 64;
pub const STATE_BITS: usize = 1600;
pub const ROUNDS: usize = 24;

/// Rotation offsets `r[x][y]`.
pub const RHO_OFFSETS: [[u32; 5]; 5] = [
    [0, 36, 3, 41, 18],
    [1, 44, 10, 45, 2],
    [62, 6, 43, 15, 61],
    [28, 55, 25, 21, 56],
    [27, 20, 39, 8, 14],
];

/// Round constants indexed from 0, generated from the degree-8 LFSR.
pub static ROUND_CONSTANTS: std::sync::LazyLock<[u64; ROUNDS]> = std::sync::LazyLock::new(|| {
    let mut rc = [0u64; ROUNDS];
    for (ir, word) in rc.iter_mut().enumerate() {
        for j in 0..=6 {
            if lfsr_bit(j + 7 * ir) {
                *word |= 1u64 << ((1usize << j) - 1);
            }
        }
    }
    rc
});

/// Output bit `t` of the x^8 + x^6 + x^5 + x^4 + 1 LFSR.
fn lfsr_bit(t: usize) -> bool {
    let t = t % 255;
    if t == 0 {
        return true;
    }
    // bit i of `r` holds R[i]
    let mut r: u16 = 0x01;
    for _ in 0..t {
        r <<= 1;
        let r8 = (r >> 8) & 1;
        r ^= r8 | (r8 << 4) | (r8 << 5) | (r8 << 6);
        r &= 0xff;
    }
    r & 1 == 1
}

/// Constant XORed in by iota for round `i` in `1..=24`.
pub fn round_constant(i: usize) -> Result<u64> {
    if !(1..=ROUNDS).contains(&i) {
        return Err(Error::RoundOutOfRange(i));
    }
    Ok(ROUND_CONSTANTS[i - 1])
}

#[inline]
pub fn lane_index(x: usize, y: usize) -> usize {
    (x % 5) + 5 * (y % 5)
}

/// Destination `(y, 2x + 3y)` of lane `(x, y)` under pi.
#[inline]
pub fn pi_destination(x: usize, y: usize) -> (usize, usize) {
    (y % 5, (2 * x + 3 * y) % 5)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct KeccakState(pub [u64; LANES]);

impl fmt::Debug for KeccakState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.0.iter().map(|l| format!("{l:016x}")))
            .finish()
    }
}

impl Index<(usize, usize)> for KeccakState {
    type Output = u64;
    fn index(&self, (x, y): (usize, usize)) -> &u64 {
        &self.0[lane_index(x, y)]
    }
}

impl IndexMut<(usize, usize)> for KeccakState {
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut u64 {
        &mut self.0[lane_index(x, y)]
    }
}

impl KeccakState {
    pub fn zero() -> Self {
        KeccakState([0; LANES])
    }

    pub fn ones() -> Self {
        KeccakState([u64::MAX; LANES])
    }

    pub fn bit(&self, x: usize, y: usize, z: usize) -> bool {
        (self[(x, y)] >> (z % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, x: usize, y: usize, z: usize, bit: bool) {
        let mask = 1u64 << (z % 64);
        if bit {
            self[(x, y)] |= mask;
        } else {
            self[(x, y)] &= !mask;
        }
    }

    /// 5x5 cross-section at depth `z`, indexed `[y][x]`.
    pub fn slice(&self, z: usize) -> [[bool; 5]; 5] {
        let mut s = [[false; 5]; 5];
        for (y, row) in s.iter_mut().enumerate() {
            for (x, b) in row.iter_mut().enumerate() {
                *b = self.bit(x, y, z);
            }
        }
        s
    }

    /// Lanes `A[0..5, y]`.
    pub fn plane(&self, y: usize) -> [u64; 5] {
        std::array::from_fn(|x| self[(x, y)])
    }

    /// Lanes `A[x, 0..5]`.
    pub fn sheet(&self, x: usize) -> [u64; 5] {
        std::array::from_fn(|y| self[(x, y)])
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|l| l.count_ones()).sum()
    }

    pub fn to_bytes(&self) -> [u8; 200] {
        let mut out = [0u8; 200];
        for (chunk, lane) in out.chunks_exact_mut(8).zip(&self.0) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; 200]) -> Self {
        let mut s = Self::zero();
        for (lane, chunk) in s.0.iter_mut().zip(bytes.chunks_exact(8)) {
            *lane = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        s
    }

    /// XORs a rate-sized byte block into the leading lanes.
    pub fn xor_block(&mut self, block: &[u8]) {
        debug_assert!(block.len().is_multiple_of(8) && block.len() <= 200);
        for (lane, chunk) in self.0.iter_mut().zip(block.chunks_exact(8)) {
            *lane ^= u64::from_le_bytes(chunk.try_into().unwrap());
        }
    }

    pub fn complement(&self) -> Self {
        KeccakState(self.0.map(|l| !l))
    }
}

pub fn column_parity(a: &KeccakState) -> [u64; 5] {
    std::array::from_fn(|x| (0..5).fold(0, |c, y| c ^ a[(x, y)]))
}

pub fn theta(a: &KeccakState) -> KeccakState {
    let c = column_parity(a);
    let d: [u64; 5] = std::array::from_fn(|x| c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1));
    let mut out = *a;
    for y in 0..5 {
        for (x, dx) in d.iter().enumerate() {
            out[(x, y)] ^= dx;
        }
    }
    out
}

/// Lane-wise rotation in place (no permutation).
pub fn rho(a: &KeccakState) -> KeccakState {
    let mut out = *a;
    for x in 0..5 {
        for y in 0..5 {
            out[(x, y)] = a[(x, y)].rotate_left(RHO_OFFSETS[x][y]);
        }
    }
    out
}

pub fn pi(a: &KeccakState) -> KeccakState {
    let mut out = KeccakState::zero();
    for x in 0..5 {
        for y in 0..5 {
            out[pi_destination(x, y)] = a[(x, y)];
        }
    }
    out
}

pub fn rho_pi(a: &KeccakState) -> KeccakState {
    let mut out = KeccakState::zero();
    for x in 0..5 {
        for y in 0..5 {
            out[pi_destination(x, y)] = a[(x, y)].rotate_left(RHO_OFFSETS[x][y]);
        }
    }
    out
}

pub fn chi(a: &KeccakState) -> KeccakState {
    let mut out = *a;
    for y in 0..5 {
        for x in 0..5 {
            out[(x, y)] = a[(x, y)] ^ (!a[(x + 1, y)] & a[(x + 2, y)]);
        }
    }
    out
}

/// Iota for round `i` in `1..=24`.
pub fn iota(a: &KeccakState, i: usize) -> Result<KeccakState> {
    let mut out = *a;
    out[(0, 0)] ^= round_constant(i)?;
    Ok(out)
}

pub fn round(a: &KeccakState, i: usize) -> Result<KeccakState> {
    iota(&chi(&rho_pi(&theta(a))), i)
}

pub fn keccak_f(a: &KeccakState) -> KeccakState {
    let mut s = *a;
    for rc in ROUND_CONSTANTS.iter() {
        s = chi(&rho_pi(&theta(&s)));
        s[(0, 0)] ^= rc;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "sha3-256")]
    Sha3_256,
    #[serde(rename = "sha3-512")]
    Sha3_512,
}

impl Variant {
    pub fn rate_bits(self) -> usize {
        match self {
            Variant::Sha3_256 => 1088,
            Variant::Sha3_512 => 576,
        }
    }

    pub fn rate_bytes(self) -> usize {
        self.rate_bits() / 8
    }

    pub fn capacity_bits(self) -> usize {
        STATE_BITS - self.rate_bits()
    }

    pub fn digest_bytes(self) -> usize {
        match self {
            Variant::Sha3_256 => 32,
            Variant::Sha3_512 => 64,
        }
    }

    pub fn from_digest_len(bytes: usize) -> Option<Self> {
        match bytes {
            32 => Some(Variant::Sha3_256),
            64 => Some(Variant::Sha3_512),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sha3_256 => "sha3-256",
            Variant::Sha3_512 => "sha3-512",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sha3-256" | "256" => Ok(Variant::Sha3_256),
            "sha3-512" | "512" => Ok(Variant::Sha3_512),
            other => Err(Error::Parse(format!("unknown variant `{other}`"))),
        }
    }
}

/// SHA3 padding: domain bits `01`, then pad10*1, to a whole number of blocks.
pub fn pad(message: &[u8], variant: Variant) -> Vec<Vec<u8>> {
    let rate = variant.rate_bytes();
    let mut padded = message.to_vec();
    padded.push(0x06);
    while !padded.len().is_multiple_of(rate) {
        padded.push(0);
    }
    *padded.last_mut().unwrap() |= 0x80;
    padded.chunks(rate).map(<[u8]>::to_vec).collect()
}

/// Reads the digest from the leading lanes.
pub fn squeeze(state: &KeccakState, variant: Variant) -> Vec<u8> {
    state.to_bytes()[..variant.digest_bytes()].to_vec()
}

pub fn sha3_digest(message: &[u8], variant: Variant) -> Vec<u8> {
    let mut s = KeccakState::zero();
    for block in pad(message, variant) {
        s.xor_block(&block);
        s = keccak_f(&s);
    }
    squeeze(&s, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_state() -> impl Strategy<Value = KeccakState> {
        prop::array::uniform25(any::<u64>()).prop_map(KeccakState)
    }

    #[test]
    fn round_constants_match_published() {
        // First, second and last round constants of the standard table.
        assert_eq!(ROUND_CONSTANTS[0], 0x0000000000000001);
        assert_eq!(ROUND_CONSTANTS[1], 0x0000000000008082);
        assert_eq!(ROUND_CONSTANTS[2], 0x800000000000808A);
        assert_eq!(ROUND_CONSTANTS[23], 0x8000000080008008);
        assert_eq!(round_constant(1).unwrap(), 1);
        assert_eq!(round_constant(0), Err(Error::RoundOutOfRange(0)));
        assert_eq!(round_constant(25), Err(Error::RoundOutOfRange(25)));
    }

    #[test]
    fn rho_offsets_follow_generation_rule() {
        let mut expect = [[0u32; 5]; 5];
        let (mut x, mut y) = (1usize, 0usize);
        for t in 0..24u32 {
            expect[x][y] = ((t + 1) * (t + 2) / 2) % 64;
            (x, y) = (y, (2 * x + 3 * y) % 5);
        }
        assert_eq!(expect, RHO_OFFSETS);
        assert_eq!(RHO_OFFSETS[1][0], 1);
        assert_eq!(RHO_OFFSETS[3][1], 55);
    }

    #[test]
    fn theta_one_hot_sets_eleven_bits() {
        let mut s = KeccakState::zero();
        s.set_bit(0, 0, 0, true);
        // oracle: direct bit-level evaluation
        let mut expect = KeccakState::zero();
        for x in 0..5 {
            for y in 0..5 {
                for z in 0..64 {
                    let c = |cx: usize, cz: usize| {
                        (0..5).fold(false, |acc, cy| acc ^ s.bit(cx, cy, cz))
                    };
                    let d = c((x + 4) % 5, z) ^ c((x + 1) % 5, (z + 63) % 64);
                    expect.set_bit(x, y, z, s.bit(x, y, z) ^ d);
                }
            }
        }
        let out = theta(&s);
        assert_eq!(out, expect);
        assert_eq!(out.count_ones(), 11);
    }

    #[test]
    fn rho_pi_moves_known_lanes() {
        let mut s = KeccakState::zero();
        s[(3, 1)] = 1;
        s[(0, 0)] = 0xdead;
        let out = rho_pi(&s);
        assert_eq!(out[(1, 4)], 1u64 << 55);
        assert_eq!(out[(0, 0)], 0xdead);
        assert_eq!(pi_destination(1, 0), (0, 2));
    }

    #[test]
    fn chi_matches_row_table() {
        // 32-entry oracle from the row equation, bit by bit
        let table: Vec<u8> = (0..32u8)
            .map(|row| {
                let b = |i: usize| (row >> (i % 5)) & 1;
                (0..5).fold(0u8, |acc, x| {
                    acc | ((b(x) ^ ((1 ^ b(x + 1)) & b(x + 2))) << x)
                })
            })
            .collect();
        for pattern in 0..32u8 {
            let mut s = KeccakState::zero();
            for x in 0..5 {
                s.set_bit(x, 2, 17, (pattern >> x) & 1 == 1);
            }
            let out = chi(&s);
            let got = (0..5).fold(0u8, |acc, x| acc | ((out.bit(x, 2, 17) as u8) << x));
            assert_eq!(got, table[pattern as usize], "pattern {pattern:05b}");
        }
        assert_eq!(chi(&KeccakState::zero()), KeccakState::zero());
        assert_eq!(chi(&KeccakState::ones()), KeccakState::ones());
    }

    #[test]
    fn zero_state_permutation_known_answer() {
        // Keccak-f[1600] applied to the all-zero state, first and last lanes.
        let out = keccak_f(&KeccakState::zero());
        assert_eq!(out.0[0], 0xF1258F7940E1DDE7);
        assert_eq!(out.0[1], 0x84D5CCF933C0478A);
        assert_eq!(out.0[24], 0xEAF1FF7B5CECA249);
    }

    #[test]
    fn known_digests() {
        let hex = |v: Vec<u8>| hex::encode(v);
        assert_eq!(
            hex(sha3_digest(b"", Variant::Sha3_256)),
            "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a"
        );
        assert_eq!(
            hex(sha3_digest(b"abc", Variant::Sha3_256)),
            "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532"
        );
        assert_eq!(
            hex(sha3_digest(b"abc", Variant::Sha3_512)),
            "b751850b1a57168a5693cd924b6b096e08f621827444f70d884f5d0240d2712e\
             10e116e9192af3c91a7ec57647e3934057340b4cf408d5a56592f8274eec53f0"
        );
    }

    #[test]
    fn padding_fills_blocks() {
        for len in [0usize, 1, 134, 135, 136, 137, 300] {
            let blocks = pad(&vec![0xaa; len], Variant::Sha3_256);
            assert_eq!(blocks.len(), len / 136 + 1);
            assert!(blocks.iter().all(|b| b.len() == 136));
        }
    }

    proptest! {
        #[test]
        fn theta_delta_independent_of_row(s in arb_state()) {
            let out = theta(&s);
            for x in 0..5 {
                let d0 = out[(x, 0)] ^ s[(x, 0)];
                for y in 1..5 {
                    prop_assert_eq!(out[(x, y)] ^ s[(x, y)], d0);
                }
            }
        }

        #[test]
        fn rho_pi_preserves_lane_weights(s in arb_state()) {
            let out = rho_pi(&s);
            let mut a: Vec<u32> = s.0.iter().map(|l| l.count_ones()).collect();
            let mut b: Vec<u32> = out.0.iter().map(|l| l.count_ones()).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(pi(&rho(&s)), out);
        }

        #[test]
        fn chi_is_row_local(s in arb_state(), y in 0usize..5, noise in any::<u64>()) {
            let mut t = s;
            t[(0, (y + 1) % 5)] ^= noise;
            prop_assert_eq!(chi(&s).plane(y), chi(&t).plane(y));
        }

        #[test]
        fn iota_touches_one_lane(s in arb_state(), i in 1usize..=24) {
            let out = iota(&s, i).unwrap();
            for k in 1..25 {
                prop_assert_eq!(out.0[k], s.0[k]);
            }
            prop_assert_eq!(iota(&out, i).unwrap(), s);
        }

        #[test]
        fn keccak_f_is_round_fold(s in arb_state()) {
            let mut t = s;
            for i in 1..=24 {
                t = iota(&chi(&pi(&rho(&theta(&t)))), i).unwrap();
            }
            prop_assert_eq!(keccak_f(&s), t);
        }

        #[test]
        fn distinct_inputs_distinct_outputs(a in arb_state(), b in arb_state()) {
            prop_assume!(a != b);
            prop_assert_ne!(keccak_f(&a), keccak_f(&b));
        }

        #[test]
        fn digest_lengths(msg in prop::collection::vec(any::<u8>(), 0..300)) {
            prop_assert_eq!(sha3_digest(&msg, Variant::Sha3_256).len(), 32);
            prop_assert_eq!(sha3_digest(&msg, Variant::Sha3_512).len(), 64);
        }
    }
}
