//! Rotation network between the state arrays and the Rho array.

use crate::keccak::RHO_OFFSETS;

/// Select value wired to a 1-bit rotation on every lane.
pub const SELECT_ROT1: u8 = 5;

/// 5 lanes × 64 multiplexers. Lane `y` has one input per sheet offset
/// `r[x, y]` plus a sixth input rotating by one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuxNetwork {
    offsets: [[u32; 6]; 5],
}

impl Default for MuxNetwork {
    fn default() -> Self {
        let mut offsets = [[0; 6]; 5];
        for (y, row) in offsets.iter_mut().enumerate() {
            for (x, o) in row.iter_mut().take(5).enumerate() {
                *o = RHO_OFFSETS[x][y];
            }
            row[SELECT_ROT1 as usize] = 1;
        }
        MuxNetwork { offsets }
    }
}

impl MuxNetwork {
    pub const LANES: usize = 5;
    pub const PER_LANE: usize = 64;
    pub const SELECT_BITS: u32 = 3;

    pub fn offset(&self, select: u8, y: usize) -> u32 {
        self.offsets[y][select as usize]
    }

    /// Routes one lane through the 64 multiplexers of lane `y`.
    pub fn route(&self, select: u8, y: usize, lane: u64) -> u64 {
        lane.rotate_left(self.offset(select, y))
    }

    /// Routes all five lanes with the single shared select value.
    pub fn route_all(&self, select: u8, lanes: [u64; 5]) -> [u64; 5] {
        std::array::from_fn(|y| self.route(select, y, lanes[y]))
    }

    pub fn multiplexers(&self) -> usize {
        Self::LANES * Self::PER_LANE
    }
}
