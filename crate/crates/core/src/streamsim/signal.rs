// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Control word carried alongside every streamed pixel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlSignal {
    pub valid: bool,
    pub h_start: bool,
    pub h_end: bool,
    pub v_start: bool,
    pub v_end: bool,
}

impl ControlSignal {
    pub const IDLE: ControlSignal =
        ControlSignal { valid: false, h_start: false, h_end: false, v_start: false, v_end: false };

    /// Flags of the pixel at `(row, col)` of a `width x height` frame.
    pub fn for_pixel(row: u64, col: u64, width: u64, height: u64) -> Self {
        Self {
            valid: true,
            h_start: col == 0,
            h_end: col + 1 == width,
            v_start: row == 0 && col == 0,
            v_end: row + 1 == height && col + 1 == width,
        }
    }

    /// Packed as `valid | h_start << 1 | h_end << 2 | v_start << 3 | v_end << 4`.
    pub fn bits(&self) -> u8 {
        u8::from(self.valid)
            | u8::from(self.h_start) << 1
            | u8::from(self.h_end) << 2
            | u8::from(self.v_start) << 3
            | u8::from(self.v_end) << 4
    }

    pub fn from_bits(b: u8) -> Self {
        Self { valid: b & 1 != 0, h_start: b & 2 != 0, h_end: b & 4 != 0, v_start: b & 8 != 0, v_end: b & 16 != 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_roundtrip() {
        for b in 0..32u8 {
            assert_eq!(ControlSignal::from_bits(b).bits(), b);
        }
    }

    #[test]
    fn unit_width_row_starts_and_ends_together() {
        let s = ControlSignal::for_pixel(0, 0, 1, 1);
        assert!(s.h_start && s.h_end && s.v_start && s.v_end);
        let s = ControlSignal::for_pixel(2, 0, 4, 4);
        assert!(s.h_start && !s.h_end && !s.v_start && !s.v_end);
    }
}
