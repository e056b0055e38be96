#![no_main]

use libfuzzer_sys::fuzz_target;
use markov_regress::harness::{cell_name, grid_cells, grid_from_json_str};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = grid_from_json_str(s) {
        if let Ok(cells) = grid_cells(&grid, 256) {
            assert!(!cells.is_empty() && cells.len() <= 256);
            for (i, c) in cells.iter().enumerate() {
                assert!(!cell_name(i, c).contains('/'));
            }
        }
    }
});
