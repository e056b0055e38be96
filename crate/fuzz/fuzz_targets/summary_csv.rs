#![no_main]

use libfuzzer_sys::fuzz_target;
use markov_regress::harness::{read_summary_csv, write_rows};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_summary_csv(data) {
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).expect("parsed rows serialise");
        let again = read_summary_csv(&buf[..]).expect("serialised rows parse");
        assert_eq!(rows.len(), again.len());
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.t, b.t);
            for (x, y) in [(a.mean_excess, b.mean_excess), (a.stderr, b.stderr), (a.min, b.min), (a.max, b.max)] {
                assert!(x == y || (x.is_nan() && y.is_nan()));
            }
        }
    }
});
