//! The JSON bundle written next to the CSV files of a sweep.
#![no_main]
use libfuzzer_sys::fuzz_target;
use swipt_core::rpregion::{curve_csv, Region};

fuzz_target!(|data: &[u8]| {
    let Ok(region) = serde_json::from_slice::<Region>(data) else {
        return;
    };
    let _ = curve_csv(&region.gapa);
    for c in &region.noi {
        let _ = curve_csv(c);
        let _ = c.trajectory();
    }
});
