#![no_main]
use libfuzzer_sys::fuzz_target;
use swipt_core::SolveResult;

fuzz_target!(|data: &str| {
    if let Ok(res) = SolveResult::from_json(data) {
        res.distribution.validate().expect("accepted law is valid");
        let _ = res.to_json();
    }
});
