#![no_main]
use libfuzzer_sys::fuzz_target;
use swipt_core::AmplitudeDistribution;

fuzz_target!(|data: &str| {
    let Ok(d) = AmplitudeDistribution::from_json(data) else {
        return;
    };
    // Anything accepted satisfies the invariants and survives a round trip.
    d.validate().expect("accepted law is valid");
    let again = AmplitudeDistribution::from_json(&d.to_json().unwrap()).expect("re-parse");
    assert_eq!(again, d);
});
