//! Run configurations as the CLI reads them: the sweep part of a TOML file.
#![no_main]
use libfuzzer_sys::fuzz_target;
use swipt_core::rpregion::SweepConfig;

fuzz_target!(|data: &str| {
    let Ok(cfg) = toml::from_str::<SweepConfig>(data) else {
        return;
    };
    if cfg.validate().is_err() {
        return;
    }
    // Grids of valid configs are finite and sorted.
    for &r_p in &cfg.r_p {
        if let Ok(grid) = cfg.noi_grid(r_p) {
            assert!(grid.iter().all(|p| p.is_finite()));
            assert!(grid.windows(2).all(|w| w[0] <= w[1]));
        }
    }
    let text = toml::to_string(&cfg).expect("serialize");
    let back: SweepConfig = toml::from_str(&text).expect("re-parse");
    assert_eq!(back.r_p.len(), cfg.r_p.len());
});
