#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = traffic_stl::sim::parse_scenario_config(text) {
        // parsed configurations are already validated
        assert!(config.validate().is_ok());
    }
});
