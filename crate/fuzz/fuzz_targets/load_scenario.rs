#![no_main]

use edrf::scenario::{parse_scenario, ModelParams, Scenario};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_scenario(text) {
        // anything that validates must survive a round trip and build
        assert_eq!(parse_scenario(&spec.to_json()).unwrap(), spec);
        if let Ok(scenario) = Scenario::build(spec, ModelParams::default()) {
            let _ = scenario.output_grid(None);
        }
    }
});
