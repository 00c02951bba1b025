#![no_main]

use libfuzzer_sys::fuzz_target;
use ptrmt_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::from_json(text) {
        let again = RunConfig::from_json(&config.to_json()).expect("normalized config reparses");
        assert_eq!(again, config);
    }
});
