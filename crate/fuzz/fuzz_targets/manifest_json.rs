#![no_main]

use libfuzzer_sys::fuzz_target;
use ptrmt_cli::manifest::RunManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_json(text) {
        let _ = m.config.normalize();
    }
});
