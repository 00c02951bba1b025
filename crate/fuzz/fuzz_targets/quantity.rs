#![no_main]

use libfuzzer_sys::fuzz_target;
use ptrmt_cli::quantity::Quantity;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = text.parse::<Quantity>() {
        assert!(q.value.is_finite() && q.value >= 0.0);
        assert_eq!(q.to_string().parse::<Quantity>().unwrap(), q);
    }
});
