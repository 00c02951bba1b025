#![no_main]

use libfuzzer_sys::fuzz_target;
use ptrmt_cli::parse_config_args;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // one argument per line; --config would touch the filesystem
    let args: Vec<&str> = text.lines().collect();
    if args.iter().any(|a| a.starts_with("--config")) {
        return;
    }
    let _ = parse_config_args(std::iter::once("ptrmt").chain(args));
});
