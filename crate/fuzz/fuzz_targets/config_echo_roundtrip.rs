#![no_main]

use libfuzzer_sys::fuzz_target;
use rankreduce::experiment::{parse_config, parse_echo};

// Anything the parser accepts must survive the CSV comment echo unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = parse_config(text) else {
        return;
    };
    let echoed: String = cfg
        .echo_lines()
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect();
    assert_eq!(parse_echo(&echoed).expect("echo must parse"), cfg);
});
