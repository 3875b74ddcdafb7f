#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdta::workbench::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = Scenario::from_json_str(s) {
        let _ = sc.validate();
        let _ = sc.to_json_string();
    }
});
