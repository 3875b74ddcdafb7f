#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdta::demand::DemandFile;
use mixdta::workbench::build_nguyen;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(file) = DemandFile::from_json_str(s) else { return };
    let (def, _, clock) = build_nguyen(&Default::default());
    let net = mixdta::network::Network::from_def(&def).unwrap();
    if let Ok(total) = file.resolve(&net, clock.intervals) {
        assert!(total.total_vehicles().is_finite());
    }
});
