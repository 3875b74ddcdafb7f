#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdta::network::Network;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(net) = Network::from_json_str(s) {
        // Anything accepted must survive a round trip.
        let back = Network::from_json_str(&net.to_def().to_json_string().unwrap()).unwrap();
        assert_eq!(back.links().len(), net.links().len());
    }
});
