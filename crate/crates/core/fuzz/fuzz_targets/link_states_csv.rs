#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdta::network::Network;
use mixdta::workbench::{build_nguyen, read_link_states};

fuzz_target!(|data: &[u8]| {
    let (def, _, _) = build_nguyen(&Default::default());
    let net = Network::from_def(&def).unwrap();
    if let Ok(states) = read_link_states(&net, data) {
        assert!(states.iter().all(|row| row.len() == net.links().len()));
    }
});
