#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdta::pricing::{read_toll_schedule, write_toll_schedule};

fuzz_target!(|data: &[u8]| {
    if let Ok(alpha) = read_toll_schedule(data) {
        let mut buf = Vec::new();
        write_toll_schedule(&alpha, &mut buf).unwrap();
        assert_eq!(read_toll_schedule(buf.as_slice()).unwrap(), alpha);
    }
});
