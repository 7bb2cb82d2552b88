#![no_main]

use libfuzzer_sys::fuzz_target;
use widomlab_cli::cache::{decode_records, encode_record};

fuzz_target!(|data: &[u8]| {
    let decoded = decode_records(data);
    let lines = data.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
    assert!(decoded.records.len() + decoded.corrupt.len() <= lines);
    // every accepted record re-encodes to a line that decodes identically
    for (key, value) in &decoded.records {
        let line = encode_record(*key, &value.to_string());
        let again = decode_records(line.as_bytes());
        assert_eq!(again.records.len(), 1);
        assert_eq!(&again.records[0].1, value);
    }
});
