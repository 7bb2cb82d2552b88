#![no_main]

use libfuzzer_sys::fuzz_target;
use widomlab_cli::descriptors::{format_domain, parse_domain, AffineWeight, FunctionSpec, SymbolSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = parse_domain(text) {
        assert_eq!(parse_domain(&format_domain(&d)).unwrap(), d);
    }
    if let Ok(s) = text.parse::<SymbolSpec>() {
        assert_eq!(s.to_string().parse::<SymbolSpec>().unwrap(), s);
    }
    if let Ok(f) = text.parse::<FunctionSpec>() {
        assert_eq!(f.to_string().parse::<FunctionSpec>().unwrap(), f);
    }
    if let Ok(w) = text.parse::<AffineWeight>() {
        assert_eq!(w.to_string().parse::<AffineWeight>().unwrap(), w);
    }
});
