#![no_main]

use libfuzzer_sys::fuzz_target;
use widomlab_cli::descriptors::Grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = text.parse::<Grid>() {
        let values = grid.values();
        assert_eq!(values.len(), grid.len());
        assert!(!values.is_empty());
        assert_eq!(grid.to_string().parse::<Grid>().unwrap(), grid);
    }
});
