#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(formula) = traffic_stl::stl::parse(text) {
        // printed form must reparse to the identical structure
        let printed = formula.to_string();
        let reparsed = traffic_stl::stl::parse(&printed)
            .unwrap_or_else(|e| panic!("'{printed}' failed to reparse: {e}"));
        assert_eq!(reparsed, formula);
    }
});
