#![no_main]

use libfuzzer_sys::fuzz_target;

use traffic_stl::io::VerdictSummary;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(summary) = serde_json::from_str::<VerdictSummary>(text) {
        // summaries that deserialize must survive a serde round trip,
        // including the non-finite robustness encoding
        let json = serde_json::to_string(&summary).expect("serialize");
        let back: VerdictSummary = serde_json::from_str(&json).expect("reparse");
        let same = back.summary_robustness == summary.summary_robustness
            || (back.summary_robustness.is_nan() && summary.summary_robustness.is_nan());
        assert!(same);
    }
});
