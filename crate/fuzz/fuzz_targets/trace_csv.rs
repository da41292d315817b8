#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = traffic_stl::io::parse_trace_csv(text) {
        if let Ok(traces) = traffic_stl::io::traces_from_rows(&rows) {
            for trace in &traces {
                let (t0, t1) = trace.time_domain();
                assert!(t0 <= t1);
                for name in trace.channel_names() {
                    let signal = trace.channel(name).unwrap();
                    assert!(signal.value_at(t0).is_ok());
                }
            }
        }
    }
});
