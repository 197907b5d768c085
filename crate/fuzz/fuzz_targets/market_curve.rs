#![no_main]

use libfuzzer_sys::fuzz_target;
use tccva::curves::MarketCurve;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(curve) = MarketCurve::parse(text) {
            // whatever parses must be a valid survival curve
            let s = curve.survival(1.0);
            assert!((0.0..=1.0).contains(&s));
        }
    }
});
