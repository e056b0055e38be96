#![no_main]

use libfuzzer_sys::fuzz_target;
use markov_regress::chain::ChainSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(chain) = ChainSpec::from_json_str(s) {
        let text = chain.to_json_string().expect("valid chains serialise");
        let again = ChainSpec::from_json_str(&text).expect("serialised chains parse");
        assert_eq!(chain, again);
    }
});
