#![no_main]

use libfuzzer_sys::fuzz_target;
use markov_regress::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_json_str(s) {
        let hash = config.config_hash().expect("valid configs hash");
        let schedule = config.checkpoint_schedule();
        assert!(schedule.windows(2).all(|w| w[0] < w[1]));
        assert!(schedule.last().is_some_and(|t| *t <= config.horizon));
        let text = serde_json::to_string(&config).expect("valid configs serialise");
        let again = ExperimentConfig::from_json_str(&text).expect("serialised configs parse");
        assert_eq!(again.config_hash().expect("hash"), hash);
    }
});
