#![no_main]

use libfuzzer_sys::fuzz_target;
use markov_regress::regression::Problem;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(problem) = Problem::from_json_str(s) {
        let risk = problem.excess_risk(problem.w_star());
        assert!(risk.abs() <= 1e-9, "excess risk at the optimum is {risk}");
        let text = problem.to_json_string().expect("valid problems serialise");
        Problem::from_json_str(&text).expect("serialised problems parse");
    }
});
