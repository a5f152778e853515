#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = qsteer_cli::parse_config(text) {
        let rounds = config.round_list();
        assert!(!rounds.is_empty());
        assert!(!config.experiment_id().is_empty() || config.name.is_some());
        config.validate().expect("a parsed config stays valid");
    }
});
