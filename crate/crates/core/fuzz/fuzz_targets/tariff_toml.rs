#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::ResourceTariff;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tariff) = ResourceTariff::from_toml(text) {
        let again = ResourceTariff::from_toml(&tariff.to_toml()).expect("own output parses");
        assert_eq!(again, tariff);
    }
});
