#![no_main]

use libfuzzer_sys::fuzz_target;
use nlreg::report::read_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = read_csv(text) {
            assert_eq!(table.columns, table.layout.columns());
            assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
        }
    }
});
