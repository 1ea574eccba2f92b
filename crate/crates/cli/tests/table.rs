use liepnm::table::{sample_columns, Table};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        -10.0..10.0f64,
    ]
}

proptest! {
    #[test]
    fn printed_values_read_back_bit_for_bit(
        rows in prop::collection::vec(prop::collection::vec(finite(), 4), 1..20),
    ) {
        let mut header = vec!["r".to_string()];
        header.extend(sample_columns("s_sample", 3));
        let t = Table { header, rows };
        let text = t.to_csv_string();
        let back = Table::read_from(text.as_bytes()).unwrap();
        prop_assert_eq!(back.header, t.header);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
