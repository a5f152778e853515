#![no_main]

use libfuzzer_sys::fuzz_target;
use qsteer::DensityMatrix;
use qsteer_cli::matrix::{parse_complex, parse_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for token in text.split_whitespace().take(64) {
        if let Some(z) = parse_complex(token) {
            assert!(z.re.is_finite() && z.im.is_finite());
        }
    }
    if let Ok(m) = parse_matrix(text) {
        assert_eq!(m.nrows(), m.ncols());
        if m.nrows() <= 32 {
            if let Ok(rho) = DensityMatrix::new(m) {
                assert!((rho.trace().re - 1.0).abs() <= 1e-9);
            }
        }
    }
});
