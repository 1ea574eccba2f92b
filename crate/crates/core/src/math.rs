/// `x^n` by repeated squaring; exact for small integer powers of exactly
/// representable values.
pub(crate) fn powi(x: f64, n: u32) -> f64 {
    let mut result = 1.0;
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}
