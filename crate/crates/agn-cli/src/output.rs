//! CSV formatting helpers.
//!
//! Schema (fixed): `c,kw,kappa,quantity,value_bits,regime,certified`.
//! Floats carry 12 significant digits so fixtures round-trip; missing or
//! out-of-validity values print the sentinel `NA`.

pub const CSV_HEADER: &str = "c,kw,kappa,quantity,value_bits,regime,certified";

/// 12 significant digits, round-trippable.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{:.11e}", v)
}

pub fn csv_row(
    c: f64,
    kw: f64,
    kappa: f64,
    quantity: &str,
    value_bits: Option<f64>,
    regime: &str,
    certified: bool,
) -> String {
    let value = match value_bits {
        Some(v) => sig12(v),
        None => "NA".to_string(),
    };
    format!(
        "{},{},{},{},{},{},{}",
        sig12(c),
        sig12(kw),
        sig12(kappa),
        quantity,
        value,
        regime,
        certified
    )
}
