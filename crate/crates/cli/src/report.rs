//! JSON encodings shared by the subcommands. Complex numbers are `[re, im]`;
//! non-finite reals become the strings `"inf"`, `"-inf"` and `"nan"`.

use pfkit_core::mat2::{Mat2, Vec2, C64};
use serde_json::{json, Value};

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn cx(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn vec2(v: &Vec2) -> Value {
    json!([cx(v.c0), cx(v.c1)])
}

pub fn mat(m: &Mat2) -> Value {
    json!([[cx(m.m00), cx(m.m01)], [cx(m.m10), cx(m.m11)]])
}

/// Fixed-width scientific notation used in CSV output; round-trips every
/// finite double.
pub fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
