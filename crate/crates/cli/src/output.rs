use fibra::GroupElement;
use serde::Serialize;
use serde_json::{json, Value};

/// A scalar rounded to 15 significant digits. JSON has no infinities, so
/// non-finite values become strings.
pub fn scalar(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
        json!(rounded)
    } else {
        json!(x.to_string())
    }
}

/// A group element at full precision: `{kind, theta}` or `{kind, w, x, y, z}`.
pub fn element(g: &GroupElement) -> Value {
    to_value(g)
}

pub fn elements(gs: &[GroupElement]) -> Value {
    Value::Array(gs.iter().map(element).collect())
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn render(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use fibra::Versor;

    #[test]
    fn scalars_keep_fifteen_digits() {
        assert_eq!(scalar(std::f64::consts::PI), json!(3.14159265358979));
        assert_eq!(scalar(1.0), json!(1.0));
        assert_eq!(scalar(-2.5e-9), json!(-2.5e-9));
        assert_eq!(scalar(f64::INFINITY), json!("inf"));
    }

    #[test]
    fn elements_round_trip_exactly() {
        for g in [GroupElement::u1(0.1234567890123456789), GroupElement::su2(Versor::exp([0.3, -1.1, 2.0]))] {
            let text = serde_json::to_string(&element(&g)).unwrap();
            let back: GroupElement = serde_json::from_str(&text).unwrap();
            assert_eq!(back.distance(&g), 0.0);
            assert_eq!(back, g);
        }
    }
}
