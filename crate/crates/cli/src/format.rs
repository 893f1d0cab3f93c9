//! Fixed float formatting shared by every artifact.

use fswt_core::{OperatorMatrix, SectorTag};
use serde_json::{Map, Number, Value};

/// 17 significant digits, lowercase scientific, signed two-digit-minimum
/// exponent: `-1.0000000000000001e-01`. Negative zero prints as zero.
pub fn float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.16e}");
    let Some((mantissa, exp)) = s.split_once('e') else {
        return s; // inf / NaN
    };
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// JSON number carrying exactly the text of [`float`]. Non-finite values become null.
pub fn json_float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(float(x).parse::<Number>().expect("formatted float is a JSON number"))
}

/// `{dim, sector, nnz, entries: [[row, col, re, im], …]}` with entries in row-major order.
pub fn operator_json(op: &OperatorMatrix) -> Value {
    let mut m = Map::new();
    m.insert("dim".into(), op.dim().into());
    let sector = match op.sector() {
        SectorTag::Fock { sites, n_up, n_down } => {
            let mut s = Map::new();
            s.insert("sites".into(), sites.into());
            s.insert("n_up".into(), n_up.into());
            s.insert("n_down".into(), n_down.into());
            Value::Object(s)
        }
        SectorTag::Generic { .. } => Value::Null,
    };
    m.insert("sector".into(), sector);
    m.insert("nnz".into(), op.nnz().into());
    let entries = op
        .triplets()
        .map(|(r, c, z)| Value::Array(vec![r.into(), c.into(), json_float(z.re), json_float(z.im)]))
        .collect();
    m.insert("entries".into(), Value::Array(entries));
    Value::Object(m)
}

/// One CSV row; `None` cells stay empty.
pub fn csv_row(cells: &[Option<f64>]) -> String {
    let mut s = cells.iter().map(|c| c.map(float).unwrap_or_default()).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}
