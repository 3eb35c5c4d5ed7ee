//! CSV assembly with round-trip-exact numeric formatting.

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:.16e}", x)
    }
}

pub struct Csv {
    body: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            body: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "ragged CSV row");
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn into_string(self) -> String {
        self.body
    }
}

pub fn cell_f64(x: f64) -> String {
    fmt_f64(x)
}

pub fn cell_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn cell_bool(b: bool) -> String {
    if b { "true".into() } else { "false".into() }
}

pub fn cell_opt_bool(b: Option<bool>) -> String {
    b.map(cell_bool).unwrap_or_default()
}
