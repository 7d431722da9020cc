//! Minimal CSV writer. Floats are printed with 17 significant digits so that
//! they round-trip.

use std::fmt::Write;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(v) => fmt_num(&mut s, *v),
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Text(t) if t.contains([',', '"', '\n']) => {
                        write!(s, "\"{}\"", t.replace('"', "\"\"")).unwrap()
                    }
                    Cell::Text(t) => s.push_str(t),
                }
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_num(s: &mut String, v: f64) {
    if v.is_finite() {
        write!(s, "{v:.16e}").unwrap();
    } else {
        write!(s, "{v}").unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_floats() {
        let mut t = Table::new(&["x", "name"]);
        let v = 0.1 + 0.2;
        t.push(vec![v.into(), "a,b".into()]);
        let csv = t.to_csv();
        let field = csv.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), v);
        assert!(csv.contains("\"a,b\""));
    }
}
