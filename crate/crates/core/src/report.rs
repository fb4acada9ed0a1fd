//! CSV output shared by the scans. Floats are written with 17 significant
//! digits so that a written table parses back to the same values.

use std::io::Write;

pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(R::header())?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string<R: CsvRow>(rows: &[R]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Row(f64);

    impl CsvRow for Row {
        fn header() -> &'static [&'static str] {
            &["value"]
        }
        fn fields(&self) -> Vec<String> {
            vec![fmt_f64(self.0)]
        }
    }

    #[test]
    fn floats_round_trip() {
        let xs = [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567];
        let text = to_csv_string(&xs.map(Row));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("value"));
        for (line, x) in lines.zip(xs) {
            assert_eq!(line.parse::<f64>().unwrap(), x);
        }
        assert!(!text.contains('\r'));
    }
}
