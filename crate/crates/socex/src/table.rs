//! CSV output with a leading `# socex <table> schema <n>` comment line.
//! Bump [`SCHEMA_VERSION`] whenever a column changes.

pub const SCHEMA_VERSION: u32 = 1;

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    name: &'static str,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Table {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer, name }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let body = self.writer.into_inner().expect("flush to memory");
        let mut out = format!("# socex {} schema {}\n", self.name, SCHEMA_VERSION);
        out.push_str(&String::from_utf8(body).expect("csv of utf-8 cells"));
        out
    }
}

/// Parses a table written by [`Table::finish`]: (header, rows).
pub fn parse(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), csv::Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(str::to_owned).collect();
    let rows =
        reader.records().map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_commas() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.row(["1", "x,y"]);
        let text = t.finish();
        assert!(text.starts_with("# socex demo schema 1\n"));
        let (h, rows) = parse(&text).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, [["1", "x,y"]]);
    }
}
