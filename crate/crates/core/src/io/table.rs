use crate::error::{Error, Result};
use crate::pipeline::DiffProfile;

/// Column-oriented table of profiles: a 1-based index column `d` followed by
/// named value columns, printed with 6 decimal places.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileTable {
    /// `#` lines emitted before the header, without the leading `# `.
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub index: Vec<u32>,
    /// `data[c][row]`
    pub data: Vec<Vec<f64>>,
}

impl ProfileTable {
    /// Builds a table from named columns of equal length.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        if let Some((name, c)) = columns.iter().find(|c| c.1.len() != rows) {
            return Err(Error::Input(format!(
                "column {name} has {} rows, expected {rows}",
                c.len()
            )));
        }
        let (names, data) = columns.into_iter().unzip();
        Ok(Self {
            comments: Vec::new(),
            columns: names,
            index: (1..=rows as u32).collect(),
            data,
        })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.index.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push('d');
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, d) in self.index.iter().enumerate() {
            out.push_str(&d.to_string());
            for col in &self.data {
                out.push_str(&format!(",{:.6}", col[r]));
            }
            out.push('\n');
        }
        out
    }
}

/// Table with one column per profile (`s1..sK`) and an optional `mean`.
pub fn write_profile_table(profiles: &[DiffProfile], mean: Option<&DiffProfile>) -> Result<String> {
    let mut cols: Vec<(String, Vec<f64>)> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("s{}", i + 1), p.values.clone()))
        .collect();
    if let Some(m) = mean {
        cols.push(("mean".into(), m.values.clone()));
    }
    Ok(ProfileTable::from_columns(cols)?.to_csv())
}

pub fn read_profile_table(text: &str) -> Result<ProfileTable> {
    let mut table = ProfileTable::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::format(0, "missing header line"))?;
        match line.strip_prefix('#') {
            Some(c) => table
                .comments
                .push(c.strip_prefix(' ').unwrap_or(c).to_string()),
            None => break (n, line),
        }
    };
    let mut names = header.split(',');
    if names.next() != Some("d") {
        return Err(Error::format(hline, "first column must be d"));
    }
    table.columns = names.map(str::to_string).collect();
    table.data = vec![Vec::new(); table.columns.len()];
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != table.columns.len() + 1 {
            return Err(Error::format(
                n,
                format!(
                    "row has {} fields, header has {}",
                    fields.len(),
                    table.columns.len() + 1
                ),
            ));
        }
        let d = fields[0]
            .parse()
            .map_err(|_| Error::format(n, format!("bad index {:?}", fields[0])))?;
        table.index.push(d);
        for (c, f) in fields[1..].iter().enumerate() {
            let v = f.parse().map_err(|_| {
                Error::format(n, format!("bad value {f:?} in column {}", table.columns[c]))
            })?;
            table.data[c].push(v);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ProfileKind;

    fn p(v: &[f64]) -> DiffProfile {
        DiffProfile::new(v.to_vec(), ProfileKind::Folded)
    }

    #[test]
    fn column_layout() {
        let profiles: Vec<_> = (0..31).map(|i| p(&[i as f64, -1.5])).collect();
        let text = write_profile_table(&profiles, Some(&p(&[0.0, 0.0]))).unwrap();
        let header = text.lines().next().unwrap();
        let cols: Vec<&str> = header.split(',').collect();
        assert_eq!(cols.len(), 33);
        assert_eq!(cols[0], "d");
        assert_eq!(cols[1], "s1");
        assert_eq!(cols[31], "s31");
        assert_eq!(cols[32], "mean");
        assert_eq!(
            text.lines().nth(1).unwrap().split(',').nth(2).unwrap(),
            "1.000000"
        );
    }

    #[test]
    fn empty_table() {
        assert_eq!(write_profile_table(&[], None).unwrap(), "d\n");
        let t = read_profile_table("d\n").unwrap();
        assert!(t.columns.is_empty() && t.rows() == 0);
    }

    #[test]
    fn reread_within_precision() {
        let v = [12.3456789, -179.9999994, 0.0000004, 143.4953453];
        let text = write_profile_table(&[p(&v)], None).unwrap();
        let t = read_profile_table(&text).unwrap();
        for (a, b) in t.column("s1").unwrap().iter().zip(&v) {
            assert!((a - b).abs() <= 5e-7 + 1e-12);
        }
        assert_eq!(t.index, vec![1, 2, 3, 4]);
        assert_eq!(t.to_csv(), text);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(write_profile_table(&[p(&[1.0]), p(&[1.0, 2.0])], None).is_err());
        assert!(read_profile_table("d,s1\n1,2,3\n").is_err());
        assert!(read_profile_table("x,s1\n").is_err());
    }

    #[test]
    fn comments_survive() {
        let text = "# config_hash=abc\nd,mean\n1,0.500000\n";
        let t = read_profile_table(text).unwrap();
        assert_eq!(t.comments, vec!["config_hash=abc".to_string()]);
        assert_eq!(t.to_csv(), text);
    }
}
