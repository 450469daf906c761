use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::DataSection;
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::sampler::{PosteriorSamples, SamplerConfig};

/// Numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

/// Read a comma-separated numeric table. Non-numeric, NaN and infinite
/// fields are errors that name the file line.
pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: cannot read header: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(Error::data_at(1, format!("{}: header has empty column names", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::Data { line, message: format!("{}: {e}", path.display()) }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(headers.len());
        for (field, name) in record.iter().zip(&headers) {
            let v: f64 = field.parse().map_err(|_| {
                Error::data_at(line, format!("{}: column '{name}' holds non-numeric value '{field}'", path.display()))
            })?;
            if !v.is_finite() {
                return Err(Error::data_at(line, format!("{}: column '{name}' is not finite", path.display())));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }
    Ok(Table { headers, rows })
}

fn format_row(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 12);
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        // Display prints the shortest string that parses back to the same f64
        s.push_str(&v.to_string());
    }
    s
}

pub fn write_table(path: &Path, headers: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        writeln!(w, "{}", headers.join(","))?;
        for row in rows {
            writeln!(w, "{}", format_row(&row))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Build the model dataset from a CSV file. Covariates keep the order
/// given in the configuration (file order when unspecified).
pub fn load_dataset(section: &DataSection) -> Result<Dataset> {
    let table = read_table(&section.path)?;
    let ry = table
        .column_index(&section.response)
        .ok_or_else(|| Error::data(format!("response column '{}' not found", section.response)))?;
    let covariates: Vec<String> = match &section.covariates {
        Some(c) => c.clone(),
        None => table.headers.iter().filter(|h| **h != section.response).cloned().collect(),
    };
    let idx: Vec<usize> = covariates
        .iter()
        .map(|c| table.column_index(c).ok_or_else(|| Error::data(format!("covariate column '{c}' not found"))))
        .collect::<Result<_>>()?;
    if idx.is_empty() && !section.intercept {
        return Err(Error::data("no covariates and no intercept"));
    }
    let mut x = Vec::with_capacity(table.rows.len() * (idx.len() + 1));
    let mut y = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let v = row[ry];
        if !(v > 0.0) {
            // header is line 1
            return Err(Error::data_at(
                i as u64 + 2,
                format!("response must be strictly positive, got {v} (data row {})", i + 1),
            ));
        }
        y.push(v);
        if section.intercept {
            x.push(1.0);
        }
        x.extend(idx.iter().map(|&j| row[j]));
    }
    let mut names = Vec::with_capacity(idx.len() + 1);
    if section.intercept {
        names.push("intercept".to_string());
    }
    names.extend(covariates);
    let data = Dataset::new(x, y, names, section.intercept)?;
    if section.standardize {
        data.standardize()
    } else {
        Ok(data)
    }
}

/// Write covariates (without the intercept column) followed by `y`.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let skip = usize::from(data.has_intercept());
    let mut headers = data.column_names()[skip..].to_vec();
    headers.push("y".into());
    let rows = (0..data.n()).map(|i| {
        let mut r = data.row(i)[skip..].to_vec();
        r.push(data.y()[i]);
        r
    });
    write_table(path, &headers, rows)
}

pub fn chain_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("chain_{chain}.csv"))
}

pub fn write_chains(dir: &Path, samples: &PosteriorSamples) -> Result<()> {
    let d = samples.dim();
    for c in 0..samples.n_chains() {
        let rows = samples.draws[c].chunks(d).map(<[f64]>::to_vec);
        write_table(&chain_path(dir, c), &samples.coordinate_names, rows)?;
    }
    Ok(())
}

/// Read `chain_0.csv`, `chain_1.csv`, … until the first missing index.
pub fn read_chains(dir: &Path, config: SamplerConfig) -> Result<PosteriorSamples> {
    let mut names: Option<Vec<String>> = None;
    let mut draws = Vec::new();
    let mut c = 0;
    loop {
        let path = chain_path(dir, c);
        if !path.exists() {
            break;
        }
        let table = read_table(&path)?;
        match &names {
            None => names = Some(table.headers.clone()),
            Some(n) if *n != table.headers => {
                return Err(Error::data(format!("{}: coordinate names differ from chain_0.csv", path.display())));
            }
            _ => {}
        }
        draws.push(table.rows.into_iter().flatten().collect::<Vec<f64>>());
        c += 1;
    }
    let names = names.ok_or_else(|| Error::data(format!("no chain files in {}", dir.display())))?;
    PosteriorSamples::from_chains(names, draws, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section(path: PathBuf) -> DataSection {
        DataSection {
            path,
            response: "y".into(),
            covariates: None,
            intercept: true,
            standardize: false,
        }
    }

    #[test]
    fn zero_response_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "a,y\n1,2\n3,0\n").unwrap();
        let err = load_dataset(&section(p)).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn rejects_nan_and_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "a,y\n1,2\nNaN,1\n").unwrap();
        assert!(read_table(&p).unwrap_err().to_string().contains("line 3"));
        std::fs::write(&p, "a,y\n1,2\nabc,1\n").unwrap();
        assert!(read_table(&p).is_err());
        std::fs::write(&p, "a,y\n1,2\ninf,1\n").unwrap();
        assert!(read_table(&p).is_err());
    }

    #[test]
    fn column_order_follows_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "b,y,a\n1,2,3\n4,5,6\n").unwrap();
        let mut s = section(p);
        let d = load_dataset(&s).unwrap();
        assert_eq!(d.column_names(), ["intercept", "b", "a"]);
        s.covariates = Some(vec!["a".into(), "b".into()]);
        let d = load_dataset(&s).unwrap();
        assert_eq!(d.row(1), [1.0, 6.0, 4.0]);
    }

    #[test]
    fn chains_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let draws = vec![vec![0.1, 1.0 / 3.0, -2.5e-300, 7.0], vec![f64::MIN_POSITIVE, 1e22, 0.3, -0.0]];
        let s = PosteriorSamples::from_chains(vec!["u".into(), "v".into()], draws, SamplerConfig::default()).unwrap();
        write_chains(dir.path(), &s).unwrap();
        let back = read_chains(dir.path(), SamplerConfig::default()).unwrap();
        assert_eq!(back.draws.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   s.draws.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
