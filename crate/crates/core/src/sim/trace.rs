use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 10] = [
    "t", "y_meas", "y_true", "u_tilde", "u_prime", "u_bar", "omega_hat", "A_hat", "Y0_hat",
    "peak_flag",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub y_meas: f64,
    pub y_true: f64,
    pub u_tilde: f64,
    pub u_prime: f64,
    pub u_bar: f64,
    pub omega_hat: f64,
    pub a_hat: f64,
    pub y0_hat: f64,
    /// +1 or -1 at a detected maximum or minimum, 0 otherwise.
    pub peak_flag: i8,
}

impl TraceRow {
    fn fields(&self) -> [String; 10] {
        [
            self.t.to_string(),
            self.y_meas.to_string(),
            self.y_true.to_string(),
            self.u_tilde.to_string(),
            self.u_prime.to_string(),
            self.u_bar.to_string(),
            self.omega_hat.to_string(),
            self.a_hat.to_string(),
            self.y0_hat.to_string(),
            self.peak_flag.to_string(),
        ]
    }

    pub fn column(&self, index: usize) -> f64 {
        match index {
            0 => self.t,
            1 => self.y_meas,
            2 => self.y_true,
            3 => self.u_tilde,
            4 => self.u_prime,
            5 => self.u_bar,
            6 => self.omega_hat,
            7 => self.a_hat,
            8 => self.y0_hat,
            9 => f64::from(self.peak_flag),
            _ => f64::NAN,
        }
    }
}

/// Time-indexed record of one run. Metadata lines are `key = value` or
/// free text and are written behind `# `.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub metadata: Vec<String>,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn column_index(name: &str) -> Option<usize> {
        COLUMNS.iter().position(|c| *c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = Self::column_index(name)?;
        Some(self.rows.iter().map(|r| r.column(i)).collect())
    }

    /// Value of the first `key = value` metadata line with this key.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find_map(|line| {
            let (k, v) = line.split_once(" = ")?;
            (k == key).then_some(v)
        })
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key)?.trim_matches('"').parse().ok()
    }

    pub fn meta_bool(&self, key: &str) -> Option<bool> {
        self.meta(key)?.parse().ok()
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let io = |e: std::io::Error| Error::Io {
            path: "<trace>".into(),
            source: e,
        };
        for line in &self.metadata {
            writeln!(out, "# {line}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS).map_err(csv_io)?;
        for row in &self.rows {
            w.write_record(row.fields()).map_err(csv_io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut metadata = Vec::new();
        let mut line = String::new();
        let mut line_no = 0;
        // metadata block, then the header line
        let header = loop {
            line.clear();
            line_no += 1;
            let n = reader.read_line(&mut line).map_err(|e| Error::Io {
                path: "<trace>".into(),
                source: e,
            })?;
            if n == 0 {
                return Err(Error::TraceFormat {
                    line: line_no,
                    message: "missing header row".into(),
                });
            }
            let l = line.trim_end_matches(['\n', '\r']);
            match l.strip_prefix('#') {
                Some(rest) => metadata.push(rest.strip_prefix(' ').unwrap_or(rest).to_string()),
                None => break l.to_string(),
            }
        };
        let names: Vec<&str> = header.split(',').collect();
        if names != COLUMNS {
            return Err(Error::TraceFormat {
                line: line_no,
                message: format!("header must be `{}`, found `{header}`", COLUMNS.join(",")),
            });
        }
        let mut rows = Vec::new();
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(reader);
        for (i, rec) in csv.records().enumerate() {
            let at = line_no + 1 + i;
            let rec = rec.map_err(|e| Error::TraceFormat {
                line: at,
                message: e.to_string(),
            })?;
            if rec.len() != COLUMNS.len() {
                return Err(Error::TraceFormat {
                    line: at,
                    message: format!("expected {} fields, found {}", COLUMNS.len(), rec.len()),
                });
            }
            let num = |j: usize| -> Result<f64> {
                rec[j].parse().map_err(|_| Error::TraceFormat {
                    line: at,
                    message: format!("column {} is not a number: `{}`", COLUMNS[j], &rec[j]),
                })
            };
            let flag: i8 = rec[9].parse().map_err(|_| Error::TraceFormat {
                line: at,
                message: format!("peak_flag is not an integer: `{}`", &rec[9]),
            })?;
            rows.push(TraceRow {
                t: num(0)?,
                y_meas: num(1)?,
                y_true: num(2)?,
                u_tilde: num(3)?,
                u_prime: num(4)?,
                u_bar: num(5)?,
                omega_hat: num(6)?,
                a_hat: num(7)?,
                y0_hat: num(8)?,
                peak_flag: flag,
            });
        }
        Ok(Self { metadata, rows })
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io {
        path: "<trace>".into(),
        source: std::io::Error::other(e),
    }
}

pub fn write_trace(trace: &SimTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    trace.write_to(file).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_trace(path: &Path) -> Result<SimTrace> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    SimTrace::read_from(file)
}
