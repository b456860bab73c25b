//! Text and JSON artefacts: indicator tables, graph documents, per-node
//! series and correlation matrices.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::curvature::EdgeCurvatures;
use crate::error::{Error, Result};
use crate::graph::{GraphKind, MarketGraph};
use crate::ingest::IndexMeta;
use crate::netmeasures::CommunityPartition;
use crate::scalar::Scalar;

/// Significant digits in every delimited-text output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Marker written for an undefined correlation (constant column).
pub const UNDEFINED: &str = "UD";

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`-style formatting.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{}", trim_fraction(mant), exp)
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Rectangular numeric table with a leading date column, as read back from
/// an indicator file.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable {
    pub end_dates: Vec<String>,
    pub columns: Vec<String>,
    /// One row per frame, aligned with `columns`.
    pub rows: Vec<Vec<f64>>,
}

impl IndicatorTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["end_date".to_owned()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (date, row) in self.end_dates.iter().zip(&self.rows) {
            let mut rec = vec![date.clone()];
            rec.extend(row.iter().map(|&x| format_sig(x)));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Malformed(e.to_string()))
    }
}

pub fn export_indicator_table(table: &IndicatorTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::param("refusing to write an empty indicator series"));
    }
    write_file(path, &table.to_csv()?)
}

pub fn read_indicators(source: impl Read) -> Result<IndicatorTable> {
    let mut rdr = csv::Reader::from_reader(source);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("end_date") {
        return Err(Error::Malformed("indicator file must start with an end_date column".into()));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut end_dates = Vec::new();
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        end_dates.push(rec[0].to_owned());
        let row = rec
            .iter()
            .skip(1)
            .zip(&columns)
            .map(|(v, c)| {
                v.trim().parse::<f64>().map_err(|_| Error::BadValue {
                    line: k + 2,
                    column: c.clone(),
                    value: v.to_owned(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(IndicatorTable {
        end_dates,
        columns,
        rows,
    })
}

pub fn read_indicators_file(path: &Path) -> Result<IndicatorTable> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_indicators(f)
}

/// Pairwise Pearson correlations between columns; `None` is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationTable {
    pub fn get(&self, a: &str, b: &str) -> Option<Option<f64>> {
        let i = self.columns.iter().position(|c| c == a)?;
        let j = self.columns.iter().position(|c| c == b)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.columns.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.map_or_else(|| UNDEFINED.to_owned(), format_sig)));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Malformed(e.to_string()))
    }
}

pub fn write_indicator_correlations(table: &CorrelationTable, path: &Path) -> Result<()> {
    write_file(path, &table.to_csv()?)
}

pub fn indicator_correlations(table: &IndicatorTable) -> Result<CorrelationTable> {
    let frames = table.rows.len();
    if frames < 3 {
        return Err(Error::param(format!("need at least 3 frames to correlate indicators, got {frames}")));
    }
    let m = table.columns.len();
    let nf = frames as f64;
    let centred: Vec<Option<Vec<f64>>> = (0..m)
        .map(|k| {
            let col: Vec<f64> = table.rows.iter().map(|r| r[k]).collect();
            if col.iter().any(|x| !x.is_finite()) {
                return None;
            }
            let mu = col.iter().sum::<f64>() / nf;
            let c: Vec<f64> = col.iter().map(|x| x - mu).collect();
            let scale = col.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
            let sd = (c.iter().map(|x| x * x).sum::<f64>() / nf).sqrt();
            (sd > 1e-12 * scale).then_some(c)
        })
        .collect();
    let values = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| match (&centred[i], &centred[j]) {
                    (Some(a), Some(b)) => {
                        if i == j {
                            return Some(1.0);
                        }
                        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                        let aa: f64 = a.iter().map(|x| x * x).sum();
                        let bb: f64 = b.iter().map(|y| y * y).sum();
                        Some((ab / (aa * bb).sqrt()).clamp(-1.0, 1.0))
                    }
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(CorrelationTable {
        columns: table.columns.clone(),
        values,
    })
}

#[derive(Serialize)]
struct NodeDoc<'a> {
    id: &'a str,
    country: &'a str,
    region: &'a str,
    community: usize,
}

#[derive(Serialize)]
struct EdgeDoc<'a> {
    u: &'a str,
    v: &'a str,
    strength: f64,
    distance: f64,
    or: f64,
    fr: f64,
    mr: f64,
    hr: f64,
}

#[derive(Serialize)]
struct GraphDoc<'a> {
    nodes: Vec<NodeDoc<'a>>,
    edges: Vec<EdgeDoc<'a>>,
    kind: GraphKind,
    end_date: String,
    tau: usize,
    theta: Option<f64>,
}

/// Serialises an annotated graph. `meta` is aligned with the vertex order;
/// missing entries fall back to the vertex label with empty attributes.
pub fn graph_json<T: Scalar>(
    g: &MarketGraph<T>,
    partition: &CommunityPartition<T>,
    curvatures: &EdgeCurvatures<T>,
    meta: &[IndexMeta],
) -> Result<String> {
    if partition.assignment.len() != g.num_vertices() || curvatures.edges.len() != g.num_edges() {
        return Err(Error::param("annotations do not match the graph"));
    }
    let nodes = (0..g.num_vertices())
        .map(|x| {
            let m = meta.get(x);
            NodeDoc {
                id: g.labels[x].as_str(),
                country: m.map_or("", |m| if m.country.is_empty() { &m.country_code } else { &m.country }),
                region: m.map_or("", |m| m.region_code.as_str()),
                community: partition.assignment[x],
            }
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .zip(&curvatures.edges)
        .map(|(e, c)| EdgeDoc {
            u: g.labels[e.u].as_str(),
            v: g.labels[e.v].as_str(),
            strength: e.strength.to_f64_lossy(),
            distance: e.distance.to_f64_lossy(),
            or: c.or.to_f64_lossy(),
            fr: c.fr.to_f64_lossy(),
            mr: c.mr.to_f64_lossy(),
            hr: c.hr.to_f64_lossy(),
        })
        .collect();
    let doc = GraphDoc {
        nodes,
        edges,
        kind: g.kind,
        end_date: g.frame.end_date.to_string(),
        tau: g.frame.tau,
        theta: g.frame.theta,
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn export_graph<T: Scalar>(
    g: &MarketGraph<T>,
    partition: &CommunityPartition<T>,
    curvatures: &EdgeCurvatures<T>,
    meta: &[IndexMeta],
    path: &Path,
) -> Result<()> {
    write_file(path, graph_json(g, partition, curvatures, meta)?.as_bytes())
}

/// Square labelled matrix as CSV.
pub fn matrix_csv<T: Scalar>(labels: &[String], m: &ndarray::Array2<T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut rec = vec![l.clone()];
        rec.extend(m.row(i).iter().map(|x| format_sig(x.to_f64_lossy())));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Malformed(e.to_string()))
}
