//! End-to-end orchestration: clean, window, filter, measure, write.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrwin::{
    correlation_frame, distance_frame, eigen_entropy, enumerate_windows, mean_correlation, CorrelationFrame,
    WindowSpec, DEFAULT_SHIFT, DEFAULT_TAU,
};
use crate::curvature::{
    curvature_frame_averages, edge_curvatures, node_curvature_aggregate, CurvatureAverages, DEFAULT_HR_MAX_PATH,
};
use crate::embedding::{classical_mds, EmbeddingMap};
use crate::error::{Error, Result};
use crate::export::{export_indicator_table, format_sig, graph_json, matrix_csv, write_file, IndicatorTable};
use crate::graph::MarketGraph;
use crate::ingest::{clean_panel, log_returns, CleanReport, IndexMeta, PricePanel, ReturnPanel, DEFAULT_MISSING_DAY_FRACTION};
use crate::netbuild::{build_mst, build_pmfg, build_threshold_network, DEFAULT_THRESHOLD};
use crate::netmeasures::{eigenvector_centrality, measure_graph, GraphScalarReport};
use crate::portfolio::{min_risk_portfolio, window_covariance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mst,
    MstThreshold,
    Pmfg,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mst => "mst",
            Method::MstThreshold => "mst-threshold",
            Method::Pmfg => "pmfg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mst" => Ok(Method::Mst),
            "mst-threshold" => Ok(Method::MstThreshold),
            "pmfg" => Ok(Method::Pmfg),
            other => Err(Error::param(format!("unknown method `{other}` (expected mst, mst-threshold or pmfg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau: usize,
    pub shift: usize,
    pub thresholds: Vec<f64>,
    pub method: Method,
    pub hr_max_path: usize,
    /// Nothing is written when unset.
    pub output_dir: Option<PathBuf>,
    pub missing_day_fraction: f64,
    pub emit_graphs: bool,
    pub emit_weights: bool,
    pub emit_node_series: bool,
    /// Write each correlation frame as a labelled matrix.
    pub emit_frames: bool,
    pub keep_going: bool,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau: DEFAULT_TAU,
            shift: DEFAULT_SHIFT,
            thresholds: vec![DEFAULT_THRESHOLD],
            method: Method::MstThreshold,
            hr_max_path: DEFAULT_HR_MAX_PATH,
            output_dir: None,
            missing_day_fraction: DEFAULT_MISSING_DAY_FRACTION,
            emit_graphs: false,
            emit_weights: false,
            emit_node_series: false,
            emit_frames: false,
            keep_going: false,
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau < 2 {
            return Err(Error::param(format!("tau must be at least 2, got {}", self.tau)));
        }
        if self.shift < 1 {
            return Err(Error::param("shift must be at least 1"));
        }
        if self.hr_max_path < 2 {
            return Err(Error::param("hr-max-path must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.missing_day_fraction) {
            return Err(Error::param("missing-day fraction must lie in [0, 1]"));
        }
        if let Some(t) = self.thresholds.iter().find(|&&t| !(t > -1.0 && t <= 1.0)) {
            return Err(Error::param(format!("threshold {t} outside (-1, 1]")));
        }
        if self.method == Method::MstThreshold && self.thresholds.is_empty() {
            return Err(Error::param("mst-threshold needs at least one threshold"));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers must be positive"));
        }
        Ok(())
    }

    /// One entry per graph built for every frame.
    fn variants(&self) -> Vec<Option<f64>> {
        match self.method {
            Method::MstThreshold => self.thresholds.iter().map(|&t| Some(t)).collect(),
            Method::Mst | Method::Pmfg => vec![None],
        }
    }

    fn variant_tag(&self, theta: Option<f64>) -> String {
        match theta {
            Some(t) => format!("{}_{}", self.method, format_sig(t)),
            None => self.method.to_string(),
        }
    }
}

/// Indicators of one graph on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRecord<T> {
    pub end_date: NaiveDate,
    pub mean_correlation: T,
    pub eigen_entropy: T,
    pub min_risk: T,
    pub report: GraphScalarReport<T>,
    pub curvature: CurvatureAverages<T>,
    /// Optimality gap of the portfolio solve (not exported).
    pub kkt_residual: T,
}

impl<T: Scalar> IndicatorRecord<T> {
    pub fn columns() -> Vec<&'static str> {
        let mut c = vec!["mean_correlation", "eigen_entropy", "min_risk"];
        c.extend(GraphScalarReport::<T>::COLUMNS);
        c.extend(["avg_or", "avg_fr", "avg_mr", "avg_hr"]);
        c
    }

    pub fn values(&self) -> Vec<T> {
        let mut v = vec![self.mean_correlation, self.eigen_entropy, self.min_risk];
        v.extend(self.report.values());
        let a = &self.curvature;
        v.extend([a.avg_or, a.avg_fr, a.avg_mr, a.avg_hr]);
        v
    }
}

/// Records for one method/threshold, sorted by end date.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries<T> {
    pub method: Method,
    pub theta: Option<f64>,
    pub records: Vec<IndicatorRecord<T>>,
}

impl<T: Scalar> IndicatorSeries<T> {
    pub fn file_name(&self) -> String {
        match self.theta {
            Some(t) => format!("indicators_{}_{}.csv", self.method, format_sig(t)),
            None => format!("indicators_{}.csv", self.method),
        }
    }

    pub fn to_table(&self) -> IndicatorTable {
        IndicatorTable {
            end_dates: self.records.iter().map(|r| r.end_date.to_string()).collect(),
            columns: IndicatorRecord::<T>::columns().into_iter().map(str::to_owned).collect(),
            rows: self
                .records
                .iter()
                .map(|r| r.values().into_iter().map(Scalar::to_f64_lossy).collect())
                .collect(),
        }
    }
}

pub fn export_indicators<T: Scalar>(series: &IndicatorSeries<T>, path: &Path) -> Result<()> {
    export_indicator_table(&series.to_table(), path)
}

#[derive(Debug, Clone)]
struct VariantOutput<T> {
    record: IndicatorRecord<T>,
    graph_json: Option<String>,
    node_rows: Vec<[String; 5]>,
}

#[derive(Debug, Clone)]
struct FrameOutput<T> {
    end_date: NaiveDate,
    variants: Vec<VariantOutput<T>>,
    weights_csv: Option<Vec<u8>>,
    frame_csv: Option<Vec<u8>>,
}

fn check_frame<T: Scalar>(returns: &ReturnPanel<T>, window: &WindowSpec, corr: &CorrelationFrame<T>) -> Result<()> {
    let slice = returns.returns.slice(ndarray::s![.., window.range()]);
    if let Some(((i, t), _)) = slice.indexed_iter().find(|(_, x)| !x.is_finite()) {
        return Err(Error::Malformed(format!(
            "non-finite return for `{}` on {}",
            returns.labels[i],
            returns.dates[window.start_index + t]
        )));
    }
    if corr.matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("correlation frame has non-finite entries".into()));
    }
    if !corr.zero_variance.is_empty() {
        let names: Vec<&str> = corr.zero_variance.iter().map(|&i| corr.labels[i].as_str()).collect();
        log::warn!("frame {}: zero-variance series {}", corr.end_date, names.join(", "));
    }
    Ok(())
}

fn process_frame<T: Scalar>(
    cfg: &PipelineConfig,
    returns: &ReturnPanel<T>,
    meta: &[IndexMeta],
    window: &WindowSpec,
) -> Result<FrameOutput<T>> {
    let corr = correlation_frame(returns, window);
    check_frame(returns, window, &corr)?;
    let dist = distance_frame(&corr);
    let mc = mean_correlation(&corr);
    let ee = eigen_entropy(&corr)?;
    let portfolio = min_risk_portfolio(&window_covariance(returns, window))?;

    let graphs: Vec<MarketGraph<T>> = match cfg.method {
        Method::Mst => vec![build_mst(&dist, &corr)?],
        Method::Pmfg => vec![build_pmfg(&corr, &dist)?],
        Method::MstThreshold => {
            let mst = build_mst(&dist, &corr)?;
            cfg.thresholds
                .iter()
                .map(|&t| build_threshold_network(&mst, &corr, t))
                .collect::<Result<_>>()?
        }
    };

    let mut variants = Vec::with_capacity(graphs.len());
    for g in &graphs {
        let measures = measure_graph(g);
        let curv = edge_curvatures(g, &measures.distances, cfg.hr_max_path)?;
        if !curv.floored_edges.is_empty() {
            log::warn!(
                "frame {}: {} edge(s) with zero distance floored",
                window.end_date,
                curv.floored_edges.len()
            );
        }
        let averages = curvature_frame_averages(&curv)?;
        let graph_doc = if cfg.emit_graphs {
            Some(graph_json(g, &measures.partition, &curv, meta)?)
        } else {
            None
        };
        let mut node_rows = Vec::new();
        if cfg.emit_node_series {
            let nodes = node_curvature_aggregate(g, &curv);
            let centrality = eigenvector_centrality(g)?;
            for x in 0..g.num_vertices() {
                node_rows.push([
                    window.end_date.to_string(),
                    g.labels[x].clone(),
                    format_sig(centrality.values[x].to_f64_lossy()),
                    format_sig(nodes.or_node[x].to_f64_lossy()),
                    format_sig(nodes.fr_node[x].to_f64_lossy()),
                ]);
            }
        }
        variants.push(VariantOutput {
            record: IndicatorRecord {
                end_date: window.end_date,
                mean_correlation: mc,
                eigen_entropy: ee.entropy,
                min_risk: portfolio.risk,
                report: measures.report,
                curvature: averages,
                kkt_residual: portfolio.kkt_residual,
            },
            graph_json: graph_doc,
            node_rows,
        });
    }

    let weights_csv = if cfg.emit_weights {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index_code", "weight"])?;
        for (label, x) in returns.labels.iter().zip(&portfolio.weights) {
            w.write_record([label.clone(), format_sig(x.to_f64_lossy())])?;
        }
        Some(w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?)
    } else {
        None
    };
    let frame_csv = if cfg.emit_frames {
        Some(matrix_csv(&corr.labels, &corr.matrix)?)
    } else {
        None
    };
    Ok(FrameOutput {
        end_date: window.end_date,
        variants,
        weights_csv,
        frame_csv,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput<T> {
    pub series: Vec<IndicatorSeries<T>>,
    pub clean_report: Option<CleanReport>,
    pub num_return_days: usize,
    pub windows: Vec<WindowSpec>,
    /// Frames skipped under `keep_going`, with the error text.
    pub failed_frames: Vec<(NaiveDate, String)>,
    pub written: Vec<PathBuf>,
}

/// Cleans the panel, forms log returns and runs every window.
pub fn run_pipeline<T: Scalar>(cfg: &PipelineConfig, prices: &PricePanel<T>) -> Result<PipelineOutput<T>> {
    cfg.validate()?;
    let (clean, report) = clean_panel(prices, cfg.missing_day_fraction)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let returns = log_returns(&clean)?;
    let mut out = run_on_returns(cfg, &returns, &clean.meta)?;
    out.clean_report = Some(report);
    Ok(out)
}

/// Runs every window of a prepared return panel. `meta` is aligned with the
/// panel rows and only feeds the graph export.
pub fn run_on_returns<T: Scalar>(cfg: &PipelineConfig, returns: &ReturnPanel<T>, meta: &[IndexMeta]) -> Result<PipelineOutput<T>> {
    cfg.validate()?;
    let windows = enumerate_windows(returns, cfg.tau, cfg.shift)?;
    log::info!(
        "{} indices, {} return days, {} windows (tau {}, shift {})",
        returns.num_indices(),
        returns.num_days(),
        windows.len(),
        cfg.tau,
        cfg.shift
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<FrameOutput<T>>> = pool.install(|| {
        windows
            .par_iter()
            .map(|w| {
                process_frame(cfg, returns, meta, w).map_err(|e| Error::Frame {
                    date: w.end_date.to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    });

    let mut frames = Vec::with_capacity(results.len());
    let mut failed_frames = Vec::new();
    for (w, r) in windows.iter().zip(results) {
        match r {
            Ok(f) => frames.push(f),
            Err(e) if cfg.keep_going => {
                log::warn!("skipping frame: {e}");
                failed_frames.push((w.end_date, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }

    let variants = cfg.variants();
    let series: Vec<IndicatorSeries<T>> = variants
        .iter()
        .enumerate()
        .map(|(k, &theta)| IndicatorSeries {
            method: cfg.method,
            theta,
            records: frames.iter().map(|f| f.variants[k].record.clone()).collect(),
        })
        .collect();

    let mut written = Vec::new();
    if let Some(dir) = &cfg.output_dir {
        for (k, s) in series.iter().enumerate() {
            if s.records.is_empty() {
                log::warn!("no frames succeeded; {} not written", s.file_name());
                continue;
            }
            let path = dir.join(s.file_name());
            export_indicators(s, &path)?;
            written.push(path);
            let tag = cfg.variant_tag(variants[k]);
            if cfg.emit_graphs {
                for f in &frames {
                    let path = dir.join("graphs").join(format!("graph_{tag}_{}.json", f.end_date));
                    write_file(&path, f.variants[k].graph_json.as_deref().unwrap_or_default().as_bytes())?;
                    written.push(path);
                }
            }
            if cfg.emit_node_series {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["end_date", "index_code", "eigenvector_centrality", "or_node", "fr_node"])?;
                for f in &frames {
                    for row in &f.variants[k].node_rows {
                        w.write_record(row)?;
                    }
                }
                let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
                let path = dir.join(format!("node_series_{tag}.csv"));
                write_file(&path, &bytes)?;
                written.push(path);
            }
        }
        for f in &frames {
            if let Some(bytes) = &f.weights_csv {
                let path = dir.join("weights").join(format!("weights_{}.csv", f.end_date));
                write_file(&path, bytes)?;
                written.push(path);
            }
            if let Some(bytes) = &f.frame_csv {
                let path = dir.join("frames").join(format!("frame_{}_{}.csv", f.end_date, cfg.tau));
                write_file(&path, bytes)?;
                written.push(path);
            }
        }
    }

    Ok(PipelineOutput {
        series,
        clean_report: None,
        num_return_days: returns.num_days(),
        windows,
        failed_frames,
        written,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullPeriodOutput<T> {
    pub pipeline: PipelineOutput<T>,
    pub embedding: EmbeddingMap<T>,
    pub meta: Vec<IndexMeta>,
}

/// Whole-sample analysis: one window spanning every return day, run through
/// the regular pipeline, plus a 2-D classical MDS map (`mds.csv`).
pub fn run_full_period<T: Scalar>(cfg: &PipelineConfig, prices: &PricePanel<T>) -> Result<FullPeriodOutput<T>> {
    let (clean, report) = clean_panel(prices, cfg.missing_day_fraction)?;
    let returns = log_returns(&clean)?;
    let full = PipelineConfig {
        tau: returns.num_days(),
        shift: 1,
        ..cfg.clone()
    };
    let mut pipeline = run_on_returns(&full, &returns, &clean.meta)?;
    pipeline.clean_report = Some(report);
    let window = enumerate_windows(&returns, full.tau, full.shift)?[0];
    let embedding = classical_mds(&distance_frame(&correlation_frame(&returns, &window)), 2)?;
    if embedding.rank_deficient {
        log::warn!("embedding has fewer than 2 positive eigenvalues");
    }
    if let Some(dir) = &cfg.output_dir {
        let path = dir.join("mds.csv");
        write_file(&path, &mds_csv(&embedding, &clean.meta)?)?;
        pipeline.written.push(path);
    }
    Ok(FullPeriodOutput {
        pipeline,
        embedding,
        meta: clean.meta,
    })
}

pub fn mds_csv<T: Scalar>(embedding: &EmbeddingMap<T>, meta: &[IndexMeta]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index_code", "country_code", "region_code", "x", "y"])?;
    for (i, m) in meta.iter().enumerate() {
        w.write_record([
            m.index_code.clone(),
            m.country_code.clone(),
            m.region_code.clone(),
            format_sig(embedding.coordinates[[i, 0]].to_f64_lossy()),
            format_sig(embedding.coordinates[[i, 1]].to_f64_lossy()),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Malformed(e.to_string()))
}
