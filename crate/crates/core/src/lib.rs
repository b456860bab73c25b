//! Rolling correlation networks for panels of financial index prices.
//!
//! The crate turns a price panel into a sequence of correlation frames,
//! filters each frame into a sparse graph (MST, MST plus threshold, or PMFG),
//! and reports graph-level indicators, discrete Ricci curvatures and the
//! minimum-variance portfolio risk per frame.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below name the double-precision instantiations.

pub mod corrwin;
pub mod curvature;
pub mod embedding;
pub mod error;
pub mod export;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod netbuild;
pub mod netmeasures;
pub mod pipeline;
pub mod planarity;
pub mod portfolio;
pub mod scalar;
pub mod synthetic;

pub use corrwin::{
    correlation_frame, distance_frame, eigen_entropy, enumerate_windows, mean_correlation, ultrametric,
    window_starts, CorrelationFrame, DistanceFrame, EigenEntropy, WindowSpec,
};
pub use curvature::{
    curvature_frame_averages, edge_curvatures, forman_ricci_edges, haantjes_ricci_edges, menger_ricci_edges,
    node_curvature_aggregate, ollivier_ricci_edges, wasserstein_w1, CurvatureAverages, EdgeCurvatures,
    NodeCurvatures,
};
pub use embedding::{classical_mds, EmbeddingMap};
pub use error::{Error, Result};
pub use export::{indicator_correlations, read_indicators, IndicatorTable};
pub use graph::{Edge, GraphKind, MarketGraph};
pub use ingest::{clean_panel, load_meta, load_prices, log_returns, IndexMeta, PricePanel, ReturnPanel};
pub use netbuild::{build_mst, build_pmfg, build_threshold_network};
pub use netmeasures::{measure_graph, CommunityPartition, GraphScalarReport};
pub use pipeline::{run_full_period, run_on_returns, run_pipeline, IndicatorSeries, Method, PipelineConfig};
pub use portfolio::{min_risk_portfolio, CovarianceMatrix, PortfolioResult};
pub use scalar::Scalar;

pub type PricePanelF64 = PricePanel<f64>;
pub type ReturnPanelF64 = ReturnPanel<f64>;
pub type CorrelationFrameF64 = CorrelationFrame<f64>;
pub type DistanceFrameF64 = DistanceFrame<f64>;
pub type CovarianceMatrixF64 = CovarianceMatrix<f64>;
pub type PortfolioResultF64 = PortfolioResult<f64>;
pub type MarketGraphF64 = MarketGraph<f64>;
pub type GraphScalarReportF64 = GraphScalarReport<f64>;
pub type CommunityPartitionF64 = CommunityPartition<f64>;
pub type EdgeCurvaturesF64 = EdgeCurvatures<f64>;
pub type EmbeddingMapF64 = EmbeddingMap<f64>;
pub type IndicatorSeriesF64 = IndicatorSeries<f64>;
