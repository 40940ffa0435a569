"""Ingestion, pipelines, reports, sweeps and the command-line interface."""
from .bench import bench_scaling, bootstrap_fit, fit_loglog
from .mps import ColumnMap, parse_mps, read_mps, write_mps
from .pipeline import solve_pipeline
from .regress import least_squares, linf_problem, linf_regression
from .report import RunReport, read_csv, write_csv
