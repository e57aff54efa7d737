"""Benchmark toolkit for change point detection on annotated time series."""

__version__ = "0.1.0"
