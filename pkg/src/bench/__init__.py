"""Benchmark harness: dataset ingestion, the optimizer grid, metrics and reports."""
