"""Hyperspectral anomaly detection by layered tensor decomposition."""

__all__ = ["AnomalyDetector", "LtdSolver", "main"]
