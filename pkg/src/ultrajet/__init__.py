"""Numerical toolkit for weight functions, strong pairs and Whitney jets."""
