"""Reverse-mode automatic differentiation over dense float64 arrays."""
