"""Accuracy, absolute lane error, comparison reports and benchmark experiments."""
