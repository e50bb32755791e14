"""Synthetic road worlds with per-vertex observation features and controlled disruptions."""
