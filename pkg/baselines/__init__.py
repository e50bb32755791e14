"""Per-vertex classifier baseline and its smoothing / MRF post-processing."""
