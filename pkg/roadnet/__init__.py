"""Road network graphs, road chains and propagation graph structures."""
