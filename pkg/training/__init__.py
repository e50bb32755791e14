"""Losses, vertex dropout, the Adam optimizer and the subgraph training loop."""
