"""The RoadTagger network: vertex encoder, multi-structure GGNN and output heads."""
