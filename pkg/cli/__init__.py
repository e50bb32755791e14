"""Command-line surface of the RoadTagger pipeline."""
