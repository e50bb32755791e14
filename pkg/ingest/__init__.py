"""Reading road networks and labels from GeoJSON / OSM XML, writing predictions."""
