"""HTTP service over the learning engine."""
