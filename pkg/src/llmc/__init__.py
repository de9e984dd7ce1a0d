"""Jump-driven Langevin sampling on the positive half-line."""
