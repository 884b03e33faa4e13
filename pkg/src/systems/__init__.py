"""Reference solvers and parameter sampling for the benchmark systems."""
