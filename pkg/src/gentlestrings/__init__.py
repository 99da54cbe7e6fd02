"""Word combinatorics, string/band complexes and certified direct-sum
decomposition for gentle algebras."""

__version__ = "0.1.0"
