"""covlab: covariant-bracket laboratory for free lattice field theories."""

__version__ = "0.1.0"
