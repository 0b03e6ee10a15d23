"""Construction and numerical verification of Bott-integrable Reeb flows on 3-manifolds."""

__version__ = "0.1.0"
