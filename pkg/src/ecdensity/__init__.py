"""One-level density statistics for families of elliptic curves."""

__version__ = "0.1.0"
