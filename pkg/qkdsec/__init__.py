"""QKD-Sec: security-framework toolkit for quantum key distribution."""

__version__ = "1.0.0"
