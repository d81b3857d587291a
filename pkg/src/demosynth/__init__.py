"""Program synthesis of household robot policies from a demonstration."""

__version__ = "0.1.0"
