"""PulseArea - verified solver for the dissipative pulse-area equation."""

__version__ = "0.1.0"
