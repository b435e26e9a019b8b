"""Dense state-vector simulation of a noisy, error-corrected quantum memory."""

__version__ = "0.1.0"
