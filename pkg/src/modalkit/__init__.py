"""modalkit: modal identification of actuated systems from time series."""
__version__ = "0.1.0"
