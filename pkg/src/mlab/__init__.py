"""mlab: phase-space quantum/classical dynamics with rho-positivity diagnostics."""
__version__ = "0.1.0"
