"""Wave propagators on flat cones C(S^1_rho) and wedge domains."""

__version__ = "1.0.0"
