"""Order-theoretic fixed points, finite quasi-variational inclusions and a
1D grid solver for extremal solutions of elliptic obstacle-type inclusions."""

__version__ = "0.1.0"
