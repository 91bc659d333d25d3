"""Vessel-image forgery and super-resolution pipeline.

Two-phase workflow: a conditional diffusion generator turns degraded
doodle/crop conditions into vessel images; a histogram screen keeps the
good ones; a small residual network learns super-resolution from the
screened forgeries.
"""

__version__ = "0.1.0"
