"""
blobflow - regularized interaction energies, blob-method flows and Wasserstein diagnostics
"""

__version__ = "0.1.0"
