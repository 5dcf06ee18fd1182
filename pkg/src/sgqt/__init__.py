"""Self-guided quantum tomography: SPSA over states driven by noisy fidelity estimates."""

__version__ = "0.1.0"
