"""Search for optimal effective Hamiltonians by fidelity: Grover-accelerated and variational routes."""

__version__ = "0.1.0"
