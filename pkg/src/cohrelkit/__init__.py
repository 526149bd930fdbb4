"""cohrelkit: coherent relative entropy and one-shot entropies via semidefinite programming."""

__version__ = "0.1.0"
