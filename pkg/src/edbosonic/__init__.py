"""Error-detected entangling gates for bosonic qubits driven by dispersive beamsplitters."""
from .fock import HilbertLayout, Operator, PumpParams

__all__ = ["HilbertLayout", "Operator", "PumpParams"]
__version__ = "0.1.0"
