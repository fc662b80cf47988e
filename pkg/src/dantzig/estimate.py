from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Estimate", "SolverError"]


@dataclass
class Estimate:
    """A coefficient estimate together with solver diagnostics.

    ``feasibility_residual`` is the method's own certificate: the Dantzig
    constraint violation for LP-based fits, the KKT violation for the
    penalized Lasso and the budget excess for the constrained Lasso.
    """

    beta: np.ndarray
    objective: float
    feasibility_residual: float
    solver: str
    iterations: int
    wall_ms: float
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.beta))

    def to_dict(self) -> dict:
        return {
            "beta": [float(v) for v in self.beta],
            "objective": float(self.objective),
            "feasibility_residual": float(self.feasibility_residual),
            "solver": self.solver,
            "iterations": int(self.iterations),
            "wall_ms": float(self.wall_ms),
            "status": self.status,
        }


class SolverError(RuntimeError):
    """A solver stopped without meeting its convergence criteria."""

    def __init__(self, message: str, status: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.status = status
        self.diagnostics = diagnostics or {}
