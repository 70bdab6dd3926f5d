"""Solver configuration shared by the spectral and entropy solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError


@dataclass(frozen=True)
class TrichotomyThresholds:
    """Cutoffs for the vanishing / dichotomy / compactness verdicts.

    Distance-flavored thresholds are fractions of the truncation radius:
    ``separation_fraction`` is how far two clusters must sit apart to count
    as dichotomy, ``drift_fraction`` bounds how far the concentration
    center may wander and still count as compactness.
    """

    vanishing: float = 0.05
    dichotomy: float = 0.10
    compactness: float = 0.05
    separation_fraction: float = 0.5
    drift_fraction: float = 0.25

    def validate(self):
        if min(self.vanishing, self.dichotomy, self.compactness) <= 0:
            raise ValidationError("trichotomy thresholds must be positive")
        if self.vanishing + self.dichotomy > 1:
            raise ValidationError("need vanishing + dichotomy thresholds <= 1")
        return self


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, budgets and margins for every solver in the package.

    All randomness used anywhere (multi-start jitter, verify-suite inputs)
    flows from ``seed``; core solves are seed-independent by construction.
    """

    linear_tol: float = 1e-10        # Poisson solve, relative mass-weighted
    eigen_tol: float = 1e-8          # eigenpair residual, mass-weighted
    entropy_tol: float = 1e-6        # Euler-Lagrange residual for mu and d
    max_iterations: int = 400        # outer descent budget per start
    gradient_iterations: int = 120   # projected-gradient stage budget
    eigen_maxiter: int = 5000
    separation_margin: float = 1e-4  # delta for lambda vs lambda-at-infinity
    objective_floor: float = -700.0  # unbounded-below suspicion cutoff
    dense_cutoff: int = 128          # below this, eigensolves go dense
    seed: int = 0
    trichotomy: TrichotomyThresholds = field(default_factory=TrichotomyThresholds)

    def validate(self):
        if min(self.linear_tol, self.eigen_tol, self.entropy_tol) <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_iterations < 1 or self.eigen_maxiter < 1:
            raise ValidationError("iteration budgets must be >= 1")
        if self.separation_margin <= 0:
            raise ValidationError("separation margin must be positive")
        self.trichotomy.validate()
        return self


DEFAULT_CONFIG = SolverConfig()
