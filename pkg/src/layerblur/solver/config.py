from __future__ import annotations

from dataclasses import dataclass, field, fields, replace


def _default_betas():
    return tuple(float(2 ** k) for k in range(9))


@dataclass(frozen=True)
class SolverConfig:
    """Weights, step sizes and iteration budgets of the alternating solver.

    ``lambda1`` defaults to ``2500 / N``; ``lambda2`` and ``lambda3`` default
    to ``0.055 * lambda1`` and ``lambda1 / 20000``.  Unset weights are filled
    in by :meth:`resolve`.
    """

    lambda1: float | None = None
    lambda2: float | None = None
    lambda3: float | None = None
    sigma_D: float = 10.0
    sigma_A: float = 0.0125
    tau: float | None = None
    hyper_exponent: float = 0.8
    beta_schedule: tuple = field(default_factory=_default_betas)
    lut_size: int = 1024
    cg_max_iter: int = 25
    cg_rel_tol: float = 1e-4
    pd_iterations: int = 20
    nm_max_evals: int = 100
    inner_iterations: int = 3
    fix_reference: bool = True

    def __post_init__(self):
        object.__setattr__(self, "beta_schedule", tuple(float(b) for b in self.beta_schedule))
        for name in ("lambda1", "lambda2", "tau"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda3 is not None and self.lambda3 < 0:
            raise ValueError("lambda3 must be non-negative")
        if self.sigma_D <= 0 or self.sigma_A <= 0 or self.cg_rel_tol <= 0:
            raise ValueError("step sizes and tolerances must be positive")
        if not 0 < self.hyper_exponent <= 1:
            raise ValueError("hyper_exponent must lie in (0, 1]")
        if any(b <= 0 for b in self.beta_schedule):
            raise ValueError("beta schedule entries must be positive")
        for name in ("lut_size", "cg_max_iter", "pd_iterations", "nm_max_evals", "inner_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    def resolve(self, n_frames: int) -> SolverConfig:
        lam1 = self.lambda1 if self.lambda1 is not None else 2500.0 / n_frames
        lam2 = self.lambda2 if self.lambda2 is not None else 0.055 * lam1
        lam3 = self.lambda3 if self.lambda3 is not None else lam1 / 20000.0
        tau = self.tau if self.tau is not None else self.sigma_A
        return replace(self, lambda1=lam1, lambda2=lam2, lambda3=lam3, tau=tau)

    @classmethod
    def from_dict(cls, doc: dict) -> SolverConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}


@dataclass(frozen=True)
class EnergyBreakdown:
    """Weighted terms of the full objective; ``total`` is their sum."""

    data_term: float
    layer_prior: float
    alpha_tv: float
    alpha_binary: float
    total: float

    @classmethod
    def of(cls, data_term, layer_prior, alpha_tv, alpha_binary) -> EnergyBreakdown:
        return cls(float(data_term), float(layer_prior), float(alpha_tv), float(alpha_binary),
                   float(data_term + layer_prior + alpha_tv + alpha_binary))
