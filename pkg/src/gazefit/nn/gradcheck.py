"""Finite-difference verification of reverse-mode gradients.

The model function is evaluated with every parameter temporarily cast to
float64 so the central-difference quotient is a trustworthy reference.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .tensor import Parameter, Tensor

__all__ = ["grad_check", "GradCheckReport"]


@dataclass
class GradCheckReport:
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def max_rel_err(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    def passed(self, tol: float = 1e-3) -> bool:
        return self.max_rel_err < tol

    def __str__(self) -> str:
        lines = [f"  {name}: {err:.3e}" for name, err in sorted(self.per_param.items())]
        return "max rel err {:.3e}\n{}".format(self.max_rel_err, "\n".join(lines))


@contextmanager
def _float64_params(params: list[Parameter]):
    saved = [p.data for p in params]
    try:
        for p in params:
            p.data = p.data.astype(np.float64)
        yield
    finally:
        for p, d in zip(params, saved):
            p.data = d


def grad_check(
    fn: Callable[[], Tensor],
    params: list[Parameter],
    eps: float = 1e-5,
    max_elems_per_param: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare reverse-mode gradients of a scalar function with central differences.

    ``fn`` must be a zero-argument closure that reads ``p.data`` live, so
    perturbing a parameter and calling again re-evaluates the model.  The
    relative error per element is |analytic - numeric| divided by
    max(|analytic|, |numeric|, 1e-6); the report keeps the max per parameter.
    """
    report = GradCheckReport()
    rng = np.random.default_rng(seed)
    with _float64_params(params):
        for p in params:
            p.grad = None
        out = fn()
        if out.data.size != 1:
            raise ValueError(f"grad_check expects a scalar output, got shape {out.data.shape}")
        out.backward()
        analytic = {p.name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for p in params}

        for p in params:
            flat = p.data.reshape(-1)
            n = flat.size
            if max_elems_per_param is not None and n > max_elems_per_param:
                idx = rng.choice(n, size=max_elems_per_param, replace=False)
            else:
                idx = np.arange(n)
            a_flat = analytic[p.name].reshape(-1)
            worst = 0.0
            for i in idx:
                orig = flat[i]
                flat[i] = orig + eps
                f_plus = float(fn().data)
                flat[i] = orig - eps
                f_minus = float(fn().data)
                flat[i] = orig
                numeric = (f_plus - f_minus) / (2.0 * eps)
                a = float(a_flat[i])
                denom = max(abs(a), abs(numeric), 1e-6)
                worst = max(worst, abs(a - numeric) / denom)
            report.per_param[p.name] = worst
    return report
