"""Global-depolarising purity model and least-squares fitting.

The model treats all gate noise of a depth-``D`` circuit on ``n`` qubits as
one depolarising channel at the end of the ideal circuit, optionally followed
by a second one standing in for readout and measurement-circuit noise::

    Tr[rho_D^2] = (1 - 2^-n) (exp(-2 (2 a1 n D + a2 (n-1) D + b n)) - 1) + 1
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

FIT_MODES = ("ratio", "free", "alpha2_only")


def rate_from_probability(p: float) -> float:
    """``ln(1 / (1 - p))``; the effective rate matching a per-gate error probability."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"probability {p} must lie in [0, 1)")
    return -math.log1p(-p)


@dataclass(frozen=True)
class ModelParams:
    alpha1: float
    alpha2: float
    beta: float = 0.0

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.beta) < 0:
            raise ValueError(f"model rates must be non-negative: {self}")

    @classmethod
    def from_probabilities(cls, p1: float, p2: float, pm: float = 0.0) -> ModelParams:
        return cls(rate_from_probability(p1), rate_from_probability(p2), rate_from_probability(pm))


def _exponent(n, depth, alpha1, alpha2, beta):
    return 2.0 * (2.0 * alpha1 * n * depth + alpha2 * (n - 1) * depth + beta * n)


def model_purity(n, depth, params: ModelParams):
    """Model purity; ``n`` and ``depth`` may be arrays (broadcast)."""
    n = np.asarray(n, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if np.any(n < 1) or np.any(depth < 0):
        raise ValueError("need n >= 1 and depth >= 0")
    e = _exponent(n, depth, params.alpha1, params.alpha2, params.beta)
    value = (1.0 - 2.0**-n) * np.expm1(-e) + 1.0
    return float(value) if value.ndim == 0 else value


def global_p_from_local(n: int, depth: int, p1: float, p2: float) -> float:
    """Global depolarising probability with the same no-error probability as local noise."""
    if not (0.0 <= p1 < 1.0 and 0.0 <= p2 < 1.0):
        raise ValueError("local probabilities must lie in [0, 1)")
    log_keep = 2 * n * depth * math.log1p(-p1) + (n - 1) * depth * math.log1p(-p2)
    return -math.expm1(log_keep)


def purity_from_global_p(n: int, big_p: float) -> float:
    """Purity of ``(1 - P) |psi><psi| + P I / 2^n`` for any pure ``psi``."""
    return (1.0 - 2.0**-n) * ((1.0 - big_p) ** 2 - 1.0) + 1.0


def asymptotic_entropy_density(depth: float, params: ModelParams) -> float:
    """Large-width limit of the Renyi-2 entropy density: linear in depth, capped at 1."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    slope = 2.0 * (2.0 * params.alpha1 + params.alpha2) / math.log(2.0)
    return min(slope * depth, 1.0)


def depth_threshold_dstar(params: ModelParams) -> float:
    """Depth past which the large-width output is indistinguishable from I/2^n.

    Returned unrounded; take ``math.ceil`` for an integer layer count.
    """
    rate = 2.0 * params.alpha1 + params.alpha2
    if rate <= 0:
        raise ValueError("threshold undefined without gate noise")
    return math.log(2.0) / (2.0 * rate)


@dataclass
class PurityCurve:
    """Purity versus depth for one register width."""

    n: int
    points: list[tuple[int, float, float | None]] = field(default_factory=list)

    def __post_init__(self):
        cleaned = []
        for point in self.points:
            depth, value = point[0], point[1]
            stderr = point[2] if len(point) > 2 and point[2] is not None else None
            cleaned.append((int(depth), float(value), None if stderr is None else float(stderr)))
        self.points = cleaned
        depths = [d for d, _, _ in self.points]
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError(f"depths must be strictly increasing for n={self.n}")

    @property
    def depths(self) -> np.ndarray:
        return np.array([d for d, _, _ in self.points], dtype=float)

    @property
    def purities(self) -> np.ndarray:
        return np.array([p for _, p, _ in self.points], dtype=float)


@dataclass
class FitResult:
    params: ModelParams
    residual_rms: float
    iterations: int
    converged: bool
    theta: float | None = None
    mode: str = "ratio"
    excluded: int = 0

    def to_report(self) -> str:
        """Flat ``key = value`` text, one entry per line."""
        values = {
            "theta": "" if self.theta is None else repr(self.theta),
            "alpha1": repr(self.params.alpha1),
            "alpha2": repr(self.params.alpha2),
            "beta": repr(self.params.beta),
            "residual_rms": repr(self.residual_rms),
            "iterations": str(self.iterations),
            "converged": str(self.converged).lower(),
            "mode": self.mode,
            "excluded_points": str(self.excluded),
        }
        return "".join(f"{k} = {v}\n" for k, v in values.items())

    @classmethod
    def from_report(cls, text: str) -> FitResult:
        kv = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, value = line.partition("=")
                kv[key.strip()] = value.strip()
        return cls(
            params=ModelParams(float(kv["alpha1"]), float(kv["alpha2"]), float(kv["beta"])),
            residual_rms=float(kv["residual_rms"]),
            iterations=int(kv["iterations"]),
            converged=kv["converged"] == "true",
            theta=float(kv["theta"]) if kv.get("theta") else None,
            mode=kv.get("mode", "ratio"),
            excluded=int(kv.get("excluded_points", 0)),
        )


class FitProblem:
    """Weighted least-squares objective over log-parameters.

    Working coordinates ``x`` are logarithms of the free non-negative
    parameters, so every iterate maps to valid rates. Layout per mode:

    - ``ratio``: ``[log theta]`` with ``alpha_i = theta * p_i``
    - ``free``: ``[log alpha1, log alpha2]``
    - ``alpha2_only``: ``[log alpha2]`` with ``alpha1 = 0``

    followed by ``log beta`` when ``fit_beta`` is set.
    """

    def __init__(
        self,
        curves: Sequence[PurityCurve],
        p1: float,
        p2: float,
        fit_beta: bool = False,
        mode: str = "ratio",
        weighted: bool = False,
    ):
        if mode not in FIT_MODES:
            raise ValueError(f"unknown fit mode {mode!r}; choose from {FIT_MODES}")
        if mode == "ratio" and p2 <= 0:
            raise ValueError("ratio-constrained fit needs p2 > 0")
        self.p1, self.p2 = p1, p2
        self.fit_beta = fit_beta
        self.mode = mode

        ns, ds, ys, ws = [], [], [], []
        excluded = 0
        for curve in curves:
            for depth, value, stderr in curve.points:
                if value <= 0:
                    excluded += 1
                    continue
                ns.append(curve.n)
                ds.append(depth)
                ys.append(value)
                ws.append(1.0 / stderr if weighted and stderr else 1.0)
        if excluded:
            log.info("excluded %d non-positive purity points from the fit", excluded)
        self.excluded = excluded
        if len(ys) < 3:
            raise ValueError(f"need at least 3 usable data points, got {len(ys)}")
        self.n = np.array(ns, dtype=float)
        self.depth = np.array(ds, dtype=float)
        self.y = np.array(ys)
        self.w = np.array(ws)
        if np.ptp(self.y) == 0 and np.ptp(self.depth) == 0:
            raise ValueError("degenerate data: all points identical")

    @property
    def size(self) -> int:
        return (2 if self.mode == "free" else 1) + int(self.fit_beta)

    def params(self, x) -> ModelParams:
        vals = np.exp(np.asarray(x, dtype=float))
        beta = float(vals[-1]) if self.fit_beta else 0.0
        if self.mode == "ratio":
            return ModelParams(float(vals[0] * self.p1), float(vals[0] * self.p2), beta)
        if self.mode == "free":
            return ModelParams(float(vals[0]), float(vals[1]), beta)
        return ModelParams(0.0, float(vals[0]), beta)

    def residuals(self, x) -> np.ndarray:
        return self.w * (model_purity(self.n, self.depth, self.params(x)) - self.y)

    def jacobian(self, x) -> np.ndarray:
        p = self.params(x)
        e = _exponent(self.n, self.depth, p.alpha1, p.alpha2, p.beta)
        dmodel_de = -(1.0 - 2.0**-self.n) * np.exp(-e)
        de_da1 = 4.0 * self.n * self.depth
        de_da2 = 2.0 * (self.n - 1) * self.depth
        cols = []
        if self.mode == "ratio":
            # d/dlog(theta) = alpha1 * d/dalpha1 + alpha2 * d/dalpha2
            cols.append(p.alpha1 * de_da1 + p.alpha2 * de_da2)
        elif self.mode == "free":
            cols += [p.alpha1 * de_da1, p.alpha2 * de_da2]
        else:
            cols.append(p.alpha2 * de_da2)
        if self.fit_beta:
            cols.append(p.beta * 2.0 * self.n)
        return (self.w * dmodel_de)[:, None] * np.stack(cols, axis=1)

    def cost(self, x) -> float:
        r = self.residuals(x)
        return float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.jacobian(x).T @ self.residuals(x)


def _initial_point(problem: FitProblem) -> np.ndarray:
    x = []
    if problem.mode == "ratio":
        x.append(0.0)
    elif problem.mode == "free":
        x += [math.log(max(problem.p1, 1e-4)), math.log(max(problem.p2, 1e-4))]
    else:
        x.append(math.log(max(problem.p2, 1e-4)))
    if problem.fit_beta:
        x.append(math.log(1e-2))
    return np.array(x)


def levenberg_marquardt(
    problem: FitProblem,
    x0: np.ndarray,
    max_iter: int = 500,
    step_tol: float = 1e-10,
    grad_tol: float = 1e-12,
) -> tuple[np.ndarray, int, bool]:
    """Damped Gauss-Newton iterations; returns ``(x, iterations, converged)``."""
    x = np.array(x0, dtype=float)
    r = problem.residuals(x)
    cost = r @ r
    lam = 1e-3
    for it in range(1, max_iter + 1):
        jac = problem.jacobian(x)
        grad = jac.T @ r
        if np.linalg.norm(2.0 * grad) < grad_tol:
            return x, it, True
        jtj = jac.T @ jac
        while True:
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-300))
            try:
                step = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                step = -grad / (lam + 1.0)
            if np.linalg.norm(step) < step_tol:
                return x, it, True
            trial = x + step
            r_trial = problem.residuals(trial)
            cost_trial = r_trial @ r_trial
            if cost_trial <= cost:
                x, r, cost = trial, r_trial, cost_trial
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e16:
                return x, it, True
    return x, max_iter, False


def fit(
    curves: Sequence[PurityCurve],
    p1: float,
    p2: float,
    fit_beta: bool = False,
    mode: str = "ratio",
    weighted: bool = False,
    max_iter: int = 500,
) -> FitResult:
    """Fit the global-depolarising model jointly to all curves.

    The default ``ratio`` mode fixes ``alpha1 / alpha2 = p1 / p2`` and fits the
    common scale ``theta``; ``theta = 1`` means ``alpha_i = p_i``.
    """
    problem = FitProblem(curves, p1, p2, fit_beta=fit_beta, mode=mode, weighted=weighted)
    x, iterations, converged = levenberg_marquardt(problem, _initial_point(problem), max_iter)
    if not converged:
        log.warning("fit did not converge after %d iterations", iterations)
    params = problem.params(x)
    unweighted = model_purity(problem.n, problem.depth, params) - problem.y
    return FitResult(
        params=params,
        residual_rms=float(np.sqrt(np.mean(unweighted**2))),
        iterations=iterations,
        converged=converged,
        theta=float(math.exp(x[0])) if mode == "ratio" else None,
        mode=mode,
        excluded=problem.excluded,
    )


def fit_per_curve(curves: Sequence[PurityCurve], p1: float, p2: float, **kwargs) -> dict[int, FitResult]:
    return {curve.n: fit([curve], p1, p2, **kwargs) for curve in curves}
