"""Gradient descent for the matrix square root.

Minimizes f(U) = ||M - U^2||_F^2 over symmetric positive definite U with the
fixed-step update

    U_{t+1} = U_t - eta (U_t^2 - M) U_t - eta U_t (U_t^2 - M).

The gradient convention matches the update: ``gradient`` returns
(U^2 - M) U + U (U^2 - M), which is half the Euclidean gradient of f; the
factor is absorbed into the step size.  The automatic step size is the
smallest of three safeguards, each keeping the iterates inside the region
where the certified eigenvalue corridor, smoothness, and gradient dominance
bounds of :mod:`matsqrt.analysis` apply.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import linalg
from .linalg import SpdMatrix, SymmetricMatrix

INIT_CHOICES = ("scaled-identity", "sqrt-opnorm-identity", "explicit")
SCHEDULE_CHOICES = ("every-step", "first-step-only", "none")

# Residual growth beyond this factor over its initial value aborts the run.
DIVERGENCE_FACTOR = 10.0
# Injected per-step errors should stay below eta * sigma_min(M) * beta
# divided by this for the stability bound to be meaningful.
STABILITY_SLACK = 300.0


class GdError(Exception):
    """Base class for solver failures."""

    def __init__(self, message: str, step: int | None = None, trace=None):
        super().__init__(message)
        self.step = step
        self.trace = trace


class DivergenceError(GdError):
    pass


class LostPositiveDefinitenessError(GdError):
    pass


@dataclass(frozen=True)
class GdConfig:
    """Solver configuration.

    ``eta`` is either a positive float or ``"auto"``, in which case
    :func:`step_size_policy` picks the step size.  ``init`` selects the
    starting iterate: ``"scaled-identity"`` uses sqrt(lambda) I with
    ``init_lambda`` (estimated by power iteration when None),
    ``"sqrt-opnorm-identity"`` uses sqrt(||M||_2) I, and ``"explicit"``
    takes ``init_matrix`` as given.  ``c_step`` scales the automatic step
    size and ``c_rate`` is the contraction constant used by the residual
    decay certificates; the defaults are pinned by the acceptance tests.
    """

    eta: float | str = "auto"
    max_iters: int = 10_000_000
    tol: float = 1e-8
    init: str = "scaled-identity"
    init_lambda: float | None = None
    init_matrix: object | None = None
    c_step: float = 0.01
    c_rate: float = 1.0 / 50.0
    resymmetrize: bool = True
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.eta, str):
            if self.eta != "auto":
                raise ValueError(f"eta must be positive or 'auto', got {self.eta!r}")
        elif not (self.eta > 0.0):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES}, got {self.init!r}")
        if self.init == "explicit" and self.init_matrix is None:
            raise ValueError("init='explicit' requires init_matrix")
        if self.init_lambda is not None and not (self.init_lambda > 0.0):
            raise ValueError("init_lambda must be positive")
        if not (self.c_step > 0.0):
            raise ValueError("c_step must be positive")
        if not (self.c_rate > 0.0):
            raise ValueError("c_rate must be positive")


@dataclass(frozen=True)
class ErrorModel:
    """Per-step additive perturbations of exact spectral norm ``delta``.

    Each scheduled step draws a symmetric Gaussian matrix from the seeded
    generator and rescales it to ``||E_t||_2 = delta``.  ``schedule`` is one
    of ``"every-step"``, ``"first-step-only"``, or ``"none"``.
    """

    delta: float = 0.0
    schedule: str = "every-step"
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError("delta must be non-negative")
        if self.schedule not in SCHEDULE_CHOICES:
            raise ValueError(
                f"schedule must be one of {SCHEDULE_CHOICES}, got {self.schedule!r}"
            )

    def active_at(self, t: int) -> bool:
        if self.schedule == "none":
            return False
        if self.schedule == "first-step-only":
            return t == 1
        return True

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        G = rng.standard_normal((n, n))
        E = (G + G.T) / 2.0
        if self.delta == 0.0:
            return np.zeros((n, n))
        w = np.linalg.eigvalsh(E)
        s = max(abs(float(w[0])), abs(float(w[-1])))
        if s == 0.0:
            return np.zeros((n, n))
        E = E * (self.delta / s)
        # round-off can leave the rescaled norm a few ulps above delta;
        # one corrective rescale restores ||E||_2 <= delta
        w = np.linalg.eigvalsh(E)
        s2 = max(abs(float(w[0])), abs(float(w[-1])))
        if s2 > self.delta:
            E = E * (self.delta / s2)
        return E


class TraceRecord(NamedTuple):
    t: int
    residual_fro: float
    objective: float
    sigma_min: float
    opnorm: float
    eta: float
    err_norm: float
    err_fro: float


class IterationTrace:
    """Column-oriented per-step records, including the t = 0 record.

    ``err_norm`` is the spectral norm of the injected error at each step
    (zero for unperturbed runs); ``err_fro`` additionally stores its
    Frobenius norm, which the stability bound consumes.  Only the seven
    contract columns appear in CSV output.
    """

    __slots__ = (
        "t",
        "residual_fro",
        "objective",
        "sigma_min",
        "opnorm",
        "eta",
        "err_norm",
        "err_fro",
        "converged",
        "stop_reason",
    )

    def __init__(self, columns: dict, converged: bool, stop_reason: str):
        self.t = np.asarray(columns["t"], dtype=int)
        for name in (
            "residual_fro",
            "objective",
            "sigma_min",
            "opnorm",
            "eta",
            "err_norm",
            "err_fro",
        ):
            setattr(self, name, np.asarray(columns[name], dtype=float))
        self.converged = converged
        self.stop_reason = stop_reason

    def __len__(self) -> int:
        return len(self.t)

    @property
    def steps(self) -> int:
        return int(self.t[-1])

    @property
    def final_residual(self) -> float:
        return float(self.residual_fro[-1])

    def records(self) -> Iterator[TraceRecord]:
        for i in range(len(self.t)):
            yield TraceRecord(
                int(self.t[i]),
                float(self.residual_fro[i]),
                float(self.objective[i]),
                float(self.sigma_min[i]),
                float(self.opnorm[i]),
                float(self.eta[i]),
                float(self.err_norm[i]),
                float(self.err_fro[i]),
            )

    def write_csv(self, path_or_file) -> None:
        from . import io

        io.write_trace_csv(path_or_file, self)


class _TraceBuilder:
    def __init__(self):
        self.columns = {
            "t": [],
            "residual_fro": [],
            "objective": [],
            "sigma_min": [],
            "opnorm": [],
            "eta": [],
            "err_norm": [],
            "err_fro": [],
        }

    def append(self, t, residual, smin, opnorm, eta, err_norm, err_fro):
        c = self.columns
        c["t"].append(t)
        c["residual_fro"].append(residual)
        c["objective"].append(residual * residual)
        c["sigma_min"].append(smin)
        c["opnorm"].append(opnorm)
        c["eta"].append(eta)
        c["err_norm"].append(err_norm)
        c["err_fro"].append(err_fro)

    def finish(self, converged: bool, stop_reason: str) -> IterationTrace:
        return IterationTrace(self.columns, converged, stop_reason)


def objective(U, M) -> float:
    """f(U) = ||M - U^2||_F^2."""
    U = np.asarray(getattr(U, "values", U), dtype=float)
    M = np.asarray(getattr(M, "values", M), dtype=float)
    return residual_fro(U, M) ** 2


def residual_fro(U, M) -> float:
    """||M - U^2||_F."""
    U = np.asarray(getattr(U, "values", U), dtype=float)
    M = np.asarray(getattr(M, "values", M), dtype=float)
    return float(np.linalg.norm(M - U @ U))


def gradient(U, M) -> np.ndarray:
    """(U^2 - M) U + U (U^2 - M); half the Euclidean gradient of f."""
    U = np.asarray(getattr(U, "values", U), dtype=float)
    M = np.asarray(getattr(M, "values", M), dtype=float)
    D = U @ U - M
    return D @ U + U @ D


def _update(U: np.ndarray, S: np.ndarray, M: np.ndarray, eta: float, resym: bool) -> np.ndarray:
    # S is the cached product U @ U
    D = S - M
    U_next = U - eta * (D @ U) - eta * (U @ D)
    if resym:
        U_next = (U_next + U_next.T) / 2.0
    return U_next


def gd_step(U, M, eta: float, resymmetrize: bool = True) -> np.ndarray:
    """One update U - eta (U^2 - M) U - eta U (U^2 - M)."""
    U = np.asarray(getattr(U, "values", U), dtype=float)
    M = np.asarray(getattr(M, "values", M), dtype=float)
    return _update(U, U @ U, M, eta, resymmetrize)


def step_size_policy(U0, M, cfg: GdConfig) -> float:
    """Automatic step size.

    Returns ``c_step`` times the smallest of three bounds: an operator-norm
    safeguard 1 / (10 max(||U0||^2, 3 ||M||)), a corridor safeguard
    beta / max(||U0||, sqrt(3 ||M||))^3, and the rate-parameter safeguard
    1 / (alpha beta^2).  With ``c_step <= 1`` the iterates provably stay in
    the certified corridor.  Norms are taken from the Jacobi eigensolver.

    The value scales like 1 / ||M|| under (M, U0) -> (s^2 M, s U0).
    """
    u_op = linalg.spectral_norm(U0)
    u_smin = linalg.sigma_min(U0)
    m_op = linalg.spectral_norm(M)
    m_smin = linalg.sigma_min(M)
    alpha = (max(u_op, math.sqrt(m_op)) / min(u_smin, math.sqrt(m_smin))) ** 3
    beta = min(u_smin, math.sqrt(m_smin))
    bound_opnorm = 1.0 / (10.0 * max(u_op * u_op, 3.0 * m_op))
    bound_corridor = beta / max(u_op, math.sqrt(3.0 * m_op)) ** 3
    bound_rate = 1.0 / (alpha * beta * beta)
    return cfg.c_step * min(bound_opnorm, bound_corridor, bound_rate)


def initial_iterate(M, cfg: GdConfig) -> SpdMatrix:
    """Resolve the starting iterate prescribed by ``cfg``."""
    M_arr = np.asarray(getattr(M, "values", M), dtype=float)
    n = M_arr.shape[0]
    if cfg.init == "scaled-identity":
        lam = cfg.init_lambda
        if lam is None:
            lam = linalg.estimate_opnorm_bound(M_arr, seed=cfg.seed)
        return SpdMatrix(math.sqrt(lam) * np.eye(n))
    if cfg.init == "sqrt-opnorm-identity":
        return SpdMatrix(math.sqrt(linalg.spectral_norm(M_arr)) * np.eye(n))
    U0 = cfg.init_matrix
    return U0 if isinstance(U0, SpdMatrix) else SpdMatrix(U0)


def _resolve(M, cfg: GdConfig):
    M_spd = M if isinstance(M, SpdMatrix) else SpdMatrix(M)
    U0 = initial_iterate(M_spd, cfg)
    if U0.n != M_spd.n:
        raise linalg.DimensionMismatchError(
            f"initial iterate has order {U0.n}, matrix has order {M_spd.n}"
        )
    eta = cfg.eta if isinstance(cfg.eta, float) else step_size_policy(U0, M_spd, cfg)
    return M_spd, U0, float(eta)


def run(M, cfg: GdConfig = GdConfig()) -> tuple[SpdMatrix, IterationTrace]:
    """Iterate gd_step until the residual reaches ``cfg.tol`` or the cap.

    Returns the final iterate and the full per-step trace.  Raises
    :class:`DivergenceError` when the residual exceeds ten times its initial
    value and :class:`LostPositiveDefinitenessError` when an iterate stops
    being positive definite; both carry the partial trace and step index.
    """
    return _run_loop(M, cfg, err=None)


def run_perturbed(M, cfg: GdConfig, err: ErrorModel) -> tuple[SpdMatrix, IterationTrace]:
    """Like :func:`run` but adds E_t after each update, per ``err``.

    With ``delta = 0`` the trace is bitwise identical to :func:`run`.  When
    ``delta`` exceeds the stability tolerance
    eta sigma_min(M) beta / 300 the run proceeds but emits a warning, since
    the residual floor guarantee no longer applies.
    """
    return _run_loop(M, cfg, err=err)


def _run_loop(M, cfg: GdConfig, err: ErrorModel | None):
    M_spd, U0, eta = _resolve(M, cfg)
    M_arr = M_spd.values
    n = M_spd.n

    rng = None
    if err is not None:
        rng = np.random.default_rng(err.seed)
        lam_min_m, m_smin, _ = linalg.spectral_extremes(M_arr)
        _, u_smin, _ = linalg.spectral_extremes(U0.values)
        beta = min(u_smin, math.sqrt(m_smin))
        tolerance = eta * m_smin * beta / STABILITY_SLACK
        if err.delta >= tolerance and err.schedule != "none" and err.delta > 0.0:
            warnings.warn(
                f"error level delta={err.delta:.3e} is at or above the "
                f"stability tolerance {tolerance:.3e}; the residual floor "
                "bound is not guaranteed",
                stacklevel=3,
            )

    builder = _TraceBuilder()
    U = U0.values
    S = U @ U
    r = float(np.linalg.norm(M_arr - S))
    _, smin, opn = linalg.spectral_extremes(U)
    builder.append(0, r, smin, opn, eta, 0.0, 0.0)
    r0 = r
    if r <= cfg.tol:
        return SpdMatrix(U), builder.finish(True, "converged")

    converged = False
    for t in range(1, cfg.max_iters + 1):
        U = _update(U, S, M_arr, eta, cfg.resymmetrize)
        err_norm = 0.0
        err_fro = 0.0
        if err is not None and err.active_at(t):
            E = err.sample(rng, n)
            U = U + E
            err_norm = err.delta
            err_fro = float(np.linalg.norm(E))
        S = U @ U
        r = float(np.linalg.norm(M_arr - S))
        lam_min, smin, opn = linalg.spectral_extremes(U)
        builder.append(t, r, smin, opn, eta, err_norm, err_fro)
        if lam_min <= 0.0:
            raise LostPositiveDefinitenessError(
                f"iterate lost positive definiteness at step {t} "
                f"(lambda_min={lam_min:.6e})",
                step=t,
                trace=builder.finish(False, "lost-positive-definiteness"),
            )
        if r <= cfg.tol:
            converged = True
            break
        if r > DIVERGENCE_FACTOR * r0:
            raise DivergenceError(
                f"residual {r:.6e} at step {t} exceeds {DIVERGENCE_FACTOR:g}x "
                f"its initial value {r0:.6e}",
                step=t,
                trace=builder.finish(False, "diverged"),
            )
    trace = builder.finish(converged, "converged" if converged else "max-iters")
    return SpdMatrix(U), trace
