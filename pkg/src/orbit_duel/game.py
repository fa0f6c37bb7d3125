"""Transmitter-vs-jammer covariance game.

The desired transmitter picks ``Q0`` to maximize and the jammer picks
``Q1`` to minimize

    J(Q0, Q1) = log2 det(I + H0 Q0 H0^H P(Q1)^-1),
    P(Q1) = H1 Q1 H1^H + kappa I,

subject to ``tr Q0 <= E0`` and ``tr Q1 <= E1``. ``solve`` alternates an
exact water-filling best response for the transmitter with an
exponentiated (mirror) gradient step for the jammer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DomainError, NumericalDivergenceError, ShapeError, SingularityError

LN2 = math.log(2.0)


def _mat(h) -> np.ndarray:
    """Accept a StackedChannel, a CovarianceMatrix or anything array-like."""
    m = getattr(h, "matrix", h)
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Hermitian PSD transmit covariance with a trace budget (watts)."""

    matrix: np.ndarray
    budget: float

    def __post_init__(self):
        m = linalg.hermitize(self.matrix)
        lam = np.linalg.eigvalsh(m)
        if lam.size and lam[0] < -linalg.PSD_RTOL * max(lam[-1], 0.0):
            raise DomainError(f"covariance is not PSD (eigenvalue {lam[0]:.3e})")
        if np.trace(m).real > self.budget * (1.0 + 1e-8):
            raise DomainError(f"trace {np.trace(m).real:.6g} exceeds budget {self.budget:.6g}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @classmethod
    def uniform(cls, n: int, budget: float) -> "CovarianceMatrix":
        return cls(np.eye(n, dtype=complex) * (budget / n), budget)


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs. ``None`` picks a scale-aware default at solve time.

    step_size: base jammer mirror step ``eta``; default ``2 / ||G1(0)||_2``.
    tol: stop when ``||dQ0||_F + ||dQ1||_F < tol``; default ``1e-6 (E0 + E1)``.
    bisection_tol: water-level tolerance relative to ``E0``.
    eig_cutoff: modes of ``H0^H P^-1 H0`` below ``eig_cutoff * lambda_max`` are dead.
    """

    step_size: float | None = None
    tol: float | None = None
    max_iter: int = 2000
    bisection_tol: float = 1e-10
    eig_cutoff: float = 1e-14
    max_backtracks: int = 40
    keep_history: bool = False
    jammer_first: bool = False
    compress: bool = True

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0.0:
            raise DomainError("step size must be positive")
        if self.tol is not None and not self.tol > 0.0:
            raise DomainError("tolerance must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if not self.bisection_tol > 0.0 or not self.eig_cutoff > 0.0:
            raise DomainError("bisection tolerance and eigenvalue cutoff must be positive")


@dataclass(frozen=True, eq=False)
class WaterfillResult:
    q0: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mu: float
    powers: np.ndarray
    active: int
    dead: bool = False


@dataclass(frozen=True, eq=False)
class SolverIterate:
    t: int
    q0: np.ndarray
    q1: np.ndarray
    p: np.ndarray
    s: np.ndarray
    g1: np.ndarray
    rate: float
    dq0: float
    dq1: float


@dataclass(eq=False)
class GameSolution:
    q0: np.ndarray
    q1: np.ndarray
    rate: float
    iterations: int
    converged: bool
    step_size: float = 0.0
    history: list = field(default_factory=list)
    br_gap: float = float("nan")
    stationarity: float = float("nan")
    dead_channel: bool = False


# ---------------------------------------------------------------- primitives


def interference_cov(h1, q1, kappa: float) -> np.ndarray:
    """``H1 Q1 H1^H + kappa I``."""
    h1, q1 = _mat(h1), _mat(q1)
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    if h1.shape[1] != q1.shape[0] or q1.shape[0] != q1.shape[1]:
        raise ShapeError(f"H1 {h1.shape} and Q1 {q1.shape} are incompatible")
    p = h1 @ q1 @ h1.conj().T
    p = 0.5 * (p + p.conj().T)
    p[np.diag_indices_from(p)] += kappa
    return p


def rate(h0, q0, p) -> float:
    """Achievable rate in bits/s/Hz, ``(logdet(P + S) - logdet(P)) / ln 2``."""
    h0, q0, p = _mat(h0), _mat(q0), _mat(p)
    if h0.shape[1] != q0.shape[0] or h0.shape[0] != p.shape[0]:
        raise ShapeError(f"H0 {h0.shape}, Q0 {q0.shape}, P {p.shape} are incompatible")
    s = h0 @ q0 @ h0.conj().T
    s = 0.5 * (s + s.conj().T)
    j = (linalg.logdet(p + s) - linalg.logdet(p)) / LN2
    return max(j, 0.0)


def water_level(inv_gains: np.ndarray, budget: float, rtol: float = 1e-10) -> float:
    """Bisect for ``mu`` with ``sum((mu - inv_gains)_+) = budget``."""
    lo, hi = 0.0, budget + float(np.max(inv_gains))
    target = rtol * budget
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        excess = float(np.sum(np.maximum(mu - inv_gains, 0.0))) - budget
        if abs(excess) <= target:
            return mu
        if excess > 0.0:
            hi = mu
        else:
            lo = mu
    return 0.5 * (lo + hi)


def waterfill_best_response(h0, p, e0: float, cfg: SolverConfig | None = None) -> WaterfillResult:
    """Transmitter best response to interference-plus-noise covariance ``P``.

    Eigendecomposes ``Gamma = H0^H P^-1 H0 = V diag(lambda) V^H`` and pours
    ``E0`` over the modes: ``p_i = (mu - 1/lambda_i)_+``.
    """
    cfg = cfg or SolverConfig()
    h0, p = _mat(h0), _mat(p)
    if not e0 > 0.0:
        raise DomainError("E0 must be positive")
    if h0.shape[0] != p.shape[0]:
        raise ShapeError(f"H0 {h0.shape} and P {p.shape} are incompatible")
    try:
        gamma = h0.conj().T @ np.linalg.solve(p, h0)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("P is singular") from exc
    return _waterfill_gamma(gamma, e0, cfg)


def _waterfill_gamma(gamma: np.ndarray, e0: float, cfg: SolverConfig) -> WaterfillResult:
    gamma = 0.5 * (gamma + gamma.conj().T)
    lam, v = np.linalg.eigh(gamma)
    lam, v = lam[::-1], v[:, ::-1]
    n = lam.size
    top = lam[0] if n else 0.0
    if not np.all(np.isfinite(lam)):
        raise NumericalDivergenceError("non-finite channel gains in water-filling")
    if top <= 0.0 or top * e0 < 1e-300:
        return WaterfillResult(
            q0=np.zeros((n, n), dtype=complex), eigenvalues=lam, eigenvectors=v,
            mu=0.0, powers=np.zeros(n), active=0, dead=True,
        )
    alive = lam > cfg.eig_cutoff * top
    inv = 1.0 / lam[alive]
    mu = water_level(inv, e0, cfg.bisection_tol)
    powers = np.zeros(n)
    powers[alive] = np.maximum(mu - inv, 0.0)
    q0 = (v * powers) @ v.conj().T
    q0 = 0.5 * (q0 + q0.conj().T)
    return WaterfillResult(
        q0=q0, eigenvalues=lam, eigenvectors=v, mu=mu, powers=powers,
        active=int(np.count_nonzero(powers > 0.0)),
    )


def jammer_gradient(h0, h1, q0, q1, kappa: float) -> np.ndarray:
    """Gradient of the rate (in nats) with respect to ``Q1``.

    ``H1^H [(P+S)^-1 - P^-1] H1``, evaluated as ``-H1^H (P+S)^-1 S P^-1 H1``
    to avoid cancellation. Negative semidefinite.
    """
    h0, h1, q0 = _mat(h0), _mat(h1), _mat(q0)
    p = interference_cov(h1, q1, kappa)
    return _gradient(h0, h1, q0, p)


def _gradient(h0, h1, q0, p) -> np.ndarray:
    s = h0 @ q0 @ h0.conj().T
    try:
        a = np.linalg.solve(p + s, h0)  # (P+S)^-1 H0
        b = np.linalg.solve(p, h1)  # P^-1 H1
    except np.linalg.LinAlgError as exc:
        raise SingularityError("P or P + S is singular") from exc
    g = -(h1.conj().T @ a) @ q0 @ (h0.conj().T @ b)
    return 0.5 * (g + g.conj().T)


def jammer_step(q1, g1, eta: float, e1: float) -> np.ndarray:
    """Mirror step ``Y = exp(log Q1 - eta G1)``, rescaled onto ``tr <= E1`` if needed."""
    if not eta > 0.0:
        raise DomainError("step size must be positive")
    y = linalg.expm_hermitian(linalg.logm_hermitian(_mat(q1)) - eta * _mat(g1))
    tr = float(np.trace(y).real)
    if tr > e1:
        y = y * (e1 / tr)
    return y


# ---------------------------------------------------------------- solver


def _compress(h0: np.ndarray, h1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project both channels onto an orthonormal basis of their joint column space.

    The rate, best response and jammer gradient only see the receive space
    through this subspace, so the game is unchanged.
    """
    joint = np.hstack([h0, h1])
    if joint.shape[0] <= joint.shape[1]:
        return h0, h1
    u, sv, _ = np.linalg.svd(joint, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return h0[:1] * 0.0, h1[:1] * 0.0
    r = max(1, int(np.count_nonzero(sv > 1e-13 * sv[0])))
    ub = u[:, :r].conj().T
    return ub @ h0, ub @ h1


class _Game:
    """Normalized working copy of one game instance (noise power scaled to 1)."""

    def __init__(self, h0, h1, e0, e1, kappa, cfg: SolverConfig):
        h0, h1 = _mat(h0), _mat(h1)
        if h0.shape[0] != h1.shape[0]:
            raise ShapeError(f"H0 {h0.shape} and H1 {h1.shape} have different row counts")
        if not (e0 > 0.0 and e1 > 0.0 and kappa > 0.0):
            raise DomainError("budgets and kappa must be positive")
        self.full = not (cfg.compress and not cfg.keep_history)
        scale = 1.0 / math.sqrt(kappa)
        h0, h1 = h0 * scale, h1 * scale
        if not self.full:
            h0, h1 = _compress(h0, h1)
        self.h0, self.h1 = h0, h1
        self.e0, self.e1, self.kappa = e0, e1, kappa
        self.cfg = cfg
        self.eye = np.eye(h0.shape[0])

    def p(self, q1):
        p = self.h1 @ q1 @ self.h1.conj().T
        return 0.5 * (p + p.conj().T) + self.eye

    def rate(self, q0, p) -> float:
        s = self.h0 @ q0 @ self.h0.conj().T
        s = 0.5 * (s + s.conj().T)
        # log det(I + L^-1 S L^-H) with P = L L^H
        lc = np.linalg.cholesky(p)
        x = np.linalg.solve(lc, np.linalg.solve(lc, s).conj().T)
        x = 0.5 * (x + x.conj().T)
        lam = np.linalg.eigvalsh(x)
        return max(float(np.sum(np.log1p(np.maximum(lam, -0.999999)))) / LN2, 0.0)

    def best_response(self, p) -> WaterfillResult:
        gamma = self.h0.conj().T @ np.linalg.solve(p, self.h0)
        return _waterfill_gamma(gamma, self.e0, self.cfg)

    def gradient(self, q0, p) -> np.ndarray:
        # gradient with kappa scaled out: dJ/dQ1 is invariant to the normalization
        return _gradient(self.h0, self.h1, q0, p)


def _log_step(log_q1: np.ndarray, g1: np.ndarray, eta: float, e1: float):
    """Mirror step in the log domain; returns ``(log Y', Y')`` after trace scaling."""
    arg = log_q1 - eta * g1
    lam, v = np.linalg.eigh(0.5 * (arg + arg.conj().T))
    top = lam.max()
    if not np.isfinite(top):
        raise FloatingPointError
    log_tr = top + math.log(float(np.sum(np.exp(lam - top))))
    lam = lam + min(0.0, math.log(e1) - log_tr)
    y = (v * np.exp(lam)) @ v.conj().T
    log_y = (v * lam) @ v.conj().T
    return 0.5 * (log_y + log_y.conj().T), 0.5 * (y + y.conj().T)


def solve(h0, h1, e0: float, e1: float, kappa: float, cfg: SolverConfig | None = None) -> GameSolution:
    """Alternating water-filling best response and jammer mirror descent.

    Starts from ``Q0 = E0/N0 I`` and ``Q1 = E1/N1 I``. Each sweep sets ``Q0``
    to the best response against the current ``Q1`` and then moves ``Q1``
    along ``-G1`` in the matrix-log domain. A trial step is accepted only if
    the rate after the transmitter re-optimizes does not rise; otherwise the
    step is halved (the next sweep starts again from the base step). With
    ``cfg.jammer_first`` the jammer moves first in every sweep.
    """
    cfg = cfg or SolverConfig()
    g = _Game(h0, h1, e0, e1, kappa, cfg)
    n0, n1 = g.h0.shape[1], g.h1.shape[1]
    tol = cfg.tol if cfg.tol is not None else 1e-6 * (e0 + e1)

    q0 = np.eye(n0, dtype=complex) * (e0 / n0)
    q1 = np.eye(n1, dtype=complex) * (e1 / n1)
    log_q1 = np.eye(n1, dtype=complex) * math.log(e1 / n1)
    eta = cfg.step_size
    history: list[SolverIterate] = []
    converged = False
    t = 0

    try:
        p = g.p(q1)
        wf = g.best_response(p)  # best response to the current Q1, kept in step with it
        phi = g.rate(wf.q0, p)
        for t in range(cfg.max_iter):
            q0_new = q0 if cfg.jammer_first else wf.q0
            grad = g.gradient(q0_new, p)
            if eta is None:
                gnorm = float(np.linalg.norm(grad, 2))
                eta = 2.0 / gnorm if gnorm > 0.0 else 1.0
            step = eta
            log_new, q1_new, p_new, wf_new, phi_new = log_q1, q1, p, wf, phi
            for _ in range(cfg.max_backtracks + 1):
                try:
                    log_try, q1_try = _log_step(log_q1, grad, step, e1)
                except FloatingPointError:
                    step *= 0.5
                    continue
                p_try = g.p(q1_try)
                wf_try = g.best_response(p_try)
                phi_try = g.rate(wf_try.q0, p_try)
                if phi_try <= phi + 1e-12 * max(1.0, phi):
                    log_new, q1_new, p_new, wf_new, phi_new = log_try, q1_try, p_try, wf_try, phi_try
                    break
                step *= 0.5
            if cfg.jammer_first:
                q0_new = wf_new.q0
            dq0 = float(np.linalg.norm(q0_new - q0))
            dq1 = float(np.linalg.norm(q1_new - q1))
            if not (math.isfinite(dq0) and math.isfinite(dq1) and math.isfinite(phi_new)):
                raise NumericalDivergenceError(f"non-finite iterate at t={t}", history)
            if cfg.keep_history:
                s = g.h0 @ q0_new @ g.h0.conj().T
                history.append(
                    SolverIterate(
                        t=t, q0=q0_new, q1=q1_new, p=p_new * kappa, s=s * kappa,
                        g1=grad, rate=g.rate(q0_new, p_new), dq0=dq0, dq1=dq1,
                    )
                )
            q0, q1, log_q1, p, wf, phi = q0_new, q1_new, log_new, p_new, wf_new, phi_new
            if dq0 + dq1 < tol:
                converged = True
                break
    except np.linalg.LinAlgError as exc:
        raise NumericalDivergenceError(f"linear algebra failure at t={t}: {exc}", history) from exc

    sol = GameSolution(
        q0=q0, q1=q1, rate=g.rate(q0, p), iterations=t + 1, converged=converged,
        step_size=eta if eta is not None else 0.0, history=history, dead_channel=wf.dead,
    )
    gap, resid = _diagnostics(g, sol, log_q1)
    sol.br_gap, sol.stationarity = gap, resid
    return sol


def _diagnostics(g: _Game, sol: GameSolution, log_q1: np.ndarray) -> tuple[float, float]:
    p = g.p(sol.q1)
    br = g.best_response(p)
    gap = max(g.rate(br.q0, p) - g.rate(sol.q0, p), 0.0)
    grad = g.gradient(sol.q0, p)
    eta = sol.step_size if sol.step_size > 0.0 else 1.0
    if not np.any(grad):
        return gap, 0.0
    _, stepped = _log_step(log_q1, grad, eta, g.e1)
    resid = float(np.linalg.norm(sol.q1 - stepped) / np.linalg.norm(sol.q1))
    return gap, resid


def saddle_check(h0, h1, sol: GameSolution, kappa: float, e0: float, e1: float,
                 eta: float | None = None) -> tuple[float, float]:
    """Best-response gap (bits) and relative jammer stationarity residual.

    ``gap = J(BR(Q1*), Q1*) - J(Q0*, Q1*)`` and
    ``resid = ||Q1* - step(Q1*)||_F / ||Q1*||_F`` using the solver's final step size
    unless ``eta`` is given.
    """
    h0, h1 = _mat(h0), _mat(h1)
    p = interference_cov(h1, sol.q1, kappa)
    br = waterfill_best_response(h0, p, e0)
    gap = max(rate(h0, br.q0, p) - rate(h0, sol.q0, p), 0.0)
    g1 = jammer_gradient(h0, h1, sol.q0, sol.q1, kappa)
    if not np.any(g1):
        return gap, 0.0
    eta = eta if eta is not None else (sol.step_size or 1.0)
    stepped = jammer_step(sol.q1, g1, eta, e1)
    return gap, float(np.linalg.norm(sol.q1 - stepped) / np.linalg.norm(sol.q1))
