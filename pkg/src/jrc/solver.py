"""Iterative quadratic method for ``min_X ||AX - Y||_{2,q}^q + lam ||X||_{2,p}^p``.

Every outer iteration freezes the row weights ``G`` (residual rows) and
``H`` (coding rows) at the current iterate and minimises the quadratic

    Q_k(X) = 1/2 <X, M_k X> - <B_k, X>,
    M_k = A^T G_k A + lam (p/q) H_k,   B_k = A^T G_k Y,

either exactly (``mode="exact"``) or approximately with Barzilai-Borwein
gradient steps (``mode="bb"``). The objective never increases from one
outer iterate to the next, up to the ``delta`` floor on row norms.
"""

import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg as sla

from .matrixcore import (
    NormExponents,
    NumericalBreakdown,
    ShapeError,
    as_matrix,
    mixed_norm_pow,
    row_l2_norms,
    weight_G,
    weight_H,
)

__all__ = [
    "TRACE_SCHEMA",
    "AlreadyStationary",
    "SolverConfig",
    "Subproblem",
    "InnerTrace",
    "OuterRecord",
    "ConvergenceTrace",
    "assemble_subproblem",
    "solve_subproblem_exact",
    "quadratic_Q",
    "quadratic_grad",
    "cauchy_stepsize",
    "bb_stepsize",
    "bb_inner",
    "iqm_solve",
    "stationarity_residual",
]

TRACE_SCHEMA = "jrc.trace/1"


class AlreadyStationary(ArithmeticError):
    """The gradient vanished, so no steplength is defined."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solve.

    Attributes
    ----------
    q, p : float
        Fidelity exponent in [1, 2] and regularisation exponent in (0, 2].
    lam : float
        Regularisation weight.
    eps_outer : float
        Stop once the relative objective drop ``rho_k`` is at most this.
    eps_inner : float
        BB loop tolerance, see ``inner_stop``.
    inner_stop : {"reduction", "b_scaled"}
        ``"reduction"`` stops the BB loop once the gradient norm has shrunk
        by ``eps_inner`` relative to its value at the warm start;
        ``"b_scaled"`` once ``||grad Q||_F <= eps_inner * (1 + ||B||_F)``.
        Both also stop when the gradient is at roundoff level,
        ``||grad Q||_F <= 1e-13 * (1 + ||B||_F)``.
    delta : float
        Floor on row norms inside the weight diagonals.
    max_outer, max_inner : int
        Iteration caps.
    mode : {"exact", "bb"}
        Exact subproblem solves or Barzilai-Borwein inner loop.
    bb_formula : {"45", "45prime"}
        ``<S,T>/<T,T>`` or ``<S,S>/<S,MS>``.
    step_clamp : tuple of float
        Bounds applied to every BB steplength.
    init : {"ridge", "zeros"}
        Starting point when no explicit ``X0`` is passed to :func:`iqm_solve`.
    """

    q: float = 2.0
    p: float = 1.0
    lam: float = 0.1
    eps_outer: float = 1e-3
    eps_inner: float = 1e-3
    delta: float = 1e-8
    max_outer: int = 100
    max_inner: int = 200
    mode: str = "bb"
    bb_formula: str = "45"
    step_clamp: tuple = (1e-12, 1e12)
    init: str = "ridge"
    inner_stop: str = "reduction"

    def __post_init__(self):
        NormExponents(self.q, self.p)
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        for name in ("eps_outer", "eps_inner", "delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be at least 1")
        if self.mode not in ("exact", "bb"):
            raise ValueError(f"mode must be 'exact' or 'bb', got {self.mode!r}")
        if self.bb_formula not in ("45", "45prime"):
            raise ValueError(f"bb_formula must be '45' or '45prime', got {self.bb_formula!r}")
        lo, hi = self.step_clamp
        if not (0 < lo < hi):
            raise ValueError("step_clamp must satisfy 0 < lo < hi")
        if self.inner_stop not in ("reduction", "b_scaled"):
            raise ValueError(f"inner_stop must be 'reduction' or 'b_scaled', got {self.inner_stop!r}")
        if self.init not in ("ridge", "zeros"):
            raise ValueError(f"init must be 'ridge' or 'zeros', got {self.init!r}")

    @property
    def exps(self):
        return NormExponents(self.q, self.p)


@dataclass
class Subproblem:
    """Frozen-weight quadratic of one outer iteration.

    ``products`` holds the per-class reconstructions ``A_i X_i`` of the
    iterate the weights were computed at.
    """

    M: np.ndarray
    B: np.ndarray
    G: np.ndarray
    H: np.ndarray
    residual: np.ndarray
    products: list = field(default_factory=list, repr=False)


@dataclass
class InnerTrace:
    steps: int = 0
    q_start: float = 0.0
    q_end: float = 0.0
    grad_norm: float = 0.0
    clamp_events: int = 0
    restarted: bool = False
    exact_fallback: bool = False


@dataclass
class OuterRecord:
    k: int
    objective: float
    next_objective: float
    rho: float
    inner_steps: int
    q_entry: float
    q_exit: float
    elapsed_ms: float
    solve_path: str
    clamp_events: int = 0


@dataclass
class ConvergenceTrace:
    """Per-outer-iteration history of one solve."""

    q: float
    p: float
    lam: float
    mode: str
    records: list = field(default_factory=list)
    converged: bool = False
    total_ms: float = 0.0
    class_products: list = field(default_factory=list, repr=False)

    @property
    def objectives(self):
        """``J(X_1), ..., J(X_{K+1})``."""
        if not self.records:
            return []
        return [r.objective for r in self.records] + [self.records[-1].next_objective]

    @property
    def rhos(self):
        return [r.rho for r in self.records]

    @property
    def iterations(self):
        return len(self.records)

    @property
    def fallbacks(self):
        return sum(r.solve_path not in ("cholesky", "bb") for r in self.records)

    def to_dict(self):
        return {
            "schema": TRACE_SCHEMA,
            "q": self.q,
            "p": self.p,
            "lambda": self.lam,
            "mode": self.mode,
            "converged": self.converged,
            "iterations": self.iterations,
            "total_ms": self.total_ms,
            "J": self.objectives,
            "rho": self.rhos,
            "inner_steps": [r.inner_steps for r in self.records],
            "elapsed_ms": [r.elapsed_ms for r in self.records],
            "records": [asdict(r) for r in self.records],
        }


def _check_shapes(A, Y, X=None):
    m, d = A.shape
    if Y.shape[0] != m:
        raise ShapeError(f"A has {m} rows but Y has {Y.shape[0]}; expected Y of shape ({m}, n)")
    if X is not None and X.shape != (d, Y.shape[1]):
        raise ShapeError(f"X has shape {X.shape}; expected ({d}, {Y.shape[1]})")


def _class_slices(class_sizes, d):
    if class_sizes is None:
        return [slice(0, d)]
    bounds = np.concatenate([[0], np.cumsum(class_sizes)])
    if bounds[-1] != d:
        raise ShapeError(f"class sizes sum to {bounds[-1]} but A has {d} columns")
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _residual_by_class(A, Y, X, class_sizes=None):
    C = -Y.copy()
    products = []
    for sl in _class_slices(class_sizes, A.shape[1]):
        Bi = A[:, sl] @ X[sl]
        products.append(Bi)
        C += Bi
    return C, products


def _reg_scale(reg_weights, d):
    if reg_weights is None:
        return np.ones(d)
    w = np.asarray(reg_weights, dtype=np.float64).ravel()
    if w.shape != (d,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"reg_weights must be {d} positive finite values")
    return w


def _objective(R, X, cfg, w):
    norms = row_l2_norms(X)
    if cfg.p == 2:
        reg = norms * norms
    else:
        reg = np.zeros_like(norms)
        nz = norms > 0
        reg[nz] = norms[nz] ** cfg.p
    return mixed_norm_pow(R, cfg.q) + cfg.lam * float(np.sum(w * reg))


def assemble_subproblem(A, Y, X, cfg, class_sizes=None, reg_weights=None):
    """Build ``M = A^T G A + lam (p/q) H`` and ``B = A^T G Y`` at iterate ``X``.

    The residual ``AX - Y`` is accumulated class block by class block when
    ``class_sizes`` is given, keeping the products ``A_i X_i``.
    ``reg_weights`` rescales the regularisation of individual rows.
    """
    A, Y, X = as_matrix(A, "A"), as_matrix(Y, "Y"), as_matrix(X, "X")
    _check_shapes(A, Y, X)
    w = _reg_scale(reg_weights, A.shape[1])
    R, products = _residual_by_class(A, Y, X, class_sizes)
    G = weight_G(R, cfg.q, cfg.delta)
    H = weight_H(X, cfg.p, cfg.delta)
    GA = G[:, None] * A
    M = A.T @ GA
    M = 0.5 * (M + M.T)
    M[np.diag_indices_from(M)] += cfg.lam * (cfg.p / cfg.q) * w * H
    B = GA.T @ Y
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(B))):
        raise NumericalBreakdown("non-finite entries while assembling the subproblem")
    return Subproblem(M=M, B=B, G=G, H=H, residual=R, products=products)


def _solve_spd(M, B):
    try:
        return sla.cho_solve(sla.cho_factor(M, lower=True, check_finite=False), B), "cholesky"
    except sla.LinAlgError:
        pass
    d = M.shape[0]
    jitter = 1e-10 * np.trace(M) / d
    try:
        Mj = M + jitter * np.eye(d)
        return sla.cho_solve(sla.cho_factor(Mj, lower=True, check_finite=False), B), "cholesky_jitter"
    except sla.LinAlgError:
        return np.linalg.pinv(M, hermitian=True) @ B, "pinv"


def solve_subproblem_exact(S):
    """Solve ``M X = B`` by Cholesky, falling back to a pseudo-inverse.

    A failed factorisation is retried once with ``1e-10 tr(M)/d`` added to
    the diagonal before resorting to ``pinv``.
    """
    if not (np.all(np.isfinite(S.M)) and np.all(np.isfinite(S.B))):
        raise NumericalBreakdown("non-finite subproblem")
    return _solve_spd(S.M, S.B)[0]


def quadratic_Q(S, X):
    """``1/2 <X, M X> - <B, X>``."""
    return float(0.5 * np.vdot(X, S.M @ X) - np.vdot(S.B, X))


def quadratic_grad(S, X):
    return S.M @ X - S.B


def cauchy_stepsize(S, grad):
    """Exact line-search step ``<g, g> / <g, M g>`` along ``-g``."""
    gg = float(np.vdot(grad, grad))
    if gg == 0.0:
        raise AlreadyStationary("zero gradient")
    gMg = float(np.vdot(grad, S.M @ grad))
    if not gMg > 0:
        raise AlreadyStationary("gradient in the null space of M")
    return gg / gMg


def bb_stepsize(Sk, Tk, M=None, which="45", clamp=(1e-12, 1e12)):
    """Barzilai-Borwein steplength from the secant pair ``(Sk, Tk)``.

    ``which="45"`` gives ``<S, T> / <T, T>`` and ``"45prime"`` gives
    ``<S, S> / <S, M S>`` (``Tk`` stands in for ``M Sk`` when ``M`` is
    omitted). The result is clipped to ``clamp``; a zero or negative
    denominator returns the upper bound.
    """
    lo, hi = clamp
    if which == "45":
        num, den = np.vdot(Sk, Tk), np.vdot(Tk, Tk)
    elif which == "45prime":
        MS = Tk if M is None else M @ Sk
        num, den = np.vdot(Sk, Sk), np.vdot(Sk, MS)
    else:
        raise ValueError(f"unknown BB formula {which!r}")
    if not den > 0 or not np.isfinite(den):
        return hi
    alpha = float(num / den)
    if not np.isfinite(alpha):
        return hi
    return min(max(alpha, lo), hi)


def _bb_loop(S, X0, cfg, cauchy_only):
    """Run the inner iteration; returns (best X, best Q, info) or raises on breakdown."""
    lo, hi = cfg.step_clamp
    X = X0
    g = quadratic_grad(S, X)
    b_scale = 1.0 + np.linalg.norm(S.B)
    if cfg.inner_stop == "b_scaled":
        tol = cfg.eps_inner * b_scale
    else:
        tol = max(cfg.eps_inner * np.linalg.norm(g), 1e-13 * b_scale)
    Qx = 0.5 * float(np.vdot(X, g)) - 0.5 * float(np.vdot(S.B, X))
    best_X, best_Q = X, Qx
    info = InnerTrace(q_start=Qx)
    X_prev = g_prev = None
    for t in range(cfg.max_inner):
        gnorm = np.linalg.norm(g)
        info.grad_norm = float(gnorm)
        if gnorm <= tol:
            break
        if t == 0 or cauchy_only:
            try:
                alpha = cauchy_stepsize(S, g)
            except AlreadyStationary:
                break
        else:
            Sk = X - X_prev
            if not np.any(Sk):
                break  # steps fell below the resolution of X
            alpha = bb_stepsize(Sk, g - g_prev, S.M, cfg.bb_formula, cfg.step_clamp)
            if alpha <= lo or alpha >= hi:
                info.clamp_events += 1
        X_prev, g_prev = X, g
        with np.errstate(over="ignore", invalid="ignore"):
            X = X - alpha * g
            g = quadratic_grad(S, X)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(g))):
            raise NumericalBreakdown("non-finite inner iterate")
        info.steps = t + 1
        Qx = 0.5 * float(np.vdot(X, g)) - 0.5 * float(np.vdot(S.B, X))
        if Qx < best_Q:
            best_X, best_Q = X, Qx
    info.q_end = best_Q
    return best_X, best_Q, info


def bb_inner(S, X_init, cfg):
    """Approximately minimise ``Q`` by Barzilai-Borwein gradient steps.

    Starts from ``X_init`` with a Cauchy step, then uses BB steplengths
    until the stopping test selected by ``cfg.inner_stop`` holds or
    ``cfg.max_inner`` steps have been taken.
    The iterate with the lowest ``Q`` seen is returned, so
    ``Q(X_out) <= Q(X_init)`` whatever the BB steps do. A non-finite
    iterate restarts the loop with Cauchy steps only; if that breaks down
    as well, the subproblem is solved exactly.

    Returns
    -------
    X : ndarray
    info : InnerTrace
    """
    X_init = as_matrix(X_init, "X_init")
    try:
        X, _, info = _bb_loop(S, X_init, cfg, cauchy_only=False)
        return X, info
    except NumericalBreakdown:
        pass
    try:
        X, _, info = _bb_loop(S, X_init, cfg, cauchy_only=True)
        info.restarted = True
        return X, info
    except NumericalBreakdown:
        pass
    X = solve_subproblem_exact(S)
    Qx = quadratic_Q(S, X)
    return X, InnerTrace(q_start=quadratic_Q(S, X_init), q_end=Qx, restarted=True,
                         exact_fallback=True)


def _initial_point(A, Y, cfg, X0):
    d, n = A.shape[1], Y.shape[1]
    if X0 is not None:
        X0 = as_matrix(X0, "X0")
        if X0.shape != (d, n):
            raise ShapeError(f"X0 has shape {X0.shape}; expected ({d}, {n})")
        return X0.copy()
    if cfg.init == "zeros":
        return np.zeros((d, n))
    M = A.T @ A
    M[np.diag_indices_from(M)] += cfg.lam
    return _solve_spd(M, A.T @ Y)[0]


def iqm_solve(A, Y, cfg=None, X0=None, class_sizes=None, reg_weights=None):
    """Minimise ``||AX - Y||_{2,q}^q + lam ||X||_{2,p}^p`` by reweighting.

    Parameters
    ----------
    A : array_like, shape (m, d)
    Y : array_like, shape (m, n)
    cfg : SolverConfig, optional
    X0 : array_like, shape (d, n), optional
        Starting point; overrides ``cfg.init``. The default start is the
        ridge solution ``(A^T A + lam I)^{-1} A^T Y``.
    class_sizes : sequence of int, optional
        Column counts of the class blocks of ``A``. When given, the final
        per-class products ``A_i X_i`` are stored on the trace.
    reg_weights : array_like, shape (d,), optional
        Per-row multipliers of ``lam``.

    Returns
    -------
    X : ndarray, shape (d, n)
        Lowest-objective iterate.
    trace : ConvergenceTrace
    """
    cfg = cfg or SolverConfig()
    A, Y = as_matrix(A, "A"), as_matrix(Y, "Y")
    _check_shapes(A, Y)
    w = _reg_scale(reg_weights, A.shape[1])
    trace = ConvergenceTrace(q=cfg.q, p=cfg.p, lam=cfg.lam, mode=cfg.mode)
    t_start = time.perf_counter()

    X = _initial_point(A, Y, cfg, X0)
    R, _ = _residual_by_class(A, Y, X)
    J = _objective(R, X, cfg, w)
    best_X, best_J = X, J
    for k in range(1, cfg.max_outer + 1):
        t0 = time.perf_counter()
        if J == 0.0:
            trace.converged = True
            break
        S = assemble_subproblem(A, Y, X, cfg, reg_weights=w)
        q_entry = quadratic_Q(S, X)
        if cfg.mode == "exact":
            X_new, path = _solve_spd(S.M, S.B)
            steps, clamps = 0, 0
        else:
            X_new, info = bb_inner(S, X, cfg)
            path = "bb_exact_fallback" if info.exact_fallback else (
                "bb_restart" if info.restarted else "bb")
            steps, clamps = info.steps, info.clamp_events
        if not np.all(np.isfinite(X_new)):
            raise NumericalBreakdown(f"non-finite iterate at outer iteration {k}")
        R_new, _ = _residual_by_class(A, Y, X_new)
        J_new = _objective(R_new, X_new, cfg, w)
        rho = (J - J_new) / J
        trace.records.append(OuterRecord(
            k=k, objective=J, next_objective=J_new, rho=rho, inner_steps=steps,
            q_entry=q_entry, q_exit=quadratic_Q(S, X_new),
            elapsed_ms=1e3 * (time.perf_counter() - t0), solve_path=path,
            clamp_events=clamps,
        ))
        X, J = X_new, J_new
        if J < best_J:
            best_X, best_J = X, J
        if rho <= cfg.eps_outer:
            trace.converged = True
            break

    _, trace.class_products = _residual_by_class(A, Y, best_X, class_sizes)
    trace.total_ms = 1e3 * (time.perf_counter() - t_start)
    return best_X, trace


def stationarity_residual(A, Y, X, cfg, reg_weights=None):
    """``||q A^T G (AX - Y) + lam p H X||_F / (1 + ||X||_F)`` with weights at ``X``."""
    A, Y, X = as_matrix(A, "A"), as_matrix(Y, "Y"), as_matrix(X, "X")
    _check_shapes(A, Y, X)
    w = _reg_scale(reg_weights, A.shape[1])
    R = A @ X - Y
    G = weight_G(R, cfg.q, cfg.delta)
    H = weight_H(X, cfg.p, cfg.delta)
    grad = cfg.q * (A.T @ (G[:, None] * R)) + cfg.lam * cfg.p * (w * H)[:, None] * X
    return float(np.linalg.norm(grad) / (1.0 + np.linalg.norm(X)))
