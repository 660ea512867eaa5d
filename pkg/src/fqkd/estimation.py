"""Phase-error estimation from F-qubit detection statistics.

The Fourier transition matrix ``P[l, n] = p(eta_n | eta_l)`` and the F-qubit
detection matrix ``M[x, y] = p(phi_y | phi_x)`` are related by

    M = B P B^T,        B[(j,k,m), l] = (2/d) cos^2(pi (m - (k-j) l) / d)

and the exact left inverse

    P = A^T M A,        A[(j,k,m), l] = (2/d^2) (beta + d [m = (k-j) l mod d])

with ``beta = (2-d)/(d-1)``. Rows and columns of ``M`` follow
:func:`fqkd.hilbert.enumerate_fqubit_labels`; rows are prepared states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hilbert import DomainError, FQubitLabel, enumerate_fqubit_labels, num_fqubit_states, num_pairs

log = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-8


class DataError(ValueError):
    """Measured data cannot be used (e.g. a prepared state with no counts)."""


# --- entropy and key rate -------------------------------------------------


def shannon_entropy_d(x: float, d: int) -> float:
    """d-dimensional Shannon entropy ``h_d(x)`` in bits.

    ``h_d(0) = 0`` and ``h_d(1) = log2(d-1)`` by continuity.
    """
    if d < 2:
        raise DomainError(f"entropy needs d >= 2, got {d}")
    if not 0 <= x <= 1:
        raise DomainError(f"error rate {x!r} outside [0, 1]")
    h = 0.0
    if x > 0:
        h -= x * np.log2(x / (d - 1))
    if x < 1:
        h -= (1 - x) * np.log2(1 - x)
    return float(h)


@dataclass(frozen=True)
class KeyRateReport:
    dim: int
    dit_error: float
    phase_error: float
    key_rate: float
    leak_bound: float

    @property
    def insecure(self) -> bool:
        return self.key_rate <= 0

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "dit_error": self.dit_error,
            "phase_error": self.phase_error,
            "key_rate": self.key_rate,
            "leak_bound": self.leak_bound,
            "insecure": self.insecure,
        }


def secret_key_rate(d: int, dit_error: float, phase_error: float) -> KeyRateReport:
    """Asymptotic secret bits per sifted photon, ``log2 d - h_d(E_d) - h_d(E'_d)``.

    Negative rates are reported as is; the ``insecure`` flag marks ``R <= 0``.
    """
    leak = shannon_entropy_d(phase_error, d)
    rate = np.log2(d) - shannon_entropy_d(dit_error, d) - leak
    return KeyRateReport(d, float(dit_error), float(phase_error), float(rate), leak)


# --- forward / inverse maps -------------------------------------------------


def beta(d: int) -> float:
    return (2 - d) / (d - 1)


def alpha_coefficient(d: int, j: int, k: int, m: int, ell: int) -> float:
    """Inversion weight of F-qubit ``(j, k, m)`` for Fourier index ``ell``.

    The root-of-unity sum ``sum_p exp(2 pi i p (m - (k-j) ell) / d)`` is ``d``
    when ``m = (k-j) ell (mod d)`` and zero otherwise, so the weight is real.
    """
    FQubitLabel(j, k, m).validate(d)
    if not 0 <= ell < d:
        raise DomainError(f"Fourier index {ell} out of range for d={d}")
    hit = (m - (k - j) * ell) % d == 0
    return 2 / d**2 * (beta(d) + (d if hit else 0))


@lru_cache(maxsize=None)
def _transfer_matrices(d: int) -> tuple[np.ndarray, np.ndarray]:
    labels = np.array(enumerate_fqubit_labels(d))
    j, k, m = labels.T
    ell = np.arange(d)
    phase = m[:, None] - (k - j)[:, None] * ell[None, :]
    # cos^2(pi s / d) only depends on s mod d; reducing keeps the argument small
    B = 2 / d * np.cos(np.pi * (phase % d) / d) ** 2
    A = 2 / d**2 * (beta(d) + d * (phase % d == 0))
    B.flags.writeable = False
    A.flags.writeable = False
    return B, A


def fourier_overlaps(d: int) -> np.ndarray:
    """``B[x, l] = |<eta_l|phi_x>|^2`` for every F-qubit ``x`` (read-only)."""
    return _transfer_matrices(d)[0]


def alpha_matrix(d: int) -> np.ndarray:
    """``A[x, l] = alpha_coefficient(d, *x, l)`` (read-only)."""
    return _transfer_matrices(d)[1]


def dimension_of(M) -> int:
    """Recover ``d`` from the size ``D = d^2 (d-1) / 2`` of an F-qubit matrix."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"F-qubit matrix must be square, got shape {M.shape}")
    size = M.shape[0]
    d = 2
    while num_fqubit_states(d) < size:
        d += 1
    if num_fqubit_states(d) != size:
        raise DomainError(f"{size} is not d^2(d-1)/2 for any d")
    return d


def check_transition(P, d: int | None = None, tol: float = ROW_SUM_TOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise DomainError(f"transition matrix must be square with d >= 2, got {P.shape}")
    if d is not None and P.shape[0] != d:
        raise DomainError(f"transition matrix has d={P.shape[0]}, expected {d}")
    if not np.isfinite(P).all() or (P < 0).any():
        raise DomainError("transition matrix entries must be finite and nonnegative")
    if np.abs(P.sum(axis=1) - 1).max() > tol:
        raise DomainError("transition matrix rows must sum to 1")
    return P


def forward_map(P) -> np.ndarray:
    """F-qubit detection matrix produced by Fourier transition matrix ``P``.

    Each output row sums to ``d(d-1)/2``.
    """
    P = check_transition(P)
    B = fourier_overlaps(P.shape[0])
    return B @ P @ B.T


def invert_map(M) -> np.ndarray:
    """Exact linear reconstruction of ``P`` from a detection matrix.

    Noisy input can give entries outside [0, 1]; see :func:`is_physical`.
    """
    M = np.asarray(M, dtype=float)
    A = alpha_matrix(dimension_of(M))
    return A.T @ M @ A


def is_physical(P, tol: float = 0.0) -> bool:
    P = np.asarray(P)
    return bool((P >= -tol).all() and (P <= 1 + tol).all())


# --- constrained fit ----------------------------------------------------------


def project_simplex_rows(Y) -> np.ndarray:
    """Euclidean projection of every row of ``Y`` onto the probability simplex."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[1]
    U = -np.sort(-Y, axis=1)
    css = np.cumsum(U, axis=1) - 1
    idx = np.arange(1, n + 1)
    rho = (U - css / idx > 0).sum(axis=1)
    theta = css[np.arange(Y.shape[0]), rho - 1] / rho
    return np.maximum(Y - theta[:, None], 0)


@dataclass(frozen=True)
class FitResult:
    transition: np.ndarray
    objective: float
    converged: bool
    iterations: int
    history: tuple[float, ...] = ()

    @property
    def phase_error(self) -> float:
        return phase_error_rate(self.transition)


def fit_objective(P, M) -> float:
    B = fourier_overlaps(np.shape(P)[0])
    R = B @ np.asarray(P) @ B.T - np.asarray(M)
    return float(np.sum(R * R))


def fit_physical_transition(
    M, tol: float = 1e-10, max_iter: int = 100_000, keep_history: bool = False
) -> FitResult:
    """Closest row-stochastic ``P`` to ``M`` under the forward map.

    Minimizes ``||B P B^T - M||_F^2`` by projected gradient descent with step
    ``1/L`` (``L`` the gradient's Lipschitz constant), which makes the objective
    non-increasing. Starts from the simplex projection of :func:`invert_map`
    and stops once an iteration lowers the objective by less than ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    M = np.asarray(M, dtype=float)
    d = dimension_of(M)
    B = fourier_overlaps(d)
    G = B.T @ B
    target = B.T @ M @ B
    const = float(np.sum(M * M))
    step = 1 / (2 * np.linalg.eigvalsh(G).max() ** 2)

    def objective(P):
        return float(np.sum((G @ P @ G) * P) - 2 * np.sum(target * P) + const)

    P = project_simplex_rows(invert_map(M))
    f = objective(P)
    history = [f] if keep_history else []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        grad = 2 * (G @ P @ G - target)
        P_new = project_simplex_rows(P - step * grad)
        f_new = objective(P_new)
        if keep_history:
            history.append(f_new)
        decrease = f - f_new
        P, f = P_new, f_new
        if decrease < tol:
            converged = True
            break
    if not converged:
        log.warning("fit did not converge within %d iterations", max_iter)
    # the expanded objective loses precision near zero; report the direct residual
    return FitResult(P, fit_objective(P, M), converged, it, tuple(history))


# --- error rates -------------------------------------------------------------


def phase_error_rate(P) -> float:
    """Fourier-basis dit error ``(1/d) sum_{l != n} P[l, n]``."""
    P = np.asarray(P, dtype=float)
    d = P.shape[0]
    return float((P.sum() - np.trace(P)) / d)


def dit_error_rate(C) -> float:
    """Computational-basis dit error for a row-stochastic confusion matrix."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DomainError(f"confusion matrix must be square, got {C.shape}")
    if (C < 0).any() or np.abs(C.sum(axis=1) - 1).max() > ROW_SUM_TOL:
        raise DomainError("confusion matrix must be row-stochastic")
    return float((C.sum() - np.trace(C)) / C.shape[0])


def normalize_counts(raw, d: int | None = None) -> np.ndarray:
    """Scale every row of an F-qubit count matrix to sum to ``d(d-1)/2``."""
    raw = np.asarray(raw, dtype=float)
    size = dimension_of(raw)
    if d is not None and d != size:
        raise DomainError(f"count matrix is for d={size}, expected d={d}")
    if (raw < 0).any() or not np.isfinite(raw).all():
        raise DataError("counts must be finite and nonnegative")
    totals = raw.sum(axis=1)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        label = enumerate_fqubit_labels(size)[empty[0]]
        raise DataError(f"no counts recorded for prepared state {label}")
    return raw * (num_pairs(size) / totals)[:, None]


def row_normalize(counts, kind: str = "computational") -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=1)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise DataError(f"no counts recorded for {kind} state {int(empty[0])}")
    return counts / totals[:, None]


def dit_error_standard_error(counts) -> float:
    """Naive binomial standard error of the dit error estimate."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=1)
    p = np.diag(counts) / n
    d = counts.shape[0]
    return float(np.sqrt(np.sum(p * (1 - p) / n)) / d)


def phase_error_standard_error(counts) -> float:
    """Naive multinomial standard error of the phase error estimate.

    Propagates per-row multinomial noise through the linear inversion; it is
    a rough guide, not a security-grade bound.
    """
    counts = np.asarray(counts, dtype=float)
    d = dimension_of(counts)
    A = alpha_matrix(d)
    a = A.sum(axis=1)
    W = (np.outer(a, a) - A @ A.T) / d
    n = counts.sum(axis=1)
    p = counts / n[:, None]
    c = num_pairs(d)
    var = c**2 / n * ((W**2 * p).sum(axis=1) - (W * p).sum(axis=1) ** 2)
    return float(np.sqrt(var.sum()))
