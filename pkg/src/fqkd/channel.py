"""Noise and eavesdropping channels acting on d-dimensional density matrices.

Eve's attack ``U|eta_l>|e_00> = sum_n c_ln |eta_n>|e_ln>`` with mutually
orthogonal ancillas reduces, on the system alone, to

    rho -> sum_{l,n} P[l, n] <eta_l|rho|eta_l> |eta_n><eta_n|,   P[l, n] = c_ln^2

which is what :class:`FourierStochastic` implements. Note that even ``P = I``
destroys all Fourier coherences; :class:`Ideal` is the true identity channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .hilbert import (
    BasisId,
    DomainError,
    StateVector,
    basis_states,
    fourier_matrix,
    fqubit_matrix,
    num_pairs,
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGEN_TOL = 1e-9
STOCHASTIC_TOL = 1e-8


class ValidationError(ValueError):
    """Channel parameters are not physical."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
            raise DomainError(f"density matrix must be square with d >= 2, got {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > TRACE_TOL:
            raise DomainError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -EIGEN_TOL:
            raise DomainError("density matrix has negative eigenvalues")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.projector())

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d) / d)


def _validated_stochastic(P, d: int | None = None) -> np.ndarray:
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise ValidationError(f"transition matrix must be square with d >= 2, got {P.shape}")
    if d is not None and P.shape[0] != d:
        raise ValidationError(f"transition matrix is {P.shape[0]}x{P.shape[0]}, expected d={d}")
    if not np.isfinite(P).all():
        raise ValidationError("transition matrix has non-finite entries")
    if (P < 0).any():
        i, j = np.argwhere(P < 0)[0]
        raise ValidationError(f"negative transition probability at [{i}][{j}]")
    dev = np.abs(P.sum(axis=1) - 1)
    if dev.max() > STOCHASTIC_TOL:
        raise ValidationError(f"row {int(dev.argmax())} sums to {P.sum(axis=1)[dev.argmax()]!r}")
    P = P / P.sum(axis=1, keepdims=True)
    P.flags.writeable = False
    return P


@dataclass(frozen=True)
class Ideal:
    dim: int

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        return rho


@dataclass(frozen=True, eq=False)
class FourierStochastic:
    """Reduced map of Eve's Fourier-basis attack, ``P[l, n] = p(eta_n | eta_l)``."""

    matrix: np.ndarray
    _fourier: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = _validated_stochastic(self.matrix)
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "_fourier", fourier_matrix(P.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        F = self._fourier
        populations = np.einsum("il,ij,jl->l", F.conj(), rho, F).real
        return (F * (populations @ self.matrix)) @ F.conj().T


@dataclass(frozen=True)
class Depolarizing:
    dim: int
    p: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValidationError(f"depolarizing probability {self.p} outside [0, 1]")

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        return (1 - self.p) * rho + self.p * np.eye(self.dim) / self.dim


@dataclass(frozen=True, eq=False)
class InterceptResend:
    """With probability ``q`` Eve measures in ``basis`` and resends her outcome.

    The overcomplete F-qubit family is measured with the POVM
    ``{|phi_x><phi_x| / (d(d-1)/2)}``, which sums to the identity.
    """

    dim: int
    basis: BasisId
    q: float
    _states: np.ndarray = field(init=False, repr=False)
    _weight: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValidationError(f"intercept probability {self.q} outside [0, 1]")
        if self.basis is BasisId.FQUBIT:
            states, weight = fqubit_matrix(self.dim), 1.0 / num_pairs(self.dim)
        else:
            states = np.array([s.amplitudes for _, s in basis_states(self.dim, self.basis)])
            weight = 1.0
        object.__setattr__(self, "_states", states)
        object.__setattr__(self, "_weight", weight)

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        V = self._states
        outcome = self._weight * np.einsum("xi,ij,xj->x", V.conj(), rho, V).real
        resent = np.einsum("x,xi,xj->ij", outcome, V, V.conj())
        return self.q * resent + (1 - self.q) * rho


@dataclass(frozen=True)
class Composite:
    """Channels applied left to right."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValidationError("composite channel needs at least one member")
        if len({m.dim for m in members}) != 1:
            raise ValidationError("composite members must share one dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        for member in self.members:
            rho = member.apply_matrix(rho)
        return rho


ChannelModel = Union[Ideal, FourierStochastic, Depolarizing, InterceptResend, Composite]


def apply(channel: ChannelModel, rho: DensityMatrix) -> DensityMatrix:
    if channel.dim != rho.dim:
        raise DomainError(f"channel acts on d={channel.dim}, state has d={rho.dim}")
    if isinstance(channel, Ideal):
        return rho
    return DensityMatrix(channel.apply_matrix(rho.entries))


def detection_probability(channel: ChannelModel, prepared: StateVector, projector: StateVector) -> float:
    """``<projector| channel(|prepared><prepared|) |projector>``."""
    if not channel.dim == prepared.dim == projector.dim:
        raise DomainError("channel, prepared state and projector dimensions differ")
    out = channel.apply_matrix(prepared.projector())
    v = projector.amplitudes
    return float(np.vdot(v, out @ v).real)


def eve_from_stochastic(P) -> FourierStochastic:
    """Attack channel whose Fourier-basis transition probabilities are ``P``.

    Rows must sum to one within 1e-8; they are renormalized exactly.
    """
    return FourierStochastic(P)


def composite(channels: Sequence[ChannelModel]) -> Composite:
    return Composite(tuple(channels))
