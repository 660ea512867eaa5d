"""Monte Carlo simulation of the prepare / measure / sift / estimate loop.

Random numbers come from numpy's Philox4x32-10 counter-based generator.
Rounds are simulated in fixed chunks of ``CHUNK_ROUNDS``; chunk ``i`` draws
from the ``i``-th child of ``SeedSequence(seed)``. Chunking does not depend on
the thread count, so results are identical for any ``threads`` value.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimation
from .channel import ChannelModel, Ideal
from .hilbert import (
    BasisId,
    DomainError,
    FQubitLabel,
    enumerate_fqubit_labels,
    fqubit_matrix,
    num_fqubit_states,
    num_pairs,
)

CHUNK_ROUNDS = 1 << 16


class MeasurementMode(enum.Enum):
    FILTER = "filter"
    POVM = "povm"


class EstimationUnavailable(RuntimeError):
    """Too few rounds to estimate error rates; ``stats`` holds the raw counts."""

    def __init__(self, message: str, stats: "ProtocolStats"):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class ProtocolConfig:
    dim: int
    rounds: int
    channel: ChannelModel = None
    basis_bias: float = 0.5
    measurement_mode: MeasurementMode = MeasurementMode.POVM
    seed: int = 0
    threads: int = 1
    tol: float = 1e-10
    max_iter: int = 100_000

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError(f"dimension must be at least 2, got {self.dim}")
        if self.rounds < 1:
            raise DomainError("rounds must be positive")
        if not 0 < self.basis_bias < 1:
            raise DomainError(f"basis bias {self.basis_bias} must lie strictly inside (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise DomainError("threads must be positive")
        if self.channel is None:
            object.__setattr__(self, "channel", Ideal(self.dim))
        elif self.channel.dim != self.dim:
            raise DomainError(f"channel has d={self.channel.dim}, config has d={self.dim}")
        object.__setattr__(self, "measurement_mode", MeasurementMode(self.measurement_mode))


INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RoundRecord:
    alice_basis: BasisId
    alice_symbol: int | FQubitLabel
    bob_basis: BasisId
    bob_outcome: int | FQubitLabel | str | None
    kept: bool


@dataclass
class ProtocolStats:
    dim: int
    rounds: int
    sifted_count: int
    computational_confusion: np.ndarray
    fqubit_confusion: np.ndarray
    report: estimation.KeyRateReport | None = None
    fit: estimation.FitResult | None = None
    dit_error_se: float | None = None
    phase_error_se: float | None = None
    mode: MeasurementMode = MeasurementMode.POVM
    seed: int = 0

    def to_dict(self) -> dict:
        out = {
            "d": self.dim,
            "rounds": self.rounds,
            "seed": self.seed,
            "measurement_mode": self.mode.value,
            "sifted_count": self.sifted_count,
            "computational_confusion": self.computational_confusion.tolist(),
            "fqubit_confusion": self.fqubit_confusion.tolist(),
            "report": self.report.to_dict() if self.report else None,
            "dit_error_se": self.dit_error_se,
            "phase_error_se": self.phase_error_se,
        }
        if self.fit is not None:
            out["fit"] = {
                "transition": self.fit.transition.tolist(),
                "objective": self.fit.objective,
                "converged": self.fit.converged,
                "iterations": self.fit.iterations,
            }
        return out


@dataclass(frozen=True)
class _OutcomeTables:
    """Cumulative outcome distributions for each of the ``d + D`` prepared states.

    Prepared states ``0..d-1`` are computational, ``d..d+D-1`` F-qubits.
    """

    computational: np.ndarray  # (d+D, d) cumulative
    fqubit: np.ndarray  # povm: (d+D, D+1) cumulative; filter: (d+D, D) click probs


def _cumulative(probs: np.ndarray) -> np.ndarray:
    probs = np.clip(probs, 0, None)
    cdf = np.cumsum(probs, axis=1) / probs.sum(axis=1, keepdims=True)
    cdf[:, -1] = np.inf
    return cdf


def _outcome_tables(channel: ChannelModel, d: int, mode: MeasurementMode) -> _OutcomeTables:
    V = fqubit_matrix(d)
    prepared = np.vstack([np.eye(d, dtype=complex), V])
    evolved = np.array([channel.apply_matrix(np.outer(v, v.conj())) for v in prepared])
    comp = np.einsum("sii->si", evolved).real
    clicks = np.einsum("xi,sij,xj->sx", V.conj(), evolved, V).real
    if mode is MeasurementMode.FILTER:
        return _OutcomeTables(_cumulative(comp), np.clip(clicks, 0, 1))
    povm = clicks * (2 / d) / num_pairs(d)
    inconclusive = np.clip(1 - povm.sum(axis=1), 0, None)
    return _OutcomeTables(_cumulative(comp), _cumulative(np.column_stack([povm, inconclusive])))


def _sample(cdf: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (cdf[rows] <= u[:, None]).sum(axis=1)


@dataclass
class _Chunk:
    alice_comp: np.ndarray
    alice_symbol: np.ndarray
    bob_comp: np.ndarray
    outcome: np.ndarray  # computational index, F-qubit index, or -1 for no result


def _simulate_chunk(config: ProtocolConfig, tables: _OutcomeTables, seed: np.random.SeedSequence, n: int) -> _Chunk:
    d = config.dim
    D = num_fqubit_states(d)
    rng = np.random.Generator(np.random.Philox(seed))
    alice_comp = rng.random(n) < config.basis_bias
    bob_comp = rng.random(n) < config.basis_bias
    symbol = np.where(alice_comp, rng.integers(0, d, n), rng.integers(0, D, n))
    state = np.where(alice_comp, symbol, d + symbol)
    u = rng.random(n)

    outcome = np.full(n, -1)
    c = bob_comp
    outcome[c] = _sample(tables.computational, state[c], u[c])
    f = ~bob_comp
    if config.measurement_mode is MeasurementMode.POVM:
        res = _sample(tables.fqubit, state[f], u[f])
        outcome[f] = np.where(res == D, -1, res)
    else:
        target = rng.integers(0, D, n)[f]
        click = u[f] < tables.fqubit[state[f], target]
        outcome[f] = np.where(click, target, -1)
    return _Chunk(alice_comp, symbol, bob_comp, outcome)


def _chunks(config: ProtocolConfig):
    sizes = [CHUNK_ROUNDS] * (config.rounds // CHUNK_ROUNDS)
    if config.rounds % CHUNK_ROUNDS:
        sizes.append(config.rounds % CHUNK_ROUNDS)
    seeds = np.random.SeedSequence(config.seed).spawn(len(sizes))
    return list(zip(seeds, sizes))


def _tally(chunk: _Chunk, d: int) -> tuple[np.ndarray, np.ndarray]:
    D = num_fqubit_states(d)
    kept = (chunk.alice_comp == chunk.bob_comp) & (chunk.outcome >= 0)
    comp = kept & chunk.alice_comp
    fq = kept & ~chunk.alice_comp
    comp_counts = np.bincount(chunk.alice_symbol[comp] * d + chunk.outcome[comp], minlength=d * d)
    fq_counts = np.bincount(chunk.alice_symbol[fq] * D + chunk.outcome[fq], minlength=D * D)
    return comp_counts.reshape(d, d), fq_counts.reshape(D, D)


def round_records(config: ProtocolConfig, limit: int | None = None) -> list[RoundRecord]:
    """Per-round view of the first ``limit`` rounds (same stream as :func:`run_protocol`)."""
    d = config.dim
    labels = enumerate_fqubit_labels(d)
    tables = _outcome_tables(config.channel, d, config.measurement_mode)
    limit = config.rounds if limit is None else min(limit, config.rounds)
    records = []
    for seed, size in _chunks(config):
        if len(records) >= limit:
            break
        ch = _simulate_chunk(config, tables, seed, size)
        for i in range(min(size, limit - len(records))):
            a_comp, b_comp, out = bool(ch.alice_comp[i]), bool(ch.bob_comp[i]), int(ch.outcome[i])
            sym = int(ch.alice_symbol[i])
            if out < 0:
                bob = INCONCLUSIVE if config.measurement_mode is MeasurementMode.POVM else None
            else:
                bob = out if b_comp else labels[out]
            records.append(
                RoundRecord(
                    alice_basis=BasisId.COMPUTATIONAL if a_comp else BasisId.FQUBIT,
                    alice_symbol=sym if a_comp else labels[sym],
                    bob_basis=BasisId.COMPUTATIONAL if b_comp else BasisId.FQUBIT,
                    bob_outcome=bob,
                    kept=a_comp == b_comp and out >= 0,
                )
            )
    return records


def run_protocol(config: ProtocolConfig) -> ProtocolStats:
    """Simulate ``config.rounds`` rounds and estimate ``E_d``, ``E'_d`` and ``R``.

    Raises:
        EstimationUnavailable: some prepared state was never measured in a
            matching basis; the exception carries the partial statistics.
    """
    d = config.dim
    D = num_fqubit_states(d)
    tables = _outcome_tables(config.channel, d, config.measurement_mode)

    def work(item):
        seed, size = item
        return _tally(_simulate_chunk(config, tables, seed, size), d)

    comp = np.zeros((d, d), dtype=np.int64)
    fq = np.zeros((D, D), dtype=np.int64)
    items = _chunks(config)
    if config.threads == 1:
        results = map(work, items)
    else:
        pool = ThreadPoolExecutor(max_workers=config.threads)
        results = pool.map(work, items)
    for c, f in results:
        comp += c
        fq += f
    if config.threads > 1:
        pool.shutdown()

    stats = ProtocolStats(
        dim=d,
        rounds=config.rounds,
        sifted_count=int(comp.sum() + fq.sum()),
        computational_confusion=comp,
        fqubit_confusion=fq,
        mode=config.measurement_mode,
        seed=config.seed,
    )
    try:
        dit = estimation.dit_error_rate(estimation.row_normalize(comp))
        M = estimation.normalize_counts(fq, d)
    except estimation.DataError as exc:
        raise EstimationUnavailable(str(exc), stats) from exc
    fit = estimation.fit_physical_transition(M, tol=config.tol, max_iter=config.max_iter)
    stats.fit = fit
    stats.report = estimation.secret_key_rate(d, dit, min(max(fit.phase_error, 0.0), 1.0))
    stats.dit_error_se = estimation.dit_error_standard_error(comp)
    stats.phase_error_se = estimation.phase_error_standard_error(fq)
    return stats


def simulate_detection_matrix(channel: ChannelModel, d: int, shots_per_state: int, seed: int) -> np.ndarray:
    """Click counts for every (prepared, projector) F-qubit pair.

    Each of the ``D x D`` settings is measured ``shots_per_state`` times with a
    single projector; entry ``[x, y]`` is binomial with probability
    ``p(phi_y | phi_x)``.
    """
    if shots_per_state < 1:
        raise DomainError("shots_per_state must be positive")
    if channel.dim != d:
        raise DomainError(f"channel has d={channel.dim}, expected {d}")
    probs = _outcome_tables(channel, d, MeasurementMode.FILTER).fqubit[d:]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return rng.binomial(shots_per_state, probs)
