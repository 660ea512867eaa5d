"""TOML run configuration for ``fqkd simulate``.

Example::

    dimension = 4

    [channel]
    kind = "fourier_stochastic"     # ideal | fourier_stochastic | depolarizing
                                    # | intercept_resend | composite
    matrix_file = "eve.csv"         # or: matrix = [[...], ...]

    [protocol]
    rounds = 1_000_000
    bias = 0.5
    mode = "povm"                   # povm | filter
    seed = 1

    [estimation]
    tol = 1e-10
    max_iter = 100_000

    [output]
    dir = "out"

Relative paths are resolved against the directory holding the config file.
Composite channels list their members as ``[[channel.members]]`` tables.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import channel as ch
from .hilbert import BasisId, DomainError
from .matrixio import MatrixFormatError, read_matrix
from .protocol import MeasurementMode, ProtocolConfig

SEED_ENV = "FQKD_SEED"

OUTPUT_DEFAULTS = {
    "stats": "stats.json",
    "report": "report.json",
    "computational": "computational_confusion.csv",
    "fqubit": "fqubit_confusion.csv",
    "transition": "fourier_fit.csv",
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    protocol: ProtocolConfig
    outputs: dict[str, Path]


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            path = f"{where}.{key}" if where else key
            raise ConfigError(path, "unknown key")


def _get(table: dict, key: str, where: str, types, default=..., required=False):
    path = f"{where}.{key}" if where else key
    if key not in table:
        if required or default is ...:
            raise ConfigError(path, "missing required key")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, types):
        raise ConfigError(path, f"wrong type {type(value).__name__}")
    return value


_CHANNEL_KEYS = {
    "ideal": {"kind"},
    "fourier_stochastic": {"kind", "matrix", "matrix_file"},
    "depolarizing": {"kind", "p"},
    "intercept_resend": {"kind", "basis", "q"},
    "composite": {"kind", "members"},
}


def _channel(table, d: int, where: str, base: Path) -> ch.ChannelModel:
    if not isinstance(table, dict):
        raise ConfigError(where, "expected a table")
    kind = _get(table, "kind", where, str, required=True)
    if kind not in _CHANNEL_KEYS:
        raise ConfigError(f"{where}.kind", f"unknown channel kind {kind!r}")
    _check_keys(table, _CHANNEL_KEYS[kind], where)
    try:
        if kind == "ideal":
            return ch.Ideal(d)
        if kind == "depolarizing":
            return ch.Depolarizing(d, float(_get(table, "p", where, (int, float))))
        if kind == "intercept_resend":
            basis = BasisId.parse(_get(table, "basis", where, str))
            return ch.InterceptResend(d, basis, float(_get(table, "q", where, (int, float), 1.0)))
        if kind == "composite":
            members = _get(table, "members", where, list)
            return ch.Composite(
                tuple(_channel(m, d, f"{where}.members[{i}]", base) for i, m in enumerate(members))
            )
        if ("matrix" in table) == ("matrix_file" in table):
            raise ConfigError(where, "give exactly one of 'matrix' or 'matrix_file'")
        if "matrix" in table:
            P = _get(table, "matrix", where, list)
        else:
            mf = read_matrix(base / _get(table, "matrix_file", where, str))
            if mf.kind != "fourier":
                raise ConfigError(f"{where}.matrix_file", f"expected kind=fourier, got kind={mf.kind}")
            P = mf.rows
        channel = ch.eve_from_stochastic(P)
        if channel.dim != d:
            raise ConfigError(where, f"matrix is {channel.dim}x{channel.dim}, dimension is {d}")
        return channel
    except (ch.ValidationError, DomainError, MatrixFormatError) as exc:
        raise ConfigError(where, str(exc)) from None


def parse_config(doc: dict, base: Path = Path("."), env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    _check_keys(doc, {"dimension", "channel", "protocol", "estimation", "output"}, "")
    d = _get(doc, "dimension", "", int, required=True)
    if d < 2:
        raise ConfigError("dimension", "must be at least 2")
    channel = _channel(doc.get("channel", {"kind": "ideal"}), d, "channel", base)

    proto = _get(doc, "protocol", "", dict, {})
    _check_keys(proto, {"rounds", "bias", "mode", "seed", "threads"}, "protocol")
    est = _get(doc, "estimation", "", dict, {})
    _check_keys(est, {"tol", "max_iter"}, "estimation")
    out = _get(doc, "output", "", dict, {})
    _check_keys(out, {"dir", *OUTPUT_DEFAULTS}, "output")

    seed = _get(proto, "seed", "protocol", int, 0)
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV], 0)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {env[SEED_ENV]!r}") from None
    mode = _get(proto, "mode", "protocol", str, "povm")
    try:
        mode = MeasurementMode(mode)
    except ValueError:
        raise ConfigError("protocol.mode", f"unknown mode {mode!r}") from None

    try:
        config = ProtocolConfig(
            dim=d,
            rounds=_get(proto, "rounds", "protocol", int, required=True),
            channel=channel,
            basis_bias=float(_get(proto, "bias", "protocol", (int, float), 0.5)),
            measurement_mode=mode,
            seed=seed,
            threads=_get(proto, "threads", "protocol", int, 1),
            tol=float(_get(est, "tol", "estimation", (int, float), 1e-10)),
            max_iter=_get(est, "max_iter", "estimation", int, 100_000),
        )
    except DomainError as exc:
        raise ConfigError("protocol", str(exc)) from None

    out_dir = base / _get(out, "dir", "output", str, ".")
    outputs = {
        name: out_dir / _get(out, name, "output", str, default) for name, default in OUTPUT_DEFAULTS.items()
    }
    return RunConfig(config, outputs)


def load_config(path, env: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"{path}: {exc}") from None
    return parse_config(doc, path.parent, env)
