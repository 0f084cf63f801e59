"""Scenario files and output formats.

Complex numbers are ``[re, im]`` pairs (plain numbers are accepted as
real); matrices are row-major lists of rows.  Every validation error
names the offending field path, e.g. ``system.overlap[1][0]``.
"""
import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .drift import DriftSchedule, EpsilonSpec
from .errors import ExpctlError, ValidationError
from .loop import ControllerConfig, LoopResult
from .system import BASES, QuantumSystem, State, build_system

_MASK64 = (1 << 64) - 1


class ScenarioError(ValidationError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Scenario:
    seed: int
    system: QuantumSystem
    initial_state: State
    drift: DriftSchedule
    controller: ControllerConfig
    epochs: int


def _get(d, key, path, default=..., kind=None):
    if not isinstance(d, dict):
        raise ScenarioError(path, "expected an object")
    if key not in d:
        if default is ...:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
        return default
    v = d[key]
    if kind is not None and v is not None:
        return kind(v, f"{path}.{key}" if path else key)
    return v


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(path, f"expected an integer, got {v!r}")
    return v


def _real(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(path, f"expected a number, got {v!r}")
    return float(v)


def _bool(v, path):
    if not isinstance(v, bool):
        raise ScenarioError(path, f"expected true/false, got {v!r}")
    return v


def parse_complex(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        return complex(v[0], v[1])
    raise ScenarioError(path, f"expected a number or [re, im] pair, got {v!r}")


def parse_vector(v, path, real=False):
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a non-empty list")
    if real:
        return np.array([_real(x, f"{path}[{i}]") for i, x in enumerate(v)])
    return np.array([parse_complex(x, f"{path}[{i}]") for i, x in enumerate(v)])


def parse_matrix(v, path):
    if not isinstance(v, list) or not v:
        raise ScenarioError(path, "expected a non-empty list of rows")
    rows = [parse_vector(r, f"{path}[{i}]") for i, r in enumerate(v)]
    n = len(rows)
    for i, r in enumerate(rows):
        if r.size != n:
            raise ScenarioError(f"{path}[{i}]", f"row has {r.size} entries, expected {n}")
    return np.array(rows)


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def parse_state(d, path, dim=None) -> State:
    basis = _get(d, "basis", path)
    if basis not in BASES:
        raise ScenarioError(f"{path}.basis", f"expected one of {list(BASES)}, got {basis!r}")
    amp = parse_vector(_get(d, "amplitudes", path), f"{path}.amplitudes")
    if dim is not None and amp.size != dim:
        raise ScenarioError(f"{path}.amplitudes", f"has {amp.size} entries, system dimension is {dim}")
    try:
        return State(basis, amp)
    except ExpctlError as exc:
        raise ScenarioError(f"{path}.amplitudes", str(exc)) from None


def parse_system(d, path="system") -> QuantumSystem:
    if not isinstance(d, dict):
        raise ScenarioError(path, "expected an object")
    operator_form = "hamiltonian" in d or "observable" in d
    spectral_form = any(k in d for k in ("energies", "theta_values", "overlap"))
    if operator_form == spectral_form:
        raise ScenarioError(path, "give exactly one of {hamiltonian, observable} or "
                                  "{energies, theta_values, overlap}")
    try:
        if operator_form:
            H = parse_matrix(_get(d, "hamiltonian", path), f"{path}.hamiltonian")
            T = parse_matrix(_get(d, "observable", path), f"{path}.observable")
            return build_system(H, T)
        E = parse_vector(_get(d, "energies", path), f"{path}.energies", real=True)
        th = parse_vector(_get(d, "theta_values", path), f"{path}.theta_values", real=True)
        C = parse_matrix(_get(d, "overlap", path), f"{path}.overlap")
        return QuantumSystem(E, th, C)
    except ScenarioError:
        raise
    except ExpctlError as exc:
        raise ScenarioError(path, str(exc)) from None


def _index_pair(v, path, dim):
    if not isinstance(v, list) or len(v) != 2:
        raise ScenarioError(path, f"expected [m, n], got {v!r}")
    m, n = (_int(x, f"{path}[{i}]") for i, x in enumerate(v))
    for i, k in enumerate((m, n)):
        if not 0 <= k < dim:
            raise ScenarioError(f"{path}[{i}]", f"index {k} outside [0, {dim})")
    if m == n:
        raise ScenarioError(path, "pair indices must differ")
    return m, n


def parse_drift(d, seed, dim, path="drift") -> DriftSchedule:
    if d is None:
        return DriftSchedule(seed=seed, epsilon=EpsilonSpec("none"))
    eps_d = _get(d, "epsilon", path, {"kind": "none"})
    epath = f"{path}.epsilon"
    kind = _get(eps_d, "kind", epath)
    if kind not in ("none", "constant", "normal"):
        raise ScenarioError(f"{epath}.kind", f"expected none|constant|normal, got {kind!r}")
    try:
        eps = EpsilonSpec(kind, _get(eps_d, "value", epath, 0.0, _real),
                          _get(eps_d, "std", epath, 0.0, _real))
    except ExpctlError as exc:
        raise ScenarioError(epath, str(exc)) from None
    pair_v = _get(d, "pair", path, [0, 1])
    pair = None if pair_v == "random" else _index_pair(pair_v, f"{path}.pair", dim)
    period = _get(d, "period", path, 1, _int)
    if period < 1:
        raise ScenarioError(f"{path}.period", "must be >= 1")
    dseed = _get(d, "seed", path, seed, _int)
    return DriftSchedule(seed=dseed & _MASK64, epsilon=eps, pair=pair, period=period, dim=dim)


def _threshold(v, path):
    if v is None:
        return math.inf
    if v == "inf":
        return math.inf
    x = _real(v, path)
    if x < 0:
        raise ScenarioError(path, "must be >= 0")
    return x


def parse_controller(c, m, seed, path="controller") -> ControllerConfig:
    c = c or {}
    m = m or {}
    mode = _get(m, "mode", "measurement", "exact")
    if mode not in ("exact", "sampled"):
        raise ScenarioError("measurement.mode", f"expected exact|sampled, got {mode!r}")
    shots = _get(m, "shots", "measurement", 10_000, _int)
    if mode == "sampled" and shots < 1:
        raise ScenarioError("measurement.shots", "must be >= 1")
    budget = _get(m, "clone_budget", "measurement", None, _int)
    mseed = _get(m, "seed", "measurement", seed, _int)
    thr = _threshold(c.get("correction_threshold", 1e-6), f"{path}.correction_threshold")
    try:
        return ControllerConfig(
            target_theta=_get(c, "target_theta", path, None, _real),
            correction_threshold=thr,
            measurement_mode=mode,
            shots=shots,
            seed=mseed & _MASK64,
            verify_after_correction=_get(c, "verify_after_correction", path, True, _bool),
            sign_fallback=_get(c, "sign_fallback", path, True, _bool),
            max_corrections_per_epoch=_get(c, "max_corrections_per_epoch", path, 3, _int),
            blind=_get(c, "blind", path, False, _bool),
            clone_budget=budget,
            diagnosis_threshold=_get(c, "diagnosis_threshold", path, None, _real),
        )
    except ExpctlError as exc:
        raise ScenarioError(path, str(exc)) from None


def scenario_from_dict(d) -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    seed = _get(d, "seed", "", 0, _int)
    system = parse_system(_get(d, "system", ""))
    initial = parse_state(_get(d, "initial_state", "", {"basis": "energy", "amplitudes": [1] + [0] * (system.dim - 1)}),
                          "initial_state", system.dim)
    drift = parse_drift(_get(d, "drift", "", None), seed, system.dim)
    ctrl = parse_controller(_get(d, "controller", "", None), _get(d, "measurement", "", None), seed)
    epochs = _get(d, "epochs", "", 1, _int)
    if epochs < 1:
        raise ScenarioError("epochs", "must be >= 1")
    return Scenario(seed & _MASK64, system, initial, drift, ctrl, epochs)


def load_json(path: str) -> Any:
    """Read JSON, turning syntax errors into ``file:line:col`` messages."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_scenario(path: str) -> Scenario:
    return scenario_from_dict(load_json(path))


TRAJECTORY_COLUMNS = (
    "epoch", "drift_m", "drift_n", "epsilon", "theta_true_before", "theta_true_after_drift",
    "theta_estimated", "theta_after_correction", "energy_true", "residual", "pulses_applied",
    "fallback_used",
)


def fmt_float(x: Optional[float]) -> str:
    """17 significant digits, locale independent; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def trajectory_csv(result: LoopResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for log in result.logs:
        ev = log.drift_event
        w.writerow([
            log.epoch,
            "" if ev is None else ev[0],
            "" if ev is None else ev[1],
            "" if ev is None else fmt_float(ev[2]),
            fmt_float(log.theta_true_before),
            fmt_float(log.theta_true_after_drift),
            fmt_float(log.theta_estimated),
            fmt_float(log.theta_after_correction),
            fmt_float(log.energy_true),
            fmt_float(log.diagnosis_residual),
            log.pulses_applied,
            int(log.fallback_used),
        ])
    return buf.getvalue()


def summary_json(result: LoopResult) -> str:
    return json.dumps(result.summary(), indent=2, sort_keys=True) + "\n"
