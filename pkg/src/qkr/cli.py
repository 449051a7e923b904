"""Experiment command line: qkr <experiment> --config <path> [--set k=v ...] --out <path>.

Configs are flat ``key = value`` files ('#' starts a comment); --set overrides
take the same syntax.  Every experiment writes one CSV whose '#'-prefixed
header echoes the resolved configuration and headline results, floats carry 17
significant digits, and nothing time- or path-dependent is embedded, so a
rerun of the same config is byte-identical.

Exit codes: 0 success, 2 configuration error, 3 truncation-guard abort,
4 numerical fault.  Failures emit a one-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import active_backend
from ._version import __version__
from .core_state import (
    MomentumLattice,
    NumericalFault,
    TruncationError,
    mean_energy,
    momentum_std,
    probabilities,
)
from .floquet import (
    DetunedPair,
    InitScheme,
    KickPotential,
    ModifiedPotentialKicks,
    ResonantKicks,
    lattice_for_scheme,
    prepare_initial,
    total_kick_strength,
)
from .grover import (
    OracleSpec,
    amplify,
    optimal_iterations,
    optimal_iterations_rounded,
    profile_flatness,
    runtime_scaling,
    success_probability,
)
from .estimation import estimate_amplitude
from .robustness import (
    NoiseModel,
    detuning_sensitivity,
    error_scaling,
    noisy_amplify,
)

__all__ = ["ConfigError", "ExperimentConfig", "ResultTable", "main", "run", "validate"]


class ConfigError(ValueError):
    """Malformed configuration: unknown experiment, bad key, unusable value."""


EXPERIMENTS = (
    "walk",
    "init-profile",
    "amplify",
    "estimate",
    "noise-sweep",
    "error-scaling",
    "detune-sweep",
    "runtime-scaling",
)

_GUARD_KEYS = {"guard": True, "guard_threshold": 1e-8}

_SCHEME_KEYS = {"scheme": "modified", "phi": 2.0, "count": 2, "M": 100, "epsilon": 0.3}

DEFAULTS: dict[str, dict[str, object]] = {
    "walk": {
        "scheme": "cosine",
        "phi": 2.0,
        "count": 20,
        "M": 100,
        "n_max": 128,
        **_GUARD_KEYS,
    },
    "init-profile": {
        "phi": 2.0,
        "count": 2,
        "M": 100,
        "epsilon": 0.3,
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "amplify": {
        **_SCHEME_KEYS,
        "marked": (-1, 0, 1),
        "r": "auto",
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "estimate": {
        **_SCHEME_KEYS,
        "marked": (-1, 0, 1),
        "shots": 0,
        "seed": 1,
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "noise-sweep": {
        **_SCHEME_KEYS,
        "phi": 0.25,
        "count": 200,
        "marked": (-11, 0, 11),
        "gammas": (2e-4, 5e-4, 1e-3),
        "realizations": 400,
        "k_max": 10,
        "seed": 1,
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "error-scaling": {
        **_SCHEME_KEYS,
        "phi": 0.25,
        "count": 200,
        "marked": (-11, 0, 11),
        "gammas": (2e-4, 5e-4, 1e-3),
        "realizations": 1000,
        "k_max": 10,
        "seed": 1,
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "detune-sweep": {
        "potential": "modified",
        "phi": 50.0,
        "M": 100,
        "marked": (-11, 0, 11),
        "epsilons": (0.0, 1e-6, 1e-5, 1e-4),
        "k_max": 10,
        "n_max": "auto",
        **_GUARD_KEYS,
    },
    "runtime-scaling": {
        "family": "modified",
        "sizes": "auto",
        "phi": 2.0,
        "M": 100,
        "epsilon": 0.3,
        "cap": 1000000,
        **_GUARD_KEYS,
    },
}

_DEFAULT_SIZES = {
    "uniform": (64, 128, 256, 512, 1024, 2048, 4096),
    "cosine": (4, 8, 16, 32, 64, 128),
    "modified": (4, 8, 16, 32, 64, 128),
    "detuned": (2, 4, 8, 16, 32, 64),
}

_UNITS = (
    "momentum in hbar, energy in hbar^2/I, time in kick periods, "
    "detuning in free-rotation phase (resonant period = 4*pi)"
)


@dataclass
class ExperimentConfig:
    """One experiment plus its fully resolved flat parameter map."""

    experiment: str
    params: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        merged = dict(DEFAULTS[self.experiment])
        for key, value in self.params.items():
            if key not in merged:
                raise ConfigError(
                    f"unknown key {key!r} for experiment {self.experiment!r} "
                    f"(known: {', '.join(sorted(merged))})"
                )
            merged[key] = value
        self.params = merged


def _parse_scalar(text: str) -> object:
    t = text.strip()
    if not t:
        raise ConfigError("empty value")
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    return t


def _parse_value(text: str) -> object:
    t = text.strip()
    if "," in t:
        parts = [p for p in t.split(",")]
        return tuple(_parse_scalar(p) for p in parts)
    return _parse_scalar(t)


def load_config_file(path: str | Path) -> dict[str, object]:
    """Parse a flat 'key = value' config file into a parameter map."""
    params: dict[str, object] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: missing key")
        try:
            params[key] = _parse_value(value)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return params


def _apply_overrides(params: dict[str, object], overrides: list[str]) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        params[key] = _parse_value(value)


def build_config(
    experiment: str,
    config_path: str | Path | None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """Assemble the experiment config from defaults, file, --set items, and --seed."""
    params = load_config_file(config_path) if config_path is not None else {}
    file_experiment = params.pop("experiment", None)
    if file_experiment is not None and file_experiment != experiment:
        raise ConfigError(
            f"config file names experiment {file_experiment!r} but {experiment!r} was requested"
        )
    _apply_overrides(params, list(overrides or ()))
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        if "seed" in DEFAULTS.get(experiment, {}):
            params["seed"] = seed
        else:
            raise ConfigError(f"experiment {experiment!r} takes no seed")
    return ExperimentConfig(experiment, params)


def _as_int(params: dict, key: str) -> int:
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return value


def _as_float(params: dict, key: str) -> float:
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_bool(params: dict, key: str) -> bool:
    value = params[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{key} must be true or false, got {value!r}")
    return value


def _as_number_tuple(params: dict, key: str, kind=float) -> tuple:
    value = params[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = (value,)
    if not isinstance(value, tuple) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        raise ConfigError(f"{key} must be a comma-separated list of numbers, got {value!r}")
    return tuple(kind(x) for x in value)


def _guard_threshold(params: dict) -> float | None:
    if not _as_bool(params, "guard"):
        return None
    return _as_float(params, "guard_threshold")


def _scheme_from(params: dict) -> InitScheme:
    kind = params.get("scheme")
    phi = _as_float(params, "phi")
    try:
        if kind == "cosine":
            return ResonantKicks(phi, _as_int(params, "count"))
        if kind == "modified":
            return ModifiedPotentialKicks(phi, _as_int(params, "M"), _as_int(params, "count"))
        if kind == "detuned":
            return DetunedPair(phi, _as_float(params, "epsilon"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"scheme must be cosine, modified, or detuned, got {kind!r}")


def _lattice_from(params: dict, scheme: InitScheme) -> MomentumLattice:
    n_max = params["n_max"]
    if n_max == "auto":
        return lattice_for_scheme(scheme)
    try:
        return MomentumLattice(_as_int(params, "n_max"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_marked(params: dict, sigma: float) -> tuple[int, ...]:
    value = params["marked"]
    if value == "auto":
        half = max(1, round(sigma / 4.0))
        return (-half, 0, half)
    marked = _as_number_tuple(params, "marked", kind=float)
    if any(x != int(x) for x in marked):
        raise ConfigError(f"marked sites must be integers, got {value!r}")
    if not marked:
        raise ConfigError("marked set is empty")
    return tuple(int(x) for x in marked)


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list, np.ndarray)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass
class ResultTable:
    """Deterministic CSV payload: metadata header, column row, data rows."""

    experiment: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict[str, object]

    def render(self) -> str:
        lines = ["# qkr csv v1"]
        meta = {
            "experiment": self.experiment,
            "qkr_version": __version__,
            "backend": active_backend(),
            "units": _UNITS,
            **self.metadata,
        }
        for key in sorted(meta):
            lines.append(f"# {key} = {_fmt(meta[key])}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render())

    def check_finite(self) -> None:
        for row in self.rows:
            for value in row:
                if isinstance(value, (float, np.floating)) and not math.isfinite(value):
                    raise NumericalFault(f"non-finite value in result row {row!r}")


def _config_echo(params: dict[str, object]) -> dict[str, object]:
    return {f"config.{k}": v for k, v in params.items()}


def _run_walk(params: dict) -> ResultTable:
    scheme = _scheme_from(params)
    if isinstance(scheme, DetunedPair):
        raise ConfigError("walk supports the cosine and modified schemes")
    lattice = _lattice_from(params, scheme)
    guard = _guard_threshold(params)
    state = prepare_initial(lattice, scheme, guard=guard)
    p = probabilities(state)
    rows = [(int(n), float(p_n)) for n, p_n in zip(lattice.n_values, p)]
    params = {**params, "n_max": lattice.n_max}
    meta = {
        **_config_echo(params),
        "result.mean_energy": mean_energy(state),
        "result.sigma": momentum_std(state),
    }
    return ResultTable("walk", ("n", "probability"), rows, meta)


def _run_init_profile(params: dict) -> ResultTable:
    phi = _as_float(params, "phi")
    count = _as_int(params, "count")
    schemes: list[tuple[str, InitScheme]] = [
        ("cosine", ResonantKicks(phi, count)),
        ("modified", ModifiedPotentialKicks(phi, _as_int(params, "M"), count)),
        ("detuned", DetunedPair(phi, _as_float(params, "epsilon"))),
    ]
    if params["n_max"] == "auto":
        # one lattice for all three profiles so the rows share an n column
        n_max = max(lattice_for_scheme(s).n_max for _, s in schemes)
        lattice = MomentumLattice(n_max)
    else:
        lattice = MomentumLattice(_as_int(params, "n_max"))
    guard = _guard_threshold(params)
    rows: list[tuple] = []
    meta: dict[str, object] = _config_echo({**params, "n_max": lattice.n_max})
    for name, scheme in schemes:
        state = prepare_initial(lattice, scheme, guard=guard)
        p = probabilities(state)
        rows.extend((name, int(n), float(p_n)) for n, p_n in zip(lattice.n_values, p))
        meta[f"result.flatness.{name}"] = profile_flatness(state)
        meta[f"result.sigma.{name}"] = momentum_std(state)
    return ResultTable("init-profile", ("scheme", "n", "probability"), rows, meta)


def _prepared_sigma(lattice: MomentumLattice, scheme: InitScheme, guard: float | None) -> float:
    return momentum_std(prepare_initial(lattice, scheme, guard=guard))


def _run_amplify(params: dict) -> ResultTable:
    scheme = _scheme_from(params)
    lattice = _lattice_from(params, scheme)
    guard = _guard_threshold(params)
    marked = _resolve_marked(params, _prepared_sigma(lattice, scheme, guard))
    oracle = OracleSpec(marked)
    r_param = params["r"]
    r = None if r_param == "auto" else _as_int(params, "r")
    try:
        result = amplify(lattice, scheme, oracle, r, guard=guard)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(k, float(s)) for k, s in enumerate(result.success_by_iteration)]
    params = {**params, "n_max": lattice.n_max, "marked": marked, "r": result.r_used}
    meta = {
        **_config_echo(params),
        "result.a0": result.a0,
        "result.theta_g": result.theta_g,
        "result.r_used": result.r_used,
        "result.peak": result.peak,
    }
    return ResultTable("amplify", ("oracle_calls", "success_probability"), rows, meta)


def _run_estimate(params: dict) -> ResultTable:
    scheme = _scheme_from(params)
    lattice = _lattice_from(params, scheme)
    guard = _guard_threshold(params)
    state = prepare_initial(lattice, scheme, guard=guard)
    marked = _resolve_marked(params, momentum_std(state))
    oracle = OracleSpec(marked)
    shots = _as_int(params, "shots")
    seed = _as_int(params, "seed")
    try:
        result = estimate_amplitude(lattice, scheme, oracle, shots, seed, guard=guard)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [
        (
            result.shots,
            result.expectation,
            result.theta_hat,
            result.a_hat,
            result.r_hat,
        )
    ]
    params = {**params, "n_max": lattice.n_max, "marked": marked}
    meta = {
        **_config_echo(params),
        "result.a0_prepared": success_probability(state, oracle),
    }
    return ResultTable(
        "estimate",
        ("shots", "expectation", "theta_hat", "a_hat", "r_hat"),
        rows,
        meta,
    )


def _noise_setup(params: dict):
    scheme = _scheme_from(params)
    lattice = _lattice_from(params, scheme)
    guard = _guard_threshold(params)
    marked = _resolve_marked(params, _prepared_sigma(lattice, scheme, guard))
    oracle = OracleSpec(marked)
    gammas = _as_number_tuple(params, "gammas")
    k_max = _as_int(params, "k_max")
    realizations = _as_int(params, "realizations")
    seed = _as_int(params, "seed")
    return scheme, lattice, guard, marked, oracle, gammas, k_max, realizations, seed


def _run_noise_sweep(params: dict) -> ResultTable:
    scheme, lattice, guard, marked, oracle, gammas, k_max, realizations, seed = _noise_setup(
        params
    )
    phi = scheme.phi
    rows: list[tuple] = []
    noiseless = amplify(lattice, scheme, oracle, r=k_max, guard=guard)
    rows.extend(
        (0.0, k, float(s), 0.0) for k, s in enumerate(noiseless.success_by_iteration)
    )
    try:
        for gamma in gammas:
            if gamma == 0.0:
                continue
            model = NoiseModel(phi, gamma * abs(phi), seed, realizations)
            run_g = noisy_amplify(lattice, scheme, oracle, model, k_max, guard=guard)
            rows.extend(
                (float(gamma), k, float(s), float(se))
                for k, (s, se) in enumerate(zip(run_g.success, run_g.standard_error))
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    params = {**params, "n_max": lattice.n_max, "marked": marked}
    meta = {
        **_config_echo(params),
        "result.noiseless_peak": noiseless.peak,
        "result.a0": noiseless.a0,
    }
    return ResultTable(
        "noise-sweep",
        ("gamma", "oracle_calls", "success_probability", "standard_error"),
        rows,
        meta,
    )


def _run_error_scaling(params: dict) -> ResultTable:
    scheme, lattice, guard, marked, oracle, gammas, k_max, realizations, seed = _noise_setup(
        params
    )
    try:
        sweep = error_scaling(
            lattice,
            scheme,
            oracle,
            gammas,
            k_max,
            realizations=realizations,
            master_seed=seed,
            guard=guard,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows: list[tuple] = []
    for i, gamma in enumerate(sweep.gammas):
        rows.extend(
            (float(gamma), k, float(s), float(d))
            for k, (s, d) in enumerate(
                zip(sweep.success_curves[i], sweep.rescaled_deviations[i])
            )
        )
    params = {**params, "n_max": lattice.n_max, "marked": marked}
    meta = {
        **_config_echo(params),
        "result.peak_index": sweep.peak_index,
        "result.collapse_spread": sweep.collapse_spread(),
    }
    return ResultTable(
        "error-scaling",
        ("gamma", "oracle_calls", "success_probability", "rescaled_deviation"),
        rows,
        meta,
    )


def _detune_scheme_for_sizing(params: dict) -> InitScheme:
    phi = _as_float(params, "phi")
    potential = params.get("potential")
    if potential == "modified":
        return ModifiedPotentialKicks(phi, _as_int(params, "M"), 1)
    if potential == "cosine":
        return ResonantKicks(phi, 1)
    raise ConfigError(f"potential must be cosine or modified, got {potential!r}")


def _run_detune_sweep(params: dict) -> ResultTable:
    sizing_scheme = _detune_scheme_for_sizing(params)
    lattice = _lattice_from(params, sizing_scheme)
    guard = _guard_threshold(params)
    marked = _resolve_marked(params, _prepared_sigma(lattice, sizing_scheme, guard))
    oracle = OracleSpec(marked)
    epsilons = _as_number_tuple(params, "epsilons")
    k_max = _as_int(params, "k_max")
    potential = (
        KickPotential.modified(_as_int(params, "M"))
        if params["potential"] == "modified"
        else KickPotential.cosine()
    )
    # auto sizing targets the resonant profile; large drifts can push mass
    # further out, so grow on a guard trip instead of aborting
    attempts = 4 if params["n_max"] == "auto" else 1
    for attempt in range(attempts):
        try:
            sweep = detuning_sensitivity(
                lattice,
                _as_float(params, "phi"),
                oracle,
                epsilons,
                k_max,
                potential=potential,
                guard=guard,
            )
            break
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        except TruncationError:
            if attempt == attempts - 1:
                raise
            lattice = MomentumLattice(math.ceil(1.3 * lattice.n_max) + 16)
    rows: list[tuple] = []
    for i, eps in enumerate(sweep.epsilons):
        rows.extend(
            (float(eps), k, float(s)) for k, s in enumerate(sweep.success_curves[i])
        )
    params = {**params, "n_max": lattice.n_max, "marked": marked}
    meta = {
        **_config_echo(params),
        "result.peaks": tuple(float(p) for p in sweep.peaks),
    }
    return ResultTable(
        "detune-sweep",
        ("epsilon", "oracle_calls", "success_probability"),
        rows,
        meta,
    )


def _run_runtime_scaling(params: dict) -> ResultTable:
    family = params.get("family")
    if family not in _DEFAULT_SIZES:
        raise ConfigError(
            f"family must be one of {', '.join(_DEFAULT_SIZES)}, got {family!r}"
        )
    sizes = (
        _DEFAULT_SIZES[family]
        if params["sizes"] == "auto"
        else _as_number_tuple(params, "sizes")
    )
    try:
        result = runtime_scaling(
            family,
            sizes,
            phi=_as_float(params, "phi"),
            M=_as_int(params, "M"),
            epsilon=_as_float(params, "epsilon"),
            cap=_as_int(params, "cap"),
            guard=_guard_threshold(params),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(float(n), float(t)) for n, t in result.rows]
    params = {**params, "sizes": sizes}
    meta = {**_config_echo(params), "result.slope": result.slope}
    return ResultTable("runtime-scaling", ("n_sites", "avg_runtime"), rows, meta)


_RUNNERS = {
    "walk": _run_walk,
    "init-profile": _run_init_profile,
    "amplify": _run_amplify,
    "estimate": _run_estimate,
    "noise-sweep": _run_noise_sweep,
    "error-scaling": _run_error_scaling,
    "detune-sweep": _run_detune_sweep,
    "runtime-scaling": _run_runtime_scaling,
}


def validate(config: ExperimentConfig) -> list[str]:
    """Static checks on a config: warnings, notices, and hard errors.

    Lines are prefixed 'error:', 'warning:', or 'notice:'.  Errors make run()
    refuse the config.
    """
    messages: list[str] = []
    params = config.params
    try:
        if config.experiment == "detune-sweep":
            scheme: InitScheme = _detune_scheme_for_sizing(params)
        elif config.experiment == "init-profile":
            scheme = ModifiedPotentialKicks(
                _as_float(params, "phi"), _as_int(params, "M"), _as_int(params, "count")
            )
        elif config.experiment == "runtime-scaling":
            scheme = None
        else:
            scheme = _scheme_from(params)
    except (ConfigError, ValueError) as exc:
        return [f"error: {exc}"]
    if scheme is not None:
        try:
            lattice = _lattice_from(params, scheme)
        except ConfigError as exc:
            return [f"error: {exc}"]
        total = total_kick_strength(scheme)
        if lattice.n_max < 2.0 * total:
            messages.append(
                f"warning: n_max={lattice.n_max} is below twice the total kick "
                f"strength {total:g}; the truncation guard is likely to fire"
            )
        if isinstance(scheme, DetunedPair) and scheme.epsilon >= 0.5:
            messages.append(
                f"warning: epsilon={scheme.epsilon:g} is outside the flattening "
                f"regime (epsilon << 1)"
            )
    if "marked" in params and params["marked"] != "auto":
        try:
            marked = _as_number_tuple(params, "marked")
            if len(marked) == 0:
                messages.append("error: marked set is empty")
            elif any(x != int(x) for x in marked):
                messages.append("error: marked sites must be integers")
        except ConfigError as exc:
            messages.append(f"error: {exc}")
    if config.experiment in ("amplify", "estimate") and scheme is not None:
        try:
            guard = _guard_threshold(params)
            state = prepare_initial(lattice, scheme, guard=guard)
            marked = _resolve_marked(params, momentum_std(state))
            a0 = success_probability(state, OracleSpec(marked))
            if a0 > 0.0 and optimal_iterations(a0) != optimal_iterations_rounded(a0):
                messages.append(
                    f"notice: iteration-count roundings differ at a0={a0:.6g} "
                    f"(floor {optimal_iterations(a0)} vs half-up "
                    f"{optimal_iterations_rounded(a0)}); the floor rule is used"
                )
        except (ConfigError, ValueError, TruncationError, NumericalFault) as exc:
            messages.append(f"warning: dry-run preparation failed: {exc}")
    if "epsilons" in params:
        try:
            eps = _as_number_tuple(params, "epsilons")
            if any(e < 0 for e in eps):
                messages.append("error: epsilons must be >= 0")
            if any(e >= 0.01 for e in eps):
                messages.append(
                    "warning: detuning epsilon >= 0.01 rad per cycle is far "
                    "outside the perturbative regime"
                )
        except ConfigError as exc:
            messages.append(f"error: {exc}")
    if "shots" in params:
        try:
            if _as_int(params, "shots") < 0:
                messages.append("error: shots must be >= 0")
        except ConfigError as exc:
            messages.append(f"error: {exc}")
    return messages


def run(config: ExperimentConfig) -> ResultTable:
    """Run one experiment; raises the mapped exceptions on failure."""
    diagnostics = validate(config)
    errors = [m for m in diagnostics if m.startswith("error:")]
    for message in diagnostics:
        print(message, file=sys.stderr)
    if errors:
        raise ConfigError("; ".join(errors))
    table = _RUNNERS[config.experiment](config.params)
    table.check_finite()
    return table


def _emit_error(exc: BaseException, code: int) -> None:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkr",
        description="Kicked-rotor amplitude amplification and estimation experiments.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS + ("validate",))
    parser.add_argument("--config", default=None, help="flat key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--seed", type=int, default=None, help="unsigned 64-bit master seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.experiment == "validate":
            if args.config is None:
                raise ConfigError("validate needs --config with an 'experiment' key")
            params = load_config_file(args.config)
            experiment = params.pop("experiment", None)
            if not isinstance(experiment, str):
                raise ConfigError("validate needs an 'experiment' key in the config file")
            _apply_overrides(params, list(args.overrides))
            config = ExperimentConfig(str(experiment), params)
            diagnostics = validate(config)
            for message in diagnostics:
                print(message)
            if not diagnostics:
                print("ok")
            return 2 if any(m.startswith("error:") for m in diagnostics) else 0
        config = build_config(args.experiment, args.config, args.overrides, args.seed)
        if args.out is None:
            raise ConfigError("--out is required to run an experiment")
        table = run(config)
        table.write(args.out)
        print(f"{config.experiment}: wrote {len(table.rows)} rows to {args.out}")
        for key in sorted(table.metadata):
            if key.startswith("result."):
                print(f"  {key} = {_fmt(table.metadata[key])}")
        return 0
    except ConfigError as exc:
        _emit_error(exc, 2)
        return 2
    except TruncationError as exc:
        _emit_error(exc, 3)
        return 3
    except (NumericalFault, FloatingPointError) as exc:
        _emit_error(exc, 4)
        return 4


if __name__ == "__main__":
    sys.exit(main())
