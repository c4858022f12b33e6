"""Config files: TOML with sections landscape / noise / solver / run / study.

Every key has a default except ``landscape.wells``; the fully resolved
dictionary (defaults expanded, derived bounds and filter width filled in)
is what runs are built from, what ``--print-config`` emits, and what the
run manifest snapshots, so a run is reproducible from its manifest alone.
"""

import copy

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import landscape as landscape_mod
from . import noise as noise_mod
from . import solver as solver_mod
from .errors import ConfigurationError

DEFAULTS = {
    "landscape": {
        "wells": None,            # required: [[u, v, weight], ...]
        "labels": None,           # optional, defaults to well0, well1, ...
        "counts": None,           # optional: derive weights from counts
        "count_convention": "half-inverse-sqrt",
        "bounds": None,           # optional: [u_min, u_max, v_min, v_max]
        "filter_width": None,     # optional: default 2% of bounds diagonal
        "grid_points": 241,
    },
    "noise": {
        "l": 0.1,
        "mode": "qwiener",        # or "white"
        "clip_tol": 1e-10,
    },
    "solver": {
        "J": 64,
        "bc": "neumann",
        "d1": 1.0,
        "d2": 1.0,
        "dt": 0.001,
        "domain_length": 1.0,
    },
    "run": {
        "sigma": 0.012,
        "t_end": 100.0,
        "record_stride": 10,
        "seed": 12345,
        "initial_condition": None,   # default: first well center
        "burn_in": 10.0,
        "dwell_steps": 10,
        "forcing": "none",           # or "pull"
        "forcing_target": 0,
        "forcing_gain": 0.0,
    },
    "study": {
        "sigmas": [],
        "n_traj": 40,
    },
}


def _merge(defaults, data, prefix=""):
    out = copy.deepcopy(defaults)
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigurationError(f"unknown config key '{dotted}'")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"'{dotted}' must be a section")
            out[key] = _merge(defaults[key], value, prefix=f"{dotted}.")
        else:
            out[key] = value
    return out


def load_config(path, overrides=None):
    """Parse a TOML file, merge defaults and overrides, resolve derived keys."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as err:
        raise ConfigurationError(f"config parse error in {path}: {err}")
    return resolve_config(data, overrides)


def resolve_config(data, overrides=None):
    cfg = _merge(DEFAULTS, data)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in cfg or key not in cfg[section]:
            raise ConfigurationError(f"unknown config key '{dotted}'")
        cfg[section][key] = value

    ls = cfg["landscape"]
    if ls["wells"] is None:
        raise ConfigurationError("missing required key 'landscape.wells'")
    wells = [list(map(float, w)) for w in ls["wells"]]
    if ls["counts"] is not None:
        if any(len(w) != 2 for w in wells):
            raise ConfigurationError(
                "'landscape.wells' must be [u, v] pairs when "
                "'landscape.counts' is given")
        weights = landscape_mod.weights_from_counts(ls["counts"],
                                                    ls["count_convention"])
        wells = [[u, v, float(a)] for (u, v), a in zip(wells, weights)]
    if any(len(w) != 3 for w in wells):
        raise ConfigurationError(
            "'landscape.wells' entries must be [u, v, weight] triples")
    ls["wells"] = wells
    if ls["labels"] is None:
        ls["labels"] = [f"well{k}" for k in range(len(wells))]
    raw = landscape_mod.build_landscape(
        [landscape_mod.Well((w[0], w[1]), w[2]) for w in wells], ls["labels"])
    if ls["bounds"] is None:
        ls["bounds"] = list(landscape_mod.default_bounds(raw))
    ls["bounds"] = [float(b) for b in ls["bounds"]]
    if ls["filter_width"] is None:
        ls["filter_width"] = landscape_mod.default_filter_width(ls["bounds"])
    if cfg["run"]["initial_condition"] is None:
        cfg["run"]["initial_condition"] = [wells[0][0], wells[0][1]]
    return cfg


def build_runtime(cfg):
    """Instantiate landscape, noise, discretization and SimConfig from a
    resolved config dictionary."""
    ls = cfg["landscape"]
    raw = landscape_mod.build_landscape(
        [landscape_mod.Well((w[0], w[1]), w[2]) for w in ls["wells"]],
        ls["labels"])
    land = landscape_mod.mollify(raw, float(ls["filter_width"]),
                                 tuple(ls["bounds"]), int(ls["grid_points"]))

    sv = cfg["solver"]
    disc = solver_mod.build_discretization(
        J=int(sv["J"]), bc=sv["bc"], d1=float(sv["d1"]), d2=float(sv["d2"]),
        dt=float(sv["dt"]), domain_length=float(sv["domain_length"]))

    ns = cfg["noise"]
    if ns["mode"] == "qwiener":
        model = noise_mod.build_noise(float(ns["l"]), disc.x,
                                      clip_tol=float(ns["clip_tol"]))
    elif ns["mode"] == "white":
        model = noise_mod.white_noise(disc.x)
    else:
        raise ConfigurationError(
            f"'noise.mode' must be qwiener or white, got {ns['mode']!r}")

    rn = cfg["run"]
    if rn["forcing"] == "none":
        forcing = None
    elif rn["forcing"] == "pull":
        target = int(rn["forcing_target"])
        if not 0 <= target < raw.n_wells:
            raise ConfigurationError(
                f"'run.forcing_target' {target} is not a well index")
        forcing = solver_mod.pull_toward(raw.centers[target],
                                         float(rn["forcing_gain"]))
    else:
        raise ConfigurationError(
            f"'run.forcing' must be none or pull, got {rn['forcing']!r}")

    sim = solver_mod.SimConfig(
        landscape=land, noise=model, disc=disc,
        sigma=float(rn["sigma"]), t_end=float(rn["t_end"]),
        record_stride=int(rn["record_stride"]),
        initial_condition=tuple(float(c) for c in rn["initial_condition"]),
        forcing=forcing)
    return sim


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def dumps_toml(cfg):
    """Emit a resolved config as TOML (round-trips through load_config)."""
    lines = []
    for section, body in cfg.items():
        lines.append(f"[{section}]")
        for key, value in body.items():
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
