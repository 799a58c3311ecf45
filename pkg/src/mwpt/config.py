"""Experiment configuration: one JSON document per run, plus overrides.

Every field has a default; each command adds its own defaults on top
(``whiten`` looks at levels 3..7, ``clt`` at 2..7 with uniform noise, and
so on).  Overrides use dotted JSON paths, e.g. ``spec.name=bandpass`` or
``path.digits=1,1,1``.  :meth:`ExperimentConfig.validate` checks every
constraint before any computation and raises :class:`ConfigError` with a
single actionable message.
"""
import copy
import json
import os

from .errors import ConfigError, MWPTError
from .filter_bank import resolve_bank
from .path_algebra import PathSpec
from .signal_io import read_signal
from .synth import NOISE_KINDS, SpectrumSpec

__all__ = ["ExperimentConfig", "COMMANDS", "DEFAULT_SEED", "default_seed"]

DEFAULT_SEED = 20240601

COMMANDS = (
    "paths", "synth", "decompose", "reconstruct", "whiten", "clt",
    "converge", "spectrum", "selftest",
)

THRESHOLDS = {
    "variance_se": 3.0,
    "whiteness_z": 4.0,
    "oracle_se": 4.0,
    "oracle_fraction": 0.95,
    "kurtosis_max": 0.05,
    "gaussian_z": 4.0,
    "gaussian_fraction": 0.90,
    "converge_ratio": 4.0,
    "converge_slack": 0.10,
    "spectrum_rel": 0.05,
    "power_rel": 1e-6,
    "reconstruct_rel": 1e-10,
}

BASE = {
    "experiment": None,
    "M": 2,
    "J": 4,
    "j_range": [3, 7],
    "j_max": 8,
    "path": {"digits": [], "cycle": [1]},
    "bank": "shannon",
    "spec": {"kind": "preset", "name": "raised-cosine", "params": {}},
    "noise": "gaussian",
    "K": 2**18,
    "R": 64,
    "seed": None,
    "L": 32,
    "r_list": [1, 2, 4, 8, 16],
    "oracle": {"J": 4, "lags": 8},
    "mode": "full",
    "format": "csv",
    "export": "leaves",
    "input": None,
    "out": "mwpt-out",
    "threads": None,
    "thresholds": dict(THRESHOLDS),
}

COMMAND_DEFAULTS = {
    "paths": {},
    "synth": {"K": 2**14, "R": 1},
    "decompose": {},
    "reconstruct": {},
    "whiten": {"j_range": [3, 7], "L": 32},
    "clt": {"j_range": [2, 7], "noise": "uniform"},
    "converge": {"J": 4, "L": 8},
    "spectrum": {"J": 5},
    "selftest": {},
}


def default_seed():
    raw = os.environ.get("MWPT_SEED")
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"MWPT_SEED must be an integer, got {raw!r}") from None


def _merge(base, upd, where=""):
    for key, val in upd.items():
        name = f"{where}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {name!r}")
        if isinstance(base[key], dict) and key not in ("spec",) and isinstance(val, dict):
            _merge(base[key], val, name + ".")
        else:
            base[key] = copy.deepcopy(val)


def _parse_value(text):
    """JSON if it parses, a list for comma-separated items, else the string."""
    try:
        return json.loads(text)
    except ValueError:
        pass
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t != ""]
    return text


def _as_list(v):
    if v is None or v == "":
        return []
    if isinstance(v, (list, tuple)):
        return list(v)
    if isinstance(v, str):
        return [int(t) for t in v.replace(" ", "").split(",") if t]
    return [v]


class ExperimentConfig:
    """Resolved configuration for one command.

    ``data`` is the full JSON document (defaults merged in); attribute
    access reads top-level fields, e.g. ``cfg.K``.
    """

    def __init__(self, data):
        object.__setattr__(self, "data", data)

    def __getattr__(self, name):
        try:
            return self.data[name]
        except KeyError:
            raise AttributeError(name) from None

    def __setattr__(self, name, value):
        raise AttributeError("ExperimentConfig is read-only; use with_overrides")

    @classmethod
    def build(cls, command, document=None, overrides=()):
        """Defaults for ``command``, then ``document`` (dict or JSON file
        path), then dotted ``(key, value)`` overrides."""
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
        data = copy.deepcopy(BASE)
        _merge(data, COMMAND_DEFAULTS[command])
        if isinstance(document, str):
            try:
                with open(document, encoding="utf-8") as fh:
                    document = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file {document!r}: {exc.strerror}") from None
            except ValueError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if document:
            if not isinstance(document, dict):
                raise ConfigError("config document must be a JSON object")
            _merge(data, document)
        cfg = cls(data).with_overrides(overrides)
        cfg.data["experiment"] = command
        if cfg.data["seed"] is None:
            cfg.data["seed"] = default_seed()
        return cfg

    def with_overrides(self, overrides):
        data = copy.deepcopy(self.data)
        for key, raw in overrides:
            parts = key.split(".")
            node = data
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    if parts[0] == "spec" and part == "params":
                        node[part] = {}
                    else:
                        raise ConfigError(f"unknown config field {key!r}")
                node = node[part]
            leaf = parts[-1]
            free = parts[0] == "spec"  # spec parameters are open-ended
            if leaf not in node and not free:
                raise ConfigError(f"unknown config field {key!r}")
            node[leaf] = _parse_value(raw) if isinstance(raw, str) else raw
        return ExperimentConfig(data)

    def to_dict(self):
        return copy.deepcopy(self.data)

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    # resolved objects ---------------------------------------------------

    def path_spec(self):
        p = self.data["path"]
        try:
            return PathSpec(self.data["M"], _as_list(p.get("digits")), _as_list(p.get("cycle")))
        except (MWPTError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid path: {exc}") from None

    def spectrum(self):
        try:
            return SpectrumSpec.from_dict(self.data["spec"])
        except (MWPTError, TypeError) as exc:
            raise ConfigError(f"invalid spec: {exc}") from None

    def bank(self):
        name = self.data["bank"]
        if name == "shannon":
            name = f"shannon:{self.data['M']}"
        try:
            bank = resolve_bank(name)
        except MWPTError as exc:
            raise ConfigError(f"invalid bank: {exc}") from None
        if bank.M != self.data["M"]:
            raise ConfigError(f"bank {name!r} has M={bank.M} but the config says M={self.data['M']}")
        return bank

    def levels(self):
        lo, hi = self.data["j_range"]
        return list(range(lo, hi + 1))

    def worker_count(self):
        t = self.data["threads"]
        if t is None:
            return os.cpu_count() or 1
        return t

    # validation -----------------------------------------------------------

    def validate(self):
        """Check all constraints relevant to the command; raise on the first."""
        d = self.data
        cmd = d["experiment"]
        for key in ("M", "J", "K", "R", "L", "j_max", "seed"):
            if isinstance(d[key], bool) or not isinstance(d[key], int):
                raise ConfigError(f"{key} must be an integer, got {d[key]!r}")
        M = d["M"]
        if M < 2:
            raise ConfigError(f"M must be >= 2, got {M}")
        if d["R"] < 1:
            raise ConfigError(f"R must be >= 1, got {d['R']}")
        if d["threads"] is not None and (not isinstance(d["threads"], int) or d["threads"] < 1):
            raise ConfigError(f"threads must be a positive integer, got {d['threads']!r}")
        if d["seed"] < 0:
            raise ConfigError("seed must be nonnegative")
        jr = d["j_range"]
        if (not isinstance(jr, list) or len(jr) != 2 or not all(isinstance(v, int) for v in jr)
                or not 0 <= jr[0] <= jr[1]):
            raise ConfigError(f"j_range must be [lo, hi] with 0 <= lo <= hi, got {jr!r}")
        for key, val in d["thresholds"].items():
            if not isinstance(val, (int, float)) or val < 0:
                raise ConfigError(f"thresholds.{key} must be a nonnegative number")
        if d["noise"] not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {', '.join(NOISE_KINDS)}, got {d['noise']!r}")
        if d["format"] not in ("csv", "bin"):
            raise ConfigError(f"format must be 'csv' or 'bin', got {d['format']!r}")
        if d["mode"] not in ("full", "single-path"):
            raise ConfigError(f"mode must be 'full' or 'single-path', got {d['mode']!r}")

        depth = self.depth()
        path = self.path_spec()
        if cmd in ("paths", "whiten", "clt", "converge") or (
            cmd == "decompose" and d["mode"] == "single-path"
        ):
            need = d["j_max"] if cmd == "paths" else depth
            if not path.is_periodic and len(path.prefix) < need:
                raise ConfigError(
                    f"path has {len(path.prefix)} digits but level {need} is needed; "
                    "add digits or a repeating cycle (path.cycle)"
                )
        if cmd in ("synth", "whiten", "clt", "converge", "spectrum"):
            self.spectrum()
            K = d["K"]
            if K < 2 or K % 2:
                raise ConfigError(f"K must be even and >= 2, got {K}")
            if K % (M**depth):
                raise ConfigError(
                    f"K={K} is not divisible by M^J={M}^{depth}={M**depth}; "
                    f"choose K as a multiple of {M**depth}"
                )
        if cmd in ("whiten", "clt", "converge", "spectrum") and d["R"] < 2:
            raise ConfigError(f"{cmd} needs R >= 2 realizations for standard errors")
        if cmd == "whiten":
            Kj = d["K"] // M**max(self.levels())
            if Kj < 8 * d["L"]:
                raise ConfigError(
                    f"lag window L={d['L']} too long for {Kj} coefficients at level "
                    f"{max(self.levels())}; need K/M^j >= 8L"
                )
            if d["K"] // M ** d["oracle"]["J"] < 8 * d["oracle"]["lags"]:
                raise ConfigError("oracle.lags too long for the coefficients at oracle.J")
        if cmd == "clt" and d["K"] // M**depth < 1024:
            raise ConfigError(
                f"cumulants need >= 1024 coefficients, but K/M^j = {d['K'] // M**depth} "
                f"at level {depth}; increase K"
            )
        if cmd == "converge":
            if M != 2:
                raise ConfigError("converge uses Daubechies banks and needs M=2")
            rl = d["r_list"]
            if not rl or not all(isinstance(r, int) and 1 <= r <= 20 for r in rl):
                raise ConfigError(f"r_list must hold orders in 1..20, got {rl!r}")
            if d["K"] // M**depth < 8 * d["L"]:
                raise ConfigError("lag window L too long for the coefficients at level J")
        if cmd in ("decompose", "reconstruct"):
            src = d["input"]
            if not src:
                raise ConfigError(f"{cmd} needs an input (--input FILE)")
            if not os.path.exists(src):
                raise ConfigError(f"input {src!r} does not exist")
        if cmd == "decompose":
            self.bank()
            K = read_signal(d["input"]).size
            if K % (M ** d["J"]):
                raise ConfigError(
                    f"input has {K} samples, not divisible by M^J={M}^{d['J']}={M ** d['J']}; "
                    "zero padding is deliberately not supported"
                )
        if cmd == "spectrum" and d["input"]:
            files = d["input"] if isinstance(d["input"], list) else [d["input"]]
            for f in files:
                if not os.path.exists(f):
                    raise ConfigError(f"input {f!r} does not exist")
        if cmd == "paths" and d["j_max"] < 1:
            raise ConfigError("j_max must be >= 1")
        return self

    def depth(self):
        """Deepest level the command decomposes to."""
        cmd = self.data["experiment"]
        if cmd in ("whiten",):
            return max(max(self.levels()), self.data["oracle"]["J"])
        if cmd == "clt":
            return max(self.levels())
        if cmd == "paths":
            return 0
        if cmd == "synth":
            return 0
        return self.data["J"]
