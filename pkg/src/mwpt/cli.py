"""The ``mwpt`` command.

Every subcommand reads an optional JSON config (``--config FILE``) and
accepts overrides whose names mirror JSON paths::

    mwpt whiten --R 32 --spec.name bandpass --path.digits 1,0 --path.cycle 1
    mwpt paths --M 3 --path.digits 2,0,1 --path.cycle '' --j_max 3

Outputs go under ``--out DIR`` together with ``manifest.json`` (config
echo, version, sha256 of every output, timings).  Reports are
byte-deterministic; timings live only in the manifest.  Exit status is 0
when every check in the report passes, 1 when one fails, 2 for invalid
input.
"""
import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .config import COMMANDS, ExperimentConfig
from .errors import MWPTError
from .experiments import (
    path_rows,
    run_clt,
    run_converge,
    run_selftest,
    run_spectrum,
    run_whiten,
)
from .filter_bank import resolve_bank
from .signal_io import export_tree, load_tree, read_signal, write_signal
from .synth import gaussian_realization, linear_process
from .wpt import decompose, reconstruct

__all__ = ["main"]

_HELP = {
    "paths": "tabulate n(j), G(n(j)) and bands along a path",
    "synth": "write R realizations of a stationary process",
    "decompose": "packet-decompose a signal file and export the tree",
    "reconstruct": "invert an exported tree back to a signal",
    "whiten": "whitening along a path and the exact finite-level identity",
    "clt": "cumulant decay / Gaussianization along a path",
    "converge": "Daubechies order sweep against the Shannon limit",
    "spectrum": "packet spectrum estimate against band averages",
    "selftest": "run the invariant suites",
}

_EPILOG = """\
overrides mirror JSON paths: --M, --J, --K, --R, --L, --seed, --j_range 3,7,
--j_max, --path.digits, --path.cycle, --bank, --spec.name, --spec.params.NAME,
--noise, --r_list, --oracle.J, --oracle.lags, --mode, --format, --export,
--input, --out, --threads, --thresholds.NAME.  MWPT_SEED sets the default seed.
"""


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _csv_text(fields, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _cell(row.get(k, "")) for k in fields})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, np.generic):
        v = v.item()
    return repr(v) if isinstance(v, float) else v


def _atomic_write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = cfg.out
        self.files = []
        self.t0 = time.perf_counter()
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def text(self, name, data):
        _atomic_write(self.path(name), data)

    def report(self, rep):
        for name, (fields, rows) in rep.tables.items():
            self.text(f"{name}.csv", _csv_text(fields, rows))
        self.text(f"{rep.name}.json", dumps(rep.to_dict()))
        for key, ok in rep.checks.items():
            print(f"{key}: {'pass' if ok else 'fail'}")

    def finish(self, passed=True):
        outputs = {}
        for name in sorted(set(self.files)):
            outputs[name] = _sha256(os.path.join(self.out, name))
        manifest = {
            "tool": "mwpt",
            "version": __version__,
            "command": self.cfg.experiment,
            "config": self.cfg.to_dict(),
            "outputs": outputs,
            "passed": bool(passed),
            "timings": {"wall_seconds": round(time.perf_counter() - self.t0, 6)},
        }
        _atomic_write(os.path.join(self.out, "manifest.json"), dumps(manifest))
        return 0 if passed else 1


def cmd_paths(cfg):
    run = _Run(cfg)
    path = cfg.path_spec()
    rows = path_rows(path, cfg.j_max)
    fields = ("j", "n", "G(n)", "band_lo", "band_hi", "midpoint")
    text = _csv_text(fields, rows)
    sys.stdout.write(text)
    run.text("paths.csv", text)
    run.text("paths.json", dumps({"M": cfg.M, "path": path.to_dict(), "label": path.label,
                                  "rows": rows}))
    return run.finish()


def cmd_synth(cfg):
    run = _Run(cfg)
    spec = cfg.spectrum()
    ext = "bin" if cfg.format == "bin" else "csv"
    prov = []
    for i in range(cfg.R):
        if cfg.noise == "gaussian":
            rz = gaussian_realization(spec, cfg.K, cfg.seed, i)
        else:
            rz = linear_process(spec, cfg.noise, cfg.K, cfg.seed, i)
        name = f"realization_{i:04d}.{ext}"
        write_signal(run.path(name), rz.samples, ext)
        prov.append(dict(rz.provenance, file=name))
    run.text("synth.json", dumps({"spec": spec.to_dict(), "realizations": prov}))
    return run.finish()


def cmd_decompose(cfg):
    run = _Run(cfg)
    bank = cfg.bank()
    x = read_signal(cfg.input)
    path = cfg.path_spec() if cfg.mode == "single-path" else None
    tree = decompose(x, bank, cfg.J, cfg.mode, path)
    export_tree(tree, cfg.out, cfg.export)
    with open(os.path.join(cfg.out, "tree.json"), encoding="utf-8") as fh:
        entries = json.load(fh)["nodes"]
    run.files.append("tree.json")
    run.files.extend(e["file"] for e in entries)
    print(f"exported {len(entries)} nodes to {cfg.out}")
    return run.finish()


def cmd_reconstruct(cfg):
    run = _Run(cfg)
    tree = load_tree(cfg.input)
    try:
        bank = resolve_bank(tree.bank_label)
    except MWPTError:
        bank = cfg.bank()
    x = reconstruct(tree, bank)
    ext = "bin" if cfg.format == "bin" else "csv"
    write_signal(run.path(f"reconstructed.{ext}"), x, ext)
    print(f"reconstructed {x.size} samples with {bank.label}")
    return run.finish()


def _experiment(fn):
    def cmd(cfg):
        run = _Run(cfg)
        rep = fn(cfg)
        run.report(rep)
        return run.finish(rep.passed)
    return cmd


HANDLERS = {
    "paths": cmd_paths,
    "synth": cmd_synth,
    "decompose": cmd_decompose,
    "reconstruct": cmd_reconstruct,
    "whiten": _experiment(run_whiten),
    "clt": _experiment(run_clt),
    "converge": _experiment(run_converge),
    "spectrum": _experiment(run_spectrum),
    "selftest": _experiment(run_selftest),
}


def _overrides(extra):
    """``["--a.b", "v", "--c=w"]`` -> ``[("a.b", "v"), ("c", "w")]``."""
    pairs = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or tok == "--":
            raise MWPTError(f"unexpected argument {tok!r}; overrides look like --key value")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise MWPTError(f"override {tok} needs a value")
            val = extra[i + 1]
            i += 2
        pairs.append((key.replace("-", "_"), val))
    return pairs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mwpt", description="M-band wavelet packet experiments.",
    )
    parser.add_argument("--version", action="version", version=f"mwpt {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name], epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="FILE", help="JSON experiment config")
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = ExperimentConfig.build(args.command, args.config, _overrides(extra))
        cfg.validate()
        return HANDLERS[args.command](cfg)
    except MWPTError as exc:
        print(f"mwpt {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
