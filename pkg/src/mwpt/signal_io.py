"""Signal files and packet-tree export.

Signals are stored either as CSV (one sample per line) or as raw binary: a
16-byte header (``b"MWPT"``, u32 version, u64 length; little-endian)
followed by IEEE-754 doubles.  A tree export is a directory with one CSV per
node and a ``tree.json`` manifest.
"""
import json
import os
import struct

import numpy as np

from .errors import MWPTError
from .path_algebra import PathSpec
from .wpt import PacketTree

__all__ = ["read_signal", "write_signal", "export_tree", "load_tree"]

MAGIC = b"MWPT"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def write_signal(path, x, fmt=None):
    """Write ``x``; ``fmt`` is ``"csv"`` or ``"bin"`` (default: by extension)."""
    x = np.asarray(x, dtype=float).ravel()
    fmt = fmt or ("bin" if str(path).endswith(".bin") else "csv")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(f"{v!r}\n" for v in x.tolist())
    elif fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, x.size))
            fh.write(x.astype("<f8").tobytes())
    else:
        raise MWPTError(f"unknown signal format {fmt!r}; use 'csv' or 'bin'")


def read_signal(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if head[:4] == MAGIC:
            if len(head) < _HEADER.size:
                raise MWPTError(f"{path}: truncated header")
            _, version, n = _HEADER.unpack(head)
            if version != VERSION:
                raise MWPTError(f"{path}: unsupported version {version}")
            data = np.frombuffer(fh.read(), dtype="<f8")
            if data.size != n:
                raise MWPTError(f"{path}: header says {n} samples, found {data.size}")
            return data.astype(float)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line.split(",")[0]))
            except ValueError:
                raise MWPTError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise MWPTError(f"{path}: no samples")
    return np.array(values)


def _node_file(j, n):
    return f"node_j{j}_n{n}.csv"


def export_tree(tree, directory, levels="leaves"):
    """Write node CSVs and ``tree.json``; returns the manifest path.

    ``levels="leaves"`` writes the deepest nodes only (enough to
    reconstruct a full tree); ``"all"`` writes every populated node.
    """
    os.makedirs(directory, exist_ok=True)
    if levels == "leaves":
        keys = tree.leaves()
    elif levels == "all":
        keys = sorted(tree.nodes)
    else:
        raise MWPTError(f"unknown export selection {levels!r}")
    entries = []
    for j, n in keys:
        name = _node_file(j, n)
        write_signal(os.path.join(directory, name), tree.nodes[(j, n)], "csv")
        entries.append({"j": j, "n": n, "file": name})
    manifest = {
        "M": tree.M,
        "J": tree.J,
        "K": tree.K,
        "bank": tree.bank_label,
        "mode": tree.mode,
        "boundary": tree.boundary,
        "nodes": entries,
    }
    if tree.path is not None:
        manifest["path"] = tree.path.to_dict()
    out = os.path.join(directory, "tree.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_tree(directory):
    manifest_path = directory
    if os.path.isdir(directory):
        manifest_path = os.path.join(directory, "tree.json")
    base = os.path.dirname(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        m = json.load(fh)
    nodes = {}
    for entry in m["nodes"]:
        c = read_signal(os.path.join(base, entry["file"]))
        c.setflags(write=False)
        nodes[(int(entry["j"]), int(entry["n"]))] = c
    path = None
    if "path" in m:
        p = m["path"]
        path = PathSpec(p["M"], p.get("digits", ()), p.get("cycle", ()))
    return PacketTree(m["M"], m["J"], m["K"], m["mode"], m["bank"], nodes, path,
                      m.get("boundary", "periodic"))
