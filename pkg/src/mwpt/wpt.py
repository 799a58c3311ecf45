"""M-band wavelet packet analysis and synthesis on periodic sequences.

One analysis step correlates the parent with each filter and keeps every
M-th sample::

    child_m[k] = sum_l h_m[l] c[(M k + l) mod N]

Synthesis is the adjoint (upsample, filter, sum), which inverts analysis for
paraunitary banks.  FIR banks run in the tap domain; the Shannon bank runs
the same recursion in the DFT domain with exact bin masks.  Coefficient
arrays may carry leading batch axes; the transform acts on the last axis.
"""
from dataclasses import dataclass, field
import functools
import math

import numpy as np

from .errors import IncompleteCover, MWPTError
from .filter_bank import FilterBank, dft_responses
from .path_algebra import PathSpec

__all__ = [
    "PacketTree",
    "analyze_step",
    "synthesize_step",
    "dft_analyze_step",
    "dft_synthesize_step",
    "decompose",
    "decompose_shannon",
    "reconstruct",
    "node_sequence",
]


@dataclass(frozen=True, eq=False)
class PacketTree:
    """Coefficients ``c_{j,n}`` keyed by ``(j, n)``.

    ``mode`` is ``"full"`` (every node of every level up to ``J``) or
    ``"single-path"`` (one node per level).  Boundary handling is periodic.
    """

    M: int
    J: int
    K: int
    mode: str
    bank_label: str
    nodes: dict = field(repr=False)
    path: PathSpec = None
    boundary: str = "periodic"

    def __contains__(self, key):
        return key in self.nodes

    def level(self, j):
        """All populated nodes at level ``j`` as ``{n: array}``."""
        return {n: c for (jj, n), c in self.nodes.items() if jj == j}

    def leaves(self):
        """Nodes none of whose children are populated."""
        out = []
        for (j, n) in sorted(self.nodes):
            if not any((j + 1, self.M * n + m) in self.nodes for m in range(self.M)):
                out.append((j, n))
        return out


def _check_length(N, M):
    if N % M:
        raise MWPTError(f"sequence length {N} is not divisible by M={M}")


def analyze_step(c, bank, which=None):
    """Split ``c`` into ``M`` children of length ``len(c) / M``.

    Returns an array of shape ``(..., M, N/M)``, or a single child
    ``(..., N/M)`` when ``which`` selects one filter.
    """
    if bank.is_shannon:
        return dft_analyze_step(c, bank, which)
    c = np.asarray(c, dtype=float)
    N = c.shape[-1]
    M = bank.M
    _check_length(N, M)
    taps = bank.tap_matrix()
    if which is not None:
        taps = taps[which : which + 1]
    base = M * np.arange(N // M)
    out = np.zeros(c.shape[:-1] + (taps.shape[0], N // M))
    for ell in range(taps.shape[1]):
        x = c[..., (base + ell) % N]
        out += taps[:, ell, None] * x[..., None, :]
    return out[..., 0, :] if which is not None else out


def synthesize_step(children, bank):
    """Inverse of :func:`analyze_step` for paraunitary banks."""
    if bank.is_shannon:
        return dft_synthesize_step(children, bank)
    children = np.asarray(children, dtype=float)
    M = bank.M
    if children.ndim < 2 or children.shape[-2] != M:
        raise MWPTError(f"expected {M} children of equal length")
    Nc = children.shape[-1]
    N = Nc * M
    taps = bank.tap_matrix()
    base = M * np.arange(Nc)
    out = np.zeros(children.shape[:-2] + (N,))
    for ell in range(taps.shape[1]):
        contrib = np.einsum("m,...mk->...k", taps[:, ell], children)
        idx = (base + ell) % N
        out[..., idx] += contrib
    return out


def _masks(bank, N):
    # conj for correlation; sqrt(M) turns H_m back into the tap transform
    return np.conj(dft_responses(bank, N)) * math.sqrt(bank.M)


def dft_analyze_step(c, bank, which=None):
    """:func:`analyze_step` carried out in the DFT domain.

    The filter is applied as a mask on the DFT bins and decimation is an
    aliasing sum over the ``M`` spectral copies.
    """
    c = np.asarray(c, dtype=float)
    N = c.shape[-1]
    M = bank.M
    _check_length(N, M)
    masks = _masks(bank, N)
    if which is not None:
        masks = masks[which : which + 1]
    C = np.fft.fft(c, axis=-1)
    Y = C[..., None, :] * masks
    Y = Y.reshape(Y.shape[:-1] + (M, N // M)).sum(axis=-2) / M
    out = np.fft.ifft(Y, axis=-1).real
    return out[..., 0, :] if which is not None else out


def dft_synthesize_step(children, bank):
    children = np.asarray(children, dtype=float)
    M = bank.M
    if children.ndim < 2 or children.shape[-2] != M:
        raise MWPTError(f"expected {M} children of equal length")
    N = children.shape[-1] * M
    H = np.conj(_masks(bank, N))
    Ch = np.fft.fft(children, axis=-1)
    U = np.concatenate([Ch] * M, axis=-1)
    P = np.sum(H * U, axis=-2)
    return np.fft.ifft(P, axis=-1).real


def _validate_signal(x, M, J):
    x = np.array(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise MWPTError("signal must contain at least one sample")
    if not np.all(np.isfinite(x)):
        raise MWPTError("signal contains non-finite samples")
    if J < 0:
        raise MWPTError("depth J must be >= 0")
    K = x.shape[-1]
    if K % (M**J):
        raise MWPTError(
            f"signal length {K} is not divisible by M^J = {M}^{J} = {M**J}; "
            "zero padding is deliberately not supported"
        )
    return x


def decompose(signal, bank, J, mode="full", path=None):
    """Packet decomposition down to level ``J``.

    ``mode="full"`` splits every node; ``mode="single-path"`` follows
    ``path`` (a :class:`PathSpec`) and keeps only the chain ``(j, n(j))``.
    """
    M = bank.M
    x = _validate_signal(signal, M, J)
    nodes = {(0, 0): x}
    if mode == "full":
        frontier = [0]
        for j in range(J):
            nxt = []
            for n in frontier:
                kids = analyze_step(nodes[(j, n)], bank)
                for m in range(M):
                    nodes[(j + 1, M * n + m)] = kids[..., m, :]
                    nxt.append(M * n + m)
            frontier = nxt
    elif mode == "single-path":
        if path is None:
            raise MWPTError("single-path mode needs a path")
        if path.M != M:
            raise MWPTError(f"path is {path.M}-ary but the bank has M={M}")
        digits = path.digits(J)
        n = 0
        for j, m in enumerate(digits):
            child = analyze_step(nodes[(j, n)], bank, which=m)
            n = M * n + m
            nodes[(j + 1, n)] = child
    else:
        raise MWPTError(f"unknown mode {mode!r}; use 'full' or 'single-path'")
    for c in nodes.values():
        c.setflags(write=False)
    return PacketTree(M, J, x.shape[-1], mode, bank.label, nodes, path)


def decompose_shannon(signal, M, J, mode="full", path=None):
    """Exact Shannon packet decomposition (DFT domain).

    Band edges fall on DFT bins when the length is divisible by ``2 M^J``;
    any length divisible by ``M^J`` is accepted.
    """
    return decompose(signal, FilterBank.shannon(M), J, mode, path)


def reconstruct(tree, bank):
    """Invert the decomposition from the deepest complete cover of the root.

    A node is rebuilt from its children when all ``M`` are available, taken
    as stored when none are, and rejected when only some are.
    """
    if bank.M != tree.M:
        raise MWPTError(f"bank has M={bank.M} but the tree has M={tree.M}")
    M = tree.M

    @functools.lru_cache(maxsize=None)
    def populated_below(j, n):
        return (j, n) in tree.nodes or (
            j < tree.J and any(populated_below(j + 1, M * n + m) for m in range(M))
        )

    def build(j, n):
        kids = [(j + 1, M * n + m) for m in range(M)]
        have = sum(populated_below(*k) for k in kids) if j < tree.J else 0
        if have == M:
            return synthesize_step(np.stack([build(*k) for k in kids], axis=-2), bank)
        if have:
            raise IncompleteCover(
                f"node ({j}, {n}) has only {have} of {M} children populated"
            )
        if (j, n) in tree.nodes:
            return np.asarray(tree.nodes[(j, n)])
        raise IncompleteCover(f"node ({j}, {n}) is not covered")

    return build(0, 0)


def node_sequence(tree, j, n):
    """Read-only view of ``c_{j,n}``."""
    try:
        return tree.nodes[(j, n)]
    except KeyError:
        raise MWPTError(f"node ({j}, {n}) is not populated") from None
