"""M-band paraunitary filter banks: FIR banks given by taps, and the ideal
(Shannon) bank evaluated symbolically.

Responses follow ``H_m(w) = M^{-1/2} sum_l h_m[l] exp(-i l w)`` with every
tap sequence normalised to unit l2 norm, so a low-pass filter has
``H_0(0) = 1`` and paraunitarity means the modulation matrix
``[H_m(w + 2 pi l / M)]_{m,l}`` is unitary at every frequency.
"""
from dataclasses import dataclass, field
import math
import os
import re

import numpy as np

from ._daubechies import DAUBECHIES_LOWPASS
from .errors import FilterFileError, MWPTError, ParaunitaryError

__all__ = [
    "FilterBank",
    "ParaunitaryCheck",
    "response",
    "shannon_response",
    "shannon_complex_response",
    "dft_responses",
    "check_paraunitary",
    "builtin_bank",
    "builtin_names",
    "load_bank",
    "save_bank",
    "shannon_distance",
]

PARAUNITARY_TOL = 1e-8
_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class ParaunitaryCheck:
    passed: bool
    max_deviation: float

    def __bool__(self):
        return self.passed


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Immutable M-band analysis bank.

    Use :meth:`fir` or :meth:`shannon` rather than the constructor; ``fir``
    normalises and validates the taps.
    """

    M: int
    kind: str
    taps: tuple = field(default=None, repr=False)
    label: str = ""
    order: int = None

    @classmethod
    def fir(cls, taps, label="custom", order=None, validate=True):
        taps = [np.asarray(t, dtype=float).ravel() for t in taps]
        M = len(taps)
        if M < 2:
            raise MWPTError("a filter bank needs at least two filters")
        normed = []
        for m, t in enumerate(taps):
            if t.size == 0 or not np.all(np.isfinite(t)):
                raise MWPTError(f"filter h{m} is empty or not finite")
            norm = np.sqrt(np.sum(t * t))
            if norm == 0:
                raise MWPTError(f"filter h{m} is identically zero")
            t = t / norm
            t.setflags(write=False)
            normed.append(t)
        bank = cls(M, "fir", tuple(normed), label, order)
        if validate:
            check = check_paraunitary(bank)
            if not check.passed:
                raise ParaunitaryError(
                    f"bank {label!r} is not paraunitary "
                    f"(max deviation {check.max_deviation:.3g} > {PARAUNITARY_TOL:g})",
                    check.max_deviation,
                )
        return bank

    @classmethod
    def shannon(cls, M):
        if int(M) != M or M < 2:
            raise MWPTError(f"band count M must be an integer >= 2, got {M!r}")
        return cls(int(M), "shannon", None, f"shannon:{int(M)}", None)

    @property
    def is_shannon(self):
        return self.kind == "shannon"

    @property
    def length(self):
        """Longest tap sequence (0 for the Shannon bank)."""
        return 0 if self.is_shannon else max(t.size for t in self.taps)

    def tap_matrix(self):
        """Taps zero-padded into an ``(M, length)`` array."""
        out = np.zeros((self.M, self.length))
        for m, t in enumerate(self.taps):
            out[m, : t.size] = t
        return out

    def responses(self, omega):
        """Complex responses of all filters, shape ``(M,) + omega.shape``."""
        return np.stack([response(self, m, omega) for m in range(self.M)])


def response(bank, m, omega):
    """``H_m(omega)``; vectorised over ``omega``."""
    if not 0 <= m < bank.M:
        raise MWPTError(f"filter index {m} outside 0..{bank.M - 1}")
    if bank.is_shannon:
        return shannon_complex_response(m, bank.M, omega)
    w = np.asarray(omega, dtype=float)
    t = bank.taps[m]
    ell = np.arange(t.size)
    phase = np.exp(-1j * np.multiply.outer(w, ell))
    return phase @ t / math.sqrt(bank.M)


def _fold(omega):
    """Map to ``[-pi, pi)``."""
    w = np.asarray(omega, dtype=float)
    return (w + np.pi) % (2 * np.pi) - np.pi


def _band_position(M, omega):
    """``x = |w| M / pi`` in ``[0, M]``, snapped to integers within tolerance,
    plus the sign of ``w`` (folded)."""
    w = _fold(omega)
    x = np.abs(w) * M / np.pi
    r = np.rint(x)
    on_edge = np.abs(x - r) <= _EDGE_TOL * M
    x = np.where(on_edge, r, x)
    return x, on_edge, np.sign(w)


def shannon_response(m, M, omega):
    """Ideal band-pass magnitude: 1 inside ``[m pi/M, (m+1) pi/M]`` (and its
    mirror), 0 outside, ``1/sqrt(2)`` exactly on a band edge shared with a
    neighbouring filter.  2 pi periodic."""
    if not 0 <= m < M:
        raise MWPTError(f"filter index {m} outside 0..{M - 1}")
    x, on_edge, _ = _band_position(M, omega)
    inside = (x >= m) & (x <= m + 1)
    shared = on_edge & (x > 0) & (x < M) & ((x == m) | (x == m + 1))
    out = np.where(inside, 1.0, 0.0)
    out = np.where(shared, 1 / math.sqrt(2), out)
    return out if out.ndim else float(out)


def shannon_complex_response(m, M, omega):
    """Shannon response with the phase used at shared band edges.

    Magnitudes equal :func:`shannon_response`.  At an edge ``e pi / M`` the
    lower filter ``e-1`` takes ``1/sqrt(2)`` and the upper filter ``e`` takes
    ``+-i/sqrt(2)`` (sign of the frequency); this keeps the response
    conjugate-symmetric and makes the 2x2 block of the modulation matrix
    unitary, which a purely real split cannot.
    """
    mag = np.asarray(shannon_response(m, M, omega), dtype=complex)
    x, on_edge, sgn = _band_position(M, omega)
    upper = on_edge & (x == m) & (x > 0) & (x < M)
    out = np.where(upper, 1j * sgn * mag, mag)
    return out if out.ndim else complex(out)


def _shannon_bin_responses(M, N):
    """Exact Shannon responses on the ``N``-point DFT grid (integer
    arithmetic; no tolerance involved)."""
    b = np.arange(N)
    f = np.where(b <= N // 2, b, b - N)  # signed frequency index
    a = np.abs(f) * 2 * M  # x = a / N
    k, rem = np.divmod(a, N)
    on_edge = (rem == 0) & (k > 0) & (k < M)
    out = np.zeros((M, N), dtype=complex)
    s = 1 / math.sqrt(2)
    for m in range(M):
        inside = (k == m) & (rem != 0)
        inside |= (k == m) & (rem == 0) & (k == 0)  # w = 0
        inside |= (k == M) & (m == M - 1)  # w = pi
        out[m, inside] = 1.0
        out[m, on_edge & (k == m + 1)] = s
        upper = on_edge & (k == m)
        out[m, upper] = 1j * np.sign(f[upper]) * s
    return out


def dft_responses(bank, N):
    """``H_m(2 pi b / N)`` for ``b = 0..N-1``, shape ``(M, N)``.

    FIR taps longer than ``N`` are wrapped, which is exact for periodic
    sequences of length ``N``.
    """
    if bank.is_shannon:
        return _shannon_bin_responses(bank.M, N)
    out = np.empty((bank.M, N), dtype=complex)
    for m, t in enumerate(bank.taps):
        wrapped = np.zeros(N)
        np.add.at(wrapped, np.arange(t.size) % N, t)
        out[m] = np.fft.fft(wrapped) / math.sqrt(bank.M)
    return out


def _uniform_grid(gridsize):
    return -np.pi + 2 * np.pi * np.arange(gridsize) / gridsize


def check_paraunitary(bank, gridsize=1024, tol=PARAUNITARY_TOL):
    """Maximum entrywise deviation of ``U^H U`` from the identity, where
    ``U[m, l] = H_m(w + 2 pi l / M)``, over a uniform grid of ``[-pi, pi)``.

    Failure is reported in the returned value, never raised.
    """
    if gridsize < 64:
        raise MWPTError("gridsize must be >= 64")
    w = _uniform_grid(gridsize)
    M = bank.M
    cols = [bank.responses(w + 2 * np.pi * l / M) for l in range(M)]
    U = np.stack(cols, axis=-1)  # (M, G, M): filter, grid, alias
    U = np.moveaxis(U, 1, 0)  # (G, M, M)
    gram = np.conj(np.swapaxes(U, 1, 2)) @ U
    dev = float(np.max(np.abs(gram - np.eye(M))))
    return ParaunitaryCheck(dev <= tol, dev)


def _daubechies(r):
    h0 = np.array(DAUBECHIES_LOWPASS[r])
    L = h0.size
    h1 = np.array([(-1) ** ell * h0[L - 1 - ell] for ell in range(L)])
    label = "haar" if r == 1 else f"db{r}"
    return FilterBank.fir([h0, h1], label=label, order=r)


_NAME_RE = re.compile(r"^(haar|db(\d+)|shannon:(\d+))$")


def builtin_names():
    return ["haar"] + [f"db{r}" for r in range(1, 21)] + ["shannon:<M>"]


def builtin_bank(name):
    """``"haar"``, ``"db1"``..``"db20"`` or ``"shannon:<M>"``."""
    match = _NAME_RE.match(name.strip().lower())
    if not match:
        raise MWPTError(f"unknown filter bank {name!r}; choose from {builtin_names()}")
    if match.group(1) == "haar":
        return _daubechies(1)
    if match.group(2) is not None:
        r = int(match.group(2))
        if r not in DAUBECHIES_LOWPASS:
            raise MWPTError(f"Daubechies order must be 1..20, got {r}")
        return _daubechies(r)
    M = int(match.group(3))
    if M < 2:
        raise MWPTError("shannon bank needs M >= 2")
    return FilterBank.shannon(M)


def resolve_bank(spec):
    """Builtin name or path to a filter file."""
    try:
        return builtin_bank(spec)
    except MWPTError:
        if os.path.exists(spec):
            return load_bank(spec)
        raise


def load_bank(path):
    """Read a filter file::

        M 2
        h0: 0.7071 0.7071
        h1: 0.7071 -0.7071

    Blank lines and ``#`` comments are ignored.  Taps are normalised to unit
    l2 norm and the bank must pass :func:`check_paraunitary`.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    M = None
    taps = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if M is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "M":
                raise FilterFileError(f"{path}:{lineno}: expected 'M <integer>' header")
            try:
                M = int(parts[1])
            except ValueError:
                raise FilterFileError(f"{path}:{lineno}: bad band count {parts[1]!r}") from None
            if M < 2:
                raise FilterFileError(f"{path}:{lineno}: band count must be >= 2")
            continue
        head, sep, body = line.partition(":")
        match = re.fullmatch(r"h(\d+)", head.strip())
        if not sep or not match:
            raise FilterFileError(f"{path}:{lineno}: expected 'h<m>: t0 t1 ...'")
        m = int(match.group(1))
        if m >= M or m in taps:
            raise FilterFileError(f"{path}:{lineno}: unexpected or repeated filter h{m}")
        try:
            taps[m] = [float(tok) for tok in body.split()]
        except ValueError:
            raise FilterFileError(f"{path}:{lineno}: non-numeric tap") from None
        if not taps[m]:
            raise FilterFileError(f"{path}:{lineno}: filter h{m} has no taps")
    if M is None:
        raise FilterFileError(f"{path}: empty filter file")
    if len(taps) != M:
        raise FilterFileError(f"{path}: header says M={M} but {len(taps)} filters given")
    label = f"custom:{path}"
    return FilterBank.fir([taps[m] for m in range(M)], label=label)


def save_bank(bank, path):
    if bank.is_shannon:
        raise MWPTError("the Shannon bank has no taps to save")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {bank.label}\nM {bank.M}\n")
        for m, t in enumerate(bank.taps):
            fh.write(f"h{m}: " + " ".join(repr(float(v)) for v in t) + "\n")


def shannon_distance(bank, gridsize=4096):
    """Distance of ``|H_m|`` to the ideal response, per filter.

    Returns a dict with arrays ``linf`` and ``l2`` (root mean square) over a
    midpoint grid of ``[-pi, pi]`` from which band edges are excluded.
    """
    if gridsize < 256:
        raise MWPTError("gridsize must be >= 256")
    M = bank.M
    w = -np.pi + (np.arange(gridsize) + 0.5) * 2 * np.pi / gridsize
    x = np.abs(w) * M / np.pi
    w = w[np.abs(x - np.rint(x)) > 1e-9]
    linf = np.empty(M)
    l2 = np.empty(M)
    for m in range(M):
        diff = np.abs(np.abs(response(bank, m, w)) - shannon_response(m, M, w))
        linf[m] = diff.max()
        l2[m] = np.sqrt(np.mean(diff**2))
    return {"linf": linf, "l2": l2}
