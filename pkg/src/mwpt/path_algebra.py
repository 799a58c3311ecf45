"""Digit arithmetic for M-band packet paths.

A path through the M-band packet tree is a sequence of digits
``(m_1, m_2, ...)`` with ``0 <= m_l < M``.  At level ``j`` the path sits at
the natural-order node ``n(j) = sum_l m_l M^(j-l)``.  The node's frequency
support is the band ``[p pi / M^j, (p+1) pi / M^j]`` where ``p = G(n)`` and
``G`` is the reflected ordering permutation built digit by digit.

Level-indexed integers are kept as base-M digit tuples so that arbitrarily
deep levels stay exact; Python integers are only materialised on request.
"""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import MWPTError, PathExhausted

__all__ = [
    "PathSpec",
    "NodeIndex",
    "Band",
    "OmegaEstimate",
    "PathClass",
    "shift_parameter",
    "gray_permute",
    "gray_table",
    "gray_inverse_table",
    "band",
    "omega_of_path",
    "classify_path",
]


def _check_digits(M, digits, what):
    for d in digits:
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
            raise MWPTError(f"{what} digit {d!r} is not an integer")
        if not 0 <= d < M:
            raise MWPTError(f"{what} digit {d} outside 0..{M - 1}")


@dataclass(frozen=True)
class PathSpec:
    """An M-ary digit sequence: a finite prefix, optionally followed by a
    repeating cycle.

    >>> PathSpec(2, (), (1,)).digits(4)
    (1, 1, 1, 1)
    """

    M: int
    prefix: tuple = ()
    cycle: tuple = ()

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise MWPTError(f"band count M must be an integer >= 2, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "prefix", tuple(int(d) for d in self.prefix))
        object.__setattr__(self, "cycle", tuple(int(d) for d in self.cycle))
        _check_digits(self.M, self.prefix, "prefix")
        _check_digits(self.M, self.cycle, "cycle")

    @classmethod
    def parse(cls, M, digits="", cycle=""):
        """Build from comma-separated strings (or sequences) of digits."""
        return cls(M, _parse_digits(digits), _parse_digits(cycle))

    @property
    def is_periodic(self):
        return len(self.cycle) > 0

    def digit(self, ell):
        """Digit ``m_ell`` (1-based)."""
        if ell < 1:
            raise MWPTError("digits are indexed from 1")
        if ell <= len(self.prefix):
            return self.prefix[ell - 1]
        if not self.cycle:
            raise PathExhausted(
                f"path has {len(self.prefix)} digits, digit {ell} requested"
            )
        return self.cycle[(ell - len(self.prefix) - 1) % len(self.cycle)]

    def digits(self, j):
        """The first ``j`` digits, unrolling the cycle as needed."""
        if j < 0:
            raise MWPTError("level must be >= 0")
        if j > len(self.prefix) and not self.cycle:
            raise PathExhausted(
                f"path has {len(self.prefix)} digits but level {j} was requested"
            )
        return tuple(self.digit(ell) for ell in range(1, j + 1))

    @property
    def label(self):
        head = ",".join(str(d) for d in self.prefix)
        if not self.cycle:
            return head or "()"
        tail = "(" + ",".join(str(d) for d in self.cycle) + ")"
        return f"{head},{tail}" if head else tail

    def to_dict(self):
        return {"M": self.M, "digits": list(self.prefix), "cycle": list(self.cycle)}


def _parse_digits(value):
    if value is None:
        return ()
    if isinstance(value, str):
        value = value.strip()
        if not value:
            return ()
        try:
            return tuple(int(tok) for tok in value.replace(" ", "").split(",") if tok)
        except ValueError:
            raise MWPTError(f"cannot parse digit list {value!r}") from None
    return tuple(int(d) for d in value)


@dataclass(frozen=True)
class NodeIndex:
    """Node ``(j, n)`` with ``n`` held as its base-M digits (most significant
    first, exactly ``j`` of them)."""

    M: int
    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        _check_digits(self.M, self.digits, "node")

    @classmethod
    def from_int(cls, M, j, n):
        if not 0 <= n < M**j:
            raise MWPTError(f"index {n} outside 0..{M**j - 1} at level {j}")
        out = []
        for _ in range(j):
            n, d = divmod(n, M)
            out.append(d)
        return cls(M, tuple(reversed(out)))

    @property
    def j(self):
        return len(self.digits)

    @property
    def n(self):
        value = 0
        for d in self.digits:
            value = value * self.M + d
        return value

    def child(self, m):
        return NodeIndex(self.M, self.digits + (m,))


@dataclass(frozen=True)
class Band:
    """Closed band ``[k pi / M^j, (k+1) pi / M^j]``.

    Endpoints are exact rationals (in units of pi); ``lo``/``hi`` give
    double-precision radians.
    """

    M: int
    j: int
    k: int

    @property
    def denominator(self):
        return self.M**self.j

    @property
    def lo_frac(self):
        return Fraction(self.k, self.denominator)

    @property
    def hi_frac(self):
        return Fraction(self.k + 1, self.denominator)

    @property
    def lo(self):
        return self.k / self.denominator * math.pi

    @property
    def hi(self):
        return (self.k + 1) / self.denominator * math.pi

    @property
    def midpoint(self):
        return (2 * self.k + 1) / (2 * self.denominator) * math.pi

    @property
    def width(self):
        return math.pi / self.denominator

    def contains(self, other):
        """True when ``other`` is a (closed) sub-interval of this band."""
        return self.lo_frac <= other.lo_frac and other.hi_frac <= self.hi_frac


@dataclass(frozen=True)
class OmegaEstimate:
    j: int
    p: NodeIndex
    interval: Band
    midpoint: float


@dataclass(frozen=True)
class PathClass:
    """Outcome of :func:`classify_path`.

    ``kind`` is ``"null"`` or ``"unbounded"``; for unbounded paths ``j0`` is
    the first level with a nonzero digit and ``lower_bound(j)`` the certified
    bound ``n(j) >= M^(j - j0)``.
    """

    kind: str
    M: int
    j0: int = None

    def lower_bound(self, j):
        if self.kind == "null":
            return 0
        if j < self.j0:
            raise MWPTError(f"bound only holds for j >= {self.j0}")
        return self.M ** (j - self.j0)


def shift_parameter(path, j):
    """Natural-order node index ``n(j)`` of the path at level ``j``."""
    return NodeIndex(path.M, path.digits(j))


def gray_permute(node):
    """Frequency position ``G(n)`` of node ``n``, as a NodeIndex at the same
    level.

    Applies ``G(M l + m) = M G(l) + m`` when ``G(l)`` is even and
    ``M G(l) + M - 1 - m`` when it is odd, one digit at a time from the most
    significant digit, with ``G(0) = 0``.  Only the parity of the running
    value is needed: for even M it is the parity of the last digit, for odd
    M the parity of the digit sum.
    """
    M = node.M
    out = []
    odd = False
    for m in node.digits:
        d = (M - 1 - m) if odd else m
        out.append(d)
        odd = (d % 2 == 1) if M % 2 == 0 else (odd ^ (d % 2 == 1))
    return NodeIndex(M, tuple(out))


def gray_table(M, j):
    """``G(n)`` for every ``n`` in ``0..M^j-1`` as an int64 array.

    Built level by level from the same recursion as :func:`gray_permute`.
    """
    if M**j >= 2**62:
        raise MWPTError("gray_table is limited to M^j < 2^62; use gray_permute")
    g = np.zeros(1, dtype=np.int64)
    m = np.arange(M, dtype=np.int64)
    for _ in range(j):
        odd = (g % 2 == 1)[:, None]
        g = (M * g[:, None] + np.where(odd, M - 1 - m[None, :], m[None, :])).ravel()
    return g


def gray_inverse_table(M, j):
    """``G^{-1}(p)`` for every band index ``p`` at level ``j``."""
    g = gray_table(M, j)
    inv = np.empty_like(g)
    inv[g] = np.arange(g.size, dtype=np.int64)
    return inv


def band(j, k, M):
    """The band ``[k pi / M^j, (k+1) pi / M^j]``."""
    if j < 0:
        raise MWPTError("level must be >= 0")
    if not 0 <= k < M**j:
        raise MWPTError(f"band index {k} outside 0..{M**j - 1} at level {j}")
    return Band(M, j, k)


def omega_of_path(path, j):
    """Band of the path's node at level ``j``; these bands are nested and
    shrink to the limit frequency of the path."""
    p = gray_permute(shift_parameter(path, j))
    interval = band(j, p.n, path.M)
    return OmegaEstimate(j, p, interval, interval.midpoint)


def classify_path(path, j_max):
    """Null path (all zeros) or unbounded path with its first nonzero level."""
    upto = j_max if path.cycle else min(j_max, len(path.prefix))
    if path.cycle and any(path.cycle):
        # a nonzero cycle digit always shows up within one period past the prefix
        upto = max(upto, len(path.prefix) + len(path.cycle))
    for ell in range(1, upto + 1):
        if path.digit(ell) != 0:
            return PathClass("unbounded", path.M, ell)
    return PathClass("null", path.M)
