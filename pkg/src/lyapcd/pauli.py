"""Symbolic algebra over N-qubit Pauli strings.

Strings are stored in symplectic form: a pair of integer bitmasks ``(x, z)``
with ``P(x, z) = i^{|x & z|} X^x Z^z`` so that Y = iXZ. Qubit 0 is the
leftmost letter and maps to the most significant bit, matching the
computational-basis indexing used by :mod:`lyapcd.statevector`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

DEFAULT_CUTOFF = 1e-14
DENSE_LIMIT = 10
MAX_QUBITS = 31  # x and z masks are packed into one uint64 key

_LETTERS = "IXYZ"
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j])
_PRODUCT_CHUNK = 1 << 21


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class OracleLimitError(ValueError):
    """Dense realization requested above the configured qubit limit."""


def _check_letters(letters: str) -> None:
    bad = set(letters) - set(_LETTERS)
    if bad:
        raise ValueError(f"invalid Pauli letters {sorted(bad)} in {letters!r}")


def encode(letters: str) -> tuple[int, int]:
    """Return the ``(x, z)`` bitmasks of a letter sequence."""
    _check_letters(letters)
    n = len(letters)
    x = z = 0
    for q, ch in enumerate(letters):
        bx, bz = _BITS[ch]
        bit = 1 << (n - 1 - q)
        if bx:
            x |= bit
        if bz:
            z |= bit
    return x, z


def decode(x: int, z: int, n_qubits: int) -> str:
    bits = [1 << (n_qubits - 1 - q) for q in range(n_qubits)]
    return "".join(_letter(bool(x & b), bool(z & b)) for b in bits)


def _letter(bx: bool, bz: bool) -> str:
    if bx and bz:
        return "Y"
    if bx:
        return "X"
    if bz:
        return "Z"
    return "I"


def pauli_string(n_qubits: int, ops: Mapping[int, str]) -> str:
    """Letter sequence with ``ops[q]`` on qubit ``q`` and identity elsewhere.

    >>> pauli_string(4, {0: "Z", 2: "X"})
    'ZIXI'
    """
    letters = ["I"] * n_qubits
    for q, ch in ops.items():
        letters[q] = ch
    return "".join(letters)


def _popcount(a):
    if isinstance(a, int):
        return a.bit_count()
    return np.bitwise_count(a)


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string with a complex coefficient."""

    letters: str
    coefficient: complex = 1.0

    def __post_init__(self):
        if not self.letters:
            raise ValueError("a Pauli term needs at least one qubit")
        _check_letters(self.letters)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    def __mul__(self, other: PauliTerm) -> PauliTerm:
        return multiply_terms(self, other)


def multiply_terms(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Operator product ``a @ b`` of two Pauli terms."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    xa, za = encode(a.letters)
    xb, zb = encode(b.letters)
    x, z = xa ^ xb, za ^ zb
    e = (_popcount(xa & za) + _popcount(xb & zb) - _popcount(x & z) + 2 * _popcount(za & xb)) % 4
    coeff = complex(_PHASES[e]) * complex(a.coefficient) * complex(b.coefficient)
    return PauliTerm(decode(x, z, a.n_qubits), coeff)


def _sort_key(term: PauliTerm):
    return term.weight, term.letters


class PauliOperator:
    """Immutable weighted sum of Pauli strings in canonical form.

    Terms are unique and sorted by packed key; coefficients with magnitude
    below ``cutoff`` are dropped on construction.
    """

    __slots__ = ("n_qubits", "xs", "zs", "coeffs", "_cache")

    def __init__(self, n_qubits: int, xs, zs, coeffs, *, cutoff: float = DEFAULT_CUTOFF):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
        xs = np.asarray(xs, dtype=np.uint64).ravel()
        zs = np.asarray(zs, dtype=np.uint64).ravel()
        coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
        if not (len(xs) == len(zs) == len(coeffs)):
            raise ValueError("xs, zs, coeffs must have equal length")
        keys = (xs << np.uint64(n_qubits)) | zs
        if len(keys):
            uniq, inv = np.unique(keys, return_inverse=True)
            summed = np.bincount(inv, weights=coeffs.real, minlength=len(uniq)) + 1j * np.bincount(
                inv, weights=coeffs.imag, minlength=len(uniq)
            )
            keep = np.abs(summed) >= cutoff
            uniq, summed = uniq[keep], summed[keep]
        else:
            uniq, summed = keys, coeffs
        mask = np.uint64((1 << n_qubits) - 1)
        self.n_qubits = n_qubits
        self.xs = uniq >> np.uint64(n_qubits)
        self.zs = uniq & mask
        self.coeffs = summed
        for arr in (self.xs, self.zs, self.coeffs):
            arr.setflags(write=False)
        self._cache = {}

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> PauliOperator:
        return cls(n_qubits, [], [], [])

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliOperator:
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Mapping[str, complex] | Iterable) -> PauliOperator:
        """Build from ``{letters: coeff}``, ``(letters, coeff)`` pairs or :class:`PauliTerm` s."""
        items = terms.items() if isinstance(terms, Mapping) else terms
        xs, zs, cs = [], [], []
        for item in items:
            letters, coeff = (item.letters, item.coefficient) if isinstance(item, PauliTerm) else item
            if len(letters) != n_qubits:
                raise DimensionError(f"term {letters!r} does not act on {n_qubits} qubits")
            x, z = encode(letters)
            xs.append(x)
            zs.append(z)
            cs.append(coeff)
        return cls(n_qubits, xs, zs, cs)

    @classmethod
    def from_term(cls, term: PauliTerm) -> PauliOperator:
        return cls.from_terms(term.n_qubits, [term])

    # views --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.terms())

    def terms(self) -> list[PauliTerm]:
        """Terms ordered by (weight, letters); this is the digital splitting order."""
        out = [
            PauliTerm(decode(int(x), int(z), self.n_qubits), complex(c))
            for x, z, c in zip(self.xs, self.zs, self.coeffs)
        ]
        out.sort(key=_sort_key)
        return out

    def to_dict(self) -> dict[str, complex]:
        return {t.letters: t.coefficient for t in self.terms()}

    def coefficient(self, letters: str) -> complex:
        if len(letters) != self.n_qubits:
            raise DimensionError(f"{letters!r} does not act on {self.n_qubits} qubits")
        x, z = encode(letters)
        hit = (self.xs == x) & (self.zs == z)
        return complex(self.coeffs[hit][0]) if hit.any() else 0j

    @property
    def weights(self) -> np.ndarray:
        return np.bitwise_count(self.xs | self.zs)

    def locality(self) -> int:
        """Largest number of non-identity letters in any term (0 for the zero operator)."""
        return int(self.weights.max()) if len(self) else 0

    def is_zero(self) -> bool:
        return len(self) == 0

    def is_diagonal(self) -> bool:
        return not np.any(self.xs)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= atol))

    def real(self) -> PauliOperator:
        """Drop imaginary parts; use only after a Hermiticity check."""
        return PauliOperator(self.n_qubits, self.xs, self.zs, self.coeffs.real)

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def norm(self) -> float:
        """Normalized Hilbert-Schmidt norm, sqrt(Tr[A^dag A] / 2^N)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    # arithmetic ---------------------------------------------------------

    def _check(self, other: PauliOperator) -> None:
        if not isinstance(other, PauliOperator):
            raise TypeError(f"expected PauliOperator, got {type(other).__name__}")
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: PauliOperator) -> PauliOperator:
        self._check(other)
        return PauliOperator(
            self.n_qubits,
            np.concatenate([self.xs, other.xs]),
            np.concatenate([self.zs, other.zs]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __sub__(self, other: PauliOperator) -> PauliOperator:
        return self + (-1.0) * other

    def __neg__(self) -> PauliOperator:
        return (-1.0) * self

    def __mul__(self, scalar) -> PauliOperator:
        if isinstance(scalar, PauliOperator):
            return NotImplemented
        return PauliOperator(self.n_qubits, self.xs, self.zs, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> PauliOperator:
        return self * (1.0 / complex(scalar))

    def __matmul__(self, other: PauliOperator) -> PauliOperator:
        self._check(other)
        return _pairwise(self, other, anticommuting_only=False)

    def allclose(self, other: PauliOperator, atol: float = 1e-12) -> bool:
        self._check(other)
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def __repr__(self) -> str:
        body = " + ".join(f"({t.coefficient:.6g})*{t.letters}" for t in self.terms()[:8])
        more = "" if len(self) <= 8 else f" + ... ({len(self)} terms)"
        return f"PauliOperator(n={self.n_qubits}: {body or '0'}{more})"

    # serialization ------------------------------------------------------

    def dumps(self) -> str:
        """Debug text dump, one ``coeff_re coeff_im LETTERS`` line per term."""
        return "\n".join(f"{t.coefficient.real!r} {t.coefficient.imag!r} {t.letters}" for t in self.terms())

    @classmethod
    def loads(cls, text: str) -> PauliOperator:
        terms = []
        for line in text.splitlines():
            if not line.strip():
                continue
            re_, im_, letters = line.split()
            terms.append((letters, complex(float(re_), float(im_))))
        if not terms:
            raise ValueError("empty operator dump; qubit count is unknown")
        return cls.from_terms(len(terms[0][0]), terms)

    # dense oracle -------------------------------------------------------

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.n_qubits > limit:
            raise OracleLimitError(f"dense realization refused for {self.n_qubits} > {limit} qubits")
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.uint64)
        out = np.zeros((dim, dim), dtype=np.complex128)
        for x, z, c in zip(self.xs, self.zs, self.coeffs):
            sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int64)
            y = int(np.bitwise_count(x & z))
            out[(idx ^ x).astype(np.intp), idx.astype(np.intp)] += c * _PHASES[y % 4] * sign
        return out


def _pairwise(a: PauliOperator, b: PauliOperator, anticommuting_only: bool) -> PauliOperator:
    n = a.n_qubits
    if len(a) == 0 or len(b) == 0:
        return PauliOperator.zero(n)
    rows = max(1, _PRODUCT_CHUNK // len(b))
    parts_x, parts_z, parts_c = [], [], []
    yb = np.bitwise_count(b.xs & b.zs).astype(np.int64)
    for start in range(0, len(a), rows):
        xa = a.xs[start:start + rows, None]
        za = a.zs[start:start + rows, None]
        ca = a.coeffs[start:start + rows, None]
        ya = np.bitwise_count(xa & za).astype(np.int64)
        cross = np.bitwise_count(za & b.xs).astype(np.int64)
        x = xa ^ b.xs
        z = za ^ b.zs
        e = (ya + yb - np.bitwise_count(x & z).astype(np.int64) + 2 * cross) % 4
        c = ca * b.coeffs * _PHASES[e]
        if anticommuting_only:
            anti = ((cross + np.bitwise_count(xa & b.zs).astype(np.int64)) & 1).astype(bool)
            x, z, c = x[anti], z[anti], 2.0 * c[anti]
        parts_x.append(x.ravel())
        parts_z.append(z.ravel())
        parts_c.append(c.ravel())
    return PauliOperator(n, np.concatenate(parts_x), np.concatenate(parts_z), np.concatenate(parts_c))


def commutator(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """[a, b]; only anticommuting string pairs contribute."""
    a._check(b)
    return _pairwise(a, b, anticommuting_only=True)


def commutator_i(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """i[a, b], Hermitian whenever a and b are."""
    return 1j * commutator(a, b)


def hs_inner(a: PauliOperator, b: PauliOperator) -> complex:
    """Normalized Hilbert-Schmidt inner product Tr[a^dag b] / 2^N."""
    a._check(b)
    ka = (a.xs << np.uint64(a.n_qubits)) | a.zs
    kb = (b.xs << np.uint64(b.n_qubits)) | b.zs
    _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(a.coeffs[ia]) * b.coeffs[ib]))


def to_dense(a: PauliOperator, limit: int = DENSE_LIMIT) -> np.ndarray:
    return a.to_dense(limit)


def sum_of(n_qubits: int, ops: Iterable[PauliOperator]) -> PauliOperator:
    out = PauliOperator.zero(n_qubits)
    for op in ops:
        out = out + op
    return out
