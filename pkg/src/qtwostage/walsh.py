"""Z-polynomial algebra for diagonal operators.

A diagonal operator on n qubits is stored as a sparse polynomial in
Pauli-Z factors: a map from support bitmask to real coefficient, where
mask 0 is the identity term.  Its value at basis index ``i`` is

    sum over masks m of  c_m * (-1)**popcount(m & i).

The expansion of an arbitrary diagonal is its Walsh-Hadamard transform
(unnormalized butterfly followed by a single 1/N scale).  Diagonals that
form an arithmetic progression admit a sparse closed form with n+1 terms,
which is what makes amplitude-encoded scenario registers cheap to couple
into cost Hamiltonians.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError

ZERO_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ZPolynomial:
    """Immutable sparse Z-string expansion of a real diagonal operator."""

    n_qubits: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_qubits > 63:
            raise StructureError(f"n_qubits out of range: {self.n_qubits}")
        for mask in self.terms:
            if not 0 <= mask < 2**self.n_qubits:
                raise StructureError(
                    f"mask {mask} out of range for {self.n_qubits} qubits"
                )

    def coefficient(self, mask: int) -> float:
        return self.terms.get(mask, 0.0)

    def max_degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)


def _pruned(n_qubits: int, terms: dict) -> ZPolynomial:
    kept = {m: c for m, c in terms.items() if abs(c) >= ZERO_THRESHOLD}
    return ZPolynomial(n_qubits, kept)


def constant(n_qubits: int, value: float) -> ZPolynomial:
    return _pruned(n_qubits, {0: float(value)})


def fwht_expand(values: np.ndarray, n_qubits: int | None = None) -> ZPolynomial:
    """Expand a length-2^n diagonal into Z-strings, c = (1/2^n) * H_n * values."""
    values = np.asarray(values, dtype=float)
    size = values.shape[0] if values.ndim == 1 else 0
    if size < 2 or size & (size - 1):
        raise StructureError(f"diagonal length must be a power of two, got {values.shape}")
    n = size.bit_length() - 1
    if n_qubits is None:
        n_qubits = n
    elif n_qubits != n:
        raise StructureError(f"length {size} does not match n_qubits={n_qubits}")

    a = values.copy()
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bot = a[:, 0, :] - a[:, 1, :]
        a[:, 0, :] = top
        a[:, 1, :] = bot
        a = a.reshape(size)
        h *= 2
    coeffs = a / size
    return _pruned(n, {int(m): float(c) for m, c in enumerate(coeffs)})


def arithmetic_expansion(xi_min: float, xi_max: float, n_xi: int) -> ZPolynomial:
    """Closed-form expansion of the uniform grid xi_s = xi_min + s*dxi.

    Exactly n_xi + 1 terms: the identity carries the grid midpoint and each
    single-qubit Z_i carries -dxi * 2**(i-1).
    """
    if n_xi < 1:
        raise StructureError(f"n_xi must be >= 1, got {n_xi}")
    if not xi_max > xi_min:
        raise StructureError(f"degenerate interval [{xi_min}, {xi_max}]")
    dxi = (xi_max - xi_min) / (2**n_xi - 1)
    terms = {0: xi_min + dxi * (2**n_xi - 1) / 2.0}
    for i in range(n_xi):
        terms[1 << i] = -dxi * 2.0 ** (i - 1)
    return _pruned(n_xi, terms)


def _check_same_register(a: ZPolynomial, b: ZPolynomial) -> None:
    if a.n_qubits != b.n_qubits:
        raise StructureError(
            f"register mismatch: {a.n_qubits} vs {b.n_qubits} qubits"
        )


def zpoly_add(a: ZPolynomial, b: ZPolynomial) -> ZPolynomial:
    _check_same_register(a, b)
    out = dict(a.terms)
    for m, c in b.terms.items():
        out[m] = out.get(m, 0.0) + c
    return _pruned(a.n_qubits, out)


def zpoly_scale(a: ZPolynomial, k: float) -> ZPolynomial:
    return _pruned(a.n_qubits, {m: c * k for m, c in a.terms.items()})


def zpoly_sub(a: ZPolynomial, b: ZPolynomial) -> ZPolynomial:
    return zpoly_add(a, zpoly_scale(b, -1.0))


def zpoly_mul(a: ZPolynomial, b: ZPolynomial) -> ZPolynomial:
    """Product under Z_i**2 = I: masks combine by XOR, coefficients accumulate."""
    _check_same_register(a, b)
    out: dict = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            m = m1 ^ m2
            out[m] = out.get(m, 0.0) + c1 * c2
    return _pruned(a.n_qubits, out)


def embed(poly: ZPolynomial, offset: int, total_qubits: int) -> ZPolynomial:
    """Place a register-local operator into a larger register at ``offset``."""
    if offset < 0 or offset + poly.n_qubits > total_qubits:
        raise StructureError(
            f"cannot embed {poly.n_qubits} qubits at offset {offset} "
            f"into {total_qubits}"
        )
    return ZPolynomial(total_qubits, {m << offset: c for m, c in poly.terms.items()})


def eval_at(poly: ZPolynomial, basis_index: int) -> float:
    if not 0 <= basis_index < 2**poly.n_qubits:
        raise StructureError(f"basis index {basis_index} out of range")
    total = 0.0
    for m, c in poly.terms.items():
        total += c if (m & basis_index).bit_count() % 2 == 0 else -c
    return total


def reconstruct(poly: ZPolynomial) -> np.ndarray:
    """Dense diagonal of the operator (inverse of fwht_expand)."""
    size = 2**poly.n_qubits
    idx = np.arange(size, dtype=np.int64)
    out = np.zeros(size, dtype=float)
    for m, c in poly.terms.items():
        if m == 0:
            out += c
            continue
        v = idx & np.int64(m)
        for shift in (32, 16, 8, 4, 2, 1):
            v = v ^ (v >> shift)
        out += c * (1.0 - 2.0 * (v & 1))
    return out
