"""Sparse polynomial displacement fields and their two coefficient forms.

A lens distortion map is F(p) = p + G(p), where the displacement G vanishes
at the origin together with its Jacobian, so G carries no constant or linear
terms.  Two interchangeable coefficient representations are used throughout
the package:

``ComplexPoly``
    G written as one complex polynomial f(z, zbar) = sum gamma_kl z^k zbar^l
    over exponent pairs with k + l >= 2.  The displacement at (x, y) is
    f(x + iy), read as dx + i dy.  This form makes rotation behaviour
    trivial: a coordinate rotation by theta multiplies gamma_kl by
    exp(i * theta * (k - l - 1)).  The exponent k - l - 1 is the monomial's
    winding number; monomials with winding 0 (z^(k+1) zbar^k) are fixed by
    every rotation.

``RealPolyModel``
    One real 2 x (n+1) coefficient block per homogeneous degree n, acting on
    the monomial vector (x^n, x^(n-1) y, ..., y^n); row 0 produces dx, row 1
    produces dy.

Conversions between the forms expand binomials with dyadic-rational weights,
so round trips are exact up to the final rounding of coefficient sums.
Coordinates are normalized image coordinates with the distortion center at
the origin; the intended working domain is the unit disc.  Total degree is
capped at ``MAX_DEGREE``.

Zero coefficients are never stored (pruning happens at exactly zero, never at
a tolerance), so the set of monomials present in a ``ComplexPoly`` is
meaningful structure.  Use ``isclose`` for tolerance-based comparison.  All
types are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import json
import math
import operator
from cmath import exp as cexp
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "DEFAULT_TOL",
    "MODEL_FORMAT",
    "MonomialKey",
    "winding_number",
    "winding_table",
    "ComplexPoly",
    "RealPolyModel",
    "monomial_vector",
    "monomial_rotation",
    "model_to_json",
    "model_from_json",
    "load_model",
    "save_model",
]

MAX_DEGREE = 16
DEFAULT_TOL = 1e-10

MODEL_FORMAT = "lensdist-model"
MODEL_VERSION = 1

MonomialKey = tuple[int, int]

# i**j and (-i)**j without complex pow rounding.
_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)
_NEG_I_POW = (1 + 0j, -1j, -1 + 0j, 1j)


def _check_key(key) -> MonomialKey:
    try:
        k, l = key
        k = operator.index(k)
        l = operator.index(l)
    except (TypeError, ValueError) as err:
        raise TypeError(f"monomial key must be a pair of integers, got {key!r}") from err
    if k < 0 or l < 0:
        raise ValueError(f"monomial exponents must be nonnegative, got ({k}, {l})")
    if k + l < 2:
        raise ValueError(
            f"displacement monomials need total degree >= 2, got z^{k} zbar^{l}"
        )
    if k + l > MAX_DEGREE:
        raise ValueError(f"total degree {k + l} exceeds the supported maximum {MAX_DEGREE}")
    return (k, l)


def _key_order(key: MonomialKey):
    k, l = key
    return (k + l, -k)


def winding_number(k: int, l: int) -> int:
    """Rotation phase exponent k - l - 1 of the monomial z^k zbar^l."""
    _check_key((k, l))
    return k - l - 1


def winding_table(degrees: Iterable[int]) -> dict[MonomialKey, int]:
    """Winding number of every monomial of the given total degrees."""
    table: dict[MonomialKey, int] = {}
    for n in degrees:
        n = operator.index(n)
        if n < 2 or n > MAX_DEGREE:
            raise ValueError(f"degree must be in [2, {MAX_DEGREE}], got {n}")
        for k in range(n, -1, -1):
            table[(k, n - k)] = k - (n - k) - 1
    return table


@lru_cache(maxsize=None)
def _monomial_xy(k: int, l: int) -> tuple[complex, ...]:
    # Column of z^k zbar^l over (x^n, x^(n-1) y, ..., y^n), n = k + l.
    # Coefficient of x^(n-j) y^j is i^j * sum_{a+b=j} C(k,a) C(l,b) (-1)^b,
    # an exact Gaussian-integer value.
    n = k + l
    col = []
    for j in range(n + 1):
        s = 0
        for a in range(max(0, j - l), min(k, j) + 1):
            s += math.comb(k, a) * math.comb(l, j - a) * (-1) ** (j - a)
        col.append(_I_POW[j % 4] * s)
    return tuple(col)


@lru_cache(maxsize=None)
def _xy_monomial(n: int, j: int) -> tuple[complex, ...]:
    # Column of x^(n-j) y^j over (z^0 zbar^n, ..., z^n zbar^0), indexed by k.
    # x = (z + zbar)/2 and y = -i (z - zbar)/2, so the coefficient of
    # z^k zbar^(n-k) is 2^-n (-i)^j sum_{a+b=k} C(n-j,a) C(j,b) (-1)^(j-b),
    # an exact dyadic rational.
    scale = 0.5**n
    phase = _NEG_I_POW[j % 4]
    col = []
    for k in range(n + 1):
        s = 0
        for a in range(max(0, k - j), min(n - j, k) + 1):
            b = k - a
            s += math.comb(n - j, a) * math.comb(j, b) * (-1) ** (j - b)
        col.append(phase * (scale * s))
    return tuple(col)


@dataclass(frozen=True)
class ComplexPoly:
    """Sparse complex displacement polynomial sum gamma_kl z^k zbar^l.

    ``terms`` maps exponent pairs (k, l) to complex coefficients.  Keys must
    satisfy k, l >= 0 and 2 <= k + l <= MAX_DEGREE.  Exactly-zero
    coefficients are dropped on construction.
    """

    terms: Mapping[MonomialKey, complex]

    def __post_init__(self):
        clean: dict[MonomialKey, complex] = {}
        for key, coeff in self.terms.items():
            key = _check_key(key)
            c = complex(coeff)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite coefficient for monomial {key}")
            if c != 0:
                clean[key] = clean.get(key, 0j) + c
        clean = {k: v for k, v in clean.items() if v != 0}
        ordered = dict(sorted(clean.items(), key=lambda item: _key_order(item[0])))
        object.__setattr__(self, "terms", MappingProxyType(ordered))

    @classmethod
    def zero(cls) -> "ComplexPoly":
        return cls({})

    @property
    def degree(self) -> int:
        """Maximum total degree of the stored monomials (0 for the zero poly)."""
        return max((k + l for k, l in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def windings(self) -> set[int]:
        """Winding numbers of all stored monomials."""
        return {k - l - 1 for k, l in self.terms}

    def winding_part(self, m: int) -> "ComplexPoly":
        """Sub-polynomial made of the monomials with winding number m."""
        return ComplexPoly({kl: c for kl, c in self.terms.items() if kl[0] - kl[1] - 1 == m})

    def evaluate(self, z):
        """Value sum gamma_kl z^k zbar^l at a complex scalar or array."""
        zarr = np.asarray(z, dtype=complex)
        zc = np.conj(zarr)
        out = np.zeros_like(zarr)
        for (k, l), coeff in self.terms.items():
            out = out + coeff * zarr**k * zc**l
        if np.ndim(z) == 0:
            return complex(out)
        return out

    def rotated(self, theta: float) -> "ComplexPoly":
        """Coefficients after a coordinate rotation by theta (radians).

        Each gamma_kl picks up the phase exp(i theta (k - l - 1)); monomials
        with winding number 0 are unchanged for every theta.
        """
        return ComplexPoly(
            {
                (k, l): coeff * cexp(1j * theta * (k - l - 1))
                for (k, l), coeff in self.terms.items()
            }
        )

    def to_real(self) -> "RealPolyModel":
        """Equivalent per-degree real coefficient blocks."""
        blocks: dict[int, np.ndarray] = {}
        for (k, l), coeff in self.terms.items():
            n = k + l
            block = blocks.setdefault(n, np.zeros((2, n + 1)))
            col = np.asarray(_monomial_xy(k, l)) * coeff
            block[0] += col.real
            block[1] += col.imag
        return RealPolyModel(blocks)

    def __add__(self, other: "ComplexPoly") -> "ComplexPoly":
        if not isinstance(other, ComplexPoly):
            return NotImplemented
        merged = dict(self.terms)
        for key, c in other.terms.items():
            merged[key] = merged.get(key, 0j) + c
        return ComplexPoly(merged)

    def __sub__(self, other: "ComplexPoly") -> "ComplexPoly":
        if not isinstance(other, ComplexPoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "ComplexPoly":
        return ComplexPoly({key: -c for key, c in self.terms.items()})

    def __mul__(self, scalar) -> "ComplexPoly":
        if not isinstance(scalar, (int, float, complex, np.integer, np.floating, np.complexfloating)):
            return NotImplemented
        return ComplexPoly({key: c * complex(scalar) for key, c in self.terms.items()})

    __rmul__ = __mul__

    def isclose(self, other: "ComplexPoly", tol: float = DEFAULT_TOL) -> bool:
        """True when every coefficient matches within absolute tolerance tol."""
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(key, 0j) - other.terms.get(key, 0j)) <= tol for key in keys
        )


@dataclass(frozen=True, eq=False)
class RealPolyModel:
    """Per-degree real coefficient blocks of a polynomial displacement.

    ``blocks`` maps each homogeneous degree n present to a 2 x (n+1) real
    matrix; all-zero blocks are dropped so the representation is canonical.
    """

    blocks: Mapping[int, np.ndarray]

    def __post_init__(self):
        clean: dict[int, np.ndarray] = {}
        for degree, block in self.blocks.items():
            n = operator.index(degree)
            if n < 2 or n > MAX_DEGREE:
                raise ValueError(f"block degree must be in [2, {MAX_DEGREE}], got {n}")
            arr = np.array(block, dtype=float)
            if arr.shape != (2, n + 1):
                raise ValueError(
                    f"degree-{n} block must have shape (2, {n + 1}), got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in degree-{n} block")
            if np.any(arr != 0.0):
                arr.setflags(write=False)
                clean[n] = arr
        object.__setattr__(
            self, "blocks", MappingProxyType(dict(sorted(clean.items())))
        )

    @classmethod
    def zero(cls) -> "RealPolyModel":
        return cls({})

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(self.blocks)

    @property
    def degree(self) -> int:
        return max(self.blocks, default=0)

    def is_zero(self) -> bool:
        return not self.blocks

    def evaluate(self, x, y):
        """Displacement (dx, dy) at (x, y); accepts scalars or arrays."""
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        shape = np.broadcast(xa, ya).shape
        dx = np.zeros(shape)
        dy = np.zeros(shape)
        for n, block in self.blocks.items():
            v = monomial_vector(n, xa, ya)
            dx = dx + np.tensordot(block[0], v, axes=1)
            dy = dy + np.tensordot(block[1], v, axes=1)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(dx), float(dy)
        return dx, dy

    def to_complex(self) -> ComplexPoly:
        """Equivalent sparse complex polynomial."""
        acc: dict[MonomialKey, complex] = {}
        for n, block in self.blocks.items():
            col = block[0] + 1j * block[1]
            for j in range(n + 1):
                cj = col[j]
                if cj == 0:
                    continue
                for k, w in enumerate(_xy_monomial(n, j)):
                    if w != 0:
                        key = (k, n - k)
                        acc[key] = acc.get(key, 0j) + cj * w
        return ComplexPoly(acc)

    def rotated(self, theta: float) -> "RealPolyModel":
        """Blocks after a coordinate rotation by theta: R^T M V_n(R) per degree."""
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        return RealPolyModel(
            {n: rot.T @ block @ monomial_rotation(n, theta) for n, block in self.blocks.items()}
        )

    def isclose(self, other: "RealPolyModel", tol: float = DEFAULT_TOL) -> bool:
        degrees = set(self.blocks) | set(other.blocks)
        for n in degrees:
            a = self.blocks.get(n)
            b = other.blocks.get(n)
            if a is None:
                a = np.zeros((2, n + 1))
            if b is None:
                b = np.zeros((2, n + 1))
            if not np.allclose(a, b, rtol=0.0, atol=tol):
                return False
        return True


def monomial_vector(n: int, x, y) -> np.ndarray:
    """Degree-n monomial vector (x^n, x^(n-1) y, ..., y^n).

    Scalars give shape (n+1,); arrays are broadcast along a leading axis.
    """
    n = operator.index(n)
    if n < 1:
        raise ValueError(f"degree must be >= 1, got {n}")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    return np.stack([xa ** (n - i) * ya**i for i in range(n + 1)])


def _lin_pow(c0: float, c1: float, e: int) -> np.ndarray:
    out = np.array([1.0])
    base = np.array([c0, c1])
    for _ in range(e):
        out = np.convolve(out, base)
    return out


def monomial_rotation(n: int, theta: float) -> np.ndarray:
    """Matrix V with monomial_vector(n, R_theta p) = V @ monomial_vector(n, p).

    Row i holds the expansion of (x cos t - y sin t)^(n-i) (x sin t + y cos t)^i
    by exact binomial convolution.
    """
    n = operator.index(n)
    if n < 1:
        raise ValueError(f"degree must be >= 1, got {n}")
    c, s = math.cos(theta), math.sin(theta)
    rows = [
        np.convolve(_lin_pow(c, -s, n - i), _lin_pow(s, c, i)) for i in range(n + 1)
    ]
    return np.vstack(rows)


# --------------------------------------------------------------------------
# Model file schema: {"format": "lensdist-model", "version": 1, ...} with
# exactly one of "complex" (list of {k, l, re, im}) or "real" (list of
# {degree, rows}).  Loading always normalizes to a ComplexPoly.
# --------------------------------------------------------------------------


def model_to_json(model: ComplexPoly | RealPolyModel, form: str = "complex") -> dict:
    """JSON-serializable dict for a displacement model, in the chosen form."""
    if form == "complex":
        poly = model.to_complex() if isinstance(model, RealPolyModel) else model
        if not isinstance(poly, ComplexPoly):
            raise TypeError(f"cannot serialize {type(model).__name__}")
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "complex": [
                {"k": k, "l": l, "re": c.real, "im": c.imag}
                for (k, l), c in poly.terms.items()
            ],
        }
    if form == "real":
        real = model.to_real() if isinstance(model, ComplexPoly) else model
        if not isinstance(real, RealPolyModel):
            raise TypeError(f"cannot serialize {type(model).__name__}")
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "real": [
                {"degree": n, "rows": [list(map(float, row)) for row in block]}
                for n, block in real.blocks.items()
            ],
        }
    raise ValueError(f"form must be 'complex' or 'real', got {form!r}")


def model_from_json(data) -> ComplexPoly:
    """Parse a model dict (either form) into a ComplexPoly."""
    if not isinstance(data, dict):
        raise ValueError("model JSON must be an object")
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"expected format {MODEL_FORMAT!r}, got {data.get('format')!r}")
    if data.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {data.get('version')!r}")
    has_complex = "complex" in data
    has_real = "real" in data
    if has_complex == has_real:
        raise ValueError("model JSON must contain exactly one of 'complex' or 'real'")
    if has_complex:
        entries = data["complex"]
        if not isinstance(entries, list):
            raise ValueError("'complex' must be a list of terms")
        terms: dict[MonomialKey, complex] = {}
        for entry in entries:
            try:
                key = (entry["k"], entry["l"])
                coeff = complex(float(entry["re"]), float(entry["im"]))
            except (KeyError, TypeError, ValueError) as err:
                raise ValueError(f"malformed complex term {entry!r}") from err
            terms[_check_key(key)] = terms.get(key, 0j) + coeff
        return ComplexPoly(terms)
    entries = data["real"]
    if not isinstance(entries, list):
        raise ValueError("'real' must be a list of degree blocks")
    blocks: dict[int, np.ndarray] = {}
    for entry in entries:
        try:
            degree = entry["degree"]
            rows = entry["rows"]
        except (KeyError, TypeError) as err:
            raise ValueError(f"malformed real block {entry!r}") from err
        if degree in blocks:
            raise ValueError(f"duplicate degree {degree} in real blocks")
        blocks[degree] = np.asarray(rows, dtype=float)
    return RealPolyModel(blocks).to_complex()


def load_model(path) -> ComplexPoly:
    """Load a model JSON file, normalizing to ComplexPoly."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: invalid JSON ({err})") from err
    return model_from_json(data)


def save_model(path, model: ComplexPoly | RealPolyModel, form: str = "complex") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model, form=form), fh, indent=2)
        fh.write("\n")
