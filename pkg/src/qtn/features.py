"""Pure-power polynomial and Fourier feature maps, dense and quantized.

A per-dimension Vandermonde vector of length ``M = Q**K`` factors exactly into
``K`` length-``Q`` vectors whose Kronecker product reproduces it. All code in
the package uses one index convention: the *first* factor addresses the
least-significant base-``Q`` digit, so for a flat index ``m`` with digits
``q_1 + q_2 Q + ... + q_K Q**(K-1)`` the entry is the product of
``block_k[q_k]``. Across dimensions the same rule applies (dimension 1 varies
fastest), matching ``vec`` with the first tensor index fastest.

Functions accept scalars or arrays of inputs; the entry axis is always last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import yaml

from .errors import ConfigError

POLYNOMIAL = "polynomial"
FOURIER = "fourier"
KINDS = (POLYNOMIAL, FOURIER)

KRON_CAP = 2**24
# polynomial inputs beyond this are rejected to keep monomials bounded
POLY_INPUT_TOL = 1e-9


def int_log(M: int, Q: int) -> int:
    """Return ``K`` with ``Q**K == M`` using integer arithmetic only."""
    if Q < 2:
        raise ConfigError(f"quantization base Q must be >= 2, got {Q}")
    K, v = 0, 1
    while v < M:
        v *= Q
        K += 1
    if v != M or K < 1:
        raise ConfigError(f"M_d={M} is not a power Q**K (K >= 1) of Q={Q}")
    return K


@dataclass(frozen=True)
class FeatureSpec:
    """Declarative description of a tensor-product feature map.

    ``Q=None`` selects dense (non-quantized) features. ``frequency_shift``
    adds an integer offset to the Fourier frequency ladder; the default 0
    uses the phase constant ``exp(2 pi j x (2+M)/(2L))`` as printed.
    """

    kind: str
    M: tuple[int, ...]
    Q: int | None = 2
    L: float = 1.0
    frequency_shift: int = 0
    K: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"feature kind must be one of {KINDS}, got {self.kind!r}")
        M = self.M
        if isinstance(M, (int, np.integer)):
            M = (int(M),)
        M = tuple(int(m) for m in M)
        if not M or any(m < 1 for m in M):
            raise ConfigError(f"M must be a non-empty list of positive integers, got {self.M!r}")
        object.__setattr__(self, "M", M)
        if self.Q is not None:
            object.__setattr__(self, "Q", int(self.Q))
            K = tuple(int_log(m, self.Q) for m in M)
        else:
            K = tuple(1 for _ in M)
        object.__setattr__(self, "K", K)
        if not (float(self.L) > 0):
            raise ConfigError(f"period L must be > 0, got {self.L!r}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "frequency_shift", int(self.frequency_shift))

    @property
    def D(self) -> int:
        return len(self.M)

    @property
    def quantized(self) -> bool:
        return self.Q is not None

    @property
    def mode_dims(self) -> tuple[int, ...]:
        if self.quantized:
            return tuple(self.Q for _ in range(sum(self.K)))
        return self.M

    @property
    def num_modes(self) -> int:
        return len(self.mode_dims)

    def mode_index(self) -> list[tuple[int, int]]:
        """(dimension, quant index k >= 1) for every mode, d-major k-minor."""
        if not self.quantized:
            return [(d, 1) for d in range(self.D)]
        return [(d, k) for d in range(self.D) for k in range(1, self.K[d] + 1)]

    def replace(self, **changes) -> "FeatureSpec":
        kw = self.to_dict()
        kw.update(changes)
        return FeatureSpec.from_dict(kw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "M": list(self.M),
            "Q": "none" if self.Q is None else self.Q,
            "L": self.L,
            "frequency_shift": self.frequency_shift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        try:
            Q = d.get("Q", 2)
            if Q is None or (isinstance(Q, str) and Q.lower() == "none"):
                Q = None
            return cls(
                kind=str(d["kind"]).lower(),
                M=d["M"],
                Q=Q,
                L=d.get("L", 1.0),
                frequency_shift=d.get("frequency_shift", 0),
            )
        except KeyError as e:
            raise ConfigError(f"feature spec is missing key {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"malformed feature spec: {e}") from None

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def loads(cls, text: str) -> "FeatureSpec":
        return cls.from_dict(yaml.safe_load(text))


@dataclass(frozen=True)
class FactorBlock:
    """Feature vector of one sample for one (quantized) mode."""

    entries: np.ndarray
    dim_index: int
    quant_index: int

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def __len__(self):
        return self.entries.shape[-1]


# -- exact phase reduction ---------------------------------------------------

def _split(a):
    c = 134217729.0 * a  # 2**27 + 1
    hi = c - (c - a)
    return hi, a - hi


def _frac_product(u, n):
    """Return ``(I, F)`` with ``u*n = I + F`` exactly up to one rounding of ``F``.

    ``I`` is the nearest integer (as float) to the rounded product and
    ``|F| <= 0.5 + eps``. Uses Dekker's error-free product so the reduced
    phase stays accurate when ``u*n`` is in the thousands.
    """
    u = np.asarray(u, dtype=float)
    n = np.asarray(n, dtype=float)
    p = u * n
    uh, ul = _split(u)
    nh, nl = _split(n)
    err = ((uh * nh - p) + uh * nl + ul * nh) + ul * nl
    I = np.rint(p)
    return I, (p - I) + err


def _cis(cycles):
    return np.exp(2j * np.pi * cycles)


# -- Vandermonde vectors -----------------------------------------------------

def _int_power(x, e: int):
    """``x**e`` for a non-negative integer exponent by repeated squaring."""
    x = np.asarray(x)
    result = np.ones_like(x)
    base = x
    while e:
        if e & 1:
            result = result * base
        e >>= 1
        if e:
            base = base * base
    return result


def vandermonde(x, M: int) -> np.ndarray:
    """Monomials ``[1, x, x**2, ..., x**(M-1)]`` by successive multiplication."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    x = np.asarray(x)
    out = np.empty(x.shape + (M,), dtype=np.result_type(x, float))
    out[..., 0] = 1
    for m in range(1, M):
        out[..., m] = out[..., m - 1] * x
    return out


def quantized_vandermonde_factor(x, Q: int, k: int) -> np.ndarray:
    """Entries ``x**(q * Q**(k-1))`` for ``q = 0..Q-1``."""
    if Q < 2 or k < 1:
        raise ValueError(f"need Q >= 2 and k >= 1, got Q={Q}, k={k}")
    base = _int_power(np.asarray(x), Q ** (k - 1))
    return vandermonde(base, Q)


def fourier_factor_dense(x, M: int, L: float, frequency_shift: int = 0) -> np.ndarray:
    """Dense Fourier feature vector ``c * v(exp(-2 pi j x / L))`` of length ``M``.

    Entry ``m`` has phase ``2 pi x ((2 + M)/2 + shift - m) / L``.
    """
    if not L > 0:
        raise ValueError(f"L must be > 0, got {L}")
    u_half = np.asarray(x, dtype=float)[..., None] / L * 0.5
    n2 = 2 + M + 2 * frequency_shift - 2 * np.arange(M)
    _, F = _frac_product(u_half, n2)
    return _cis(F)


def _fourier_block(u, M: int, Q: int, K: int, k: int, shift: int):
    u = np.asarray(u, dtype=float)
    # K-th root of the phase constant, from the unreduced phase
    I, F = _frac_product(u * 0.5, 2 + M + 2 * shift)
    root = (np.mod(I, K) + F) / K
    _, G = _frac_product(u[..., None], -(np.arange(Q) * Q ** (k - 1)))
    return _cis(root[..., None] + G)


def response_frequencies(M: int, L: float, frequency_shift: int = 0) -> np.ndarray:
    """Frequency (cycles per unit input) of each weight in the model response.

    Responses conjugate the features, so weight ``m`` multiplies
    ``exp(2 pi j x (m - (2+M)/2 - shift) / L)``.
    """
    return (np.arange(M) - (2 + M) / 2 - frequency_shift) / L


# -- per-sample factor lists ---------------------------------------------------

def _check_x(x, spec: FeatureSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.D:
        raise ValueError(f"input has {x.shape[-1]} dimensions, feature spec expects {spec.D}")
    return x


def polynomial_factors(x, spec: FeatureSpec) -> list[FactorBlock]:
    if spec.kind != POLYNOMIAL or not spec.quantized:
        raise ValueError("polynomial_factors needs a quantized polynomial spec")
    x = _check_x(x, spec)
    return [
        FactorBlock(quantized_vandermonde_factor(x[d], spec.Q, k), d, k)
        for d, k in spec.mode_index()
    ]


def fourier_factors_quantized(x, spec: FeatureSpec) -> list[FactorBlock]:
    if spec.kind != FOURIER or not spec.quantized:
        raise ValueError("fourier_factors_quantized needs a quantized Fourier spec")
    x = _check_x(x, spec)
    return [
        FactorBlock(
            _fourier_block(x[d] / spec.L, spec.M[d], spec.Q, spec.K[d], k, spec.frequency_shift),
            d,
            k,
        )
        for d, k in spec.mode_index()
    ]


def factors(x, spec: FeatureSpec) -> list[FactorBlock]:
    """Factor blocks of one sample for any spec (dense specs give one block per dimension)."""
    return [FactorBlock(b[0], d, k) for b, (d, k) in zip(feature_blocks(np.asarray(x)[None, :], spec), spec.mode_index())]


def feature_blocks(X, spec: FeatureSpec, check_domain: bool = True) -> list[np.ndarray]:
    """Batched features: one ``(N, n_p)`` complex array per mode, d-major k-minor."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.D:
        raise ValueError(f"input has {X.shape[1]} columns, feature spec expects {spec.D}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain NaN or Inf")
    if spec.kind == POLYNOMIAL and check_domain and np.any(np.abs(X) > 1 + POLY_INPUT_TOL):
        raise ValueError("polynomial features need inputs scaled to [-1, 1]")
    out = []
    for d, k in spec.mode_index():
        x = X[:, d]
        if spec.kind == POLYNOMIAL:
            b = quantized_vandermonde_factor(x, spec.Q, k) if spec.quantized else vandermonde(x, spec.M[d])
        elif spec.quantized:
            b = _fourier_block(x / spec.L, spec.M[d], spec.Q, spec.K[d], k, spec.frequency_shift)
        else:
            b = fourier_factor_dense(x, spec.M[d], spec.L, spec.frequency_shift)
        out.append(np.asarray(b, dtype=complex))
    return out


def dense_features(x, spec: FeatureSpec, cap: int = KRON_CAP) -> np.ndarray:
    """Full feature vector of one sample via the dense per-dimension maps."""
    x = _check_x(x, spec)
    if spec.kind == POLYNOMIAL:
        per_dim = [vandermonde(complex(x[d]), spec.M[d]) for d in range(spec.D)]
    else:
        per_dim = [fourier_factor_dense(x[d], spec.M[d], spec.L, spec.frequency_shift) for d in range(spec.D)]
    return reconstruct_kron(per_dim, cap=cap)


def reconstruct_kron(blocks: Sequence, cap: int = KRON_CAP) -> np.ndarray:
    """Kronecker product with the first block varying fastest.

    ``reconstruct_kron([[1, 2], [1, 4]]) == [1, 2, 4, 8]``.
    """
    vecs = [np.asarray(b.entries if isinstance(b, FactorBlock) else b) for b in blocks]
    if not vecs:
        raise ValueError("need at least one block")
    size = 1
    for v in vecs:
        size *= v.shape[-1]
    if size > cap:
        raise ValueError(f"Kronecker product of length {size} exceeds cap {cap}")
    out = vecs[-1]
    for v in reversed(vecs[:-1]):
        out = np.kron(out, v)
    return out
