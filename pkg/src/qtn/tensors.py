"""CPD and TT/TR weight containers, O(P) contractions against factorized features.

Every response conjugates the feature side, ``f(x) = <z(x), w> = z(x)^H w``.
Dense reconstructions follow the feature module's convention: mode 1 is the
fastest-varying index of ``vec(w)``.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import KRON_CAP, FactorBlock, FeatureSpec


def _as_vec(b) -> np.ndarray:
    return b.entries if isinstance(b, FactorBlock) else np.asarray(b)


@dataclass(frozen=True)
class CpdWeights:
    """Rank-``R`` CPD: ``w = sum_r a_1[:, r] (x) ... (x) a_P[:, r]``.

    ``factors[p]`` has shape ``(n_p, R)``.
    """

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        if not fs:
            raise ValueError("CPD needs at least one factor")
        R = fs[0].shape[1] if fs[0].ndim == 2 else -1
        for p, f in enumerate(fs):
            if f.ndim != 2 or f.shape[1] != R or R < 1:
                raise ValueError(f"factor {p} has shape {f.shape}; all factors must be (n_p, R) with R={R} >= 1")
            if not np.all(np.isfinite(f)):
                raise ValueError(f"factor {p} has non-finite entries")
        object.__setattr__(self, "factors", fs)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def num_modes(self) -> int:
        return len(self.factors)

    def with_factor(self, p: int, factor) -> "CpdWeights":
        fs = list(self.factors)
        fs[p] = factor
        return CpdWeights(tuple(fs))


@dataclass(frozen=True)
class TtWeights:
    """Tensor train (``r_0 = r_P = 1``) or tensor ring; core ``p`` is ``(r_{p-1}, n_p, r_p)``."""

    cores: tuple[np.ndarray, ...]

    def __post_init__(self):
        cs = tuple(np.asarray(c, dtype=complex) for c in self.cores)
        if not cs:
            raise ValueError("TT needs at least one core")
        for p, c in enumerate(cs):
            if c.ndim != 3:
                raise ValueError(f"core {p} must be 3-way, got shape {c.shape}")
            nxt = cs[(p + 1) % len(cs)]
            if c.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"rank mismatch: core {p} right rank {c.shape[2]} != core {(p + 1) % len(cs)} left rank {nxt.shape[0]}"
                )
        object.__setattr__(self, "cores", cs)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.cores) + (self.cores[-1].shape[2],)

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def is_ring(self) -> bool:
        return self.ranks[0] != 1


@dataclass(frozen=True)
class NetworkShape:
    """Graph of a tensor network: the edge dimensions attached to each vertex."""

    vertices: tuple[tuple[int, ...], ...]

    @classmethod
    def cpd(cls, mode_dims: Sequence[int], R: int) -> "NetworkShape":
        return cls(tuple((int(n), int(R)) for n in mode_dims))

    @classmethod
    def tt(cls, mode_dims: Sequence[int], ranks: Sequence[int]) -> "NetworkShape":
        return cls(tuple((int(ranks[p]), int(n), int(ranks[p + 1])) for p, n in enumerate(mode_dims)))

    @classmethod
    def for_features(cls, spec: FeatureSpec, R: int) -> "NetworkShape":
        return cls.cpd(spec.mode_dims, R)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)


def param_count(shape: NetworkShape) -> int:
    """Sum over vertices of the product of their edge dimensions."""
    return sum(math.prod(v) for v in shape.vertices)


def vc_bound(P: int, num_vertices: int) -> float:
    """Upper bound ``2 P log(12 |V|)`` on VC- and pseudo-dimension."""
    if P < 1 or num_vertices < 1:
        raise ValueError("need P >= 1 and |V| >= 1")
    return 2.0 * P * math.log(12 * num_vertices)


def compression_ratio(M: int, P: int) -> float:
    """``M / P`` truncated to one decimal, as tabulated for the spectrum runs."""
    return math.floor(10 * M / P) / 10


def gram(factor) -> np.ndarray:
    """``W^H W``."""
    W = np.asarray(factor)
    return W.conj().T @ W


def cpd_norm_sq(weights: CpdWeights) -> float:
    """``||vec(w)||^2`` as the sum of the Hadamard product of all factor Grams."""
    H = np.ones((weights.rank, weights.rank), dtype=complex)
    for f in weights.factors:
        H *= gram(f)
    return float(H.sum().real)


class OpCounter:
    """Counts scalar multiply-adds in the instrumented contraction path."""

    def __init__(self):
        self.count = 0

    def __iadd__(self, n: int):
        self.count += n
        return self


def _check_blocks(mode_dims, blocks):
    vecs = [_as_vec(b) for b in blocks]
    if len(vecs) != len(mode_dims):
        raise ValueError(f"got {len(vecs)} feature blocks for {len(mode_dims)} modes")
    for p, (v, n) in enumerate(zip(vecs, mode_dims)):
        if v.shape != (n,):
            raise ValueError(f"block {p} has shape {v.shape}, mode expects ({n},)")
    return vecs


def mode_projections(weights: CpdWeights, blocks) -> np.ndarray:
    """Per-mode rank projections ``<block_p, a_p[:, r]>``, shape ``(P_modes, R)``."""
    vecs = _check_blocks(weights.mode_dims, blocks)
    return np.stack([v.conj() @ f for v, f in zip(vecs, weights.factors)])


def cpd_response(weights: CpdWeights, blocks, counter: OpCounter | None = None) -> complex:
    """``sum_r prod_p <block_p, a_p[:, r]>`` in ``O(R sum_p n_p)``.

    With a ``counter`` the scalar loop runs in pure Python and every
    multiply-add is tallied: ``R sum_p n_p + (P_modes - 1) R + (R - 1)``.
    """
    if counter is None:
        return complex(mode_projections(weights, blocks).prod(axis=0).sum())
    vecs = _check_blocks(weights.mode_dims, blocks)
    vecs = [v.conj().tolist() for v in vecs]
    facs = [f.T.tolist() for f in weights.factors]
    total = 0j
    for r in range(weights.rank):
        prod = None
        for v, f in zip(vecs, facs):
            col = f[r]
            acc = 0j
            for a, b in zip(v, col):
                acc += a * b
            counter += len(v)
            if prod is None:
                prod = acc
            else:
                prod *= acc
                counter += 1
        if r == 0:
            total = prod
        else:
            total += prod
            counter += 1
    return complex(total)


def batch_projections(weights: CpdWeights, feats: Sequence[np.ndarray]) -> np.ndarray:
    """Projections for a batch: ``(P_modes, N, R)`` from per-mode ``(N, n_p)`` features."""
    if len(feats) != weights.num_modes:
        raise ValueError(f"got {len(feats)} feature modes for {weights.num_modes} factors")
    return np.stack([F.conj() @ W for F, W in zip(feats, weights.factors)])


def batch_responses(weights: CpdWeights, feats: Sequence[np.ndarray]) -> np.ndarray:
    out = None
    for F, W in zip(feats, weights.factors):
        proj = F.conj() @ W
        out = proj if out is None else out * proj
    return out.sum(axis=1)


def tt_response(weights: TtWeights, blocks) -> complex:
    """Left-to-right chain of ``sum_m conj(block_m) core[:, m, :]``, closed by a trace."""
    vecs = _check_blocks(weights.mode_dims, blocks)
    acc = None
    for v, core in zip(vecs, weights.cores):
        Mp = np.tensordot(v.conj(), core, axes=([0], [1]))
        acc = Mp if acc is None else acc @ Mp
    return complex(np.trace(acc))


def cpd_reconstruct(weights: CpdWeights, cap: int = KRON_CAP) -> np.ndarray:
    size = math.prod(weights.mode_dims)
    if size > cap:
        raise ValueError(f"dense tensor of {size} entries exceeds cap {cap}")
    acc = weights.factors[0]
    for f in weights.factors[1:]:
        acc = np.einsum("ir,jr->jir", acc, f).reshape(-1, weights.rank)
    return acc.sum(axis=1)


def tt_reconstruct(weights: TtWeights, cap: int = KRON_CAP) -> np.ndarray:
    size = math.prod(weights.mode_dims)
    if size > cap:
        raise ValueError(f"dense tensor of {size} entries exceeds cap {cap}")
    acc = weights.cores[0]
    for c in weights.cores[1:]:
        a, _, _ = acc.shape
        acc = np.einsum("aib,bjc->ajic", acc, c).reshape(a, -1, c.shape[2])
    return np.einsum("aia->i", acc)


# -- serialization -------------------------------------------------------------
#
# Binary layout (all little-endian):
#   4s   magic b"QTNW"
#   u16  version (1)
#   u8   kind: 0 CPD, 1 TT, 2 TR
#   u8   reserved (0)
#   u32  number of modes P, then P x u32 mode dims
#   u32  number of ranks, then that many u32 ranks (CPD: [R]; TT/TR: r_0..r_P)
#   then each factor/core in mode order, row-major, as (re, im) float64 pairs.

MAGIC = b"QTNW"
VERSION = 1
_KINDS = {"CPD": 0, "TT": 1, "TR": 2}
_KIND_NAMES = {v: k for k, v in _KINDS.items()}


def _kind(weights) -> str:
    if isinstance(weights, CpdWeights):
        return "CPD"
    return "TR" if weights.is_ring else "TT"


def weights_to_bytes(weights: CpdWeights | TtWeights) -> bytes:
    kind = _kind(weights)
    ranks = [weights.rank] if kind == "CPD" else list(weights.ranks)
    dims = list(weights.mode_dims)
    parts = [
        struct.pack("<4sHBB", MAGIC, VERSION, _KINDS[kind], 0),
        struct.pack(f"<I{len(dims)}I", len(dims), *dims),
        struct.pack(f"<I{len(ranks)}I", len(ranks), *ranks),
    ]
    arrays = weights.factors if kind == "CPD" else weights.cores
    parts += [np.ascontiguousarray(a, dtype="<c16").tobytes() for a in arrays]
    return b"".join(parts)


def weights_from_bytes(buf: bytes) -> CpdWeights | TtWeights:
    magic, version, kind_code, _ = struct.unpack_from("<4sHBB", buf, 0)
    if magic != MAGIC:
        raise ValueError("not a weights container (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    kind = _KIND_NAMES.get(kind_code)
    if kind is None:
        raise ValueError(f"unknown weights kind code {kind_code}")
    off = 8
    (P,) = struct.unpack_from("<I", buf, off)
    dims = struct.unpack_from(f"<{P}I", buf, off + 4)
    off += 4 + 4 * P
    (nr,) = struct.unpack_from("<I", buf, off)
    ranks = struct.unpack_from(f"<{nr}I", buf, off + 4)
    off += 4 + 4 * nr
    if kind == "CPD":
        shapes = [(n, ranks[0]) for n in dims]
    else:
        shapes = [(ranks[p], n, ranks[p + 1]) for p, n in enumerate(dims)]
    arrays = []
    for shp in shapes:
        count = math.prod(shp)
        arrays.append(np.frombuffer(buf, dtype="<c16", count=count, offset=off).reshape(shp).astype(complex))
        off += 16 * count
    if off != len(buf):
        raise ValueError(f"trailing or missing data: parsed {off} of {len(buf)} bytes")
    return CpdWeights(tuple(arrays)) if kind == "CPD" else TtWeights(tuple(arrays))


def save_weights(weights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(weights_to_bytes(weights))


def load_weights(path) -> CpdWeights | TtWeights:
    with open(path, "rb") as fh:
        return weights_from_bytes(fh.read())


def weights_to_json(weights) -> str:
    """Human-readable export of the same content as the binary container."""
    kind = _kind(weights)
    arrays = weights.factors if kind == "CPD" else weights.cores
    doc = {
        "kind": kind,
        "mode_dims": list(weights.mode_dims),
        "ranks": [weights.rank] if kind == "CPD" else list(weights.ranks),
        "data": [{"real": a.real.tolist(), "imag": a.imag.tolist()} for a in arrays],
    }
    return json.dumps(doc)


def weights_from_json(text: str):
    doc = json.loads(text)
    arrays = tuple(np.array(d["real"]) + 1j * np.array(d["imag"]) for d in doc["data"])
    return CpdWeights(arrays) if doc["kind"] == "CPD" else TtWeights(arrays)
