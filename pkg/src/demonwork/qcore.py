"""Dense linear algebra and measurement primitives for one to three qubits.

Conventions used throughout the package:

* Qubit 0 is the leftmost tensor factor, so ``|abc>`` has amplitude index
  ``4a + 2b + c``. Polarisation labels map H -> 0 and V -> 1; a path qubit,
  when present, is the last factor.
* A binary outcome is indexed 0 for the +1 eigenvalue and 1 for -1. For the
  z direction outcome index therefore equals the computational-basis bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 3
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
DIST_TOL = 1e-9

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# I, X, Y, Z stacked; index 0 is the identity.
PAULI_BASIS = np.stack([_PAULI[k] for k in "ixyz"])


class DimensionError(ValueError):
    """Raised for operands whose qubit counts or shapes do not fit."""


class NotPhysicalError(ValueError):
    """Raised when a matrix violates the density-operator invariants."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _qubits_for_dim(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise DimensionError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalised state vector of ``n`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        _qubits_for_dim(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise NotPhysicalError(f"state norm^2 is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps))

    @property
    def n(self) -> int:
        return _qubits_for_dim(self.amplitudes.size)

    def density(self) -> "DensityOp":
        return DensityOp(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, positive, unit-trace matrix on ``n`` qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        _qubits_for_dim(m.shape[0])
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise NotPhysicalError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise NotPhysicalError(f"trace is {tr!r}, expected 1")
        # symmetrise away round-off before freezing
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise NotPhysicalError("matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityOp":
        return cls(np.eye(2**n, dtype=complex) / 2**n)

    @property
    def n(self) -> int:
        return _qubits_for_dim(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def as_density(state) -> DensityOp:
    """Accept a DensityOp, PureState, ket or matrix and return a DensityOp."""
    if isinstance(state, DensityOp):
        return state
    if isinstance(state, PureState):
        return state.density()
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        return PureState(a).density()
    return DensityOp(a)


@dataclass(frozen=True, eq=False)
class BlochDir:
    """Unit vector on the single-qubit Bloch sphere."""

    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=float).reshape(-1)
        if v.size != 3:
            raise DimensionError("Bloch direction needs three components")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError(f"Bloch direction {v} is not unit length")
        object.__setattr__(self, "vec", _frozen(v))

    @classmethod
    def normalized(cls, v) -> "BlochDir":
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def axis(cls, name: str) -> "BlochDir":
        try:
            idx = "xyz".index(name.lower())
        except ValueError:
            raise ValueError(f"unknown axis {name!r}") from None
        return cls(np.eye(3)[idx])

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "BlochDir":
        """Polar angle ``theta`` from +z, azimuth ``phi`` from +x."""
        return cls.normalized(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )

    def __neg__(self) -> "BlochDir":
        return BlochDir(-self.vec)


def _orthogonal_unit(n: np.ndarray) -> np.ndarray:
    # deterministic: project the coordinate axis least aligned with n
    k = int(np.argmin(np.abs(n)))
    e = np.eye(3)[k]
    o = e - n * (e @ n)
    return o / np.linalg.norm(o)


@dataclass(frozen=True, eq=False)
class GreatCircle:
    """Great circle of Bloch directions ``cos t * origin + sin t * (normal x origin)``."""

    normal: BlochDir
    origin: BlochDir

    def __post_init__(self):
        if abs(self.normal.vec @ self.origin.vec) > NORM_TOL:
            raise ValueError("circle origin must be orthogonal to its normal")

    @classmethod
    def from_normal(cls, normal) -> "GreatCircle":
        nvec = normal.vec if isinstance(normal, BlochDir) else np.asarray(normal, dtype=float)
        nvec = nvec / np.linalg.norm(nvec)
        return cls(BlochDir(nvec), BlochDir(_orthogonal_unit(nvec)))

    @classmethod
    def xz(cls) -> "GreatCircle":
        """The x-z meridian, with t = 0 on the +z axis and t = pi/2 on +x."""
        return cls(BlochDir.axis("y"), BlochDir.axis("z"))

    @classmethod
    def xy(cls) -> "GreatCircle":
        """The equator, with t = 0 on +x."""
        return cls(BlochDir.axis("z"), BlochDir.axis("x"))

    @property
    def tangent(self) -> np.ndarray:
        return np.cross(self.normal.vec, self.origin.vec)

    def point(self, t: float) -> BlochDir:
        return BlochDir.normalized(np.cos(t) * self.origin.vec + np.sin(t) * self.tangent)

    def points(self, ts) -> np.ndarray:
        """Directions for an array of angles, shape ``(len(ts), 3)``."""
        ts = np.asarray(ts, dtype=float)[:, None]
        return np.cos(ts) * self.origin.vec + np.sin(ts) * self.tangent


@dataclass(frozen=True, eq=False)
class JointDist:
    """Probability table over ``k`` binary variables, shape ``(2,) * k``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        k = int(round(np.log2(p.size))) if p.size else 0
        if k < 1 or 2**k != p.size:
            raise DimensionError(f"{p.size} entries is not a table over binary variables")
        p = p.reshape((2,) * k)
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > DIST_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def k(self) -> int:
        return self.probs.ndim

    def marginal(self, keep: Iterable[int]) -> np.ndarray:
        keep = sorted(set(keep))
        drop = tuple(i for i in range(self.k) if i not in keep)
        return self.probs.sum(axis=drop) if drop else self.probs.copy()

    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)


def pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis.lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def rotation_y(alpha: float) -> np.ndarray:
    """``cos(alpha) I + i sin(alpha) sigma_y``."""
    return np.cos(alpha) * _PAULI["i"] + 1j * np.sin(alpha) * _PAULI["y"]


def sigma_dot(direction) -> np.ndarray:
    v = direction.vec if isinstance(direction, BlochDir) else np.asarray(direction, dtype=float)
    return v[0] * _PAULI["x"] + v[1] * _PAULI["y"] + v[2] * _PAULI["z"]


def projector(direction, outcome: int) -> np.ndarray:
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    return 0.5 * (_PAULI["i"] + outcome * sigma_dot(direction))


def tensor(*items):
    """Kronecker product, qubit 0 leftmost.

    States give a state of the same kind (PureState or DensityOp; mixing the
    two gives a DensityOp); bare arrays give an array.
    """
    if not items:
        raise ValueError("tensor needs at least one operand")
    if all(isinstance(it, PureState) for it in items):
        amps = items[0].amplitudes
        for it in items[1:]:
            amps = np.kron(amps, it.amplitudes)
        _qubits_for_dim(amps.size)
        return PureState(amps)
    if any(isinstance(it, (PureState, DensityOp)) for it in items):
        mats = [as_density(it).matrix for it in items]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return DensityOp(out)
    out = np.asarray(items[0])
    for it in items[1:]:
        out = np.kron(out, np.asarray(it))
    if out.shape[0] > 2**MAX_QUBITS:
        raise DimensionError("tensor product exceeds the supported size")
    return out


def partial_trace(rho: DensityOp, keep: Iterable[int]) -> DensityOp:
    n = rho.n
    keep = sorted(set(keep))
    if not keep or any(q < 0 or q >= n for q in keep):
        raise ValueError(f"invalid qubit subset {keep} for {n} qubits")
    t = rho.matrix.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    # contract ket and bra legs of each traced qubit, highest index first
    for q in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + m)
    d = 2 ** len(keep)
    return DensityOp(t.reshape(d, d))


def permute_qubits(rho: DensityOp, order: Sequence[int]) -> DensityOp:
    """New qubit ``i`` is old qubit ``order[i]``."""
    n = rho.n
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} qubits")
    t = rho.matrix.reshape((2,) * (2 * n))
    t = t.transpose(list(order) + [q + n for q in order])
    return DensityOp(t.reshape(rho.dim, rho.dim))


def born_joint_dist(rho: DensityOp, dirs: Sequence) -> JointDist:
    """Outcome table for measuring qubit ``i`` along ``dirs[i]``."""
    rho = as_density(rho)
    if len(dirs) != rho.n:
        raise DimensionError(f"need {rho.n} directions, got {len(dirs)}")
    projs = [[projector(d, 1), projector(d, -1)] for d in dirs]
    probs = np.empty((2,) * rho.n)
    for idx in np.ndindex(probs.shape):
        op = projs[0][idx[0]]
        for q in range(1, rho.n):
            op = np.kron(op, projs[q][idx[q]])
        probs[idx] = np.real(np.trace(rho.matrix @ op))
    probs[np.abs(probs) < 1e-15] = 0.0
    return JointDist(np.clip(probs, 0.0, None))


def pauli_expectations(rho: DensityOp) -> np.ndarray:
    """Table ``T[m0, ..., m_{n-1}] = Tr[rho sigma_m0 x ... ]`` with m in (I, X, Y, Z)."""
    rho = as_density(rho)
    n = rho.n
    out = np.empty((4,) * n)
    for idx in np.ndindex(out.shape):
        op = PAULI_BASIS[idx[0]]
        for q in range(1, n):
            op = np.kron(op, PAULI_BASIS[idx[q]])
        out[idx] = np.real(np.trace(rho.matrix @ op))
    return out


def born_probs_batch(expectations: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Vectorised Born tables from a Pauli-expectation table.

    ``dirs`` has shape ``(m, n, 3)``; the result has shape ``(m,) + (2,) * n``.
    Uses ``p(s) = 2^-n sum_mu T_mu prod_q (1, s_q d_q)_mu``.
    """
    dirs = np.asarray(dirs, dtype=float)
    m, n, _ = dirs.shape
    if n == 2:
        # hot path for the circle scans
        a, b = dirs[:, 0], dirs[:, 1]
        ra = a @ expectations[1:, 0]
        rb = b @ expectations[0, 1:]
        c = np.einsum("mi,ij,mj->m", a, expectations[1:, 1:], b)
        t0 = expectations[0, 0]
        probs = np.empty((m, 2, 2))
        probs[:, 0, 0] = t0 + ra + rb + c
        probs[:, 0, 1] = t0 + ra - rb - c
        probs[:, 1, 0] = t0 - ra + rb - c
        probs[:, 1, 1] = t0 - ra - rb + c
        return np.clip(probs / 4, 0.0, None)
    ext = np.concatenate([np.ones((m, n, 1)), dirs], axis=2)  # (m, n, 4)
    signed = np.stack([ext, ext * np.array([1, -1, -1, -1])], axis=2)  # (m, n, 2, 4)
    letters = "abc"[:n]
    # e.g. n=2: "ab,Mpa,Mqb->Mpq"
    spec = (
        letters
        + ","
        + ",".join(f"M{o}{l}" for o, l in zip("pqr", letters))
        + "->M"
        + "pqr"[:n]
    )
    probs = np.einsum(spec, expectations, *[signed[:, q] for q in range(n)], optimize=True) / 2**n
    return np.clip(probs, 0.0, None)


def fidelity_pure(rho: DensityOp, psi: PureState) -> float:
    rho = as_density(rho)
    if rho.dim != psi.amplitudes.size:
        raise DimensionError("state dimensions differ")
    a = psi.amplitudes
    return float(np.real(np.vdot(a, rho.matrix @ a)))


def random_pure(n: int, rng: np.random.Generator) -> PureState:
    z = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState.normalized(z)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityOp:
    """Ginibre-distributed mixed state."""
    d = 2**n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = g @ g.conj().T
    return DensityOp(m / np.trace(m).real)


def random_direction(rng: np.random.Generator) -> BlochDir:
    return BlochDir.normalized(rng.normal(size=3))
