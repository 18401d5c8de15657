"""Entropy functionals and the Maxwell-demon work-extraction games.

Two-qubit game: both demons measure along the same direction on a great
circle; the work of one run is ``1 - H(A,B) + (H(A) + H(B)) / 2`` bits, and
its circle average maximised over circle orientations is compared with the
pure-product value ``1/ln 2 - 1``.

Three-qubit game: the first two qubits are measured along a common Pauli
axis ``u`` and the third along ``v``; one run yields ``1 - H(C_v | A_u, B_u)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .qcore import (
    BlochDir,
    DensityOp,
    GreatCircle,
    JointDist,
    as_density,
    born_joint_dist,
    born_probs_batch,
    pauli_expectations,
    permute_qubits,
)

LOG_FLOOR = 1e-15
# states sitting on a bound (e.g. pure products) reach it up to quadrature error
VERDICT_TOL = 1e-6
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Thresholds:
    two_qubit: float = 1.0 / np.log(2.0) - 1.0
    three_sep: float = 1.0 / 3.0
    three_wclass: float = 7.0 / 9.0


THRESHOLDS = Thresholds()


class Mode(str, enum.Enum):
    SINGLE_V = "single-v"
    ADAPTIVE_V = "adaptive-v"


# -- entropies ---------------------------------------------------------------


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    safe = np.where(p > LOG_FLOOR, p, 1.0)
    return np.where(p > LOG_FLOOR, -p * np.log2(safe), 0.0)


def _table(dist) -> np.ndarray:
    return dist.probs if isinstance(dist, JointDist) else np.asarray(dist, dtype=float)


def shannon(dist) -> float:
    """Shannon entropy in bits of a JointDist or probability array."""
    return float(_plogp(_table(dist)).sum())


def binary_entropy(p):
    return _plogp(p) + _plogp(1.0 - np.asarray(p, dtype=float))


def conditional_entropy(joint, target: int, given: Iterable[int]) -> float:
    """``H(target | given) = H(target, given) - H(given)``."""
    p = _table(joint)
    k = p.ndim
    given = sorted(set(given))
    if not 0 <= target < k or any(not 0 <= g < k for g in given) or target in given:
        raise ValueError(f"invalid variable indices target={target} given={given}")

    def marg(keep):
        drop = tuple(i for i in range(k) if i not in keep)
        return p.sum(axis=drop) if drop else p

    h_joint = shannon(marg(given + [target]))
    h_given = shannon(marg(given)) if given else 0.0
    return h_joint - h_given


# -- two-qubit game ----------------------------------------------------------


def work_from_joint(probs) -> np.ndarray:
    """Per-run work from 2x2 outcome tables; leading axes are batch axes."""
    p = np.asarray(probs, dtype=float)
    h_ab = _plogp(p).sum(axis=(-1, -2))
    h_a = _plogp(p.sum(axis=-1)).sum(axis=-1)
    h_b = _plogp(p.sum(axis=-2)).sum(axis=-1)
    return np.clip(1.0 - h_ab + 0.5 * (h_a + h_b), 0.0, 1.0)


def work2(rho, dir_a: BlochDir, dir_b: BlochDir) -> float:
    rho = as_density(rho)
    if rho.n != 2:
        raise ValueError("work2 needs a two-qubit state")
    joint = born_joint_dist(rho, [dir_a, dir_b])
    return float(work_from_joint(joint.probs))


def work2_conditional(rho, dir_a: BlochDir, dir_b: BlochDir) -> float:
    """Same quantity written as ``1 - (H(A|B) + H(B|A)) / 2``."""
    joint = born_joint_dist(as_density(rho), [dir_a, dir_b])
    return 1.0 - 0.5 * (
        conditional_entropy(joint, 0, [1]) + conditional_entropy(joint, 1, [0])
    )


@dataclass(frozen=True, eq=False)
class WorkResult2:
    thetas: np.ndarray
    works: np.ndarray
    average: float
    circle: GreatCircle
    n_points: int

    @property
    def per_angle(self) -> list[tuple[float, float]]:
        return list(zip(self.thetas.tolist(), self.works.tolist()))


def angle_grid(n_points: int, period: float = 2 * np.pi, offset: float = 0.0) -> np.ndarray:
    return offset + period * np.arange(n_points) / n_points


def _circle_works(expect: np.ndarray, circle: GreatCircle, thetas: np.ndarray) -> np.ndarray:
    d = circle.points(thetas)
    dirs = np.stack([d, d], axis=1)
    return work_from_joint(born_probs_batch(expect, dirs))


def avg_work2(rho, circle: GreatCircle, n_points: int = 1024, offset: float = 0.0) -> WorkResult2:
    """Circle average of the per-run work on a uniform periodic grid."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    rho = as_density(rho)
    thetas = angle_grid(n_points, offset=offset)
    works = _circle_works(pauli_expectations(rho), circle, thetas)
    return WorkResult2(thetas, works, float(works.mean()), circle, n_points)


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azim = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.column_stack(
        [np.sin(polar) * np.cos(azim), np.sin(polar) * np.sin(azim), np.cos(polar)]
    )


def direction_candidates(n: int) -> np.ndarray:
    """Fibonacci grid followed by the three coordinate axes."""
    return np.vstack([fibonacci_sphere(n), np.eye(3)])


def _tangent_frame(n0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = GreatCircle.from_normal(n0)
    return c.origin.vec, c.tangent


def _refine_direction(objective, n0: np.ndarray, tol: float, step: float = 0.05) -> tuple[np.ndarray, float]:
    """Maximise ``objective(unit_vector)`` near ``n0`` with Nelder-Mead.

    Works in tangent-plane coordinates so the poles are not special.
    """
    e1, e2 = _tangent_frame(n0)

    def to_dir(x):
        v = n0 + x[0] * e1 + x[1] * e2
        return v / np.linalg.norm(v)

    start = np.array([[0.0, 0.0], [step, 0.0], [0.0, step]])
    res = minimize(
        lambda x: -objective(to_dir(x)),
        np.zeros(2),
        method="Nelder-Mead",
        options={"initial_simplex": start, "xatol": tol, "fatol": 1e-15, "maxiter": 2000},
    )
    return to_dir(res.x), -float(res.fun)


class MaxWork2(NamedTuple):
    result: WorkResult2
    witnessed: bool


def max_work2(
    rho,
    n_normals: int = 512,
    n_points: int = 1024,
    tol: float = 1e-6,
    scan_points: int | None = 256,
) -> MaxWork2:
    """Maximise the circle-averaged work over great-circle orientations.

    The normal is scanned over a Fibonacci grid (plus coordinate axes) at
    ``scan_points`` resolution, the best normal is re-evaluated at
    ``n_points`` and refined locally; ties go to the lowest grid index.
    """
    rho = as_density(rho)
    if rho.n != 2:
        raise ValueError("max_work2 needs a two-qubit state")
    expect = pauli_expectations(rho)
    normals = direction_candidates(n_normals)
    scan_points = min(scan_points or n_points, n_points)
    scan_thetas = angle_grid(scan_points)
    pts = np.concatenate([GreatCircle.from_normal(nv).points(scan_thetas) for nv in normals])
    scan = work_from_joint(born_probs_batch(expect, np.stack([pts, pts], axis=1)))
    scores = scan.reshape(len(normals), scan_points).mean(axis=1)
    thetas = angle_grid(n_points)

    def objective(nv):
        return _circle_works(expect, GreatCircle.from_normal(nv), thetas).mean()

    # re-rank a handful of leading candidates at full resolution
    top = np.argsort(-scores, kind="stable")[:4]
    full = [objective(normals[i]) for i in top]
    best_i = int(top[int(np.argmax(full))])
    best_n, best_val = normals[best_i], max(full)
    ref_n, ref_val = _refine_direction(objective, best_n, tol)
    if ref_val > best_val:
        best_n = ref_n
    res = avg_work2(rho, GreatCircle.from_normal(best_n), n_points)
    return MaxWork2(res, res.average > THRESHOLDS.two_qubit + VERDICT_TOL)


# -- three-qubit game --------------------------------------------------------


def _axis_vec(u) -> np.ndarray:
    if isinstance(u, BlochDir):
        return u.vec
    if isinstance(u, str):
        return BlochDir.axis(u).vec
    return np.asarray(u, dtype=float)


def work3(rho, u: str, v: BlochDir) -> float:
    rho = as_density(rho)
    if rho.n != 3:
        raise ValueError("work3 needs a three-qubit state")
    a = BlochDir.axis(u) if isinstance(u, str) else u
    joint = born_joint_dist(rho, [a, a, v])
    return min(1.0, max(0.0, 1.0 - conditional_entropy(joint, 2, [0, 1])))


def work3_batch(expect: np.ndarray, u, vs: np.ndarray) -> np.ndarray:
    """``work3`` for many Charis directions ``vs`` (shape ``(m, 3)``)."""
    vs = np.atleast_2d(vs)
    uvec = _axis_vec(u)
    m = vs.shape[0]
    dirs = np.stack([np.tile(uvec, (m, 1)), np.tile(uvec, (m, 1)), vs], axis=1)
    p = born_probs_batch(expect, dirs)
    h_abc = _plogp(p).sum(axis=(1, 2, 3))
    h_ab = _plogp(p.sum(axis=3)).sum(axis=(1, 2))
    return np.clip(1.0 - (h_abc - h_ab), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class WorkResult3:
    per_axis: dict = field(repr=False)  # axis -> (work, BlochDir)
    average: float
    mode: Mode


def _single_v_objective(expect):
    def f(vs):
        return np.mean([work3_batch(expect, u, vs) for u in AXES], axis=0)

    return f


def avg_work3(rho, v: BlochDir | None = None, mode=Mode.SINGLE_V, n_grid: int = 2048, tol: float = 1e-9) -> WorkResult3:
    """Axis-averaged three-qubit work.

    ``SINGLE_V`` uses the given ``v`` for all three axes. ``ADAPTIVE_V``
    ignores ``v`` and maximises over Charis's direction separately per axis.
    """
    rho = as_density(rho)
    if rho.n != 3:
        raise ValueError("avg_work3 needs a three-qubit state")
    mode = Mode(mode)
    expect = pauli_expectations(rho)
    per_axis = {}
    if mode is Mode.SINGLE_V:
        if v is None:
            raise ValueError("SINGLE_V mode needs a direction v")
        for u in AXES:
            per_axis[u] = (float(work3_batch(expect, u, v.vec)[0]), v)
    else:
        cand = direction_candidates(n_grid)
        for u in AXES:
            vals = work3_batch(expect, u, cand)
            i = int(np.argmax(vals))
            obj = lambda vv, u=u: float(work3_batch(expect, u, vv)[0])
            vbest, val = _refine_direction(obj, cand[i], tol)
            if val <= vals[i]:
                vbest, val = cand[i], float(vals[i])
            per_axis[u] = (val, BlochDir.normalized(vbest))
    avg = float(np.mean([per_axis[u][0] for u in AXES]))
    return WorkResult3(per_axis, avg, mode)


class MaxWork3(NamedTuple):
    result: WorkResult3
    entangled: bool
    ghz_class: bool


def max_work3(rho, mode=Mode.ADAPTIVE_V, n_grid: int = 2048, tol: float = 1e-9) -> MaxWork3:
    """Best axis-averaged work; verdicts against 1/3 and 7/9 bits."""
    rho = as_density(rho)
    mode = Mode(mode)
    if mode is Mode.ADAPTIVE_V:
        res = avg_work3(rho, mode=mode, n_grid=n_grid, tol=tol)
    else:
        f = _single_v_objective(pauli_expectations(rho))
        cand = direction_candidates(n_grid)
        vals = f(cand)
        i = int(np.argmax(vals))
        vbest, val = _refine_direction(lambda vv: float(f(vv)[0]), cand[i], tol)
        if val <= vals[i]:
            vbest = cand[i]
        res = avg_work3(rho, BlochDir.normalized(vbest), Mode.SINGLE_V)
    return MaxWork3(
        res,
        res.average > THRESHOLDS.three_sep + VERDICT_TOL,
        res.average > THRESHOLDS.three_wclass + VERDICT_TOL,
    )


CHARIS_SLOT = 2


def permute_roles(rho, charis: int) -> DensityOp:
    """Swap qubit ``charis`` into the last slot, which the game reads as Charis."""
    rho = as_density(rho)
    if not 0 <= charis < rho.n:
        raise ValueError(f"invalid Charis qubit {charis}")
    order = list(range(rho.n))
    order[charis], order[CHARIS_SLOT] = order[CHARIS_SLOT], order[charis]
    return permute_qubits(rho, order)


def role_works(rho, mode=Mode.ADAPTIVE_V, roles: Sequence[int] = (2, 0, 1), **kw) -> list[float]:
    """Maximised work with each listed qubit playing Charis in turn."""
    return [max_work3(permute_roles(rho, c), mode, **kw).result.average for c in roles]


def scan_direction(theta: float, phi_az: float) -> np.ndarray:
    return np.array(
        [np.sin(theta) * np.cos(phi_az), np.sin(theta) * np.sin(phi_az), np.cos(theta)]
    )


@dataclass(frozen=True, eq=False)
class DirectionScan:
    thetas: np.ndarray
    phis: np.ndarray
    works: np.ndarray  # shape (len(thetas), len(phis))

    def argmax(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(int(np.argmax(self.works)), self.works.shape)
        return float(self.thetas[i]), float(self.phis[j]), float(self.works[i, j])


def direction_scan3(rho, n_theta: int = 91, n_phi: int = 181) -> DirectionScan:
    """SINGLE_V work over Charis directions ``(sin t cos p, sin t sin p, cos t)``.

    ``t`` spans [0, pi] and ``p`` spans [0, 2 pi], endpoints included.
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError("scan needs at least a 2x2 grid")
    rho = as_density(rho)
    f = _single_v_objective(pauli_expectations(rho))
    thetas = np.linspace(0.0, np.pi, n_theta)
    phis = np.linspace(0.0, 2 * np.pi, n_phi)
    t, p = np.meshgrid(thetas, phis, indexing="ij")
    vs = np.column_stack([scan_direction(a, b) for a, b in zip(t.ravel(), p.ravel())])
    works = f(vs.T).reshape(t.shape)
    return DirectionScan(thetas, phis, works)
