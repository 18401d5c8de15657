"""Nonlocality and entanglement baselines: CHSH-type S, tangle, Svetlichny S3."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .qcore import as_density, pauli, pauli_expectations, rotation_y

BELL_LOCAL_BOUND = 2.0
SVETLICHNY_BOUND = 4.0


@dataclass(frozen=True)
class WitnessReport:
    value: float
    threshold: float
    sigma: float | None = None
    violated: bool = field(init=False)
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "violated", bool(self.value > self.threshold))

    def as_dict(self) -> dict:
        out = {
            "value": self.value,
            "sigma": self.sigma,
            "threshold": self.threshold,
            "violated": self.violated,
        }
        out.update(self.details)
        return out


@dataclass(frozen=True)
class BellSetting:
    alpha: float


# -- CHSH-type function ------------------------------------------------------


def rotated_pauli(axis: str, alpha: float) -> np.ndarray:
    r = rotation_y(alpha)
    return r @ pauli(axis) @ r.conj().T


def bell_operator(alpha: float) -> np.ndarray:
    sx, sz = pauli("x"), pauli("z")
    xa, za = rotated_pauli("x", alpha), rotated_pauli("z", alpha)
    return np.kron(sx, xa) - np.kron(sx, za) + np.kron(sz, xa) + np.kron(sz, za)


def bell_S(rho, alpha: float) -> float:
    rho = as_density(rho)
    if rho.n != 2:
        raise ValueError("bell_S needs a two-qubit state")
    return float(np.real(np.trace(rho.matrix @ bell_operator(alpha))))


def bell_S_family(mu: float, phi: float, alpha: float) -> float:
    """Closed form of ``bell_S`` on the white-noise family."""
    return mu * (1 + np.sin(2 * phi)) * (np.cos(2 * alpha) + np.sin(2 * alpha))


def max_bell_family(mu: float, phi: float) -> WitnessReport:
    value = np.sqrt(2.0) * mu * (1 + np.sin(2 * phi))
    return WitnessReport(float(value), BELL_LOCAL_BOUND, details={"alpha": np.pi / 8})


def max_bell(rho, n_grid: int = 360) -> WitnessReport:
    """Maximise ``|S(alpha)|`` by a grid over [0, pi) and bounded refinement."""
    alphas = np.pi * np.arange(n_grid) / n_grid
    vals = np.abs([bell_S(rho, a) for a in alphas])
    i = int(np.argmax(vals))
    h = np.pi / n_grid
    res = minimize_scalar(
        lambda a: -abs(bell_S(rho, a)),
        bounds=(alphas[i] - h, alphas[i] + h),
        method="bounded",
        options={"xatol": 1e-10},
    )
    best_a, best_v = (res.x, -res.fun) if -res.fun >= vals[i] else (alphas[i], vals[i])
    return WitnessReport(float(best_v), BELL_LOCAL_BOUND, details={"alpha": float(best_a % np.pi)})


# -- tangle ------------------------------------------------------------------


def concurrence(rho) -> float:
    rho = as_density(rho)
    if rho.n != 2:
        raise ValueError("concurrence needs a two-qubit state")
    yy = np.kron(pauli("y"), pauli("y"))
    m = rho.matrix
    r = m @ yy @ m.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0.0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def tangle2(rho) -> float:
    return concurrence(rho) ** 2


# -- Svetlichny --------------------------------------------------------------


@dataclass(frozen=True)
class SvetlichnyAngles:
    unprimed: tuple[float, float, float]
    primed: tuple[float, float, float]

    def swapped(self) -> "SvetlichnyAngles":
        return SvetlichnyAngles(self.primed, self.unprimed)

    def as_array(self) -> np.ndarray:
        return np.array(list(self.unprimed) + list(self.primed), dtype=float)

    @classmethod
    def from_array(cls, a) -> "SvetlichnyAngles":
        a = [float(x) for x in a]
        return cls(tuple(a[:3]), tuple(a[3:]))


# Optimal GHZ-Cluster settings as quoted alongside the experiment.
QUOTED_GHZC_ANGLES = SvetlichnyAngles((3 * np.pi / 8, -np.pi / 4, 0.0), (np.pi / 8, 0.0, np.pi / 4))


def _obs_vec(alpha: float) -> np.ndarray:
    # cos(a) sigma_z + sin(a) sigma_x in the (I, X, Y, Z) basis
    return np.array([0.0, np.sin(alpha), 0.0, np.cos(alpha)])


def _corr(expect: np.ndarray, a: float, b: float, c: float) -> float:
    return float(np.einsum("ijk,i,j,k->", expect, _obs_vec(a), _obs_vec(b), _obs_vec(c)))


def svet_E(rho, alpha_a: float, alpha_b: float, alpha_c: float) -> float:
    """Correlator ``Tr[rho (x)_j (cos a_j sigma_z + sin a_j sigma_x)]``."""
    rho = as_density(rho)
    if rho.n != 3:
        raise ValueError("svet_E needs a three-qubit state")
    ops = [np.cos(a) * pauli("z") + np.sin(a) * pauli("x") for a in (alpha_a, alpha_b, alpha_c)]
    return float(np.real(np.trace(rho.matrix @ np.kron(np.kron(ops[0], ops[1]), ops[2]))))


def _mermin(corr, u, p) -> float:
    a, b, c = u
    ap, bp, cp = p
    return corr(a, b, cp) + corr(a, bp, c) + corr(ap, b, c) - corr(ap, bp, cp)


def svet_signed(rho, angles: SvetlichnyAngles) -> float:
    """``M3 + M3'`` before taking the absolute value."""
    expect = pauli_expectations(as_density(rho))
    corr = lambda a, b, c: _corr(expect, a, b, c)
    return _mermin(corr, angles.unprimed, angles.primed) + _mermin(corr, angles.primed, angles.unprimed)


def svet_M3(rho, angles: SvetlichnyAngles) -> float:
    rho = as_density(rho)
    return _mermin(lambda a, b, c: svet_E(rho, a, b, c), angles.unprimed, angles.primed)


def svet_S3(rho, angles: SvetlichnyAngles) -> float:
    return abs(svet_signed(rho, angles))


# Svetlichny sign pattern over (setting_A, setting_B, setting_C), 0 = unprimed
_SVET_SIGNS = np.ones((2, 2, 2))
_SVET_SIGNS[0, 0, 0] = _SVET_SIGNS[1, 1, 1] = -1.0


def _zx_block(expect: np.ndarray) -> np.ndarray:
    # correlators restricted to (Z, X) on every qubit
    return expect[np.ix_([3, 1], [3, 1], [3, 1])]


def _svet_from_block(block: np.ndarray, x: np.ndarray) -> float:
    cs = np.stack([np.cos(x), np.sin(x)], axis=-1).reshape(2, 3, 2)  # (setting, party, comp)
    corr = np.einsum("abc,ia,jb,kc->ijk", block, cs[:, 0], cs[:, 1], cs[:, 2])
    return float(np.sum(_SVET_SIGNS * corr))


def _svet_objective(block: np.ndarray):
    """Scalar-math version of ``_svet_from_block`` for the optimiser's inner loop."""
    t0, t1, t2, t3, t4, t5, t6, t7 = block.ravel().tolist()

    def corr(ca, sa, cb, sb, cc, sc):
        zc, xc = t0 * cc + t1 * sc, t2 * cc + t3 * sc
        zc2, xc2 = t4 * cc + t5 * sc, t6 * cc + t7 * sc
        return ca * (cb * zc + sb * xc) + sa * (cb * zc2 + sb * xc2)

    def f(x):
        c0, c1, c2, c3, c4, c5 = map(math.cos, x)
        s0, s1, s2, s3, s4, s5 = map(math.sin, x)
        # all eight setting combinations are +1 except 000 and 111 (-1)
        tot = corr(c0 + c3, s0 + s3, c1 + c4, s1 + s4, c2 + c5, s2 + s5)
        return tot - 2.0 * (corr(c0, s0, c1, s1, c2, s2) + corr(c3, s3, c4, s4, c5, s5))

    return f


def _svet_from_expect(expect: np.ndarray, x: np.ndarray) -> float:
    return _svet_from_block(_zx_block(expect), np.asarray(x, dtype=float))


def max_svetlichny(rho, restarts: int = 64, seed: int = 0, tol: float = 1e-6) -> WitnessReport:
    """Multistart Nelder-Mead over the six angles.

    Starts come from a seeded scrambled Sobol sequence on ``[0, 2 pi)^6``;
    the best restart wins, ties to the lowest restart index.
    """
    rho = as_density(rho)
    if rho.n != 3:
        raise ValueError("max_svetlichny needs a three-qubit state")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    obj = _svet_objective(_zx_block(pauli_expectations(rho)))
    starts = 2 * np.pi * qmc.Sobol(d=6, scramble=True, seed=seed).random(restarts)
    best_val, best_x = -np.inf, starts[0]
    for x0 in starts:
        res = minimize(
            lambda x: -abs(obj(x)),
            x0,
            method="Nelder-Mead",
            options={"xatol": tol, "fatol": 1e-12, "maxiter": 6000, "maxfev": 12000},
        )
        if -res.fun > best_val:
            best_val, best_x = -res.fun, res.x
    angles = SvetlichnyAngles.from_array(np.mod(best_x, 2 * np.pi))
    return WitnessReport(
        float(best_val),
        SVETLICHNY_BOUND,
        details={"angles": angles.as_array().tolist(), "restarts": restarts, "seed": seed},
    )
