"""Stochastic twin of the photon-counting pipeline.

Analyzer settings live on a great circle of the Bloch sphere and are given
in Bloch radians. A half-wave-plate rotation by ``h`` moves the linear
polarisation by ``2h`` and the Bloch direction by ``4h``; the lab sweep of
0-45 degrees of HWP therefore spans half a Bloch circle, and the orthogonal
analyzer setting (HWP + 45 degrees) is the antipodal Bloch direction.

Each analyzer setting is recorded with a single detector pair, so only the
``(+, +)`` coincidence of that setting is counted. Counts are independent
Poisson draws.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .qcore import (
    BlochDir,
    DensityOp,
    GreatCircle,
    JointDist,
    PAULI_BASIS,
    as_density,
    born_joint_dist,
)
from .workx import WorkResult2, avg_work2, work_from_joint

ORTHOGONAL_STEP = np.pi
EXAMPLE_COUNTS = (3578, 58, 173, 4328)


def _child_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


# -- raw counts --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CountRecord:
    """Coincidence counts for one analyzer setting, all outcomes resolved."""

    settings: tuple[float, ...]
    counts: np.ndarray
    duration_s: float
    rate_hz: float
    seed: int | None = None
    circle_normal: tuple[float, float, float] = (0.0, 1.0, 0.0)
    circle_origin: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        if c.ndim != len(self.settings):
            raise ValueError("one setting per qubit is required")

    def to_json(self) -> str:
        return json.dumps(
            {
                "settings": list(self.settings),
                "counts": np.asarray(self.counts).tolist(),
                "duration_s": self.duration_s,
                "rate_hz": self.rate_hz,
                "seed": self.seed,
                "circle_normal": list(self.circle_normal),
                "circle_origin": list(self.circle_origin),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CountRecord":
        d = json.loads(text)
        return cls(
            tuple(d["settings"]),
            np.asarray(d["counts"], dtype=np.int64),
            d["duration_s"],
            d["rate_hz"],
            d.get("seed"),
            tuple(d.get("circle_normal", (0.0, 1.0, 0.0))),
            tuple(d.get("circle_origin", (0.0, 0.0, 1.0))),
        )


def _check_stats(rate: float, duration: float):
    if not rate > 0 or not duration > 0:
        raise ValueError("rate and duration must be positive")


def simulate_counts(
    rho,
    angles: Sequence[float],
    rate: float,
    duration: float,
    seed: int,
    circle: GreatCircle | None = None,
) -> CountRecord:
    """Poisson counts with mean ``rate * duration * p(outcome)`` per outcome."""
    _check_stats(rate, duration)
    circle = circle or GreatCircle.xz()
    rho = as_density(rho)
    dirs = [circle.point(a) for a in angles]
    p = born_joint_dist(rho, dirs).probs
    counts = np.random.default_rng(seed).poisson(rate * duration * p)
    return CountRecord(
        tuple(float(a) for a in angles),
        counts,
        float(duration),
        float(rate),
        seed,
        tuple(circle.normal.vec.tolist()),
        tuple(circle.origin.vec.tolist()),
    )


# -- four-setting estimators ---------------------------------------------------


@dataclass(frozen=True)
class QuadCounts:
    """Counts for settings (t, t), (t, t+), (t+, t), (t+, t+); ``t+`` is orthogonal."""

    n_pp: float
    n_pm: float
    n_mp: float
    n_mm: float

    def __post_init__(self):
        if min(self.as_array()) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def D(self) -> float:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def as_array(self) -> np.ndarray:
        return np.array([self.n_pp, self.n_pm, self.n_mp, self.n_mm], dtype=float)

    def scaled(self, k: float) -> "QuadCounts":
        return QuadCounts(*(self.as_array() * k))


def _require_counts(q: QuadCounts):
    if q.D <= 0:
        raise ZeroDivisionError("no coincidences recorded (D = 0)")


def printed_estimators(q: QuadCounts) -> tuple[float, float, float]:
    """Normalised-count estimators ``(p_AB, p_A, p_B)`` in their printed index convention.

    With the first index belonging to Aletheia, the returned ``p_A`` is the canonical marginal of
    Bia's +1 outcome and ``p_B`` that of Aletheia; see ``joint_from_counts``.
    """
    _require_counts(q)
    d = q.D
    return q.n_pm / d, (q.n_pp + q.n_mp) / d, (q.n_pp + q.n_pm) / d


def joint_from_counts(q: QuadCounts) -> JointDist:
    """Frequency estimate of the outcome table, order (++, +-, -+, --)."""
    _require_counts(q)
    return JointDist(q.as_array() / q.D)


def protocol_thetas(n_angles: int) -> np.ndarray:
    """Half-circle grid ``k pi / n``; the per-run work has period pi."""
    return np.pi * np.arange(n_angles) / n_angles


def quad_probabilities(rho, circle: GreatCircle, theta: float) -> np.ndarray:
    """Mean coincidence fraction of each of the four single-detector settings."""
    rho = as_density(rho)
    out = []
    for sa, sb in itertools.product((0.0, ORTHOGONAL_STEP), repeat=2):
        dirs = [circle.point(theta + sa), circle.point(theta + sb)]
        out.append(born_joint_dist(rho, dirs).probs[0, 0])
    return np.array(out)


def works_from_counts(counts: np.ndarray) -> np.ndarray:
    """Per-angle work from a ``(n_angles, 4)`` count array."""
    c = np.asarray(counts, dtype=float)
    d = c.sum(axis=1, keepdims=True)
    if np.any(d <= 0):
        raise ZeroDivisionError("an angle has no coincidences")
    return work_from_joint((c / d).reshape(-1, 2, 2))


def protocol_work_from_counts(counts: np.ndarray) -> float:
    return float(works_from_counts(counts).mean())


def sigma_work_propagation(counts) -> float:
    """First-order Poisson error of the angle-averaged work.

    ``counts`` is a sequence of QuadCounts or a ``(n_angles, 4)`` array.
    Uses ``dH/dN_i = -(log2 p_i + H) / D`` for each entropy term.
    """
    c = np.array([q.as_array() for q in counts]) if isinstance(counts[0], QuadCounts) else np.asarray(counts, float)
    k = c.shape[0]
    var = 0.0
    for row in c:
        d = row.sum()
        if d <= 0:
            raise ZeroDivisionError("an angle has no coincidences")
        p = (row / d).reshape(2, 2)
        qa, qb = p.sum(axis=1), p.sum(axis=0)

        def ent(x):
            x = x[x > 0]
            return -np.sum(x * np.log2(x))

        h_ab, h_a, h_b = ent(p.ravel()), ent(qa), ent(qb)
        with np.errstate(divide="ignore"):
            lp = np.log2(p)
            la, lb = np.log2(qa), np.log2(qb)
        grad = (lp + h_ab) - 0.5 * (la[:, None] + h_a) - 0.5 * (lb[None, :] + h_b)
        grad = grad.ravel() / d
        mask = row > 0
        var += np.sum(grad[mask] ** 2 * row[mask])
    return float(np.sqrt(var) / k)


def monte_carlo_sigma(
    statistic: Callable[[np.ndarray], float],
    counts,
    resamples: int = 1000,
    seed: int = 0,
) -> float:
    """Std. dev. of ``statistic`` over Poisson redraws around ``counts``."""
    if resamples < 100:
        raise ValueError("at least 100 resamples are required")
    lam = np.asarray(counts, dtype=float)
    vals = np.array([statistic(r.poisson(lam)) for r in _child_rngs(seed, resamples)])
    return float(vals.std(ddof=1))


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    result: WorkResult2
    quads: list
    counts: np.ndarray  # (n_angles, 4)
    sigma: float | None
    pairs_per_setting: float

    @property
    def average(self) -> float:
        return self.result.average


def work2_protocol(
    rho,
    circle: GreatCircle | None = None,
    n_angles: int = 19,
    rate: float = 270.0,
    duration: float = 30.0,
    seed: int | None = 0,
    exact: bool = False,
) -> ProtocolResult:
    """Emulate the ``4 * n_angles`` single-detector measurements.

    With ``exact`` the mean counts are used unrounded, which reproduces
    ``avg_work2`` on a ``2 * n_angles`` full-circle grid.
    """
    if n_angles < 2:
        raise ValueError("n_angles must be at least 2")
    _check_stats(rate, duration)
    circle = circle or GreatCircle.xz()
    rho = as_density(rho)
    thetas = protocol_thetas(n_angles)
    pairs = rate * duration
    means = np.array([pairs * quad_probabilities(rho, circle, t) for t in thetas])
    if exact:
        counts = means
    else:
        if seed is None:
            raise ValueError("a seed is required for simulated counts")
        counts = np.array([r.poisson(m) for r, m in zip(_child_rngs(seed, n_angles), means)])
    works = works_from_counts(counts)
    quads = [QuadCounts(*row) for row in counts]
    sigma = None if exact else sigma_work_propagation(counts)
    res = WorkResult2(thetas, works, float(works.mean()), circle, n_angles)
    return ProtocolResult(res, quads, counts, sigma, pairs)


def noiseless_protocol_value(rho, circle: GreatCircle | None = None, n_angles: int = 19) -> float:
    return avg_work2(rho, circle or GreatCircle.xz(), 2 * n_angles).average


# -- tomography ---------------------------------------------------------------

_LETTER = {"x": 1, "y": 2, "z": 3}


@dataclass(frozen=True, eq=False)
class TomographyRecord:
    """Outcome counts for every Pauli measurement basis, e.g. ``"xz"``."""

    bases: tuple[str, ...]
    counts: np.ndarray  # (n_settings, 2**n), outcome order as JointDist.flat()
    duration_s: float = 0.0
    rate_hz: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        c = np.asarray(self.counts)
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        if c.shape[0] != len(self.bases):
            raise ValueError("one count row per basis setting is required")

    @property
    def n(self) -> int:
        return len(self.bases[0])

    def to_json(self) -> str:
        return json.dumps(
            {
                "settings": list(self.bases),
                "counts": np.asarray(self.counts).tolist(),
                "duration_s": self.duration_s,
                "rate_hz": self.rate_hz,
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "TomographyRecord":
        d = json.loads(text)
        return cls(tuple(d["settings"]), np.asarray(d["counts"]), d["duration_s"], d["rate_hz"], d.get("seed"))


def pauli_bases(n: int) -> tuple[str, ...]:
    return tuple("".join(b) for b in itertools.product("xyz", repeat=n))


def tomography_probabilities(rho) -> np.ndarray:
    rho = as_density(rho)
    return np.array(
        [born_joint_dist(rho, [BlochDir.axis(c) for c in b]).flat() for b in pauli_bases(rho.n)]
    )


def simulate_tomography(rho, rate: float = 200.0, duration: float = 30.0, seed: int | None = 0, exact: bool = False) -> TomographyRecord:
    """Counts for all ``3**n`` Pauli settings; ``exact`` stores the mean counts."""
    _check_stats(rate, duration)
    rho = as_density(rho)
    means = rate * duration * tomography_probabilities(rho)
    if exact:
        counts = means
    else:
        if seed is None:
            raise ValueError("a seed is required for simulated counts")
        counts = np.random.default_rng(seed).poisson(means)
    return TomographyRecord(pauli_bases(rho.n), counts, float(duration), float(rate), seed)


def pauli_estimates(rec: TomographyRecord) -> np.ndarray:
    """Averaged Pauli expectation table ``(4,) * n`` from a tomography record."""
    n = rec.n
    bases = list(rec.bases)
    if sorted(bases) != sorted(pauli_bases(n)):
        raise ValueError("tomography needs every Pauli basis setting exactly once")
    counts = np.asarray(rec.counts, dtype=float)
    signs = np.array(list(itertools.product((1, -1), repeat=n)))  # (2**n, n)
    est = np.zeros((4,) * n)
    for idx in np.ndindex(est.shape):
        active = [q for q in range(n) if idx[q] != 0]
        vals = []
        for b, row in zip(bases, counts):
            if all(_LETTER[b[q]] == idx[q] for q in active):
                tot = row.sum()
                if tot <= 0:
                    continue
                parity = np.prod(signs[:, active], axis=1) if active else np.ones(len(row))
                vals.append(np.dot(parity, row) / tot)
        if not vals:
            raise ValueError("basis setting without counts")
        est[idx] = np.mean(vals)
    return est


def project_to_physical(m: np.ndarray) -> np.ndarray:
    """Nearest density matrix in 2-norm by eigenvalue clipping and redistribution.

    Eigenvalues are processed from the smallest; any negative one is zeroed
    and its weight spread evenly over the remaining ones, which keeps the
    trace at one.
    """
    m = 0.5 * (m + m.conj().T)
    m = m / np.trace(m).real
    w, v = np.linalg.eigh(m)
    w = w.copy()
    d = len(w)
    acc = 0.0
    i = 0
    while i < d and w[i] + acc / (d - i) < 0:
        acc += w[i]
        w[i] = 0.0
        i += 1
    if i < d:
        w[i:] += acc / (d - i)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def linear_inversion(rec: TomographyRecord, physical: bool = True) -> DensityOp:
    est = pauli_estimates(rec)
    n = rec.n
    d = 2**n
    m = np.zeros((d, d), dtype=complex)
    for idx in np.ndindex(est.shape):
        op = PAULI_BASIS[idx[0]]
        for q in range(1, n):
            op = np.kron(op, PAULI_BASIS[idx[q]])
        m += est[idx] * op
    m /= d
    if physical:
        m = project_to_physical(m)
    return DensityOp(m)


def tomography_monte_carlo_sigma(
    statistic: Callable[[DensityOp], float],
    rec: TomographyRecord,
    resamples: int = 1000,
    seed: int = 0,
) -> float:
    """Poisson-resampled std. dev. of a function of the reconstructed state."""
    def stat(counts):
        return statistic(linear_inversion(TomographyRecord(rec.bases, counts)))

    return monte_carlo_sigma(stat, rec.counts, resamples, seed)
