"""Resource states and the noise channels that degrade them."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .qcore import DensityOp, PureState, as_density, pauli


class Base(str, enum.Enum):
    GHZ = "ghz"
    GHZ_CLUSTER = "ghzc"
    W = "w"


@dataclass(frozen=True)
class TwoQubitFamilyParams:
    mu: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")


@dataclass(frozen=True)
class ThreeQubitFamilyParams:
    mu: float
    base: Base

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        object.__setattr__(self, "base", Base(self.base))


def ket(label: str, h_bit: int = 0) -> np.ndarray:
    """Computational ket from a label such as ``"01"`` or ``"HV1"``.

    ``H``/``V`` are polarisation letters mapped to ``h_bit``/``1 - h_bit``;
    digits are taken literally (path qubits).
    """
    if h_bit not in (0, 1):
        raise ValueError("h_bit must be 0 or 1")
    bits = []
    for ch in label:
        if ch in "01":
            bits.append(int(ch))
        elif ch.upper() == "H":
            bits.append(h_bit)
        elif ch.upper() == "V":
            bits.append(1 - h_bit)
        else:
            raise ValueError(f"bad ket label character {ch!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2)] = 1.0
    return v


def lab_state(terms: Mapping[str, complex], h_bit: int = 0) -> PureState:
    """Superposition of labelled kets, normalised."""
    amps = sum(c * ket(lbl, h_bit) for lbl, c in terms.items())
    return PureState.normalized(amps)


def phi_state(phi: float) -> PureState:
    """``cos(phi)|00> + sin(phi)|11>``."""
    return PureState([np.cos(phi), 0, 0, np.sin(phi)])


def werner_like(mu: float, phi: float) -> DensityOp:
    p = TwoQubitFamilyParams(mu, phi)
    proj = phi_state(p.phi).density().matrix
    return DensityOp(p.mu * proj + (1 - p.mu) * np.eye(4) / 4)


def ghz() -> PureState:
    return PureState(np.array([1, 0, 0, 0, 0, 0, 0, 1]) / np.sqrt(2))


def ghz_cluster() -> PureState:
    """``(|000> - |110> + |011> + |101>) / 2``."""
    return lab_state({"000": 1, "110": -1, "011": 1, "101": 1})


def ghz_cluster_lab(h_bit: int = 0) -> PureState:
    """Polarisation/path form ``(|HH0> - |VV0> + |HV1> + |VH1>) / 2``."""
    return lab_state({"HH0": 1, "VV0": -1, "HV1": 1, "VH1": 1}, h_bit)


def w_state() -> PureState:
    return lab_state({"001": 1, "010": 1, "100": 1})


def w_state_lab(h_bit: int = 0) -> PureState:
    """Polarisation/path form ``(|HH1> + |HV0> + |VH0>) / sqrt(3)``."""
    return lab_state({"HH1": 1, "HV0": 1, "VH0": 1}, h_bit)


_BASES = {Base.GHZ: ghz, Base.GHZ_CLUSTER: ghz_cluster, Base.W: w_state}


def base_state(base) -> PureState:
    return _BASES[Base(base)]()


def rho3(mu: float, base) -> DensityOp:
    p = ThreeQubitFamilyParams(mu, base)
    proj = base_state(p.base).density().matrix
    return DensityOp(p.mu * proj + (1 - p.mu) * np.eye(8) / 8)


def _embed(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    if not 0 <= qubit < n:
        raise ValueError(f"qubit index {qubit} out of range for {n} qubits")
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(out, op if q == qubit else np.eye(2))
    return out


def depolarize_qubit(rho, qubit: int, p: float) -> DensityOp:
    """``(1 - p) rho + (p / 3) sum_k sigma_k rho sigma_k`` on one qubit."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength must lie in [0, 1], got {p}")
    rho = as_density(rho)
    m = rho.matrix
    out = (1 - p) * m
    for axis in "xyz":
        s = _embed(pauli(axis), qubit, rho.n)
        out = out + (p / 3) * s @ m @ s
    return DensityOp(out)


def dephase_qubit(rho, qubit: int) -> DensityOp:
    """Remove all coherence of one qubit in its computational basis."""
    rho = as_density(rho)
    z = _embed(pauli("z"), qubit, rho.n)
    return DensityOp(0.5 * (rho.matrix + z @ rho.matrix @ z))
