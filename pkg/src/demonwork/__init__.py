"""Quantum work-extraction games as entanglement witnesses.

Modules
-------
qcore      states, measurements and Born probabilities for up to three qubits
states     the two- and three-qubit resource families
workx      extractable-work functionals and their optimisation
witnesses  CHSH-type, tangle and Svetlichny baselines
expsim     count-level simulation of the photonic experiment
cli        command-line front end
"""

from .qcore import BlochDir, DensityOp, GreatCircle, JointDist, PureState
from .workx import THRESHOLDS, Mode, avg_work2, avg_work3, max_work2, max_work3

__all__ = [
    "BlochDir",
    "DensityOp",
    "GreatCircle",
    "JointDist",
    "PureState",
    "THRESHOLDS",
    "Mode",
    "avg_work2",
    "avg_work3",
    "max_work2",
    "max_work3",
]
__version__ = "0.1.0"
