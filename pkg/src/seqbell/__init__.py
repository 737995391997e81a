"""Sequential weak-measurement Bell tests: one entangled pair, Alice, Bob1 (weak), Bob2."""

from .bell import (
    JointDistribution,
    ScenarioSettings,
    SValues,
    chsh,
    correlation_ab1,
    correlation_ab2,
    default_settings,
    double_violation_window,
    joint_distribution,
    predicted_svalues,
    sweep,
)
from .qcore import BlochDirection, DensityMatrix, Ket, singlet
from .weakmeas import KrausPair, PointerPair, WeakMeasurement, kraus_pair, pointer_states

__version__ = "0.1.0"
