"""
Exchange Laws
Constitutive laws for the cholesterol flux q between cytosol and membrane.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from spectral_core import SurfaceField, dealias_cubic, surface_integral
from utils.exceptions import ConfigurationException, GeometryMismatchException

EQUILIBRIUM = "equilibrium"
NONEQ = "noneq"
NONEQ_CUTOFF = "noneq_cutoff"

LAW_KINDS = (EQUILIBRIUM, NONEQ, NONEQ_CUTOFF)


@dataclass(frozen=True)
class CutoffFunction:
    """Bounded monotone eta: identity on [-a, a], tanh tail of width w outside."""
    a: float
    w: float

    def __post_init__(self):
        if self.a < 0:
            raise ConfigurationException(f"Cutoff level must be non-negative, got {self.a}")
        if self.w <= 0:
            raise ConfigurationException(f"Blend width must be positive, got {self.w}")

    def __call__(self, s):
        return eval_eta(self, s)


@dataclass(frozen=True)
class ExchangeLaw:
    """
    Tagged exchange law.

    kind "equilibrium":   q = -c (theta - u)
    kind "noneq":         q = c1 u (1 - v) - c2 v
    kind "noneq_cutoff":  q = c1 u - c1 eta(u) v - c2 v
    """
    kind: str
    c: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    cutoff: Optional[CutoffFunction] = None

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ConfigurationException(f"Unknown exchange law '{self.kind}'")
        if self.kind == EQUILIBRIUM and self.c < 0:
            raise ConfigurationException("Equilibrium rate c must be >= 0")
        if self.kind in (NONEQ, NONEQ_CUTOFF) and (self.c1 <= 0 or self.c2 <= 0):
            raise ConfigurationException("Non-equilibrium rates c1, c2 must be positive")
        if self.kind == NONEQ_CUTOFF and self.cutoff is None:
            raise ConfigurationException("Cutoff law needs a CutoffFunction")

    @classmethod
    def equilibrium(cls, c: float) -> "ExchangeLaw":
        return cls(kind=EQUILIBRIUM, c=c)

    @classmethod
    def noneq(cls, c1: float, c2: float) -> "ExchangeLaw":
        return cls(kind=NONEQ, c1=c1, c2=c2)

    @classmethod
    def noneq_cutoff(cls, c1: float, c2: float, a: float, w: Optional[float] = None) -> "ExchangeLaw":
        """Cutoff law; the blend width defaults to the cutoff level."""
        width = a if w is None else w
        return cls(kind=NONEQ_CUTOFF, c1=c1, c2=c2, cutoff=CutoffFunction(a=a, w=width))

    @property
    def is_noneq(self) -> bool:
        return self.kind in (NONEQ, NONEQ_CUTOFF)

    def pointwise(self, u, v, theta=None):
        """Evaluate q on plain arrays or scalars."""
        if self.kind == EQUILIBRIUM:
            return -self.c * (theta - u)
        if self.kind == NONEQ:
            return self.c1 * u * (1.0 - v) - self.c2 * v
        return self.c1 * u - self.c1 * eval_eta(self.cutoff, u) * v - self.c2 * v


def eval_eta(cf: CutoffFunction, s):
    """eta(s) = s for |s| <= a, else sign(s) (a + w tanh((|s| - a) / w))."""
    s_arr = np.asarray(s, dtype=float)
    magnitude = np.abs(s_arr)
    tail = np.sign(s_arr) * (cf.a + cf.w * np.tanh((magnitude - cf.a) / cf.w))
    result = np.where(magnitude <= cf.a, s_arr, tail)
    if np.ndim(s) == 0:
        return float(result)
    return result


def _values(x: Union[SurfaceField, float], reference: SurfaceField):
    if isinstance(x, SurfaceField):
        if x.geometry != reference.geometry:
            raise GeometryMismatchException("Exchange inputs live on different grids")
        return x.values
    return x


def eval_q(law: ExchangeLaw, u_trace: Union[SurfaceField, float], v: SurfaceField,
           theta: Optional[SurfaceField] = None) -> SurfaceField:
    """Pointwise grid evaluation of q followed by dealiasing."""
    u = _values(u_trace, v)
    th = None if theta is None else _values(theta, v)
    if law.kind == EQUILIBRIUM and th is None:
        raise ConfigurationException("Equilibrium law requires theta")
    q = np.broadcast_to(law.pointwise(u, v.values, th), v.values.shape)
    return dealias_cubic(SurfaceField.from_values(v.geometry, q))


def q_surface_integral(law: ExchangeLaw, u_trace: Union[SurfaceField, float], v: SurfaceField,
                       theta: Optional[SurfaceField] = None) -> float:
    return surface_integral(eval_q(law, u_trace, v, theta))
