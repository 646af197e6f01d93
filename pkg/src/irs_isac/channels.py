"""Ground-truth channel draws for the BS / target / UE / IRS scenario.

Link numbering follows the path-loss geometry:

==== ============================ =====================
link hop                          channel (amplitude)
==== ============================ =====================
1    IRS - BS                     ``g``  (1 x L)
2    BS - target - BS             ``b``  (M x 1)
3    BS - target - IRS            ``A``  (M x L)
4    UE - BS                      ``f``  (1 x M)
5    UE - IRS                     ``H``  (L x M)
==== ============================ =====================
"""

import math
from dataclasses import dataclass, field

import numpy as np


def _default_angle_bt():
    return math.acos(2.0 / 50.0)


@dataclass(frozen=True)
class Geometry:
    d: tuple = (2.0, 140.0, 140.0, 50.0, 50.0)
    gamma: tuple = (2.0, 3.5, 2.3, 3.0, 2.2)
    rho0_db: float = -30.0
    d0: float = 1.0
    theta_bt: float = field(default_factory=_default_angle_bt)
    theta_ti: float = field(default_factory=lambda: -_default_angle_bt())
    theta_ib: float = math.pi
    spacing_ratio: float = 0.5
    k_ib: float = 10.0

    def __post_init__(self):
        if len(self.d) != 5 or len(self.gamma) != 5:
            raise ValueError("need exactly five link distances and exponents")
        if any(x <= 0 for x in self.d):
            raise ValueError("distances must be positive")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")
        for th in (self.theta_bt, self.theta_ti, self.theta_ib):
            if not -math.pi - 1e-12 <= th <= math.pi + 1e-12:
                raise ValueError(f"angle {th} outside [-pi, pi]")

    @classmethod
    def from_distances(cls, d, gamma=(2.0, 3.5, 2.3, 3.0, 2.2), **kw):
        """Derive the BS-target and target-IRS azimuths from ``d1/d5``."""
        th = math.acos(d[0] / d[4])
        return cls(d=tuple(d), gamma=tuple(gamma), theta_bt=th, theta_ti=-th, **kw)

    def rho(self, link: int) -> float:
        """Linear path loss of link 1..5."""
        return path_loss(self.d[link - 1], self.gamma[link - 1], self)

    @property
    def rhos(self):
        return tuple(self.rho(j) for j in range(1, 6))


@dataclass
class ChannelRealization:
    b: np.ndarray
    f: np.ndarray
    A: np.ndarray
    g: np.ndarray
    H: np.ndarray
    h: np.ndarray
    Gt: np.ndarray
    Gu: np.ndarray

    @classmethod
    def compose(cls, b, f, A, g, H, h):
        return cls(b=b, f=f, A=A, g=g, H=H, h=h, Gt=A * g.conj(), Gu=g.T * H)

    def sac(self):
        """The four channels being estimated, keyed by name."""
        return {"b": self.b, "f": self.f, "Gu": self.Gu, "Gt": self.Gt}


def steering_vector(theta: float, n: int, spacing_ratio: float) -> np.ndarray:
    m = np.arange(n).reshape(-1, 1)
    return np.exp(2j * np.pi * spacing_ratio * m * math.sin(theta))


def _unit_phase(rng) -> complex:
    return complex(np.exp(2j * np.pi * rng.random()))


def crandn(rng, shape, var=1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, var) samples."""
    s = math.sqrt(var / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_sensing(geometry: Geometry, M: int, L: int, rng):
    """Draw the rank-one target channel ``A`` and the echo channel ``b``.

    Both reflection coefficients have unit modulus and a uniform phase. No
    path loss is applied here.
    """
    a_bt = steering_vector(geometry.theta_bt, M, geometry.spacing_ratio)
    a_ti = steering_vector(geometry.theta_ti, L, geometry.spacing_ratio)
    alpha1 = _unit_phase(rng)
    alpha2 = _unit_phase(rng)
    A = alpha1 * (a_bt @ a_ti.conj().T)
    b = alpha2 * a_bt
    return A, b


def sample_rician(K: float, los, rng) -> np.ndarray:
    los = np.asarray(los, dtype=np.complex128)
    if K < 0:
        raise ValueError("Rician factor must be non-negative")
    nlos = crandn(rng, los.shape)
    return math.sqrt(K / (K + 1.0)) * los + math.sqrt(1.0 / (K + 1.0)) * nlos


def path_loss(d: float, gamma: float, geometry: Geometry) -> float:
    if d <= 0:
        raise ValueError("distance must be positive")
    rho0 = 10.0 ** (geometry.rho0_db / 10.0)
    return rho0 * (d / geometry.d0) ** (-gamma)


def realize(config, rng) -> ChannelRealization:
    """One path-loss-scaled draw of every channel for ``config``."""
    geo, M, L = config.geometry, config.M, config.L
    rho1, rho2, rho3, rho4, rho5 = geo.rhos
    A, b = sample_sensing(geo, M, L, rng)
    g_los = steering_vector(geo.theta_ib, L, geo.spacing_ratio).conj().T
    g = sample_rician(geo.k_ib, g_los, rng)
    f = sample_rician(0.0, np.zeros((1, M)), rng)
    H = sample_rician(0.0, np.zeros((L, M)), rng)
    h = crandn(rng, (M, 1))
    return ChannelRealization.compose(
        b=math.sqrt(rho2) * b,
        f=math.sqrt(rho4) * f,
        A=math.sqrt(rho3) * A,
        g=math.sqrt(rho1) * g,
        H=math.sqrt(rho5) * H,
        h=h,
    )
