"""Scenario configuration and the three-stage pilot plan.

Stage 1 (IRS off) separates the direct echo and uplink channels with two
orthogonal halves of a ``2M``-point DFT. Stage 2 silences the BS and sweeps
DFT phase patterns over the IRS; stage 3 turns everything on.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from irs_isac.channels import Geometry
from irs_isac.cxmat import dft_matrix


class ConfigError(ValueError):
    pass


@dataclass
class SystemConfig:
    M: int = 4
    L: int = 8
    C_s1: int = 1
    C_s2: int | None = None
    C_s3: int | None = None
    P_s1: int | None = None
    P_s2: int | None = None
    P_s3: int | None = None
    p_bs_dbm: float = 20.0
    p_ue_dbm: float = 15.0
    geometry: Geometry = field(default_factory=Geometry)
    snr_ch_db: float = 30.0
    delta: float = 1e4
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.geometry, dict):
            self.geometry = Geometry(**{k: tuple(v) if isinstance(v, list) else v
                                        for k, v in self.geometry.items()})
        if self.C_s2 is None:
            self.C_s2 = self.C_s1 + self.L
        if self.C_s3 is None:
            self.C_s3 = self.C_s2 + self.L
        self.P_s1 = 2 * self.M if self.P_s1 is None else self.P_s1
        self.P_s2 = self.M if self.P_s2 is None else self.P_s2
        self.P_s3 = self.M if self.P_s3 is None else self.P_s3
        self.validate()

    def validate(self):
        if self.M < 1 or self.L < 1:
            raise ConfigError("M and L must be positive")
        if self.P_s1 != 2 * self.M:
            raise ConfigError(f"P_s1 must equal 2M={2 * self.M}, got {self.P_s1}")
        if self.P_s2 != self.M or self.P_s3 != self.M:
            raise ConfigError("P_s2 and P_s3 must equal M")
        if self.C_s1 < 1:
            raise ConfigError("stage 1 needs at least one sub-frame")
        if self.C_s2 - self.C_s1 < self.L:
            raise ConfigError("stage 2 needs at least L sub-frames")
        if self.C_s3 - self.C_s2 < self.L:
            raise ConfigError("stage 3 needs at least L sub-frames")

    @property
    def spans(self):
        """Sub-frame counts of the three stages."""
        return (self.C_s1, self.C_s2 - self.C_s1, self.C_s3 - self.C_s2)

    @property
    def p_bs(self) -> float:
        return 10.0 ** (self.p_bs_dbm / 10.0)

    @property
    def p_ue(self) -> float:
        return 10.0 ** (self.p_ue_dbm / 10.0)

    def replace(self, **changes) -> "SystemConfig":
        d = asdict(self)
        d["geometry"] = self.geometry
        # stage boundaries follow M/L unless pinned explicitly
        if "L" in changes or "C_s1" in changes:
            d.update(C_s2=None, C_s3=None)
        if "M" in changes:
            d.update(P_s1=None, P_s2=None, P_s3=None)
        d.update(changes)
        return SystemConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geometry"] = {k: list(v) if isinstance(v, tuple) else v
                         for k, v in asdict(self.geometry).items()}
        return d


@dataclass
class PilotPlan:
    x_s1: np.ndarray
    z_s1: np.ndarray
    z_s2: np.ndarray
    x_s3: np.ndarray
    z_s3: np.ndarray
    v_s2: np.ndarray
    v_s3: np.ndarray
    bs_tx_on: tuple = (True, False, True)
    irs_on: tuple = (False, True, True)


def irs_schedule(n_subframes: int, L: int) -> np.ndarray:
    """Unit-modulus phase patterns: first ``L`` columns of an ``n``-point DFT.

    Columns stay mutually orthogonal (``V^H V = n I``) for any ``n >= L``.
    """
    return dft_matrix(n_subframes, n_subframes, 1.0)[:, :L].copy()


def build_plan(config: SystemConfig) -> PilotPlan:
    config.validate()
    M = config.M
    amp_b = math.sqrt(config.p_bs)
    amp_u = math.sqrt(config.p_ue)
    R = dft_matrix(2 * M, 2 * M, 1.0 / math.sqrt(M))
    F = dft_matrix(M, M, 1.0 / math.sqrt(M))
    _, n2, n3 = config.spans
    return PilotPlan(
        x_s1=amp_b * R[:M],
        z_s1=amp_u * R[M:],
        z_s2=amp_u * F,
        x_s3=amp_b * F,
        z_s3=amp_u * F.copy(),
        v_s2=irs_schedule(n2, config.L),
        v_s3=irs_schedule(n3, config.L),
    )
