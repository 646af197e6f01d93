"""Noisy pilot observations at the ISAC receive antenna.

Self-interference is assumed fully compensated and never enters the
received blocks.
"""

from dataclasses import dataclass

import numpy as np

from irs_isac.channels import crandn


@dataclass
class StageObservation:
    stage: int
    y: list
    sigma2: float
    snr_db: float = float("nan")

    @property
    def Y(self) -> np.ndarray:
        """Sub-frames stacked as rows."""
        return np.vstack(self.y)


def received_power(stage: int, config) -> float:
    rho1, rho2, rho3, rho4, rho5 = config.geometry.rhos
    pb, pu = config.p_bs, config.p_ue
    if stage == 1:
        return pb * rho2 + pu * rho4
    if stage == 2:
        return pu * (rho4 + rho1 * rho5)
    if stage == 3:
        return pb * (rho2 + rho1 * rho3) + pu * (rho4 + rho1 * rho5)
    raise ValueError(f"unknown stage {stage}")


def noise_variance(stage: int, config, snr_db: float) -> float:
    return received_power(stage, config) / 10.0 ** (snr_db / 10.0)


def _noise(rng, sigma2, shape):
    if sigma2 == 0:
        return np.zeros(shape, dtype=np.complex128)
    return crandn(rng, shape, sigma2)


def receive_stage1(plan, chans, sigma2, c_count, rng, snr_db=float("nan")):
    clean = chans.b.conj().T @ plan.x_s1 + chans.f @ plan.z_s1
    y = [clean + _noise(rng, sigma2, clean.shape) for _ in range(c_count)]
    return StageObservation(1, y, sigma2, snr_db)


def receive_stage2(plan, chans, sigma2, rng, snr_db=float("nan")):
    y = []
    for v in plan.v_s2:
        clean = (chans.f + v[None, :] @ chans.Gu) @ plan.z_s2
        y.append(clean + _noise(rng, sigma2, clean.shape))
    return StageObservation(2, y, sigma2, snr_db)


def receive_stage3(plan, chans, sigma2, rng, snr_db=float("nan")):
    y = []
    for v in plan.v_s3:
        v = v[None, :]
        sensing = (chans.b.conj().T + v @ chans.Gt.conj().T) @ plan.x_s3
        comm = (chans.f + v @ chans.Gu) @ plan.z_s3
        clean = sensing + comm
        y.append(clean + _noise(rng, sigma2, clean.shape))
    return StageObservation(3, y, sigma2, snr_db)


def observe_all(config, plan, chans, snr_db, rng):
    """Simulate all three stages at one nominal SNR, each with its own noise level."""
    return (
        receive_stage1(plan, chans, noise_variance(1, config, snr_db), config.C_s1, rng, snr_db),
        receive_stage2(plan, chans, noise_variance(2, config, snr_db), rng, snr_db),
        receive_stage3(plan, chans, noise_variance(3, config, snr_db), rng, snr_db),
    )
