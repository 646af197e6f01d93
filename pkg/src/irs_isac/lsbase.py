"""Least-squares estimators for the three stages."""

import numpy as np

from irs_isac.cxmat import pinv


def ls_stage1(obs, plan):
    """Direct echo ``b`` (M x 1) and uplink ``f`` (1 x M), averaged over sub-frames."""
    Y = obs.Y
    b_bar = (Y @ pinv(plan.x_s1)).mean(axis=0, keepdims=True).conj().T
    f_bar = (Y @ pinv(plan.z_s1)).mean(axis=0, keepdims=True)
    return b_bar, f_bar


def ls_stage2(obs, plan, f_hat):
    """Reflected uplink channel ``Gu`` (L x M) after removing ``f_hat``."""
    Y_tilde = obs.Y - f_hat @ plan.z_s2
    Y_bar = Y_tilde @ pinv(plan.z_s2)
    return pinv(plan.v_s2) @ Y_bar


def ls_stage3(obs, plan, b_hat, f_hat, Gu_hat):
    """Reflected sensing channel ``Gt`` (M x L) after removing all prior terms."""
    V = plan.v_s3
    Y_tilde = obs.Y - (f_hat + V @ Gu_hat) @ plan.z_s3 - b_hat.conj().T @ plan.x_s3
    Y_bar = Y_tilde @ pinv(plan.x_s3)
    # Y_bar = V Gt^H + noise, so Gt = (V^+ Y_bar)^H
    return (pinv(V) @ Y_bar).conj().T
