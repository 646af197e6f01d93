"""Closed-form real addition / multiplication counts.

Counts are exact rationals. The stage-2 and stage-3 input-generation
closed forms are evaluated as printed; :func:`input_gen_cost` also reports
the count obtained by summing the per-step terms they were derived from,
and flags any mismatch between the two.
"""

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction as Fr

from irs_isac.neuralnet import conv_len

KERNEL = 4
STRIDE = 1


@dataclass(frozen=True)
class CostReport:
    adds: Fr
    mults: Fr
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.adds < 0 or self.mults < 0:
            raise ValueError("operation counts must be non-negative")

    @property
    def fractional(self) -> bool:
        return self.adds.denominator != 1 or self.mults.denominator != 1

    def __add__(self, other):
        ctx = {**self.context, **{k: v for k, v in other.context.items() if k not in self.context}}
        return CostReport(self.adds + other.adds, self.mults + other.mults, ctx)


def inverse_cost(q: int) -> CostReport:
    """Inverting a complex ``q x q`` matrix."""
    if q < 1:
        raise ValueError("q must be positive")
    q = Fr(q)
    return CostReport(Fr(2, 3) * q * (3 * q * q + 3 * q - 1),
                      Fr(1, 3) * q * (4 * q * q + 15 * q - 1),
                      {"op": "inverse", "q": int(q)})


def _s2_composed(M, L, n):
    inv_m, inv_l = inverse_cost(M), inverse_cost(L)
    sub_a, sub_m = 2 * M * M, 4 * M * M
    sep_a = 2 * M * (2 * M * M - M - 1) + inv_m.adds
    sep_m = 4 * M * M * (2 * M + 1) + inv_m.mults
    ls_a = (4 * L * L - 2 * L) * n - 2 * L * L + inv_l.adds
    ls_m = 8 * L * L * n + inv_l.mults
    return n * (sub_a + sep_a) + ls_a, n * (sub_m + sep_m) + ls_m


def _s3_composed(M, L, n):
    inv_m, inv_l = inverse_cost(M), inverse_cost(L)
    sub_a, sub_m = 2 * M * (2 * M + L), 4 * M * (2 * M + L)
    sep_a = 2 * M * (2 * M * M - M - 1) + inv_m.adds
    sep_m = 4 * M * M * (2 * M + 1) + inv_m.mults
    ls_a = (4 * L * L - 2 * L) * n - 2 * L * L + inv_l.adds
    ls_m = 8 * L * L * n + inv_l.mults
    return n * (sub_a + sep_a) + ls_a, n * (sub_m + sep_m) + ls_m


def input_gen_cost(stage: int, pair_type: int, M: int, L: int, spans) -> CostReport:
    """Cost of building a network input; ``spans`` are the three stage sub-frame counts."""
    if min(M, L, *spans) < 1:
        raise ValueError("parameters must be positive")
    ctx = {"op": "input", "stage": stage, "pair": pair_type, "M": M, "L": L,
           "C": spans[stage - 1]}
    if pair_type == 1:
        return CostReport(Fr(0), Fr(0), ctx)
    if pair_type != 2 or stage not in (1, 2, 3):
        raise ValueError(f"unknown input S{stage}I{pair_type}")
    M, L, n = Fr(M), Fr(L), Fr(spans[stage - 1])
    if stage == 1:
        adds = Fr(10, 3) * n * M * (2 * M * M - 1) - 2 * M
        mults = Fr(2, 3) * n * M * (52 * M * M + 39 * M - 1) + 4 * M + 2
        return CostReport(adds, mults, ctx)
    if stage == 2:
        adds = Fr(2, 3) * n * (9 * M ** 3 + 3 * M * M - 4 * M + 6 * L * L - 3 * L) \
            + Fr(2, 3) * L * (3 * L * L - 1)
        mults = Fr(1, 3) * n * (22 * M ** 3 + 39 * M * M - M + 24 * L * L) \
            + Fr(1, 3) * (4 * L * L + 15 * L + 1)
        composed = _s2_composed(M, L, n)
    else:
        adds = Fr(2, 3) * n * (9 * M ** 3 + 6 * M * M - 4 * M + 3 * M * L + 6 * L * L - 3 * L) \
            + Fr(2, 3) * (3 * L * L - 1)
        mults = Fr(1, 3) * n * (22 * M ** 3 + 51 * M * M - M + 12 * M * L + 24 * L * L) \
            + Fr(1, 3) * L * (4 * L * L + 15 * L - 1)
        composed = _s3_composed(M, L, n)
    ctx["composed_adds"], ctx["composed_mults"] = composed
    ctx["closed_form_mismatch"] = composed != (adds, mults)
    return CostReport(adds, mults, ctx)


DE_SIZES = {"filters": 128, "hidden": 200}
RE_SIZES = {"filters": (128, 64), "hidden": (600, 900)}


def cnn_cost(arch: str, input_len: int, output_len: int, sizes=None) -> CostReport:
    """Inference cost of one forward pass; each activation counts as one addition."""
    fz = KERNEL
    eta2 = conv_len(input_len, fz, STRIDE)
    ctx = {"op": "cnn", "arch": arch, "input_len": input_len, "output_len": output_len}
    if arch.upper() == "DE":
        sizes = sizes or DE_SIZES
        fn2, eta3, eta4 = sizes["filters"], sizes["hidden"], output_len
        adds = fn2 * eta2 * (fz + eta3 + 1) + eta4 * (eta3 + 1) + eta3
        mults = fn2 * eta2 * (fz + eta3) + eta3 * eta4
        return CostReport(Fr(adds), Fr(mults), ctx)
    if arch.upper() != "RE":
        raise ValueError(f"unknown architecture {arch}")
    sizes = sizes or RE_SIZES
    fn2, fn3 = sizes["filters"]
    eta4, eta5 = sizes["hidden"]
    eta6 = output_len
    eta3f = conv_len(fn2 * eta2, fz, STRIDE)
    conv_a = fn2 * eta2 * (fz + 1) + fn3 * eta3f * (fz + 1)
    conv_m = fn2 * eta2 * fz + fn3 * eta3f * fz
    ffl_a = eta5 * (eta4 + 1) + eta6 * (eta5 + 1)
    ffl_m = eta5 * eta4 + eta6 * eta5
    adds = conv_a + ffl_a + eta4 * (fn3 * eta3f + 1)
    mults = conv_m + ffl_m + fn3 * eta3f * eta4
    return CostReport(Fr(adds), Fr(mults), ctx)


def estimator_cost(stage, pair_type, M, L, spans, sizes=None) -> CostReport:
    """Input generation plus network inference for one stage."""
    from irs_isac.features import input_length, target_length

    arch = "DE" if stage == 1 else "RE"
    n_in = input_length(stage, pair_type, M, L, spans)
    n_out = target_length(stage, M, L)
    total = input_gen_cost(stage, pair_type, M, L, spans) + cnn_cost(arch, n_in, n_out, sizes)
    total.context.update(op="dl", stage=stage, pair=pair_type)
    return total


def ls_cost(stage, M, L, spans) -> CostReport:
    """The least-squares baseline costs what the type-2 input generation costs."""
    rep = input_gen_cost(stage, 2, M, L, spans)
    return CostReport(rep.adds, rep.mults, {**rep.context, "op": "ls"})


def fmt(x: Fr) -> str:
    return repr(float(x))


def cost_sweep(Ms, Ls, C_s1=1):
    """Rows ``(context, M, L, adds, mults)`` for every estimator over the grid."""
    rows = []
    for M in Ms:
        for L in Ls:
            spans = (C_s1, L, L)
            for stage in (1, 2, 3):
                rows.append((f"LS-S{stage}", M, L, ls_cost(stage, M, L, spans)))
                for pair in (1, 2):
                    rows.append((f"DL-S{stage}I{pair}", M, L,
                                 estimator_cost(stage, pair, M, L, spans)))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["context", "M", "L", "adds", "mults"])
    for ctx, M, L, rep in rows:
        w.writerow([ctx, M, L, fmt(rep.adds), fmt(rep.mults)])
    return buf.getvalue()
