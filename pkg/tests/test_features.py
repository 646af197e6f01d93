import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_isac.airsim import StageObservation, observe_all
from irs_isac.channels import ChannelRealization, realize
from irs_isac.features import (augment, build_input, build_target, input_length,
                               make_dataset, merge_ri, postprocess, read_dataset,
                               split_ri, standardize_apply, standardize_fit, target_length,
                               unvec, vec, write_dataset)
from irs_isac.protocol import SystemConfig, build_plan
from conftest import crand


def test_vec_is_column_major():
    a = np.array([[1, 2, 3], [4, 5, 6]])
    assert list(vec(a)) == [1, 4, 2, 5, 3, 6]
    assert np.array_equal(unvec(vec(a), 2, 3), a)
    z = np.array([1 + 2j, 3 - 4j])
    assert list(split_ri(z)) == [1, 3, 2, -4]
    with pytest.raises(ValueError):
        merge_ri(np.ones(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 12), st.integers(1, 6), st.integers(1, 12),
       st.integers(1, 12))
def test_input_lengths(M, L, c1, c2, c3):
    spans = (c1, c2, c3)
    assert input_length(1, 1, M, L, spans) == 4 * M * c1
    assert input_length(1, 2, M, L, spans) == 4 * M
    assert input_length(2, 1, M, L, spans) == 2 * M * (c2 + 1)
    assert input_length(2, 2, M, L, spans) == 2 * M * L
    assert input_length(3, 1, M, L, spans) == 2 * M * (c3 + L + 2)
    assert input_length(3, 2, M, L, spans) == 2 * M * L
    assert target_length(1, M, L) == 4 * M
    assert target_length(3, M, L) == 2 * M * L


def test_build_input_lengths_on_real_observations(cfg, plan, chans, rng):
    obs = observe_all(cfg, plan, chans, 10.0, rng)
    b, f, Gu = chans.b, chans.f, chans.Gu
    assert build_input(1, 1, obs[0]).shape == (16,)
    assert build_input(1, 2, obs[0], plan).shape == (16,)
    assert build_input(2, 1, obs[1], f_hat=f).shape == (input_length(2, 1, 4, 8, cfg.spans),)
    assert build_input(2, 2, obs[1], plan, f_hat=f).shape == (64,)
    assert build_input(3, 1, obs[2], b_hat=b, f_hat=f, Gu_hat=Gu).shape == (144,)
    assert build_input(3, 2, obs[2], plan, b_hat=b, f_hat=f, Gu_hat=Gu).shape == (64,)
    with pytest.raises(ValueError):
        build_input(1, 3, obs[0], plan)


def test_build_input_order_and_zero(cfg, plan, chans, rng):
    obs = observe_all(cfg, plan, chans, 10.0, rng)[2]
    x = build_input(3, 1, obs, b_hat=chans.b, f_hat=chans.f, Gu_hat=chans.Gu)
    z = np.concatenate([np.concatenate([y.ravel() for y in obs.y]), chans.f.ravel(),
                        chans.b.ravel(), chans.Gu.ravel(order="F")])
    assert np.array_equal(x, np.concatenate([z.real, z.imag]))
    zero_obs = StageObservation(1, [np.zeros((1, 8), complex)], 0.0)
    assert not np.any(build_input(1, 1, zero_obs))


def test_target_round_trip(cfg, chans):
    for stage in (1, 2, 3):
        t = build_target(stage, chans)
        assert t.shape == (target_length(stage, 4, 8),)
        out = postprocess(t * cfg.delta, stage, 4, 8, cfg.delta)
        if stage == 1:
            assert out[0].shape == (4, 1) and out[1].shape == (1, 4)
            assert np.max(np.abs(out[0] - chans.b)) <= 1e-12 * np.abs(chans.b).max()
            assert np.max(np.abs(out[1] - chans.f)) <= 1e-12 * np.abs(chans.f).max()
        else:
            truth = chans.Gu if stage == 2 else chans.Gt
            assert np.max(np.abs(out - truth)) <= 1e-12 * np.abs(truth).max()
    exact = postprocess(build_target(2, chans), 2, 4, 8)
    assert np.max(np.abs(exact - chans.Gu)) <= 1e-15 * np.abs(chans.Gu).max()
    with pytest.raises(ValueError):
        postprocess(np.zeros(5), 1, 4, 8)


def test_zero_channel_target(chans):
    zero = ChannelRealization(**{k: 0 * getattr(chans, k)
                                 for k in ("b", "f", "A", "g", "H", "h", "Gt", "Gu")})
    for stage in (1, 2, 3):
        assert not np.any(build_target(stage, zero))


def test_augment_basic(cfg, chans, rng):
    assert augment(chans, cfg, rng, 1) == [chans]
    out = augment(chans, cfg, rng, 4)
    assert len(out) == 4 and out[0] is chans
    for copy in out[1:]:
        for name in ("b", "f", "Gt", "Gu"):
            assert np.all(getattr(copy, name) != getattr(chans, name))
        assert copy.A is chans.A and copy.H is chans.H
    with pytest.raises(ValueError):
        augment(chans, cfg, rng, 0)


def augmentation_snr_db(cfg, chans, n_copies, seed):
    copies = augment(chans, cfg, np.random.default_rng(seed), n_copies + 1)[1:]
    result = {}
    for name, m in chans.sac().items():
        p_ch = np.mean(np.abs(m) ** 2)
        noise = np.mean([np.mean(np.abs(c.sac()[name] - m) ** 2) for c in copies])
        result[name] = 10 * np.log10(p_ch / noise)
    return result


def test_augmentation_snr(cfg, chans):
    for name, snr in augmentation_snr_db(cfg, chans, 10_000, 3).items():
        assert abs(snr - 30.0) <= 1.0, name


def test_standardize():
    rng = np.random.default_rng(0)
    X = rng.normal(3.0, [1e-3, 5.0, 40.0], size=(500, 3))
    mean, std = standardize_fit(X)
    Z = standardize_apply(X, mean, std)
    assert np.max(np.abs(Z.mean(axis=0))) <= 1e-10
    assert np.max(np.abs(Z.std(axis=0) - 1)) <= 1e-6
    m2, s2 = standardize_fit(Z)
    assert np.allclose(standardize_apply(Z, m2, s2), Z, atol=1e-12)
    const = np.ones((10, 2))
    _, s = standardize_fit(const)
    assert np.all(s == 1e-12)
    assert np.isclose(1e-4 * SystemConfig().delta, 1.0)


@pytest.mark.parametrize("stage,pair", [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)])
def test_make_dataset_shapes(stage, pair):
    cfg = SystemConfig(M=2, L=4)
    ds = make_dataset(stage, pair, cfg, [10.0, 20.0], 3, 2, 7)
    assert len(ds) == 6 and len(ds.pairs) == 6
    assert ds.inputs.shape[1] == input_length(stage, pair, 2, 4, cfg.spans)
    assert ds.targets.shape[1] == target_length(stage, 2, 4)
    assert list(ds.snr_db) == [10, 10, 20, 20, 10, 10]
    # every augmented copy of an original carries the original's target
    assert np.array_equal(ds.targets[0], ds.targets[1])


def test_make_dataset_counts_and_determinism(cfg):
    a = make_dataset(1, 2, cfg, 10.0, 10, 10, 42)
    b = make_dataset(1, 2, cfg, 10.0, 10, 10, 42)
    c = make_dataset(1, 2, cfg, 10.0, 10, 10, 43)
    assert len(a) == 100
    assert a.inputs.tobytes() == b.inputs.tobytes()
    assert a.targets.tobytes() == b.targets.tobytes()
    assert not np.array_equal(a.inputs, c.inputs)


def test_make_dataset_prefix_stable(cfg):
    small = make_dataset(2, 2, cfg, 10.0, 3, 2, 9)
    big = make_dataset(2, 2, cfg, 10.0, 5, 2, 9)
    assert np.array_equal(small.inputs, big.inputs[:6])


def test_dataset_file_round_trip(tmp_path, cfg):
    ds = make_dataset(1, 1, cfg, 15.0, 4, 3, 1)
    write_dataset(tmp_path / "a.ds", ds)
    back = read_dataset(tmp_path / "a.ds")
    assert np.array_equal(back.inputs, ds.inputs) and back.input_mean is None
    ds.input_mean, ds.input_std = standardize_fit(ds.inputs)
    write_dataset(tmp_path / "b.ds", ds)
    back = read_dataset(tmp_path / "b.ds")
    assert np.array_equal(back.input_std, ds.input_std)
    assert back.delta == ds.delta and (back.v_count, back.u_count) == (4, 3)
    raw = (tmp_path / "b.ds").read_bytes()
    (tmp_path / "c.ds").write_bytes(raw[:100])
    with pytest.raises(ValueError):
        read_dataset(tmp_path / "c.ds")
    (tmp_path / "d.ds").write_bytes(b"garbage" + raw[7:])
    with pytest.raises(ValueError):
        read_dataset(tmp_path / "d.ds")
