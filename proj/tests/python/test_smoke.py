"""End-to-end checks that the compiled python module exposes working, sane APIs."""

import numpy as np
import pytest

import xferlab


def rng():
    return np.random.default_rng(12345)


def test_mlp_shapes_and_determinism():
    f = xferlab.Mlp.random(4, 6, 3, seed=7)
    assert f.in_dim == 4
    assert f.out_dim == 3
    assert f.hidden_dim == 6

    x = rng().normal(size=4)
    y = f.forward(x)
    assert y.shape == (3,)
    jac = f.jacobian(x)
    assert jac.shape == (4, 3)

    again = xferlab.Mlp.random(4, 6, 3, seed=7)
    assert np.array_equal(again.forward(x), y)

    back = xferlab.Mlp.from_json(f.to_json())
    assert np.array_equal(back.forward(x), y)


def test_jacobian_against_finite_differences():
    f = xferlab.Mlp.random(3, 5, 2, seed=11)
    x = rng().normal(size=3)
    jac = f.jacobian(x)
    step = 1e-6
    for i in range(3):
        hi, lo = x.copy(), x.copy()
        hi[i] += step
        lo[i] -= step
        approx = (f.forward(hi) - f.forward(lo)) / (2 * step)
        assert np.allclose(jac[i], approx, atol=1e-6)


def test_dataset_generation_and_training():
    x, y = xferlab.make_dataset(n=3, rbf_count=5, d=2, mixture_k=3, count=40, seed=5)
    assert x.shape == (40, 3)
    assert y.shape == (40, 2)

    model, losses = xferlab.train_mlp(x, y, width=8, lr=0.5, epochs=50, seed=6)
    assert model.in_dim == 3
    assert model.out_dim == 2
    assert len(losses) == 51
    assert losses[-1] <= losses[0]
    assert np.all(np.diff(losses) <= 1e-12)


def test_self_transfer_is_perfect():
    f = xferlab.Mlp.random(4, 5, 2, seed=21)
    x = rng().normal(size=(15, 4))
    assert xferlab.alpha1(f, f, x) == pytest.approx(1.0, abs=1e-9)
    assert xferlab.alpha2(f, f, x) == pytest.approx(
        xferlab.alpha1_alpha2(f, f, x), abs=1e-12
    )
    assert xferlab.grad_match(f, f, x) <= 1e-8
    assert xferlab.func_match(f, f, x) <= 1e-9


def test_transfer_metrics_ranges_and_weighted_metric():
    f1 = xferlab.Mlp.random(4, 5, 2, seed=31)
    f2 = xferlab.Mlp.random(4, 5, 3, seed=32)
    x = rng().normal(size=(12, 4))
    h1 = np.diag([1.0, 2.0])
    a1 = xferlab.alpha1(f1, f2, x, h1=h1)
    a2 = xferlab.alpha2(f1, f2, x, h1=h1)
    pair = xferlab.alpha2_pairwise(f1, f2, x, h1=h1)
    for v in (a1, a2):
        assert -1e-9 <= v <= 1 + 1e-9
    assert a2 == pytest.approx(pair, abs=1e-9)

    fin, clipped = xferlab.alpha1_finite(f1, f2, x, eps=1e-3, steps=20, seed=3)
    assert -1e-9 <= fin <= 1 + 1e-9
    assert clipped >= 0


def test_attack_spectrum_and_pgd():
    f = xferlab.Mlp.random(5, 6, 2, seed=41)
    x = rng().normal(size=5)
    sigma, deltas = xferlab.attack_spectrum(f, x)
    assert sigma.shape == (5,)
    assert deltas.shape == (5, 5)
    assert np.all(np.diff(sigma) <= 1e-12)
    assert np.allclose(deltas.T @ deltas, np.eye(5), atol=1e-9)

    delta = xferlab.pgd_attack(f, x, eps=1e-3, steps=20, seed=2)
    assert delta.shape == (5,)
    assert np.linalg.norm(delta) == pytest.approx(1e-3, abs=1e-9)


def test_knowledge_and_report():
    f1 = xferlab.Mlp.random(3, 5, 2, seed=51)
    f2 = xferlab.Mlp.random(3, 5, 2, seed=52)
    x = rng().normal(size=(20, 3))
    y = rng().normal(size=(20, 2))
    kd = xferlab.knowledge_dist(f2, x, y)
    assert kd >= 0.0

    report = xferlab.compute_report(f1, f2, x, y=y, direction="ts")
    for key in ("alpha1", "alpha2", "alpha1x2", "grad_match", "func_match", "knowledge_dist"):
        assert key in report
    assert report["direction"] == "ts"
    assert report["knowledge_dist"] == pytest.approx(kd, abs=1e-12)

    bound = xferlab.surrogate_bound(f2, f1, x, y)
    assert bound["holds"]


def test_run_verify_quick():
    report = xferlab.run_verify(trials=2, seed=99)
    assert report["ok"]
    names = [s["name"] for s in report["suites"]]
    assert "grad-identity" in names
    assert "pinv" in names

    single = xferlab.run_verify(only="appendix-a", seed=99)
    assert [s["name"] for s in single["suites"]] == ["sign-example"]
    assert single["ok"]


def test_spearman():
    assert xferlab.spearman([1.0, 2.0, 3.0], [10.0, 20.0, 30.0]) == pytest.approx(1.0)
    assert xferlab.spearman([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(-1.0)


def test_error_mapping():
    f = xferlab.Mlp.random(3, 4, 2, seed=61)
    with pytest.raises(ValueError):
        f.forward(np.zeros(5))
    with pytest.raises(ValueError):
        xferlab.alpha1(f, f, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        xferlab.run_verify(only="nope")
