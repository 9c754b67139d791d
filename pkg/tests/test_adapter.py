import numpy as np
import pytest

from topoprior.adapter import (
    AdapterConfig,
    BaseForecastCache,
    TopologyAdapter,
    adapter_forward,
    assemble_adapter_data,
    build_base_cache,
    train_adapter,
)
from topoprior.corpus import SeriesCorpus, WindowSpec, slice_windows
from topoprior.errors import ConfigError, ContractViolation
from topoprior.nn import huber_quantile_loss

H = 6
CFG = AdapterConfig(horizon=H)


def random_inputs(rng, batch=4):
    return (
        rng.standard_normal((batch, 125)),
        rng.standard_normal((batch, 256)),
        rng.standard_normal((batch, 4)),
        rng.standard_normal((batch, H)),
    )


class TestResidualIdentity:
    def test_zero_init_returns_base_exactly(self):
        rng = np.random.default_rng(0)
        adapter = TopologyAdapter(CFG, variant="tda+sheaf", seed=1)
        tda, sheaf, ctx, base = random_inputs(rng, batch=16)
        out = adapter_forward(adapter, tda, sheaf, ctx, base)
        assert np.array_equal(out, np.broadcast_to(base[..., None], (16, H, 9)))

    def test_zero_base_gives_residual_alone(self):
        rng = np.random.default_rng(1)
        adapter = TopologyAdapter(CFG, variant="tda+sheaf", seed=1)
        # move the final layer off zero so the residual is visible
        adapter.output_mlp.layers[-1].w.value += 0.01
        tda, sheaf, ctx, _ = random_inputs(rng)
        base = np.zeros((4, H))
        out = adapter_forward(adapter, tda, sheaf, ctx, base)
        assert not np.allclose(out, 0.0)

    def test_sheaf_input_perturbation_changes_output(self):
        rng = np.random.default_rng(2)
        adapter = TopologyAdapter(CFG, variant="tda+sheaf", seed=1)
        adapter.output_mlp.layers[-1].w.value += 0.01
        tda, sheaf, ctx, base = random_inputs(rng)
        out1 = adapter_forward(adapter, tda, sheaf, ctx, base)
        out2 = adapter_forward(adapter, tda, sheaf + 0.5, ctx, base)
        assert not np.allclose(out1, out2)

    def test_disabled_sheaf_ignores_input(self):
        rng = np.random.default_rng(3)
        adapter = TopologyAdapter(CFG, variant="tda", seed=1)
        adapter.output_mlp.layers[-1].w.value += 0.01
        tda, sheaf, ctx, base = random_inputs(rng)
        out1 = adapter_forward(adapter, tda, sheaf, ctx, base)
        out2 = adapter_forward(adapter, tda, sheaf + 9.0, ctx, base)
        assert np.array_equal(out1, out2)


class TestBranchIsolation:
    def test_disabled_branch_gets_no_gradient(self):
        rng = np.random.default_rng(4)
        adapter = TopologyAdapter(CFG, variant="vanilla", seed=1)
        tda, sheaf, ctx, base = random_inputs(rng)
        target = rng.standard_normal((4, H))
        adapter.zero_grad()
        pred = adapter.forward(tda, sheaf, ctx, base, training=True)
        _, grad = huber_quantile_loss(pred, target)
        adapter.backward(grad)
        for p in adapter.tda_branch.parameters() + adapter.sheaf_branch.parameters():
            assert np.all(p.grad == 0.0), p.name
        # first training step leaves only fc2 off zero; second step moves the rest
        assert any(np.any(p.grad != 0.0) for p in adapter.output_mlp.parameters())

    def test_output_mlp_identical_shapes_across_variants(self):
        shapes = {
            v: TopologyAdapter(CFG, variant=v, seed=0).output_mlp_shapes()
            for v in ("vanilla", "tda", "tda+sheaf")
        }
        assert shapes["vanilla"] == shapes["tda"] == shapes["tda+sheaf"]


def periodic_corpus(n=4, t=24, period=6):
    time = np.arange(t)
    values = np.vstack([np.sin(2 * np.pi * (time + i) / period) for i in range(n)])
    return SeriesCorpus(values=values, series_ids=[f"s{i}" for i in range(n)])


def linear_corpus(n=3, t=20):
    time = np.arange(t, dtype=float)
    values = np.vstack([2.0 * time + i for i in range(n)])
    return SeriesCorpus(values=values, series_ids=[f"s{i}" for i in range(n)])


class TestBaseCacheProviders:
    def test_seasonal_naive_exact_on_periodic(self):
        corpus = periodic_corpus()
        ws = slice_windows(corpus, WindowSpec(context_len=6, horizon=6, stride=6))
        cache = build_base_cache(corpus, ws.all(), provider="seasonal_naive", period=6)
        for w in ws.all():
            fc = cache.get(corpus.series_ids[w.series], w.tgt_start)
            assert np.allclose(fc, w.target(corpus.values), atol=1e-12)

    def test_drift_exact_on_linear(self):
        corpus = linear_corpus()
        ws = slice_windows(corpus, WindowSpec(context_len=8, horizon=4, stride=4))
        cache = build_base_cache(corpus, ws.all(), provider="drift")
        for w in ws.all():
            fc = cache.get(corpus.series_ids[w.series], w.tgt_start)
            assert np.allclose(fc, w.target(corpus.values), atol=1e-9)

    def test_seasonal_naive_needs_history(self):
        corpus = periodic_corpus()
        ws = slice_windows(corpus, WindowSpec(context_len=6, horizon=6, stride=6))
        with pytest.raises(ConfigError):
            build_base_cache(corpus, ws.all(), provider="seasonal_naive", period=50)

    def test_external_round_trip(self, tmp_path):
        corpus = linear_corpus()
        ws = slice_windows(corpus, WindowSpec(context_len=8, horizon=4, stride=4))
        cache = build_base_cache(corpus, ws.all(), provider="drift")
        path = tmp_path / "base.csv"
        cache.write_csv(path)
        loaded = BaseForecastCache.read_csv(path)
        assert loaded.horizon == cache.horizon
        assert set(loaded.entries) == set(cache.entries)
        for key in cache.entries:
            assert np.allclose(loaded.entries[key], cache.entries[key])

    def test_external_coverage_gap(self, tmp_path):
        path = tmp_path / "partial.csv"
        path.write_text(
            "series_id,window_id,h,value\ns0,8,0,1.0\ns0,8,1,2.0\ns0,8,3,4.0\n"
        )
        with pytest.raises(ConfigError, match="coverage"):
            BaseForecastCache.read_csv(path)

    def test_unknown_provider(self):
        corpus = linear_corpus()
        ws = slice_windows(corpus, WindowSpec(context_len=8, horizon=4, stride=4))
        with pytest.raises(ConfigError):
            build_base_cache(corpus, ws.all(), provider="oracle")


def training_setup(seed=0):
    rng = np.random.default_rng(seed)
    n, t = 6, 40
    values = rng.standard_normal((n, t)).cumsum(axis=1)
    corpus = SeriesCorpus(values=values, series_ids=[f"s{i}" for i in range(n)])
    ws = slice_windows(corpus, WindowSpec(context_len=8, horizon=H, stride=4))
    cache = build_base_cache(corpus, ws.all(), provider="drift")
    tda = rng.standard_normal((n, 125))
    sheaf = rng.standard_normal((n, 256))
    stats = rng.standard_normal((n, 4))
    train = assemble_adapter_data(corpus, ws.train, cache, tda, sheaf, stats)
    val = assemble_adapter_data(corpus, ws.val, cache, tda, sheaf, stats)
    return cache, train, val


class TestTrainAdapter:
    def test_zero_epochs_equals_base(self):
        cache, train, val = training_setup()
        cfg = AdapterConfig(horizon=H, epochs=0)
        result = train_adapter(cache, train, val, cfg, "tda+sheaf", seed=0)
        pred = result.adapter.forward(val.tda, val.sheaf, val.ctx, val.base)
        assert np.array_equal(pred, np.broadcast_to(val.base[..., None], pred.shape))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_first_epochs_reduce_loss(self, seed):
        cache, train, val = training_setup(seed=seed)
        cfg = AdapterConfig(horizon=H, epochs=3, lr=1e-3, batch_size=16)
        result = train_adapter(cache, train, val, cfg, "tda+sheaf", seed=seed)
        losses = [e["train_loss"] for e in result.log]
        assert losses[-1] < losses[0]

    def test_cache_immutability_enforced(self):
        cache, train, val = training_setup()
        digest = cache.digest()
        cfg = AdapterConfig(horizon=H, epochs=1)
        train_adapter(cache, train, val, cfg, "vanilla", seed=0)
        assert cache.digest() == digest

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            TopologyAdapter(CFG, variant="everything")
