"""End-to-end pipeline steps shared by the CLI and the experiment harness.

Each step reads upstream artifacts from the output directory, writes its own
versioned artifact, and is deterministic given (config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ablation import config_digest, rand_tda, shuffle_tda
from .adapter import (
    AdapterConfig,
    BaseForecastCache,
    assemble_adapter_data,
    build_base_cache,
    train_adapter,
)
from .artifacts import (
    artifact_meta,
    config_hash,
    read_json_artifact,
    read_text_artifact,
    write_json_artifact,
    write_text_artifact,
)
from .backbone import (
    BackboneConfig,
    TrainSpec,
    WindowBatch,
    assemble_windows,
    forecast,
    train_backbone,
)
from .corpus import (
    IngestionConfig,
    SeriesCorpus,
    WindowSpec,
    context_stats_matrix,
    load_wide_csv,
    slice_windows,
    zscore_per_series,
)
from .errors import ConfigError
from .evaluation import metrics, pinball_loss
from .landscape import FINGERPRINT_DIM, Fingerprint, fingerprint
from .manifold import correlation_distance_graph
from .nn.checkpoint import save_checkpoint
from .nn.losses import QUANTILES
from .persistence import PersistenceDiagram, build_vr_filtration, compute_persistence
from .screening import screen
from .sheaf import SheafCoordinates, spectral_coordinates
from .synthetic import ar1_corpus, cold_start_corpus, planted_topology_corpus

MEDIAN_INDEX = QUANTILES.index(0.5)


# ---------------------------------------------------------------- corpus


def load_corpus(cfg: dict):
    ds = cfg["dataset"]
    kind = ds["kind"]
    if kind == "csv":
        if not ds.get("path"):
            raise ConfigError("dataset.kind=csv needs dataset.path")
        ingest = IngestionConfig(
            group_column=ds.get("group_column"),
            reject_fraction=ds.get("reject_fraction", 0.5),
        )
        return load_wide_csv(ds["path"], ingest)
    if kind == "planted_topology":
        return (
            planted_topology_corpus(
                n_ring=ds["n_ring"], n_cluster=ds["n_cluster"], t=ds["t"],
                period=ds["period"], noise=ds["noise"], seed=ds["seed"],
            ),
            None,
        )
    if kind == "cold_start":
        return (
            cold_start_corpus(
                n_per_cluster=ds["n_per_cluster"], t=ds["t"], period=ds["period"],
                levels=tuple(ds["levels"]), noise=ds["noise"], seed=ds["seed"],
            ),
            None,
        )
    if kind == "ar1":
        return ar1_corpus(t=ds["t"], seed=ds["seed"]), None
    raise ConfigError(f"unknown dataset kind {kind!r}")


def normalize_corpus(corpus: SeriesCorpus, cfg: dict) -> SeriesCorpus:
    mode = cfg["dataset"].get("normalize", "per_series")
    if mode == "per_series":
        return zscore_per_series(corpus)
    if mode == "none":
        return corpus
    raise ConfigError(f"unknown normalize mode {mode!r}")


def manifold_k(cfg: dict) -> int | None:
    k = cfg["manifold"].get("k", 0)
    return None if not k else int(k)


def window_spec(cfg: dict, mode: str = "standard") -> WindowSpec:
    w = cfg["windows"]
    return WindowSpec(
        context_len=w["context_len"],
        horizon=w["horizon"],
        stride=w["stride"],
        mode=mode,
        train_frac=w["train_frac"],
        val_frac=w["val_frac"],
        cold_start_weeks=tuple(w.get("cold_start_weeks", (0, 1, 2, 3))),
    )


# ---------------------------------------------------------------- fingerprints


@dataclass
class FingerprintBundle:
    global_diagram: PersistenceDiagram
    global_fp: Fingerprint
    by_group: dict[str, Fingerprint]
    matrix: np.ndarray  # (N, 125) per-series fingerprint rows


def fingerprint_bundle(corpus: SeriesCorpus, k: int | None = None,
                       per_group: bool = False) -> FingerprintBundle:
    """Population diagram and fingerprint, optionally one fingerprint per group.

    The global diagram always comes from the full (possibly kNN-sparsified)
    manifold; group fingerprints use dense subgraphs, which stay small.
    """
    graph = correlation_distance_graph(corpus, k=k)
    global_diagram = compute_persistence(build_vr_filtration(graph))
    global_fp = fingerprint(global_diagram)
    by_group: dict[str, Fingerprint] = {}
    matrix = np.tile(global_fp.values, (corpus.n, 1))
    if per_group:
        if corpus.group_labels is None:
            raise ConfigError("fingerprint.per_group needs corpus group labels")
        for label in sorted(set(corpus.group_labels)):
            rows = [i for i, g in enumerate(corpus.group_labels) if g == label]
            sub = SeriesCorpus(
                values=corpus.values[rows],
                series_ids=[corpus.series_ids[i] for i in rows],
                time_index=corpus.time_index.copy(),
            )
            sub_graph = correlation_distance_graph(sub)
            fp = fingerprint(compute_persistence(build_vr_filtration(sub_graph)))
            by_group[label] = fp
            matrix[rows] = fp.values
    else:
        by_group["global"] = global_fp
    return FingerprintBundle(
        global_diagram=global_diagram,
        global_fp=global_fp,
        by_group=by_group,
        matrix=matrix,
    )


# ---------------------------------------------------------------- steps


def _meta(cfg: dict, seed: int) -> dict:
    return artifact_meta(config_hash(cfg), seed)


def run_fingerprint(cfg: dict, seed: int, outdir: Path) -> dict:
    outdir = Path(outdir)
    corpus, report = load_corpus(cfg)
    normed = normalize_corpus(corpus, cfg)
    meta = _meta(cfg, seed)
    write_json_artifact(
        outdir / "corpus_summary.json",
        meta,
        {
            **normed.summary(),
            "rejected_ids": report.rejected_ids if report else [],
        },
    )
    k = manifold_k(cfg)
    graph = correlation_distance_graph(normed, k=k)
    write_text_artifact(outdir / "graph.jsonl", meta, graph.to_jsonl())
    bundle = fingerprint_bundle(normed, k=k, per_group=cfg["fingerprint"]["per_group"])
    write_json_artifact(
        outdir / "diagram.json", meta, {"diagram": json.loads(bundle.global_diagram.to_json())}
    )
    write_json_artifact(
        outdir / "fingerprint.json", meta, json.loads(bundle.global_fp.to_json())
    )
    write_json_artifact(
        outdir / "fingerprints_by_group.json",
        meta,
        {"groups": {g: json.loads(fp.to_json()) for g, fp in bundle.by_group.items()}},
    )
    return {"n": normed.n, "fingerprint_dim": int(bundle.global_fp.values.size)}


def run_sheaf(cfg: dict, seed: int, outdir: Path) -> dict:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    normed = normalize_corpus(corpus, cfg)
    groups = normed.group_labels if cfg["sheaf"]["per_group"] else None
    if cfg["sheaf"]["per_group"] and groups is None:
        raise ConfigError("sheaf.per_group needs corpus group labels")
    coords = spectral_coordinates(normed, groups=groups)
    meta = _meta(cfg, seed)
    body = "\n".join(",".join(repr(float(v)) for v in row) for row in coords.coords)
    write_text_artifact(outdir / "sheaf_coords.csv", meta, body)
    write_json_artifact(
        outdir / "sheaf.json", meta, {**coords.header(), "matrix_file": "sheaf_coords.csv"}
    )
    return coords.header()


def read_sheaf_coords(outdir: Path, n: int) -> np.ndarray:
    _, body = read_text_artifact(Path(outdir) / "sheaf_coords.csv", produced_by="sheaf")
    rows = [[float(v) for v in line.split(",")] for line in body.strip().splitlines()]
    coords = np.array(rows)
    if coords.shape[0] != n:
        raise ConfigError(f"sheaf artifact has {coords.shape[0]} rows, corpus has {n}")
    return coords


def read_diagram(outdir: Path) -> PersistenceDiagram:
    obj = read_json_artifact(Path(outdir) / "diagram.json", produced_by="fingerprint")
    return PersistenceDiagram.from_json(json.dumps(obj["diagram"]))


def read_fingerprint_matrix(outdir: Path, corpus: SeriesCorpus) -> np.ndarray:
    obj = read_json_artifact(
        Path(outdir) / "fingerprints_by_group.json", produced_by="fingerprint"
    )
    groups = {g: np.array(rec["values"]) for g, rec in obj["groups"].items()}
    if set(groups) == {"global"}:
        return np.tile(groups["global"], (corpus.n, 1))
    if corpus.group_labels is None:
        raise ConfigError("per-group fingerprints but the corpus has no group labels")
    missing = sorted(set(corpus.group_labels) - set(groups))
    if missing:
        raise ConfigError(f"fingerprint artifact lacks groups {missing}")
    return np.vstack([groups[g] for g in corpus.group_labels])


def group_fingerprint_map(outdir: Path) -> dict[str, np.ndarray]:
    obj = read_json_artifact(
        Path(outdir) / "fingerprints_by_group.json", produced_by="fingerprint"
    )
    return {g: np.array(rec["values"]) for g, rec in obj["groups"].items()}


def run_screen(cfg: dict, seed: int, outdir: Path) -> str:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    diagram = read_diagram(outdir)
    sc = cfg["screening"]
    report = screen(
        diagram,
        n=corpus.n,
        floor=sc["floor"],
        sparse_threshold=sc["sparse_threshold"],
        rich_threshold=sc["rich_threshold"],
    )
    write_json_artifact(outdir / "screening.json", _meta(cfg, seed), json.loads(report.to_json()))
    return report.table_row(label=cfg["dataset"]["kind"])


def run_build_cache(cfg: dict, seed: int, outdir: Path) -> dict:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    normed = normalize_corpus(corpus, cfg)
    windows = slice_windows(normed, window_spec(cfg)).all()
    cache_cfg = cfg["cache"]
    cache = build_base_cache(
        normed,
        windows,
        provider=cache_cfg["provider"],
        period=cache_cfg.get("period"),
        path=cache_cfg.get("path"),
    )
    cache.write_csv(outdir / "base_cache.csv")
    write_json_artifact(
        outdir / "base_cache.json",
        _meta(cfg, seed),
        {
            "provider": cache.provider,
            "horizon": cache.horizon,
            "entries": len(cache.entries),
            "cache_file": "base_cache.csv",
        },
    )
    return {"provider": cache.provider, "entries": len(cache.entries)}


def read_cache(outdir: Path) -> BaseForecastCache:
    obj = read_json_artifact(Path(outdir) / "base_cache.json", produced_by="build-cache")
    cache = BaseForecastCache.read_csv(Path(outdir) / obj["cache_file"], provider=obj["provider"])
    return cache


def _denormalize(values: np.ndarray, corpus: SeriesCorpus, rows: np.ndarray) -> np.ndarray:
    if corpus.norm_mean is None:
        return values
    std = corpus.norm_std[rows]
    mean = corpus.norm_mean[rows]
    return values * std.reshape(std.shape + (1,) * (values.ndim - 1)) + mean.reshape(
        mean.shape + (1,) * (values.ndim - 1)
    )


def _forecast_slice(pred_q: np.ndarray, targets: np.ndarray, corpus: SeriesCorpus,
                    rows: np.ndarray) -> dict:
    median = pred_q[..., MEDIAN_INDEX]
    return {
        "quantiles_norm": pred_q.tolist(),
        "targets_norm": targets.tolist(),
        "median_actual": _denormalize(median, corpus, rows).tolist(),
        "targets_actual": _denormalize(targets, corpus, rows).tolist(),
    }


def run_adapt(cfg: dict, seed: int, outdir: Path, variant: str) -> dict:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    normed = normalize_corpus(corpus, cfg)
    ws = slice_windows(normed, window_spec(cfg))
    cache = read_cache(outdir)
    stats = context_stats_matrix(normed)
    sheaf_coords = (
        read_sheaf_coords(outdir, normed.n)
        if "sheaf" in variant
        else np.zeros((normed.n, 256))
    )
    tda_matrix = (
        read_fingerprint_matrix(outdir, normed)
        if "tda" in variant
        else np.zeros((normed.n, FINGERPRINT_DIM))
    )
    a = cfg["adapter"]
    adapter_cfg = AdapterConfig(
        horizon=cfg["windows"]["horizon"],
        hidden_dim=a["hidden_dim"],
        lr=a["lr"],
        weight_decay=a["weight_decay"],
        epochs=a["epochs"],
        batch_size=a["batch_size"],
    )
    train = assemble_adapter_data(normed, ws.train, cache, tda_matrix, sheaf_coords, stats)
    val = assemble_adapter_data(normed, ws.val, cache, tda_matrix, sheaf_coords, stats) if ws.val else None
    result = train_adapter(cache, train, val, adapter_cfg, variant, seed=seed)
    meta = _meta(cfg, seed)
    tag = variant.replace("+", "_")
    save_checkpoint(
        outdir / f"adapter_{tag}.ckpt.json",
        result.adapter.named_parameters(),
        optimizer_state=result.optimizer_state,
        rng_state=result.rng_state,
        meta=meta,
    )
    write_text_artifact(
        outdir / f"adapter_{tag}_log.jsonl",
        meta,
        "\n".join(json.dumps(e, sort_keys=True) for e in result.log),
    )
    slices = {}
    for name, wins in (("val", ws.val), ("test", ws.test)):
        if not wins:
            continue
        data = assemble_adapter_data(normed, wins, cache, tda_matrix, sheaf_coords, stats)
        pred = result.adapter.forward(data.tda, data.sheaf, data.ctx, data.base)
        slices[name] = _forecast_slice(pred, data.targets, normed, data.series_rows)
    write_json_artifact(
        outdir / f"forecasts_adapter_{tag}.json",
        meta,
        {"variant": variant, "model": "adapter", "slices": slices},
    )
    return {"variant": variant, "final_val_loss": result.final_val_loss()}


def _backbone_config(cfg: dict) -> BackboneConfig:
    b = cfg["backbone"]
    return BackboneConfig(
        context_len=cfg["windows"]["context_len"],
        horizon=cfg["windows"]["horizon"],
        d_model=b["d_model"],
        layers=b["layers"],
        heads=b["heads"],
        head_dim=b["head_dim"],
        ffn_dim=b["ffn_dim"],
        dropout=b["dropout"],
        temporal_periods=tuple(b["temporal_periods"]),
    )


def run_train_backbone(cfg: dict, seed: int, outdir: Path, variant: str) -> dict:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    normed = normalize_corpus(corpus, cfg)
    ws = slice_windows(normed, window_spec(cfg))
    bb_cfg = _backbone_config(cfg)
    tda_matrix = read_fingerprint_matrix(outdir, normed) if "tda" in variant else None
    sheaf_coords = read_sheaf_coords(outdir, normed.n) if "sheaf" in variant else None
    b = cfg["backbone"]
    spec = TrainSpec(
        epochs=b["epochs"],
        batch_size=b["batch_size"],
        lr=b["lr"],
        weight_decay=b["weight_decay"],
        max_lr=b["max_lr"],
        patience=b["patience"],
        seed=seed,
    )
    train = assemble_windows(normed, ws.train, bb_cfg, tda_matrix, sheaf_coords)
    augment = b.get("cold_start_augment", 0.0)
    if augment > 0:
        train = augment_with_cold_windows(train, fraction=augment, seed=seed)
    val = assemble_windows(normed, ws.val, bb_cfg, tda_matrix, sheaf_coords) if ws.val else None
    result = train_backbone(train, val, bb_cfg, variant, spec)
    meta = _meta(cfg, seed)
    tag = variant.replace("+", "_")
    save_checkpoint(
        outdir / f"backbone_{tag}.ckpt.json",
        result.model.named_parameters(),
        optimizer_state=result.optimizer_state,
        rng_state=result.rng_state,
        meta=meta,
    )
    write_text_artifact(
        outdir / f"backbone_{tag}_log.jsonl",
        meta,
        "\n".join(json.dumps(e, sort_keys=True) for e in result.log),
    )
    slices = {}
    for name, wins in (("val", ws.val), ("test", ws.test)):
        if not wins:
            continue
        data = assemble_windows(normed, wins, bb_cfg, tda_matrix, sheaf_coords)
        pred = forecast(result.model, data)
        slices[name] = _forecast_slice(pred, data.targets, normed, data.series_rows)
    write_json_artifact(
        outdir / f"forecasts_backbone_{tag}.json",
        meta,
        {"variant": variant, "model": "backbone", "slices": slices},
    )
    return {"variant": variant, "final_val_loss": result.final_val_loss()}


def augment_with_cold_windows(batch: WindowBatch, fraction: float, seed: int) -> WindowBatch:
    """Append zero-context copies of a fraction of training windows.

    Teaches the model the launch condition: history absent, topology and
    calendar features still available.
    """
    m = len(batch)
    count = int(round(fraction * m))
    if count == 0:
        return batch
    rng = np.random.Generator(np.random.PCG64(seed + 0xC01D))
    picks = rng.permutation(m)[:count]
    return WindowBatch(
        contexts=np.vstack([batch.contexts, np.zeros_like(batch.contexts[picks])]),
        targets=np.vstack([batch.targets, batch.targets[picks]]),
        temporal=np.vstack([batch.temporal, batch.temporal[picks]]),
        tda=np.vstack([batch.tda, batch.tda[picks]]) if batch.tda is not None else None,
        sheaf=np.vstack([batch.sheaf, batch.sheaf[picks]]) if batch.sheaf is not None else None,
        entity_ids=(
            np.concatenate([batch.entity_ids, batch.entity_ids[picks]])
            if batch.entity_ids is not None
            else None
        ),
        series_rows=(
            np.concatenate([batch.series_rows, batch.series_rows[picks]])
            if batch.series_rows is not None
            else None
        ),
    )


def run_eval(cfg: dict, seed: int, outdir: Path, forecast_files: list[str] | None = None) -> list[str]:
    outdir = Path(outdir)
    if forecast_files is None:
        forecast_files = sorted(p.name for p in outdir.glob("forecasts_*.json"))
    if not forecast_files:
        raise ConfigError("no forecast artifacts found; run `topoprior adapt` or `train-backbone` first")
    lines = []
    for name in forecast_files:
        obj = read_json_artifact(outdir / name, produced_by="adapt")
        reports = {}
        for slice_name, payload in obj["slices"].items():
            q = np.array(payload["quantiles_norm"])
            t_norm = np.array(payload["targets_norm"])
            median_actual = np.array(payload["median_actual"])
            t_actual = np.array(payload["targets_actual"])
            # point metrics on the actual scale, pinball on the normalized one
            report = metrics(median_actual, t_actual, slice_label=slice_name)
            qloss = pinball_loss(q, t_norm)
            reports[slice_name] = {**report.to_dict(), "qloss": qloss}
            lines.append(
                f"{name} [{slice_name}] mae={report.mae:.4f} mse={report.mse:.4f} "
                f"wape={report.wape if report.wape is not None else 'nan'} qloss={qloss:.4f}"
            )
        stem = name.replace("forecasts_", "").replace(".json", "")
        write_json_artifact(outdir / f"metrics_{stem}.json", _meta(cfg, seed), {"reports": reports})
    return lines


# ---------------------------------------------------------------- experiments


CONTROL_TO_ARCH = {
    "vanilla": "vanilla",
    "rand": "tda",
    "shuffle": "tda",
    "tda": "tda",
    "tda+sheaf": "tda+sheaf",
}


def control_tda_matrix(control: str, bundle_matrix: np.ndarray,
                       group_map: dict[str, np.ndarray], labels: list[str] | None,
                       seed: int) -> np.ndarray:
    """Per-series fingerprint inputs for one control variant."""
    n = bundle_matrix.shape[0]
    if control in ("tda", "tda+sheaf"):
        return bundle_matrix
    if control == "vanilla":
        return np.zeros((n, FINGERPRINT_DIM))
    if control == "rand":
        return np.tile(rand_tda(FINGERPRINT_DIM, seed=seed), (n, 1))
    if control == "shuffle":
        assignment = list(labels) if labels is not None else ["global"] * n
        return np.vstack(shuffle_tda(group_map, assignment, seed=seed))
    raise ConfigError(f"unknown control variant {control!r}")


@dataclass
class ControlExperimentResult:
    per_seed_mae: dict[str, list[float]]
    median_mae: dict[str, float]
    screening_h1: int
    screening_ratio: float
    arch_digest: str

    def table(self) -> str:
        base = self.median_mae.get("vanilla")
        lines = [f"{'variant':<12}{'median MAE':>12}{'delta':>10}"]
        for v, m in self.median_mae.items():
            delta = m - base if base is not None else float("nan")
            lines.append(f"{v:<12}{m:>12.4f}{delta:>+10.4f}")
        return "\n".join(lines)


def adapter_control_experiment(corpus: SeriesCorpus, *, adapter_cfg: AdapterConfig,
                               spec: WindowSpec, variants, seeds,
                               provider: str = "drift", period: int | None = None,
                               normalize: bool = True) -> ControlExperimentResult:
    """Matched-config adapter runs across topology controls, reporting val MAE.

    All variants share architecture, data, base cache, and training seeds;
    only the topology inputs differ.
    """
    normed = zscore_per_series(corpus) if normalize else corpus
    stats = context_stats_matrix(normed)
    sheaf = spectral_coordinates(normed)
    bundle = fingerprint_bundle(normed, per_group=corpus.group_labels is not None)
    report = screen(bundle.global_diagram, n=normed.n)
    ws = slice_windows(normed, spec)
    cache = build_base_cache(normed, ws.all(), provider=provider, period=period)
    group_map = {g: fp.values for g, fp in bundle.by_group.items()}
    arch_digest = config_digest(adapter_cfg.arch_dict())
    per_seed: dict[str, list[float]] = {v: [] for v in variants}
    for seed in seeds:
        for v in variants:
            tda_matrix = control_tda_matrix(v, bundle.matrix, group_map, corpus.group_labels, seed)
            arch = CONTROL_TO_ARCH[v]
            train = assemble_adapter_data(normed, ws.train, cache, tda_matrix, sheaf.coords, stats)
            val_wins = ws.val if ws.val else ws.test
            val = assemble_adapter_data(normed, val_wins, cache, tda_matrix, sheaf.coords, stats)
            result = train_adapter(cache, train, val, adapter_cfg, arch, seed=seed)
            pred = result.adapter.forward(val.tda, val.sheaf, val.ctx, val.base)
            mae = metrics(pred[..., MEDIAN_INDEX], val.targets).mae
            per_seed[v].append(mae)
    medians = {v: float(np.median(per_seed[v])) for v in variants}
    return ControlExperimentResult(
        per_seed_mae=per_seed,
        median_mae=medians,
        screening_h1=report.h1_count,
        screening_ratio=report.ratio,
        arch_digest=arch_digest,
    )


def run_ablate(cfg: dict, seed: int, outdir: Path, variants) -> str:
    outdir = Path(outdir)
    corpus, _ = load_corpus(cfg)
    a = cfg["adapter"]
    adapter_cfg = AdapterConfig(
        horizon=cfg["windows"]["horizon"],
        hidden_dim=a["hidden_dim"],
        lr=a["lr"],
        weight_decay=a["weight_decay"],
        epochs=a["epochs"],
        batch_size=a["batch_size"],
    )
    result = adapter_control_experiment(
        corpus,
        adapter_cfg=adapter_cfg,
        spec=window_spec(cfg),
        variants=list(variants),
        seeds=[seed],
        provider=cfg["cache"]["provider"],
        period=cfg["cache"].get("period"),
        normalize=cfg["dataset"].get("normalize", "per_series") == "per_series",
    )
    write_json_artifact(
        outdir / "ablation.json",
        _meta(cfg, seed),
        {
            "variants": list(variants),
            "median_mae": result.median_mae,
            "per_seed_mae": result.per_seed_mae,
            "arch_digest": result.arch_digest,
            "screening": {"h1": result.screening_h1, "ratio": result.screening_ratio},
        },
    )
    table = result.table()
    write_text_artifact(outdir / "ablation.txt", _meta(cfg, seed), table)
    return table


@dataclass
class ColdStartExperimentResult:
    per_seed: dict[str, list[dict[int, float]]]  # variant -> per-seed {week: mae}
    median_week_mae: dict[str, dict[int, float]]


def cold_start_experiment(corpus: SeriesCorpus, *, bb_cfg: BackboneConfig,
                          train_spec: TrainSpec, spec: WindowSpec, variants, seeds,
                          weeks=(0,), augment: float = 1.0) -> ColdStartExperimentResult:
    """Train backbone variants and evaluate launch-condition (zero-context) windows.

    The corpus is used on its original scale so cluster levels survive into
    both the spectral coordinates and the targets.
    """
    sheaf = spectral_coordinates(corpus)
    bundle = fingerprint_bundle(corpus, per_group=corpus.group_labels is not None)
    ws = slice_windows(corpus, spec)
    cold_spec = WindowSpec(
        context_len=spec.context_len,
        horizon=spec.horizon,
        mode="cold_start",
        cold_start_weeks=tuple(weeks),
    )
    cold = slice_windows(corpus, cold_spec).test
    per_seed: dict[str, list[dict[int, float]]] = {v: [] for v in variants}
    for seed in seeds:
        for v in variants:
            tda_matrix = bundle.matrix if "tda" in v else None
            coords = sheaf.coords if "sheaf" in v else None
            train = assemble_windows(corpus, ws.train, bb_cfg, tda_matrix, coords)
            train = augment_with_cold_windows(train, fraction=augment, seed=seed)
            val = assemble_windows(corpus, ws.val, bb_cfg, tda_matrix, coords) if ws.val else None
            result = train_backbone(train, val, bb_cfg, v, TrainSpec(
                epochs=train_spec.epochs,
                batch_size=train_spec.batch_size,
                lr=train_spec.lr,
                weight_decay=train_spec.weight_decay,
                max_lr=train_spec.max_lr,
                patience=train_spec.patience,
                seed=seed,
            ))
            by_week: dict[int, float] = {}
            for w in weeks:
                wins = [win for win in cold if win.week == w]
                data = assemble_windows(corpus, wins, bb_cfg, tda_matrix, coords)
                pred = forecast(result.model, data)[..., MEDIAN_INDEX]
                by_week[w] = metrics(pred, data.targets).mae
            per_seed[v].append(by_week)
    medians = {
        v: {w: float(np.median([run[w] for run in per_seed[v]])) for w in weeks}
        for v in variants
    }
    return ColdStartExperimentResult(per_seed=per_seed, median_week_mae=medians)
