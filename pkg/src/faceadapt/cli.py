"""Command-line entry point.

Subcommands cover the whole pipeline: synthetic data generation, topology
fitting, feature extraction, Beta-mixture fitting/selection/threshold sweep,
training in all modes, evaluation, nested cross-validation, and attribution.
Every stage reads and writes the documented file formats, exits 0 on
success, and prints a diagnostic line on stderr otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .adapt import DomainData, TrainConfig, train
from .attribution import attribution_heatmap, expected_gradients, rank_landmark_features
from .betamix import (
    betamix_em,
    build_design_matrix,
    graph_from_edges,
    pairwise_lambda,
    read_edges,
    select_expression_features,
    threshold_sweep,
    write_edges,
)
from .crossval import subject_disjoint_folds
from .io.manifest import load_manifest
from .io.matrix import load_feature_matrix, save_feature_matrix
from .io.pgm import write_pgm
from .landmarks import LandmarkFeatureExtractor, fit_reference_topology, load_topology, save_topology
from .metrics import f1_overall, roc_curve_points
from .models import build_network, load_network, save_network
from .pipeline import (
    LoadedData,
    PipelineConfig,
    evaluate_model,
    load_pipeline_data,
    nested_cv,
    prepare_fold_features,
    rebuild_fold_features,
    _domain_bundle,
    _network_spec,
)
from .rng import derive_seed, make_rng
from .synth import SynthSpec, synth_generate

__all__ = ["main", "cli_dispatch"]


def _factors_from_manifest(dataset):
    labels = dataset.labels()
    domains = np.array([s.domain for s in dataset.samples])
    subjects = np.unique(np.array(dataset.subject_ids()), return_inverse=True)[1]
    return labels, (domains == "target").astype(np.int64), subjects


def _cmd_synth_generate(args) -> int:
    spec = SynthSpec(
        preset=args.preset,
        n_per_domain=args.n_per_domain,
        n_subjects=args.subjects,
        n_classes=args.k,
        noise=args.noise,
        shift=args.shift,
        image_size=args.image_size,
        seed=args.seed,
    )
    result = synth_generate(spec, args.out)
    print(result["manifest"])
    return 0


def _cmd_fit_topology(args) -> int:
    datasets = [load_manifest(m) for m in args.manifest]
    topo = fit_reference_topology(*datasets)
    save_topology(args.out, topo)
    print(f"{len(topo.triangles)} triangles, hull size {topo.hull_size}")
    return 0


def _cmd_extract_features(args) -> int:
    dataset = load_manifest(args.manifest)
    topo = load_topology(args.topology)
    extractor = LandmarkFeatureExtractor(topology=topo).fit(np.stack([s.landmarks for s in dataset.samples[:1]]))
    feats = extractor.transform(np.stack([s.landmarks for s in dataset.samples]))
    save_feature_matrix(args.out, feats.T, descriptors=[d.to_json() for d in extractor.descriptors_])
    print(f"{feats.shape[1]} features x {feats.shape[0]} samples -> {args.out}")
    return 0


def _cmd_betamix_fit(args) -> int:
    matrix, _ = load_feature_matrix(args.features)
    dataset = load_manifest(args.manifest)
    if matrix.shape[1] != len(dataset):
        raise ValueError(f"feature matrix has {matrix.shape[1]} columns but manifest has {len(dataset)} rows")
    labels, domain, subjects = _factors_from_manifest(dataset)
    design = build_design_matrix(matrix.T, labels, domain, subjects)
    stats = pairwise_lambda(design)
    fit = betamix_em(stats, n_samples=design.n_samples, tau=args.tau, max_iter=args.max_iter, tol=args.tol)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(fit.summary_json(), fh, indent=1)
    if args.edges:
        write_edges(args.edges, fit, stats)
    print(f"p0={fit.p0:.4f} Q={fit.q} rho_min={fit.rho_min} converged={fit.converged}")
    return 0


def _cmd_betamix_select(args) -> int:
    edges = read_edges(args.edges)
    header_path = Path(args.features).with_suffix(".json")
    with open(header_path, encoding="utf-8") as fh:
        header = json.load(fh)
    n_nodes = int(header["p"]) + 3
    graph = graph_from_edges(edges, n_nodes)
    selected = sorted(select_expression_features(graph))
    descriptors = header.get("descriptors")
    payload = {
        "indices": selected,
        "descriptors": None if descriptors is None else [descriptors[i] for i in selected],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
    print(f"{len(selected)} features selected")
    return 0


def _cmd_betamix_sweep(args) -> int:
    matrix, _ = load_feature_matrix(args.features)
    dataset = load_manifest(args.manifest)
    labels, _, _ = _factors_from_manifest(dataset)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    sets = threshold_sweep(matrix.T, labels, thresholds)
    payload = {}
    for t in thresholds:
        entry = {"count": int(len(sets[t])), "indices": sets[t].tolist()}
        payload[f"{t:g}"] = entry
    if args.evaluate:
        _sweep_evaluate(matrix, dataset, labels, thresholds, sets, payload, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
    print(f"swept {len(thresholds)} thresholds")
    return 0


def _sweep_evaluate(matrix, dataset, labels, thresholds, sets, payload, seed) -> None:
    """Train a small MLP per threshold on a subject-disjoint holdout."""
    from .models import NetworkSpec

    subjects = dataset.subject_ids()
    plan = subject_disjoint_folds(subjects, 2, derive_seed(seed, "sweep"))
    test_mask = plan.test_mask(subjects, 0)
    for t in thresholds:
        idx = sets[t]
        key = f"{t:g}"
        if len(idx) == 0:
            payload[key]["macro_f1"] = None
            continue
        feats = matrix.T[:, idx].astype(np.float32)
        spec = NetworkSpec(kind="mlp", n_classes=dataset.n_classes, input_feature_dim=len(idx), hidden=64)
        model = build_network(spec, make_rng(seed, "sweep-init", key))
        data = DomainData(labels=dataset.labels()[~test_mask], features=feats[~test_mask])
        train(TrainConfig(mode="source_only", epochs=10, batch_size=32, seed=derive_seed(seed, "sweep", key)), model, source=data)
        preds = model.predict({"features": feats[test_mask]})
        payload[key]["macro_f1"] = f1_overall(preds, dataset.labels()[test_mask], dataset.n_classes)


def _save_preprocess(out_dir: Path, fold_feats) -> None:
    payload = {
        "topology": None
        if fold_feats.topology is None
        else {"triangles": [list(t) for t in fold_feats.topology.triangles], "hull_size": fold_feats.topology.hull_size},
        "selected_indices": None if fold_feats.selected_indices is None else fold_feats.selected_indices.tolist(),
    }
    with open(out_dir / "preprocess.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def _load_preprocess(model_dir: Path):
    from .landmarks.delaunay import Triangulation

    path = model_dir / "preprocess.json"
    if not path.exists():
        return None, None
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    topo = None
    if payload.get("topology"):
        topo = Triangulation(
            triangles=tuple(tuple(int(v) for v in t) for t in payload["topology"]["triangles"]),
            hull_size=int(payload["topology"]["hull_size"]),
        )
    idx = payload.get("selected_indices")
    return topo, None if idx is None else np.asarray(idx, dtype=np.int64)


def _cmd_train(args) -> int:
    config = PipelineConfig.load(args.config)
    if args.mode:
        config.train["mode"] = args.mode
    data = load_pipeline_data(config)
    all_mask = np.ones(len(data), dtype=bool)
    fold_feats = prepare_fold_features(data, all_mask, config)
    spec = _network_spec(config, data, fold_feats)
    model = build_network(spec, make_rng(derive_seed(config.seed, "train-cli"), "init"))
    kind = spec.kind
    src = _domain_bundle(data, fold_feats, data.domain_mask("source"), kind)
    tgt = _domain_bundle(data, fold_feats, data.domain_mask("target"), kind)
    tc = TrainConfig.from_json({**config.train, "seed": derive_seed(config.seed, "train-cli")})
    history = train(tc, model, source=src, target=tgt)
    out_dir = Path(args.out)
    save_network(out_dir, model)
    _save_preprocess(out_dir, fold_feats)
    history.to_csv(out_dir / "history.csv")
    print(f"trained {kind} model ({tc.mode}) -> {out_dir}")
    return 0


def _cmd_eval(args) -> int:
    config = PipelineConfig.load(args.config)
    model_dir = Path(args.model)
    model = load_network(model_dir)
    data = load_pipeline_data(config)
    topo, idx = _load_preprocess(model_dir)
    fold_feats = rebuild_fold_features(data, topo, idx)
    metrics = evaluate_model(model, data, fold_feats, np.ones(len(data), dtype=bool))
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=1, sort_keys=True)
    if args.roc:
        _write_roc(args.roc, model, data, fold_feats)
    print(f"pooled macro F1 = {metrics['pooled']['macro_f1']:.4f}")
    return 0


def _write_roc(path, model, data: LoadedData, fold_feats) -> None:
    bundle = _domain_bundle(data, fold_feats, np.ones(len(data), dtype=bool), model.spec.kind)
    probs = []
    for start in range(0, len(bundle), 256):
        sel = np.arange(start, min(start + 256, len(bundle)))
        probs.append(model.predict_proba(bundle.inputs(sel)))
    probs = np.vstack(probs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class,fpr,tpr,threshold\n")
        for c in range(data.n_classes):
            mask = data.labels == c
            if not mask.any() or mask.all():
                continue
            for fpr, tpr, thr in roc_curve_points(probs[:, c], mask):
                fh.write(f"{c},{fpr!r},{tpr!r},{thr!r}\n")


def _cmd_cv_run(args) -> int:
    config = PipelineConfig.load(args.config)
    data = load_pipeline_data(config)
    report = nested_cv(config, data)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.dumps())
    pooled = report.aggregate.get("pooled", {})
    print(f"pooled macro F1 = {pooled.get('macro_f1_mean', float('nan')):.4f} over {len(report.folds)} folds")
    return 0


def _cmd_attribute(args) -> int:
    config = PipelineConfig.load(args.config)
    model_dir = Path(args.model)
    model = load_network(model_dir)
    data = load_pipeline_data(config)
    topo, idx = _load_preprocess(model_dir)
    fold_feats = rebuild_fold_features(data, topo, idx)
    kind = model.spec.kind

    if args.sample:
        if args.sample not in data.sample_ids:
            raise ValueError(f"sample id {args.sample!r} not present in the manifest")
        pos = data.sample_ids.index(args.sample)
    else:
        pos = 0
    bundle = _domain_bundle(data, fold_feats, np.ones(len(data), dtype=bool), kind)
    rng = make_rng(derive_seed(config.seed, "attribute"), args.sample or "first")
    base_idx = rng.choice(len(data), size=min(args.baselines, len(data)), replace=False)
    inputs = bundle.inputs(np.array([pos]))
    baselines = [bundle.inputs(np.array([int(b)])) for b in base_idx]
    attr = expected_gradients(model, inputs, baselines, n_samples=args.n_samples, rng=rng)

    payload = {"sample_id": data.sample_ids[pos], "class_index": attr.class_index, "n_samples": attr.n_samples}
    if "features" in attr.values:
        vals = attr.values["features"][0]
        descriptors = _selected_descriptors(topo, idx, vals.shape[0])
        payload["features"] = [
            {"index": int(i), "descriptor": descriptors[i] if descriptors else None, "value": float(v)}
            for i, v in enumerate(vals)
        ]
        ranking = rank_landmark_features(vals[None, :], descriptors or [None] * len(vals))
        payload["top_features"] = [
            {"index": i, "descriptor": d, "mean_abs": score} for i, d, score in ranking[: args.top]
        ]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
    if args.heatmap and "image" in attr.values:
        write_pgm(args.heatmap, attribution_heatmap(attr.values["image"][0, 0]))
    print(f"attributed class {attr.class_index} for sample {payload['sample_id']}")
    return 0


def _selected_descriptors(topo, idx, width):
    if topo is None:
        return None
    from .landmarks import feature_descriptors

    descs = [d.to_json() for d in feature_descriptors(topo)]
    if idx is not None:
        descs = [descs[i] for i in idx]
    return descs if len(descs) == width else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faceadapt", description="Landmark screening and domain-adaptive expression classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthetic data")
    synth_sub = p.add_subparsers(dest="synth_command", required=True)
    g = synth_sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--preset", required=True, choices=("planted_correlations", "two_domain_gaussians", "two_domain_faces"))
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-per-domain", type=int, default=120)
    g.add_argument("--subjects", type=int, default=24)
    g.add_argument("--k", type=int, default=0)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--shift", type=float, default=1.0)
    g.add_argument("--image-size", type=int, default=32)
    g.set_defaults(func=_cmd_synth_generate)

    p = sub.add_parser("fit-topology", help="triangulate the mean training landmarks")
    p.add_argument("--manifest", required=True, action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit_topology)

    p = sub.add_parser("extract-features", help="geometric features for every manifest sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--topology", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract_features)

    p = sub.add_parser("betamix", help="Beta-mixture screening")
    bmix = p.add_subparsers(dest="betamix_command", required=True)
    f = bmix.add_parser("fit", help="fit the mixture over pairwise statistics")
    f.add_argument("--features", required=True)
    f.add_argument("--manifest", required=True)
    f.add_argument("--tau", type=float, default=0.05)
    f.add_argument("--max-iter", type=int, default=1000)
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--out", required=True)
    f.add_argument("--edges")
    f.set_defaults(func=_cmd_betamix_fit)
    s = bmix.add_parser("select", help="expression-only feature selection from the edge file")
    s.add_argument("--edges", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_betamix_select)
    w = bmix.add_parser("sweep", help="fixed correlation-threshold sweep")
    w.add_argument("--features", required=True)
    w.add_argument("--manifest", required=True)
    w.add_argument("--thresholds", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    w.add_argument("--evaluate", action="store_true", help="train a small MLP per threshold")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", required=True)
    w.set_defaults(func=_cmd_betamix_sweep)

    p = sub.add_parser("train", help="train one model per the pipeline config")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=("source_only", "target_only", "finetune", "finetune_mixed", "adapt"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--roc", help="write one-vs-rest ROC points CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cv", help="cross-validation")
    cv_sub = p.add_subparsers(dest="cv_command", required=True)
    r = cv_sub.add_parser("run", help="nested subject-disjoint cross-validation")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_cv_run)

    p = sub.add_parser("attribute", help="expected-gradients attribution")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--sample", help="sample_id to attribute (default: first)")
    p.add_argument("--n-samples", type=int, default=128)
    p.add_argument("--baselines", type=int, default=16)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--heatmap", help="write image attribution as a PGM heatmap")
    p.set_defaults(func=_cmd_attribute)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cli_dispatch(argv) -> int:
    """Dispatch an argv list (no program name); returns the exit status."""
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
