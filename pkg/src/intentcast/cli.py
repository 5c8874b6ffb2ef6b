"""Command-line interface: gen, train, eval, ablate, predict, gradcheck.

Exit codes are a stable contract: 0 on success, 1 when a check or assertion
fails (gradcheck below tolerance, aborted training), 2 for usage or I/O
errors (missing files, unwritable directories, malformed configs).
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click
import numpy as np

from .configfile import load_config_file
from .corpus import load_split_windows
from .data import WindowSpec, make_hard_split
from .exceptions import CheckpointError, ConfigError, SessionFormatError, TrainingAborted
from .losses import LossWeights
from .metrics import MetricsReport
from .model import BehaviorModel, ModelConfig
from .model.params import load_checkpoint
from .scenegen import SceneConfig, generate_corpus
from .sessionio import (
    prediction_to_line,
    read_session,
    window_from_line,
    window_to_line,
)
from .training import (
    TrainConfig,
    evaluate_model,
    format_ablation_table,
    run_ablation_suite,
    train as run_training,
)

_IO_ERRORS = (OSError, SessionFormatError, CheckpointError, ConfigError, FileNotFoundError)


@click.group()
@click.option("--config", "config_path", envvar="INTENTCAST_CONFIG", default=None,
              help="Sectioned config file; every key can be overridden by a flag. "
                   "Defaults to $INTENTCAST_CONFIG when set.")
@click.pass_context
def main(ctx, config_path):
    """Situated-behavior forecasting: synthetic data, training, evaluation."""
    try:
        ctx.obj = load_config_file(config_path) if config_path else {}
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _scene_config(ctx_obj: dict, overrides: dict) -> SceneConfig:
    merged = dict(ctx_obj.get("scene", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return SceneConfig(**merged)


def _model_config(ctx_obj: dict, overrides: dict) -> ModelConfig:
    merged = dict(ctx_obj.get("model", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return ModelConfig(**merged)


def _train_config(ctx_obj: dict, overrides: dict, model: ModelConfig) -> TrainConfig:
    merged = dict(ctx_obj.get("train", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    loss_section = dict(ctx_obj.get("loss", {}))
    if "int" in loss_section:
        loss_section["int_"] = loss_section.pop("int")
    weights = LossWeights(**loss_section) if loss_section else LossWeights()
    return TrainConfig(model=model, weights=weights, **merged)


def _infer_data_shape(windows) -> tuple[int, int]:
    obs = windows[0].observation
    return obs.n_objects, obs.d_clip


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--train", "n_train", default=60, show_default=True)
@click.option("--test", "n_test", default=10, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--n-objects", type=int, default=None)
@click.option("--episodes", type=int, default=None)
@click.pass_obj
def gen(ctx_obj, out_dir, n_train, n_test, seed, n_objects, episodes):
    """Generate a synthetic corpus plus its manifest."""
    try:
        cfg = _scene_config(ctx_obj, {"seed": seed, "n_objects": n_objects,
                                      "episodes": episodes})
        manifest = generate_corpus(cfg, n_train, n_test, out_dir)
    except (*_IO_ERRORS, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    frames = sum(e["frames"] for split in manifest["splits"].values() for e in split)
    click.echo(f"wrote {n_train} train + {n_test} test sessions "
               f"({frames} frames) to {out_dir}")


def _training_options(fn):
    options = [
        click.option("--epochs", type=int, default=None),
        click.option("--batch-size", type=int, default=None),
        click.option("--lr", type=float, default=None),
        click.option("--lr-decay", type=float, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--window-stride", type=int, default=None),
        click.option("--stride", "sample_stride", type=int, default=2, show_default=True,
                     help="Frame sampling stride when slicing sessions."),
        click.option("--top-k", type=int, default=None),
        click.option("--feature-dim", type=int, default=None),
        click.option("--decoder-layers", type=int, default=None),
        click.option("--no-hierarchy", is_flag=True, default=False),
        click.option("--vanilla-gcn", is_flag=True, default=False),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _load_windows(ctx_obj, data_dir, split, sample_stride, model_overrides):
    base_model = dict(ctx_obj.get("model", {}))
    t_history = base_model.get("t_history", 15)
    t_future = base_model.get("t_future", 15)
    spec = WindowSpec(t_history=t_history, t_future=t_future, stride=sample_stride)
    windows = load_split_windows(data_dir, split, spec)
    if not windows:
        raise SessionFormatError(f"no usable windows in {data_dir} ({split})")
    n_objects, d_clip = _infer_data_shape(windows)
    overrides = {"n_objects": n_objects, "d_clip": d_clip}
    overrides.update(model_overrides)
    return windows, _model_config(ctx_obj, overrides)


@main.command("train")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@_training_options
@click.pass_obj
def cmd_train(ctx_obj, data_dir, out_dir, sample_stride, no_hierarchy, vanilla_gcn,
              top_k, feature_dim, decoder_layers, **train_overrides):
    """Train on a generated corpus; writes checkpoints and a loss CSV."""
    try:
        windows, model_cfg = _load_windows(
            ctx_obj, data_dir, "train", sample_stride,
            {"top_k": top_k, "feature_dim": feature_dim, "decoder_layers": decoder_layers,
             "no_hierarchy": no_hierarchy or None, "vanilla_gcn": vanilla_gcn or None},
        )
        config = _train_config(ctx_obj, train_overrides, model_cfg)
    except (*_IO_ERRORS, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    try:
        result = run_training(windows, config, out_dir=out_dir)
    except TrainingAborted as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    final = result.history[-1]
    click.echo(f"trained {config.epochs} epochs on {len(windows)} windows; "
               f"final total loss {final['total']:.4f}; checkpoint {result.checkpoint}")


def _format_report(title: str, report: MetricsReport, hard: MetricsReport | None) -> str:
    header = (f"{'':16}{'Hand':>10} {'Head(Dist)':>11} {'Head(Dir)':>10} {'Gaze':>8} "
              f"{'ObjCenter':>10} {'ObjAP':>8}")
    row = (f"{title:<16}{report.hand_mm:>10.2f} {report.head_dist_mm:>11.2f} "
           f"{report.head_dir_deg:>10.2f} {report.gaze_deg:>8.2f} "
           f"{report.object_center_mm:>10.2f} {report.object_ap:>8.2f}")
    lines = [header, row]
    if hard is not None:
        lines.append(f"{'hard split':<16}{'':>10} {'':>11} {'':>10} {'':>8} "
                     f"{hard.object_center_mm:>10.2f} {hard.object_ap:>8.2f}")
    return "\n".join(lines)


@main.command("eval")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path())
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--split", default="test", show_default=True)
@click.option("--stride", "sample_stride", type=int, default=2, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the metrics as a machine-readable key-value file.")
@click.option("--per-window-csv", type=click.Path(), default=None)
@click.pass_obj
def cmd_eval(ctx_obj, ckpt_path, data_dir, split, sample_stride, out_path, per_window_csv):
    """Evaluate a checkpoint; prints the metric columns plus the hard-split
    object columns."""
    try:
        config, params = load_checkpoint(ckpt_path)
        spec = WindowSpec(t_history=config.t_history, t_future=config.t_future,
                          stride=sample_stride)
        windows = load_split_windows(data_dir, split, spec)
        if not windows:
            raise SessionFormatError(f"no usable windows in {data_dir} ({split})")
    except _IO_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    model = BehaviorModel(config)
    report = evaluate_model(model, params, windows)
    hard_windows = make_hard_split(windows)
    hard = None
    if hard_windows and any(w.future.interaction.any() for w in hard_windows):
        hard = evaluate_model(model, params, hard_windows)
    click.echo(_format_report("model", report, hard))
    if per_window_csv:
        _write_per_window_csv(per_window_csv, model, params, windows)
    if out_path:
        payload = report.as_dict()
        if hard is not None:
            payload["hard_object_center_mm"] = hard.object_center_mm
            payload["hard_object_ap"] = hard.object_ap
        Path(out_path).write_text(
            "".join(f"{k}={v}\n" for k, v in payload.items())
        )
        click.echo(f"metrics written to {out_path}")


def _write_per_window_csv(path, model, params, windows):
    import csv

    from .metrics import angular_metrics, l2_metrics
    from .training import predict_samples

    preds = predict_samples(model, params, windows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "hand_mm", "head_dist_mm", "head_dir_deg",
                         "gaze_deg", "object_center_mm"])
        for i, (pred, win) in enumerate(zip(preds, windows)):
            hand, head, center = l2_metrics(pred, win.future)
            direction, gaze = angular_metrics(pred, win.future)
            writer.writerow([i, f"{hand:.4f}", f"{head:.4f}", f"{direction:.4f}",
                             f"{gaze:.4f}", f"{center:.4f}"])


@main.command("ablate")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--k-values", default="4,8,12,16", show_default=True)
@_training_options
@click.pass_obj
def cmd_ablate(ctx_obj, data_dir, out_dir, k_values, sample_stride, no_hierarchy,
               vanilla_gcn, top_k, feature_dim, decoder_layers, **train_overrides):
    """Train/evaluate the full model, both ablations, and the K sweep."""
    try:
        ks = tuple(int(v) for v in k_values.split(","))
        windows, model_cfg = _load_windows(
            ctx_obj, data_dir, "train", sample_stride,
            {"top_k": top_k, "feature_dim": feature_dim, "decoder_layers": decoder_layers},
        )
        spec = WindowSpec(t_history=model_cfg.t_history, t_future=model_cfg.t_future,
                          stride=sample_stride)
        test_windows = [w for w in load_split_windows(data_dir, "test", spec)
                        if w.observation.n_objects == model_cfg.n_objects]
        config = _train_config(ctx_obj, train_overrides, model_cfg)
    except (*_IO_ERRORS, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    try:
        table = run_ablation_suite(windows, test_windows, config, out_dir=out_dir, k_values=ks)
    except TrainingAborted as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(format_ablation_table(table))
    click.echo(f"tables written to {out_dir}")


@main.command("predict")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path())
@click.option("--session", "session_path", type=click.Path(), default=None,
              help="Slice this session into windows; otherwise read "
                   "line-delimited window records from standard input.")
@click.option("--stride", "sample_stride", type=int, default=2, show_default=True)
@click.option("--timing", is_flag=True, default=False,
              help="Report per-window latency in ms on standard error.")
@click.option("--dump-adjacency", "dump_path", type=click.Path(), default=None,
              help="Write the adaptive weight matrix of the first window as CSV.")
@click.pass_obj
def cmd_predict(ctx_obj, ckpt_path, session_path, sample_stride, timing, dump_path):
    """Stream predictions: one serialized record per input window."""
    try:
        config, params = load_checkpoint(ckpt_path)
    except _IO_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    model = BehaviorModel(config)

    if session_path is not None:
        try:
            session = read_session(session_path)
            spec = WindowSpec(t_history=config.t_history, t_future=config.t_future,
                              stride=sample_stride)
            from .data import slice_windows
            lines = (window_to_line(s.observation) for s in slice_windows(session, spec))
        except _IO_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    else:
        lines = (line for line in sys.stdin if line.strip())

    dumped = False
    count = 0
    latencies = []
    for line in lines:
        try:
            obs = window_from_line(line)
            start = time.perf_counter()
            pred = model.predict_window(params, obs)
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            if dump_path and not dumped:
                _dump_adjacency(dump_path, model, params, obs)
                dumped = True
            click.echo(prediction_to_line(pred))
            count += 1
            latencies.append(elapsed_ms)
            if timing:
                click.echo(f"window {count}: {elapsed_ms:.1f} ms", err=True)
        except (SessionFormatError, ConfigError, ValueError) as exc:
            click.echo(f"error: {exc}")
    if timing and latencies:
        click.echo(f"mean latency: {np.mean(latencies):.1f} ms over {count} windows", err=True)


def _dump_adjacency(path, model, params, obs):
    from .model import WindowBatch

    if model.config.no_hierarchy or model.config.vanilla_gcn:
        click.echo("adjacency dump skipped: model has no geometry-derived matrix", err=True)
        return
    batch = WindowBatch.from_observations([obs])
    matrix = model.dyngcn.adjacency(params, batch).matrix.data[0]
    np.savetxt(path, matrix, delimiter=",")
    click.echo(f"adjacency matrix written to {path}", err=True)


@main.command("gradcheck")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-4, show_default=True)
def cmd_gradcheck(seed, tolerance):
    """Run the finite-difference suite; exit 0 iff every component passes."""
    from .gradcheck import run_suite

    results, ok = run_suite(seed=seed, tolerance=tolerance)
    worst_name = max(results, key=results.get)
    for name, err in results.items():
        status = "ok" if err < tolerance else "FAIL"
        click.echo(f"{name:<14} {err:.3e}  {status}")
    if not ok:
        click.echo(f"gradcheck failed: {worst_name} at {results[worst_name]:.3e}", err=True)
        sys.exit(1)
    click.echo(f"all components below {tolerance:g}")


if __name__ == "__main__":
    main()
