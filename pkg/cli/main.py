"""embedtrack CLI - simulate, track and evaluate embedding-based tracking.

Provides commands for:
- simulate: Generate seeded synthetic sequences
- track: Assign instance ids to a detections file
- eval: Score tracker results against ground truth
- gradcheck: Compare the analytic contrastive gradient with finite differences
- sample: Draw a training batch from a dataset index
- sweep-memory / sweep-sampling: Ablation sweeps on simulated data

Exit codes: 0 on success, 1 on invalid input, 2 on I/O errors.
"""

import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import typer

try:  # typer >= 0.22 vendors click; its exceptions live in typer._click
    from typer._click.exceptions import Abort, UsageError
except ImportError:
    from click import Abort, UsageError
from rich.console import Console
from rich.table import Table

from embedtrack.config import PRESETS, RunConfig, load_run_config
from embedtrack.core.contrastive import (
    contrastive_gradient, finite_difference_gradient, gradient_relative_error, random_matched_batch,
)
from embedtrack.core.experiments import index_from_sequences, memory_length_sweep, sampling_sweep
from embedtrack.core.metrics import evaluate, render_report_table
from embedtrack.core.sampler import build_pretraining_batch, sample_tracking_batch
from embedtrack.core.simulator import export, generate_videos
from embedtrack.core.tracker import run_sequence
from embedtrack.formats import find_meta, parse_detections, parse_mot_gt, parse_mot_results, write_results
from embedtrack.models import DatasetIndex, LabeledScene

app = typer.Typer(
    name="embedtrack",
    help="Embedding-based multi-object tracking: simulation, association and evaluation",
    no_args_is_help=True,
)
console = Console()
logger = logging.getLogger("embedtrack.cli")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

ConfigOption = typer.Option(None, "--config", "-c", help="TOML configuration file")
PresetOption = typer.Option(None, "--preset", help=f"Hyper-parameter preset ({', '.join(PRESETS)})")


@contextmanager
def _errors() -> Iterator[None]:
    try:
        yield
    except OSError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(2)
    except ValueError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(1)


def _load(config: Optional[Path], preset: Optional[str], **overrides) -> RunConfig:
    return load_run_config(config, preset, overrides)


@app.callback()
def root(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug detail to stderr"),
):
    """Embedding-based multi-object tracking toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        force=True,
    )


@app.command()
def simulate(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    seed: Optional[int] = typer.Option(None, "--seed", help="Generator seed"),
    videos: Optional[int] = typer.Option(None, "--videos", help="Number of videos"),
    frames: Optional[int] = typer.Option(None, "--frames", help="Frames per video"),
    identities: Optional[int] = typer.Option(None, "--identities", help="Identities per video"),
    noise: Optional[float] = typer.Option(None, "--noise", help="Embedding noise sigma"),
):
    """Generate synthetic sequences and write gt.txt, dets.jsonl and meta.json."""
    with _errors():
        run = _load(
            config, preset,
            simulator={"seed": seed, "videos": videos, "frames": frames, "identities": identities,
                       "embedding_noise": noise},
        )
        sequences = generate_videos(run.simulator)
        written = export(sequences, out, run.simulator)
    detections = sum(s.num_detections for s in sequences)
    console.print(
        f"✅ Wrote {len(written)} video{'s' if len(written) != 1 else ''} "
        f"({detections} detections) to [bold]{out}[/bold]"
    )


@app.command()
def track(
    dets: Path = typer.Option(..., "--dets", "-d", help="Detections file (JSON Lines)"),
    out: Path = typer.Option(..., "--out", "-o", help="Results file (MOTChallenge text)"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    memory_length: Optional[int] = typer.Option(None, "--memory-length", "-T", help="Frames kept in memory"),
    objectness: Optional[float] = typer.Option(None, "--objectness", help="Objectness threshold"),
    new_id_threshold: Optional[float] = typer.Option(None, "--new-id-threshold", help="New-instance threshold"),
    image_width: Optional[int] = typer.Option(None, "--image-width", help="Image width in pixels"),
    image_height: Optional[int] = typer.Option(None, "--image-height", help="Image height in pixels"),
    with_category: bool = typer.Option(False, "--with-category", help="Write categories in column 8"),
):
    """Assign instance ids to detections and write MOTChallenge results."""
    with _errors():
        run = _load(
            config, preset,
            tracker={"memory_length": memory_length, "objectness_threshold": objectness,
                     "new_instance_threshold": new_id_threshold},
        )
        stream = parse_detections(dets)
        meta = find_meta(dets)
        width, height = run.image.width, run.image.height
        if meta is not None:
            width, height = meta.image_width, meta.image_height
        elif image_width is None or image_height is None:
            logger.warning(f"No meta.json next to {dets}; assuming {width}x{height} unless overridden")
        width = image_width or width
        height = image_height or height
        output = run_sequence(stream, run.tracker, num_frames=meta.num_frames if meta else None)
        write_results(output, out, width, height, with_category=with_category)
    console.print(
        f"✅ Tracked {len(output.frames)} frames: [bold]{len(output.instance_ids)}[/bold] ids "
        f"(T={run.tracker.memory_length}) -> {out}"
    )


@app.command("eval")
def evaluate_results(
    gt: Path = typer.Option(..., "--gt", help="Ground-truth file (MOTChallenge text)"),
    results: Path = typer.Option(..., "--results", "-r", help="Results file (MOTChallenge text)"),
    report: Path = typer.Option(..., "--report", help="JSON report output"),
    table: Optional[Path] = typer.Option(None, "--table", help="Plain-text table output"),
    iou: Optional[float] = typer.Option(None, "--iou", help="IoU threshold (default 0.5)"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    image_width: Optional[int] = typer.Option(None, "--image-width", help="Image width in pixels"),
    image_height: Optional[int] = typer.Option(None, "--image-height", help="Image height in pixels"),
):
    """Compute CLEAR-MOT, IDF1 and HOTA and write a JSON report."""
    with _errors():
        run = _load(config, preset, metrics={"iou_threshold": iou})
        meta = find_meta(gt) or find_meta(results)
        width = image_width or (meta.image_width if meta else run.image.width)
        height = image_height or (meta.image_height if meta else run.image.height)
        truth = parse_mot_gt(gt, width, height)
        categories = sorted({o.category for objs in truth.values() for o in objs})
        default_category = categories[0] if len(categories) == 1 else None
        predictions = parse_mot_results(results, width, height, default_category=default_category)
        num_frames = max([meta.num_frames if meta else 0, *truth.keys(), *predictions.keys()])
        scene = LabeledScene(num_frames=num_frames, ground_truth=truth, predictions=predictions)
        metrics = evaluate(scene, run.metrics.iou_threshold)
        report.write_text(metrics.model_dump_json(indent=2) + "\n", encoding="utf-8")
        text = render_report_table(metrics)
        if table is not None:
            table.write_text(text, encoding="utf-8")
    console.print(text, end="", markup=False, highlight=False)


@app.command()
def gradcheck(
    seed: int = typer.Option(0, "--seed", help="Seed of the first batch"),
    dim: int = typer.Option(16, "--dim", help="Embedding dimension"),
    batch: int = typer.Option(24, "--batch", help="Embeddings per batch"),
    batches: int = typer.Option(1, "--batches", help="Number of seeded batches"),
    temperature: float = typer.Option(0.1, "--temperature", help="Contrastive temperature"),
    tolerance: float = typer.Option(1e-5, "--tolerance", help="Maximum relative error"),
):
    """Check the contrastive gradient against central finite differences."""
    with _errors():
        worst = 0.0
        for offset in range(batches):
            sample = random_matched_batch(seed + offset, batch, dim, temperature)
            error = gradient_relative_error(contrastive_gradient(sample), finite_difference_gradient(sample))
            logger.debug(f"batch seed {seed + offset}: relative error {error:.3e}")
            worst = max(worst, error)
    if worst >= tolerance:
        console.print(f"[bold red]Error:[/bold red] relative error {worst:.3e} exceeds {tolerance:g}")
        raise typer.Exit(1)
    console.print(f"✅ Gradient check passed: max relative error [bold]{worst:.3e}[/bold] over {batches} batch(es)")


def _read_index(path: Path) -> DatasetIndex:
    data = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(data, dict) and "videos" in data:
        return DatasetIndex.model_validate(data)
    if isinstance(data, dict):
        return DatasetIndex.from_frame_counts({int(k): int(v) for k, v in data.items()})
    raise ValueError(f"{path}: expected a dataset index object or a video -> frame count mapping")


@app.command()
def sample(
    index: Path = typer.Option(..., "--index", "-i", help="Dataset index (JSON)"),
    videos: Optional[int] = typer.Option(None, "--videos", help="Videos per batch (N_v)"),
    frames: Optional[int] = typer.Option(None, "--frames", help="Frames per video (N_f)"),
    seed: int = typer.Option(0, "--seed", help="Sampler seed"),
    ordinal: int = typer.Option(0, "--ordinal", help="Batch ordinal"),
    pretraining: Optional[int] = typer.Option(None, "--pretraining", help="Build a pre-training batch of N images"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the batch here instead of stdout"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
):
    """Draw one training batch and print it as JSON Lines, one item per line."""
    with _errors():
        run = _load(config, preset, sampler={"videos": videos, "frames": frames})
        dataset = _read_index(index)
        if pretraining is not None:
            spec = build_pretraining_batch(dataset, pretraining, seed, ordinal)
        else:
            spec = sample_tracking_batch(dataset, run.sampler.videos, run.sampler.frames, seed, ordinal)
        payload = spec.to_jsonl()
        if out is not None:
            out.write_text(payload, encoding="utf-8")
    if out is None:
        typer.echo(payload, nl=False)
    else:
        console.print(f"✅ Wrote {len(spec.items)} batch items to {out}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {text!r}")


def _splits(text: str) -> list[tuple[int, int]]:
    splits = []
    for part in text.split(","):
        try:
            nv, nf = part.lower().split("x")
            splits.append((int(nv), int(nf)))
        except ValueError:
            raise typer.BadParameter(f"expected splits like 2x8,4x4, got {text!r}")
    return splits


def _write_json(path: Path, rows: list) -> None:
    path.write_text(json.dumps([r.model_dump() for r in rows], indent=2) + "\n", encoding="utf-8")


@app.command("sweep-memory")
def sweep_memory(
    lengths: str = typer.Option("1,3,5,9,20", "--lengths", help="Comma-separated memory lengths"),
    seeds: int = typer.Option(5, "--seeds", help="Seeds per memory length"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    json_out: Optional[Path] = typer.Option(None, "--json", help="Write the points as JSON"),
):
    """Mean IDF1/HOTA/MOTA per memory length on simulated occlusion scenes."""
    values = _int_list(lengths)
    with _errors():
        run = _load(config, preset)
        points = memory_length_sweep(run.simulator, values, list(range(run.simulator.seed, run.simulator.seed + seeds)), run.tracker)
        if json_out is not None:
            _write_json(json_out, points)

    result = Table(title=f"Memory length sweep ({seeds} seeds)")
    result.add_column("T", style="cyan", justify="right")
    result.add_column("IDF1", style="yellow", justify="right")
    result.add_column("HOTA", style="yellow", justify="right")
    result.add_column("MOTA", style="yellow", justify="right")
    result.add_column("IDSW", style="dim", justify="right")
    for p in points:
        result.add_row(str(p.memory_length), f"{p.idf1:.4f}", f"{p.hota:.4f}", f"{p.mota:.4f}", str(p.idsw))
    console.print(result)


@app.command("sweep-sampling")
def sweep_sampling(
    splits: str = typer.Option("1x16,2x8,4x4,8x2,16x1", "--splits", help="Comma-separated N_v x N_f splits"),
    draws: int = typer.Option(1000, "--draws", help="Batches drawn per split"),
    seed: int = typer.Option(0, "--seed", help="Sampler seed"),
    dataset_videos: int = typer.Option(16, "--dataset-videos", help="Simulated videos to sample from"),
    config: Optional[Path] = ConfigOption,
    preset: Optional[str] = PresetOption,
    json_out: Optional[Path] = typer.Option(None, "--json", help="Write the points as JSON"),
):
    """Mean positive pairs per tracking batch for several video/frame splits."""
    parsed = _splits(splits)
    with _errors():
        run = _load(config, preset, simulator={"videos": dataset_videos})
        dataset, identities = index_from_sequences(generate_videos(run.simulator))
        points = sampling_sweep(dataset, identities, parsed, draws, seed)
        if json_out is not None:
            _write_json(json_out, points)

    result = Table(title=f"Sampling sweep ({draws} draws)")
    result.add_column("N_v", style="cyan", justify="right")
    result.add_column("N_f", style="cyan", justify="right")
    result.add_column("Positive pairs", style="yellow", justify="right")
    for p in points:
        result.add_row(str(p.num_videos), str(p.num_frames), f"{p.mean_positive_pairs:.1f}")
    console.print(result)


def main(argv: Optional[list[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    try:
        code = app(args=argv, standalone_mode=False)
    except UsageError as e:
        e.show()
        return 1
    except Abort:
        return 1
    except OSError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        return 2
    except ValueError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        return 1
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
