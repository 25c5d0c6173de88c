"""サブコマンドの実体

どのコマンドも (args, cfg) を受け取り終了コードを返す。
--jobs N はシーケンス (synth ではフレーム) 単位で ProcessPoolExecutor に分配し、
結果は入力順に集めるので N によらず同じ出力になる。
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import shutil
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from rich.console import Console
from rich.table import Table

from src.ald.report import ab_summary, print_toytrain_rich
from src.ald.training import make_datasets, run_ab, run_ablation, toy_train
from src.domain.config import IOConfig, MetricsConfig, RunConfig, TrackerConfig
from src.domain.errors import ConfigError, FormatError
from src.domain.types import AggregationMode, NoiseParams, TrackTable
from src.gradcheck.suite import print_suite_rich, run_suite
from src.io.blob import read_embeddings, write_params
from src.io.dataset_stats import (
    Distribution,
    stats_adjacent_iou,
    stats_appearance_cosine,
    stats_category_counts,
)
from src.io.export_excel import export_metrics_to_excel
from src.io.mot_format import parse_det, parse_gt, parse_result, write_result
from src.io.raw_io import raw_path, read_raw, save_png, write_raw
from src.io.reports import write_csv, write_kv
from src.io.sequence_loader import list_raw_frames, load_sequence, write_seqinfo
from src.metrics.combine import ClassCounts, EvalResult, combine, merge_counts, per_class_counts
from src.metrics.report import alpha_frame, per_class_frame, print_eval_rich
from src.noise.model import sample_params, synthesize, verify_variance
from src.raw.frame import exposure_scale, requantize
from src.raw.isp import simple_isp
from src.tracker.engine import run_tracker
from src.tracker.interpolation import linear_interpolation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3

VERIFY_TOL = 0.05


def parallel_map[T, R](fn: Callable[[T], R], items: Iterable[T], jobs: int) -> list[R]:
    """入力順を保った map。jobs <= 1 ならプロセスを起こさない"""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _require_seed(cfg: RunConfig, command: str) -> int:
    if cfg.seed is None:
        raise ConfigError(f"{command} には --seed が必要です")
    return cfg.seed


# ---- synth ----


def _frame_seed(seed: int, frame: int) -> int:
    # 行ノイズのストリーム (seed, frame, row) とは 4 語目で分ける
    return int(np.random.SeedSequence((seed, frame, 0, 0x5EED)).generate_state(1)[0])


def _synth_frame(
    job: tuple[Path, Path, NoiseParams | None, RunConfig, int, int | None],
) -> dict[str, Any]:
    src, dst, fixed, cfg, seed, bit_depth = job
    clean = read_raw(src)
    params = fixed
    if params is None:
        params = sample_params(
            _frame_seed(seed, clean.frame_index),
            cfg.noise.gain_range,
            cfg.noise.ratio_range,
            cfg.noise,
        )
    noisy = synthesize(clean, params, seed)
    if bit_depth is not None:
        if bit_depth > noisy.bit_depth:
            raise ConfigError(f"--bit-depth {bit_depth} は入力の {noisy.bit_depth}bit より大きい")
        noisy = requantize(noisy, bit_depth)
    write_raw(noisy, dst)
    return {
        "frame": clean.frame_index,
        "K": params.K,
        "sigma_read": params.sigma_read,
        "ratio": params.ratio,
        "sha256": hashlib.sha256(noisy.data.tobytes()).hexdigest(),
    }


def _print_verify(checks: list[Any], console: Console) -> bool:
    table = Table(title=f"Noise variance check (tol {VERIFY_TOL:.0%})")
    for col in ("s", "empirical", "model", "rel err", "result"):
        table.add_column(col, justify="right")
    ok = True
    for c in checks:
        passed = c.passed(VERIFY_TOL)
        ok &= passed
        table.add_row(
            f"{c.signal:g}",
            f"{c.empirical:.4g}",
            f"{c.model:.4g}",
            f"{c.rel_err:.2%}",
            "[green]PASS[/]" if passed else "[bold red]FAIL[/]",
        )
    console.print(table)
    return ok


def cmd_synth(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    seed = _require_seed(cfg, "synth")
    data = load_sequence(args.input, cfg.io)
    if not data.raw_frames:
        raise FormatError(f"{args.input}: RAW フレームがありません")
    out = Path(args.output)
    fixed = None if args.sample_params else cfg.noise.params()
    jobs = [
        (src, raw_path(out / cfg.io.raw_dir, idx), fixed, cfg, seed, args.bit_depth)
        for idx, src in sorted(data.raw_frames.items())
    ]
    rows = parallel_map(_synth_frame, jobs, args.jobs)

    write_seqinfo(data.meta, out / cfg.io.seqinfo)
    for rel in (cfg.io.gt_file, cfg.io.det_file):
        if (data.root / rel).is_file():
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(data.root / rel, out / rel)

    provenance: dict[str, Any] = {
        "seed": seed,
        "config_hash": cfg.config_hash(),
        "source": str(data.root),
        "noise_kind": cfg.noise.kind,
        "sample_params": bool(args.sample_params),
        "bit_depth": args.bit_depth or 0,
        "frames": len(rows),
    }
    for r in rows:
        key = f"frame.{r['frame']:06d}"
        provenance |= {f"{key}.{k}": v for k, v in r.items() if k != "frame"}
    write_kv(out / "synth.toml", provenance)
    console.print(f"synthesized {len(rows)} frames -> {out}")

    if args.verify:
        if not _print_verify(verify_variance(cfg.noise.params(), seed), console):
            return EXIT_FAIL
    return EXIT_OK


# ---- track ----


def _track_sequence(
    job: tuple[Path, Path | None, TrackerConfig, IOConfig, bool],
) -> tuple[str, TrackTable]:
    seq_dir, det_file, tcfg, io_cfg, interpolate = job
    data = load_sequence(seq_dir, io_cfg)
    dets = parse_det(det_file, io_cfg.default_class) if det_file else data.det
    if dets is None:
        raise FormatError(f"{seq_dir}: 検出ファイル {io_cfg.det_file} がありません")
    last = max([data.meta.length, *(d.frame for d in dets)])
    table = run_tracker(dets, tcfg, frames=range(1, last + 1))
    if interpolate:
        table = linear_interpolation(table, tcfg.max_gap)
    return data.meta.name, table


def cmd_track(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    seqs = [Path(s) for s in args.sequences]
    if args.det and len(seqs) != 1:
        raise ConfigError("--det はシーケンスを 1 つだけ指定したときに使えます")
    interpolate = cfg.tracker.interpolate and not args.no_interp
    det = Path(args.det) if args.det else None
    jobs = [(s, det, cfg.tracker, cfg.io, interpolate) for s in seqs]
    out_dir = Path(args.out_dir)
    for name, table in parallel_map(_track_sequence, jobs, args.jobs):
        path = out_dir / f"{name}.txt"
        write_result(table, path, cfg.io.precision)
        console.print(f"{name}: {len(table.ids())} tracks, {len(table)} boxes -> {path}")
    return EXIT_OK


# ---- eval ----


def _is_sequence_dir(p: Path, io_cfg: IOConfig) -> bool:
    return p.is_dir() and (p / io_cfg.seqinfo).is_file()


def _eval_pairs(gt: Path, result: Path, io_cfg: IOConfig) -> list[tuple[str, Path, Path]]:
    """(名前, gt ファイル, 結果ファイル) の組を名前順で返す"""
    if gt.is_file():
        if not result.is_file():
            raise FormatError(f"{result}: 結果ファイルがありません")
        return [(gt.stem, gt, result)]
    if _is_sequence_dir(gt, io_cfg):
        seq_dirs = [gt]
    elif gt.is_dir():
        seq_dirs = sorted(p for p in gt.iterdir() if _is_sequence_dir(p, io_cfg))
    else:
        raise FormatError(f"{gt}: GT が見つかりません")
    pairs = []
    for d in seq_dirs:
        name = load_sequence(d, io_cfg).meta.name
        res = result if result.is_file() else result / f"{name}.txt"
        if not res.is_file():
            raise FormatError(f"{res}: {name} の結果ファイルがありません")
        pairs.append((name, d / io_cfg.gt_file, res))
    return sorted(pairs)


def _eval_sequence(job: tuple[Path, Path, MetricsConfig]) -> dict[int, ClassCounts]:
    gt_path, res_path, mcfg = job
    return per_class_counts(parse_gt(gt_path), parse_result(res_path), mcfg)


def cmd_eval(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    pairs = _eval_pairs(Path(args.gt), Path(args.result), cfg.io)
    counts = merge_counts(
        parallel_map(_eval_sequence, [(g, r, cfg.metrics) for _, g, r in pairs], args.jobs)
    )
    primary = AggregationMode(cfg.metrics.aggregation)
    modes = [primary, *(m for m in AggregationMode if m is not primary)]
    results: list[EvalResult] = [combine(counts, m, cfg.metrics) for m in modes]
    print_eval_rich(results, console)

    if args.kv:
        kv: dict[str, Any] = {"config_hash": cfg.config_hash(), "sequences": len(pairs)}
        for res in results:
            kv |= res.to_dict()
        kv["flags"] = results[0].flags
        kv["warnings"] = results[0].warnings
        write_kv(args.kv, kv)
    if args.csv:
        write_csv(args.csv, per_class_frame(results[0]))
        write_csv(Path(args.csv).with_suffix(".alpha.csv"), alpha_frame(results[0]))
    if args.xlsx:
        export_metrics_to_excel(results=results, out_path=str(args.xlsx))
        console.print(f":white_check_mark: Exported to {args.xlsx}")

    if "mota_undefined" in results[0].flags:
        logger.error("GT が空のため MOTA が定義できません")
        return EXIT_FAIL
    return EXIT_OK


# ---- stats ----


def _load_gt(p: Path, io_cfg: IOConfig) -> TrackTable:
    if _is_sequence_dir(p, io_cfg):
        gt = load_sequence(p, io_cfg).gt
        if gt is None:
            raise FormatError(f"{p}: {io_cfg.gt_file} がありません")
        return gt
    return parse_gt(p)


def cmd_stats(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    gt = _load_gt(Path(args.gt), cfg.io)
    out = Path(args.out_dir) if args.out_dir else None
    dists: dict[str, Distribution] = {"adjacent_iou": stats_adjacent_iou(gt)}
    if args.embeddings:
        cos = stats_appearance_cosine(gt, read_embeddings(args.embeddings))
        dists["cosine_same_id"] = cos.same_id
        dists["cosine_cross_id"] = cos.cross_id
    else:
        console.print("[yellow]見た目特徴が指定されていないため cosine 統計は省略します。[/]")
    categories = stats_category_counts(gt)

    table = Table(title="Dataset Statistics")
    table.add_column("Statistic", no_wrap=True)
    table.add_column("N", justify="right")
    table.add_column("Mean", justify="right")
    for name, d in dists.items():
        table.add_row(name, str(d.n), "n/a" if d.empty else f"{d.mean:.4f}")
    console.print(table)
    cat_table = Table(title="Categories")
    for col in ("class", "instances", "tracks"):
        cat_table.add_column(col, justify="right")
    for rec in categories.to_dict("records"):
        cat_table.add_row(
            f"{rec['class_id']}:{rec['class']}", str(rec["instances"]), str(rec["tracks"])
        )
    console.print(cat_table)

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        kv: dict[str, Any] = {}
        for name, d in dists.items():
            write_csv(out / f"{name}.csv", d.to_frame())
            kv |= d.summary(name)
        write_csv(out / "categories.csv", categories)
        write_kv(out / "stats.toml", kv)
    return EXIT_OK


# ---- gradcheck ----


def cmd_gradcheck(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    report = run_suite(args.seeds, eps=args.eps, tol=args.tol, mutate=args.mutate)
    print_suite_rich(report, console)
    return EXIT_OK if report.passed else EXIT_FAIL


# ---- toytrain ----


def cmd_toytrain(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    seed = _require_seed(cfg, "toytrain")
    tcfg = cfg.train
    noise = cfg.noise.params()
    if args.ablation:
        reports = run_ablation(tcfg, noise, seed)
    elif tcfg.steps == 0:
        train, holdout = make_datasets(tcfg, noise, seed)
        reports = [toy_train(train, holdout, tcfg, seed=seed, use_dsl=False)]
    else:
        reports = list(run_ab(tcfg, noise, seed))
    print_toytrain_rich(reports, console)

    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        kv: dict[str, Any] = {"seed": seed, "config_hash": cfg.config_hash()}
        if len(reports) == 2:
            kv |= ab_summary(reports[0], reports[1])
        else:
            for r in reports:
                tag = f"ald_{'on' if r.use_ald else 'off'}.dsl_{'on' if r.use_dsl else 'off'}"
                kv |= {f"{tag}.{k}": v for k, v in r.to_kv().items()}
        write_kv(out / "toytrain.toml", kv)
        for r in reports:
            tag = f"ald_{'on' if r.use_ald else 'off'}_dsl_{'on' if r.use_dsl else 'off'}"
            write_params(out / f"{tag}.params.bin", r.snapshot)
    return EXIT_OK


# ---- isp ----


def _isp_one(src: Path, dst: Path, args: argparse.Namespace) -> None:
    rgb = simple_isp(read_raw(src), wb_gains=tuple(args.wb), gamma=args.gamma)
    if args.exposure != 1.0:
        rgb = exposure_scale(rgb, args.exposure)
    save_png(rgb, dst)


def cmd_isp(args: argparse.Namespace, cfg: RunConfig, console: Console) -> int:
    src = Path(args.input)
    dst = Path(args.output)
    if src.is_file():
        _isp_one(src, dst, args)
        console.print(f"preview -> {dst}")
        return EXIT_OK
    raw_dir = src / cfg.io.raw_dir if _is_sequence_dir(src, cfg.io) else src
    frames = list_raw_frames(raw_dir)
    if not frames:
        raise FormatError(f"{src}: RAW フレームがありません")
    for idx, path in sorted(frames.items()):
        _isp_one(path, dst / f"{idx:06d}.png", args)
    console.print(f"{len(frames)} previews -> {dst}")
    return EXIT_OK


Command = Callable[[argparse.Namespace, RunConfig, Console], int]

COMMANDS: dict[str, Command] = {
    "synth": cmd_synth,
    "track": cmd_track,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "gradcheck": cmd_gradcheck,
    "toytrain": cmd_toytrain,
    "isp": cmd_isp,
}
