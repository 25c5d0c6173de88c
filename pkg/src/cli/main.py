# src/cli/main.py
from __future__ import annotations

import argparse
import logging
import pathlib
import sys
from collections.abc import Sequence
from dataclasses import replace

from rich.console import Console
from rich.logging import RichHandler

from src import __version__
from src.cli.commands import COMMANDS, EXIT_FAIL, EXIT_IO, EXIT_USAGE
from src.domain.config import apply_overrides, load_config
from src.domain.errors import (
    ConfigError,
    ContractViolation,
    DimensionError,
    FormatError,
    MetricUndefinedError,
    NumericalError,
    TrainingError,
)

logger = logging.getLogger("src")


def split_overrides(argv: Sequence[str]) -> tuple[list[str], dict[str, str]]:
    """``--section.key value`` / ``--section.key=value`` を argparse に渡す前に取り出す"""
    rest: list[str] = []
    overrides: dict[str, str] = {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        name = tok[2:].split("=", 1)[0] if tok.startswith("--") else ""
        if "." not in name:
            rest.append(tok)
            i += 1
            continue
        if "=" in tok:
            overrides[name] = tok.split("=", 1)[1]
            i += 1
        elif i + 1 < len(argv):
            overrides[name] = argv[i + 1]
            i += 2
        else:
            raise ConfigError(f"{tok} に値がありません")
    return rest, overrides


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nightmot",
        description="低照度 MOT ツールキット - ノイズ合成・追跡・評価・勾配検証",
        epilog="任意の設定値は --tracker.max_age 40 のように section.key で上書きできます",
    )
    ap.add_argument(
        "-V",
        "--version",
        action="version",
        version=f"nightmot {__version__}",
        help="バージョン情報を表示",
    )
    ap.add_argument("-c", "--config", type=pathlib.Path, help="設定ファイル (TOML)")
    ap.add_argument(
        "-l",
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="ログレベル (default: INFO)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="明所 RAW シーケンスから暗所ノイズ付き RAW を合成")
    p.add_argument("input", type=pathlib.Path, help="入力シーケンスディレクトリ")
    p.add_argument("output", type=pathlib.Path, help="出力シーケンスディレクトリ")
    p.add_argument("-s", "--seed", type=int, help="乱数シード (必須)")
    p.add_argument("-b", "--bit-depth", type=int, help="出力ビット深度 (入力以下)")
    p.add_argument(
        "--sample-params", action="store_true", help="フレームごとにノイズパラメータを引く"
    )
    p.add_argument("--verify", action="store_true", help="ノイズ分散をモデル値と突き合わせる")
    p.add_argument("-j", "--jobs", type=int, default=1, help="並列プロセス数 (default: 1)")

    p = sub.add_parser("track", help="検出ファイルを追跡して MOT 結果ファイルを書き出す")
    p.add_argument("sequences", nargs="+", type=pathlib.Path, help="シーケンスディレクトリ")
    p.add_argument("-o", "--out-dir", type=pathlib.Path, required=True, help="結果の出力先")
    p.add_argument("-d", "--det", type=pathlib.Path, help="検出ファイル (1 シーケンスのみ)")
    p.add_argument("--no-interp", action="store_true", help="線形補間を行わない")
    p.add_argument("-j", "--jobs", type=int, default=1, help="並列プロセス数 (default: 1)")

    p = sub.add_parser("eval", help="HOTA / MOTA / IDF1 を計算")
    p.add_argument("gt", type=pathlib.Path, help="GT ファイル・シーケンス・シーケンス群のルート")
    p.add_argument("result", type=pathlib.Path, help="結果ファイルまたは結果ディレクトリ")
    p.add_argument("-k", "--kv", type=pathlib.Path, help="key=value レポートの出力先")
    p.add_argument("--csv", type=pathlib.Path, help="クラス別 CSV の出力先")
    p.add_argument("-x", "--xlsx", type=pathlib.Path, help="Excel 出力パス")
    p.add_argument("-j", "--jobs", type=int, default=1, help="並列プロセス数 (default: 1)")

    p = sub.add_parser("stats", help="データセット統計 (隣接 IoU・見た目距離・クラス数)")
    p.add_argument("gt", type=pathlib.Path, help="GT ファイルまたはシーケンスディレクトリ")
    p.add_argument("-e", "--embeddings", type=pathlib.Path, help="見た目特徴 blob")
    p.add_argument("-o", "--out-dir", type=pathlib.Path, help="CSV と key=value の出力先")

    p = sub.add_parser("gradcheck", help="手書き勾配を有限差分で検証")
    p.add_argument("-n", "--seeds", type=int, default=20, help="seed 数 (default: 20)")
    p.add_argument("--eps", type=float, default=1e-5, help="中心差分の刻み (default: 1e-5)")
    p.add_argument("--tol", type=float, default=1e-4, help="相対誤差の許容値 (default: 1e-4)")
    p.add_argument(
        "--mutate",
        nargs="?",
        const="conv2d",
        metavar="CASE",
        help="指定ケースの勾配をわざと壊して失敗を確認 (default: conv2d)",
    )

    p = sub.add_parser("toytrain", help="ALD/DSL のトイ学習 (DSL あり/なし比較)")
    p.add_argument("-s", "--seed", type=int, help="乱数シード (必須)")
    p.add_argument("-a", "--ablation", action="store_true", help="ALD × DSL の 2×2 を学習")
    p.add_argument("-o", "--out-dir", type=pathlib.Path, help="レポートとパラメータの出力先")

    p = sub.add_parser("isp", help="RAW フレームを簡易 ISP で PNG に現像")
    p.add_argument("input", type=pathlib.Path, help="RAW ファイル・RAW ディレクトリ・シーケンス")
    p.add_argument("output", type=pathlib.Path, help="PNG ファイルまたは出力ディレクトリ")
    p.add_argument("-g", "--gamma", type=float, default=2.2, help="ガンマ (default: 2.2)")
    p.add_argument(
        "--wb",
        type=float,
        nargs=3,
        default=[1.0, 1.0, 1.0],
        metavar=("R", "G", "B"),
        help="ホワイトバランスゲイン",
    )
    p.add_argument("--exposure", type=float, default=1.0, help="露出倍率 (default: 1.0)")
    return ap


def setup_logging(level: str) -> None:
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
    logging.basicConfig(level=level, format="%(message)s", handlers=[handler], force=True)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    err = Console(stderr=True)
    try:
        rest, overrides = split_overrides(argv)
    except ConfigError as e:
        err.print(f"[bold red]設定エラー:[/] {e}")
        return EXIT_USAGE
    try:
        args = build_parser().parse_args(rest)
    except SystemExit as e:
        # --help / --version は 0、使い方の誤りは 2
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    setup_logging(args.log_level)
    console = Console()
    try:
        cfg = apply_overrides(load_config(args.config), overrides)
        if getattr(args, "seed", None) is not None:
            cfg = replace(cfg, seed=args.seed)
        logger.info("resolved config:\n%s", cfg.to_toml())
        err.print(f"config hash: {cfg.config_hash()}")
        return COMMANDS[args.command](args, cfg, console)
    except ConfigError as e:
        err.print(f"[bold red]設定エラー:[/] {e}")
        return EXIT_USAGE
    except (FormatError, OSError) as e:
        err.print(f"[bold red]入出力エラー:[/] {e}")
        return EXIT_IO
    except (
        MetricUndefinedError,
        ContractViolation,
        DimensionError,
        TrainingError,
        NumericalError,
    ) as e:
        err.print(f"[bold red]エラー:[/] {e}")
        return EXIT_FAIL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
