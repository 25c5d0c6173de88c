"""低照度マルチオブジェクトトラッキング用ツールキット

RAW 取り込みと低照度ノイズ合成、tracking-by-detection エンジン、
MOT 評価指標、低域通過ダウンサンプリング (ALD) と劣化抑制学習 (DSL) の
小規模数値実装をまとめたパッケージ。
"""

try:
    from importlib.metadata import version

    __version__ = version("nightmot")
except (ImportError, Exception):
    # Fallback for development installs or when package is not installed
    __version__ = "0.1.0"

__all__ = ["__version__"]
