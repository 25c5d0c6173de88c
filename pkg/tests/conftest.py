import importlib
import sys
from collections.abc import Callable

import pytest

import src.gradcheck.base as base
from src.domain.config import NoiseConfig
from src.domain.types import NoiseParams
from src.simulation.scenes import Scene, make_cv_scene

GRADCHECK_MODULE_PREFIX = "src.gradcheck.g"


def reset_case_registry() -> None:
    """勾配検証レジストリを空にし、ケースモジュールと autoimport を再import可能にする"""
    base.case_registry.clear()
    for name in list(sys.modules):
        if name.startswith(GRADCHECK_MODULE_PREFIX) or name == "src.gradcheck.autoimport":
            sys.modules.pop(name, None)
    importlib.invalidate_caches()


@pytest.fixture
def clean_registry():
    reset_case_registry()
    yield
    reset_case_registry()


@pytest.fixture
def ensure_case(clean_registry):
    """
    ケースモジュールだけを import し、登録されたケースを返す。

        case = ensure_case("src.gradcheck.g01_conv2d", "conv2d")
    """

    def _loader(module_path: str, case_name: str):
        reset_case_registry()
        importlib.import_module(module_path)
        matches = [c for c in base.all_cases() if c.name == case_name]
        assert matches, f"{case_name} not registered in {module_path}"
        assert len(base.all_cases()) == 1, [c.name for c in base.all_cases()]
        return matches[0]

    return _loader


@pytest.fixture
def noise() -> NoiseParams:
    """既定の physics ノイズ (K=1, σ_read=2, σ_row=0.5, q=1, ratio=0.01)"""
    return NoiseConfig().params()


@pytest.fixture
def zero_noise() -> NoiseParams:
    return NoiseParams(K=0.0, sigma_read=0.0, sigma_row=0.0, quant_step=0.0, ratio=1.0)


@pytest.fixture(scope="session")
def cv_scene() -> Callable[..., Scene]:
    """make_cv_scene のキャッシュ付きファクトリ (同じ引数なら同じシーンを返す)"""
    cache: dict[tuple[int, int, float, int], Scene] = {}

    def _make(n_objects: int, n_frames: int, dropout: float, seed: int) -> Scene:
        key = (n_objects, n_frames, dropout, seed)
        if key not in cache:
            cache[key] = make_cv_scene(
                n_objects=n_objects, n_frames=n_frames, dropout=dropout, seed=seed
            )
        return cache[key]

    return _make
