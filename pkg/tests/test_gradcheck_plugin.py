import pytest
from rich.console import Console

from src.domain.errors import ConfigError

pytestmark = pytest.mark.usefixtures("clean_registry")


def test_registry_is_empty_until_case_is_imported():
    from src.gradcheck.base import all_cases

    assert all_cases() == []

    import src.gradcheck.g01_conv2d  # noqa: F401

    assert [c.name for c in all_cases()] == ["conv2d"]


def test_autoimport_registers_every_case():
    from src.gradcheck.autoimport import auto_import_all
    from src.gradcheck.base import all_cases

    auto_import_all(reload=True)
    names = [c.name for c in all_cases()]
    assert names == sorted(names)
    for expected in (
        "conv2d",
        "conv2d_grouped_reflect",
        "softmax_normalize",
        "global_avg_pool",
        "fully_connected",
        "sigmoid",
        "relu",
        "ald_block",
        "loss_ds",
        "loss_tv",
        "loss_ds_normalized",
        "loss_tv_normalized",
        "toynet",
    ):
        assert expected in names


@pytest.mark.parametrize(
    "module,name",
    [
        ("src.gradcheck.g01_conv2d", "conv2d"),
        ("src.gradcheck.g02_conv2d_grouped_reflect", "conv2d_grouped_reflect"),
        ("src.gradcheck.g03_softmax_normalize", "softmax_normalize"),
        ("src.gradcheck.g04_global_avg_pool", "global_avg_pool"),
        ("src.gradcheck.g05_fully_connected", "fully_connected"),
        ("src.gradcheck.g06_sigmoid", "sigmoid"),
        ("src.gradcheck.g07_relu", "relu"),
        ("src.gradcheck.g08_ald_block", "ald_block"),
        ("src.gradcheck.g09_loss_ds", "loss_ds"),
        ("src.gradcheck.g10_loss_tv", "loss_tv"),
        ("src.gradcheck.g11_toynet", "toynet"),
        ("src.gradcheck.g12_loss_ds_normalized", "loss_ds_normalized"),
        ("src.gradcheck.g13_loss_tv_normalized", "loss_tv_normalized"),
    ],
)
def test_case_passes_and_mutation_fails(ensure_case, module, name):
    case = ensure_case(module, name)
    for seed in range(3):
        report = case.run(seed, 1e-5, 1e-4)
        assert report.passed, f"{name} seed={seed}: {report}"
        assert report.n_checked > 0
    assert not case.run(0, 1e-5, 1e-4, mutate=True).passed


def test_run_suite_flags_only_the_mutated_case():
    from src.gradcheck.suite import print_suite_rich, run_suite

    report = run_suite(seeds=[0, 1], mutate="softmax_normalize")
    assert not report.passed
    failed = [c.name for c in report.cases if not c.passed]
    assert failed == ["softmax_normalize"]

    console = Console(record=True, width=200)
    print_suite_rich(report, console)
    text = console.export_text()
    assert "FAIL" in text and "softmax_normalize" in text


def test_run_suite_rejects_unknown_mutation():
    from src.gradcheck.suite import run_suite

    with pytest.raises(ConfigError):
        run_suite(seeds=1, mutate="no_such_case")


@pytest.mark.slow
def test_full_suite_twenty_seeds():
    from src.gradcheck.suite import run_suite

    report = run_suite(seeds=20)
    assert report.passed, [(c.name, c.max_rel_err, c.worst) for c in report.cases]
