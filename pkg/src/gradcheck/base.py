# 勾配検証ケースのプラグイン登録
from src.gradcheck.base_impl import GradCheckCase

case_registry: list[GradCheckCase] = []  # 登録された検証ケースのリスト


def register(case: GradCheckCase) -> None:
    case_registry.append(case)


def all_cases() -> list[GradCheckCase]:
    return sorted(case_registry, key=lambda c: c.name)
