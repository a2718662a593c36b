from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from dualhyp import _align_py, _kernels
from dualhyp.nbest import Modality, NBestList

DATA = Path(__file__).parent / "data"

KERNELS = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])


# the kernel fixture only swaps module attributes, so sharing it across examples is fine
KERNEL_SETTINGS = settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@pytest.fixture(params=KERNELS)
def kernel(request, monkeypatch):
    """Run a test once per available edit-distance kernel."""
    if request.param == "python":
        monkeypatch.setattr(_kernels, "edit_distance", _align_py.edit_distance)
        monkeypatch.setattr(_kernels, "edit_ops", _align_py.edit_ops)
    return request.param


def load_cases() -> list[dict]:
    return json.loads((DATA / "qualitative_cases.json").read_text(encoding="utf-8"))


def case(name: str) -> dict:
    return next(c for c in load_cases() if c["name"] == name)


def case_nbest(c: dict) -> tuple[NBestList, NBestList]:
    return (
        NBestList.from_texts([t for t, _ in c["asr"]], Modality.ASR),
        NBestList.from_texts([t for t, _ in c["vsr"]], Modality.VSR),
    )


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {detail}")
