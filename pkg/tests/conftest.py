from pathlib import Path

import pytest

from cellclust.netlist import parse_netlist, read_netlist

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"

NAND2 = """\
mp1 d:OUT g:A s:VDD pmos
mp2 d:OUT g:B s:VDD pmos
mn1 d:OUT g:A s:net1 nmos
mn2 d:net1 g:B s:VSS nmos
"""


@pytest.fixture
def nand2():
    return parse_netlist(NAND2)


@pytest.fixture
def inv4():
    return read_netlist(FIXTURES / "four_inverters.sp")


@pytest.fixture
def fixtures():
    return FIXTURES


# one line per acceptance criterion, printed after the run
_ACCEPTANCE: dict[str, str] = {}


class _Criterion:
    """Starts as FAIL; calling it marks the criterion as passed."""

    def __init__(self, label: str):
        self.label = label
        _ACCEPTANCE[label] = "FAIL"

    def note(self, detail: str) -> None:
        _ACCEPTANCE[self.label] = f"FAIL ({detail})"

    def __call__(self, detail: str = "") -> None:
        _ACCEPTANCE[self.label] = "PASS" + (f" ({detail})" if detail else "")


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    return _Criterion(marker.args[0] if marker else request.node.name)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        status, _, detail = _ACCEPTANCE[label].partition(" ")
        terminalreporter.write_line(f"{status}  {label}  {detail}".rstrip()[:200])
