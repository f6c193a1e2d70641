import numpy as np
import pytest

from radial_qec.gf2 import BinaryMatrix, BinaryVector

TOY_HX = """
100000100000100100000000
010000010000010010000000
001000001000001001000000
000100000100010100000000
000010000010001010000000
000001000001100001000000
010000100000000000100100
001000010000000000010010
100000001000000000001001
000010000100000000010100
000001000010000000001010
000100000001000000100001
"""

TOY_HZ = """
100001000000100000001000
010100000000010000100000
001010000000001000010000
100100000000000100000001
010010000000000010000100
001001000000000001000010
000000100001100000100000
000000010100010000010000
000000001010001000001000
000000100100000100000100
000000010010000010000010
000000001001000001000001
"""

PCM_ZERO_A = """
100100
010010
001001
100100
010010
001001
"""

PCM_TOY_A = """
100100
010010
001001
010100
001010
100001
"""

STEP1 = "100100100100110000000000"
STEP2 = "010010100100000000110000"
STEP3 = "110110000000110000110000"
STEP4 = "001001000000001000001000"


def bits(text: str) -> np.ndarray:
    rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
    return np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)


def vec(text: str) -> BinaryVector:
    return BinaryVector.from_dense([int(ch) for ch in text])


@pytest.fixture
def toy_hx() -> BinaryMatrix:
    return BinaryMatrix.from_dense(bits(TOY_HX))


@pytest.fixture
def toy_hz() -> BinaryMatrix:
    return BinaryMatrix.from_dense(bits(TOY_HZ))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical checks")
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


_verdicts: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    detail = dict(item.user_properties).get("detail", "")
    _verdicts[mark.args[0]] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        verdict, detail = _verdicts[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
