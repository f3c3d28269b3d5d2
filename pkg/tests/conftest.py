import io

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20180901)


def encode(arr_u8, fmt="PNG", **kw):
    buf = io.BytesIO()
    Image.fromarray(arr_u8).save(buf, format=fmt, **kw)
    return buf.getvalue()


def step_image(h=32, w=32, lo=0.0, hi=1.0, at=None):
    img = np.full((h, w), lo)
    img[:, (w // 2 if at is None else at):] = hi
    return img


def grad_energy(u):
    return float((np.diff(u, axis=0) ** 2).sum() + (np.diff(u, axis=1) ** 2).sum())


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    results = item.config.stash.setdefault(_CRITERIA, {})
    key = mark.args
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    if rep.when == "call" or rep.failed:
        results[key] = results.get(key, True) and not failed


_CRITERIA = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
