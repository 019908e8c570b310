import itertools

import numpy as np
import pytest


def brute_af(indices, n):
    """Independent ambiguity: float phasor sum with no shared tables."""
    tau = np.arange(n)
    return np.exp(2j * np.pi * np.outer(np.asarray(indices), tau) / n).sum(axis=0)


def brute_psl(indices, n, tau_min=1, tau_max=None):
    tau_max = n // 2 if tau_max is None else tau_max
    power = np.abs(brute_af(indices, n)) ** 2
    tau = np.arange(n)
    d = np.minimum(tau, n - tau)
    sel = (d >= tau_min) & (d <= tau_max)
    return power[sel].max() / len(indices) ** 2


def brute_lambda(indices, n):
    lam = [0] * n
    for a, b in itertools.product(indices, repeat=2):
        lam[(a - b) % n] += 1
    return lam


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{criterion:<2} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("AC")[1].split()[0])):
            terminalreporter.write_line(line)
