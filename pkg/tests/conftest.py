import numpy as np
import pytest

from musictrunc import _kernels_py

try:
    from musictrunc import _kernels as _kernels_c
except ImportError:  # pragma: no cover - extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_c is not None:
    BACKENDS.append(pytest.param(_kernels_c, id="compiled"))


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return request.param


def random_distribution(rng: np.random.Generator, max_support: int = 64, zeros: bool = True) -> np.ndarray:
    n = int(rng.integers(1, max_support + 1))
    p = rng.dirichlet(np.full(n, float(rng.choice([0.1, 0.5, 1.0, 5.0]))))
    if zeros and n > 1:
        p[rng.random(n) < 0.15] = 0.0
    if p.sum() == 0:
        p[int(rng.integers(n))] = 1.0
    return p / p.sum()


from hypothesis import strategies as st

from musictrunc.corpus import Bar, Note, Score, TimeSignature

TIME_SIGNATURES = [(4, 4), (3, 4), (6, 8), (2, 2), (5, 8), (7, 16), (1, 1), (12, 8)]


@st.composite
def scores(draw, single_ts: bool = False, fit: bool = False, max_bars: int = 6):
    """Valid scores; ``fit`` keeps every note inside its bar without overlaps."""
    first = draw(st.sampled_from(TIME_SIGNATURES))
    bars = []
    for _ in range(draw(st.integers(1, max_bars))):
        ts = TimeSignature(*(first if single_ts else draw(st.sampled_from(TIME_SIGNATURES))))
        onsets = sorted(draw(st.sets(st.integers(0, ts.capacity - 1), max_size=8)))
        notes = []
        for i, onset in enumerate(onsets):
            limit = (onsets[i + 1] if i + 1 < len(onsets) else ts.capacity) - onset if fit else 192
            duration = draw(st.integers(1, min(limit, 192)))
            notes.append(Note(draw(st.integers(0, 127)), onset, duration))
        bars.append(Bar(ts, tuple(notes)))
    name = draw(st.text(st.characters(whitelist_categories=("L", "N")), min_size=1, max_size=12))
    return Score(name, tuple(bars)).validate()


# acceptance criteria report one line each in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
