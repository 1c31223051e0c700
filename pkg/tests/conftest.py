import hypothesis.strategies as st
from hypothesis import settings

from qcasim.core import Cell, Function, GridGeometry, Layout, Rotation

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@st.composite
def layouts(draw, max_cells: int = 30):
    """Random valid layouts: unique positions, unique labels, any zones."""
    positions = draw(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
                              min_size=1, max_size=max_cells, unique=True))
    cells = []
    for k, (x, y) in enumerate(positions):
        kind = draw(st.sampled_from(list(Function)))
        zone = draw(st.integers(0, 3))
        rot = draw(st.sampled_from(list(Rotation)))
        if kind is Function.FIXED:
            cells.append(Cell(x, y, zone, kind, polarization=draw(st.sampled_from([-1.0, 1.0])),
                              rotation=rot))
        elif kind in (Function.INPUT, Function.OUTPUT):
            cells.append(Cell(x, y, zone, kind, label=f"{kind.value[0]}{k}", rotation=rot))
        else:
            cells.append(Cell(x, y, zone, rotation=rot))
    geometry = draw(st.sampled_from([GridGeometry(), GridGeometry(16, 20, 8), GridGeometry(18, 22.5, 9)]))
    name = draw(st.from_regex(r"[A-Za-z][A-Za-z0-9_.-]{0,10}", fullmatch=True))
    return Layout(name, cells, geometry)


# --- acceptance reporting -------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, str, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        verdict, title, seconds = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {verdict}  {title}  ({seconds:.2f} s)")
