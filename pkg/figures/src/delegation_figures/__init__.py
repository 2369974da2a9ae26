"""Figure regeneration for delegation-lab experiment outputs."""

from .spec import FigureSpec, SpecError, load_spec
from .render import (
    load_groups,
    objective_curves,
    participation_means,
    participation_points,
    render,
)

__version__ = "0.1.0"
