"""Colour tables. Colours are data: charts index into these, never invent their own."""

LO_GROUP_COLORS = (
    "#4e79a7",
    "#f28e2b",
    "#59a14f",
    "#e15759",
    "#b07aa1",
    "#9c755f",
)

BLOOM_COLORS = (
    "#deebf7",  # Remember
    "#9ecae1",  # Understand
    "#6baed6",  # Apply
    "#4292c6",  # Analyze
    "#2171b5",  # Evaluate
    "#08306b",  # Create
)

MODULE_COLOR = "#6b6b6b"
AXIS_COLOR = "#333333"
GRID_COLOR = "#dddddd"
SEGMENT_OPACITY = {"all": "1", "passed": "0.7", "not_passed": "0.4"}


def group_color(index: int) -> str:
    return LO_GROUP_COLORS[index % len(LO_GROUP_COLORS)]
