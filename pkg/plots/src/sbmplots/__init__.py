"""Figure rendering for sweep result CSV files."""

from .render import (
    NoDataError,
    PointStats,
    REQUIRED_COLUMNS,
    SchemaError,
    fitted_slope,
    load_points,
    render,
)

__version__ = "0.1.0"
