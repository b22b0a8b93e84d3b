"""Figure rendering for probfwd CSV outputs. Plots only; never recomputes."""

__version__ = "0.1.0"

from .recipes import FIGURE_IDS, FigureError, FigureRecipe, RenderResult, render

__all__ = ["__version__", "FIGURE_IDS", "FigureError", "FigureRecipe",
           "RenderResult", "render"]
