"""Fractional-order loop shaping: approximations, filters, margins and simulation."""

from ._loopshape import (
    LoopshapeError,
    TransferFunction,
    assemble_controller,
    carlson,
    cfe,
    crone,
    discretize,
    feedback,
    gamma,
    load_session,
    margins,
    matsuda,
    realize_filter,
    run_cli,
    save_session,
    simulate,
)

__all__ = [
    "LoopshapeError",
    "TransferFunction",
    "assemble_controller",
    "carlson",
    "cfe",
    "crone",
    "discretize",
    "feedback",
    "gamma",
    "load_session",
    "margins",
    "matsuda",
    "realize_filter",
    "run_cli",
    "save_session",
    "simulate",
]
