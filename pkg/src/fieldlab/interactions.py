"""Catalog of bounded measurable interaction functions with boundary metadata.

Each entry evaluates pointwise on numpy arrays and declares, rather than
infers, its one-sided limits at zero, its limits at +/- infinity, its sup
norm, and the location of any jump discontinuities.  Discontinuous entries
use the midpoint convention at the jump (the jump point has measure zero in
every integral this package computes, and the midpoint keeps quadrature
symmetric).

All evaluation rules are module-level functions or ``functools.partial``
objects over them, so catalog entries pickle cleanly into worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable

import numpy as np
from scipy import special

from .exceptions import CatalogError, MissingLimitError
from .propagator import ModelParams, covariance_zero

__all__ = [
    "BoundedInteraction",
    "InteractionAsymptotics",
    "ScaledInteraction",
    "asymptotics",
    "catalog_interaction",
    "catalog_names",
    "infinity_asymptotics",
    "scale_argument",
    "zero_asymptotics",
]


@dataclass(frozen=True)
class BoundedInteraction:
    """A bounded measurable function of the field value, with metadata.

    fn must accept and return numpy arrays.  The four optional limits are
    the one-sided limits at zero (v_plus0 / v_minus0) and the limits at
    +/- infinity (v_plusinf / v_minusinf); they are declared by whoever
    constructs the entry.  ``discontinuities`` lists the jump locations and
    is consumed by quadrature routines to split integration panels.
    """

    name: str
    fn: Callable
    sup_norm: float
    v_plus0: float | None = None
    v_minus0: float | None = None
    v_plusinf: float | None = None
    v_minusinf: float | None = None
    discontinuities: tuple[float, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.sup_norm) or self.sup_norm < 0:
            raise ValueError("sup_norm must be finite and nonnegative")

    def __call__(self, w):
        return self.fn(w)


@dataclass(frozen=True)
class InteractionAsymptotics:
    """Mean/jump combinations of the declared boundary limits."""

    mean0: float
    jump0: float
    meaninf: float
    jumpinf: float


def zero_asymptotics(v: BoundedInteraction) -> tuple[float, float]:
    """(mean, jump) of the one-sided limits at zero: ((V+ + V-)/2, (V+ - V-)/2)."""
    if v.v_plus0 is None or v.v_minus0 is None:
        raise MissingLimitError(
            f"interaction '{v.name}' does not declare one-sided limits at zero "
            "(the near-zero limits assumption is not satisfied)"
        )
    return 0.5 * (v.v_plus0 + v.v_minus0), 0.5 * (v.v_plus0 - v.v_minus0)


def infinity_asymptotics(v: BoundedInteraction) -> tuple[float, float]:
    """(mean, jump) of the limits at +/- infinity."""
    if v.v_plusinf is None or v.v_minusinf is None:
        raise MissingLimitError(
            f"interaction '{v.name}' does not declare limits at +/- infinity "
            "(the large-argument limits assumption is not satisfied)"
        )
    return 0.5 * (v.v_plusinf + v.v_minusinf), 0.5 * (v.v_plusinf - v.v_minusinf)


def asymptotics(v: BoundedInteraction) -> InteractionAsymptotics:
    """All four boundary combinations; requires all four limits declared."""
    mean0, jump0 = zero_asymptotics(v)
    meaninf, jumpinf = infinity_asymptotics(v)
    return InteractionAsymptotics(mean0, jump0, meaninf, jumpinf)


# --- evaluation rules (module level so they pickle) -------------------------

def _sgn(w):
    return np.sign(w)


def _heaviside(w):
    # midpoint value 1/2 at the jump
    return 0.5 * (np.sign(w) + 1.0)


def _gauss_bump(w):
    w = np.asarray(w, dtype=float)
    return np.exp(-0.5 * w * w)


def _step_at(w, w0):
    return 0.5 * (np.sign(np.asarray(w, dtype=float) - w0) + 1.0)


def _erf_scaled(w, scale):
    return special.erf(scale * np.asarray(w, dtype=float) / math.sqrt(2.0))


def _zoomed(w, base_fn, zoom):
    return base_fn(zoom * np.asarray(w, dtype=float))


def _make_sgn():
    return BoundedInteraction(
        name="sgn", fn=_sgn, sup_norm=1.0,
        v_plus0=1.0, v_minus0=-1.0, v_plusinf=1.0, v_minusinf=-1.0,
        discontinuities=(0.0,),
    )


def _make_heaviside():
    return BoundedInteraction(
        name="heaviside", fn=_heaviside, sup_norm=1.0,
        v_plus0=1.0, v_minus0=0.0, v_plusinf=1.0, v_minusinf=0.0,
        discontinuities=(0.0,),
    )


def _make_arctan():
    return BoundedInteraction(
        name="arctan", fn=np.arctan, sup_norm=0.5 * math.pi,
        v_plus0=0.0, v_minus0=0.0, v_plusinf=0.5 * math.pi, v_minusinf=-0.5 * math.pi,
    )


def _make_tanh():
    return BoundedInteraction(
        name="tanh", fn=np.tanh, sup_norm=1.0,
        v_plus0=0.0, v_minus0=0.0, v_plusinf=1.0, v_minusinf=-1.0,
    )


def _make_gauss_bump():
    return BoundedInteraction(
        name="gauss_bump", fn=_gauss_bump, sup_norm=1.0,
        v_plus0=1.0, v_minus0=1.0, v_plusinf=0.0, v_minusinf=0.0,
    )


def _make_step_at(w0: float):
    w0 = float(w0)
    if w0 == 0.0:
        v_plus0, v_minus0 = 1.0, 0.0
    else:
        # the jump sits away from zero, so both one-sided limits at zero agree
        v_plus0 = v_minus0 = 1.0 if w0 < 0 else 0.0
    return BoundedInteraction(
        name=f"step_at({w0:g})", fn=partial(_step_at, w0=w0), sup_norm=1.0,
        v_plus0=v_plus0, v_minus0=v_minus0, v_plusinf=1.0, v_minusinf=0.0,
        discontinuities=(w0,),
    )


def _make_erf_scaled(scale: float = 1.0):
    scale = float(scale)
    if scale <= 0:
        raise CatalogError("erf_scaled requires scale > 0")
    return BoundedInteraction(
        name=f"erf_scaled({scale:g})", fn=partial(_erf_scaled, scale=scale),
        sup_norm=1.0, v_plus0=0.0, v_minus0=0.0, v_plusinf=1.0, v_minusinf=-1.0,
    )


_CATALOG = {
    "sgn": _make_sgn,
    "heaviside": _make_heaviside,
    "arctan": _make_arctan,
    "tanh": _make_tanh,
    "gauss_bump": _make_gauss_bump,
    "step_at": _make_step_at,
    "erf_scaled": _make_erf_scaled,
}


def catalog_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def catalog_interaction(name: str, **params) -> BoundedInteraction:
    """Look up an interaction by name; shape parameters go in ``params``.

    ``step_at`` requires ``w0``; ``erf_scaled`` takes an optional ``scale``.
    """
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown interaction '{name}'; catalog: {', '.join(catalog_names())}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise CatalogError(f"bad parameters for '{name}': {exc}") from None


def scale_argument(v: BoundedInteraction, zoom: float) -> BoundedInteraction:
    """The interaction w -> v(zoom * w) for zoom > 0.

    A positive argument rescaling preserves the sup norm and all four
    boundary limits; jump locations move to d / zoom.
    """
    if not zoom > 0:
        raise ValueError("zoom must be positive")
    return replace(
        v,
        name=f"{v.name}[zoom={zoom:g}]",
        fn=partial(_zoomed, base_fn=v.fn, zoom=float(zoom)),
        discontinuities=tuple(t / zoom for t in v.discontinuities),
    )


@dataclass(frozen=True)
class ScaledInteraction:
    """Cutoff-dependent family w -> V(z * w) with z = C(0)^kappa."""

    base: BoundedInteraction
    kappa: float

    def zoom(self, params: ModelParams) -> float:
        return covariance_zero(params) ** self.kappa

    def at_cutoff(self, params: ModelParams) -> BoundedInteraction:
        return scale_argument(self.base, self.zoom(params))
