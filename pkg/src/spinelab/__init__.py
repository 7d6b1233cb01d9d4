"""Critical points of the systole function and spines of Teichmüller space in genus two."""

__version__ = "0.1.0"

from .bolza import bolza_point, bolza_preset, bolza_systoles, six_curve_critical_point, six_curve_system
from .hyperbolic import FNPoint, geodesic_length
from .minima import LengthFunctional, certify_critical_point, minimize_length_functional
from .spectrum import enumerate_short_geodesics, systoles
from .topology import CurveSystem, horizon_subcomplex, is_filling
from .words import CurveClass, reduce_word

__all__ = [
    "CurveClass",
    "CurveSystem",
    "FNPoint",
    "LengthFunctional",
    "bolza_point",
    "bolza_preset",
    "bolza_systoles",
    "certify_critical_point",
    "enumerate_short_geodesics",
    "geodesic_length",
    "horizon_subcomplex",
    "is_filling",
    "minimize_length_functional",
    "reduce_word",
    "six_curve_critical_point",
    "six_curve_system",
    "systoles",
]
