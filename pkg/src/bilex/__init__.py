"""Bilipschitz extension of polyline embeddings of the line.

The extension of f: R -> C is F = Phi o Psi^{-1} in each half-plane, where
Phi maps the half-plane conformally onto the matching side of f(R) and Psi
is the Beurling-Ahlfors extension of psi = f^{-1} o Phi on the real line.
"""
from .ba_ext import BAJacobian, BoundaryReparam, ba_extend, ba_inverse, ba_jacobian, psi_eval
from .conformal import (ExactSector, SchwarzChristoffelMap, build_phi, koebe_check, phi_boundary,
                        phi_boundary_inv, phi_deriv, phi_eval, promotion_gate)
from .curve import (PolylineEmbedding, affine_curve, bend_curve, curve_from_dict, dump_curve,
                    identity_curve, load_curve, mirror, param_set_in_disk, polyline, project_inverse,
                    wedge_curve, zigzag_curve)
from .errors import (BilexError, DegenerateStartError, DomainError, EngineAccuracyError,
                     InvalidCurveError, InversionError, OffCurveError, QuadratureError, UsageError)
from .extension import (ExtensionMap, F_diagnostics, F_eval, F_jacobian, build_extension, lip1_check,
                        lip2_check, linear_conjugation_check, normalization_check)

__version__ = "0.1.0"

__all__ = [
    "BAJacobian", "BoundaryReparam", "ba_extend", "ba_inverse", "ba_jacobian", "psi_eval",
    "ExactSector", "SchwarzChristoffelMap", "build_phi", "koebe_check", "phi_boundary",
    "phi_boundary_inv", "phi_deriv", "phi_eval", "promotion_gate",
    "PolylineEmbedding", "affine_curve", "bend_curve", "curve_from_dict", "dump_curve",
    "identity_curve", "load_curve", "mirror", "param_set_in_disk", "polyline", "project_inverse",
    "wedge_curve", "zigzag_curve",
    "BilexError", "DegenerateStartError", "DomainError", "EngineAccuracyError", "InvalidCurveError",
    "InversionError", "OffCurveError", "QuadratureError", "UsageError",
    "ExtensionMap", "F_diagnostics", "F_eval", "F_jacobian", "build_extension", "lip1_check",
    "lip2_check", "linear_conjugation_check", "normalization_check",
]
