"""Total-variation flows of discrete differential forms on flat tori."""

from ._tvcycles import (
    Form,
    KVector,
    SolverFailure,
    calibrate,
    closed_projection,
    codifferential,
    comass_norm,
    cone_residual,
    denoise,
    euclid_norm,
    exterior_derivative,
    form_from_string,
    form_to_string,
    hodge_decompose,
    hodge_star,
    is_decomposable,
    l2_inner,
    l2_norm,
    mass_decomposition,
    mass_norm,
    project_cone,
    prox_tv,
    read_form,
    sample_calibrated,
    transversal_pairing,
    tv_energy,
    write_form,
)

__all__ = [
    "Form",
    "KVector",
    "SolverFailure",
    "calibrate",
    "closed_projection",
    "codifferential",
    "comass_norm",
    "cone_residual",
    "denoise",
    "euclid_norm",
    "exterior_derivative",
    "form_from_string",
    "form_to_string",
    "hodge_decompose",
    "hodge_star",
    "is_decomposable",
    "l2_inner",
    "l2_norm",
    "mass_decomposition",
    "mass_norm",
    "project_cone",
    "prox_tv",
    "read_form",
    "sample_calibrated",
    "transversal_pairing",
    "tv_energy",
    "write_form",
]
