"""Regular m-maps, level-set foliations, and empirical minimality testing."""

__version__ = "0.1.0"

from .autodiff import Jet2, eval_jet, eval_jet_batch, fd_gradient, fd_hessian
from .diffgeo import (
    JacobianValue,
    MFormValue,
    MinimalityReading,
    RegularityReport,
    default_readings,
    exterior_differential,
    exterior_differential_batch,
    form_coefficient,
    hessians,
    implicit_mean_curvature,
    implicit_mean_curvature_batch,
    jacobi_matrix,
    jacobi_matrix_batch,
    minimality_residual,
    minimality_residual_batch,
    minor_components,
    multi_indices,
    permutation_sign,
    reading_from_label,
    regularity_check,
    sectional_all,
    sectional_hessian,
)
from .errors import (
    ArityError,
    DegenerateGradientError,
    DimensionError,
    DomainError,
    EvaluationError,
    ExpressionSyntaxError,
    MinifolError,
    SchemaError,
    SupportOutsideDomainError,
    UnknownIdentifierError,
    UnsupportedSignatureError,
)
from .kernels import active_backend
from .lemma import (
    AgreementReport,
    FormSample,
    check_closedness,
    check_linear_harmonicity,
    form_from_components,
    form_from_map,
    load_corpus,
    minimality_agreement,
    reconstruct_potential,
    rectangle_loop_integral,
)
from .levelset import (
    Foliation,
    Mesh,
    Polyline,
    export_obj,
    export_obj_path,
    extract_level_set,
    measure,
    mesh_area,
    polyline_length,
    sample_foliation,
)
from .mapdef import (
    MapDefinition,
    eval_expr,
    load_map,
    load_map_file,
    load_map_json,
    parse,
    pretty_print,
)
from .variational import (
    SweepResult,
    VariationField,
    VariationResult,
    curvature_pairing,
    first_variation,
    perturb,
    random_fields,
    stationarity_sweep,
)

__all__ = [
    "AgreementReport",
    "ArityError",
    "DegenerateGradientError",
    "DimensionError",
    "DomainError",
    "EvaluationError",
    "ExpressionSyntaxError",
    "Foliation",
    "FormSample",
    "JacobianValue",
    "Jet2",
    "MFormValue",
    "MapDefinition",
    "Mesh",
    "MinifolError",
    "MinimalityReading",
    "Polyline",
    "RegularityReport",
    "SchemaError",
    "SupportOutsideDomainError",
    "SweepResult",
    "UnknownIdentifierError",
    "UnsupportedSignatureError",
    "VariationField",
    "VariationResult",
    "__version__",
    "active_backend",
    "check_closedness",
    "check_linear_harmonicity",
    "curvature_pairing",
    "default_readings",
    "eval_expr",
    "eval_jet",
    "eval_jet_batch",
    "export_obj",
    "export_obj_path",
    "exterior_differential",
    "exterior_differential_batch",
    "extract_level_set",
    "fd_gradient",
    "fd_hessian",
    "first_variation",
    "form_coefficient",
    "form_from_components",
    "form_from_map",
    "hessians",
    "implicit_mean_curvature",
    "implicit_mean_curvature_batch",
    "jacobi_matrix",
    "jacobi_matrix_batch",
    "load_corpus",
    "load_map",
    "load_map_file",
    "load_map_json",
    "measure",
    "mesh_area",
    "minimality_agreement",
    "minimality_residual",
    "minimality_residual_batch",
    "minor_components",
    "multi_indices",
    "parse",
    "permutation_sign",
    "perturb",
    "polyline_length",
    "pretty_print",
    "random_fields",
    "reading_from_label",
    "reconstruct_potential",
    "rectangle_loop_integral",
    "regularity_check",
    "sample_foliation",
    "sectional_all",
    "sectional_hessian",
    "stationarity_sweep",
]
