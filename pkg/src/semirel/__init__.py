"""Numerical laboratory for blow-up of semirelativistic equations with mass.

The equation under study is ``i u_t + (m^2 - Delta)^{1/2} u = lam |u|^p`` on R^n.
"""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    ComplexField,
    SpectralGrid,
    SymbolSpec,
    apply_symbol,
    make_grid,
    weight_field,
)
from .fractional import (  # noqa: E402
    KernelTable,
    RadialProfile,
    bessel_kernel,
    frac_laplacian_point,
    kernel_table,
    kernel_weighted_l1,
    normalization_constant,
)
from .estimates import (  # noqa: E402
    EstimateReport,
    cordoba_check,
    kernel_bound_report,
    massive_estimate_report,
    weight_decay_report,
)
from .lifespan import (  # noqa: E402
    BlowupCertificate,
    DatumSpec,
    ProblemSpec,
    amplitude_constants,
    certify,
    corollary_radii,
    holder_conjugate,
    optimize_radius,
    weighted_mass,
)
from .simulator import SimConfig, TrajectoryRecord, evolve, ode_inequality_report  # noqa: E402

__all__ = [
    "ComplexField",
    "SpectralGrid",
    "SymbolSpec",
    "apply_symbol",
    "make_grid",
    "weight_field",
    "KernelTable",
    "RadialProfile",
    "bessel_kernel",
    "frac_laplacian_point",
    "kernel_table",
    "kernel_weighted_l1",
    "normalization_constant",
    "EstimateReport",
    "cordoba_check",
    "kernel_bound_report",
    "massive_estimate_report",
    "weight_decay_report",
    "BlowupCertificate",
    "DatumSpec",
    "ProblemSpec",
    "amplitude_constants",
    "certify",
    "corollary_radii",
    "holder_conjugate",
    "optimize_radius",
    "weighted_mass",
    "SimConfig",
    "TrajectoryRecord",
    "evolve",
    "ode_inequality_report",
]
