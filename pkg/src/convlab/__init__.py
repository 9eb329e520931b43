"""convlab: exact-arithmetic convergence radii of differential modules.

The package works on nonarchimedean discs and annuli with all radii kept on
the additive valuation side as exact rationals.  Public surface:

* :mod:`convlab.valcore` -- field modes, scalars, Laurent polynomials, Gauss
  valuations, Newton polygons, slope factorization;
* :mod:`convlab.diffmod` -- differential modules, gauges, cyclic vectors,
  pushforward and the standard test modules;
* :mod:`convlab.radii` -- intrinsic-radius multisets, recursive refinement,
  the spectral oracle and piecewise-affine radius profiles;
* :mod:`convlab.berkdisc` -- points of the unit disc, retractions and
  finite skeleta;
* :mod:`convlab.expo` -- p-adic exponents, Liouville diagnostics, shearing
  and Fuchsian/constant normal forms;
* :mod:`convlab.cli` -- the ``convlab`` command-line interface.
"""

from .errors import (
    AmbiguousInversionError,
    BudgetError,
    ContainmentError,
    ContractionError,
    ConvlabError,
    CyclicSearchError,
    DegenerateInputError,
    GaugeError,
    IntegralityError,
    IntervalError,
    InversionError,
    InversionInfeasibleError,
    IrregularityError,
    LiftingError,
    ModeError,
    NormalizationError,
    ParameterError,
    PrecisionError,
    PreparednessError,
    SchemaError,
    SingularMatrixError,
    SlopeCollisionError,
    SpectrumError,
)
from .valcore import (
    INF,
    NEG_INF,
    FieldMode,
    LaurentPoly,
    NewtonPolygon,
    Scalar,
    SplitResult,
    approx_inverse,
    as_fraction,
    derive,
    gauss_val,
    interval_gauss_val,
    newton_polygon,
    split_by_slope,
)
from .diffmod import (
    CyclicData,
    DiffModule,
    companion_poly_with_cleared_denominators,
    cyclic_vector,
    frobenius_descendant,
    test_module,
    twist_module,
)
from .radii import (
    OracleResult,
    PAFunction,
    RadialEntry,
    RadiiMultiset,
    RadiiProfile,
    VariationRecord,
    VariationReport,
    christol_dwork,
    invert_descendant_multiset,
    junk_irlog,
    module_radii,
    push_multiset,
    radii_profile,
    spectral_radius_oracle,
    variation_check,
)
from .berkdisc import (
    DiscPoint,
    Skeleton,
    SkeletonEdge,
    Subdivision,
    SubdivisionMarker,
    controlling_subdivision,
    dominates,
    homotopy,
    join_radius_log,
)
from .expo import (
    ConstantBasisResult,
    ExponentMultiset,
    LiouvillePartition,
    LiouvilleVerdict,
    ShearResult,
    WeakEquivalenceVerdict,
    constant_basis,
    frac_dist,
    fuchs_basis,
    liouville_partition,
    liouville_profile,
    prepared,
    residue_distance,
    residue_exponent,
    shear,
    weakly_equivalent,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
