"""Exact characteristic-class calculus, Whitehead-tower obstructions and Chern-Simons forms.

Modules:

* :mod:`charclass.graded_ring` - truncated graded polynomial rings over Q.
* :mod:`charclass.char_calc` - Chern, Pontrjagin, Chern character and spin classes.
* :mod:`charclass.bundle_model` - cohomology presentations, integral classes, bundles.
* :mod:`charclass.obstruction` - anomaly polynomials and the structure ladder.
* :mod:`charclass.cover_cohomology` - rational cohomology of connected covers.
* :mod:`charclass.cs_forms` - polynomial differential forms and transgressions.
* :mod:`charclass.document` and :mod:`charclass.cli` - input format and command line.
"""

from .bundle_model import (
    BaseSpace,
    Bundle,
    CohClass,
    FieldKind,
    GroupPresentation,
    RationalClass,
    direct_sum,
    divide_class,
    localize,
    virtual_difference,
)
from .char_calc import ch_expansion, ch_from_chern, spin_classes, splitting_oracle
from .cover_cohomology import rational_cover_cohomology, serre_page_check
from .cs_forms import MatrixPolyForm, cs_transgression, verify_transgression
from .graded_ring import GradedPoly, GradedRing
from .obstruction import anomaly_polynomial, evaluate_anomaly, structure_ladder

__version__ = "0.1.0"

__all__ = [
    "BaseSpace",
    "Bundle",
    "CohClass",
    "FieldKind",
    "GradedPoly",
    "GradedRing",
    "GroupPresentation",
    "MatrixPolyForm",
    "RationalClass",
    "anomaly_polynomial",
    "ch_expansion",
    "ch_from_chern",
    "cs_transgression",
    "direct_sum",
    "divide_class",
    "evaluate_anomaly",
    "localize",
    "rational_cover_cohomology",
    "serre_page_check",
    "spin_classes",
    "splitting_oracle",
    "structure_ladder",
    "verify_transgression",
    "virtual_difference",
]
