"""Epstein zeta functions, Eisenstein series and indefinite-form counts.

Evaluators for Z_Q(s) (direct, theta, approximate functional equation),
Eisenstein series on SL2(Z) and SL2(Z[i]) through their Epstein
factorizations, lattice-point counts for indefinite forms, and the
mean-square / growth sweeps built on top of them.
"""

from critline.errors import CacheError, DomainError, FormError
from critline.forms import (
    GramForm,
    HyperbolicPoint,
    Signature,
    difference_form,
    discriminant,
    dual,
    evaluate,
    form_from_h2,
    form_from_h3,
    scale,
    signature_of,
    unimodular_transform,
)

__all__ = [
    "CacheError",
    "DomainError",
    "FormError",
    "GramForm",
    "HyperbolicPoint",
    "Signature",
    "difference_form",
    "discriminant",
    "dual",
    "evaluate",
    "form_from_h2",
    "form_from_h3",
    "scale",
    "signature_of",
    "unimodular_transform",
]
