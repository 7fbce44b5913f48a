"""Numerical construction of embedded doubly-periodic minimal surfaces with
Scherk-type ends: Weierstrass data, period problems, Jenkins-Serrin graphs and
meshes."""

__version__ = "0.1.0"

SCOPE_STATEMENT = (
    "Existence and nonexistence theorems for these families are not reproduced "
    "as results. What the package provides instead is numerical evidence: "
    "invariant checks on the Weierstrass data, closed period problems solved to "
    "declared tolerances, degree-theoretic enclosure certificates for the "
    "two-parameter period problems, and truncation-ladder trends for the "
    "Jenkins-Serrin graphs. Families without explicit Weierstrass data are "
    "rejected as out of scope."
)
