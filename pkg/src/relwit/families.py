"""The eight witness families used to organize physical observability checks."""

from __future__ import annotations

from enum import Enum


class WitnessFamily(Enum):
    """Physical category of the check that can make a relation observable."""

    SUPPORT = "support"
    CONTAINMENT = "containment"
    PROXIMITY = "proximity"
    VERTICAL_ORDER = "vertical_order"
    ATTACHMENT = "attachment"
    ORIENTATION = "orientation"
    INTERACTION = "interaction"
    FUNCTIONAL_UNCERTAIN = "functional_uncertain"

    @property
    def index(self) -> int:
        return FAMILY_ORDER.index(self)

    @classmethod
    def from_name(cls, name: str) -> "WitnessFamily":
        return cls(name)


# Canonical ordering shared by family-distribution vectors, probe vectors and
# verifier weight tables. Do not reorder: serialized artifacts depend on it.
FAMILY_ORDER: tuple[WitnessFamily, ...] = (
    WitnessFamily.SUPPORT,
    WitnessFamily.CONTAINMENT,
    WitnessFamily.PROXIMITY,
    WitnessFamily.VERTICAL_ORDER,
    WitnessFamily.ATTACHMENT,
    WitnessFamily.ORIENTATION,
    WitnessFamily.INTERACTION,
    WitnessFamily.FUNCTIONAL_UNCERTAIN,
)

N_FAMILIES = len(FAMILY_ORDER)
