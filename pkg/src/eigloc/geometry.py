"""Mode labels and domain descriptions shared by the asymptotic and mode modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

KINDS = ("ball", "shell", "sector", "annulus_sector")


def nu_of_l(l, d=2, c=0.0):
    """Effective Bessel order sqrt((l + d/2 - 1)^2 + c^2)."""
    if l < 0 or d < 2 or c < 0:
        raise DomainError("need l >= 0, d >= 2, c >= 0")
    return math.hypot(l + 0.5 * d - 1.0, c)


@dataclass(frozen=True)
class ModeIndex:
    """Quantum numbers of one eigenmode family: principal k, azimuthal l."""

    k: int
    l: int
    d: int = 2
    c: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("k must be an integer >= 1")
        if int(self.l) != self.l or self.l < 0:
            raise DomainError("l must be an integer >= 0")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError("d must be an integer >= 2")
        if not (math.isfinite(self.c) and self.c >= 0):
            raise DomainError("c must be finite and >= 0")

    @property
    def nu(self):
        return nu_of_l(self.l, self.d, self.c)


@dataclass(frozen=True)
class DomainSpec:
    """Ball, spherical shell, circular sector or annular sector.

    Sectors are 0 < theta < beta*pi in the plane; shells and annulus sectors
    span 1 < r < R.
    """

    kind: str
    d: int = 2
    R: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError("d must be an integer >= 2")
        if self.kind in ("shell", "annulus_sector"):
            if self.R is None or not (math.isfinite(self.R) and self.R > 1):
                raise DomainError("shell domains need R > 1")
        elif self.R is not None:
            raise DomainError(f"{self.kind} takes no outer radius")
        if self.kind in ("sector", "annulus_sector"):
            if self.d != 2:
                raise DomainError("sectors are two-dimensional")
            if self.beta is None or not (0 < self.beta < 2):
                raise DomainError("sector opening beta must lie in (0, 2)")
        elif self.beta is not None:
            raise DomainError(f"{self.kind} takes no opening angle")

    @classmethod
    def ball(cls, d=2):
        return cls("ball", d)

    @classmethod
    def shell(cls, R, d=2):
        return cls("shell", d, R=float(R))

    @classmethod
    def sector(cls, beta):
        return cls("sector", 2, beta=float(beta))

    @classmethod
    def annulus_sector(cls, R, beta):
        return cls("annulus_sector", 2, R=float(R), beta=float(beta))

    @property
    def is_annular(self):
        return self.kind in ("shell", "annulus_sector")

    @property
    def is_sector(self):
        return self.kind in ("sector", "annulus_sector")

    @property
    def inner(self):
        return 1.0 if self.is_annular else 0.0

    @property
    def outer(self):
        return self.R if self.is_annular else 1.0

    def order(self, mode):
        """Bessel order of ``mode`` in this domain.

        Sectors carry the angular factor sin(l theta / beta), whose eigenvalue
        is (l/beta)^2, so their order is sqrt((l/beta)^2 + c^2).
        """
        if mode.d != self.d:
            raise DomainError(f"mode dimension {mode.d} does not match domain dimension {self.d}")
        if self.is_sector:
            if mode.l < 1:
                raise DomainError("sector modes need l >= 1")
            return math.hypot(mode.l / self.beta, mode.c)
        return mode.nu
