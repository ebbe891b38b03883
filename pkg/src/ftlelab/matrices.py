"""2x2 matrices over signed log-domain scalars.

Used for the per-return Jacobians, their diagonal/fold factors and the
running products whose entries exceed native float range.
"""

from __future__ import annotations

from dataclasses import dataclass

from .logscalar import SignedLogReal


@dataclass(frozen=True, slots=True)
class Jacobian2:
    """Row-major 2x2 matrix of :class:`SignedLogReal` entries."""

    a11: SignedLogReal
    a12: SignedLogReal
    a21: SignedLogReal
    a22: SignedLogReal

    @classmethod
    def from_floats(cls, m11: float, m12: float, m21: float, m22: float) -> "Jacobian2":
        f = SignedLogReal.from_float
        return cls(f(m11), f(m12), f(m21), f(m22))

    @classmethod
    def diagonal(cls, d1: SignedLogReal, d2: SignedLogReal) -> "Jacobian2":
        z = SignedLogReal.zero()
        return cls(d1, z, z, d2)

    @classmethod
    def identity(cls) -> "Jacobian2":
        one, z = SignedLogReal.one(), SignedLogReal.zero()
        return cls(one, z, z, one)

    def matmul(self, other: "Jacobian2") -> "Jacobian2":
        """self @ other."""
        return Jacobian2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def apply(self, v: tuple[SignedLogReal, SignedLogReal]) -> tuple[SignedLogReal, SignedLogReal]:
        return (self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1])

    def det(self) -> SignedLogReal:
        return self.a11 * self.a22 - self.a12 * self.a21

    def entries(self) -> tuple[SignedLogReal, SignedLogReal, SignedLogReal, SignedLogReal]:
        return (self.a11, self.a12, self.a21, self.a22)

    def to_floats(self) -> tuple[float, float, float, float]:
        return tuple(e.to_float() for e in self.entries())  # type: ignore[return-value]
