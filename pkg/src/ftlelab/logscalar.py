"""Signed log-domain real arithmetic.

Quantities in this package routinely have magnitudes like ``exp(1e7)``,
far outside native float range.  A :class:`SignedLogReal` stores a real
number as ``(sign, ln|value|)`` so products, integer powers and sums of
such quantities remain representable.  All logs are natural logs and all
tolerances elsewhere in the package are stated in log-magnitude units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# Opposite-sign addends whose log magnitudes agree to better than this
# cancel to exact zero; prevents spurious sign flips in near-cancelling sums.
CANCEL_EPS = 1e-13

# exp() overflows doubles just above this; decode saturates to +/-inf.
_EXP_OVERFLOW = 709.782712893384


@dataclass(frozen=True, slots=True)
class SignedLogReal:
    """A real number stored as a sign in {-1, 0, +1} and ln of its magnitude.

    ``sign == 0`` represents exact zero; ``log_mag`` is normalised to 0.0
    in that case and ignored by equality, ordering and hashing.
    """

    sign: int
    log_mag: float = 0.0

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign == 0:
            object.__setattr__(self, "log_mag", 0.0)
        elif not math.isfinite(self.log_mag):
            raise DomainError(f"log_mag must be finite, got {self.log_mag!r}")

    # ---------------------------------------------------------------- build
    @classmethod
    def from_float(cls, x: float) -> "SignedLogReal":
        x = float(x)
        if x == 0.0:
            return _ZERO
        if not math.isfinite(x):
            raise DomainError(f"cannot encode non-finite value {x!r}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, sign: int, log_mag: float) -> "SignedLogReal":
        return cls(sign, float(log_mag))

    @classmethod
    def zero(cls) -> "SignedLogReal":
        return _ZERO

    @classmethod
    def one(cls) -> "SignedLogReal":
        return _ONE

    # ------------------------------------------------------------- convert
    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def to_float(self) -> float:
        """Decode; magnitudes beyond float range saturate to +/-inf."""
        if self.sign == 0:
            return 0.0
        if self.log_mag > _EXP_OVERFLOW:
            return math.inf * self.sign
        return self.sign * math.exp(self.log_mag)

    def to_json_dict(self) -> dict:
        return {"sign": self.sign, "log": self.log_mag}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SignedLogReal":
        return cls(int(d["sign"]), float(d["log"]))

    # ---------------------------------------------------------- arithmetic
    def __neg__(self) -> "SignedLogReal":
        if self.sign == 0:
            return self
        return SignedLogReal(-self.sign, self.log_mag)

    def __abs__(self) -> "SignedLogReal":
        if self.sign == -1:
            return SignedLogReal(1, self.log_mag)
        return self

    def __mul__(self, other: "SignedLogReal") -> "SignedLogReal":
        if self.sign == 0 or other.sign == 0:
            return _ZERO
        return SignedLogReal(self.sign * other.sign, self.log_mag + other.log_mag)

    def __truediv__(self, other: "SignedLogReal") -> "SignedLogReal":
        if other.sign == 0:
            raise DomainError("division by exact zero")
        if self.sign == 0:
            return _ZERO
        return SignedLogReal(self.sign * other.sign, self.log_mag - other.log_mag)

    def __add__(self, other: "SignedLogReal") -> "SignedLogReal":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        la, lb = self.log_mag, other.log_mag
        if self.sign == other.sign:
            hi, lo = (la, lb) if la >= lb else (lb, la)
            return SignedLogReal(self.sign, hi + math.log1p(math.exp(lo - hi)))
        # opposite signs: the larger magnitude wins
        if abs(la - lb) < CANCEL_EPS:
            return _ZERO
        if la > lb:
            win, hi, lo = self.sign, la, lb
        else:
            win, hi, lo = other.sign, lb, la
        return SignedLogReal(win, hi + math.log1p(-math.exp(lo - hi)))

    def __sub__(self, other: "SignedLogReal") -> "SignedLogReal":
        return self + (-other)

    def pow_int(self, n: int) -> "SignedLogReal":
        """Integer power; zero base requires a positive exponent."""
        if self.sign == 0:
            if n > 0:
                return _ZERO
            raise DomainError("zero base with non-positive exponent")
        sign = -1 if (self.sign == -1 and n % 2 != 0) else 1
        return SignedLogReal(sign, self.log_mag * n)

    def sqrt(self) -> "SignedLogReal":
        if self.sign == -1:
            raise DomainError("square root of a negative value")
        if self.sign == 0:
            return _ZERO
        return SignedLogReal(1, self.log_mag / 2.0)

    # ------------------------------------------------------------ ordering
    # Exact sign first, then log magnitude; no epsilon inside the type
    # (callers supply their own tolerances).
    def _key(self) -> tuple[int, float]:
        return (self.sign, self.sign * self.log_mag)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignedLogReal):
            return NotImplemented
        if self.sign == 0 and other.sign == 0:
            return True
        return self.sign == other.sign and self.log_mag == other.log_mag

    def __hash__(self) -> int:
        return hash((self.sign, self.log_mag))

    def __lt__(self, other: "SignedLogReal") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "SignedLogReal") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "SignedLogReal") -> bool:
        return self._key() > other._key()

    def __ge__(self, other: "SignedLogReal") -> bool:
        return self._key() >= other._key()

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.sign == 0:
            return "SignedLogReal(0)"
        return f"SignedLogReal({'+' if self.sign > 0 else '-'}exp({self.log_mag!r}))"


_ZERO = SignedLogReal(0, 0.0)
_ONE = SignedLogReal(1, 0.0)


def slog(x: float) -> SignedLogReal:
    """Shorthand encoder for literals in call sites and tests."""
    return SignedLogReal.from_float(x)


def log_norm2(s: SignedLogReal, u: SignedLogReal) -> SignedLogReal:
    """Euclidean norm sqrt(s^2 + u^2) of a log-domain pair."""
    return (s * s + u * u).sqrt()
