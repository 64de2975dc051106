"""Derived outputs computed from stored evaluation records.

Nothing here can run a model: transforms only read records that the
evaluation ledger already holds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .exceptions import TransformDomainError

IDENTITY = "identity"
NATURAL_LOG = "natural_log"
DIVIDE_BY_PRODUCT = "divide_by_product"
AFFINE = "affine"
KINDS = (IDENTITY, NATURAL_LOG, DIVIDE_BY_PRODUCT, AFFINE)


class _PointError(ValueError):
    pass


@dataclass(frozen=True)
class TransformSpec:
    """One step of an output transform chain.

    ``divide_by_product`` divides by ``constant * prod(physical[i] for i in
    indices)``, read from the same record, so the divisor changes from point
    to point.
    """

    kind: str = IDENTITY
    indices: tuple[int, ...] = ()
    constant: float = 1.0
    scale: float = 1.0
    offset: float = 0.0
    parameter_names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    def to_dict(self) -> dict:
        if self.kind == DIVIDE_BY_PRODUCT:
            return {
                "kind": self.kind,
                "parameters": list(self.parameter_names),
                "constant": self.constant,
            }
        if self.kind == AFFINE:
            return {"kind": self.kind, "scale": self.scale, "offset": self.offset}
        return {"kind": self.kind}

    def _value(self, value: float, physical: Sequence[float]) -> float:
        if self.kind == IDENTITY:
            return value
        if self.kind == NATURAL_LOG:
            if not value > 0:
                raise _PointError(f"natural_log of non-positive value {value!r}")
            return math.log(value)
        if self.kind == AFFINE:
            return self.scale * value + self.offset
        divisor = self.constant
        for i in self.indices:
            divisor *= physical[i]
        if divisor == 0 or not math.isfinite(divisor):
            raise _PointError(f"divisor is {divisor!r}")
        return value / divisor


def _raw(record, output_name):
    try:
        return float(record.outputs[output_name])
    except KeyError:
        raise TransformDomainError([(record.point_id, f"output {output_name!r} not recorded")])


def apply(transform: TransformSpec, record, output_name: str) -> float:
    """Transformed value of ``record.outputs[output_name]``; the record is not modified."""
    return apply_chain([transform], record, output_name)


def apply_chain(chain: Sequence[TransformSpec], record, output_name: str) -> float:
    value = _raw(record, output_name)
    for step in chain:
        try:
            value = step._value(value, record.physical_values)
        except _PointError as exc:
            raise TransformDomainError([(record.point_id, str(exc))]) from None
    return value


def transformed_outputs(chain: Sequence[TransformSpec], records, output_name: str) -> dict:
    """``point_id -> value`` over all records.

    Domain failures are collected across every record and raised together,
    never silently dropped.
    """
    values, failures = {}, []
    for rec in records:
        try:
            values[rec.point_id] = apply_chain(chain, rec, output_name)
        except TransformDomainError as exc:
            failures.extend(exc.failures)
    if failures:
        raise TransformDomainError(failures)
    return values
