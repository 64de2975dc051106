"""Built-in analytic models and the external simulator description.

Analytic models take *reduced* coordinates, so expected effects do not
depend on the physical intervals of the experiment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

ANALYTIC_KINDS = ("linear", "bilinear", "product_exp", "ishigami_like")


@dataclass(frozen=True)
class AnalyticModel:
    """Closed-form test model.

    kinds and args:
      linear          a (list), b=0          y = b + sum(a_i x_i)
      bilinear        c, i, j (0-based)      y = c x_i x_j
      product_exp     a (list), scale=1      y = scale * exp(sum(a_i x_i))
      ishigami_like   a, b                   y = sin z1 + a sin^2 z2 + b z3^4 sin z1,
                                             z = pi (2x - 1) on the first three inputs
    """

    kind: str
    args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ANALYTIC_KINDS:
            raise ValueError(f"unknown analytic model {self.kind!r}; expected one of {ANALYTIC_KINDS}")
        need = {
            "linear": ("a",),
            "bilinear": ("c", "i", "j"),
            "product_exp": ("a",),
            "ishigami_like": ("a", "b"),
        }[self.kind]
        missing = [n for n in need if n not in self.args]
        if missing:
            raise ValueError(f"{self.kind} model needs args {missing}")

    def check_dimension(self, k: int) -> None:
        if self.kind in ("linear", "product_exp") and len(self.args["a"]) != k:
            raise ValueError(f"{self.kind}: {len(self.args['a'])} coefficients for {k} parameters")
        if self.kind == "bilinear":
            i, j = self.args["i"], self.args["j"]
            if not (0 <= i < k and 0 <= j < k and i != j):
                raise ValueError(f"bilinear: indices ({i}, {j}) invalid for {k} parameters")
        if self.kind == "ishigami_like" and k < 3:
            raise ValueError("ishigami_like needs at least 3 parameters")

    def __call__(self, x: Sequence[float]) -> float:
        a = self.args.get("a")
        if self.kind == "linear":
            return self.args.get("b", 0.0) + math.fsum(ai * xi for ai, xi in zip(a, x))
        if self.kind == "bilinear":
            return self.args["c"] * x[self.args["i"]] * x[self.args["j"]]
        if self.kind == "product_exp":
            return self.args.get("scale", 1.0) * math.exp(math.fsum(ai * xi for ai, xi in zip(a, x)))
        z1, z2, z3 = (math.pi * (2.0 * v - 1.0) for v in x[:3])
        return math.sin(z1) + a * math.sin(z2) ** 2 + self.args["b"] * z3**4 * math.sin(z1)

    def to_dict(self) -> dict:
        return {"type": "analytic", "kind": self.kind, "args": dict(self.args)}


@dataclass(frozen=True)
class ExternalModelSpec:
    """A simulator run as a child process over the CSV request/response files.

    ``command`` is an argument list; ``{request}`` and ``{response}`` inside
    any argument are replaced with the file paths of the batch.
    """

    command: tuple[str, ...]
    outputs: tuple[str, ...]
    timeout_s: float = 3600.0
    max_parallel: int = 1
    batch_size: int = 0  # 0: split points evenly over max_parallel batches

    def __post_init__(self):
        object.__setattr__(self, "command", tuple(self.command))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.command:
            raise ValueError("external model command must not be empty")
        if not self.outputs:
            raise ValueError("external model must declare at least one output")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")

    def to_dict(self) -> dict:
        return {
            "type": "external",
            "command": list(self.command),
            "outputs": list(self.outputs),
            "timeout_s": self.timeout_s,
            "max_parallel": self.max_parallel,
            "batch_size": self.batch_size,
        }
