"""Human-set per-component decision policy.

The policy lives outside the model file so inspection engineers can retune
weights and thresholds without retraining. Weights rescale a component's
share of the distance score; thresholds turn scores into decisions.
"""

import json
import math
from dataclasses import dataclass, field

from .exceptions import ParameterError


@dataclass
class PolicyConfig:
    weights: dict = field(default_factory=dict)  # component id -> w_k >= 0
    thresholds: dict = field(default_factory=dict)  # component id -> t_k
    global_threshold: float = math.inf
    ignore_background: bool = True

    def weight_for(self, component_id: int) -> float:
        return float(self.weights.get(component_id, 1.0))

    def threshold_for(self, component_id: int) -> float:
        return float(self.thresholds.get(component_id, math.inf))

    def validate(self) -> "PolicyConfig":
        for k, w in self.weights.items():
            if not math.isfinite(w) or w < 0:
                raise ParameterError(f"weight for component {k} must be finite and >= 0")
        for k, t in self.thresholds.items():
            if math.isnan(t):
                raise ParameterError(f"threshold for component {k} must not be NaN")
        if math.isnan(self.global_threshold):
            raise ParameterError("global threshold must not be NaN")
        return self

    def to_dict(self) -> dict:
        return {
            "policy": {
                "weights": {str(k): float(v) for k, v in sorted(self.weights.items())},
                "thresholds": {str(k): float(v) for k, v in sorted(self.thresholds.items())},
                "global_threshold": self.global_threshold
                if math.isfinite(self.global_threshold)
                else None,
                "ignore_background": bool(self.ignore_background),
            }
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyConfig":
        body = data.get("policy", data)
        gt = body.get("global_threshold")
        policy = cls(
            weights={int(k): float(v) for k, v in (body.get("weights") or {}).items()},
            thresholds={int(k): float(v) for k, v in (body.get("thresholds") or {}).items()},
            global_threshold=math.inf if gt is None else float(gt),
            ignore_background=bool(body.get("ignore_background", True)),
        )
        return policy.validate()


def load_policy(path) -> PolicyConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return PolicyConfig.from_dict(json.load(fh))


def save_policy(policy: PolicyConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(policy.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
