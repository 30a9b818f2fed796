"""Run configuration: one nested document, overridable by CLI flags."""

import copy
import json
from dataclasses import dataclass, field, replace

import yaml

from ..algorithms import ALGORITHMS, Constant, LogOverK, PowerDecay, ScaledPowerDecay
from ..distortion import model_from_dict
from ..exceptions import ConfigError, InvalidStepRuleError, DualDecompError
from ..problem import ConsensusProblem, GeneralConsensusProblem
from .presets import PRESETS, make_preset

RULE_KINDS = ("constant", "power", "scaled", "logk")
SWEEP_KEYS = ("p", "gamma", "c", "bits", "sigma", "seed", "steps", "algorithm")
TOP_LEVEL_KEYS = {"preset", "problem", "algorithm", "rule", "distortion", "iterations", "steps",
                  "seed", "out", "stride", "tol", "sweep"}


@dataclass(frozen=True)
class SweepSpec:
    key: str
    values: tuple

    def __post_init__(self):
        if self.key not in SWEEP_KEYS:
            raise ConfigError("sweep", f"cannot sweep {self.key!r}; choose from {list(SWEEP_KEYS)}")
        if len(self.values) == 0:
            raise ConfigError("sweep", "needs at least one value")


def parse_sweep(text):
    """Parse ``key=v1,v2,...`` into a :class:`SweepSpec`.

    >>> parse_sweep("p=0,0.5,1")
    SweepSpec(key='p', values=(0.0, 0.5, 1.0))
    """
    if "=" not in text:
        raise ConfigError("sweep", f"expected key=v1,v2,... got {text!r}")
    key, _, rest = text.partition("=")
    key = key.strip()
    raw = [v.strip() for v in rest.split(",") if v.strip()]
    return SweepSpec(key, tuple(_coerce(key, v) for v in raw))


def _coerce(key, value):
    try:
        if key in ("bits", "seed", "steps"):
            fval = float(value)
            if fval != int(fval):
                raise ValueError
            return int(fval)
        if key == "algorithm":
            if value not in ALGORITHMS:
                raise ValueError
            return str(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"invalid value {value!r}") from None


@dataclass(frozen=True)
class RunConfig:
    preset: str = None
    problem: dict = None
    algorithm: str = "exact"
    rule: dict = field(default_factory=lambda: {"kind": "power", "gamma": None, "p": 0.0, "c": None})
    distortion: dict = None
    iterations: int = 10_000
    seed: int = 0
    out: str = "out"
    stride: int = 1
    tol: float = None
    sweep: SweepSpec = None

    # -- construction ---------------------------------------------------

    @classmethod
    def from_dict(cls, doc, overrides=None):
        """Merge preset defaults, ``doc`` and flag ``overrides`` (highest priority)."""
        doc = copy.deepcopy(doc or {})
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        unknown = set(doc) - TOP_LEVEL_KEYS
        if unknown:
            bad = sorted(unknown)[0]
            raise ConfigError(bad, "unknown field")
        if "steps" in doc:
            doc.setdefault("iterations", doc.pop("steps"))

        preset = overrides.get("preset", doc.get("preset"))
        if preset is None and doc.get("problem") is None:
            raise ConfigError("preset", "give a preset name or an inline problem")
        if preset is not None and preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = make_preset(preset).defaults if preset is not None else {}

        rule = dict(cls.__dataclass_fields__["rule"].default_factory())
        rule.update(base.get("rule") or {})
        rule.update(_as_mapping(doc.get("rule"), "rule"))
        distortion = copy.deepcopy(base.get("distortion"))
        if "distortion" in doc:
            distortion = None if doc["distortion"] is None else _as_mapping(doc["distortion"], "distortion")

        seed = overrides.get("seed", doc.get("seed", 0))
        cfg = {
            "preset": preset,
            "problem": None if preset is not None else doc.get("problem"),
            "algorithm": overrides.get("algorithm", doc.get("algorithm", base.get("algorithm", "exact"))),
            "iterations": overrides.get("steps", doc.get("iterations", base.get("iterations", 10_000))),
            "seed": seed,
            "out": overrides.get("out", doc.get("out", "out")),
            "stride": overrides.get("stride", doc.get("stride", 1)),
            "tol": overrides.get("tol", doc.get("tol")),
        }
        explicit_kind = "kind" in _as_mapping(doc.get("rule"), "rule") or "rule" in overrides
        if "rule" in overrides:
            rule["kind"] = overrides["rule"]
        for key in ("gamma", "p", "c"):
            if key in overrides:
                rule[key] = overrides[key]
        if "c" in overrides and not explicit_kind and "gamma" not in overrides:
            rule["kind"] = "scaled"
        if "bits" in overrides:
            distortion = _set_distortion(distortion, "quantizer", "bits", overrides["bits"])
        if "sigma" in overrides:
            distortion = _set_distortion(distortion, "noise", "sigma", overrides["sigma"])
        if "generator" in overrides:
            distortion = _set_distortion(distortion, None, "generator", overrides["generator"])
        if distortion is not None and distortion.get("kind") in ("noise", "custom"):
            distortion.setdefault("seed", seed)
            if "seed" in overrides:
                distortion["seed"] = seed

        sweep = overrides.get("sweep", doc.get("sweep"))
        if isinstance(sweep, str):
            sweep = parse_sweep(sweep)
        elif isinstance(sweep, dict):
            if set(sweep) != {"key", "values"}:
                raise ConfigError("sweep", "expects exactly the fields key and values")
            sweep = SweepSpec(sweep["key"], tuple(_coerce(sweep["key"], str(v)) for v in sweep["values"]))
        cfg.update(rule=rule, distortion=distortion, sweep=sweep)
        out = cls(**cfg)
        out.validate()
        return out

    @classmethod
    def load(cls, path, overrides=None):
        try:
            with open(path) as fh:
                doc = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"cannot parse {path}: {exc}") from None
        if doc is not None and not isinstance(doc, dict):
            raise ConfigError("config", "top level must be a mapping")
        return cls.from_dict(doc, overrides)

    # -- validation -----------------------------------------------------

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {list(ALGORITHMS)}")
        _check_int(self.iterations, "iterations", 0)
        _check_int(self.stride, "stride", 1)
        _check_int(self.seed, "seed", 0)
        if self.rule.get("kind") not in RULE_KINDS:
            raise ConfigError("rule.kind", f"must be one of {list(RULE_KINDS)}")
        for key in ("gamma", "p", "c"):
            val = self.rule.get(key)
            if val is not None and not isinstance(val, (int, float)):
                raise ConfigError(f"rule.{key}", "must be a number")
        if self.rule["kind"] in ("scaled", "logk") and self.rule.get("c") is None:
            raise ConfigError("rule.c", f"required for the {self.rule['kind']} schedule")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError("tol", "must be a positive number")
        if self.distortion is not None:
            try:
                model_from_dict(self.distortion)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("distortion", str(exc)) from None
        if self.preset == "general-nets-demo" and self.algorithm != "exact":
            raise ConfigError("algorithm", "the general-nets demo supports only the exact algorithm")

    # -- derived objects ------------------------------------------------

    def build_problem(self):
        if self.preset is not None:
            return make_preset(self.preset, self.seed).problem
        doc = self.problem
        try:
            if "memberships" in doc:
                return GeneralConsensusProblem.from_dict(doc)
            return ConsensusProblem.from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise ConfigError("problem", f"malformed problem document: {exc}") from None
        except DualDecompError as exc:
            raise ConfigError("problem", str(exc)) from None
        except ValueError as exc:
            raise ConfigError("problem", str(exc)) from None

    def build_model(self):
        return model_from_dict(self.distortion)

    def build_rule(self, mu_h=None):
        r = self.rule
        kind = r["kind"]
        try:
            if kind == "logk":
                return LogOverK(r["c"])
            if kind == "scaled":
                if mu_h is None:
                    raise ConfigError("rule.kind", "scaled schedules need an unconstrained problem")
                if float(r.get("p") or 0.0) == 0.0:
                    # the p -> 0 end of the scaled family is the constant step c / mu_h
                    return Constant(r["c"] / mu_h)
                return ScaledPowerDecay(r["c"], r["p"])
            p = float(r.get("p") or 0.0)
            if kind == "constant" or p == 0.0:
                return Constant(r.get("gamma"))
            return PowerDecay(r.get("gamma"), p)
        except InvalidStepRuleError as exc:
            raise ConfigError("rule", str(exc)) from None

    def with_value(self, key, value):
        """Copy of this config with one sweep parameter replaced."""
        rule = dict(self.rule)
        distortion = copy.deepcopy(self.distortion)
        if key in ("p", "gamma", "c"):
            rule[key] = value
            return replace(self, rule=rule, sweep=None)
        if key == "bits":
            return replace(self, distortion=_set_distortion(distortion, "quantizer", "bits", value), sweep=None)
        if key == "sigma":
            return replace(self, distortion=_set_distortion(distortion, "noise", "sigma", value), sweep=None)
        if key == "seed":
            if distortion is not None and "seed" in distortion:
                distortion["seed"] = value
            return replace(self, seed=value, distortion=distortion, sweep=None)
        if key == "steps":
            return replace(self, iterations=value, sweep=None)
        if key == "algorithm":
            return replace(self, algorithm=value, sweep=None)
        raise ConfigError("sweep", f"cannot sweep {key!r}")

    def expand(self):
        """``[(label, config)]``: one entry per sweep value, or a single run."""
        if self.sweep is None:
            return [("run", self)]
        out = []
        for value in self.sweep.values:
            cfg = self.with_value(self.sweep.key, value)
            cfg.validate()
            out.append((f"{self.sweep.key}={value}", cfg))
        return out

    def to_dict(self):
        return {
            "preset": self.preset,
            "problem": self.problem,
            "algorithm": self.algorithm,
            "rule": dict(self.rule),
            "distortion": copy.deepcopy(self.distortion),
            "iterations": self.iterations,
            "seed": self.seed,
            "stride": self.stride,
            "tol": self.tol,
            "sweep": None if self.sweep is None else {"key": self.sweep.key,
                                                       "values": list(self.sweep.values)},
        }


def _as_mapping(value, name):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a mapping")
    return dict(value)


def _set_distortion(distortion, kind, key, value):
    if distortion is None:
        raise ConfigError(key, "this configuration has no distortion model to modify")
    if kind is not None and distortion.get("kind") != kind:
        raise ConfigError(key, f"only applies to the {kind} distortion, not {distortion.get('kind')!r}")
    distortion = dict(distortion)
    distortion[key] = value
    return distortion


def _check_int(value, name, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(name, f"must be an integer >= {minimum}")


def dumps(doc):
    """Canonical JSON used for hashing and summaries."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
