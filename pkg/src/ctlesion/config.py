"""Flat ``key = value`` configuration files.

Syntax: one assignment per line, ``#`` starts a comment, blank lines are
ignored.  Precedence (lowest first): built-in defaults, config file,
command-line ``--set key=value`` overrides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .entropy_threshold import FireflyParams
from .errors import ConfigError
from .mrf_em import MrfConfig
from .phantom import BodyRing, Ellipse, Lesion, PhantomSpec
from .preprocess import StripConfig


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def _to_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _to_float(value: str) -> float:
    v = float(value)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


# key -> (section attribute, field name, converter); section None = top-level field
_KEYS: dict[str, tuple[str | None, str, type]] = {
    "strip.min_lung_area_frac": ("strip", "min_lung_area_frac", _to_float),
    "strip.hole_fill_area": ("strip", "hole_fill_area", _to_float),
    "strip.min_separability": ("strip", "min_separability", _to_float),
    "fa.population": ("fa", "population", int),
    "fa.iterations": ("fa", "iterations", int),
    "fa.beta0": ("fa", "beta0", _to_float),
    "fa.gamma": ("fa", "gamma", _to_float),
    "fa.alpha0": ("fa", "alpha0", _to_float),
    "fa.alpha_decay": ("fa", "alpha_decay", _to_float),
    "fa.seed": ("fa", "seed", int),
    "fa.polish_starts": ("fa", "polish_starts", int),
    "threshold.k": (None, "threshold_k", int),
    "threshold.scope": (None, "histogram_scope", str),
    "mrf.beta": ("mrf", "beta", _to_float),
    "mrf.em_iterations": ("mrf", "em_iterations", int),
    "mrf.icm_sweeps": ("mrf", "icm_sweeps_per_em", int),
    "mrf.rel_tolerance": ("mrf", "rel_tolerance", _to_float),
    "mrf.variance_floor": ("mrf", "variance_floor", _to_float),
    "mrf.scope": (None, "mrf_scope", str),
    "post.min_component_area": (None, "min_component_area", int),
    "post.smooth": (None, "smooth", _to_bool),
    "metrics.scope": (None, "metrics_scope", str),
    "report.timing": (None, "timing", _to_bool),
}


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline.

    ``fa.seed`` is the global seed; each image derives its own optimiser
    seed from it and the image id.  ``report.timing = false`` writes null
    elapsed times so that reports are byte-reproducible.

    ``mrf.scope = image`` labels the whole stripped slice, so the zeroed
    background forms one of the three classes and the lung roi holds the
    other two; ``roi`` fits all three classes inside the lung.
    """

    strip: StripConfig = field(default_factory=StripConfig)
    fa: FireflyParams = field(default_factory=FireflyParams)
    threshold_k: int = 2
    histogram_scope: str = "roi"
    mrf: MrfConfig = field(default_factory=MrfConfig)
    mrf_scope: str = "image"
    min_component_area: int = 16
    smooth: bool = True
    metrics_scope: str = "image"
    timing: bool = True

    def __post_init__(self):
        if self.threshold_k != 2:
            raise ConfigError("threshold.k must be 2: MRF-EM uses exactly three labels")
        if self.histogram_scope not in ("roi", "image"):
            raise ConfigError("threshold.scope must be 'roi' or 'image'")
        if self.mrf_scope not in ("image", "roi"):
            raise ConfigError("mrf.scope must be 'image' or 'roi'")
        if self.metrics_scope not in ("image", "roi"):
            raise ConfigError("metrics.scope must be 'image' or 'roi'")
        if self.min_component_area < 0:
            raise ConfigError("post.min_component_area must be >= 0")

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "PipelineConfig":
        """Build from flat keys; ``phantom.*`` keys are accepted and ignored here."""
        top: dict = {}
        sections: dict[str, dict] = {"strip": {}, "fa": {}, "mrf": {}}
        for key, raw in mapping.items():
            if key.startswith("phantom."):
                continue
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            section, name, conv = _KEYS[key]
            try:
                value = conv(raw) if isinstance(raw, str) else conv(_fmt(raw))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
            (sections[section] if section else top)[name] = value
        try:
            return cls(
                strip=StripConfig(**sections["strip"]),
                fa=FireflyParams(**sections["fa"]),
                mrf=MrfConfig(**sections["mrf"]),
                **top,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path=None, overrides: dict[str, str] | None = None) -> "PipelineConfig":
        mapping = {}
        if path is not None:
            mapping.update(parse_kv_text(Path(path).read_text(encoding="utf-8")))
        mapping.update(overrides or {})
        return cls.from_mapping(mapping)

    def to_mapping(self) -> dict[str, str]:
        out = {}
        for key, (section, name, _) in _KEYS.items():
            obj = getattr(self, section) if section else self
            out[key] = _fmt(getattr(obj, name))
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, fa=replace(self.fa, seed=seed))


def _floats(raw: str, n: int, key: str) -> list[float]:
    parts = raw.replace(",", " ").split()
    if len(parts) != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {raw!r}")
    try:
        return [_to_float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def phantom_spec_from_mapping(mapping: dict[str, str]) -> PhantomSpec:
    """Read ``phantom.*`` keys; other keys are ignored.

    Scalars: ``phantom.width``, ``phantom.height``, ``phantom.seed``,
    ``phantom.tissue.intensity``, ``phantom.tissue.sigma``,
    ``phantom.lung.intensity``, ``phantom.lung.sigma``,
    ``phantom.ring.{cx,cy,inner_radius,outer_radius,intensity,sigma}``.
    Shapes: ``phantom.lung.left`` / ``phantom.lung.right`` = ``cx cy rx ry``;
    ``phantom.lesion.<name>`` = ``cx cy radius intensity sigma`` (any number,
    ordered by name).  ``phantom.lesions = none`` clears the default lesions.
    """
    spec = PhantomSpec()
    ring = {}
    kw: dict = {}
    lungs = list(spec.lung_fields)
    lesions: dict[str, Lesion] = {}
    clear_lesions = False
    ring_names = {f.name for f in fields(BodyRing)}
    scalar = {
        "phantom.width": ("width", int),
        "phantom.height": ("height", int),
        "phantom.seed": ("seed", int),
        "phantom.tissue.intensity": ("tissue_intensity", _to_float),
        "phantom.tissue.sigma": ("tissue_sigma", _to_float),
        "phantom.lung.intensity": ("lung_intensity", _to_float),
        "phantom.lung.sigma": ("lung_sigma", _to_float),
    }
    try:
        for key, raw in mapping.items():
            if not key.startswith("phantom."):
                continue
            if key in scalar:
                name, conv = scalar[key]
                kw[name] = conv(raw)
            elif key.startswith("phantom.ring.") and key[len("phantom.ring."):] in ring_names:
                ring[key[len("phantom.ring."):]] = _to_float(raw)
            elif key in ("phantom.lung.left", "phantom.lung.right"):
                lungs[0 if key.endswith("left") else 1] = Ellipse(*_floats(raw, 4, key))
            elif key.startswith("phantom.lesion."):
                lesions[key[len("phantom.lesion."):]] = Lesion(*_floats(raw, 5, key))
            elif key == "phantom.lesions" and raw.strip().lower() == "none":
                clear_lesions = True
            else:
                raise ConfigError(f"unknown phantom key {key!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if lesions:
        kw["lesions"] = tuple(lesions[k] for k in sorted(lesions))
    elif clear_lesions:
        kw["lesions"] = ()
    return replace(spec, body_ring=replace(spec.body_ring, **ring), lung_fields=tuple(lungs), **kw)
