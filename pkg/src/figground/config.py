"""Pipeline configuration from a key = value manifest file.

Example manifest::

    # inputs
    footprints = data/footprints.geojson
    landuse = data/landuse.geojson
    income_csv = data/income.csv
    zip_boundaries = data/zips.geojson
    residential_codes = R1, R2, R3
    out_dir = out

    # sampling
    n_points = 1000
    min_dist_m = 80
    seed = 7

Synthetic recipes use dotted keys: `synth.<class>.<field>` with fields
shapes, size_range, spacing_m, jitter_m, orientation, aspect_range,
angle_jitter_deg; class order (and therefore category index) follows
`synth_classes`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .forest import ForestParams
from .synth import ClassRecipe, SyntheticSpec


def parse_manifest(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"manifest line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(p.strip()) for p in s.split(",") if p.strip())


def _strings(s: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in s.split(",") if p.strip())


@dataclass
class PipelineConfig:
    out_dir: Path = Path("out")
    # geographic inputs (optional; synthetic runs need none of them)
    footprints: Path | None = None
    landuse: Path | None = None
    income_csv: Path | None = None
    zip_boundaries: Path | None = None
    residential_codes: tuple[str, ...] = ()
    landuse_code_property: str = "code"
    zip_property: str = "zip"
    # sampling
    n_points: int = 1000
    min_dist_m: float = 80.0
    seed: int = 0
    rejection_budget_factor: int = 30
    # tiles
    tile_size_m: float = 200.0
    resolution_px: int = 224
    subsamples: int = 4
    tile_format: str = "pgm"
    # balancing / splits
    balance_cap: int = 6250  # 50000 / 8
    split_ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    # forest
    n_trees: int = 200
    features_per_split: int = 7
    max_depth: int | None = None
    min_samples_leaf: int = 1
    # synthetic data
    synth_tiles_per_class: int = 200
    synth_recipes: list[ClassRecipe] = field(default_factory=list)

    @property
    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.n_trees,
            features_per_split=self.features_per_split,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            seed=self.seed,
        )

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(recipes=list(self.synth_recipes))

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        kv = parse_manifest(path.read_text(encoding="utf-8"))
        base = path.parent

        def p(key: str) -> Path | None:
            return (base / kv[key]).resolve() if key in kv else None

        cfg = cls()
        cfg.out_dir = (base / kv["out_dir"]).resolve() if "out_dir" in kv else (base / "out").resolve()
        cfg.footprints = p("footprints")
        cfg.landuse = p("landuse")
        cfg.income_csv = p("income_csv")
        cfg.zip_boundaries = p("zip_boundaries")
        if "residential_codes" in kv:
            cfg.residential_codes = _strings(kv["residential_codes"])
        cfg.landuse_code_property = kv.get("landuse_code_property", cfg.landuse_code_property)
        cfg.zip_property = kv.get("zip_property", cfg.zip_property)

        try:
            cfg.n_points = int(kv.get("n_points", cfg.n_points))
            cfg.min_dist_m = float(kv.get("min_dist_m", cfg.min_dist_m))
            cfg.seed = int(kv.get("seed", cfg.seed))
            cfg.rejection_budget_factor = int(kv.get("rejection_budget_factor", cfg.rejection_budget_factor))
            cfg.tile_size_m = float(kv.get("tile_size_m", cfg.tile_size_m))
            cfg.resolution_px = int(kv.get("resolution_px", cfg.resolution_px))
            cfg.subsamples = int(kv.get("subsamples", cfg.subsamples))
            cfg.tile_format = kv.get("tile_format", cfg.tile_format)
            cfg.balance_cap = int(kv.get("balance_cap", cfg.balance_cap))
            if "split_ratios" in kv:
                ratios = _floats(kv["split_ratios"])
                if len(ratios) != 3:
                    raise ConfigError("split_ratios needs three values")
                cfg.split_ratios = (ratios[0], ratios[1], ratios[2])
            cfg.n_trees = int(kv.get("n_trees", cfg.n_trees))
            cfg.features_per_split = int(kv.get("features_per_split", cfg.features_per_split))
            raw_depth = kv.get("max_depth", "none" if cfg.max_depth is None else str(cfg.max_depth))
            cfg.max_depth = None if raw_depth.lower() in ("none", "") else int(raw_depth)
            cfg.min_samples_leaf = int(kv.get("min_samples_leaf", cfg.min_samples_leaf))
            cfg.synth_tiles_per_class = int(kv.get("synth_tiles_per_class", cfg.synth_tiles_per_class))
        except ValueError as e:
            raise ConfigError(f"bad numeric value in config: {e}") from e

        cfg.synth_recipes = _parse_recipes(kv)
        return cfg

    def validate(self) -> None:
        """Fail fast: every referenced path must exist, ratios must sum to 1."""
        for name in ("footprints", "landuse", "income_csv", "zip_boundaries"):
            value: Path | None = getattr(self, name)
            if value is not None and not value.exists():
                raise ConfigError(f"{name} path does not exist: {value}")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split_ratios must sum to 1, got {self.split_ratios}")
        if self.tile_format not in ("pgm", "png"):
            raise ConfigError(f"tile_format must be pgm or png, got {self.tile_format!r}")
        if self.resolution_px % 8 != 0:
            raise ConfigError("resolution_px must be divisible by 8 (window census)")
        if self.synth_recipes:
            self.synthetic_spec().validate()

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) in (None, ())]
        if missing:
            raise ConfigError(f"config keys required for this stage: {', '.join(missing)}")


def _parse_recipes(kv: dict[str, str]) -> list[ClassRecipe]:
    names = _strings(kv["synth_classes"]) if "synth_classes" in kv else ()
    if not names:
        # infer from dotted keys, preserving first-seen order
        seen: list[str] = []
        for key in kv:
            if key.startswith("synth.") and key.count(".") == 2:
                name = key.split(".")[1]
                if name not in seen:
                    seen.append(name)
        names = tuple(seen)
    recipes = []
    for name in names:
        prefix = f"synth.{name}."
        fields = {k[len(prefix):]: v for k, v in kv.items() if k.startswith(prefix)}
        recipe = ClassRecipe(name=name)
        if "shapes" in fields:
            recipe.shapes = _strings(fields["shapes"])
        if "size_range" in fields:
            lo, hi = _floats(fields["size_range"])
            recipe.size_range = (lo, hi)
        if "spacing_m" in fields:
            recipe.spacing_m = float(fields["spacing_m"])
        if "jitter_m" in fields:
            recipe.jitter_m = float(fields["jitter_m"])
        if "orientation" in fields:
            recipe.orientation = fields["orientation"]
        if "aspect_range" in fields:
            lo, hi = _floats(fields["aspect_range"])
            recipe.aspect_range = (lo, hi)
        if "angle_jitter_deg" in fields:
            recipe.angle_jitter_deg = float(fields["angle_jitter_deg"])
        recipes.append(recipe)
    return recipes
