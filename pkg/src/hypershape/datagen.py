"""Procedural text-shape corpus: parameterized furniture built from box and
cylinder primitives, exact TSDFs, and caption templates at four detail
levels (category < +style < +leg count < full part detail).

All geometry parameters live in unit coordinates [0, 1]^3 and are scaled by
the grid resolution when voxelized.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, FormatError
from .shape_codec import TsdfGrid, default_tau, read_tsdf, write_tsdf
from .textgraph import CATEGORIES, LEG_SHAPES, STYLES

NUM_WORDS = {3: "three", 4: "four"}


@dataclass(frozen=True)
class ShapeSpec:
    category: str  # chair | table | stool
    style: str
    leg_count: int  # 3 or 4
    leg_shape: str  # round | square
    leg_length: float  # unit height of the legs
    leg_radius: float  # half-thickness
    seat_size: float  # half-width of the seat/top
    seat_thickness: float
    back_height: float  # chairs only, 0 otherwise
    has_armrests: bool  # chairs only

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ContractViolationError(f"unknown category {self.category!r}")
        if self.leg_count not in (3, 4):
            raise ContractViolationError("leg count must be 3 or 4")
        if self.leg_shape not in LEG_SHAPES:
            raise ContractViolationError(f"unknown leg shape {self.leg_shape!r}")
        if min(self.leg_length, self.leg_radius, self.seat_size, self.seat_thickness) <= 0:
            raise ContractViolationError("degenerate (zero-volume) shape spec")


@dataclass(frozen=True)
class CaptionSet:
    """Four captions of strictly increasing detail."""

    levels: tuple[str, str, str, str]


PARAM_RANGES = {
    "leg_length": (0.20, 0.40),
    "leg_radius": (0.025, 0.05),
    "seat_size": (0.22, 0.38),
    "seat_thickness": (0.04, 0.09),
    "back_height": (0.18, 0.38),
}


def sample_spec(seed: int) -> ShapeSpec:
    """Deterministic spec draw; parameters uniform over PARAM_RANGES."""
    rng = np.random.default_rng(seed)
    category = CATEGORIES[rng.integers(len(CATEGORIES))]
    style = STYLES[rng.integers(len(STYLES))]
    leg_count = int(rng.choice([3, 4]))
    leg_shape = LEG_SHAPES[rng.integers(len(LEG_SHAPES))]
    u = {k: float(rng.uniform(*v)) for k, v in PARAM_RANGES.items()}
    is_chair = category == "chair"
    return ShapeSpec(
        category=category,
        style=style,
        leg_count=leg_count,
        leg_shape=leg_shape,
        leg_length=u["leg_length"],
        leg_radius=u["leg_radius"],
        seat_size=u["seat_size"] if category != "table" else u["seat_size"] + 0.06,
        seat_thickness=u["seat_thickness"],
        back_height=u["back_height"] if is_chair else 0.0,
        has_armrests=bool(rng.uniform() < 0.5) if is_chair else False,
    )


# ---------------------------------------------------------------------------
# analytic signed distance fields (grid units)
# ---------------------------------------------------------------------------


def _sdf_box(px, py, pz, center, half):
    qx = np.abs(px - center[0]) - half[0]
    qy = np.abs(py - center[1]) - half[1]
    qz = np.abs(pz - center[2]) - half[2]
    ox, oy, oz = np.maximum(qx, 0), np.maximum(qy, 0), np.maximum(qz, 0)
    outside = np.sqrt(ox**2 + oy**2 + oz**2)
    inside = np.minimum(np.maximum(qx, np.maximum(qy, qz)), 0.0)
    return outside + inside


def _sdf_cylinder(px, py, pz, cx, cy, z0, z1, radius):
    d_xy = np.sqrt((px - cx) ** 2 + (py - cy) ** 2) - radius
    d_z = np.abs(pz - 0.5 * (z0 + z1)) - 0.5 * (z1 - z0)
    ox, oz = np.maximum(d_xy, 0), np.maximum(d_z, 0)
    return np.sqrt(ox**2 + oz**2) + np.minimum(np.maximum(d_xy, d_z), 0.0)


def _leg_positions(spec: ShapeSpec) -> list[tuple[float, float]]:
    inset = spec.seat_size - spec.leg_radius - 0.02
    if spec.leg_count == 4:
        return [(sx * inset, sy * inset) for sx in (-1, 1) for sy in (-1, 1)]
    # three legs: two at the front corners, one centered at the back
    return [(-inset, -inset), (inset, -inset), (0.0, inset)]


def _primitives(spec: ShapeSpec) -> list[tuple]:
    """List of ("box", center, half) / ("cyl", cx, cy, z0, z1, r) in units."""
    prims: list[tuple] = []
    seat_z0 = spec.leg_length
    seat_z1 = seat_z0 + spec.seat_thickness
    s = spec.seat_size
    for dx, dy in _leg_positions(spec):
        cx, cy = 0.5 + dx, 0.5 + dy
        if spec.leg_shape == "round":
            prims.append(("cyl", cx, cy, 0.0, seat_z0, spec.leg_radius))
        else:
            prims.append(
                (
                    "box",
                    (cx, cy, seat_z0 / 2),
                    (spec.leg_radius, spec.leg_radius, seat_z0 / 2),
                )
            )
    prims.append(
        (
            "box",
            (0.5, 0.5, (seat_z0 + seat_z1) / 2),
            (s, s, spec.seat_thickness / 2),
        )
    )
    if spec.back_height > 0:
        back_t = 0.03
        prims.append(
            (
                "box",
                (0.5, 0.5 + s - back_t, seat_z1 + spec.back_height / 2),
                (s, back_t, spec.back_height / 2),
            )
        )
    if spec.has_armrests:
        arm_h = 0.12
        arm_t = 0.03
        for side in (-1, 1):
            prims.append(
                (
                    "box",
                    (0.5 + side * (s - arm_t), 0.5, seat_z1 + arm_h / 2),
                    (arm_t, s * 0.8, arm_h / 2),
                )
            )
    return prims


def spec_to_tsdf(spec: ShapeSpec, resolution: int) -> TsdfGrid:
    """Exact signed distance to the union of primitives, truncated."""
    if resolution < 8:
        raise ContractViolationError("resolution must be >= 8")
    r = resolution
    coords = (np.arange(r) + 0.5) / r  # voxel centers in unit coordinates
    px, py, pz = np.meshgrid(coords, coords, coords, indexing="ij")
    sdf = np.full((r, r, r), np.inf)
    for prim in _primitives(spec):
        if prim[0] == "box":
            d = _sdf_box(px, py, pz, prim[1], prim[2])
        else:
            d = _sdf_cylinder(px, py, pz, *prim[1:])
        sdf = np.minimum(sdf, d)
    tau = default_tau(r)
    return TsdfGrid(np.clip(sdf * r, -tau, tau).astype(np.float32), tau)


# ---------------------------------------------------------------------------
# captions
# ---------------------------------------------------------------------------


def spec_to_captions(spec: ShapeSpec) -> CaptionSet:
    cat, style = spec.category, spec.style
    num = NUM_WORDS[spec.leg_count]
    l0 = f"a {cat}"
    l1 = f"a {style} {cat}"
    l2 = f"a {style} {cat} with {num} legs"
    detail = f"a {style} {cat} with {num} {spec.leg_shape} legs"
    if cat == "chair":
        back = "tall" if spec.back_height >= 0.28 else "low"
        detail += f" and a {back} backrest"
        if spec.has_armrests:
            detail += " and armrests"
    elif cat == "table":
        width = "wide" if spec.seat_size >= 0.36 else "narrow"
        detail += f" and a {width} top"
    else:
        thick = "thick" if spec.seat_thickness >= 0.065 else "thin"
        detail += f" and a {thick} seat"
    return CaptionSet((l0, l1, l2, detail))


# ---------------------------------------------------------------------------
# dataset serialization
# ---------------------------------------------------------------------------


def write_dataset(specs: list[ShapeSpec], resolution: int, out_dir):
    """Write manifest.jsonl plus one TSDF file per spec."""
    out_dir = Path(out_dir)
    (out_dir / "shapes").mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for i, spec in enumerate(specs):
            rel = f"shapes/{i:05d}.tsdf"
            write_tsdf(spec_to_tsdf(spec, resolution), out_dir / rel)
            record = {
                "id": i,
                "captions": list(spec_to_captions(spec).levels),
                "tsdf": rel,
                "spec": asdict(spec),
            }
            f.write(json.dumps(record) + "\n")


@dataclass(frozen=True)
class DatasetItem:
    id: int
    captions: CaptionSet
    tsdf: TsdfGrid
    spec: ShapeSpec


def read_dataset(directory) -> list[DatasetItem]:
    directory = Path(directory)
    manifest = directory / "manifest.jsonl"
    if not manifest.exists():
        raise FormatError(f"missing manifest: {manifest}")
    items = []
    with open(manifest, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                grid = read_tsdf(directory / rec["tsdf"])
            except FormatError as e:
                raise FormatError(f"shape id {rec['id']}: {e}") from e
            items.append(
                DatasetItem(
                    id=rec["id"],
                    captions=CaptionSet(tuple(rec["captions"])),
                    tsdf=grid,
                    spec=ShapeSpec(**rec["spec"]),
                )
            )
    return items


def generate_corpus(master_seed: int, count: int) -> list[ShapeSpec]:
    """Deterministic corpus: spec i is drawn from seed derived from (master, i)."""
    seeds = np.random.SeedSequence(master_seed).generate_state(count)
    return [sample_spec(int(s)) for s in seeds]
