"""Dissolve ZCTA boundary polygons into one feature per community."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Union

from shapely import unary_union
from shapely.geometry import mapping, shape

from .errors import BadBoundaryFile
from .partition import Partition

log = logging.getLogger(__name__)

# Census TIGER files name the code differently per vintage.
ZCTA_PROPERTIES = ("ZCTA5CE20", "ZCTA5CE10", "GEOID20", "GEOID10", "ZCTA5", "zcta")
GRID_SIZE = 1e-9


def detect_zcta_property(features: list) -> str:
    for feat in features:
        props = feat.get("properties") or {}
        for key in ZCTA_PROPERTIES:
            if key in props:
                return key
    raise BadBoundaryFile(f"no ZCTA property found (looked for {', '.join(ZCTA_PROPERTIES)})")


def load_boundaries(path: Union[str, Path], zcta_property: Optional[str] = None) -> dict:
    """ZCTA code -> shapely geometry. Repeated codes are unioned."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise BadBoundaryFile(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise BadBoundaryFile(f"{path} is not a GeoJSON FeatureCollection")
    features = doc.get("features") or []
    key = zcta_property or detect_zcta_property(features)
    parts: dict[str, list] = {}
    for i, feat in enumerate(features):
        props = feat.get("properties") or {}
        if key not in props or feat.get("geometry") is None:
            log.warning("feature %d has no %s or no geometry; skipped", i, key)
            continue
        try:
            geom = shape(feat["geometry"])
        except Exception as exc:  # shapely raises several types for bad input
            raise BadBoundaryFile(f"feature {i}: invalid geometry ({exc})") from exc
        parts.setdefault(str(props[key]).strip(), []).append(geom)
    return {z: g[0] if len(g) == 1 else unary_union(g, grid_size=GRID_SIZE) for z, g in parts.items()}


def dissolve(p: Partition, boundaries: dict) -> tuple[dict, list[str]]:
    """FeatureCollection of dissolved communities and the ZCTAs lacking a boundary."""
    missing = [z for z in p.nodes if z not in boundaries]
    if len(missing) == len(p.nodes):
        raise BadBoundaryFile("none of the partition's ZCTAs has a boundary")
    if missing:
        log.warning("%d ZCTA(s) without boundary omitted: %s", len(missing), ", ".join(missing[:10]))
    features = []
    for cid, members in enumerate(p.communities()):
        present = [z for z in members if z in boundaries]
        if not present:
            continue
        geom = unary_union([boundaries[z] for z in present], grid_size=GRID_SIZE)
        props = {"community_id": cid, "n_zctas": len(present), "zctas": present}
        if p.names is not None:
            props["name"] = p.names[cid]
        features.append({"type": "Feature", "properties": props, "geometry": mapping(geom)})
    return {"type": "FeatureCollection", "features": features}, missing


def export_geojson(p: Partition, boundary_path, out_path, zcta_property: Optional[str] = None) -> list[str]:
    collection, missing = dissolve(p, load_boundaries(boundary_path, zcta_property))
    Path(out_path).write_text(json.dumps(collection) + "\n", encoding="utf-8")
    return missing
