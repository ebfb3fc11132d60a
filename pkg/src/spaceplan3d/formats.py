"""JSON/CSV file formats for instances, 2D module lists and layouts."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

from .geometry import Dims, Floorplan, Placement, ProblemInstance, module_label


class FormatError(ValueError):
    pass


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- instances ----------------------------------------------------------------


def instance_to_dict(inst: ProblemInstance, ground_truth: str | None = None, source: dict | None = None) -> dict:
    doc: dict[str, Any] = {}
    if inst.name:
        doc["name"] = inst.name
    doc["modules"] = [{"label": m.label, "w": m.dims.w, "h": m.dims.h, "d": m.dims.d} for m in inst.modules]
    if ground_truth is not None:
        doc["ground_truth"] = str(ground_truth)
    src = dict(inst.meta) if source is None else source
    if src:
        doc["source"] = src
    return doc


def instance_from_dict(doc: dict, name: str = "") -> ProblemInstance:
    try:
        mods = doc["modules"]
        rows = {}
        for m in mods:
            label = m["label"]
            if not (isinstance(label, str) and label.startswith("p") and label[1:].isdigit()) or label != module_label(int(label[1:])):
                raise FormatError(f"bad module label {label!r}")
            rows[int(label[1:])] = Dims(int(m["w"]), int(m["h"]), int(m["d"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed instance document: {e}") from e
    if sorted(rows) != list(range(len(mods))):
        raise FormatError("module labels must be exactly p0..p(n-1)")
    meta = dict(doc.get("source") or {})
    if "ground_truth" in doc:
        meta["ground_truth"] = doc["ground_truth"]
    return ProblemInstance.from_dims([rows[i] for i in range(len(rows))], name=doc.get("name", name), meta=meta)


def save_instance(path, inst: ProblemInstance, ground_truth=None, source=None) -> Path:
    path = Path(path)
    path.write_text(dump_json(instance_to_dict(inst, ground_truth, source)))
    return path


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: {e}") from e
    return instance_from_dict(doc, name=path.stem)


# -- 2D module lists ------------------------------------------------------------


def load_modules_2d(path) -> list[tuple[str, int, int]]:
    """Read ``label,w,h`` rows from CSV (header optional) or JSON."""
    path = Path(path)
    text = path.read_text()
    rows: list[tuple[str, int, int]] = []
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
            items = doc["modules"] if isinstance(doc, dict) else doc
            for m in items:
                if isinstance(m, dict):
                    rows.append((str(m["label"]), int(m["w"]), int(m["h"])))
                else:
                    label, w, h = m
                    rows.append((str(label), int(w), int(h)))
        else:
            for i, rec in enumerate(csv.reader(text.splitlines())):
                if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
                    continue
                if i == 0 and rec[1].strip().lower() in ("w", "width"):
                    continue
                label, w, h = (c.strip() for c in rec[:3])
                rows.append((label, int(w), int(h)))
    except (KeyError, ValueError, IndexError, TypeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: malformed 2D module list ({e})") from e
    return rows


# -- layouts -------------------------------------------------------------------


def layout_to_dict(plan: Floorplan, **extra) -> dict:
    doc = dict(extra)
    doc["bounding"] = {"w": plan.bounding.w, "h": plan.bounding.h, "d": plan.bounding.d}
    doc["placements"] = [
        {
            "label": module_label(p.module_id),
            "x": p.origin[0], "y": p.origin[1], "z": p.origin[2],
            "w": p.dims.w, "h": p.dims.h, "d": p.dims.d,
        }
        for p in plan.placements
    ]
    return doc


def layout_from_dict(doc: dict) -> Floorplan:
    try:
        placements = []
        for p in doc["placements"]:
            mid = int(str(p["label"])[1:]) if "label" in p else int(p["id"])
            placements.append(Placement(mid, (int(p["x"]), int(p["y"]), int(p["z"])),
                                        Dims(int(p["w"]), int(p["h"]), int(p["d"]))))
        if not placements:
            raise FormatError("layout has no placements")
        plan = Floorplan.from_placements(placements)
        if "bounding" in doc:
            b = doc["bounding"]
            bound = Dims(int(b["w"]), int(b["h"]), int(b["d"]))
            if any(c > m for p in placements for c, m in zip(p.corner, bound.as_tuple())):
                raise FormatError("placement exceeds the declared bounding box")
            plan = Floorplan(plan.placements, bound)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"malformed layout document: {e}") from e
    return plan


def load_layout(path) -> Floorplan:
    path = Path(path)
    try:
        return layout_from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: {e}") from e
