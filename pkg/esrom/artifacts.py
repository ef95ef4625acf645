"""
Binary artifact files.

Every artifact shares one envelope:

    8-byte magic
    u64 n_components, u64 points_per_component, u64 n_columns, u64 dim
    f64 dx
    primary payload: n_columns columns of n_components * points f64, each
        column holding every point of component 0, then component 1, ...
    u64 byte length + UTF-8 JSON metadata
    only when the manifest is nonempty: u64 byte length + extra arrays
        (concatenated, column-major)

The metadata carries the config echo, fingerprints and a manifest
(name, dtype, shape, offset) locating each extra array, so every array
round-trips bit-exactly.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ArtifactError, FingerprintError
from .models import CubatureRule, EntropyBalance, ReducedBasis, SnapshotSet, StepRecord, Trajectory
from .rom import BoundaryBlock, RomOperators, ViscousBlock

logger = logging.getLogger(__name__)

MAGIC_SNAPSHOTS = b"ESNAPV1\0"
MAGIC_BASIS = b"EBASISV1"
MAGIC_RULE = b"ECUBAV1\0"
MAGIC_BUNDLE = b"EROMBV1\0"
MAGIC_TRAJECTORY = b"ETRAJV1\0"

KINDS = {
    MAGIC_SNAPSHOTS: "snapshots",
    MAGIC_BASIS: "basis",
    MAGIC_RULE: "rule",
    MAGIC_BUNDLE: "bundle",
    MAGIC_TRAJECTORY: "trajectory",
}

_HEADER = struct.Struct("<8sQQQQd")
_LENGTH = struct.Struct("<Q")
_DTYPES = {"f8": "<f8", "u8": "<u8", "i8": "<i8"}


class Envelope:
    """Decoded artifact: header fields, primary payload, extras and metadata"""

    def __init__(self, magic: bytes, shape: Tuple[int, int, int], dim: int, dx: float,
                 primary: np.ndarray, extras: Dict[str, np.ndarray], meta: dict):
        self.magic = magic
        self.shape = shape
        self.dim = dim
        self.dx = dx
        self.primary = primary
        self.extras = extras
        self.meta = meta

    @property
    def kind(self) -> str:
        return KINDS[self.magic]

    @property
    def fingerprint(self) -> str:
        return self.meta.get("fingerprint", "")


def _dtype_tag(a: np.ndarray) -> str:
    if a.dtype.kind == "f":
        return "f8"
    if a.dtype.kind == "u":
        return "u8"
    if a.dtype.kind in "ib":
        return "i8"
    raise ArtifactError(f"cannot store array of dtype {a.dtype}")


def write_envelope(path, magic: bytes, primary: np.ndarray, dim: int, dx: float,
                   extras: Optional[Dict[str, np.ndarray]] = None, meta: Optional[dict] = None):
    """Write one artifact; ``primary`` is (n_components, points, n_columns)"""
    primary = np.asarray(primary, dtype=np.float64)
    if primary.ndim != 3:
        raise ArtifactError(f"primary payload must be 3D, got shape {primary.shape}")
    meta = dict(meta or {})

    blobs, manifest, offset = [], [], 0
    for name, array in (extras or {}).items():
        array = np.asarray(array)
        tag = _dtype_tag(array)
        raw = np.asarray(array, dtype=_DTYPES[tag]).tobytes(order="F")
        manifest.append({"name": name, "dtype": tag, "shape": list(array.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    meta["manifest"] = manifest

    c, p, n = primary.shape
    # column j holds component 0 at every point, then component 1, ...
    columns = np.ascontiguousarray(np.transpose(primary, (2, 0, 1)), dtype="<f8")
    text = json.dumps(meta, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(_HEADER.pack(magic, c, p, n, dim, float(dx)))
            f.write(columns.tobytes())
            f.write(_LENGTH.pack(len(text)))
            f.write(text)
            if blobs:
                f.write(_LENGTH.pack(offset))
                for raw in blobs:
                    f.write(raw)
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e
    logger.debug("wrote %s (%s, %d extra arrays)", path, KINDS.get(magic, "?"), len(manifest))


def read_envelope(path, expected: Optional[bytes] = None) -> Envelope:
    """Read and validate an artifact file

    Raises:
        ArtifactError: missing file, wrong or unknown magic, truncation, bad JSON
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e

    if len(data) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, c, p, n, dim, dx = _HEADER.unpack_from(data, 0)
    if magic not in KINDS:
        raise ArtifactError(f"{path}: unknown magic {magic!r}")
    if expected is not None and magic != expected:
        raise ArtifactError(
            f"{path}: expected a {KINDS[expected]} file, found {KINDS[magic]}"
        )

    pos = _HEADER.size
    n_primary = c * p * n * 8

    def take(size: int) -> bytes:
        nonlocal pos
        if pos + size > len(data):
            raise ArtifactError(f"{path}: truncated payload")
        chunk = data[pos:pos + size]
        pos += size
        return chunk

    columns = np.frombuffer(take(n_primary), dtype="<f8").reshape((n, c, p))
    primary = np.ascontiguousarray(np.transpose(columns, (1, 2, 0)), dtype=np.float64)
    (meta_len,) = _LENGTH.unpack(take(_LENGTH.size))
    try:
        meta = json.loads(take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArtifactError(f"{path}: unreadable metadata: {e}") from e

    manifest = meta.get("manifest", [])
    extra_bytes = b""
    if manifest:
        (extra_len,) = _LENGTH.unpack(take(_LENGTH.size))
        extra_bytes = take(extra_len)
    if pos != len(data):
        raise ArtifactError(f"{path}: {len(data) - pos} trailing bytes")

    extras = {}
    for entry in manifest:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        stop = start + count * dtype.itemsize
        if stop > len(extra_bytes):
            raise ArtifactError(f"{path}: array '{entry['name']}' runs past the payload")
        arr = np.frombuffer(extra_bytes[start:stop], dtype=dtype).reshape(shape, order="F")
        extras[entry["name"]] = arr.astype(dtype.newbyteorder("="), copy=True)
    return Envelope(magic, (c, p, n), dim, dx, primary, extras, meta)


def check_parent(parents, expected: str, what: str):
    """Raise FingerprintError unless ``expected`` is among ``parents``"""
    if expected and expected not in parents:
        raise FingerprintError(
            f"{what} was not built from the given input (fingerprint {expected[:12]} "
            f"not among {[p[:12] for p in parents]})"
        )


# -- snapshots -----------------------------------------------------------------

def write_snapshots(path, snaps: SnapshotSet):
    primary = np.transpose(snaps.states, (1, 0, 2))
    meta = {
        "kind": "snapshots",
        "times": [float(t) for t in snaps.times],
        "config": snaps.config,
        "fingerprint": snaps.fingerprint,
        "steps": snaps.steps,
    }
    write_envelope(path, MAGIC_SNAPSHOTS, primary, snaps.dim, snaps.dx, meta=meta)


def read_snapshots(path) -> SnapshotSet:
    env = read_envelope(path, MAGIC_SNAPSHOTS)
    return SnapshotSet(
        states=np.ascontiguousarray(np.transpose(env.primary, (1, 0, 2))),
        times=np.asarray(env.meta["times"], dtype=np.float64),
        dim=env.dim,
        dx=env.dx,
        config=env.meta.get("config", {}),
        fingerprint=env.fingerprint,
        steps=env.meta.get("steps", 0),
    )


# -- basis ---------------------------------------------------------------------

def write_basis(path, basis: ReducedBasis, dim: int, dx: float, config: Optional[dict] = None):
    meta = {
        "kind": "basis",
        "tol": basis.tol,
        "n_pod_modes": basis.n_pod_modes,
        "enriched": basis.enriched,
        "constant_added": basis.constant_added,
        "fingerprint": basis.fingerprint,
        "parents": basis.parents,
        "config": config or {},
    }
    write_envelope(path, MAGIC_BASIS, basis.v_matrix[None, :, :], dim, dx,
                   extras={"singular_values": basis.singular_values}, meta=meta)


def read_basis(path) -> Tuple[ReducedBasis, Envelope]:
    env = read_envelope(path, MAGIC_BASIS)
    meta = env.meta
    basis = ReducedBasis(
        v_matrix=np.ascontiguousarray(env.primary[0]),
        singular_values=env.extras["singular_values"],
        tol=meta["tol"],
        n_pod_modes=meta["n_pod_modes"],
        enriched=meta["enriched"],
        constant_added=meta["constant_added"],
        fingerprint=env.fingerprint,
        parents=meta.get("parents", []),
    )
    return basis, env


# -- cubature rules ------------------------------------------------------------

def write_rule(path, rule: CubatureRule, dim: int, dx: float, config: Optional[dict] = None):
    meta = {
        "kind": "rule",
        "rule_kind": rule.kind,
        "residual": rule.residual,
        "history": list(rule.history),
        "n_stabilizing": rule.n_stabilizing,
        "condition": {str(k): v for k, v in rule.condition.items()},
        "fingerprint": rule.fingerprint,
        "parents": rule.parents,
        "config": config or {},
    }
    extras = {"indices": rule.indices.astype(np.uint64)}
    write_envelope(path, MAGIC_RULE, rule.weights[None, :, None], dim, dx, extras=extras, meta=meta)


def read_rule(path) -> CubatureRule:
    env = read_envelope(path, MAGIC_RULE)
    meta = env.meta
    return CubatureRule(
        indices=env.extras["indices"].astype(np.int64),
        weights=env.primary[0, :, 0],
        kind=meta["rule_kind"],
        residual=meta["residual"],
        history=meta.get("history", []),
        n_stabilizing=meta.get("n_stabilizing", 0),
        condition={int(k): v for k, v in meta.get("condition", {}).items()},
        fingerprint=env.fingerprint,
        parents=meta.get("parents", []),
    )


# -- ROM bundle ----------------------------------------------------------------

def write_bundle(path, rom_ops: RomOperators, fingerprint: str = "", parents=None,
                 config: Optional[dict] = None):
    extras = {
        "volume_indices": rom_ops.volume_indices,
        "volume_weights": rom_ops.volume_weights,
        "mass": rom_ops.mass,
        "projection": rom_ops.projection,
    }
    for axis in range(rom_ops.dim):
        extras[f"test_basis_{axis}"] = rom_ops.test_bases[axis]
        extras[f"p_t_{axis}"] = rom_ops.p_t[axis]
        extras[f"qhat_t_{axis}"] = rom_ops.qhat_t[axis]
        extras[f"q_t_{axis}"] = rom_ops.q_t[axis]
    bb = rom_ops.boundary
    if bb is not None:
        extras.update({
            "boundary_entries": bb.entries,
            "boundary_points": bb.points,
            "boundary_normals": bb.normals,
            "boundary_weights": bb.weights,
        })
        for axis in range(rom_ops.dim):
            extras[f"boundary_e_{axis}"] = bb.e[axis]
            extras[f"boundary_b_{axis}"] = bb.b[axis]
            extras[f"q_h_{axis}"] = bb.q_h[axis]
    vb = rom_ops.viscous
    if vb is not None:
        extras.update({
            "viscous_rows": vb.rows,
            "viscous_weights": vb.weights,
            "viscous_stencil": vb.stencil,
            "viscous_d_sub": vb.d_sub,
        })
    if rom_ops.vtkv is not None:
        extras["vtkv"] = rom_ops.vtkv

    meta = {
        "kind": "bundle",
        "h": rom_ops.h,
        "epsilon": rom_ops.epsilon,
        "periodic": rom_ops.periodic,
        "n_stabilizing": rom_ops.n_stabilizing,
        "conditions": {str(k): v for k, v in rom_ops.conditions.items()},
        "fingerprint": fingerprint,
        "parents": list(parents or []),
        "config": config or {},
    }
    write_envelope(path, MAGIC_BUNDLE, rom_ops.v_matrix[None, :, :], rom_ops.dim, rom_ops.dx,
                   extras=extras, meta=meta)


def read_bundle(path) -> Tuple[RomOperators, Envelope]:
    env = read_envelope(path, MAGIC_BUNDLE)
    x, meta, dim = env.extras, env.meta, env.dim
    v = np.ascontiguousarray(env.primary[0])
    idx = x["volume_indices"].astype(np.int64)

    boundary = None
    if "boundary_points" in x:
        points = x["boundary_points"].astype(np.int64)
        boundary = BoundaryBlock(
            entries=x["boundary_entries"].astype(np.int64),
            points=points,
            normals=x["boundary_normals"],
            weights=x["boundary_weights"],
            v_rows=v[points],
            e=[x[f"boundary_e_{a}"] for a in range(dim)],
            b=[x[f"boundary_b_{a}"] for a in range(dim)],
            q_h=[x[f"q_h_{a}"] for a in range(dim)],
        )
    viscous = None
    if "viscous_rows" in x:
        stencil = x["viscous_stencil"].astype(np.int64)
        viscous = ViscousBlock(
            rows=x["viscous_rows"].astype(np.int64),
            weights=x["viscous_weights"],
            stencil=stencil,
            d_sub=x["viscous_d_sub"],
            v_rows=v[stencil],
        )

    rom_ops = RomOperators(
        dim=dim,
        dx=env.dx,
        h=meta["h"],
        epsilon=meta["epsilon"],
        periodic=meta["periodic"],
        v_matrix=v,
        volume_indices=idx,
        volume_weights=x["volume_weights"],
        v_volume=v[idx],
        test_bases=[x[f"test_basis_{a}"] for a in range(dim)],
        p_t=[x[f"p_t_{a}"] for a in range(dim)],
        qhat_t=[x[f"qhat_t_{a}"] for a in range(dim)],
        q_t=[x[f"q_t_{a}"] for a in range(dim)],
        mass=x["mass"],
        projection=x["projection"],
        boundary=boundary,
        viscous=viscous,
        vtkv=x.get("vtkv"),
        n_stabilizing=meta.get("n_stabilizing", 0),
        conditions={int(k): val for k, val in meta.get("conditions", {}).items()},
    )
    return rom_ops, env


# -- trajectories --------------------------------------------------------------

def _record_to_dict(r: StepRecord) -> dict:
    return {
        "step": r.step,
        "time": r.time,
        "dt": r.dt,
        "total_entropy": r.total_entropy,
        "convective": r.balance.convective,
        "boundary": r.balance.boundary,
        "viscous": r.balance.viscous,
        "scale": r.balance.scale,
        "conserved": [float(c) for c in r.conserved],
    }


def _record_from_dict(d: dict) -> StepRecord:
    return StepRecord(
        step=d["step"],
        time=d["time"],
        dt=d["dt"],
        total_entropy=d["total_entropy"],
        balance=EntropyBalance(d["convective"], d["boundary"], d["viscous"], d["scale"]),
        conserved=np.asarray(d["conserved"]),
    )


def write_trajectory(path, traj: Trajectory, dim: int, dx: float):
    """coefficients (N, C, T) are stored as C x N x T"""
    meta = {
        "kind": "trajectory",
        "records": [_record_to_dict(r) for r in traj.records],
        "fingerprint": traj.fingerprint,
        "parents": traj.parents,
        "config": traj.config,
    }
    primary = np.transpose(traj.coefficients, (1, 0, 2))
    write_envelope(path, MAGIC_TRAJECTORY, primary, dim, dx, extras={"times": traj.times}, meta=meta)


def read_trajectory(path) -> Tuple[Trajectory, Envelope]:
    env = read_envelope(path, MAGIC_TRAJECTORY)
    traj = Trajectory(
        times=env.extras["times"],
        coefficients=np.ascontiguousarray(np.transpose(env.primary, (1, 0, 2))),
        records=[_record_from_dict(d) for d in env.meta.get("records", [])],
        fingerprint=env.fingerprint,
        parents=env.meta.get("parents", []),
        config=env.meta.get("config", {}),
    )
    return traj, env
