"""Weight file formats: a binary container and a JSON variant.

Binary layout: the magic line ``NNWB1``, a UTF-8 key=value manifest
(layers, width, dtype, lipschitz_loss, input_radius, payload_bytes), an
``end`` marker line, then the raw payload of little-endian float64 matrices,
layer-major and row-major. The manifest states the exact payload byte count
and loading checks it, so truncation and padding are both format errors.

The JSON variant targets hand inspection and stays below 10,000 parameters;
floats survive as repr strings, so a round trip is bit-exact in either
format and both yield identical spectral statistics.
"""

import json
import math

import numpy as np

from .errors import FormatError, InvalidInputError
from .nn_cert import NetworkWeights

__all__ = ["save_weights", "load_weights"]

_MAGIC = b"NNWB1"
_DTYPE_TAG = "f64le"
_JSON_FORMAT = "riskcert-weights"
_JSON_DIMENSION_LIMIT = 10_000
_MANIFEST_KEYS = (
    "layers",
    "width",
    "dtype",
    "lipschitz_loss",
    "input_radius",
    "payload_bytes",
)


def _payload(w):
    return b"".join(
        np.ascontiguousarray(layer, dtype="<f8").tobytes() for layer in w.layers
    )


def save_weights(w, path, fmt=None):
    """Write ``w`` to ``path``; fmt is "binary", "json", or None to infer
    from the suffix (".json" selects JSON)."""
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    path = str(path)
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "binary"
    if fmt == "binary":
        payload = _payload(w)
        manifest = (
            _MAGIC + b"\n"
            + f"layers={w.depth}\n".encode()
            + f"width={w.width}\n".encode()
            + f"dtype={_DTYPE_TAG}\n".encode()
            + f"lipschitz_loss={w.lipschitz_loss!r}\n".encode()
            + f"input_radius={w.input_radius!r}\n".encode()
            + f"payload_bytes={len(payload)}\n".encode()
            + b"end\n"
        )
        with open(path, "wb") as fh:
            fh.write(manifest + payload)
        return
    if fmt == "json":
        if w.dimension > _JSON_DIMENSION_LIMIT:
            raise InvalidInputError(
                f"JSON variant is limited to {_JSON_DIMENSION_LIMIT} "
                f"parameters, got {w.dimension}; use the binary format"
            )
        doc = {
            "format": _JSON_FORMAT,
            "version": 1,
            "layers": w.depth,
            "width": w.width,
            "lipschitz_loss": w.lipschitz_loss,
            "input_radius": w.input_radius,
            "matrices": [layer.tolist() for layer in w.layers],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
        return
    raise InvalidInputError(f"fmt must be 'binary', 'json', or None, got {fmt!r}")


def _parse_manifest(lines):
    fields = {}
    for line in lines:
        if b"=" not in line:
            raise FormatError(f"malformed manifest line {line!r}")
        key, _, value = line.partition(b"=")
        fields[key.decode("ascii", "replace")] = value.decode("ascii", "replace")
    for key in _MANIFEST_KEYS:
        if key not in fields:
            raise FormatError(f"manifest missing required field {key!r}")
    return fields


def _positive_int(fields, key):
    try:
        value = int(fields[key])
    except ValueError:
        raise FormatError(f"field {key!r} must be an integer, got {fields[key]!r}")
    if value < 1:
        raise FormatError(f"field {key!r} must be >= 1, got {value}")
    return value


def _finite_float(fields, key):
    try:
        value = float(fields[key])
    except ValueError:
        raise FormatError(f"field {key!r} must be a float, got {fields[key]!r}")
    if not math.isfinite(value):
        raise InvalidInputError(f"field {key!r} must be finite, got {value}")
    return value


def _load_binary(blob):
    header_end = blob.find(b"\nend\n")
    if header_end < 0:
        raise FormatError("missing manifest end marker")
    lines = blob[:header_end].split(b"\n")
    if lines[0] != _MAGIC:
        raise FormatError(
            f"bad magic: expected {_MAGIC.decode()!r}, got {lines[0][:16]!r}"
        )
    fields = _parse_manifest(lines[1:])
    depth = _positive_int(fields, "layers")
    width = _positive_int(fields, "width")
    if fields["dtype"] != _DTYPE_TAG:
        raise FormatError(
            f"field 'dtype' must be {_DTYPE_TAG!r}, got {fields['dtype']!r}"
        )
    declared = _positive_int(fields, "payload_bytes")
    expected = depth * width * width * 8
    if declared != expected:
        raise FormatError(
            f"field 'payload_bytes' is {declared} but layers={depth} "
            f"width={width} requires {expected}"
        )
    payload = blob[header_end + len(b"\nend\n") :]
    if len(payload) != expected:
        raise FormatError(
            f"payload truncated or padded: expected {expected} bytes, "
            f"got {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype="<f8")
    if not np.all(np.isfinite(flat)):
        raise InvalidInputError("payload contains non-finite weight entries")
    layers = tuple(
        flat[k * width * width : (k + 1) * width * width]
        .reshape(width, width)
        .copy()
        for k in range(depth)
    )
    return NetworkWeights(
        layers=layers,
        lipschitz_loss=_finite_float(fields, "lipschitz_loss"),
        input_radius=_finite_float(fields, "input_radius"),
    )


def _load_json(blob):
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    if doc.get("format") != _JSON_FORMAT:
        raise FormatError(
            f"field 'format' must be {_JSON_FORMAT!r}, got {doc.get('format')!r}"
        )
    for key in ("layers", "width", "matrices", "lipschitz_loss", "input_radius"):
        if key not in doc:
            raise FormatError(f"manifest missing required field {key!r}")
    depth, width = doc["layers"], doc["width"]
    if not isinstance(depth, int) or depth < 1:
        raise FormatError(f"field 'layers' must be a positive integer, got {depth!r}")
    if not isinstance(width, int) or width < 1:
        raise FormatError(f"field 'width' must be a positive integer, got {width!r}")
    matrices = doc["matrices"]
    if not isinstance(matrices, list) or len(matrices) != depth:
        raise FormatError(
            f"field 'matrices' must list {depth} layers, got "
            f"{len(matrices) if isinstance(matrices, list) else type(matrices).__name__}"
        )
    layers = []
    for idx, rows in enumerate(matrices):
        arr = np.asarray(rows, dtype=float)
        if arr.shape != (width, width):
            raise FormatError(
                f"matrix {idx} must be {width}x{width}, got shape "
                f"{'x'.join(map(str, arr.shape))}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"matrix {idx} has non-finite entries")
        layers.append(arr)
    lip, rad = doc["lipschitz_loss"], doc["input_radius"]
    for key, value in (("lipschitz_loss", lip), ("input_radius", rad)):
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise InvalidInputError(f"field {key!r} must be a finite number")
    return NetworkWeights(
        layers=tuple(layers), lipschitz_loss=float(lip), input_radius=float(rad)
    )


def load_weights(path):
    """Load a NetworkWeights file in either format, detected by content."""
    try:
        with open(str(path), "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read weight file: {exc}")
    if blob.startswith(_MAGIC):
        return _load_binary(blob)
    stripped = blob.lstrip()
    if stripped.startswith(b"{"):
        return _load_json(blob)
    raise FormatError(
        f"unrecognized weight file: expected magic {_MAGIC.decode()!r} or a "
        f"JSON object, got {blob[:16]!r}"
    )
