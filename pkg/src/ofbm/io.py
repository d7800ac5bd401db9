"""JSON model documents and the bundled fixture library."""
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import OfbmError, ParseError, ValidationError
from .model import (
    BrownianCaseParam,
    ExponentSpec,
    OfbmModel,
    SpectralParam,
    TimeParam,
)
from .quadrature import QuadratureConfig

PARAM_FIELDS = {
    "spectral": ("A1", "A2"),
    "time": ("M_plus", "M_minus"),
    "bm": ("M", "N"),
}
QUADRATURE_KEYS = {"inner", "outer", "panels_per_period", "tail_mode", "tol"}
FREQUENCY_KEYS = {"x_min", "x_max", "per_decade", "dx"}


@dataclass(eq=False)
class ModelDocument:
    model: OfbmModel
    quadrature: QuadratureConfig
    frequency: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    sha256: str = ""
    name: str = ""


def _matrix(value, n, path):
    if isinstance(value, dict):
        if set(value) - {"re", "im"} or "re" not in value:
            raise ValidationError("complex matrix needs 're' and optional 'im'", path)
        re = _matrix(value["re"], n, path + ".re")
        im = _matrix(value.get("im", [[0.0] * n] * n), n, path + ".im")
        return re + 1j * im
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("expected a numeric matrix", path) from None
    if M.shape != (n, n):
        raise ValidationError(f"expected shape ({n}, {n}), got {M.shape}", path)
    if not np.all(np.isfinite(M)):
        raise ValidationError("non-finite entry", path)
    return M


def _one_key(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", path)
    keys = [k for k in obj if k in allowed]
    extra = [k for k in obj if k not in allowed]
    if extra:
        raise ValidationError(f"unknown key(s) {extra}", path)
    if len(keys) != 1:
        raise ValidationError(f"exactly one of {sorted(allowed)} required", path)
    return keys[0]


def _exponent(obj, n):
    kind = _one_key(obj, {"matrix", "jordan"}, "exponent")
    if kind == "matrix":
        return ExponentSpec.from_matrix(_matrix(obj["matrix"], n, "exponent.matrix"))
    j = obj["jordan"]
    if not isinstance(j, dict) or "P" not in j or "blocks" not in j:
        raise ValidationError("needs 'P' and 'blocks'", "exponent.jordan")
    P = _matrix(j["P"], n, "exponent.jordan.P")
    blocks = []
    if not isinstance(j["blocks"], list) or not j["blocks"]:
        raise ValidationError("expected a non-empty list", "exponent.jordan.blocks")
    for k, b in enumerate(j["blocks"]):
        path = f"exponent.jordan.blocks[{k}]"
        if not isinstance(b, dict) or "re" not in b or "size" not in b:
            raise ValidationError("block needs 're' and 'size'", path)
        size = b["size"]
        if not isinstance(size, int) or isinstance(size, bool) or size < 1:
            raise ValidationError("size must be a positive integer", path + ".size")
        try:
            lam = complex(float(b["re"]), float(b.get("im", 0.0)))
        except (TypeError, ValueError):
            raise ValidationError("eigenvalue must be numeric", path) from None
        blocks.append((lam, size))
    if sum(s for _, s in blocks) != n:
        raise ValidationError(f"block sizes sum to {sum(s for _, s in blocks)}, expected {n}",
                              "exponent.jordan.blocks")
    try:
        return ExponentSpec.from_jordan(P, blocks)
    except ValidationError as exc:
        if exc.path:
            raise
        raise ValidationError(str(exc), "exponent.jordan") from None


def _param(obj, n):
    kind = _one_key(obj, set(PARAM_FIELDS), "parameterization")
    body = obj[kind]
    a, b = PARAM_FIELDS[kind]
    path = f"parameterization.{kind}"
    if not isinstance(body, dict) or set(body) != {a, b}:
        raise ValidationError(f"needs exactly the fields {a}, {b}", path)
    X = _matrix(body[a], n, f"{path}.{a}")
    Y = _matrix(body[b], n, f"{path}.{b}")
    return {"spectral": SpectralParam, "time": TimeParam, "bm": BrownianCaseParam}[kind](X, Y)


def parse_document(obj, name=""):
    """Validate a decoded JSON object and build the model it describes."""
    if not isinstance(obj, dict):
        raise ValidationError("document must be a JSON object")
    allowed = {"dimension", "exponent", "parameterization", "quadrature", "frequency", "description"}
    extra = set(obj) - allowed
    if extra:
        raise ValidationError(f"unknown key(s) {sorted(extra)}")
    for key in ("dimension", "exponent", "parameterization"):
        if key not in obj:
            raise ValidationError("missing", key)
    n = obj["dimension"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError("must be a positive integer", "dimension")
    exponent = _exponent(obj["exponent"], n)
    param = _param(obj["parameterization"], n)
    try:
        model = OfbmModel(exponent, param)
    except ValidationError:
        raise
    except OfbmError as exc:
        raise ValidationError(str(exc), "parameterization") from None
    quad = obj.get("quadrature", {})
    if not isinstance(quad, dict) or set(quad) - QUADRATURE_KEYS:
        raise ValidationError(f"allowed keys {sorted(QUADRATURE_KEYS)}", "quadrature")
    try:
        config = QuadratureConfig(**quad)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc), "quadrature") from None
    freq = obj.get("frequency", {})
    if not isinstance(freq, dict) or set(freq) - FREQUENCY_KEYS:
        raise ValidationError(f"allowed keys {sorted(FREQUENCY_KEYS)}", "frequency")
    return ModelDocument(model, config, dict(freq), obj, name=name)


def fixture_names():
    root = resources.files("ofbm") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_bytes(source):
    if source.startswith("fixture:"):
        name = source.split(":", 1)[1]
        if name not in fixture_names():
            raise ParseError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
        return (resources.files("ofbm") / "fixtures" / f"{name}.json").read_bytes(), name
    path = Path(source)
    try:
        return path.read_bytes(), path.stem
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from None


def load_document(source):
    """Load from a file path or 'fixture:NAME'."""
    data, name = _read_bytes(source)
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{source}: invalid JSON ({exc})") from None
    doc = parse_document(obj, name=name)
    doc.sha256 = hashlib.sha256(data).hexdigest()
    return doc


def load_fixture(name):
    return load_document(f"fixture:{name}").model


def _complex_or_real(M):
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.any(M.imag):
        return {"re": M.real.tolist(), "im": M.imag.tolist()}
    return np.real(M).tolist()


def exponent_to_json(exponent):
    S = exponent.decomposition
    if all(b.size == 1 for b in S.blocks) and all(abs(b.eigenvalue.imag) == 0 for b in S.blocks):
        return {"matrix": exponent.H.tolist()}
    return {
        "jordan": {
            "P": _complex_or_real(S.P),
            "blocks": [
                {"re": b.eigenvalue.real, "im": b.eigenvalue.imag, "size": b.size} for b in S.blocks
            ],
        }
    }


def model_to_document(model, parameterization="spectral"):
    """Document for the model in the requested parameterization."""
    if parameterization == "spectral":
        p = {"spectral": {"A1": model.spectral.A1.tolist(), "A2": model.spectral.A2.tolist()}}
    elif parameterization == "time":
        if model.time is None:
            raise ValidationError("no time-domain parameters for this exponent")
        p = {"time": {"M_plus": model.time.M_plus.tolist(), "M_minus": model.time.M_minus.tolist()}}
    elif parameterization == "bm":
        if model.brownian is None:
            raise ValidationError("Brownian-case parameters need H = I/2")
        p = {"bm": {"M": model.brownian.M.tolist(), "N": model.brownian.N.tolist()}}
    else:
        raise ValueError(parameterization)
    return {"dimension": model.n, "exponent": exponent_to_json(model.exponent), "parameterization": p}
