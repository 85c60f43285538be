"""Experiment spec files (YAML) with dotted-key overrides.

Schema::

    scenario:            # required
      M: 90              # antennas
      N_t: 1             # users
      L: [3]             # paths per user
      N_p: 16            # pilot length
      noise_var: 1.0     # complex noise variance (linear)
      N: 8               # redundant columns estimated, sum(L) < N <= N_p
      seed: 2024         # base RNG seed
      thetas_deg: [-40, 20, 20.005]
      alphas_re: [0.8084, 0.6884, 0.7344]
      alphas_im: [0.5887, 0.7254, -0.6787]
    trials: 50
    quantize: true             # false bypasses the one-bit quantizer
    random_channels: false     # true redraws DoAs/gains every trial
    gamp: {t_max: 100, damping: 0.9, tol: 1.0e-6, variance_floor: 1.0e-12, uniform_variance: true}
    doa: {rel_threshold: 0.05, grid_oversample: 16, refine_tol: 1.0e-8}
    matching: {miss_penalty_deg: 5.0}
    experiments:
      <name>:
        axis: snr_db | M
        values: [...]
        snr_db: 15       # fixed SNR for an M sweep
        M: 90            # fixed antenna count for an SNR sweep
        outputs: [file.csv, ...]
"""

import copy

import numpy as np
import yaml

from .channel_model import ChannelParams, SystemConfig
from .gamp import GampConfig
from .simulator import DoaSettings, ExperimentSpec

SCENARIO_KEYS = {"M", "N_t", "L", "N_p", "noise_var", "N", "seed", "thetas_deg", "alphas_re", "alphas_im"}
SECTION_KEYS = {
    "gamp": {"t_max", "damping", "tol", "variance_floor", "uniform_variance"},
    "doa": {"rel_threshold", "grid_oversample", "refine_tol"},
    "matching": {"miss_penalty_deg"},
}
TOP_KEYS = {"scenario", "trials", "quantize", "random_channels", "experiments"} | set(SECTION_KEYS)
EXPERIMENT_KEYS = {"axis", "values", "snr_db", "M", "outputs"}

_INT, _NUM, _BOOL, _NUMS = "integer", "number", "boolean", "list of numbers"
KEY_TYPES = {
    "trials": _INT, "quantize": _BOOL, "random_channels": _BOOL,
    "scenario.M": _INT, "scenario.N_t": _INT, "scenario.N_p": _INT, "scenario.N": _INT,
    "scenario.seed": _INT, "scenario.noise_var": _NUM, "scenario.L": _NUMS,
    "scenario.thetas_deg": _NUMS, "scenario.alphas_re": _NUMS, "scenario.alphas_im": _NUMS,
    "gamp.t_max": _INT, "gamp.damping": _NUM, "gamp.tol": _NUM, "gamp.variance_floor": _NUM,
    "gamp.uniform_variance": _BOOL, "doa.rel_threshold": _NUM, "doa.grid_oversample": _INT,
    "doa.refine_tol": _NUM, "matching.miss_penalty_deg": _NUM,
}


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _type_ok(v, kind):
    if kind == _INT:
        return isinstance(v, int) and not isinstance(v, bool)
    if kind == _NUM:
        return _is_num(v)
    if kind == _BOOL:
        return isinstance(v, bool)
    return _is_num(v) or (isinstance(v, list) and len(v) > 0 and all(_is_num(x) for x in v))


class SpecError(ValueError):
    """Malformed spec; carries the offending dotted key and its line (1-based) when known."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key:
            where.append(f"key '{key}'")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


def _key_lines(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[key] = k.start_mark.line + 1
            _key_lines(v, key, out)
    return out


def load_spec_text(text, overrides=()):
    """Parse YAML text, apply overrides and validate.

    Returns ``(raw, lines)``: the resolved plain mapping and a dotted-key to
    line-number index for error reporting.
    """
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(yaml.compose(text)) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SpecError(f"cannot parse spec: {getattr(exc, 'problem', exc)}",
                        line=mark.line + 1 if mark else None) from exc
    if not isinstance(raw, dict):
        raise SpecError("spec must be a mapping")
    raw = apply_overrides(raw, overrides)
    validate(raw, lines)
    return raw, lines


def load_spec_file(path, overrides=()):
    with open(path) as fh:
        text = fh.read()
    return load_spec_text(text, overrides)


def _known(dotted):
    parts = dotted.split(".")
    if parts[0] not in TOP_KEYS:
        return False
    if len(parts) == 1:
        return True
    if parts[0] == "scenario":
        return len(parts) == 2 and parts[1] in SCENARIO_KEYS
    if parts[0] in SECTION_KEYS:
        return len(parts) == 2 and parts[1] in SECTION_KEYS[parts[0]]
    if parts[0] == "experiments":
        return len(parts) == 2 or (len(parts) == 3 and parts[2] in EXPERIMENT_KEYS)
    return False


def apply_overrides(raw, overrides):
    """Apply ``key=value`` strings; values are parsed as YAML scalars/lists."""
    raw = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise SpecError(f"override '{item}' is not of the form key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        if not _known(key):
            raise SpecError("unknown override key", key=key)
        node = raw
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise SpecError("cannot override inside a non-mapping", key=key)
        node[parts[-1]] = yaml.safe_load(value)
    return raw


def validate(raw, lines):
    def fail(msg, key):
        raise SpecError(msg, key=key, line=lines.get(key))

    for k in raw:
        if k not in TOP_KEYS:
            fail("unknown key", k)
    if "scenario" not in raw or not isinstance(raw["scenario"], dict):
        fail("missing scenario section", "scenario")
    sc = raw["scenario"]
    for k in sc:
        if k not in SCENARIO_KEYS:
            fail("unknown key", f"scenario.{k}")
    for k in ("M", "N_t", "L", "N_p", "noise_var", "thetas_deg", "alphas_re", "alphas_im"):
        if k not in sc:
            fail("missing required key", f"scenario.{k}")
    for sec, keys in SECTION_KEYS.items():
        val = raw.get(sec, {}) or {}
        if not isinstance(val, dict):
            fail("section must be a mapping", sec)
        for k in val:
            if k not in keys:
                fail("unknown key", f"{sec}.{k}")
    for key, kind in KEY_TYPES.items():
        node = raw
        for part in key.split("."):
            node = node.get(part) if isinstance(node, dict) else None
        if node is not None and not _type_ok(node, kind):
            fail(f"expected {kind}, got {node!r}", key)
    exps = raw.get("experiments", {}) or {}
    if not isinstance(exps, dict):
        fail("experiments must be a mapping", "experiments")
    for name, e in exps.items():
        if not isinstance(e, dict):
            fail("experiment must be a mapping", f"experiments.{name}")
        for k in e:
            if k not in EXPERIMENT_KEYS:
                fail("unknown key", f"experiments.{name}.{k}")
        if e.get("axis") not in ("snr_db", "M"):
            fail("axis must be 'snr_db' or 'M'", f"experiments.{name}.axis")
        if not e.get("values"):
            fail("values must be a nonempty list", f"experiments.{name}.values")
    try:
        build_scenario(raw)
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        fail(f"invalid scenario: {exc}", "scenario")
    if int(raw.get("trials", 1)) < 1:
        fail("trials must be >= 1", "trials")


def build_scenario(raw):
    sc = raw["scenario"]
    re_ = np.asarray(sc["alphas_re"], dtype=float)
    im_ = np.asarray(sc["alphas_im"], dtype=float)
    if re_.shape != im_.shape:
        raise SpecError("alphas_re and alphas_im differ in length", key="scenario.alphas_im")
    cfg = SystemConfig(
        M=int(sc["M"]), N_t=int(sc["N_t"]), L=tuple(np.atleast_1d(sc["L"]).tolist()),
        N_p=int(sc["N_p"]), noise_var=float(sc["noise_var"]),
        seed=int(sc.get("seed", 0)), N=int(sc.get("N", 8)),
    )
    params = ChannelParams(np.asarray(sc["thetas_deg"], dtype=float), re_ + 1j * im_)
    if params.thetas.size != cfg.n_paths:
        raise SpecError(f"{params.thetas.size} DoAs listed but L sums to {cfg.n_paths}", key="scenario.thetas_deg")
    return cfg, params


def _common(raw):
    cfg, params = build_scenario(raw)
    gamp = GampConfig(**{k: (int(v) if k == "t_max" else v) for k, v in (raw.get("gamp") or {}).items()})
    doa = DoaSettings(**(raw.get("doa") or {}))
    return dict(
        cfg=cfg, params=params, trials=int(raw.get("trials", 1)), gamp=gamp, doa=doa,
        miss_penalty_deg=float((raw.get("matching") or {}).get("miss_penalty_deg", 5.0)),
        quantize=bool(raw.get("quantize", True)),
        random_channels=bool(raw.get("random_channels", False)),
    )


def scenario_spec(raw, trials=1):
    """Single-point spec that uses the scenario's own noise variance."""
    kw = _common(raw)
    kw["trials"] = trials
    return ExperimentSpec(**kw)


def experiment_specs(raw):
    """``{name: (ExperimentSpec, [output filenames])}`` in file order."""
    kw = _common(raw)
    out = {}
    for name, e in (raw.get("experiments") or {}).items():
        spec = ExperimentSpec(
            sweep_axis=e["axis"], sweep_values=tuple(e["values"]),
            fixed_snr_db=None if e.get("snr_db") is None else float(e["snr_db"]),
            fixed_M=None if e.get("M") is None else int(e["M"]),
            **kw,
        )
        outputs = e.get("outputs") or [f"{name}.csv"]
        out[name] = (spec, list(outputs))
    return out


def dump_spec(raw):
    return yaml.safe_dump(raw, sort_keys=False, default_flow_style=None)
