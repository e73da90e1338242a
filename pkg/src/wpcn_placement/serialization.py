"""JSON scenario/placement files and CSV reports.

Scenario schema::

    {
      "devices": [{"x": 1.0, "y": 2.0, "a1_w": 5e-05, "a2": 1.4e-06}, ...],
      "channel": {"p0_w": 1.0, "eta": 0.51, "gain_dl": 1.995, "freq_hz": 915e6,
                  "d_dl": 2.2, "d_ul": 2.5, "min_distance_m": 0.5},
      "region": {"lo": [0, 0], "hi": [24, 24]},
      "gamma_w": 0.0,
      "costs": {"c1": 0.7, "c2": 1.0, "c3": 1.4}
    }

Every field except the device coordinates has a default. Logarithmic units
are accepted through explicit suffixes (``p0_dbm``, ``a1_dbm``,
``gain_dl_db``) and converted on parse. Files are written with linear values
and ``repr`` floats, so ``parse_scenario(dump_scenario(s)) == s``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import json.decoder
import json.scanner
import math
from pathlib import Path

from .model import (
    ChannelParams,
    Costs,
    Device,
    InvalidParameterError,
    Metrics,
    Placement,
    Region,
    Scenario,
    db_to_linear,
    dbm_to_watts,
)


class ScenarioParseError(InvalidParameterError):
    """Malformed scenario file; carries the offending line and field path."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None, source: str = "<scenario>"):
        self.line, self.field, self.source = line, field, source
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {field}: {message}" if field else f"{where}: {message}")


def _decode(text: str):
    # the pure-Python scanner lets us record where every object starts
    offsets: dict[int, int] = {}
    decoder = json.JSONDecoder()

    def parse_object(s_and_end, *args):
        obj, end = json.decoder.JSONObject(s_and_end, *args)
        offsets[id(obj)] = s_and_end[1] - 1
        return obj, end

    decoder.parse_object = parse_object
    decoder.scan_once = json.scanner.py_make_scanner(decoder)
    return decoder.decode(text), offsets


class _Reader:
    def __init__(self, text: str, offsets: dict[int, int], source: str):
        self.text, self.offsets, self.source = text, offsets, source

    def line(self, obj, key=None) -> int | None:
        start = self.offsets.get(id(obj))
        if start is None:
            return None
        pos = start
        if key is not None:
            found = self.text.find(json.dumps(key), start)
            pos = start if found < 0 else found
        return self.text.count("\n", 0, pos) + 1

    def fail(self, msg, obj, path, key=None):
        return ScenarioParseError(msg, self.line(obj, key), path, self.source)

    def obj(self, parent, key, path, required=False) -> dict:
        if key not in parent:
            if required:
                raise self.fail("missing required field", parent, path)
            return {}
        val = parent[key]
        if not isinstance(val, dict):
            raise self.fail("expected an object", parent, path, key)
        return val

    def check_keys(self, obj, allowed, path):
        for key in obj:
            if key not in allowed:
                raise self.fail(f"unknown field {key!r}", obj, f"{path}.{key}" if path else key, key)

    def number(self, obj, key, path, default=None):
        if key not in obj:
            if default is None:
                raise self.fail("missing required field", obj, path)
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise self.fail("expected a finite number", obj, path, key)
        return float(val)

    def unit_number(self, obj, linear, log, convert, path, default):
        # accept exactly one of the linear field and its logarithmic twin
        if linear in obj and log in obj:
            raise self.fail(f"give either {linear!r} or {log!r}, not both", obj, f"{path}.{log}", log)
        if log in obj:
            return convert(self.number(obj, log, f"{path}.{log}"))
        return self.number(obj, linear, f"{path}.{linear}", default)

    def point(self, obj, key, path, default):
        if key not in obj:
            return default
        val = obj[key]
        ok = isinstance(val, list) and len(val) == 2
        ok = ok and all(not isinstance(v, bool) and isinstance(v, (int, float)) and math.isfinite(v) for v in val)
        if not ok:
            raise self.fail("expected [x, y] with finite numbers", obj, path, key)
        return (float(val[0]), float(val[1]))


_TOP = {"devices", "channel", "region", "gamma_w", "costs"}
_DEVICE = {"x", "y", "a1_w", "a1_dbm", "a2"}
_CHANNEL = {"p0_w", "p0_dbm", "eta", "gain_dl", "gain_dl_db", "freq_hz", "d_dl", "d_ul", "min_distance_m"}
_REGION = {"lo", "hi"}
_COSTS = {"c1", "c2", "c3"}


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse and validate a scenario document. Raises :class:`ScenarioParseError`."""
    try:
        doc, offsets = _decode(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, None, source) from None
    r = _Reader(text, offsets, source)
    if not isinstance(doc, dict):
        raise ScenarioParseError("top level must be an object", 1, None, source)
    r.check_keys(doc, _TOP, "")

    dflt_dev, dflt_ch, dflt_costs = Device(0.0, 0.0), ChannelParams(), Costs()
    raw_devices = doc.get("devices")
    if not isinstance(raw_devices, list) or not raw_devices:
        raise r.fail("expected a non-empty list of devices", doc, "devices", "devices" if "devices" in doc else None)
    devices = []
    for i, d in enumerate(raw_devices):
        path = f"devices[{i}]"
        if not isinstance(d, dict):
            raise r.fail("expected an object", doc, path, "devices")
        r.check_keys(d, _DEVICE, path)
        x = r.number(d, "x", f"{path}.x")
        y = r.number(d, "y", f"{path}.y")
        a1 = r.unit_number(d, "a1_w", "a1_dbm", dbm_to_watts, path, dflt_dev.circuit_power)
        a2 = r.number(d, "a2", f"{path}.a2", dflt_dev.tx_coeff)
        try:
            devices.append(Device(x, y, a1, a2))
        except InvalidParameterError as exc:
            raise r.fail(str(exc), d, path) from None

    ch = r.obj(doc, "channel", "channel")
    r.check_keys(ch, _CHANNEL, "channel")
    try:
        channel = ChannelParams(
            p0=r.unit_number(ch, "p0_w", "p0_dbm", dbm_to_watts, "channel", dflt_ch.p0),
            eta=r.number(ch, "eta", "channel.eta", dflt_ch.eta),
            antenna_gain_dl=r.unit_number(ch, "gain_dl", "gain_dl_db", db_to_linear, "channel", dflt_ch.antenna_gain_dl),
            carrier_freq_dl=r.number(ch, "freq_hz", "channel.freq_hz", dflt_ch.carrier_freq_dl),
            dl_exponent=r.number(ch, "d_dl", "channel.d_dl", dflt_ch.dl_exponent),
            ul_exponent=r.number(ch, "d_ul", "channel.d_ul", dflt_ch.ul_exponent),
            min_distance=r.number(ch, "min_distance_m", "channel.min_distance_m", dflt_ch.min_distance),
        )
    except ScenarioParseError:
        raise
    except InvalidParameterError as exc:
        raise r.fail(str(exc), doc, "channel", "channel") from None

    reg = r.obj(doc, "region", "region")
    r.check_keys(reg, _REGION, "region")
    square = Region.square(24.0)
    try:
        region = Region(r.point(reg, "lo", "region.lo", square.lo), r.point(reg, "hi", "region.hi", square.hi))
    except ScenarioParseError:
        raise
    except InvalidParameterError as exc:
        raise r.fail(str(exc), doc, "region", "region") from None

    co = r.obj(doc, "costs", "costs")
    r.check_keys(co, _COSTS, "costs")
    costs = Costs(*(r.number(co, c, f"costs.{c}", getattr(dflt_costs, c)) for c in ("c1", "c2", "c3")))
    gamma = r.number(doc, "gamma_w", "gamma_w", 0.0)
    for i, (d, dev) in enumerate(zip(raw_devices, devices)):
        if not region.contains(dev.location, tol=1e-9)[0]:
            raise r.fail("device lies outside the region", d, f"devices[{i}]")
    try:
        return Scenario(tuple(devices), channel, region, gamma, costs)
    except InvalidParameterError as exc:
        raise ScenarioParseError(str(exc), None, "devices", source) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read file: {exc.strerror}", None, None, str(path)) from None
    return parse_scenario(text, str(path))


def scenario_to_dict(scenario: Scenario) -> dict:
    ch = scenario.channel
    return {
        "devices": [{"x": d.x, "y": d.y, "a1_w": d.circuit_power, "a2": d.tx_coeff} for d in scenario.devices],
        "channel": {
            "p0_w": ch.p0,
            "eta": ch.eta,
            "gain_dl": ch.antenna_gain_dl,
            "freq_hz": ch.carrier_freq_dl,
            "d_dl": ch.dl_exponent,
            "d_ul": ch.ul_exponent,
            "min_distance_m": ch.min_distance,
        },
        "region": {"lo": list(scenario.region.lo), "hi": list(scenario.region.hi)},
        "gamma_w": scenario.gamma,
        "costs": {"c1": scenario.costs.c1, "c2": scenario.costs.c2, "c3": scenario.costs.c3},
    }


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


def scenario_digest(scenario: Scenario) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(dump_scenario(scenario).encode()).hexdigest()


def placement_to_dict(placement: Placement) -> dict:
    return {
        "mode": "hap" if placement.hap else "separated",
        "en_locations_m": placement.en_locations.tolist(),
        "ap_locations_m": placement.ap_locations.tolist(),
        "associations": placement.associations.tolist(),
    }


def placement_from_dict(doc: dict, scenario: Scenario) -> Placement:
    """Rebuild a placement; associations are re-derived from the coordinates."""
    try:
        if doc["mode"] == "hap":
            return Placement.build_hap(doc["en_locations_m"], scenario)
        return Placement.build(doc["en_locations_m"], doc["ap_locations_m"], scenario)
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed placement: {exc}") from None


METRICS_HEADER = [
    "device", "x_m", "y_m", "lambda_W", "mu_W", "omega_W", "ap_index", "p_r_W", "t_star_W", "cost_units",
]


def metrics_csv(scenario: Scenario, metrics: Metrics, t_star: float, cost: float | None) -> str:
    """One row per device plus a ``summary`` row; floats are written with ``repr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for k, (x, y) in enumerate(scenario.positions):
        w.writerow([
            k, repr(float(x)), repr(float(y)), repr(float(metrics.lam[k])), repr(float(metrics.mu[k])),
            repr(float(metrics.omega[k])), int(metrics.associations[k]), "", "", "",
        ])
    w.writerow(["summary", "", "", "", "", "", "", repr(float(metrics.p_r)), repr(float(t_star)),
                "" if cost is None else repr(float(cost))])
    return buf.getvalue()


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter", "phase", "z_W"])
    for it, phase, z in history:
        w.writerow([int(it), phase, repr(float(z))])
    return buf.getvalue()

