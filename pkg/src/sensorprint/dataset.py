"""JSON Lines dataset persistence.

One record per line, tagged by ``kind``. Floating point values are written
as ``repr`` strings so a store/load round trip is exact and the file is
byte-stable. Keys are sorted and separators fixed.

Record kinds: ``device``, ``audio_fingerprint``, ``six_fingerprint``,
``submission``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from sensorprint.accel import SixParamFingerprint
from sensorprint.audio import AudioFingerprint
from sensorprint.device import AccelCalibration, AudioResponseProfile, DeviceProfile, NoiseSpec
from sensorprint.entropy import Submission


class DatasetError(ValueError):
    """Malformed record; message names the line number and field."""


@dataclass(frozen=True)
class AudioRecord:
    device_id: str
    location: int
    run: int
    method: str  # "sweep" or "stealth"
    fingerprint: AudioFingerprint


@dataclass(frozen=True)
class SixParamRecord:
    device_id: str
    set_index: int
    fingerprint: SixParamFingerprint


@dataclass
class Dataset:
    devices: list[DeviceProfile] = field(default_factory=list)
    audio: list[AudioRecord] = field(default_factory=list)
    six_param: list[SixParamRecord] = field(default_factory=list)
    submissions: list[Submission] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.devices) + len(self.audio) + len(self.six_param) + len(self.submissions)

    def device_ids(self) -> set[str]:
        return {d.device_id for d in self.devices}

    def check_integrity(self) -> None:
        ids = self.device_ids()
        if len(ids) != len(self.devices):
            raise DatasetError("duplicate device_id")
        for rec in (*self.audio, *self.six_param):
            if rec.device_id not in ids:
                raise DatasetError(f"fingerprint references unknown device {rec.device_id!r}")


def _f(x: float) -> str:
    return repr(float(x))


def _device_record(d: DeviceProfile) -> dict:
    a, c, n = d.audio, d.accel, d.noise
    return {
        "kind": "device", "device_id": d.device_id, "cookie_id": d.cookie_id,
        "user_agent": d.user_agent,
        "accel": {k: _f(getattr(c, k)) for k in ("s_x", "s_y", "s_z", "o_x", "o_y", "o_z")},
        "audio": {"knot_freqs": [_f(v) for v in a.knot_freqs], "gain_db": [_f(v) for v in a.gain_db],
                  "h2": _f(a.h2), "h3": _f(a.h3), "tolerance_db": _f(a.tolerance_db)},
        "noise": {"audio_sigma": _f(n.audio_sigma), "accel_sigma": _f(n.accel_sigma),
                  "quantization_step": None if n.quantization_step is None else _f(n.quantization_step)},
    }


def _audio_record(r: AudioRecord) -> dict:
    values = [[_f(f), j, _f(v)] for (f, j), v in sorted(r.fingerprint.values.items())]
    return {"kind": "audio_fingerprint", "device_id": r.device_id, "location": r.location,
            "run": r.run, "method": r.method, "values": values}


def _six_record(r: SixParamRecord) -> dict:
    fp = r.fingerprint
    rec = {"kind": "six_fingerprint", "device_id": r.device_id, "set": r.set_index,
           "converged": fp.converged, "iterations": fp.iterations,
           "residual_norm": _f(fp.residual_norm)}
    rec.update({k: _f(getattr(fp, k)) for k in ("o_x", "o_y", "o_z", "s_x", "s_y", "s_z")})
    return rec


def _submission_record(s: Submission) -> dict:
    return {"kind": "submission", "cookie_id": s.cookie_id, "user_agent": s.user_agent,
            "o_z": _f(s.o_z), "s_z": _f(s.s_z), "timestamp": _f(s.timestamp),
            "group": s.group}


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def dataset_lines(ds: Dataset) -> list[str]:
    recs = ([_device_record(d) for d in ds.devices] + [_audio_record(r) for r in ds.audio]
            + [_six_record(r) for r in ds.six_param] + [_submission_record(s) for s in ds.submissions])
    return [dumps_record(r) for r in recs]


def store_dataset(ds: Dataset, path) -> None:
    ds.check_integrity()
    text = "".join(line + "\n" for line in dataset_lines(ds))
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# loading


class _Reader:
    def __init__(self, rec: dict, line: int):
        self.rec, self.line = rec, line

    def fail(self, name: str, msg: str):
        raise DatasetError(f"line {self.line}: field {name!r}: {msg}")

    def get(self, name: str, src: dict | None = None) -> Any:
        src = self.rec if src is None else src
        if name not in src:
            self.fail(name, "missing")
        return src[name]

    def num(self, name: str, src: dict | None = None) -> float:
        v = self.get(name, src)
        if isinstance(v, bool):
            self.fail(name, f"not a number: {v!r}")
        try:
            return float(v)
        except (TypeError, ValueError):
            self.fail(name, f"not a number: {v!r}")

    def int(self, name: str, src: dict | None = None) -> int:
        v = self.get(name, src)
        if not isinstance(v, int) or isinstance(v, bool):
            self.fail(name, f"not an integer: {v!r}")
        return v

    def str(self, name: str, src: dict | None = None) -> str:
        v = self.get(name, src)
        if not isinstance(v, str):
            self.fail(name, f"not a string: {v!r}")
        return v

    def obj(self, name: str) -> dict:
        v = self.get(name)
        if not isinstance(v, dict):
            self.fail(name, "not an object")
        return v

    def build(self, name: str, fn: Callable):
        try:
            return fn()
        except DatasetError:
            raise
        except (TypeError, ValueError) as exc:
            self.fail(name, str(exc))


def _load_device(r: _Reader) -> DeviceProfile:
    acc, aud, noi = r.obj("accel"), r.obj("audio"), r.obj("noise")
    accel = r.build("accel", lambda: AccelCalibration(
        **{k: r.num(k, acc) for k in ("s_x", "s_y", "s_z", "o_x", "o_y", "o_z")}))
    knots = r.get("knot_freqs", aud)
    gains = r.get("gain_db", aud)
    if not isinstance(knots, list) or not isinstance(gains, list):
        r.fail("audio", "knot_freqs and gain_db must be lists")
    audio = r.build("audio", lambda: AudioResponseProfile(
        tuple(float(v) for v in knots), tuple(float(v) for v in gains),
        r.num("h2", aud), r.num("h3", aud), r.num("tolerance_db", aud)))
    q = r.get("quantization_step", noi)
    noise = r.build("noise", lambda: NoiseSpec(r.num("audio_sigma", noi), r.num("accel_sigma", noi),
                                               None if q is None else float(q)))
    return DeviceProfile(r.str("device_id"), audio, accel, r.str("user_agent"), noise,
                         r.str("cookie_id"))


def _load_audio(r: _Reader) -> AudioRecord:
    raw = r.get("values")
    if not isinstance(raw, list):
        r.fail("values", "not a list")
    values = {}
    for item in raw:
        if not (isinstance(item, list) and len(item) == 3 and isinstance(item[1], int)):
            r.fail("values", f"bad entry {item!r}")
        try:
            values[(float(item[0]), item[1])] = float(item[2])
        except (TypeError, ValueError):
            r.fail("values", f"bad entry {item!r}")
    fp = r.build("values", lambda: AudioFingerprint(values))
    return AudioRecord(r.str("device_id"), r.int("location"), r.int("run"), r.str("method"), fp)


def _load_six(r: _Reader) -> SixParamRecord:
    converged = r.get("converged")
    if not isinstance(converged, bool):
        r.fail("converged", "not a boolean")
    fp = r.build("six_fingerprint", lambda: SixParamFingerprint(
        *(r.num(k) for k in ("o_x", "o_y", "o_z", "s_x", "s_y", "s_z")),
        residual_norm=r.num("residual_norm"), converged=converged,
        iterations=r.int("iterations")))
    return SixParamRecord(r.str("device_id"), r.int("set"), fp)


def _load_submission(r: _Reader) -> Submission:
    o, s, t = r.num("o_z"), r.num("s_z"), r.num("timestamp")
    return r.build("o_z", lambda: Submission(r.str("cookie_id"), r.str("user_agent"), o, s, t,
                                                r.int("group")))


_LOADERS = {"device": ("devices", _load_device), "audio_fingerprint": ("audio", _load_audio),
            "six_fingerprint": ("six_param", _load_six), "submission": ("submissions", _load_submission)}


def load_dataset(path) -> Dataset:
    ds = Dataset()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise DatasetError(f"line {lineno}: record is not an object")
            reader = _Reader(rec, lineno)
            kind = reader.str("kind")
            if kind not in _LOADERS:
                reader.fail("kind", f"unknown record kind {kind!r}")
            attr, loader = _LOADERS[kind]
            getattr(ds, attr).append(loader(reader))
    ds.check_integrity()
    return ds
